"""
Pydantic schemas for exact integer tables.
"""

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field


class LcmTable(BaseModel):
    """d_N = lcm(1..N) with its prime-power factorization."""

    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=1, description="Upper end of the range 1..N")
    value: int = Field(description="lcm(1, ..., N)")
    prime_powers: List[Tuple[int, int]] = Field(
        default_factory=list,
        description="(p, e) with p^e the largest power of p not exceeding N",
    )

    @property
    def bit_length(self) -> int:
        return self.value.bit_length()

"""
Pydantic schemas for the integer weights of the accelerated base-q series.
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Slack for the |χ| bound comparison, done in log2 space
BOUND_TOLERANCE_LOG2 = 1e-9


def chi_bound_log2(q: int, k: int) -> float:
    """log2 of (q-1)·(q/(2 sin(π/q)))^(k+1)."""
    if q == 2:
        return 0.0
    base = q / (2 * math.sin(math.pi / q))
    return math.log2(q - 1) + (k + 1) * math.log2(base)


class ChiWeight(BaseModel):
    """Certified integer value of χ_q(k)."""

    model_config = ConfigDict(frozen=True)

    q: int = Field(ge=2, description="Base")
    k: int = Field(ge=0, description="Index of the weight")
    value: int = Field(description="Exact integer value of χ_q(k)")
    work_bits: int = Field(ge=1, description="Precision at which the value was certified")

    @model_validator(mode="after")
    def check_bound(self) -> "ChiWeight":
        if self.value and math.log2(abs(self.value)) > chi_bound_log2(
            self.q, self.k
        ) + BOUND_TOLERANCE_LOG2 * (self.k + 1):
            raise ValueError(f"|χ_{self.q}({self.k})| exceeds its a-priori bound")
        return self

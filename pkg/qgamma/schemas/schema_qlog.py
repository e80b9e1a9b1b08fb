"""
Pydantic schemas for q-logarithm evaluation.
"""

from fractions import Fraction

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qgamma.schemas.schema_numerics import PrecisionPlan


class QLogRequest(BaseModel):
    """Evaluate ln_q(1+z) at the precision of `plan`."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    q: Fraction = Field(description="Base; an integer >= 2 except for the q -> 1 limit check")
    z: Fraction = Field(description="Argument, |z| < q")
    plan: PrecisionPlan
    allow_rational_q: bool = Field(
        False, description="Accept non-integer q > 1 (series route only)"
    )

    @field_validator("q", "z", mode="before")
    @classmethod
    def to_fraction(cls, v):
        if isinstance(v, (int, str)):
            return Fraction(v)
        return v

    @model_validator(mode="after")
    def check_base(self) -> "QLogRequest":
        if self.allow_rational_q:
            if self.q <= 1:
                raise ValueError(f"q must exceed 1, got {self.q}")
        elif self.q.denominator != 1 or self.q < 2:
            raise ValueError(f"q must be an integer >= 2, got {self.q}")
        return self

    @property
    def int_q(self) -> int:
        if self.q.denominator != 1:
            raise ValueError(f"q={self.q} is not an integer")
        return self.q.numerator

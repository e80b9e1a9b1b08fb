"""
Pydantic schemas for γ evaluation plans and results.
"""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class GammaMethod(str, Enum):
    BASE2_M4 = "base2_m4"
    BASE2_M2 = "base2_m2"
    BASE2_M1 = "base2_m1"
    BASE2_LOG = "base2_log"
    BASE3 = "base3"
    BASEQ = "baseq"


def predicted_error_log10(method: GammaMethod, n: int, q: int = 2) -> float:
    """log10 of the method's asymptotic error term."""
    if method is GammaMethod.BASE2_M4:
        return -6 * 2**n * math.log10(2)
    if method is GammaMethod.BASE2_M2:
        return 2**n * math.log10(2 / 27)
    if method is GammaMethod.BASE2_M1:
        return 2 ** (n - 1) * math.log10(128 / 3125)
    if method is GammaMethod.BASE2_LOG:
        return -n * math.log10(2)
    if method is GammaMethod.BASE3:
        return 3**n * math.log10(3**2.5 / 64)
    m = (q**n - 1) // (q - 1)
    return math.log10(q) - m * math.log10(2 * math.e * q)


class GammaPlan(BaseModel):
    """Asymptotic formula and parameters chosen for a digit target."""

    model_config = ConfigDict(frozen=True)

    method: GammaMethod
    q: int = Field(2, ge=2, description="Base of the q-logarithms")
    n: int = Field(ge=0)
    m: int = Field(ge=1, description="Damping exponent for n")
    digits: int = Field(ge=1, description="Requested decimal digits")
    predicted_error_log10: float
    work_bits: int = Field(ge=1)

    @model_validator(mode="after")
    def check_prediction(self) -> "GammaPlan":
        expected = predicted_error_log10(self.method, self.n, self.q)
        if abs(expected - self.predicted_error_log10) > 1e-9 * max(1.0, abs(expected)):
            raise ValueError("predicted error does not match the method's error term")
        return self


class GammaEstimate(BaseModel):
    """γ as printed by the CLI."""

    method: str
    q: Optional[int] = None
    n: Optional[int] = None
    m: Optional[int] = None
    digits: int
    value: str = Field(description="γ rounded to `digits` decimals")
    predicted_error_log10: Optional[float] = None
    measured_error_log10: Optional[float] = None
    terms: Optional[int] = None
    work_bits: int

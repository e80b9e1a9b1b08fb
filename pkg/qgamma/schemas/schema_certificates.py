"""
Pydantic schemas for fractional-part irrationality certificates.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field


class ThresholdKind(str, Enum):
    """Wire names are part of the certificate JSON and the --kind flag."""

    POWER_OF_TWO = "eq25"
    SIMPLIFIED_5POWER = "simplified_5power"
    GENERAL = "eq26"
    GENERAL_EPS = "eq26_eps"
    BASE3 = "base3_thm8"


class IrrationalityCertificate(BaseModel):
    """
    Outcome of one fractional-part test. Field order is the JSON key order.
    """

    base: int = Field(description="2 or 3")
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    d_bitlen: int = Field(description="Bit length of d_{b^n}")
    frac: str = Field(description="{d·L} to the certified digits")
    threshold: str = Field(description="Threshold in d.ddde-k form")
    kind: ThresholdKind
    passed: bool
    excluded: str = Field(description="Integer none of whose divisors can be γ's denominator")
    denominator_lower_bound: Optional[int] = None
    work_bits: int
    d: int = Field(exclude=True, description="d_{b^n}")
    epsilon: Optional[str] = Field(None, exclude=True)


class CriterionReport(BaseModel):
    """Comparison of {d·L} with d·I, and the reassembled fractional part."""

    base: int
    n: int
    m: int
    frac: str = Field(description="{d·L}")
    d_times_I: str = Field(description="d·I from the residual oracle")
    equal: bool = Field(description="{d·L} = d·I to the certified digits")
    d_times_I_in_unit_interval: bool = Field(description="0 < d·I < 1")
    reassembled_frac: str = Field(description="{d·I - d·c·γ + d·A}")
    reassembly_error: str = Field(description="|{d·L} - reassembled| as d.ddde-k")
    work_bits: int

"""
Pydantic schemas for γ-series estimates.
"""

from enum import Enum

from mpmath import mpf
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qgamma.core.numerics import HPReal


class SeriesMethod(str, Enum):
    VACCA = "vacca"
    DOUBLE = "double"
    GOSPER = "gosper"
    BASEQ_VACCA = "baseq_vacca"
    BASEQ_ACCEL = "baseq_accel"
    GAMMA_JQ = "gamma_jq"


class SeriesEstimate(BaseModel):
    """Partial sum of a series together with its truncation bound."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: HPReal = Field(description="Estimate; err includes tail_bound")
    terms_used: int = Field(ge=0, description="Number of summed terms")
    tail_bound: HPReal = Field(description="Upper bound on the truncated remainder")
    method: SeriesMethod

    @model_validator(mode="after")
    def check_tail(self) -> "SeriesEstimate":
        if self.tail_bound.value < 0:
            raise ValueError("tail bound must be non-negative")
        if self.value.err < self.tail_bound.value * (1 - mpf(2) ** -20):
            raise ValueError("value error does not include the tail bound")
        return self

"""
Pydantic schemas for bound checks, decay rates and verify suites.
"""

from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator


class RateFamily(str, Enum):
    BASE2 = "base2"
    BASE2_GENERAL = "base2_general"
    BASE3 = "base3"
    BASEQ = "baseq"


class BoundCheck(BaseModel):
    """One numeric inequality lower < value < upper (either side optional)."""

    check: str = Field(description="Name of the inequality")
    params: Dict[str, Any] = Field(default_factory=dict)
    lower: Optional[str] = Field(None, description="Lower bound, decimal")
    value: str = Field(description="Checked quantity, decimal")
    upper: Optional[str] = Field(None, description="Upper bound, decimal")
    passed: bool


class RateReport(BaseModel):
    """log I / scale along a grid of n, against the limiting constant."""

    family: RateFamily
    params: Dict[str, Any] = Field(default_factory=dict)
    n_grid: List[int] = Field(min_length=2)
    empirical: List[float]
    theoretical: float
    converging: bool = Field(description="Last grid point closer to the limit than the first")
    per_power: List[float] = Field(
        default_factory=list, description="log I'/q^n per grid point (base q only)"
    )
    power_limit: Optional[float] = Field(
        None, description="Limit of log I'/q^n, log f_q(x_q)/(q-1) (base q only)"
    )
    above_minus_one: Optional[bool] = Field(
        None, description="power_limit > -1 (base q >= 3 only)"
    )

    @model_validator(mode="after")
    def check_converging(self) -> "RateReport":
        if len(self.empirical) != len(self.n_grid):
            raise ValueError("one empirical value per grid point")
        first = abs(self.empirical[0] - self.theoretical)
        last = abs(self.empirical[-1] - self.theoretical)
        if self.converging != (last < first):
            raise ValueError("converging flag disagrees with the empirical values")
        if self.above_minus_one is not None and (
            self.power_limit is None or self.above_minus_one != (self.power_limit > -1)
        ):
            raise ValueError("above_minus_one disagrees with the limit of log I'/q^n")
        return self


class SuiteResult(BaseModel):
    """Result of one verify suite."""

    suite: str = Field(description="identities, bounds, chi or rates")
    success: bool = Field(description="Whether every check passed")
    checks: List[BoundCheck] = Field(default_factory=list)
    rates: List[RateReport] = Field(default_factory=list)
    error_type: Optional[str] = Field(None, description="Type of error if the suite aborted")
    error_message: Optional[str] = None
    verification_time: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    @property
    def failures(self) -> List[BoundCheck]:
        return [c for c in self.checks if not c.passed]

    class Config:
        json_schema_extra = {
            "example": {
                "suite": "bounds",
                "success": True,
                "checks": [
                    {
                        "check": "r0",
                        "params": {"bits": 128},
                        "lower": "5.6213305349",
                        "value": "5.62133053491944",
                        "upper": "5.6213305350",
                        "passed": True,
                    }
                ],
                "rates": [],
                "error_type": None,
                "error_message": None,
                "verification_time": "2026-01-01T00:00:00Z",
            }
        }

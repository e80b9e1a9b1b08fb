"""
Pydantic schemas for linear-form decompositions I = c·γ + L - A.
"""

from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from qgamma.core.numerics import HPReal


class FormRoute(str, Enum):
    BASE2 = "base2"
    BASE3 = "base3"
    BASEQ = "baseq"


class SNuM(BaseModel):
    """S_{ν,m} = Σ_{t≥0} (-1)^t R_m(2^ν + t)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    nu: int = Field(ge=1)
    m: int = Field(ge=0)
    value: HPReal


class LinearFormDecomposition(BaseModel):
    """One decomposition I = gamma_coeff·γ + L - A for a (route, q, n, m)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    route: FormRoute
    q: int = Field(ge=2, description="Base of the q-logarithms")
    n: int = Field(ge=0)
    m: int = Field(ge=0, description="Damping exponent")
    k: Optional[int] = Field(None, description="Base-3 index, m = 6k")
    gamma_coeff: int = Field(description="2^m, (-27)^k or q^m")
    L: HPReal = Field(description="Logarithmic part")
    A: Union[Fraction, HPReal] = Field(description="Rational part, exact when small")
    I: Optional[HPReal] = Field(None, description="Residual from the reference γ")
    coeff_table: List[int] = Field(
        default_factory=list, description="Coefficient l of T_l = Σ_{ν>n} 1/(q^ν + l)"
    )
    a_integral: Optional[bool] = Field(
        None, description="d_{q^n}·A ∈ ℤ, checked only for exact A"
    )
    l_clearing_N: int = Field(description="N such that d_N clears every L coefficient")
    l_coeffs_integral: bool
    work_bits: int = Field(ge=1)

    @property
    def a_is_exact(self) -> bool:
        return isinstance(self.A, Fraction)


class DecompositionRecord(BaseModel):
    """JSON rendering of a LinearFormDecomposition."""

    route: FormRoute
    q: int
    n: int
    m: int
    k: Optional[int] = None
    gamma_coeff: str
    L: Dict[str, str]
    A: Dict[str, str]
    I: Optional[Dict[str, str]] = None
    a_exact: bool
    a_integral: Optional[bool] = None
    l_clearing_N: int
    coeff_table: List[str]
    work_bits: int

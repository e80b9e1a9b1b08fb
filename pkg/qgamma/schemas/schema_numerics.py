"""
Pydantic schemas for precision planning.
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qgamma.config import settings

LOG2_10 = math.log2(10)


def digits_to_bits(digits: int) -> int:
    """Bits needed to resolve `digits` decimal places."""
    return math.ceil(digits * LOG2_10)


def guard_bits_for(term_count_hint: int) -> int:
    return settings.MIN_GUARD_BITS + math.ceil(math.log2(max(term_count_hint, 2)))


class PrecisionPlan(BaseModel):
    """Working precision for one computation."""

    model_config = ConfigDict(frozen=True)

    target_digits: int = Field(ge=1, description="Decimal digits the caller wants certified")
    work_bits: int = Field(ge=1, description="Absolute precision in bits after the binary point")
    guard_bits: int = Field(ge=0, description="Bits reserved for accumulated rounding")
    term_count_hint: int = Field(2, ge=1, description="Expected number of summed terms")

    @model_validator(mode="after")
    def check_budget(self) -> "PrecisionPlan":
        if self.guard_bits < guard_bits_for(self.term_count_hint):
            raise ValueError(
                f"guard_bits={self.guard_bits} too small for {self.term_count_hint} terms"
            )
        if self.work_bits < digits_to_bits(self.target_digits) + self.guard_bits:
            raise ValueError(
                f"work_bits={self.work_bits} cannot carry {self.target_digits} digits"
            )
        return self

    @classmethod
    def for_digits(
        cls, digits: int, term_count_hint: int = 2, extra_bits: int = 0
    ) -> "PrecisionPlan":
        guard = guard_bits_for(term_count_hint)
        return cls(
            target_digits=digits,
            work_bits=digits_to_bits(digits) + guard + extra_bits,
            guard_bits=guard,
            term_count_hint=term_count_hint,
        )

    @classmethod
    def for_bits(cls, bits: int, term_count_hint: int = 2) -> "PrecisionPlan":
        """Plan whose work_bits is at least `bits`; target digits follow from it."""
        guard = guard_bits_for(term_count_hint)
        digits = max(1, math.floor((bits - guard) / LOG2_10))
        return cls(
            target_digits=digits,
            work_bits=max(bits, digits_to_bits(digits) + guard),
            guard_bits=guard,
            term_count_hint=term_count_hint,
        )

    def doubled(self) -> "PrecisionPlan":
        return self.model_copy(update={"work_bits": 2 * self.work_bits})

    def with_extra_bits(self, extra: int) -> "PrecisionPlan":
        return self.model_copy(update={"work_bits": self.work_bits + extra})

from __future__ import annotations

import pytest
from mpmath import mp

from qgamma.config import settings
from qgamma.schemas.schema_numerics import PrecisionPlan


@pytest.fixture(autouse=True)
def _serial_pool(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep every batch in-process; the pool is exercised explicitly where needed."""
    monkeypatch.setattr(settings, "THREADS", 1)


@pytest.fixture(autouse=True)
def _default_mp_precision():
    prec = mp.prec
    yield
    assert mp.prec == prec, "a computation leaked a change of mp.prec"


@pytest.fixture
def plan_128() -> PrecisionPlan:
    return PrecisionPlan.for_bits(128)


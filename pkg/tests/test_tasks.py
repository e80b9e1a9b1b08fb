from __future__ import annotations

import logging

import pytest

from qgamma.config import settings
from qgamma.schemas.schema_numerics import PrecisionPlan
from qgamma.tasks.base import LoggedTask, logged_task
from qgamma.tasks.pool import ordered_map, worker_count
from qgamma.util.exceptions import RangeError
from qgamma.util.logger import base, set_base


class _Records(logging.Handler):
    def __init__(self) -> None:
        super().__init__(logging.DEBUG)
        self.records: list[logging.LogRecord] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.records.append(record)


@pytest.fixture
def task_records():
    handler = _Records()
    task_logger = logging.getLogger("qgamma.tasks.base")
    task_logger.addHandler(handler)
    yield handler.records
    task_logger.removeHandler(handler)


def test_logged_task_returns_the_result_and_keeps_the_name(task_records) -> None:
    @logged_task
    def square(n: int) -> int:
        """Square."""
        return n * n

    assert square(7) == 49
    assert square.__name__ == "square"
    assert square.__doc__ == "Square."
    assert [r.getMessage() for r in task_records][-2:] == [
        f"{square.name} started",
        f"{square.name} finished",
    ]


def test_params_are_named_and_summarized(task_records) -> None:
    @logged_task
    def certify(n: int, m: int, plan: PrecisionPlan, d: int = 0) -> None:
        return None

    certify(3, 8, PrecisionPlan.for_bits(200), d=1 << 100)
    params = task_records[0].data["params"]
    assert params["n"] == 3 and params["m"] == 8
    assert params["plan"].startswith("<plan ")
    assert params["d"] == "<int 101 bits>"


def test_base_set_inside_a_task_does_not_leak() -> None:
    @logged_task
    def in_base_three() -> int:
        set_base(3)
        return base.get()

    token = base.set(2)
    try:
        assert in_base_three() == 3
        assert base.get() == 2
    finally:
        base.reset(token)


def test_domain_errors_are_logged_as_warnings(task_records) -> None:
    def outside() -> None:
        raise RangeError("m outside the window", {"n": 5, "m": 15})

    task = LoggedTask(outside, name="outside")
    with pytest.raises(RangeError):
        task()
    failure = task_records[-1]
    assert failure.levelno == logging.WARNING
    assert failure.data["error_type"] == "RangeError"
    assert failure.data["details"] == {"n": 5, "m": 15}


def test_unexpected_errors_are_logged_as_errors(task_records) -> None:
    def broken() -> None:
        raise ZeroDivisionError("division by zero")

    with pytest.raises(ZeroDivisionError):
        LoggedTask(broken)()
    assert task_records[-1].levelno == logging.ERROR


def test_small_batches_run_in_process(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(settings, "THREADS", 8)
    monkeypatch.setattr(settings, "PARALLEL_MIN_TASKS", 64)
    assert worker_count(63) == 1
    assert worker_count(64) == 8
    assert worker_count(1000) == 8


def test_ordered_map_keeps_input_order(monkeypatch: pytest.MonkeyPatch) -> None:
    items = list(range(-20, 20))
    serial = ordered_map(abs, items)
    monkeypatch.setattr(settings, "THREADS", 2)
    monkeypatch.setattr(settings, "PARALLEL_MIN_TASKS", 4)
    assert worker_count(len(items)) == 2
    assert ordered_map(abs, items) == serial == [abs(i) for i in items]

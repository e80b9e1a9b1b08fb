import contextvars
import functools
import inspect
import time
from typing import Any, Callable, Dict, TypeVar

from mpmath import mp
from pydantic import BaseModel

from qgamma.util.exceptions import QGammaError
from qgamma.util.logger import get_run_id, set_run_id, setup_logger

logger = setup_logger("tasks.base")

F = TypeVar("F", bound=Callable[..., Any])


class LoggedTask:
    """
    Wraps a long computation (a decomposition, a certificate, a suite) with
    start, finish and failure records.

    Each call runs in a copy of the current context, so `set_method` and
    `set_base` inside the computation stamp its own records and are gone
    when it returns.
    """

    def __init__(self, fn: Callable[..., Any], name: str | None = None):
        self.fn = fn
        self.name = name or fn.__qualname__
        self.signature = inspect.signature(fn)
        functools.update_wrapper(self, fn)

    def params(self, args: tuple, kwargs: dict) -> Dict[str, Any]:
        """Bound arguments by name, with plans and huge integers summarized."""
        try:
            bound = self.signature.bind_partial(*args, **kwargs)
        except TypeError:
            return {"args": [_loggable(a) for a in args]}
        return {key: _loggable(value) for key, value in bound.arguments.items()}

    def log_start(self, params: Dict[str, Any]) -> None:
        logger.info(
            f"{self.name} started",
            extra={
                "data": {
                    "run_id": get_run_id(),
                    "task": self.name,
                    "params": params,
                    "mp_prec": mp.prec,
                }
            },
        )

    def log_finish(self, started: float, result: Any) -> None:
        data = {
            "run_id": get_run_id(),
            "task": self.name,
            "elapsed_ms": round(1000 * (time.perf_counter() - started), 1),
            "result": type(result).__name__,
        }
        for flag in ("passed", "success"):
            if isinstance(result, BaseModel) and flag in type(result).model_fields:
                data[flag] = getattr(result, flag)
        logger.info(f"{self.name} finished", extra={"data": data})

    def log_failure(self, started: float, error: Exception) -> None:
        data = {
            "run_id": get_run_id(),
            "task": self.name,
            "elapsed_ms": round(1000 * (time.perf_counter() - started), 1),
            "error_type": type(error).__name__,
            "error": str(error),
        }
        if isinstance(error, QGammaError):
            # out-of-range or uncertifiable input, reported to the caller
            data["details"] = {k: _loggable(v) for k, v in error.details.items()}
            logger.warning(f"{self.name} rejected", extra={"data": data})
        else:
            logger.error(f"{self.name} crashed", extra={"data": data}, exc_info=error)

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return contextvars.copy_context().run(self._run, args, kwargs)

    def _run(self, args: tuple, kwargs: dict) -> Any:
        if not get_run_id():
            set_run_id()

        started = time.perf_counter()
        self.log_start(self.params(args, kwargs))
        try:
            result = self.fn(*args, **kwargs)
        except Exception as e:
            self.log_failure(started, e)
            raise
        self.log_finish(started, result)
        return result


def _loggable(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        if value.bit_length() > 64:
            return f"<int {value.bit_length()} bits>"
        return value
    if isinstance(value, (float, str)):
        return value
    if hasattr(value, "work_bits"):
        return f"<plan {value.work_bits} bits>"
    if hasattr(value, "value") and isinstance(value.value, str):
        return value.value
    return repr(value)[:120]


def logged_task(fn: F) -> F:
    """
    Decorator form of LoggedTask.

    Example:
        @logged_task
        def decompose_base2(n, m, plan): ...
    """
    return LoggedTask(fn)  # type: ignore[return-value]

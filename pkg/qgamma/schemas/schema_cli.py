"""
Pydantic schemas for the command-line surface.
"""

from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, model_validator


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"
    CSV = "csv"


class CliConfig(BaseModel):
    """Flags shared by every subcommand."""

    subcommand: str
    output_format: OutputFormat = OutputFormat.TEXT
    out_path: Optional[Path] = Field(None, description="File (or certificate directory) to write to")
    work_bits_override: Optional[int] = Field(None, ge=16)
    log_level: str = "WARNING"
    digits: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def check_format(self) -> "CliConfig":
        if self.output_format is OutputFormat.CSV and self.subcommand != "bench":
            raise ValueError("--csv is only available for bench")
        return self


class QLogOutput(BaseModel):
    q: str
    z: str
    route: str
    digits: int
    value: str = Field(description="ln_q(1+z) rounded to `digits` decimals")


class BenchRow(BaseModel):
    """One bench measurement; field order is the CSV column order."""

    method: str
    q: Optional[int] = None
    n: Optional[int] = None
    m: Optional[int] = None
    digits_correct: int = Field(description="Leading decimals agreeing with the reference γ")
    terms: Optional[int] = None
    wall_ms: float

import os

from dotenv import find_dotenv, load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

env_file = ".env"

load_dotenv(find_dotenv(env_file, usecwd=True), override=False)


class Settings(BaseSettings):
    """Runtime knobs, read from QGAMMA_* environment variables or `.env`."""

    THREADS: int = Field(
        default_factory=lambda: os.cpu_count() or 1,
        ge=1,
        description="Upper bound on worker processes for parallel q-log evaluation",
    )
    LOG_LEVEL: str = Field("WARNING", description="Console log level")
    LOG_DIR: str = Field("logs", description="Directory for JSON-lines logs")
    LOG_JSON_FILE: bool = Field(False, description="Write JSON-lines logs to LOG_DIR")

    MIN_GUARD_BITS: int = Field(32, ge=8)
    MAX_PRECISION_RETRIES: int = Field(4, ge=0)
    EXACT_A_LIMIT: int = Field(
        256, ge=2, description="Largest q^n for which A-parts stay exact rationals"
    )
    PARALLEL_MIN_TASKS: int = Field(
        64, ge=1, description="Batches smaller than this run in-process"
    )
    CERT_FRACTION_DIGITS: int = Field(12, ge=9)

    model_config = SettingsConfigDict(
        env_prefix="QGAMMA_", env_file=env_file, extra="ignore"
    )


settings = Settings()

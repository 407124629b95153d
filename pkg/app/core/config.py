import logging
import os
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


# Initial Logging Setup
logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format="%(asctime)s [%(levelname)s] %(message)s",
)
logger = logging.getLogger("ZenoOtto")


class Settings(BaseSettings):
    """
    Central Configuration using Pydantic Settings.
    Reads from environment variables and .env file.
    """

    # --- Meta ---
    PROJECT_NAME: str = "ZenoOtto"
    VERSION: str = "1.0.0"
    SCHEMA_VERSION: str = "1"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # --- Filesystem ---
    BASE_DIR: Path = Path(__file__).resolve().parents[2]
    OUTPUT_DIR: str = "results"

    # --- Workers ---
    ZENO_OTTO_WORKERS: int = Field(default=1, ge=1)

    # --- Presets ---
    DEFAULT_PROFILE: str = "desk"

    # --- Numerics ---
    # Lubricated strokes use at least this many substeps per unit time per unit of coupling
    STEPS_PER_COUPLING: int = Field(default=40, ge=1)

    @field_validator("DEFAULT_PROFILE")
    def validate_profile(cls, v: str) -> str:
        if v not in ("desk", "full"):
            raise ValueError("DEFAULT_PROFILE must be 'desk' or 'full'")
        return v

    # Pydantic Config
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",  # Ignores extra variables in .env that aren't listed here
    )

    def create_dirs(self, output_dir: str | None = None) -> str:
        """Ensures the output directory exists and returns it."""
        target = output_dir or self.OUTPUT_DIR
        os.makedirs(target, exist_ok=True)
        logger.info(f"FileSystem Check: Output={target}")
        return target


# Global Instance (Singleton)
settings = Settings()

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)

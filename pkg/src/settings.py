"""
Environment-backed runtime settings.
"""
import os
import logging
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv(os.path.join(os.path.dirname(os.path.dirname(__file__)), '.env'))

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


@dataclass(frozen=True)
class Settings:
    log_level: str = 'INFO'
    log_file: Optional[str] = None
    default_seed: int = 0
    threads: int = 1
    population_size: int = 100_000

    @classmethod
    def from_env(cls) -> 'Settings':
        """Read settings from PRIVBOOT_* environment variables"""
        threads = _int_from_env('PRIVBOOT_THREADS', 1)
        if threads < 1:
            raise ValueError(f"PRIVBOOT_THREADS must be at least 1, got {threads}")
        return cls(
            log_level=os.getenv('PRIVBOOT_LOG_LEVEL', 'INFO').upper(),
            log_file=os.getenv('PRIVBOOT_LOG_FILE') or None,
            default_seed=_int_from_env('PRIVBOOT_SEED', 0),
            threads=threads,
            population_size=_int_from_env('PRIVBOOT_POPULATION_SIZE', 100_000),
        )


def configure_logging(config: Optional['Settings'] = None) -> None:
    """Install the stream handler (and the optional file handler) on the root logger"""
    config = config or settings
    handlers = [logging.StreamHandler()]
    if config.log_file:
        handlers.append(logging.FileHandler(config.log_file))
    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
    )


# Global settings instance
settings = Settings.from_env()

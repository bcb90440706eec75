"""
Optional defaults for the command line, read from the environment or a .env file.

    BILEX_SEED              default --seed (int)
    BILEX_FORMAT            default --format (csv | json)
    BILEX_INTERMEDIATE_DIR  where each step saves its artifacts
    BILEX_VERBOSE           1 to print progress
"""
import os
from dataclasses import dataclass

from dotenv import load_dotenv

from bilexical.errors import InvalidArgument


@dataclass(frozen=True)
class Settings:
    seed: int = 0
    format: str = "csv"
    intermediate_dir: str = ""
    verbose: bool = False


def load_settings(dotenv_path=None):
    load_dotenv(dotenv_path=dotenv_path, override=False)
    try:
        seed = int(os.getenv("BILEX_SEED", "0"))
    except ValueError:
        raise InvalidArgument(f"BILEX_SEED must be an integer, got {os.getenv('BILEX_SEED')!r}")
    fmt = os.getenv("BILEX_FORMAT", "csv")
    if fmt not in ("csv", "json"):
        raise InvalidArgument(f"BILEX_FORMAT must be csv or json, got {fmt!r}")
    return Settings(
        seed=seed,
        format=fmt,
        intermediate_dir=os.getenv("BILEX_INTERMEDIATE_DIR", ""),
        verbose=os.getenv("BILEX_VERBOSE", "0") in ("1", "true", "yes"),
    )

"""
HSIEM Utilities
Shared plumbing for the Hardy space infinite element package

Features:
- Exception base class and configuration errors
- Process settings from environment / .env files
- structlog configuration (stderr, console or JSON)
- Complex number parsing and formatting
- SVD based rank and nullity helpers
- Shared thread pool for parameter sweeps
- CSV / JSON emission with deterministic formatting
"""

from __future__ import annotations

import logging
import math
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import orjson
import pandas as pd
import structlog
from dotenv import load_dotenv
from scipy.linalg import svdvals

load_dotenv(override=False)


class HSIEMError(Exception):
    """Base exception for HSIEM errors"""
    pass


class ConfigError(HSIEMError):
    """Raised for malformed configuration values"""
    pass


class LogFormat(Enum):
    """Log renderers"""
    CONSOLE = "console"
    JSON = "json"


@dataclass(frozen=True)
class HsiemSettings:
    """Process wide settings read from HSIEM_* environment variables"""
    threads: int
    log_level: str
    log_format: LogFormat
    rank_rtol: float
    inverse_padding: int

    @classmethod
    def from_env(cls) -> "HsiemSettings":
        threads = _env_int("HSIEM_THREADS", os.cpu_count() or 1)
        if threads < 1:
            raise ConfigError(f"HSIEM_THREADS must be >= 1, got {threads}")
        fmt = os.getenv("HSIEM_LOG_FORMAT", "console").strip().lower()
        try:
            log_format = LogFormat(fmt)
        except ValueError:
            raise ConfigError(f"HSIEM_LOG_FORMAT must be 'console' or 'json', got {fmt!r}")
        padding = _env_int("HSIEM_INVERSE_PADDING", 96)
        if padding < 0:
            raise ConfigError(f"HSIEM_INVERSE_PADDING must be >= 0, got {padding}")
        return cls(
            threads=threads,
            log_level=os.getenv("HSIEM_LOG_LEVEL", "WARNING").strip().upper(),
            log_format=log_format,
            rank_rtol=_env_float("HSIEM_RANK_RTOL", 1e-10),
            inverse_padding=padding,
        )


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")
    if not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a positive finite number, got {raw!r}")
    return value


class HsiemUtils:
    """
    Helper collection shared by all HSIEM modules
    """

    def __init__(self, settings: Optional[HsiemSettings] = None):
        self.settings = settings or HsiemSettings.from_env()
        self._executor: Optional[ThreadPoolExecutor] = None
        self._executor_lock = threading.Lock()

    # =================================================================
    # LOGGING
    # =================================================================

    def configure_logging(self, level: Optional[str] = None,
                          fmt: Optional[LogFormat] = None) -> None:
        """Configure structlog to write filtered events to stderr"""
        level_name = (level or self.settings.log_level).upper()
        numeric = logging.getLevelName(level_name)
        if not isinstance(numeric, int):
            raise ConfigError(f"Unknown log level {level_name!r}")
        renderer = (structlog.processors.JSONRenderer()
                    if (fmt or self.settings.log_format) == LogFormat.JSON
                    else structlog.dev.ConsoleRenderer(colors=False))
        structlog.configure(
            processors=[
                structlog.processors.add_log_level,
                structlog.processors.TimeStamper(fmt="iso"),
                renderer,
            ],
            wrapper_class=structlog.make_filtering_bound_logger(numeric),
            logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
            cache_logger_on_first_use=False,
        )

    # =================================================================
    # PARSING
    # =================================================================

    def parse_complex(self, text: Union[str, complex, float, int], name: str = "value") -> complex:
        """Parse 're,im' (or a bare real) into a finite complex number"""
        if isinstance(text, (complex, float, int)):
            value = complex(text)
        else:
            parts = [p.strip() for p in str(text).split(",")]
            if len(parts) not in (1, 2) or any(p == "" for p in parts):
                raise ConfigError(f"{name} must be 're,im', got {text!r}")
            try:
                re_part = float(parts[0])
                im_part = float(parts[1]) if len(parts) == 2 else 0.0
            except ValueError:
                raise ConfigError(f"{name} must be 're,im', got {text!r}")
            value = complex(re_part, im_part)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ConfigError(f"{name} must be finite, got {text!r}")
        return value

    def format_complex(self, value: complex) -> Dict[str, float]:
        """JSON friendly complex number"""
        return {"re": float(value.real), "im": float(value.imag)}

    # =================================================================
    # RANK COMPUTATIONS
    # =================================================================

    def matrix_rank(self, matrix: np.ndarray, rtol: Optional[float] = None) -> int:
        """Numerical rank with threshold rtol * sigma_max"""
        if matrix.size == 0:
            return 0
        sigma = svdvals(matrix)
        if sigma.size == 0 or sigma[0] == 0.0:
            return 0
        tol = (rtol if rtol is not None else self.settings.rank_rtol) * sigma[0]
        return int(np.count_nonzero(sigma > tol))

    def nullity(self, matrix: np.ndarray, rtol: Optional[float] = None) -> int:
        """Dimension of the kernel (number of columns minus rank)"""
        return matrix.shape[1] - self.matrix_rank(matrix, rtol)

    # =================================================================
    # PARALLEL SWEEPS
    # =================================================================

    def get_executor(self) -> ThreadPoolExecutor:
        """Get or create the shared sweep executor"""
        with self._executor_lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self.settings.threads)
        return self._executor

    def map_ordered(self, func, items: Iterable[Any]) -> List[Any]:
        """Run func over items on the executor, results in input order"""
        items = list(items)
        if self.settings.threads == 1 or len(items) <= 1:
            return [func(item) for item in items]
        return list(self.get_executor().map(func, items))

    def shutdown(self) -> None:
        with self._executor_lock:
            if self._executor is not None:
                self._executor.shutdown(wait=False)
                self._executor = None

    # =================================================================
    # OUTPUT
    # =================================================================

    def write_csv(self, frame: pd.DataFrame, path: Optional[Union[str, Path]] = None) -> str:
        """Write a table with fixed float formatting; returns the CSV text"""
        text = frame.to_csv(index=False, float_format="%.16e", lineterminator="\n")
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def dumps_json(self, payload: Dict[str, Any]) -> bytes:
        """Serialize with sorted keys and numpy support"""
        return orjson.dumps(
            payload,
            option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
        )


# Global utilities instance
hsiem_utils = HsiemUtils()
hsiem_utils.configure_logging()


def get_settings() -> HsiemSettings:
    return hsiem_utils.settings


def parse_complex(text: Union[str, complex, float, int], name: str = "value") -> complex:
    return hsiem_utils.parse_complex(text, name)


def matrix_rank(matrix: np.ndarray, rtol: Optional[float] = None) -> int:
    return hsiem_utils.matrix_rank(matrix, rtol)


def nullity(matrix: np.ndarray, rtol: Optional[float] = None) -> int:
    return hsiem_utils.nullity(matrix, rtol)


__all__ = [
    'HSIEMError', 'ConfigError', 'LogFormat', 'HsiemSettings', 'HsiemUtils',
    'hsiem_utils', 'get_settings', 'parse_complex', 'matrix_rank', 'nullity',
]

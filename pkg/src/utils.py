import os, json, math, logging, pathlib

OUT_BASE = pathlib.Path("reports")

def write_text(path: pathlib.Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")

def write_json(path: pathlib.Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8")

def env_float(name: str, default: float) -> float:
    try:
        return float(os.environ.get(name, default))
    except Exception:
        return default

def env_int(name: str, default: int) -> int:
    try:
        return int(os.environ.get(name, default))
    except Exception:
        return default

def log2n(n: int) -> float:
    # log n of the analysis; clamped so 1/(8 log n) stays finite on tiny graphs
    return max(math.log2(n), 1.0) if n > 0 else 1.0

def ceil_pow(base: float, exponent: float) -> int:
    """ceil(base ** exponent), robust to 64**(1/3) == 3.9999999999999996."""
    x = base ** exponent
    r = round(x)
    if abs(x - r) < 1e-9:
        return int(r)
    return int(math.ceil(x))

_LOG_FORMAT = "[%(name)s] %(message)s"
_TAGS: set[str] = set()

def _env_level() -> str:
    level = os.environ.get("COLORSTREAM_LOG", "INFO").upper()
    return level if isinstance(logging.getLevelName(level), int) else "INFO"

def get_logger(tag: str) -> logging.Logger:
    logger = logging.getLogger(tag)
    if tag not in _TAGS:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        logger.addHandler(handler)
        logger.propagate = False
        logger.setLevel(_env_level())
        _TAGS.add(tag)
    return logger

def set_verbose(verbose: bool) -> None:
    level = logging.DEBUG if verbose else _env_level()
    for tag in _TAGS:
        logging.getLogger(tag).setLevel(level)


class ColorstreamError(Exception):
    """Root of every error raised by this package."""
    exit_code = 1

class UsageError(ColorstreamError):
    exit_code = 1

class InputError(ColorstreamError, ValueError):
    exit_code = 2

class ConfigError(ColorstreamError, ValueError):
    exit_code = 2

class AdversaryDisqualified(ColorstreamError):
    exit_code = 2

class VerificationFailure(ColorstreamError):
    exit_code = 3

class TheoryViolation(ColorstreamError, AssertionError):
    """A runtime check of a proven invariant failed: implementation bug."""
    exit_code = 4

class AccountingError(TheoryViolation):
    pass

class PaletteOverflow(ColorstreamError):
    exit_code = 5

class QueryFail(ColorstreamError):
    exit_code = 6

class SoftError(RuntimeError):
    """Non-fatal: recorded on the run and counted in metrics, never raised."""
    pass

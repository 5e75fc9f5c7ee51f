"""Process-wide settings read from the environment."""
import os

ENV_OUT = "POLYRIESZ_OUT"
ENV_LOG_LEVEL = "POLYRIESZ_LOG_LEVEL"
ENV_THREADS = "POLYRIESZ_THREADS"

DEFAULT_OUT_DIR = "results"

_threads = None


def get_threads():
    """Worker count for triangle-pair assembly and restart fans."""
    if _threads is not None:
        return _threads
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def thread_override():
    """The value set by set_threads, or None when the environment decides."""
    return _threads


def set_threads(count):
    global _threads
    if count is not None and int(count) < 1:
        raise ValueError("thread count must be >= 1")
    _threads = None if count is None else int(count)


def resolve_out_dir(cli_value=None):
    """POLYRIESZ_OUT wins over --out, which wins over the default."""
    return os.environ.get(ENV_OUT) or cli_value or DEFAULT_OUT_DIR


def default_log_level():
    return os.environ.get(ENV_LOG_LEVEL, "WARNING").upper()

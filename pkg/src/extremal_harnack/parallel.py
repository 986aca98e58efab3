"""Worker-count policy for the embarrassingly parallel sweeps."""

import os

THREADS_ENV = "EXTREMAL_HARNACK_THREADS"


def max_workers() -> int:
    """Worker cap: ``$EXTREMAL_HARNACK_THREADS`` if set, else ``min(8, cpu_count)``."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return max(1, min(8, os.cpu_count() or 1))

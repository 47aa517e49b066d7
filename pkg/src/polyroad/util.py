"""Small shared helpers: worker-pool sizing from the environment."""

from __future__ import annotations

import os

THREADS_ENV_VAR = "POLYROAD_THREADS"


def worker_count() -> int:
    """Number of workers for parallel geometry checks.

    Controlled by the POLYROAD_THREADS environment variable; defaults to 1
    (serial).  Invalid or non-positive values fall back to 1 so a bad setting
    can never disable the pipeline.
    """
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return n if n >= 1 else 1

"""Cached scenario runs shared by several test modules."""

from __future__ import annotations

import time
from functools import lru_cache

from arcsim.scenario import load_scenario
from arcsim.sim import run


@lru_cache(maxsize=None)
def timed(name: str):
    """Run a shipped scenario once per session; returns ``(result, seconds)``."""
    sc = load_scenario(name)
    t0 = time.perf_counter()
    res = run(sc)
    return res, time.perf_counter() - t0


def result(name: str):
    return timed(name)[0]

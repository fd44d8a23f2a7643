"""Shared tolerance and run configuration records.

All floating-point checks in the library draw their thresholds from a single
Tolerances record so that "structural" (chart/gluing consistency) and "metric"
(length comparison) slack can be tightened or relaxed in one place.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10      # chart transitions, gluing isometry
    metric: float = 1e-9           # length comparisons
    fd_step: float = 1e-6          # central-difference step (relative)
    fd_tol: float = 1e-5           # gradient vs finite difference (relative)
    cluster: float = 1e-6          # de-duplication of near-equal minimizers
    solver: float = 1e-12          # convex-solver improvement cutoff

    def scaled(self, **overrides: float) -> "Tolerances":
        return replace(self, **overrides)


@dataclass(frozen=True)
class RunConfig:
    tol: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    parallelism: int = 1
    verbosity: int = 0
    out_dir: str = "."

    @staticmethod
    def from_env(**overrides) -> "RunConfig":
        """Config precedence: explicit overrides > FINSLER_PL_CONFIG file > defaults."""
        base: dict = {}
        path = os.environ.get("FINSLER_PL_CONFIG")
        if path and os.path.exists(path):
            with open(path) as fh:
                raw = json.load(fh)
            tol_raw = raw.pop("tol", {})
            base.update(raw)
            if tol_raw:
                base["tol"] = Tolerances(**tol_raw)
        base.update(overrides)
        return RunConfig(**base)


def pmap(fn, items, parallelism: int = 1):
    """Order-preserving map; threads when parallelism > 1.

    Results are collected in input order, so output is independent of the
    degree of parallelism (the determinism contract of the CLI).
    """
    items = list(items)
    if parallelism <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))

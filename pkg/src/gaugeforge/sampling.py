"""Reproducible quasi-random point sampling over chart domains."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc


def sample_points(chart, n: int, seed: int, predicate=None, max_draw: int = 200):
    """n admissible points from a scrambled Halton sequence over the chart box.

    Points must stay clear of excluded loci by the chart margin; an optional
    predicate (e.g. a per-point signature check) filters further.  Raises if
    the acceptance rate is too low to reach n within max_draw batches.
    """
    engine = qmc.Halton(d=4, scramble=True, seed=seed)
    lows = np.array([lo for lo, _ in chart.ranges])
    highs = np.array([hi for _, hi in chart.ranges])
    out = []
    for _ in range(max_draw):
        batch = engine.random(max(n, 8))
        pts = lows + batch * (highs - lows)
        for p in pts:
            if chart.clearance(p) <= chart.margin:
                continue
            if predicate is not None and not predicate(p):
                continue
            out.append(tuple(float(x) for x in p))
            if len(out) == n:
                return out
    raise RuntimeError(
        f"could not find {n} admissible sample points (got {len(out)})"
    )


def spawn_seeds(seed: int, n: int):
    """Independent child seeds, stable under any evaluation order."""
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(n)]

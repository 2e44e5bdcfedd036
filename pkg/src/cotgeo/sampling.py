"""Seeded sample points on a chart box, away from the null section."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENERATOR = "numpy PCG64"


@dataclass(frozen=True)
class SamplingPlan:
    n: int
    x_box: tuple = ()
    p_box: tuple = ()
    p_min_norm: float = 0.1
    seed: int = 42
    count: int = 100

    def __post_init__(self):
        if not self.x_box:
            object.__setattr__(self, "x_box", tuple((-1.0, 1.0) for _ in range(self.n)))
        if not self.p_box:
            object.__setattr__(self, "p_box", tuple((-2.0, 2.0) for _ in range(self.n)))
        for name in ("x_box", "p_box"):
            box = getattr(self, name)
            if len(box) != self.n:
                raise ValueError(f"{name} needs {self.n} intervals, got {len(box)}")
            for lo, hi in box:
                if not lo < hi:
                    raise ValueError(f"{name}: empty interval [{lo}, {hi}]")
        if self.count < 1:
            raise ValueError("count must be positive")
        if self.p_min_norm < 0:
            raise ValueError("p_min_norm must be non-negative")

    def replace(self, **kw) -> "SamplingPlan":
        vals = {k: getattr(self, k) for k in ("n", "x_box", "p_box", "p_min_norm", "seed", "count")}
        vals.update({k: v for k, v in kw.items() if v is not None})
        return SamplingPlan(**vals)


def sample_points(plan: SamplingPlan, max_batches: int = 1000) -> np.ndarray:
    """``count`` rows (x1..xn, p1..pn), uniform on the boxes, with
    ||p|| >= p_min_norm enforced by rejection.  Deterministic per seed."""
    rng = np.random.default_rng(plan.seed)
    xlo, xhi = np.array(plan.x_box, dtype=float).T
    plo, phi = np.array(plan.p_box, dtype=float).T
    kept = []
    total = 0
    for _ in range(max_batches):
        x = rng.uniform(xlo, xhi, size=(plan.count, plan.n))
        p = rng.uniform(plo, phi, size=(plan.count, plan.n))
        ok = np.linalg.norm(p, axis=1) >= plan.p_min_norm
        kept.append(np.hstack([x[ok], p[ok]]))
        total += int(ok.sum())
        if total >= plan.count:
            return np.vstack(kept)[: plan.count]
    raise ValueError("p_box has almost no mass outside the p_min_norm ball")

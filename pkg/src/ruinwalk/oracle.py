"""Independent verification of the analytic pipeline.

Two checks that share no code with the solver: Monte Carlo simulation of
the walk's running maximum (PCG64 streams, reproducible bit-for-bit from
the seed) and exact small-instance enumeration of the survival
probability by dynamic programming over partial-sum distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError, ResourceError
from .model import RiskModel

# Paths are simulated in fixed-size blocks, one spawned PCG64 substream
# per block, so results depend only on (seed, n_paths).
_BLOCK = 1 << 16

ENUM_CELL_BUDGET = 10 ** 7


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    horizon_T: int
    seed: int
    u_values: tuple

    def __post_init__(self):
        if self.n_paths < 1:
            raise ModelError("n_paths must be >= 1")
        if self.horizon_T < 1:
            raise ModelError("horizon_T must be >= 1")
        if len(self.u_values) == 0:
            raise ModelError("at least one u value is required")
        object.__setattr__(self, "u_values",
                           tuple(int(u) for u in self.u_values))


@dataclass(frozen=True)
class SimResult:
    """Estimates of P(sup_{1<=n<=T} S_n < u) with binomial standard errors."""

    u_values: tuple
    estimates: np.ndarray
    std_errors: np.ndarray
    n_paths: int
    horizon_T: int
    seed: int


def simulate(model: RiskModel, cfg: SimConfig) -> SimResult:
    """Sample the running maximum of the step walk over T steps.

    Steps are drawn by inverse-cdf lookup (binary search on the cumulative
    table). One pass serves every requested u: each path records its
    running maximum, and paths whose maximum already reaches max(u) are
    retired since they fail every requested threshold.
    """
    cum = np.cumsum(model.step.weights)
    lo = model.step.support_min
    u_sorted = np.array(sorted(set(cfg.u_values)), dtype=np.int64)
    u_big = int(u_sorted[-1])

    survived = np.zeros(len(u_sorted), dtype=np.int64)
    n_blocks = (cfg.n_paths + _BLOCK - 1) // _BLOCK
    streams = np.random.SeedSequence(cfg.seed).spawn(n_blocks)
    done = 0
    for b in range(n_blocks):
        size = min(_BLOCK, cfg.n_paths - done)
        done += size
        rng = np.random.Generator(np.random.PCG64(streams[b]))
        running = np.zeros(size, dtype=np.int64)
        maxes = np.full(size, np.iinfo(np.int64).min, dtype=np.int64)
        for _ in range(cfg.horizon_T):
            if running.size == 0:
                break
            draws = rng.random(running.size)
            steps = lo + np.searchsorted(cum, draws, side="right")
            np.clip(steps, lo, lo + len(cum) - 1, out=steps)
            running += steps
            np.maximum(maxes, running, out=maxes)
            alive = maxes < u_big
            if not alive.all():
                running = running[alive]
                maxes = maxes[alive]
        finals = np.sort(maxes)
        survived += np.searchsorted(finals, u_sorted, side="left")

    est = survived / cfg.n_paths
    se = np.sqrt(est * (1.0 - est) / cfg.n_paths)
    order = {u: i for i, u in enumerate(u_sorted.tolist())}
    idx = [order[u] for u in cfg.u_values]
    return SimResult(u_values=cfg.u_values, estimates=est[idx],
                     std_errors=se[idx], n_paths=cfg.n_paths,
                     horizon_T=cfg.horizon_T, seed=cfg.seed)


def enumerate_finite(model: RiskModel, u: int, T: int) -> float:
    """Exact phi(u, T) by enumerating partial-sum distributions.

    Tracks the mass of every partial-sum value reachable without having
    touched [u, inf), one explicit lattice sweep per step. Deliberately
    shares no convolution machinery with the analytic solver.
    """
    if T < 1:
        raise ModelError(f"horizon T={T} must be >= 1")
    m = model.max_drop
    up = max(model.step.support_max, 0)
    cells = sum(u + m * t + 1 for t in range(1, T + 1))
    if cells > ENUM_CELL_BUDGET:
        raise ResourceError(
            f"enumeration needs {cells} lattice cells "
            f"(budget {ENUM_CELL_BUDGET})")

    fvals = {j: model.f(j)
             for j in range(model.step.support_min, model.step.support_max + 1)}
    # mass[x] = P(S_t = x, S_1 < u, ..., S_t < u), x indexed from -m*t
    mass = {}
    for j, fj in fvals.items():
        if j < u and fj > 0.0:
            mass[j] = mass.get(j, 0.0) + fj
    for _ in range(T - 1):
        nxt = {}
        for x, px in mass.items():
            for j, fj in fvals.items():
                y = x + j
                if y < u and fj > 0.0:
                    nxt[y] = nxt.get(y, 0.0) + px * fj
        mass = nxt
    return float(math.fsum(mass.values()))

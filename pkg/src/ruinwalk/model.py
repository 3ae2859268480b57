"""Discrete distributions and the risk model.

A risk model is driven by two independent non-negative integer random
variables: the claim amount X and the premium-scaled interarrival time
c*theta, the latter with finite support bound m. Everything downstream
(roots, initial values, survival tables) depends on them only through the
step distribution X - c*theta, represented here as a dense Pmf with an
integer offset.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InfeasibleRebalanceError, ModelError

# Mass below this is treated as numerical dust when inferring the
# interarrival support bound.
SUPPORT_DUST = 1e-14

# Default tail mass kept when materializing an infinite-support family.
DEFAULT_TAIL_EPS = 1e-15

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class Pmf:
    """Finitely supported integer-lattice pmf.

    weights[k] is the probability of the value offset + k. tail_mass is
    the probability truncated away above the stored support (0 for exactly
    finite distributions). Weights are trimmed so the first and last
    entries are positive.
    """

    offset: int
    weights: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise ModelError("pmf weights must be a non-empty 1-D array")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ModelError("pmf weights must be finite and non-negative")
        if self.tail_mass < 0:
            raise ModelError("tail mass must be non-negative")
        total = math.fsum(w) + self.tail_mass
        if abs(total - 1.0) > _MASS_TOL:
            raise ModelError(f"pmf mass {total!r} is not 1 within {_MASS_TOL}")
        if w.size > 1 and (w[0] == 0.0 or w[-1] == 0.0):
            raise ModelError("pmf weights must be trimmed (use Pmf.from_weights)")

    @classmethod
    def from_weights(cls, offset: int, weights, tail_mass: float = 0.0) -> "Pmf":
        """Build a Pmf, trimming leading/trailing zero weights."""
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ModelError("pmf weights must be a non-empty 1-D array")
        nz = np.nonzero(w)[0]
        if nz.size == 0:
            raise ModelError("pmf has no mass")
        lo, hi = int(nz[0]), int(nz[-1])
        return cls(offset=int(offset) + lo, weights=w[lo : hi + 1].copy(),
                   tail_mass=float(tail_mass))

    @classmethod
    def point(cls, value: int) -> "Pmf":
        return cls(offset=int(value), weights=np.array([1.0]))

    @property
    def support_min(self) -> int:
        return self.offset

    @property
    def support_max(self) -> int:
        return self.offset + len(self.weights) - 1

    def __len__(self) -> int:
        return len(self.weights)

    def mass_at(self, j: int) -> float:
        k = j - self.offset
        if 0 <= k < len(self.weights):
            return float(self.weights[k])
        return 0.0

    def mean(self) -> float:
        idx = np.arange(len(self.weights)) + self.offset
        return float(math.fsum(idx * self.weights))

    def cdf_at(self, j: int) -> float:
        """P(V <= j); the stored tail mass counts as lying above support_max."""
        k = j - self.offset
        if k < 0:
            return 0.0
        if k >= len(self.weights):
            return 1.0 - self.tail_mass
        return float(math.fsum(self.weights[: k + 1]))

    def to_json_dict(self) -> dict:
        return {"offset": int(self.offset), "weights": [float(x) for x in self.weights]}


@dataclass(frozen=True)
class ParametricDist:
    """Named distribution family with exact parameters.

    Families: geometric(p) with P(V=k) = (1-p)^k p on k >= 0, poisson(lam),
    binomial(n, p), or explicit(pmf).
    """

    family: str
    p: float | None = None
    lam: float | None = None
    n: int | None = None
    pmf: Pmf | None = None

    def __post_init__(self):
        fam = self.family
        if fam == "geometric":
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise ModelError(f"geometric parameter p={self.p!r} outside (0, 1]")
        elif fam == "poisson":
            if self.lam is None or not (self.lam > 0.0) or not math.isfinite(self.lam):
                raise ModelError(f"poisson parameter lambda={self.lam!r} must be > 0")
        elif fam == "binomial":
            if self.n is None or self.n < 0:
                raise ModelError(f"binomial parameter n={self.n!r} must be >= 0")
            if self.p is None or not (0.0 <= self.p <= 1.0):
                raise ModelError(f"binomial parameter p={self.p!r} outside [0, 1]")
        elif fam == "explicit":
            if self.pmf is None:
                raise ModelError("explicit family requires a pmf")
        else:
            raise ModelError(f"unknown distribution family {fam!r}")

    @classmethod
    def geometric(cls, p: float) -> "ParametricDist":
        return cls(family="geometric", p=float(p))

    @classmethod
    def poisson(cls, lam: float) -> "ParametricDist":
        return cls(family="poisson", lam=float(lam))

    @classmethod
    def binomial(cls, n: int, p: float) -> "ParametricDist":
        return cls(family="binomial", n=int(n), p=float(p))

    @classmethod
    def explicit(cls, pmf: Pmf) -> "ParametricDist":
        return cls(family="explicit", pmf=pmf)

    @property
    def has_finite_support(self) -> bool:
        return self.family in ("binomial", "explicit") or \
            (self.family == "geometric" and self.p == 1.0)

    def exact_mean(self) -> float:
        if self.family == "geometric":
            return (1.0 - self.p) / self.p
        if self.family == "poisson":
            return self.lam
        if self.family == "binomial":
            return self.n * self.p
        return self.pmf.mean()

    def sf(self, j: int) -> float:
        """P(V > j) for integer j."""
        if j < 0:
            return 1.0
        if self.family == "geometric":
            return (1.0 - self.p) ** (j + 1)
        if self.family == "poisson":
            return float(stats.poisson.sf(j, self.lam))
        if self.family == "binomial":
            if j >= self.n:
                return 0.0
            return float(math.fsum(self.pmf_at(k)
                                   for k in range(j + 1, self.n + 1)))
        k = j - self.pmf.offset
        if k < 0:
            return 1.0
        if k >= len(self.pmf.weights) - 1:
            return self.pmf.tail_mass
        return float(math.fsum(self.pmf.weights[k + 1 :])) + self.pmf.tail_mass

    def pmf_at(self, k: int) -> float:
        if k < 0:
            return 0.0
        if self.family == "geometric":
            return (1.0 - self.p) ** k * self.p
        if self.family == "poisson":
            return float(stats.poisson.pmf(k, self.lam))
        if self.family == "binomial":
            if k > self.n:
                return 0.0
            return math.comb(self.n, k) * self.p ** k \
                * (1.0 - self.p) ** (self.n - k)
        return self.pmf.mass_at(k)


def materialize(dist: ParametricDist | Pmf, tail_eps: float = DEFAULT_TAIL_EPS) -> Pmf:
    """Realize a distribution as a finite Pmf with tail mass <= tail_eps.

    Families with finite support come back exact (tail_mass 0). Infinite
    families are cut at the smallest K with P(V > K) <= tail_eps and the
    cut mass is recorded, not redistributed.
    """
    if isinstance(dist, Pmf):
        return dist
    if not (0.0 < tail_eps <= 1e-6):
        raise ModelError(f"tail_eps={tail_eps!r} outside (0, 1e-6]")
    fam = dist.family
    if fam == "explicit":
        return dist.pmf
    if fam == "binomial":
        w = [math.comb(dist.n, k) * dist.p ** k * (1.0 - dist.p) ** (dist.n - k)
             for k in range(dist.n + 1)]
        return Pmf.from_weights(0, w)
    if fam == "geometric":
        if dist.p == 1.0:
            return Pmf.point(0)
        # P(V > K) = (1-p)^(K+1)
        K = max(0, math.ceil(math.log(tail_eps) / math.log1p(-dist.p)) - 1)
        while (1.0 - dist.p) ** (K + 1) > tail_eps:
            K += 1
        k = np.arange(K + 1)
        w = dist.p * (1.0 - dist.p) ** k
        return Pmf.from_weights(0, w, tail_mass=(1.0 - dist.p) ** (K + 1))
    # poisson
    K = int(stats.poisson.isf(tail_eps, dist.lam)) + 1
    while float(stats.poisson.sf(K, dist.lam)) > tail_eps:
        K += 1
    k = np.arange(K + 1)
    w = stats.poisson.pmf(k, dist.lam)
    return Pmf.from_weights(0, w, tail_mass=float(stats.poisson.sf(K, dist.lam)))


def truncate(dist: ParametricDist | Pmf, m: int) -> Pmf:
    """Cap a distribution at m, lumping all mass from [m, inf) onto m.

    The result agrees with the input on {0..m-1} and has tail_mass 0. A
    finite pmf already supported within [0, m] is returned unchanged.
    """
    if m <= 0:
        raise ModelError(f"truncation bound m={m} must be >= 1")
    if isinstance(dist, ParametricDist) and dist.family != "explicit":
        w = np.array([dist.pmf_at(k) for k in range(m)] + [dist.sf(m - 1)])
        return Pmf.from_weights(0, w)
    pmf = dist.pmf if isinstance(dist, ParametricDist) else dist
    if pmf.support_max <= m and pmf.tail_mass == 0.0:
        return pmf
    if pmf.offset >= m:
        return Pmf.point(m)
    cut = m - pmf.offset
    w = pmf.weights[: cut + 1].copy()
    if w.size < cut + 1:
        w = np.pad(w, (0, cut + 1 - w.size))
    w[cut] = math.fsum(pmf.weights[cut:]) + pmf.tail_mass
    return Pmf.from_weights(pmf.offset, w)


def excess_mean(interarrival: ParametricDist, m: int) -> float:
    """sum_{i>=1} i * P(V = m + i), the mean mass beyond a cap at m."""
    if interarrival.family == "explicit":
        pmf = interarrival.pmf
        s = 0.0
        for j in range(m + 1, pmf.support_max + 1):
            s += (j - m) * pmf.mass_at(j)
        return s
    # E(V) - E(V capped at m), both exact for the named families
    capped = truncate(interarrival, m)
    return interarrival.exact_mean() - capped.mean()


def rebalance_claim(claim: ParametricDist | Pmf, interarrival: ParametricDist,
                    m: int, l: int) -> Pmf:
    """Move claim mass from value l to 0 so that capping the interarrival
    time at m leaves the mean step unchanged.

    The shift is delta = (1/l) * sum_{i>=1} i * P(c*theta = m+i); the
    adjusted weight at l must stay non-negative.
    """
    if l <= 0:
        raise ModelError(f"rebalance point l={l} must be a positive integer")
    pmf = materialize(claim) if isinstance(claim, ParametricDist) else claim
    delta = excess_mean(interarrival, m) / l
    if delta == 0.0:
        return pmf
    lo = min(pmf.offset, 0)
    hi = max(pmf.support_max, l)
    w = np.zeros(hi - lo + 1)
    w[pmf.offset - lo : pmf.offset - lo + len(pmf.weights)] = pmf.weights
    if w[l - lo] - delta < 0.0:
        shift = delta * l
        feasible = [j for j in range(1, hi + 1)
                    if j != 0 and w[j - lo] >= shift / j]
        hint = feasible[0] if feasible else None
        msg = f"claim mass at l={l} is {w[l - lo]:.3e}, below the required shift {delta:.3e}"
        msg += f"; smallest feasible l is {hint}" if hint is not None \
            else "; no feasible l exists for this claim"
        raise InfeasibleRebalanceError(msg, min_feasible_l=hint)
    w[l - lo] -= delta
    w[0 - lo] += delta
    return Pmf.from_weights(lo, w, tail_mass=pmf.tail_mass)


def step_pmf(claim: Pmf, interarrival: Pmf) -> Pmf:
    """Pmf of X - c*theta for independent X, c*theta.

    Weight at j is sum_k P(X = j + k) P(c*theta = k); the support starts at
    claim.support_min - interarrival.support_max.
    """
    w = np.convolve(claim.weights, interarrival.weights[::-1])
    offset = claim.offset - interarrival.support_max
    return Pmf.from_weights(offset, w, tail_mass=claim.tail_mass)


@dataclass(frozen=True)
class RiskModel:
    """Claim, interarrival, and derived step distribution of the walk.

    m is the interarrival support bound (P(c*theta <= m) = 1 with positive
    mass at m). The walk's maximal downward step is max_drop =
    -step.support_min, which equals m whenever the claim has mass at 0 and
    m - claim.offset when the claim support is shifted.
    """

    claim: Pmf
    interarrival: Pmf
    m: int
    step: Pmf
    drift: float
    _cdf: np.ndarray = field(repr=False, default=None)

    @property
    def max_drop(self) -> int:
        return -self.step.support_min

    @property
    def drift_pos(self) -> float:
        """E(c*theta - X), positive under the net profit condition."""
        return -self.drift

    def f(self, j: int) -> float:
        """Step pmf P(X - c*theta = j)."""
        return self.step.mass_at(j)

    def F(self, j: int) -> float:
        """Step cdf P(X - c*theta <= j)."""
        k = j - self.step.offset
        if k < 0:
            return 0.0
        if k >= len(self._cdf):
            return float(self._cdf[-1])
        return float(self._cdf[k])

    @property
    def net_profit_holds(self) -> bool:
        return self.drift < 0.0


def build_model(claim: Pmf, interarrival: Pmf) -> RiskModel:
    """Assemble a RiskModel, inferring m from the interarrival support.

    Trailing interarrival weights at or below SUPPORT_DUST are lumped into
    the new top so the step distribution has positive mass at its lower
    bound. The interarrival distribution must be exactly finite.
    """
    if claim.offset < 0 or interarrival.offset < 0:
        raise ModelError("claim and interarrival supports must be non-negative")
    if interarrival.tail_mass != 0.0:
        raise ModelError(
            "interarrival time must have finite support; truncate it first")
    w = interarrival.weights
    top = len(w) - 1
    while top > 0 and w[top] <= SUPPORT_DUST:
        top -= 1
    if top < len(w) - 1:
        w = w[: top + 1].copy()
        w[top] += math.fsum(interarrival.weights[top + 1 :])
        interarrival = Pmf.from_weights(interarrival.offset, w)
    m = interarrival.support_max
    if m <= 0:
        raise ModelError("interarrival support bound m must be >= 1")
    step = step_pmf(claim, interarrival)
    drift = claim.mean() - interarrival.mean()
    cdf = np.cumsum(step.weights)
    return RiskModel(claim=claim, interarrival=interarrival, m=m, step=step,
                     drift=drift, _cdf=cdf)


# ---------------------------------------------------------------------------
# Model files

def _dist_from_spec(spec: dict, what: str) -> ParametricDist:
    if not isinstance(spec, dict):
        raise ModelError(f"{what} specification must be an object")
    if "pmf" in spec:
        p = spec["pmf"]
        try:
            return ParametricDist.explicit(
                Pmf.from_weights(p.get("offset", 0), np.asarray(p["weights"], dtype=float)))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"bad explicit pmf for {what}: {exc}") from exc
    fam = spec.get("family")
    try:
        if fam == "poisson":
            return ParametricDist.poisson(spec["lambda"])
        if fam == "geometric":
            return ParametricDist.geometric(spec["p"])
        if fam == "binomial":
            return ParametricDist.binomial(spec["n"], spec["p"])
    except KeyError as exc:
        raise ModelError(f"{what}: missing parameter {exc} for family {fam!r}") from exc
    raise ModelError(f"{what}: unknown family {fam!r}")


@dataclass(frozen=True)
class ModelConfig:
    """Parsed model file: raw distributions plus assembly options."""

    claim_dist: ParametricDist
    interarrival_dist: ParametricDist
    truncate_m: int | None = None
    rebalance_l: int | None = None
    tail_eps: float = DEFAULT_TAIL_EPS

    def build(self) -> RiskModel:
        if self.truncate_m is not None:
            inter = truncate(self.interarrival_dist, self.truncate_m)
        else:
            if not self.interarrival_dist.has_finite_support:
                raise ModelError(
                    "interarrival family has infinite support; set truncate_m")
            inter = materialize(self.interarrival_dist, self.tail_eps)
        if self.rebalance_l is not None:
            if self.truncate_m is None:
                raise ModelError("rebalance_l requires truncate_m")
            claim = rebalance_claim(self.claim_dist, self.interarrival_dist,
                                    self.truncate_m, self.rebalance_l)
        else:
            claim = materialize(self.claim_dist, self.tail_eps)
        return build_model(claim, inter)

    def step_tail_below_cap(self) -> float:
        """P(X - c*theta <= -(m+1)) for the untruncated interarrival time;
        0 when no truncation was applied."""
        if self.truncate_m is None:
            return 0.0
        m = self.truncate_m
        claim = materialize(self.claim_dist, self.tail_eps)
        terms = [claim.weights[k] * self.interarrival_dist.sf(claim.offset + k + m)
                 for k in range(len(claim.weights))]
        return float(math.fsum(terms))


def parse_model_config(doc: dict) -> ModelConfig:
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a JSON object")
    for key in ("claim", "interarrival"):
        if key not in doc:
            raise ModelError(f"model file is missing the {key!r} field")
    tm = doc.get("truncate_m")
    if tm is not None and (not isinstance(tm, int) or tm < 1):
        raise ModelError(f"truncate_m={tm!r} must be a positive integer")
    rl = doc.get("rebalance_l")
    if rl is not None and (not isinstance(rl, int) or rl < 1):
        raise ModelError(f"rebalance_l={rl!r} must be a positive integer")
    return ModelConfig(
        claim_dist=_dist_from_spec(doc["claim"], "claim"),
        interarrival_dist=_dist_from_spec(doc["interarrival"], "interarrival"),
        truncate_m=tm,
        rebalance_l=rl,
        tail_eps=float(doc.get("tail_eps", DEFAULT_TAIL_EPS)),
    )


def load_model_config(path: str) -> ModelConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path} is not valid JSON: {exc}") from exc
    return parse_model_config(doc)

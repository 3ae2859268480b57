"""Generating functions and unit-disk roots of the step distribution.

The walk's step generating function G(s) = sum_j f(j) s^j, cleared of
negative powers, becomes the polynomial P(s) = s^d (G(s) - 1) with
d = max_drop. P has exactly max_drop - 1 roots (with multiplicity) in the
closed unit disk away from 0 and 1; those roots drive the initial-value
system. Root finding runs on the polynomial via companion-matrix
eigenvalues, followed by clustering into multiplicities, conjugate-pair
symmetrization, and one Newton polish step per cluster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModelError, ModelError, NetProfitError, \
    RootCountError, RootQualityError
from .model import Pmf, RiskModel

# Root-search tolerances; all overridable per call (and via CLI flags).
BOUNDARY_TOL = 1e-9     # how far past |s| = 1 a root may sit
ONE_EXCLUSION = 1e-7    # radius of the exclusion ball around s = 1
CLUSTER_TOL = 1e-6      # roots closer than this merge into one multiple root
RESIDUAL_TOL = 1e-8     # |G(root) - 1| after polish
MAX_POLISH_MOVE = 1e-6  # polish displacement beyond this flags a bad cluster


def pgf_eval(p: Pmf, s: complex) -> complex:
    """Evaluate sum_k weights[k] * s^(offset + k) by Horner's scheme.

    Finite pmfs converge everywhere, but a negative offset makes s = 0 a
    pole. Intended use is |s| <= 1 + 1e-9.
    """
    s = complex(s)
    if s == 0:
        if p.offset < 0:
            raise ModelError("generating function has a pole at s = 0 "
                             f"(offset {p.offset})")
        return complex(p.weights[0]) if p.offset == 0 else 0.0 + 0.0j
    acc = 0.0 + 0.0j
    for w in p.weights[::-1]:
        acc = acc * s + w
    return acc * s ** p.offset


@dataclass(frozen=True)
class CharPoly:
    """P(s) = s^max_drop (G_step(s) - 1) as an ascending coefficient list.

    coeffs[k] = f(k - max_drop) - [k == max_drop]; the constant term is the
    mass at the maximal downward step and the degree is
    max_drop + max upward step.
    """

    coeffs: np.ndarray
    max_drop: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def eval(self, s: complex) -> complex:
        acc = 0.0 + 0.0j
        for c in self.coeffs[::-1]:
            acc = acc * s + c
        return acc

    def derivative(self) -> "CharPoly":
        k = np.arange(1, len(self.coeffs))
        return CharPoly(coeffs=self.coeffs[1:] * k, max_drop=self.max_drop)


def char_poly(model: RiskModel) -> CharPoly:
    """Characteristic polynomial of G_step(s) = 1 for the model's walk."""
    d = model.max_drop
    if model.step.weights[0] <= 0.0:
        raise DegenerateModelError(
            "step distribution has no mass at its lower bound "
            f"(-{d}); the support bound was not trimmed")
    coeffs = model.step.weights.astype(float).copy()
    if len(coeffs) <= d:
        coeffs = np.pad(coeffs, (0, d + 1 - len(coeffs)))
    coeffs[d] -= 1.0
    return CharPoly(coeffs=coeffs, max_drop=d)


@dataclass(frozen=True)
class RootSet:
    """Unit-disk roots of G_step(s) = 1 with multiplicities.

    m is the walk's maximal downward step; multiplicities sum to m - 1.
    Non-real roots come in exactly conjugate pairs. residuals[i] is
    |G_step(root_i) - 1| evaluated through the claim/interarrival product
    form (numerically far better conditioned than the cleared polynomial).
    """

    roots: tuple
    multiplicities: tuple
    m: int
    residuals: tuple

    def __len__(self) -> int:
        return len(self.roots)

    @property
    def total_multiplicity(self) -> int:
        return int(sum(self.multiplicities))

    @property
    def all_simple(self) -> bool:
        return all(r == 1 for r in self.multiplicities)

    def expanded(self) -> list:
        """Roots repeated by multiplicity."""
        out = []
        for z, r in zip(self.roots, self.multiplicities):
            out.extend([z] * r)
        return out


def _poly_eval_ld(coeffs: np.ndarray, s: complex) -> complex:
    """Horner evaluation in extended precision (ascending coefficients)."""
    cs = coeffs.astype(np.clongdouble)
    z = np.clongdouble(s)
    acc = np.clongdouble(0)
    for c in cs[::-1]:
        acc = acc * z + c
    return complex(acc)


def _step_residual(model: RiskModel, s: complex) -> tuple:
    """|G_X(s) G_ctheta(1/s) - 1| and its evaluation noise floor.

    The product form is far better conditioned than the cleared
    polynomial divided by s^m, but for roots of very small modulus the
    1/s powers still cancel massively; the floor (machine epsilon times
    the magnitude sum of the terms) is the smallest residual the
    evaluation could certify.
    """
    g = pgf_eval(model.claim, s) * pgf_eval(model.interarrival, 1.0 / s)
    mag = pgf_eval(model.claim, abs(s)).real \
        * pgf_eval(model.interarrival, 1.0 / abs(s)).real
    n_terms = len(model.claim.weights) + len(model.interarrival.weights)
    floor = float(np.finfo(float).eps) * n_terms * (mag + 1.0)
    return abs(g - 1.0), floor


def _cluster(points: np.ndarray, tol: float) -> list:
    """Greedy transitive clustering of complex points at distance tol."""
    order = np.lexsort((points.imag, points.real))
    pts = points[order]
    used = np.zeros(len(pts), dtype=bool)
    clusters = []
    for i in range(len(pts)):
        if used[i]:
            continue
        group = [i]
        used[i] = True
        frontier = [i]
        while frontier:
            j = frontier.pop()
            near = np.nonzero(~used & (np.abs(pts - pts[j]) < tol))[0]
            for k in near:
                used[k] = True
                group.append(int(k))
                frontier.append(int(k))
        clusters.append(pts[group])
    return clusters


def _confirm_multiplicity(poly: CharPoly, z: complex, r: int, tol: float) -> bool:
    """Check |P^(k)(z)| / k! is small against |P^(r)(z)| / r! for k < r.

    Near a genuine multiplicity-r root those ratios scale like the
    distance to the root raised to r - k, and the polished point sits
    within the cluster radius of it."""
    derivs = []
    p = poly
    fact = 1.0
    for k in range(r + 1):
        derivs.append(abs(_poly_eval_ld(p.coeffs, z)) / fact)
        p = p.derivative()
        fact *= k + 1
    ref = derivs[r]
    if ref == 0.0:
        return False
    return all(derivs[k] <= ref * (100.0 * tol) ** (r - k)
               for k in range(1, r))


def unit_disk_roots(model: RiskModel, *,
                    cluster_tol: float = CLUSTER_TOL,
                    one_exclusion: float = ONE_EXCLUSION,
                    boundary_tol: float = BOUNDARY_TOL,
                    residual_tol: float = RESIDUAL_TOL) -> RootSet:
    """Locate the max_drop - 1 unit-disk roots of G_step(s) = 1.

    Pipeline: companion-matrix eigenvalues of the characteristic
    polynomial; keep |s| <= 1 + boundary_tol outside the exclusion ball
    around 1; cluster at cluster_tol into multiplicities; enforce exact
    conjugate symmetry; one (multiplicity-aware) Newton polish step per
    cluster; validate the count, the polish displacement, the residual of
    the defining equation, and derivative-based multiplicity confirmation.
    """
    if not model.net_profit_holds:
        raise NetProfitError(
            f"mean step is {model.drift:+.6g} >= 0; the net profit condition "
            "fails and survival probabilities are identically zero")
    poly = char_poly(model)
    dpoly = poly.derivative()
    m = model.max_drop

    if m == 1:
        return RootSet(roots=(), multiplicities=(), m=1, residuals=())

    all_roots = np.roots(poly.coeffs[::-1])
    inside = all_roots[(np.abs(all_roots) <= 1.0 + boundary_tol)
                       & (np.abs(all_roots - 1.0) > one_exclusion)]

    clusters = _cluster(inside, cluster_tol)
    reps = [(complex(np.mean(c)), len(c)) for c in clusters]

    # conjugate closure: real axis snap, then pair complex representatives
    real_reps, pos, neg = [], [], []
    for z, r in reps:
        if abs(z.imag) <= cluster_tol:
            real_reps.append((complex(z.real, 0.0), r))
        elif z.imag > 0:
            pos.append((z, r))
        else:
            neg.append((z, r))
    if len(pos) != len(neg):
        raise RootCountError(
            f"complex candidate roots are not conjugate-paired "
            f"({len(pos)} upper vs {len(neg)} lower half-plane)",
            roots=[(z, abs(z)) for z in inside])
    neg_pool = list(neg)
    paired = []
    for z, r in pos:
        dists = [abs(np.conj(z) - w) for w, _ in neg_pool]
        j = int(np.argmin(dists))
        w, rw = neg_pool.pop(j)
        if dists[j] > cluster_tol or rw != r:
            raise RootCountError(
                f"no conjugate partner for root {z:.9g} within {cluster_tol}",
                roots=[(z, abs(z)) for z in inside])
        paired.append(((z + np.conj(w)) / 2.0, r))

    def polish(z: complex, r: int) -> complex:
        # a multiplicity-r root is a simple root of the (r-1)-th derivative,
        # where Newton's step is well conditioned; at the root itself both
        # P and P' sit at rounding-noise level and their ratio is garbage
        p = poly
        for _ in range(r - 1):
            p = p.derivative()
        pv = _poly_eval_ld(p.coeffs, z)
        dv = _poly_eval_ld(p.derivative().coeffs, z)
        if dv == 0:
            return z
        return z - pv / dv

    finals = []
    for z, r in real_reps:
        zp = polish(z, r)
        if abs(zp.imag) < 1e-30:
            zp = complex(zp.real, 0.0)
        finals.append((zp, r, abs(zp - z)))
    for z, r in paired:
        zp = polish(z, r)
        finals.append((zp, r, abs(zp - z)))
        finals.append((np.conj(zp), r, abs(zp - z)))

    finals.sort(key=lambda t: (t[0].real, t[0].imag))
    roots = tuple(complex(t[0]) for t in finals)
    mults = tuple(int(t[1]) for t in finals)
    moves = [t[2] for t in finals]

    total = sum(mults)
    if total != m - 1:
        raise RootCountError(
            f"found {total} unit-disk roots (with multiplicity), expected "
            f"{m - 1}; candidates: "
            + ", ".join(f"{z:.6g} (|s|={abs(z):.6g})" for z in all_roots),
            roots=[(z, abs(z)) for z in all_roots])

    for z, r, move in finals:
        if move > MAX_POLISH_MOVE:
            raise RootQualityError(
                f"Newton polish moved root {z:.9g} by {move:.3e} "
                f"(> {MAX_POLISH_MOVE}); cluster tolerance is unreliable here")
        if abs(z) > 1.0 + boundary_tol or abs(z - 1.0) <= one_exclusion or z == 0:
            raise RootQualityError(
                f"polished root {z:.9g} left the admissible region")
        if r > 1 and not _confirm_multiplicity(poly, z, r, cluster_tol):
            raise RootQualityError(
                f"root {z:.9g} clustered with multiplicity {r} but the "
                "derivative magnitudes do not confirm it")

    checked = [_step_residual(model, z) for z, _, _ in finals]
    for z, (res, floor) in zip(roots, checked):
        if res > max(residual_tol, 4.0 * floor):
            raise RootQualityError(
                f"root {z:.9g} has residual |G(s) - 1| = {res:.3e} "
                f"(> {residual_tol}, noise floor {floor:.1e})")

    return RootSet(roots=roots, multiplicities=mults, m=m,
                   residuals=tuple(res for res, _ in checked))

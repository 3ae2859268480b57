"""Initial values of the walk-maximum distribution.

The probabilities pi_0..pi_{m-1} of the walk's maximum solve an m x m
linear system: one row per unit-disk root (derivative rows for multiple
roots) plus a final mean row, with right-hand side (0, ..., 0, -drift).
Two independent routes are provided: a pivoted complex linear solve (the
production path) and the closed-form cascade over elementary symmetric
polynomials of the roots (the verification path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import ModelError, NetProfitError, NumericalError, \
    SystemSingularError
from .model import RiskModel
from .pgf import RootSet

PIVOT_TOL = 1e-13       # relative pivot below this means singular
IMAG_DUST = 1e-9        # largest imaginary part tolerated in a probability
_REFINE_STEPS = 2
_MP_DPS = 40
_MP_SIZE_LIMIT = 64     # exact-residual refinement for desk-scale systems


@dataclass(frozen=True)
class RowKind:
    """Provenance tag for one system row."""

    kind: str                    # "root", "derivative", or "mean"
    root: complex | None = None
    order: int = 0

    def __str__(self) -> str:
        if self.kind == "root":
            return f"root({self.root:.9g})"
        if self.kind == "derivative":
            return f"derivative({self.root:.9g}, n={self.order})"
        return "mean"


@dataclass(frozen=True)
class InitSystem:
    """System matrix and right-hand side.

    matrix_hi carries the entries at 80-bit precision and matrix_mp at
    mpmath precision, both exact functions of the same double-precision
    roots and cdf values. Iterative refinement targets them in turn: the
    columns scale like f(-m) alpha^(m-1), so the trailing solution
    components amplify even the entry rounding of the stored matrix by
    1/f(-m)-sized factors, and agreement between the two solution routes
    is only achievable against exact-input residuals."""

    matrix: np.ndarray
    rhs: np.ndarray
    row_kinds: tuple
    matrix_hi: np.ndarray = None
    matrix_mp: tuple = None

    @property
    def size(self) -> int:
        return len(self.rhs)


@dataclass(frozen=True)
class InitialValues:
    """pi[i] = P(walk maximum = i), i < m, plus solve diagnostics.

    imag_dust is the largest imaginary part stripped from the solution;
    with the stripped negatives it gauges the solve's forward error.
    """

    pi: np.ndarray
    drift_pos: float
    residual: float
    imag_dust: float = 0.0

    @property
    def m(self) -> int:
        return len(self.pi)

    @property
    def error_gauge(self) -> float:
        neg = max(0.0, -float(np.min(self.pi))) if len(self.pi) else 0.0
        return max(self.residual, self.imag_dust, neg)


def _column_poly(model: RiskModel, i: int, m: int) -> np.ndarray:
    """Ascending coefficients of p_i(s) = sum_{j=0}^{m-1-i} s^(j+i) F(-m+j)."""
    c = np.zeros(m, dtype=float)
    for j in range(m - i):
        c[j + i] = model.F(-m + j)
    return c


def _poly_derivative(c: np.ndarray, n: int) -> np.ndarray:
    for _ in range(n):
        c = c[1:] * np.arange(1, len(c))
    return c


def _horner(c: np.ndarray, z: complex) -> np.clongdouble:
    """Horner evaluation, accumulated in extended precision."""
    zl = np.clongdouble(z)
    acc = np.clongdouble(0)
    for x in c[::-1]:
        acc = acc * zl + np.clongdouble(x)
    return acc


def build_system(model: RiskModel, roots: RootSet) -> InitSystem:
    """Assemble the m x m initial-value system for the model's step pmf.

    A root of multiplicity r contributes derivative rows of orders
    0..r-1; the last row states that the mean one-step drop among the
    first m levels equals E(c*theta - X). Everything is expressed through
    the step distribution, so shifted claim supports (no mass at 0) fall
    on the same code path with m = max_drop.
    """
    if not model.net_profit_holds:
        raise NetProfitError(
            f"mean step is {model.drift:+.6g} >= 0; the net profit condition "
            "fails")
    m = model.max_drop
    if roots.total_multiplicity != m - 1:
        raise ModelError(
            f"root set carries multiplicity {roots.total_multiplicity}, "
            f"expected {m - 1}")
    cols = [_column_poly(model, i, m) for i in range(m)]
    with_mp = m <= _MP_SIZE_LIMIT
    A = np.zeros((m, m), dtype=np.clongdouble)
    A_mp = [[None] * m for _ in range(m)] if with_mp else None
    kinds = []
    r_idx = 0
    with mp.workdps(_MP_DPS):
        for z, mult in zip(roots.roots, roots.multiplicities):
            for n in range(mult):
                for i in range(m):
                    c = _poly_derivative(cols[i], n)
                    if with_mp:
                        # row entries of tiny-modulus roots cancel almost
                        # completely; resolve them here and round, so the
                        # fixed-precision factorization sees the true row
                        zc = mp.mpc(z)
                        acc = mp.mpc(0)
                        for x in c[::-1]:
                            acc = acc * zc + x
                        A_mp[r_idx][i] = acc
                        A[r_idx, i] = complex(acc)
                    else:
                        A[r_idx, i] = _horner(c, z)
                kinds.append(RowKind("root", z) if n == 0
                             else RowKind("derivative", z, n))
                r_idx += 1
        for i in range(m):
            A[m - 1, i] = math.fsum((j - i) * model.f(-j)
                                    for j in range(i + 1, m + 1))
            if with_mp:
                A_mp[m - 1][i] = mp.fsum(
                    mp.mpf(j - i) * mp.mpf(model.f(-j))
                    for j in range(i + 1, m + 1))
    kinds.append(RowKind("mean"))
    rhs = np.zeros(m, dtype=complex)
    rhs[m - 1] = model.drift_pos
    return InitSystem(matrix=A.astype(complex), rhs=rhs,
                      row_kinds=tuple(kinds), matrix_hi=A,
                      matrix_mp=tuple(map(tuple, A_mp)) if with_mp else None)


def _gepp_factor(A: np.ndarray, kinds) -> tuple:
    """In-place LU with partial pivoting; pivots below PIVOT_TOL raise."""
    n = A.shape[0]
    lu = A.copy()
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) < PIVOT_TOL:
            raise SystemSingularError(
                f"pivot {abs(lu[p, k]):.3e} below {PIVOT_TOL} at "
                f"elimination step {k}", row_kinds=kinds)
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm


def _lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lu.shape[0]
    x = b[perm].astype(complex)
    for k in range(1, n):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]
    return x


def _finalize_pi(x: np.ndarray, drift_pos: float, residual: float) -> InitialValues:
    worst = float(np.max(np.abs(x.imag))) if len(x) else 0.0
    if worst > IMAG_DUST:
        raise NumericalError(
            f"initial values carry imaginary part {worst:.3e} "
            f"(> {IMAG_DUST}); conjugate symmetry of the system is broken")
    pi = x.real.copy()
    if np.any(pi < -1e-10):
        raise NumericalError(
            f"negative initial probability {pi.min():.3e} (< -1e-10)")
    if math.fsum(pi) > 1.0 + 1e-9:
        raise NumericalError(
            f"initial probabilities sum to {math.fsum(pi)!r} > 1 + 1e-9")
    return InitialValues(pi=pi, drift_pos=drift_pos, residual=residual,
                         imag_dust=worst)


def solve_linear(sys: InitSystem) -> InitialValues:
    """Gaussian elimination with partial pivoting, plus extended-precision
    iterative refinement.

    Rows and columns are equilibrated first: a root of small modulus
    produces a uniformly tiny row (entries scale with F(-m) ... F(-1)
    times its powers) and the last column scales with f(-m) alpha^(m-1),
    so an absolute pivot threshold is only meaningful on the scaled
    matrix.
    """
    A, b = sys.matrix, sys.rhs
    rowmax = np.max(np.abs(A), axis=1)
    if np.any(rowmax == 0.0):
        dead = int(np.argmin(rowmax))
        raise SystemSingularError(
            f"row {dead} ({sys.row_kinds[dead]}) of the system is zero",
            row_kinds=sys.row_kinds)
    Ar = A / rowmax[:, None]
    colmax = np.max(np.abs(Ar), axis=0)
    if np.any(colmax == 0.0):
        dead = int(np.argmin(colmax))
        raise SystemSingularError(f"column {dead} of the system is zero",
                                  row_kinds=sys.row_kinds)
    As = Ar / colmax[None, :]
    lu, perm = _gepp_factor(As, sys.row_kinds)

    def scaled_solve(rhs: np.ndarray) -> np.ndarray:
        return _lu_solve(lu, perm, rhs / rowmax) / colmax

    x = scaled_solve(b)
    A_ld = sys.matrix_hi if sys.matrix_hi is not None \
        else A.astype(np.clongdouble)
    b_ld = b.astype(np.clongdouble)
    x_ld = x.astype(np.clongdouble)

    if sys.matrix_mp is not None:
        n = sys.size
        with mp.workdps(_MP_DPS):
            for _ in range(_REFINE_STEPS + 1):
                xs = [mp.mpc(complex(v)) for v in x_ld]
                r = np.array(
                    [complex(mp.mpc(complex(b[i]))
                             - mp.fsum(sys.matrix_mp[i][j] * xs[j]
                                       for j in range(n)))
                     for i in range(n)], dtype=complex)
                d = scaled_solve(r)
                x_ld = x_ld + d.astype(np.clongdouble)
            x = x_ld.astype(complex)
            xs = [mp.mpf(float(v)) for v in x.real]
            resid = max(abs(mp.mpc(complex(b[i]))
                            - mp.fsum(sys.matrix_mp[i][j] * xs[j]
                                      for j in range(n)))
                        for i in range(n))
            resid = float(resid)
    else:
        for _ in range(_REFINE_STEPS):
            r = b_ld - A_ld @ x_ld
            d = scaled_solve(r.astype(complex))
            x_ld = x_ld + d.astype(np.clongdouble)
        x = x_ld.astype(complex)
        resid = float(np.max(np.abs(A_ld @ x.real.astype(np.clongdouble)
                                    - b_ld)))
    return _finalize_pi(x, drift_pos=float(b[-1].real), residual=resid)


def elementary_symmetric(roots) -> list:
    """e_0..e_n of the given roots by the one-root-at-a-time recurrence."""
    e = [1.0 + 0.0j]
    for z in roots:
        e.append(0.0 + 0.0j)
        for j in range(len(e) - 1, 0, -1):
            e[j] += z * e[j - 1]
    return e


def solve_closed_form(model: RiskModel, roots: RootSet) -> InitialValues:
    """Closed-form cascade over elementary symmetric polynomials.

    pi~_k = (-1)^k e_{m-1-k} / (f(-m) prod(alpha_j - 1))
            - (1/f(-m)) sum_{i<k} pi~_i F(-m+k-i),
    then pi_k = pi~_k * E(c*theta - X). The F/f ratios cancel
    catastrophically when f(-m) is tiny, so the cascade is accumulated in
    high precision and rounded once at the end; this route verifies the
    linear solve, it does not replace it.
    """
    if not roots.all_simple:
        raise NumericalError(
            "closed form requires simple roots; use solve_linear for "
            "models with multiple roots")
    m = model.max_drop
    fm = model.f(-m)
    alphas = [mp.mpc(z) for z in roots.expanded()]
    with mp.workdps(60):
        e = [mp.mpc(1)]
        for z in alphas:
            e.append(mp.mpc(0))
            for j in range(len(e) - 1, 0, -1):
                e[j] += z * e[j - 1]
        denom = mp.mpf(fm)
        for z in alphas:
            denom *= z - 1
        Fv = [mp.mpf(model.F(-m + t)) for t in range(m)]
        tilde = []
        for k in range(m):
            val = (-1) ** k * e[m - 1 - k] / denom
            for i in range(k):
                val -= tilde[i] * Fv[k - i] / mp.mpf(fm)
            tilde.append(val)
        dp = mp.mpf(model.drift_pos)
        pi = np.array([complex(t * dp) for t in tilde])
    sys = build_system(model, roots)
    resid = float(np.max(np.abs(sys.matrix @ pi.real - sys.rhs)))
    return _finalize_pi(pi, drift_pos=model.drift_pos, residual=resid)


def determinant_identity(model: RiskModel, roots: RootSet) -> tuple:
    """Both sides of the Vandermonde-style determinant identity.

    lhs is the direct determinant of the assembled system matrix; rhs is
    (-1)^(m-1) f(-m)^m prod_j (alpha_j - 1) prod_{i<j} (alpha_j - alpha_i)
    with roots in system-row order. Returned for external comparison.
    """
    if not roots.all_simple:
        raise NumericalError("determinant identity requires simple roots")
    m = model.max_drop
    lhs = complex(np.linalg.det(build_system(model, roots).matrix))
    alphas = roots.expanded()
    rhs = (-1.0) ** (m - 1) * model.f(-m) ** m
    for z in alphas:
        rhs *= z - 1.0
    for i in range(len(alphas)):
        for j in range(i + 1, len(alphas)):
            rhs *= alphas[j] - alphas[i]
    return lhs, complex(rhs)

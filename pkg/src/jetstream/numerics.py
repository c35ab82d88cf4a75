"""Deterministic numerical kernels.

Monotone root bracketing, adaptive Gauss-Kronrod quadrature, banded linear
solves (LAPACK-backed) with a residual check, and log-log power-law fits.
Everything here is deterministic: no randomness, no time-dependent state,
fixed summation orders.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConstraintError, NonconvergenceError, SingularSystemError

# 7-point Gauss / 15-point Kronrod rule on [-1, 1].  Standard published
# abscissae/weights; the rule is open (no endpoint evaluations), which is what
# lets integrable endpoint singularities like x**-0.5 converge.
_XK = np.array(
    [
        -0.991455371120813,
        -0.949107912342759,
        -0.864864423359769,
        -0.741531185599394,
        -0.586087235467691,
        -0.405845151377397,
        -0.207784955007898,
        0.0,
        0.207784955007898,
        0.405845151377397,
        0.586087235467691,
        0.741531185599394,
        0.864864423359769,
        0.949107912342759,
        0.991455371120813,
    ]
)
_WK = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
        0.204432940075298,
        0.190350578064785,
        0.169004726639267,
        0.140653259715525,
        0.104790010322250,
        0.063092092629979,
        0.022935322010529,
    ]
)
# Gauss-7 weights sit on every other Kronrod node (indices 1,3,...,13).
_WG = np.array(
    [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
        0.381830050505119,
        0.279705391489277,
        0.129484966168870,
    ]
)

_MAX_PANELS = 4096
_MAX_ROOT_ITERS = 200


@dataclass(frozen=True)
class Bracket:
    """A sign-change interval [lo, hi] with the function values at both ends."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float


@dataclass
class BandedSystem:
    """A banded linear system in LAPACK band storage.

    ``ab`` has shape (l + u + 1, n) with entry A[i, j] stored at
    ab[u + i - j, j]; ``l``/``u`` count sub/superdiagonals.
    """

    n: int
    l: int
    u: int
    ab: np.ndarray
    rhs: np.ndarray


def find_root_monotone(f, bracket: Bracket, tol: float = 1e-12) -> float:
    """Root of f inside a sign-change bracket, bracket-preserving.

    Bisection with a safeguarded secant acceleration: the secant candidate is
    used only when it falls strictly inside the current bracket, otherwise the
    step falls back to the midpoint, so the bracket never escapes.  An exact
    zero at an endpoint returns that endpoint (lo wins if both vanish).
    """
    lo, hi, f_lo, f_hi = bracket.lo, bracket.hi, bracket.f_lo, bracket.f_hi
    if not lo < hi:
        raise ConstraintError(f"bracket endpoints not ordered: [{lo}, {hi}]")
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise ConstraintError(
            f"bracket does not straddle a root: f({lo})={f_lo}, f({hi})={f_hi}"
        )
    for _ in range(_MAX_ROOT_ITERS):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        x = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        # Guard the secant point: keep it a sensible fraction inside.
        if not (lo + 0.01 * (hi - lo) < x < hi - 0.01 * (hi - lo)):
            x = mid
        fx = f(x)
        if fx == 0.0:
            return x
        if f_lo * fx < 0.0:
            hi, f_hi = x, fx
        else:
            lo, f_lo = x, fx
    raise NonconvergenceError(
        f"root not bracketed to {tol} within {_MAX_ROOT_ITERS} iterations "
        f"(bracket [{lo}, {hi}])",
        estimate=0.5 * (lo + hi),
    )


def _gk_panel(f, lo: float, hi: float) -> tuple[float, float]:
    """(Kronrod-15 estimate, |K15 - G7| error indicator) on one panel."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    fx = np.array([f(c + h * t) for t in _XK])
    k15 = h * float(np.dot(_WK, fx))
    g7 = h * float(np.dot(_WG, fx[1::2]))
    return k15, abs(k15 - g7)


def integrate_adaptive(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Adaptive Gauss-Kronrod integral of f over [a, b], absolute tolerance.

    Globally adaptive: the panel with the largest error indicator is split
    until the summed indicators drop below ``tol``.  The rule is open, so
    integrable endpoint singularities (e.g. the inverse square root) converge;
    exceeding the panel cap raises a typed nonconvergence error carrying the
    best estimate so far.  Deterministic: the heap orders ties by interval
    position and the final sum is an ordered fsum.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    k15, err = _gk_panel(f, a, b)
    # Heap of (-error, lo, hi, estimate); max-error panel splits first.
    heap = [(-err, a, b, k15)]
    total_err = err
    while total_err > tol:
        if len(heap) >= _MAX_PANELS:
            est = sign * math.fsum(item[3] for item in sorted(heap, key=lambda t: t[1]))
            raise NonconvergenceError(
                f"adaptive quadrature exceeded {_MAX_PANELS} panels "
                f"(remaining error {total_err:.3e}, tol {tol:.3e})",
                estimate=est,
            )
        neg_err, lo, hi, _ = heapq.heappop(heap)
        total_err += neg_err  # neg_err is negative: removes this panel's share
        mid = 0.5 * (lo + hi)
        for seg in ((lo, mid), (mid, hi)):
            k, e = _gk_panel(f, *seg)
            heapq.heappush(heap, (-e, seg[0], seg[1], k))
            total_err += e
    return sign * math.fsum(item[3] for item in sorted(heap, key=lambda t: t[1]))


def banded_matvec(sys: BandedSystem, x: np.ndarray) -> np.ndarray:
    """A @ x for a matrix in band storage (used for residual verification)."""
    n, l, u, ab = sys.n, sys.l, sys.u, sys.ab
    y = np.zeros(n)
    for r in range(l + u + 1):
        d = u - r  # diagonal offset j - i
        if d >= 0:
            # entries A[i, i+d] = ab[r, i+d], i = 0 .. n-1-d
            y[: n - d] += ab[r, d:] * x[d:]
        else:
            y[-d:] += ab[r, : n + d] * x[: n + d]
    return y


def solve_banded(sys: BandedSystem) -> np.ndarray:
    """Solve the banded system by LU with partial pivoting confined to the band.

    Backed by LAPACK's banded driver.  The solution is verified by an explicit
    residual check: ||Ax - b|| <= 1e-10 * max(1, ||b||) for well-conditioned
    systems, relaxing to the backward-stability scale eps*(||A|| ||x|| + ||b||)
    when the system is large in norm; a zero pivot or a failed check raises
    SingularSystemError.
    """
    if sys.ab.shape != (sys.l + sys.u + 1, sys.n):
        raise ConstraintError(
            f"band storage shape {sys.ab.shape} does not match "
            f"(l+u+1, n) = ({sys.l + sys.u + 1}, {sys.n})"
        )
    if sys.rhs.shape != (sys.n,):
        raise ConstraintError(f"rhs shape {sys.rhs.shape} does not match n={sys.n}")
    try:
        x = scipy.linalg.solve_banded(
            (sys.l, sys.u), sys.ab, sys.rhs, check_finite=False
        )
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"banded factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("banded solve produced non-finite entries")
    rnorm = float(np.linalg.norm(banded_matvec(sys, x) - sys.rhs, ord=np.inf))
    norm_b = float(np.linalg.norm(sys.rhs, ord=np.inf))
    # Row sums of |A| give ||A||_inf without leaving band storage.
    rowsum = np.zeros(sys.n)
    for r in range(sys.l + sys.u + 1):
        d = sys.u - r
        if d >= 0:
            rowsum[: sys.n - d] += np.abs(sys.ab[r, d:])
        else:
            rowsum[-d:] += np.abs(sys.ab[r, : sys.n + d])
    norm_A = float(rowsum.max())
    norm_x = float(np.max(np.abs(x)))
    # Well-conditioned systems meet the tight bound; beyond it, accept
    # anything backward-stable and flag the rest as numerically singular.
    eps = float(np.finfo(float).eps)
    bound = max(
        1e-10 * max(1.0, norm_b),
        1e3 * eps * (norm_A * norm_x + norm_b),
    )
    if rnorm > bound:
        raise SingularSystemError(
            f"banded solve residual {rnorm:.3e} exceeds bound {bound:.3e} "
            "(system is numerically singular or badly conditioned)"
        )
    return x


def fit_power_exponent(samples) -> float:
    """Least-squares exponent alpha of v ~ C * d**alpha from (d, v) samples.

    Requires at least 4 samples with strictly positive distances and values;
    the fit is linear regression in log-log coordinates.
    """
    pts = list(samples)
    if len(pts) < 4:
        raise ConstraintError(f"power-law fit needs >= 4 samples, got {len(pts)}")
    d = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if np.any(d <= 0.0) or np.any(v <= 0.0):
        raise ConstraintError("power-law fit needs strictly positive distances and values")
    if len(np.unique(d)) != len(d):
        raise ConstraintError("power-law fit distances must be distinct")
    slope, _ = np.polyfit(np.log(d), np.log(v), 1)
    return float(slope)

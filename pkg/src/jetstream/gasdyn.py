"""Compressible-gas primitives and the flux coordinates of the stream problem.

All speeds are normalized by the stagnation sound speed, so the density law
is rho(q^2) = (1 - (gamma-1) q^2 / 2)^(1/(gamma-1)) and the critical speed is
c* = sqrt(2/(gamma+1)).  Two flux primitives drive everything downstream:

    A(q) = int_{c*}^{q} (1 - s^2/c^2(s)) / (s rho(s^2)) ds      (A(c*) = 0)
    B(q) = int_{c*}^{q} rho(s^2) / s ds                         (B(c*) = 0)

Both are strictly increasing on the subsonic range, and the stream equation
becomes d^2 A/d phi^2 + d^2 B/d psi^2 = 0 with Q = A(q) as the unknown.

Public entry points (flux_A, flux_A_inverse, ...) evaluate adaptive quadrature
and bracketed root finding to tight tolerances.  GasModel also carries dense
Hermite lookup tables, built eagerly at construction, that the PDE solver uses
on hot paths; their accuracy against the quadrature path is asserted in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import numerics
from .errors import ConfigError, ConstraintError

#: flux_A_inverse refuses arguments below A(Q_FLOOR_FRAC * c*).
Q_FLOOR_FRAC = 1e-4


@dataclass(frozen=True, eq=False)
class GasModel:
    """Polytropic gas with cached flux tables.

    The tables cover q in [1e-5 c*, (1 - 1e-6) c*]; dense Hermite interpolants
    with analytically exact knot derivatives keep the fast paths within ~1e-12
    of the quadrature definitions over the solver's working range.
    """

    gamma: float
    c_star: float = field(init=False)

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ConstraintError(f"gamma must exceed 1, got {self.gamma}")
        object.__setattr__(self, "c_star", math.sqrt(2.0 / (self.gamma + 1.0)))
        self._build_tables()

    # -- closed-form pointwise relations (vectorized) --

    def rho(self, q):
        q = np.asarray(q, dtype=float)
        base = 1.0 - 0.5 * (self.gamma - 1.0) * q * q
        if np.any(base <= 0.0):
            raise ConstraintError("speed at or beyond the vacuum limit")
        out = base ** (1.0 / (self.gamma - 1.0))
        return out if out.ndim else float(out)

    def csq(self, q):
        q = np.asarray(q, dtype=float)
        out = 1.0 - 0.5 * (self.gamma - 1.0) * q * q
        return out if out.ndim else float(out)

    def a_prime(self, q):
        q = np.asarray(q, dtype=float)
        return (1.0 - q * q / self.csq(q)) / (q * self.rho(q))

    def b_prime(self, q):
        q = np.asarray(q, dtype=float)
        return self.rho(q) / q

    def j_prime(self, q):
        q = np.asarray(q, dtype=float)
        return self.rho(q) * (1.0 - q * q / self.csq(q))

    def f_prime_of_q(self, q):
        """dB/dA as a function of speed: rho^2 c^2 / (c^2 - q^2) > 0 subsonic."""
        q = np.asarray(q, dtype=float)
        c2 = self.csq(q)
        return self.rho(q) ** 2 * c2 / (c2 - q * q)

    # -- cached tables --

    def _build_tables(self):
        cs = self.c_star
        q_lo = 1e-5 * cs
        q_hi = cs * (1.0 - 1e-6)
        split = 0.2 * cs
        knots = np.concatenate(
            [
                np.geomspace(q_lo, split, 4096, endpoint=False),
                np.linspace(split, q_hi, 4097),
            ]
        )
        # Per-interval Gauss-Kronrod integrals of A' and B', vectorized over
        # all intervals at once, then accumulated downward from the c* anchor.
        mid = 0.5 * (knots[1:] + knots[:-1])
        half = 0.5 * (knots[1:] - knots[:-1])
        nodes = mid[None, :] + numerics._XK[:, None] * half[None, :]
        int_a = half * (numerics._WK @ self.a_prime(nodes))
        int_b = half * (numerics._WK @ self.b_prime(nodes))
        tail_mid = 0.5 * (q_hi + cs)
        tail_half = 0.5 * (cs - q_hi)
        tail_nodes = tail_mid + numerics._XK * tail_half
        tail_a = tail_half * float(numerics._WK @ self.a_prime(tail_nodes))
        tail_b = tail_half * float(numerics._WK @ self.b_prime(tail_nodes))
        a_knots = -(tail_a + np.concatenate([np.cumsum(int_a[::-1])[::-1], [0.0]]))
        b_knots = -(tail_b + np.concatenate([np.cumsum(int_b[::-1])[::-1], [0.0]]))
        ap = self.a_prime(knots)
        bp = self.b_prime(knots)
        j_knots = knots * self.rho(knots)
        jp = self.j_prime(knots)
        tabs = {
            "_q_knots": knots,
            "_a_knots": a_knots,
            "_b_knots": b_knots,
            "_A_of_q": CubicHermiteSpline(knots, a_knots, ap),
            "_B_of_q": CubicHermiteSpline(knots, b_knots, bp),
            "_q_of_A": CubicHermiteSpline(a_knots, knots, 1.0 / ap),
            "_F_of_A": CubicHermiteSpline(a_knots, b_knots, bp / ap),
            "_q_of_j": CubicHermiteSpline(j_knots, knots, 1.0 / jp),
            "_j_lo": float(j_knots[0]),
            "_j_hi": float(j_knots[-1]),
        }
        for k, v in tabs.items():
            object.__setattr__(self, k, v)

    def fast_A(self, q):
        return self._A_of_q(np.clip(q, self._q_knots[0], self._q_knots[-1]))

    def fast_B(self, q):
        return self._B_of_q(np.clip(q, self._q_knots[0], self._q_knots[-1]))

    def fast_q_of_A(self, a):
        a = np.clip(a, self._a_knots[0], self._a_knots[-1])
        q = self._q_of_A(a)
        # One Newton polish against the forward table: the forward spline is
        # the accuracy anchor, so the polished inverse matches it to roundoff.
        q = q - (self._A_of_q(q) - a) / self.a_prime(q)
        return np.clip(q, self._q_knots[0], self._q_knots[-1])

    def fast_F_of_A(self, a):
        return self._F_of_A(np.clip(a, self._a_knots[0], self._a_knots[-1]))

    def fast_Fprime_of_A(self, a):
        return self.f_prime_of_q(self.fast_q_of_A(a))

    def fast_q_of_j(self, j):
        j = np.clip(j, self._j_lo, self._j_hi)
        q = self._q_of_j(j)
        q = q - (q * self.rho(q) - j) / self.j_prime(q)
        return np.clip(q, self._q_knots[0], self._q_knots[-1])


@dataclass(frozen=True)
class FlowConfig:
    """Nozzle/jet data: inlet radius R0, wall half-angle vartheta, stream mass
    m, and the exit condition as either a speed c_e or a pressure P_e.
    R, if given, is the requested jet radius for the matching problem."""

    R0: float
    vartheta: float
    m: float
    c_e: float | None = None
    P_e: float | None = None
    R: float | None = None

    def __post_init__(self):
        if not self.R0 > 0.0:
            raise ConfigError(f"R0 must be positive, got {self.R0}")
        if not 0.0 < self.vartheta < 0.5 * math.pi:
            raise ConfigError(f"vartheta must lie in (0, pi/2), got {self.vartheta}")
        if not self.m > 0.0:
            raise ConfigError(f"m must be positive, got {self.m}")
        if (self.c_e is None) == (self.P_e is None):
            raise ConfigError("exactly one of c_e or P_e must be given")


@dataclass(frozen=True)
class DerivedConstants:
    """Constants fixed by (gas, config): exit speed c_e, inlet-matched speed
    c_m, minimal admissible speed c_l, the symmetric-flow radius R_hat and
    detachment abscissa zeta_hat, the phi-domain cap zeta_cap = R0 c_l, the
    admissible mass-flux window, and the admissibility verdict."""

    c_e: float
    c_m: float
    c_l: float
    R_hat: float
    zeta_hat: float
    zeta_cap: float
    m_window: tuple[float, float]
    admissible: bool


def density(gas: GasModel, q):
    """Gas density at speed q (stagnation-normalized)."""
    return gas.rho(q)


def pressure(gas: GasModel, rho):
    """Pressure from density: rho^gamma / gamma."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ConstraintError("density must be positive")
    out = rho**gas.gamma / gas.gamma
    return out if out.ndim else float(out)


def mass_flux(gas: GasModel, q):
    """q * rho(q^2); increasing on the subsonic range, max at q = c*."""
    return np.asarray(q, dtype=float) * gas.rho(q) if np.ndim(q) else q * gas.rho(q)


def flux_A(gas: GasModel, q: float, tol: float = 1e-12) -> float:
    """A(q) by adaptive quadrature from c*.  Subsonic only: 0 < q <= c*."""
    if not 0.0 < q <= gas.c_star:
        raise ConstraintError(f"flux_A needs 0 < q <= c* = {gas.c_star}, got {q}")
    return numerics.integrate_adaptive(lambda s: float(gas.a_prime(s)), gas.c_star, q, tol)


def flux_B(gas: GasModel, q: float, tol: float = 1e-12) -> float:
    """B(q) by adaptive quadrature from c*.  Subsonic only: 0 < q <= c*."""
    if not 0.0 < q <= gas.c_star:
        raise ConstraintError(f"flux_B needs 0 < q <= c* = {gas.c_star}, got {q}")
    return numerics.integrate_adaptive(lambda s: float(gas.b_prime(s)), gas.c_star, q, tol)


def _narrowed_bracket(f, lo: float, hi: float, guess: float, pad: float) -> numerics.Bracket:
    """Bracket a root near a table-provided guess, widening to [lo, hi] if needed."""
    glo = max(lo, guess - pad)
    ghi = min(hi, guess + pad)
    if glo < ghi:
        f_glo, f_ghi = f(glo), f(ghi)
        if f_glo == 0.0 or f_ghi == 0.0 or f_glo * f_ghi < 0.0:
            return numerics.Bracket(glo, ghi, f_glo, f_ghi)
    return numerics.Bracket(lo, hi, f(lo), f(hi))


def flux_A_inverse(gas: GasModel, a: float, tol: float = 1e-12) -> float:
    """Speed q with A(q) = a, resolved to ``tol`` against the quadrature A.

    The admissible argument range is [A(q_floor), 0] with
    q_floor = Q_FLOOR_FRAC * c*; values outside raise ConstraintError.
    """
    if a > 0.0:
        raise ConstraintError(f"flux_A is nonpositive on the subsonic range, got a={a}")
    q_floor = Q_FLOOR_FRAC * gas.c_star
    a_floor = flux_A(gas, q_floor)
    if a < a_floor:
        raise ConstraintError(
            f"flux_A_inverse argument {a} below floor A({q_floor:.3e}) = {a_floor:.6f}"
        )
    f = lambda q: flux_A(gas, q) - a
    br = _narrowed_bracket(f, q_floor, gas.c_star, float(gas.fast_q_of_A(a)), 1e-6)
    return numerics.find_root_monotone(f, br, tol)


def mass_flux_inverse(gas: GasModel, j: float, tol: float = 1e-13) -> float:
    """Subsonic speed with q rho(q^2) = j.  Requires 0 < j < c* rho(c*^2)."""
    j_max = gas.c_star * gas.rho(gas.c_star)
    if not 0.0 < j < j_max:
        raise ConstraintError(
            f"mass flux must lie in (0, {j_max}) for a subsonic inversion, got {j}"
        )
    f = lambda q: q * gas.rho(q) - j
    br = _narrowed_bracket(f, 0.5 * j, gas.c_star, float(gas.fast_q_of_j(j)), 1e-6)
    return numerics.find_root_monotone(f, br, tol)


def flux_E(gas: GasModel, s: float, tol: float = 1e-12) -> float:
    """E(s) = A(B^{-1}(s)): the A-flux expressed against the B-flux."""
    if s > 0.0:
        raise ConstraintError(f"flux_B is nonpositive on the subsonic range, got s={s}")
    q_floor = Q_FLOOR_FRAC * gas.c_star
    s_floor = flux_B(gas, q_floor)
    if s < s_floor:
        raise ConstraintError(f"flux_E argument {s} below floor B({q_floor:.3e}) = {s_floor:.6f}")
    f = lambda q: flux_B(gas, q) - s
    k = min(max(int(np.searchsorted(gas._b_knots, s)), 0), len(gas._q_knots) - 1)
    br = _narrowed_bracket(f, q_floor, gas.c_star, float(gas._q_knots[k]), 1e-4)
    q = numerics.find_root_monotone(f, br, tol)
    return flux_A(gas, q)


def _c_e_from_pressure(gas: GasModel, p_e: float) -> float:
    p_sonic = pressure(gas, gas.rho(gas.c_star))
    p_stag = 1.0 / gas.gamma
    if not p_sonic < p_e < p_stag:
        raise ConstraintError(
            f"exit pressure {p_e} outside the subsonic window ({p_sonic}, {p_stag})"
        )
    rho_e = (gas.gamma * p_e) ** (1.0 / gas.gamma)
    q2 = 2.0 * (1.0 - rho_e ** (gas.gamma - 1.0)) / (gas.gamma - 1.0)
    return math.sqrt(q2)


def derive_constants(gas: GasModel, cfg: FlowConfig) -> DerivedConstants:
    """Resolve c_e and compute the free constants of the configuration.

    Raises ConstraintError if the prescribed mass m cannot pass the inlet at
    the exit speed (m >= R0 vartheta c_e rho(c_e^2)), since then no subsonic
    jet carries it.  The admissibility flag records whether m also clears the
    lower window edge R0 vartheta c_l rho(c_l^2); the containment
    0 < zeta_hat < R0 c_l holds for every feasible m (window or not) and is
    asserted here, but it does not certify admissibility by itself.
    """
    c_e = cfg.c_e if cfg.c_e is not None else _c_e_from_pressure(gas, cfg.P_e)
    if not 0.0 < c_e < gas.c_star:
        raise ConstraintError(f"exit speed must be subsonic: 0 < c_e < {gas.c_star}, got {c_e}")
    rho_e = gas.rho(c_e)
    m_hi = cfg.R0 * cfg.vartheta * c_e * rho_e
    if cfg.m >= m_hi:
        raise ConstraintError(
            f"infeasible mass flux: m = {cfg.m} >= R0 vartheta c_e rho(c_e^2) = {m_hi}"
        )
    a_ce = flux_A(gas, c_e)
    c_m = mass_flux_inverse(gas, cfg.m / (cfg.R0 * cfg.vartheta))
    g = lambda q: gas.rho(q) * (a_ce - flux_A(gas, q)) - 1.0
    lo = 1e-3 * c_e
    c_l = numerics.find_root_monotone(
        g, numerics.Bracket(lo, c_e, g(lo), g(c_e)), tol=1e-14
    )
    if abs(gas.rho(c_l) * (a_ce - flux_A(gas, c_l)) - 1.0) > 1e-10:
        raise ConstraintError("c_l identity failed to resolve to 1e-10")
    zeta_hat = cfg.m * (a_ce - flux_A(gas, c_m)) / cfg.vartheta
    r_hat = cfg.m / (cfg.vartheta * c_e * rho_e)
    zeta_cap = cfg.R0 * c_l
    m_lo = cfg.R0 * cfg.vartheta * c_l * gas.rho(c_l)
    if not 0.0 < zeta_hat < zeta_cap:
        raise ConstraintError(
            f"zeta_hat = {zeta_hat} escaped (0, R0 c_l) = (0, {zeta_cap})"
        )
    return DerivedConstants(
        c_e=c_e,
        c_m=c_m,
        c_l=c_l,
        R_hat=r_hat,
        zeta_hat=zeta_hat,
        zeta_cap=zeta_cap,
        m_window=(m_lo, m_hi),
        admissible=bool(m_lo < cfg.m < m_hi),
    )

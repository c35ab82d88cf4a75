"""Free-boundary layer on top of the fixed solver.

For a given detachment abscissa zeta the outlet potential xi is not free
data: it is pinned by mass conservation through the inlet arc,

    integral_0^m  dpsi / (q rho)  evaluated at phi = 0   ==   R0 * vartheta.

``inlet_defect`` measures the imbalance; it is strictly increasing in xi
(stretching the channel slows the inlet, and 1/(q rho) grows as q drops), so
``solve_outlet`` shoots for its root on [zeta, R0 c_l].  A positive defect
already at xi = zeta means the detachment point sits beyond the symmetric
one (no solution); a negative defect at the solvability cap xi = R0 c_l
means the inlet cannot carry the flux for so small a zeta (no solution).
Both outcomes return a typed ``Nonexistence`` record instead of raising.

``find_zeta_star`` locates the smallest solvable zeta by bisection,
``match_R`` picks zeta so the wetted wall has length R0 - R (matching a
nozzle of radius R), and ``sweep_zeta`` tabulates the family.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ConstraintError,
    LongNozzleError,
    NonconvergenceError,
    ShortNozzleError,
)
from .fixedbvp import Grid, SolverOptions, SpeedField, build_grid, solve_fixed
from .gasdyn import DerivedConstants, FlowConfig, GasModel, derive_constants

_MAX_SHOOT_ITERS = 80


@dataclass(frozen=True)
class Nonexistence:
    """Typed verdict that no flow exists for this detachment abscissa."""

    zeta: float
    reason: str  # "detachment-beyond-symmetric" | "outlet-cap-bound"
    defect: float
    detail: str


@dataclass(frozen=True, eq=False)
class FreeSolution:
    """A solved free-boundary flow: the field plus its shot outlet potential
    and the physical wall summary."""

    field: SpeedField
    zeta: float
    xi: float
    inlet_defect: float
    wall_length: float
    r_equiv: float

    @property
    def sup_phi(self) -> float:
        return self.xi


@dataclass(frozen=True)
class ZetaStarResult:
    """Outcome of the minimal-detachment search.

    floor_limited means every probed zeta down to the search floor was
    solvable, so zeta_star is reported as 0.0; cap_binding means the
    unsolvable side of the bracket failed because the outlet potential hit
    the cap R0 c_l (for a floor-limited search: the outlet potential at the
    floor already sits on the cap).
    """

    zeta_star: float
    cap_binding: bool
    floor_limited: bool
    xi_at_star: float
    r_equiv_at_star: float


@dataclass(frozen=True)
class ClassifyResult:
    """Existence verdict for a requested nozzle radius."""

    verdict: str  # "EXISTS" | "NO_SOLUTION_LONG" | "NO_SOLUTION_SHORT"
    r_hat: float
    r_star: float
    zeta: float | None = None
    xi: float | None = None
    wall_length: float | None = None


@dataclass(frozen=True)
class SweepRow:
    zeta: float
    xi: float
    wall_length: float
    r_equiv: float
    sup_phi: float
    status: str  # "ok" | "no-solution" | "error"
    message: str


def inlet_defect(field: SpeedField, gas: GasModel, cfg: FlowConfig) -> float:
    """Mass-flux imbalance of the inlet arc: integral of 1/(q rho) minus
    R0 * vartheta.  Zero (to shooting tolerance) for a true free solution."""
    q0 = field.q[0, :]
    integrand = 1.0 / (q0 * np.asarray(gas.rho(q0)))
    return float(np.trapezoid(integrand, field.grid.psi_nodes)) - cfg.R0 * cfg.vartheta


def _wall_length(field: SpeedField) -> float:
    iz = field.grid.zeta_index
    qw = field.q[: iz + 1, field.grid.n_psi]
    return float(np.trapezoid(1.0 / qw, field.grid.phi_nodes[: iz + 1]))


def _interp_onto(phi_new: np.ndarray, grid_old: Grid, Q_old: np.ndarray) -> np.ndarray:
    out = np.empty((len(phi_new), Q_old.shape[1]))
    for j in range(Q_old.shape[1]):
        out[:, j] = np.interp(phi_new, grid_old.phi_nodes, Q_old[:, j])
    return out


def _finish(field, zeta, xi, defect, cfg) -> FreeSolution:
    length = _wall_length(field)
    return FreeSolution(
        field=field,
        zeta=zeta,
        xi=xi,
        inlet_defect=defect,
        wall_length=length,
        r_equiv=cfg.R0 - length,
    )


def solve_outlet(
    zeta: float,
    cfg: FlowConfig,
    gas: GasModel,
    consts: DerivedConstants,
    options: SolverOptions | None = None,
) -> FreeSolution | Nonexistence:
    """Shoot the outlet potential xi so the inlet carries exactly the mass
    flux of the arc, for fixed detachment abscissa zeta.

    Returns a FreeSolution, or a Nonexistence record when the defect has no
    root on [zeta, R0 c_l] (see module docstring for the two branches).
    """
    options = options or SolverOptions()
    shoot_tol = options.shoot_tol
    if shoot_tol is None:
        shoot_tol = 1e-8 * cfg.R0 * cfg.vartheta
    cap = consts.zeta_cap
    if zeta >= cap * (1.0 - 1e-12):
        return Nonexistence(
            zeta=zeta,
            reason="detachment-beyond-symmetric",
            defect=math.inf,
            detail=(
                f"zeta = {zeta:.8g} reaches the outlet cap R0 c_l = {cap:.8g}; "
                f"the symmetric detachment point is {consts.zeta_hat:.8g}"
            ),
        )

    def shoot(xi, warm=None):
        field = solve_fixed(zeta, xi, cfg, gas, consts, options, x0=warm)
        return field, inlet_defect(field, gas, cfg)

    lo = zeta
    field_lo, d_lo = shoot(lo)
    if abs(d_lo) <= shoot_tol:
        return _finish(field_lo, zeta, lo, d_lo, cfg)
    if d_lo > shoot_tol:
        return Nonexistence(
            zeta=zeta,
            reason="detachment-beyond-symmetric",
            defect=d_lo,
            detail=(
                f"inlet over-carries by {d_lo:.3e} even at xi = zeta; "
                f"zeta = {zeta:.8g} exceeds the symmetric value "
                f"{consts.zeta_hat:.8g}"
            ),
        )
    hi = cap
    grid_hi = build_grid(zeta, hi, cfg.m, options.n_phi, options.n_psi, phi_cap=cap)
    field_hi, d_hi = shoot(hi, warm=_interp_onto(grid_hi.phi_nodes, field_lo.grid, field_lo.Q))
    if abs(d_hi) <= shoot_tol:
        return _finish(field_hi, zeta, hi, d_hi, cfg)
    if d_hi < -shoot_tol:
        return Nonexistence(
            zeta=zeta,
            reason="outlet-cap-bound",
            defect=d_hi,
            detail=(
                f"inlet under-carries by {-d_hi:.3e} at the outlet cap "
                f"xi = R0 c_l = {cap:.8g}; zeta = {zeta:.8g} is below the "
                "minimal solvable detachment"
            ),
        )

    # Bracketed root: d_lo < -tol < tol < d_hi, defect increasing in xi.
    f_lo, f_hi = field_lo, field_hi
    d = d_hi
    for _ in range(_MAX_SHOOT_ITERS):
        x = lo - d_lo * (hi - lo) / (d_hi - d_lo)
        width = hi - lo
        x = min(max(x, lo + 0.05 * width), hi - 0.05 * width)
        donor = f_lo if (x - lo) <= (hi - x) else f_hi
        grid_x = build_grid(zeta, x, cfg.m, options.n_phi, options.n_psi, phi_cap=cap)
        warm = _interp_onto(grid_x.phi_nodes, donor.grid, donor.Q)
        field, d = shoot(x, warm=warm)
        if abs(d) <= shoot_tol:
            return _finish(field, zeta, x, d, cfg)
        if d < 0.0:
            lo, d_lo, f_lo = x, d, field
        else:
            hi, d_hi, f_hi = x, d, field
        if hi - lo <= 1e-13 * cap:
            return _finish(field, zeta, x, d, cfg)
    raise NonconvergenceError(
        f"outlet shooting did not meet |defect| <= {shoot_tol:.3e} in "
        f"{_MAX_SHOOT_ITERS} iterations (last defect {d:.3e})",
        estimate=d,
    )


# ---------------------------------------------------------------------------
# Minimal detachment abscissa.

_zeta_star_cache: dict[tuple, ZetaStarResult] = {}


def _cache_key(cfg, gas, options, floor, zeta_tol):
    return (
        gas.gamma,
        cfg.R0,
        cfg.vartheta,
        cfg.m,
        cfg.c_e,
        cfg.P_e,
        options.n_phi,
        options.n_psi,
        options.tol,
        options.shoot_tol,
        floor,
        zeta_tol,
    )


def find_zeta_star(
    cfg: FlowConfig,
    gas: GasModel,
    consts: DerivedConstants,
    options: SolverOptions | None = None,
    floor: float | None = None,
    zeta_tol: float | None = None,
) -> ZetaStarResult:
    """Bisect for the smallest detachment abscissa that still admits a flow.

    The search floor defaults to 1e-3 * zeta_hat: if even the floor is
    solvable the result is reported as zeta_star = 0.0 with
    ``floor_limited`` set (the family extends to arbitrarily small zeta as
    far as this resolution can see).  Results are cached per configuration
    so classification queries stay consistent with each other.
    """
    options = options or SolverOptions()
    if floor is None:
        floor = 1e-3 * consts.zeta_hat
    if zeta_tol is None:
        zeta_tol = 1e-3 * consts.zeta_hat
    key = _cache_key(cfg, gas, options, floor, zeta_tol)
    hit = _zeta_star_cache.get(key)
    if hit is not None:
        return hit

    def probe(z):
        return solve_outlet(z, cfg, gas, consts, options)

    sol_floor = probe(floor)
    if isinstance(sol_floor, FreeSolution):
        cap_binding = abs(sol_floor.xi - consts.zeta_cap) <= 1e-6 * consts.zeta_cap
        result = ZetaStarResult(
            zeta_star=0.0,
            cap_binding=cap_binding,
            floor_limited=True,
            xi_at_star=sol_floor.xi,
            r_equiv_at_star=sol_floor.r_equiv,
        )
        _zeta_star_cache[key] = result
        return result

    lo = floor  # unsolvable
    lo_reason = sol_floor.reason
    hi = consts.zeta_hat  # solvable by the symmetric construction
    sol_hi = probe(hi)
    if not isinstance(sol_hi, FreeSolution):
        raise NonconvergenceError(
            "the symmetric detachment abscissa itself failed to solve; "
            "resolution too coarse for this configuration"
        )
    while hi - lo > zeta_tol:
        mid = 0.5 * (lo + hi)
        sol = probe(mid)
        if isinstance(sol, FreeSolution):
            hi, sol_hi = mid, sol
        else:
            lo, lo_reason = mid, sol.reason
    if hi >= consts.zeta_hat:
        raise NonconvergenceError(
            "minimal-detachment search found nothing solvable strictly below "
            "the symmetric abscissa; the threshold must satisfy "
            "zeta_star < zeta_hat"
        )
    cap_binding = lo_reason == "outlet-cap-bound"
    result = ZetaStarResult(
        zeta_star=hi,
        cap_binding=cap_binding,
        floor_limited=False,
        xi_at_star=sol_hi.xi,
        r_equiv_at_star=sol_hi.r_equiv,
    )
    _zeta_star_cache[key] = result
    return result


# ---------------------------------------------------------------------------
# Radius matching.


def match_R(
    R: float,
    cfg: FlowConfig,
    gas: GasModel,
    consts: DerivedConstants,
    options: SolverOptions | None = None,
    match_tol: float = 1e-7,
) -> FreeSolution:
    """Pick the detachment abscissa whose wetted wall length equals R0 - R.

    The wall length grows from ~0 (zeta -> 0) to R0 - R_hat at the symmetric
    detachment, so the achievable radii are (r_star, R0) with r_star just
    under R0 when every zeta is solvable and R_hat the lower endpoint.
    Radii at or below R_hat raise LongNozzleError, radii at or above the
    achievable maximum raise ShortNozzleError; both carry (r_hat, r_star).
    """
    options = options or SolverOptions()
    if not (0.0 < R < cfg.R0):
        raise ConstraintError(f"need 0 < R < R0 = {cfg.R0}, got R = {R}")
    target = cfg.R0 - R

    zs = find_zeta_star(cfg, gas, consts, options)
    floor = 1e-3 * consts.zeta_hat
    z_lo = max(zs.zeta_star, floor)
    sol_lo = solve_outlet(z_lo, cfg, gas, consts, options)
    if not isinstance(sol_lo, FreeSolution):
        # zeta_star was resolved only to zeta_tol; nudge up until solvable.
        z = z_lo
        for _ in range(60):
            z = min(z * 1.5, consts.zeta_hat)
            sol_lo = solve_outlet(z, cfg, gas, consts, options)
            if isinstance(sol_lo, FreeSolution):
                z_lo = z
                break
        else:
            raise NonconvergenceError("no solvable zeta found above zeta_star")
    sol_hi = solve_outlet(consts.zeta_hat, cfg, gas, consts, options)
    if not isinstance(sol_hi, FreeSolution):
        raise NonconvergenceError(
            "the symmetric detachment abscissa itself failed to solve"
        )
    r_hat = consts.R_hat
    r_star = sol_lo.r_equiv
    # Wall length is monotone in zeta; detect the direction rather than
    # assume it (it increases with zeta: longer wetted wall).
    increasing = sol_hi.wall_length >= sol_lo.wall_length
    L_min = min(sol_lo.wall_length, sol_hi.wall_length)
    L_max = max(sol_lo.wall_length, sol_hi.wall_length)
    # Endpoint radii are only known up to the discretization error of the
    # wall-length quadrature, so classification at the endpoints uses a
    # grid-aware tolerance; interior root finding keeps the tight one.
    gh = consts.zeta_hat / options.n_phi
    k = cfg.m / options.n_psi
    gate_tol = max(match_tol, 0.1 * (gh * gh + k * k))
    if abs(sol_hi.wall_length - target) <= gate_tol:
        return sol_hi
    if abs(sol_lo.wall_length - target) <= gate_tol:
        return sol_lo
    if target > L_max + gate_tol:
        raise LongNozzleError(
            f"nozzle radius {R} demands a wetted wall of length {target:.8g}, "
            f"longer than the symmetric maximum {L_max:.8g} "
            f"(smallest matchable radius {cfg.R0 - L_max:.8g})",
            r_hat=r_hat,
            r_star=r_star,
        )
    if target < L_min - gate_tol:
        raise ShortNozzleError(
            f"nozzle radius {R} demands a wetted wall of length {target:.8g}, "
            f"shorter than any solvable detachment provides "
            f"(largest matchable radius {cfg.R0 - L_min:.8g})",
            r_hat=r_hat,
            r_star=r_star,
        )

    # G(z) = s * (L(z) - target) is increasing in z with G(lo) < 0 < G(hi).
    s = 1.0 if increasing else -1.0
    lo_z, hi_z = z_lo, consts.zeta_hat
    G_lo = s * (sol_lo.wall_length - target)
    G_hi = s * (sol_hi.wall_length - target)
    for _ in range(_MAX_SHOOT_ITERS):
        width = hi_z - lo_z
        if math.isfinite(G_lo) and math.isfinite(G_hi):
            z = lo_z - G_lo * width / (G_hi - G_lo)
            z = min(max(z, lo_z + 0.02 * width), hi_z - 0.02 * width)
        else:
            z = 0.5 * (lo_z + hi_z)
        sol = solve_outlet(z, cfg, gas, consts, options)
        if not isinstance(sol, FreeSolution):
            # unsolvable pocket at small zeta: shrink the bracket from below
            lo_z, G_lo = z, -math.inf
            continue
        g_true = sol.wall_length - target
        if abs(g_true) <= match_tol:
            return sol
        if s * g_true < 0.0:
            lo_z, G_lo = z, s * g_true
        else:
            hi_z, G_hi = z, s * g_true
        if hi_z - lo_z <= 1e-13 * consts.zeta_hat:
            return sol
    raise NonconvergenceError(
        f"radius matching did not reach |wall_length - (R0 - R)| <= "
        f"{match_tol:.1e} in {_MAX_SHOOT_ITERS} iterations"
    )


def classify_radius(
    R: float,
    cfg: FlowConfig,
    gas: GasModel,
    consts: DerivedConstants,
    options: SolverOptions | None = None,
) -> ClassifyResult:
    """Existence trichotomy for a nozzle of radius R: a flow exists, or the
    nozzle is too long (R below the symmetric detachment radius), or too
    short (R above every achievable equivalent radius)."""
    if R <= 0.0:
        raise ConstraintError(f"need a positive nozzle radius, got R = {R}")
    if R >= cfg.R0:
        # No jet is as wide as the inlet itself, so any such radius demands
        # a non-positive wetted wall: too short for every detachment.
        zs = find_zeta_star(cfg, gas, consts, options)
        return ClassifyResult(
            "NO_SOLUTION_SHORT", r_hat=consts.R_hat, r_star=zs.r_equiv_at_star
        )
    try:
        sol = match_R(R, cfg, gas, consts, options)
    except LongNozzleError as err:
        return ClassifyResult("NO_SOLUTION_LONG", r_hat=err.r_hat, r_star=err.r_star)
    except ShortNozzleError as err:
        return ClassifyResult("NO_SOLUTION_SHORT", r_hat=err.r_hat, r_star=err.r_star)
    zs = find_zeta_star(cfg, gas, consts, options)
    return ClassifyResult(
        "EXISTS",
        r_hat=consts.R_hat,
        r_star=zs.r_equiv_at_star,
        zeta=sol.zeta,
        xi=sol.xi,
        wall_length=sol.wall_length,
    )


# ---------------------------------------------------------------------------
# Parameter sweep.


@lru_cache(maxsize=4)
def _worker_gas(gamma: float) -> GasModel:
    return GasModel(gamma)


def _sweep_one(args):
    (gamma, r0, vartheta, m, c_e, p_e, zeta, n_phi, n_psi, tol, shoot_tol) = args
    gas = _worker_gas(gamma)
    cfg = FlowConfig(R0=r0, vartheta=vartheta, m=m, c_e=c_e, P_e=p_e)
    consts = derive_constants(gas, cfg)
    options = SolverOptions(n_phi=n_phi, n_psi=n_psi, tol=tol, shoot_tol=shoot_tol)
    try:
        sol = solve_outlet(zeta, cfg, gas, consts, options)
    except (NonconvergenceError, ConstraintError) as err:
        return SweepRow(zeta, math.nan, math.nan, math.nan, math.nan, "error", str(err))
    if isinstance(sol, Nonexistence):
        return SweepRow(
            zeta, math.nan, math.nan, math.nan, math.nan, "no-solution", sol.reason
        )
    return SweepRow(
        zeta, sol.xi, sol.wall_length, sol.r_equiv, sol.sup_phi, "ok", ""
    )


def sweep_zeta(
    count: int,
    cfg: FlowConfig,
    gas: GasModel,
    consts: DerivedConstants,
    options: SolverOptions | None = None,
    floor: float | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Solve the free problem on a geometric ladder of detachment abscissas
    from ``floor`` (default 0.02 * zeta_hat) up to the symmetric value.

    Rows that fail keep their place in the table with a status of
    "no-solution" (typed nonexistence) or "error" (solver failure).  With no
    explicit floor the ladder starts at max(zeta_star, 0.02 * zeta_hat),
    using the cached minimal-detachment search."""
    if count < 3:
        raise ConstraintError(f"sweep needs count >= 3, got {count}")
    options = options or SolverOptions()
    if floor is None:
        zs = find_zeta_star(cfg, gas, consts, options)
        floor = max(zs.zeta_star, 0.02 * consts.zeta_hat)
    if not (0.0 < floor < consts.zeta_hat):
        raise ConstraintError(
            f"sweep floor must lie in (0, zeta_hat), got {floor}"
        )
    zetas = np.geomspace(floor, consts.zeta_hat, count)
    argsets = [
        (
            gas.gamma,
            cfg.R0,
            cfg.vartheta,
            cfg.m,
            cfg.c_e,
            cfg.P_e,
            float(z),
            options.n_phi,
            options.n_psi,
            options.tol,
            options.shoot_tol,
        )
        for z in zetas
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_one, argsets))
    return [_sweep_one(a) for a in argsets]

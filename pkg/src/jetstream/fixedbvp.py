"""Fixed-geometry stream problem: given detachment point zeta and outlet
potential xi, solve the quasilinear equation

    d2Q/dphi2 + d2F(Q)/dpsi2 = 0,   Q = A(q),  F = B o A^{-1}

on (0, xi) x (0, m) with a nonlinear inlet flux condition dQ/dphi = G(Q)
(G = 1/(R0 q rho)), zero transverse flux on the axis psi=0 and on the wetted
wall psi=m, phi < zeta, and Dirichlet data Q = A(c_e) on the free part of the
top boundary and on the outlet column.

Discretization: cell-centered finite-volume form of the 5-point scheme on a
tensor grid, uniform in psi and piecewise-uniform in phi with zeta pinned to a
node.  Boundary rows eliminate mirror ghosts through the flux faces, which
keeps every row second-order accurate *and* keeps the Newton matrix a Z-matrix
so an M-matrix certificate can be asserted at each factorization (a literal
one-sided 3-point boundary row would put a wrong-signed entry in the matrix).
The certificate is a weighted-column dominance test with weight
w(phi) = xi + eps - phi: flux columns telescope to exact zero, the inlet
columns absorb the Robin term iff R0 * min q(0, psi) >= xi (the coercivity
margin sets eps), and columns adjacent to Dirichlet data stay strictly
dominant, chaining the rest.

Newton iterates are clamped to [A(q_floor), A(c_e)] and damped by halving down
to 2**-20.  Convergence is measured on the residual in PDE-density units
(finite-volume row divided by its cell measure); the stated tolerance is
floored by a per-grid roundoff estimate ~ eps * (|Q|/h^2 + |F|/k^2), the
attainable level of that norm in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import ConstraintError, NonconvergenceError, SingularSystemError
from .gasdyn import (
    DerivedConstants,
    FlowConfig,
    GasModel,
    Q_FLOOR_FRAC,
    flux_A,
    _c_e_from_pressure,
)


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor grid in the potential-stream rectangle [0, xi] x [0, m].

    phi_nodes is uniform on [0, zeta] and on [zeta, xi] separately with zeta
    pinned at ``zeta_index``; psi_nodes is uniform.  zeta == xi (symmetric
    geometry) puts zeta_index at the outlet column.
    """

    zeta: float
    xi: float
    m: float
    phi_nodes: np.ndarray
    psi_nodes: np.ndarray
    zeta_index: int

    @property
    def n_phi(self) -> int:
        return len(self.phi_nodes) - 1

    @property
    def n_psi(self) -> int:
        return len(self.psi_nodes) - 1


@dataclass(frozen=True, eq=False)
class SpeedField:
    """A solved (or injected) field on a Grid: Q = A(q) and the speed q at
    every node, plus the Newton diagnostics of the solve that produced it."""

    grid: Grid
    Q: np.ndarray
    q: np.ndarray
    residual_norm: float
    newton_iters: int


@dataclass(frozen=True)
class SolverOptions:
    """Resolution and iteration knobs shared by the fixed and free solvers."""

    n_phi: int = 128
    n_psi: int = 64
    tol: float = 1e-10
    max_iters: int = 100
    shoot_tol: float | None = None  # None -> 1e-8 * R0 * vartheta
    damping_floor: float = 2.0**-20
    picard_max: int = 80


def build_grid(
    zeta: float,
    xi: float,
    m: float,
    n_phi: int,
    n_psi: int,
    phi_cap: float | None = None,
) -> Grid:
    """Construct the solver grid for a (zeta, xi) geometry.

    n_phi/n_psi are cell counts (node counts are one larger).  n_phi is split
    between the two phi segments proportionally, each segment keeping at least
    4 cells and the spacing ratio within [1/2, 2]; honoring those floors can
    push the total cell count above n_phi.  ``phi_cap`` (R0 c_l when the
    caller knows it) enforces the solvability bound xi <= phi_cap.
    """
    if not zeta > 0.0:
        raise ConstraintError(f"need 0 < zeta, got zeta={zeta}")
    if not zeta <= xi * (1.0 + 1e-14):
        raise ConstraintError(f"need zeta <= xi, got zeta={zeta} > xi={xi}")
    if phi_cap is not None and xi > phi_cap * (1.0 + 1e-12):
        raise ConstraintError(f"need xi <= R0 c_l = {phi_cap}, got xi={xi}")
    if n_phi < 16:
        raise ConstraintError(f"n_phi must be >= 16, got {n_phi}")
    if n_psi < 8:
        raise ConstraintError(f"n_psi must be >= 8, got {n_psi}")
    psi_nodes = np.linspace(0.0, m, n_psi + 1)
    if xi - zeta <= 1e-14 * xi:
        phi_nodes = np.linspace(0.0, xi, n_phi + 1)
        return Grid(zeta, xi, m, phi_nodes, psi_nodes, n_phi)
    n1 = int(round(n_phi * zeta / xi))
    n1 = min(max(n1, 4), n_phi - 4)
    n2 = n_phi - n1
    # Bump a segment's count until the spacings differ by at most a factor 2.
    while (zeta / n1) / ((xi - zeta) / n2) > 2.0:
        n1 += 1
    while ((xi - zeta) / n2) / (zeta / n1) > 2.0:
        n2 += 1
    left = np.linspace(0.0, zeta, n1 + 1)
    right = np.linspace(zeta, xi, n2 + 1)
    phi_nodes = np.concatenate([left, right[1:]])
    return Grid(zeta, xi, m, phi_nodes, psi_nodes, n1)


def _resolve_c_e(gas: GasModel, cfg: FlowConfig) -> float:
    return cfg.c_e if cfg.c_e is not None else _c_e_from_pressure(gas, cfg.P_e)


class _Operator:
    """Vectorized residual/Jacobian assembly for one grid.

    ``fixed_inlet_flux`` switches the inlet condition from the nonlinear
    Robin coupling G(Q) to a prescribed flux profile (the Picard map).
    """

    def __init__(self, grid, gas, cfg, a_ce, q_floor, fixed_inlet_flux=None):
        self.grid = grid
        self.gas = gas
        self.cfg = cfg
        self.a_ce = a_ce
        self.q_floor = q_floor
        self.a_floor = float(gas.fast_A(q_floor))
        self.fixed_inlet_flux = fixed_inlet_flux

        phi, psi = grid.phi_nodes, grid.psi_nodes
        np_, nq = grid.n_phi, grid.n_psi
        iz = grid.zeta_index
        self.k = float(psi[1] - psi[0])
        h_face = np.diff(phi)

        free = np.ones((np_ + 1, nq + 1), dtype=bool)
        free[np_, :] = False
        free[iz:, nq] = False
        self.free = free
        idx = np.full((np_ + 1, nq + 1), -1, dtype=np.int64)
        idx[free] = np.arange(int(free.sum()))
        self.idx = idx
        ii, jj = np.nonzero(free)  # row-major == phi-major ordering
        self.ii, self.jj = ii, jj
        self.n_free = len(ii)

        self.at_inlet = ii == 0
        self.has_S = jj > 0
        self.has_N = jj < nq
        self.hE = h_face[ii]
        self.hW = np.where(ii > 0, h_face[np.maximum(ii - 1, 0)], 1.0)
        self.dphi = np.where(ii > 0, 0.5 * (self.hW + self.hE), 0.5 * self.hE)
        self.dpsi = np.where((jj == 0) | (jj == nq), 0.5 * self.k, self.k)
        self.cell = self.dphi * self.dpsi

        self.jjN = np.minimum(jj + 1, nq)
        self.jjS = np.maximum(jj - 1, 0)
        self.pW = np.where(ii > 0, idx[np.maximum(ii - 1, 0), jj], -1)
        self.pE = idx[ii + 1, jj]
        self.pN = np.where(self.has_N, idx[ii, self.jjN], -1)
        self.pS = np.where(self.has_S, idx[ii, self.jjS], -1)
        self.p = np.arange(self.n_free)
        self.phi_of_p = phi[ii]
        # Roundoff floor of the density-norm residual on this grid.
        self.h_min = float(h_face.min())

    def expand(self, vec):
        Qfull = np.full((self.grid.n_phi + 1, self.grid.n_psi + 1), self.a_ce)
        Qfull[self.free] = vec
        return Qfull

    def _robin_flux(self, QC_inlet):
        """Inlet face flux: G(Q) = 1/(R0 q rho(q^2)), or the prescribed profile."""
        if self.fixed_inlet_flux is not None:
            return self.fixed_inlet_flux[self.jj[self.at_inlet]]
        q0 = self.gas.fast_q_of_A(QC_inlet)
        return 1.0 / (self.cfg.R0 * q0 * self.gas.rho(q0))

    def residual(self, Qfull):
        """Finite-volume residual over free nodes (cell-integrated units)."""
        F = self.gas.fast_F_of_A(Qfull)
        ii, jj = self.ii, self.jj
        QC = Qfull[ii, jj]
        flux_e = self.dpsi * (Qfull[ii + 1, jj] - QC) / self.hE
        flux_w = np.zeros_like(QC)
        inner = ~self.at_inlet
        flux_w[inner] = (
            self.dpsi[inner]
            * (QC[inner] - Qfull[ii[inner] - 1, jj[inner]])
            / self.hW[inner]
        )
        flux_w[self.at_inlet] = self.dpsi[self.at_inlet] * self._robin_flux(
            QC[self.at_inlet]
        )
        r = flux_e - flux_w
        FC = F[ii, jj]
        rn = self.dphi * (F[ii, self.jjN] - FC) / self.k
        rs = self.dphi * (FC - F[ii, self.jjS]) / self.k
        r += np.where(self.has_N, rn, 0.0)
        r -= np.where(self.has_S, rs, 0.0)
        return r

    def density_norm(self, r):
        return float(np.max(np.abs(r) / self.cell))

    def roundoff_floor(self, Qfull):
        # Density-norm rows divide second differences by cell spacings, so
        # assembly roundoff is amplified by 1/h^2; the constant covers the
        # row-term count and observed cancellation on extreme-aspect grids.
        qmax = float(np.max(np.abs(Qfull)))
        fmax = float(np.max(np.abs(self.gas.fast_F_of_A(Qfull))))
        eps = np.finfo(float).eps
        return 64.0 * eps * (qmax / self.h_min**2 + fmax / self.k**2)

    def newton_matrix(self, Qfull):
        """Assemble M = -J in band storage and certify it is an M-matrix.

        Returns (BandedSystem with rhs unset, diag, offdiag scatter data).
        """
        gas = self.gas
        ii, jj = self.ii, self.jj
        QC = Qfull[ii, jj]
        fpC = gas.fast_Fprime_of_A(QC)
        if np.any(fpC <= 0.0):
            raise SingularSystemError("flux slope F' lost positivity (supersonic state)")
        diag = self.dpsi / self.hE + self.dphi * fpC * (
            self.has_N.astype(float) + self.has_S.astype(float)
        ) / self.k
        inner = ~self.at_inlet
        diag[inner] += self.dpsi[inner] / self.hW[inner]
        alpha = np.zeros_like(diag)
        if self.fixed_inlet_flux is None:
            q0 = gas.fast_q_of_A(QC[self.at_inlet])
            alpha[self.at_inlet] = 1.0 / (self.cfg.R0 * q0)
            diag[self.at_inlet] -= self.dpsi[self.at_inlet] * alpha[self.at_inlet]

        mW = self.pW >= 0
        mE = self.pE >= 0
        mN = self.has_N & (self.pN >= 0)
        mS = self.has_S & (self.pS >= 0)
        vW = -self.dpsi / self.hW
        vE = -self.dpsi / self.hE
        fpN = gas.fast_Fprime_of_A(Qfull[ii, self.jjN])
        fpS = gas.fast_Fprime_of_A(Qfull[ii, self.jjS])
        vN = -self.dphi * fpN / self.k
        vS = -self.dphi * fpS / self.k

        # --- M-matrix certificate: weighted column sums with w = xi + eps - phi.
        if self.fixed_inlet_flux is None and np.any(self.at_inlet):
            q_min = float(np.min(gas.fast_q_of_A(QC[self.at_inlet])))
            margin = self.cfg.R0 * q_min - self.grid.xi
            if margin < -1e-9 * self.grid.xi:
                raise SingularSystemError(
                    "inlet coercivity lost: R0 * min q(0,psi) = "
                    f"{self.cfg.R0 * q_min:.6g} < xi = {self.grid.xi:.6g}"
                )
            eps = max(1e-12 * self.grid.xi, margin)
        else:
            eps = self.grid.xi
        w = self.grid.xi + eps - self.phi_of_p
        colsum = w * diag
        np.add.at(colsum, self.pW[mW], (w * vW)[mW])
        np.add.at(colsum, self.pE[mE], (w * vE)[mE])
        np.add.at(colsum, self.pN[mN], (w * vN)[mN])
        np.add.at(colsum, self.pS[mS], (w * vS)[mS])
        scale = float(np.max(w * diag))
        if float(colsum.min()) < -1e-9 * scale:
            raise SingularSystemError(
                f"M-matrix certificate failed: weighted column sum "
                f"{float(colsum.min()):.3e} below -1e-9 * {scale:.3e}"
            )
        if float(colsum.max()) <= 0.0:
            raise SingularSystemError(
                "M-matrix certificate failed: no strictly dominant column"
            )

        nb = self.grid.n_psi + 1
        ab = np.zeros((2 * nb + 1, self.n_free))
        ab[nb, :] = diag
        for mask, ptr, vals in (
            (mW, self.pW, vW),
            (mE, self.pE, vE),
            (mN, self.pN, vN),
            (mS, self.pS, vS),
        ):
            dp = self.p[mask] - ptr[mask]
            ab[nb + dp, ptr[mask]] = vals[mask]
        return numerics.BandedSystem(self.n_free, nb, nb, ab, np.zeros(self.n_free))


def _newton_solve(op: _Operator, Qfull0, tol, max_iters, damping_floor):
    """Damped Newton on the finite-volume system; returns (Qfull, norm, iters)."""
    Qfull = Qfull0.copy()
    Qfull[op.free] = np.clip(Qfull[op.free], op.a_floor, op.a_ce)
    r = op.residual(Qfull)
    norm = op.density_norm(r)
    tol_eff = max(tol, op.roundoff_floor(Qfull))
    for it in range(1, max_iters + 1):
        if norm <= tol_eff:
            return Qfull, norm, it - 1
        sys = op.newton_matrix(Qfull)
        sys.rhs = r
        delta = numerics.solve_banded(sys)
        lam = 1.0
        vec = Qfull[op.free]
        while True:
            trial = np.clip(vec + lam * delta, op.a_floor, op.a_ce)
            Qtrial = Qfull.copy()
            Qtrial[op.free] = trial
            r_trial = op.residual(Qtrial)
            norm_trial = op.density_norm(r_trial)
            if norm_trial <= (1.0 - 0.25 * lam) * norm or norm_trial <= tol_eff:
                Qfull, r, norm = Qtrial, r_trial, norm_trial
                break
            lam *= 0.5
            if lam < damping_floor:
                raise NonconvergenceError(
                    f"Newton line search stalled at residual {norm:.3e} "
                    f"(tol {tol_eff:.3e})",
                    estimate=norm,
                )
    if norm <= tol_eff:
        return Qfull, norm, max_iters
    raise NonconvergenceError(
        f"Newton did not reach {tol_eff:.3e} in {max_iters} iterations "
        f"(residual {norm:.3e})",
        estimate=norm,
    )


def _subsolution_init(grid, a_ce, c_l, rho_l, R0):
    slope = 1.0 / (R0 * c_l * rho_l)
    prof = a_ce - (grid.xi - grid.phi_nodes) * slope
    return np.repeat(prof[:, None], grid.n_psi + 1, axis=1)


def solve_fixed(
    zeta: float,
    xi: float,
    cfg: FlowConfig,
    gas: GasModel,
    consts: DerivedConstants,
    options: SolverOptions | None = None,
    x0: np.ndarray | None = None,
) -> SpeedField:
    """Solve the fixed-(zeta, xi) stream problem on a fresh grid.

    The initial iterate is the linear subsolution
    Q0 = A(c_e) - (xi - phi) / (R0 c_l rho(c_l^2)) unless ``x0`` provides a
    warm start of matching shape.  The converged field satisfies the Dirichlet
    data exactly, stays inside [A(c_l), A(c_e)] (admissible configurations),
    and is monotone in both coordinates to 1e-8.
    """
    options = options or SolverOptions()
    grid = build_grid(
        zeta, xi, cfg.m, options.n_phi, options.n_psi, phi_cap=consts.zeta_cap
    )
    a_ce = flux_A(gas, consts.c_e)
    q_floor = max(Q_FLOOR_FRAC * gas.c_star, 0.5 * consts.c_l)
    op = _Operator(grid, gas, cfg, a_ce, q_floor)
    if x0 is not None and x0.shape == (grid.n_phi + 1, grid.n_psi + 1):
        Q0 = x0.copy()
        Q0[~op.free] = a_ce
    else:
        Q0 = _subsolution_init(grid, a_ce, consts.c_l, float(gas.rho(consts.c_l)), cfg.R0)
        Q0[~op.free] = a_ce
    Qfull, norm, iters = _newton_solve(
        op, Q0, options.tol, options.max_iters, options.damping_floor
    )
    q = np.asarray(gas.fast_q_of_A(Qfull))
    q[~op.free] = consts.c_e
    field = SpeedField(grid=grid, Q=Qfull, q=q, residual_norm=norm, newton_iters=iters)
    _post_checks(field, consts)
    return field


def _post_checks(field: SpeedField, consts: DerivedConstants):
    q = field.q
    if consts.admissible:
        if float(q.min()) < consts.c_l - 1e-6:
            raise ConstraintError(
                f"speed fell below c_l by {consts.c_l - float(q.min()):.3e}"
            )
    if float(q.max()) > consts.c_e + 1e-9:
        raise ConstraintError(
            f"speed exceeded c_e by {float(q.max()) - consts.c_e:.3e}"
        )
    slack = 1e-8
    if field.grid.n_phi >= 2 and float(np.diff(q, axis=0).min()) < -slack:
        raise ConstraintError("speed lost monotonicity along phi")
    if field.grid.n_psi >= 2 and float(np.diff(q, axis=1).min()) < -slack:
        raise ConstraintError("speed lost monotonicity along psi")


def assemble_residual(field: SpeedField, gas: GasModel, cfg: FlowConfig) -> np.ndarray:
    """Nodewise residual of the discrete system in classical (non-FV) units.

    Interior nodes report the centered second-difference form
    D2_phi Q + D2_psi F(Q); inlet nodes report the flux-corrected Robin row
    (Q_1j - Q_0j)/h - G(Q_0j) + (h/2) D2_psi F (so a constant field Q = A(c_e)
    yields exactly -1/(R0 c_e rho(c_e^2))); axis/wall nodes the mirrored
    transverse-flux rows; Dirichlet nodes report Q - A(c_e).  Every row reads
    at most 5 nodes.
    """
    grid = field.grid
    c_e = _resolve_c_e(gas, cfg)
    a_ce = flux_A(gas, c_e)
    q_floor = max(Q_FLOOR_FRAC * gas.c_star, 1e-3)
    op = _Operator(grid, gas, cfg, a_ce, q_floor)
    r = op.residual(field.Q)
    out = np.empty_like(field.Q)
    out[:] = field.Q - a_ce  # Dirichlet rows
    # Inlet rows carry 1/dpsi units, transverse-flux rows 1/dphi, interior
    # rows the full density normalization.
    norm = np.where(
        op.at_inlet,
        op.dpsi,
        np.where(op.has_N & op.has_S, op.cell, op.dphi),
    )
    out[op.free] = r / norm
    return out


def picard_T(
    g,
    zeta: float,
    xi: float,
    cfg: FlowConfig,
    gas: GasModel,
    options: SolverOptions | None = None,
) -> np.ndarray:
    """One application of the inlet-profile map: solve the auxiliary problem
    with the inlet flux held at the profile 1/(R0 g rho(g^2)) and return the
    resulting inlet speed trace q(0, psi).

    ``g`` may be a callable of psi, a scalar, or an array over the psi nodes,
    with values in [c_l, c*).  Fixed points of this map coincide with
    solutions of the coupled problem (the Robin inlet condition).
    """
    from .gasdyn import derive_constants

    options = options or SolverOptions()
    consts = derive_constants(gas, cfg)
    grid = build_grid(
        zeta, xi, cfg.m, options.n_phi, options.n_psi, phi_cap=consts.zeta_cap
    )
    psi = grid.psi_nodes
    if callable(g):
        trace = np.array([float(g(p)) for p in psi])
    else:
        trace = np.broadcast_to(np.asarray(g, dtype=float), psi.shape).copy()
    if not (np.all(trace >= consts.c_l - 1e-12) and np.all(trace < gas.c_star)):
        raise ConstraintError("inlet profile must lie in [c_l, c*)")
    a_ce = flux_A(gas, consts.c_e)
    q_floor = max(Q_FLOOR_FRAC * gas.c_star, 0.5 * consts.c_l)
    flux = 1.0 / (cfg.R0 * trace * np.asarray(gas.rho(trace)))
    op = _Operator(grid, gas, cfg, a_ce, q_floor, fixed_inlet_flux=flux)
    Q0 = _subsolution_init(grid, a_ce, consts.c_l, float(gas.rho(consts.c_l)), cfg.R0)
    Q0[~op.free] = a_ce
    Qfull, _, _ = _newton_solve(
        op, Q0, options.tol, options.max_iters, options.damping_floor
    )
    return np.asarray(gas.fast_q_of_A(Qfull[0, :]))


def corner_exponent(field: SpeedField) -> float:
    """Fitted growth exponent of |Q - A(c_e)| along the ray phi = zeta.

    Samples at dyadic distances d = k, 2k, 4k, ... below the detachment corner
    (zeta, m), capped at half the distance to the nearest other boundary;
    needs at least 5 dyadic levels, otherwise the resolution is insufficient.
    A symmetric field has no detachment corner and is rejected.
    """
    grid = field.grid
    iz = grid.zeta_index
    if iz >= grid.n_phi:
        raise ConstraintError("symmetric field (zeta == xi) has no detachment corner")
    k = float(grid.psi_nodes[1] - grid.psi_nodes[0])
    # Samples must stay inside the corner-dominated region: within half the
    # distance to the inlet and the axis along the sampling ray, and within
    # the (d-independent) phi-distance to the outlet column.
    d_max = min(0.5 * grid.m, 0.5 * grid.zeta, grid.xi - grid.zeta)
    a_ce = float(field.Q[grid.n_phi, 0])
    samples = []
    level = 0
    while True:
        step = 2**level
        d = step * k
        if d > d_max or step > grid.n_psi:
            break
        val = a_ce - float(field.Q[iz, grid.n_psi - step])
        if val <= 0.0:
            raise ConstraintError(
                f"nonpositive corner increment at distance {d}; field not usable"
            )
        samples.append((d, val))
        level += 1
    if len(samples) < 5:
        raise ConstraintError(
            f"insufficient resolution near the corner: {len(samples)} dyadic "
            "levels available, need 5"
        )
    return numerics.fit_power_exponent(samples)

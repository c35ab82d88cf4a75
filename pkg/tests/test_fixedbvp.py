"""Grid construction, finite-volume operator, Newton solver, Picard map."""

from unittest import mock

import numpy as np
import pytest

import jetstream as js
import oracle_data as od
from jetstream import errors, numerics
from jetstream.fixedbvp import _Operator


def _manufactured_Q(gas, phi, psi, xi, m):
    """Smooth field with mid-subsonic speeds, nontrivial in both variables."""
    a_lo = float(gas.fast_A(0.40))
    a_hi = float(gas.fast_A(0.75))
    P, S = np.meshgrid(phi, psi, indexing="ij")
    shape = 0.55 + 0.35 * (P / xi) + 0.08 * np.sin(np.pi * P / xi) * np.cos(
        np.pi * S / m
    )
    return a_lo + (a_hi - a_lo) * shape


def _field_from_Q(gas, grid, Q):
    q = gas.fast_q_of_A(Q)
    return js.SpeedField(grid=grid, Q=Q, q=q, residual_norm=0.0, newton_iters=0)


# ---------------------------------------------------------------------------
# build_grid


def test_build_grid_symmetric_uniform(consts):
    zh = consts.zeta_hat
    g = js.build_grid(zh, zh, od.M_FLUX, 64, 32)
    assert g.zeta_index == 64
    assert g.n_phi == 64 and g.n_psi == 32
    assert np.allclose(np.diff(g.phi_nodes), zh / 64, rtol=1e-14)
    assert g.phi_nodes[0] == 0.0 and abs(g.phi_nodes[-1] - zh) < 1e-15
    assert abs(g.psi_nodes[-1] - od.M_FLUX) < 1e-15


def test_build_grid_asymmetric_split():
    g = js.build_grid(0.06, 0.11, 0.25, 64, 32)
    iz = g.zeta_index
    assert abs(g.phi_nodes[iz] - 0.06) < 1e-15
    assert abs(g.phi_nodes[-1] - 0.11) < 1e-15
    h1 = 0.06 / iz
    h2 = (0.11 - 0.06) / (g.n_phi - iz)
    assert iz >= 4 and g.n_phi - iz >= 4
    assert 0.5 <= h1 / h2 <= 2.0


def test_build_grid_extreme_ratio_still_legal():
    # zeta tiny relative to xi: segment minimums and the spacing-ratio rule
    # force extra cells rather than an illegal grid.
    g = js.build_grid(0.001, 0.2, 0.25, 64, 32)
    iz = g.zeta_index
    h1 = 0.001 / iz
    h2 = (0.2 - 0.001) / (g.n_phi - iz)
    assert iz >= 4 and g.n_phi - iz >= 4
    assert 0.5 <= h1 / h2 <= 2.0


def test_build_grid_validation():
    with pytest.raises(errors.ConstraintError):
        js.build_grid(-0.01, 0.1, 0.25, 64, 32)
    with pytest.raises(errors.ConstraintError):
        js.build_grid(0.12, 0.1, 0.25, 64, 32)
    with pytest.raises(errors.ConstraintError):
        js.build_grid(0.05, 0.3, 0.25, 64, 32, phi_cap=od.ZETA_CAP)
    with pytest.raises(errors.ConstraintError):
        js.build_grid(0.05, 0.1, 0.25, 8, 32)
    with pytest.raises(errors.ConstraintError):
        js.build_grid(0.05, 0.1, 0.25, 64, 4)


# ---------------------------------------------------------------------------
# Residual operator


def test_constant_exit_field_residual(gas, cfg, consts):
    # Q identically A(c_e): interior and Dirichlet rows vanish exactly and
    # the inlet rows equal the (negative) inlet flux density.
    zh = consts.zeta_hat
    grid = js.build_grid(zh, zh, od.M_FLUX, 32, 16)
    Q = np.full((33, 17), od.A_CE)
    field = _field_from_Q(gas, grid, Q)
    r = js.assemble_residual(field, gas, cfg)
    expected_inlet = -1.0 / (od.R0 * od.C_E * od.RHO_CE)
    assert np.max(np.abs(r[1:, :])) < 1e-14
    assert np.max(np.abs(r[0, :] - expected_inlet)) < 1e-12


def test_interior_residual_second_order(gas, cfg):
    # Richardson: on nested uniform grids the interior density residual of a
    # fixed smooth field differs between levels by O(h^2).
    xi, m = 0.12, od.M_FLUX
    zeta = xi / 2.0  # n1 = n/2 exactly: fully uniform nested grids
    levels = [16, 32, 64, 128, 256]
    res = {}
    for n in levels:
        grid = js.build_grid(zeta, xi, m, n, n // 2)
        Q = _manufactured_Q(gas, grid.phi_nodes, grid.psi_nodes, xi, m)
        res[n] = js.assemble_residual(_field_from_Q(gas, grid, Q), gas, cfg)
    samples = []
    for n in levels[:-1]:
        a, b = res[n], res[2 * n]
        diff = a[1:-1, 1:-1] - b[2:-2:2, 2:-2:2]
        samples.append((xi / n, float(np.max(np.abs(diff)))))
    order = numerics.fit_power_exponent(samples)
    assert order >= 1.8, f"observed interior residual order {order:.3f}"


def test_newton_matrix_matches_directional_derivative(gas, cfg, consts):
    grid = js.build_grid(0.06, 0.11, od.M_FLUX, 32, 16)
    q_floor = max(1e-4 * gas.c_star, 0.5 * consts.c_l)
    op = _Operator(grid, gas, cfg, od.A_CE, q_floor)
    Qfull = _manufactured_Q(gas, grid.phi_nodes, grid.psi_nodes, 0.11, od.M_FLUX)
    Qfull[~op.free] = od.A_CE
    rng = np.random.default_rng(11)
    v = rng.uniform(-1.0, 1.0, op.n_free)
    v /= np.max(np.abs(v))
    eps = 1e-7
    Qp, Qm = Qfull.copy(), Qfull.copy()
    Qp[op.free] += eps * v
    Qm[op.free] -= eps * v
    jv_fd = (op.residual(Qp) - op.residual(Qm)) / (2.0 * eps)
    sys = op.newton_matrix(Qfull)
    jv = -numerics.banded_matvec(sys, v)  # matrix is M = -J
    denom = np.max(np.abs(jv))
    assert np.max(np.abs(jv - jv_fd)) / denom < 1e-6


def test_certificate_rejects_nonpositive_flux_slope(gas, cfg, consts):
    grid = js.build_grid(0.06, 0.11, od.M_FLUX, 32, 16)
    q_floor = max(1e-4 * gas.c_star, 0.5 * consts.c_l)
    op = _Operator(grid, gas, cfg, od.A_CE, q_floor)
    Qfull = np.full((33, 17), od.A_07)
    with mock.patch.object(
        js.GasModel,
        "fast_Fprime_of_A",
        new=lambda self, a: -np.ones_like(np.asarray(a, dtype=float)),
    ):
        with pytest.raises(errors.SingularSystemError):
            op.newton_matrix(Qfull)


def test_certificate_rejects_lost_inlet_coercivity(gas, cfg, consts):
    # With the whole inlet at the clamp floor (q = q_floor < c_l) and xi at
    # the cap, the Robin coupling overwhelms the column weights.
    grid = js.build_grid(0.1, consts.zeta_cap, od.M_FLUX, 32, 16)
    q_floor = max(1e-4 * gas.c_star, 0.5 * consts.c_l)
    op = _Operator(grid, gas, cfg, od.A_CE, q_floor)
    Qfull = np.full((33, 17), float(gas.fast_A(q_floor)))
    with pytest.raises(errors.SingularSystemError):
        op.newton_matrix(Qfull)


# ---------------------------------------------------------------------------
# solve_fixed


def test_symmetric_solve_is_nodally_exact(gas, cfg, consts):
    opts = js.SolverOptions(n_phi=48, n_psi=24)
    f = js.solve_fixed(consts.zeta_hat, consts.zeta_hat, cfg, gas, consts, opts)
    sym = js.SymmetricSolution(gas, cfg, consts)
    qhat = sym.q_hat(f.grid.phi_nodes)
    assert np.max(np.abs(f.q - qhat[:, None])) < 1e-9


def test_solve_fixed_warm_start_converges_immediately(gas, cfg, consts, opts64):
    zeta = 0.6 * consts.zeta_hat
    xi = 0.11
    f = js.solve_fixed(zeta, xi, cfg, gas, consts, opts64)
    f2 = js.solve_fixed(zeta, xi, cfg, gas, consts, opts64, x0=f.Q)
    assert f2.newton_iters <= 1
    assert np.max(np.abs(f2.q - f.q)) < 1e-10


def test_solve_fixed_field_structure(asym_free, gas, consts):
    f = asym_free.field
    iz = f.grid.zeta_index
    # Dirichlet values exact (bitwise) against the solver's own boundary
    # value; the frozen oracle constant is one quadrature path away, so it
    # only matches to an ulp.
    a_ce = js.flux_A(gas, consts.c_e)
    assert np.max(np.abs(f.Q[-1, :] - a_ce)) == 0.0
    assert np.max(np.abs(f.Q[iz:, -1] - a_ce)) == 0.0
    assert abs(a_ce - od.A_CE) < 1e-15
    # interior bounds (strict) and monotonicity
    assert f.q[1:-1, 1:-1].min() > consts.c_l
    assert f.q[1:-1, 1:-1].max() < od.C_E
    assert np.diff(f.q, axis=0).min() >= -1e-8
    assert np.diff(f.q, axis=1).min() >= -1e-8


def test_solve_fixed_rejects_xi_beyond_cap(gas, cfg, consts, opts64):
    with pytest.raises(errors.ConstraintError):
        js.solve_fixed(0.05, 1.1 * consts.zeta_cap, cfg, gas, consts, opts64)


# ---------------------------------------------------------------------------
# Picard map


def test_picard_fixed_point_at_symmetric_inlet(gas, cfg, consts, opts64):
    g = np.full(opts64.n_psi + 1, consts.c_m)
    out = js.picard_T(g, consts.zeta_hat, consts.zeta_hat, cfg, gas, opts64)
    assert np.max(np.abs(out - consts.c_m)) < 1e-8


def test_picard_map_is_monotone(gas, cfg, consts, opts64):
    zh = consts.zeta_hat
    g1 = np.full(opts64.n_psi + 1, consts.c_m - 0.02)
    g2 = np.full(opts64.n_psi + 1, consts.c_m + 0.02)
    t1 = js.picard_T(g1, zh, zh, cfg, gas, opts64)
    t2 = js.picard_T(g2, zh, zh, cfg, gas, opts64)
    assert np.all(t1 <= t2 + 1e-10)


def test_picard_iteration_contracts_to_inlet_speed(gas, cfg, consts, opts64):
    # Supersolution start: iterates decrease monotonically to c_m.
    zh = consts.zeta_hat
    g = np.full(opts64.n_psi + 1, od.C_E)
    errs = []
    for _ in range(50):
        g = js.picard_T(g, zh, zh, cfg, gas, opts64)
        errs.append(float(np.max(np.abs(g - consts.c_m))))
        if errs[-1] <= 1e-6:
            break
    assert errs[-1] <= 1e-6, f"no contraction: {errs[-3:]}"
    assert len(errs) <= 50
    assert all(a >= b for a, b in zip(errs, errs[1:]))


def test_picard_rejects_out_of_range_profile(gas, cfg, consts, opts64):
    g = np.full(opts64.n_psi + 1, 0.5 * consts.c_l)
    with pytest.raises(errors.ConstraintError):
        js.picard_T(g, consts.zeta_hat, consts.zeta_hat, cfg, gas, opts64)


# ---------------------------------------------------------------------------
# Corner exponent


def test_corner_exponent_on_planted_half_power(gas):
    zeta, xi, m = 0.0627, 0.1143, od.M_FLUX
    grid = js.build_grid(zeta, xi, m, 256, 128)
    P, S = np.meshgrid(grid.phi_nodes, grid.psi_nodes, indexing="ij")
    r = np.sqrt((P - zeta) ** 2 + (S - m) ** 2)
    Q = od.A_CE - 0.05 * np.sqrt(r) * (1.0 + 0.2 * (m - S) / m)
    Q[-1, :] = od.A_CE  # outlet column is Dirichlet in genuine fields
    field = _field_from_Q(gas, grid, Q)
    expo = js.corner_exponent(field)
    assert abs(expo - 0.5) < 0.02


def test_corner_exponent_rejects_symmetric(gas, cfg, consts, sym_free_runs):
    with pytest.raises(errors.ConstraintError):
        js.corner_exponent(sym_free_runs[64].field)


def test_corner_exponent_insufficient_resolution(gas, cfg, consts, asym_free_64):
    with pytest.raises(errors.ConstraintError, match="resolution"):
        js.corner_exponent(asym_free_64.field)

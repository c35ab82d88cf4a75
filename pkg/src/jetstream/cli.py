"""Configuration-driven command line for the jet solver.

Subcommands: solve-fixed, solve-free, classify, sweep, physmap, verify.
All physics comes from a YAML config file; a handful of flags (--zeta, --xi,
--radius, --n, --jobs, --out) override per run.  Outputs are deterministic:
identical configs give byte-identical CSV/summary files, floats are written
in shortest round-trip form, and wall-clock timings go to stderr only.

Exit codes: 0 success (including classification verdicts), 1 verification
failures, 2 configuration errors, 3 constraint violations, 4 numerical
failures (nonconvergence, singular systems, fold-over), 5 nonexistence of a
flow for the requested geometry.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import (
    ConfigError,
    ConstraintError,
    FoldOverError,
    LongNozzleError,
    NonconvergenceError,
    ShortNozzleError,
    SingularSystemError,
)
from .fixedbvp import SolverOptions, SpeedField, corner_exponent, solve_fixed
from .freebnd import (
    FreeSolution,
    Nonexistence,
    classify_radius,
    inlet_defect,
    match_R,
    solve_outlet,
    sweep_zeta,
)
from .gasdyn import (
    DerivedConstants,
    FlowConfig,
    GasModel,
    derive_constants,
    flux_A,
    flux_A_inverse,
    mass_flux,
    mass_flux_inverse,
)
from .physmap import geometry_checks, reconstruct, recover_theta
from .symmetric import SymmetricSolution

_EXIT_OK = 0
_EXIT_VERIFY = 1
_EXIT_CONFIG = 2
_EXIT_CONSTRAINT = 3
_EXIT_NUMERICAL = 4
_EXIT_NONEXISTENCE = 5


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a config file."""

    gamma: float
    flow: FlowConfig
    R: float | None
    options: SolverOptions
    out_dir: str
    formats: tuple[str, ...]


@dataclass
class RunSummary:
    """Flat key-value record of one command's numbers plus wall times.

    ``values`` is serialized to summary.kv in insertion order; ``timings``
    goes to stderr only, keeping the written outputs byte-stable."""

    values: dict
    timings: dict

    def set(self, key, value):
        self.values[key] = value

    def time(self, key, seconds):
        self.timings[key] = seconds


# ---------------------------------------------------------------------------
# Config loading.

_SCHEMA = {
    "gas": {"gamma": "float"},
    "flow": {
        "R0": "float",
        "vartheta": "float",
        "m": "float",
        "c_e": "float",
        "P_e": "float",
        "R": "float",
    },
    "solver": {
        "n_phi": "int",
        "n_psi": "int",
        "tol": "float",
        "shoot_tol": "float",
        "max_iters": "int",
    },
    "outputs": {"directory": "str", "formats": "list"},
}


def _as_float(value, path):
    if isinstance(value, bool) or value is None:
        raise ConfigError(f"{path} must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{path} must be a number, got {value!r}") from None
    raise ConfigError(f"{path} must be a number, got {value!r}")


def _as_int(value, path):
    if isinstance(value, bool) or value is None:
        raise ConfigError(f"{path} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 10)
        except ValueError:
            raise ConfigError(f"{path} must be an integer, got {value!r}") from None
    raise ConfigError(f"{path} must be an integer, got {value!r}")


def load_config(path: str) -> RunConfig:
    """Parse and validate a YAML config file into a RunConfig.

    Unknown sections or keys are rejected with their dotted path; numeric
    strings are accepted (YAML reads some scientific-notation literals as
    strings) and parsed without locale dependence."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed config file {path}: {err}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping of sections")
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section '{section}'")
        if content is None:
            continue
        if not isinstance(content, dict):
            raise ConfigError(f"config section '{section}' must be a mapping")
        for key in content:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key '{section}.{key}'")

    gas_sec = data.get("gas") or {}
    if "gamma" not in gas_sec:
        raise ConfigError("missing required key 'gas.gamma'")
    gamma = _as_float(gas_sec["gamma"], "gas.gamma")

    flow_sec = data.get("flow") or {}
    for req in ("R0", "vartheta", "m"):
        if req not in flow_sec:
            raise ConfigError(f"missing required key 'flow.{req}'")
    kwargs = {
        "R0": _as_float(flow_sec["R0"], "flow.R0"),
        "vartheta": _as_float(flow_sec["vartheta"], "flow.vartheta"),
        "m": _as_float(flow_sec["m"], "flow.m"),
    }
    if "c_e" in flow_sec:
        kwargs["c_e"] = _as_float(flow_sec["c_e"], "flow.c_e")
    if "P_e" in flow_sec:
        kwargs["P_e"] = _as_float(flow_sec["P_e"], "flow.P_e")
    flow = FlowConfig(**kwargs)
    R = _as_float(flow_sec["R"], "flow.R") if "R" in flow_sec else None

    solver_sec = data.get("solver") or {}
    opts = SolverOptions(
        n_phi=_as_int(solver_sec.get("n_phi", 128), "solver.n_phi"),
        n_psi=_as_int(solver_sec.get("n_psi", 64), "solver.n_psi"),
        tol=_as_float(solver_sec.get("tol", 1e-10), "solver.tol"),
        shoot_tol=(
            _as_float(solver_sec["shoot_tol"], "solver.shoot_tol")
            if "shoot_tol" in solver_sec
            else None
        ),
        max_iters=_as_int(solver_sec.get("max_iters", 100), "solver.max_iters"),
    )

    out_sec = data.get("outputs") or {}
    directory = out_sec.get("directory", "out")
    if not isinstance(directory, str):
        raise ConfigError("outputs.directory must be a string")
    formats = out_sec.get("formats", ["csv"])
    if not isinstance(formats, list) or not all(isinstance(f, str) for f in formats):
        raise ConfigError("outputs.formats must be a list of strings")
    for f in formats:
        if f != "csv":
            raise ConfigError(f"unknown output format '{f}' (supported: csv)")

    return RunConfig(
        gamma=gamma,
        flow=flow,
        R=R,
        options=opts,
        out_dir=directory,
        formats=tuple(formats),
    )


# ---------------------------------------------------------------------------
# Serialization.


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_field_csv(path: Path, field: SpeedField, theta: np.ndarray) -> None:
    grid = field.grid

    def rows():
        for i, p in enumerate(grid.phi_nodes):
            for j, s in enumerate(grid.psi_nodes):
                yield (p, s, field.q[i, j], field.Q[i, j], theta[i, j])

    _write_csv(path, ["phi[-]", "psi[-]", "q[-]", "Q[-]", "theta[rad]"], rows())


def _write_coords_csv(path: Path, field: SpeedField, phys) -> None:
    grid = field.grid

    def rows():
        for i, p in enumerate(grid.phi_nodes):
            for j, s in enumerate(grid.psi_nodes):
                yield (p, s, phys.x[i, j], phys.y[i, j])

    _write_csv(path, ["phi[-]", "psi[-]", "x[len]", "y[len]"], rows())


def _write_curve_csv(path: Path, curve: np.ndarray) -> None:
    _write_csv(path, ["x[len]", "y[len]"], ((p[0], p[1]) for p in curve))


def _write_summary(path: Path, summary: RunSummary) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in summary.values.items():
            fh.write(f"{key}={_fmt(value)}\n")


def _emit_summary(summary: RunSummary, out_dir: Path) -> None:
    _write_summary(out_dir / "summary.kv", summary)
    for key, value in summary.values.items():
        print(f"{key}={_fmt(value)}")
    for key, seconds in summary.timings.items():
        print(f"[time] {key}: {seconds:.3f}s", file=sys.stderr)


def _base_summary(command: str, rc: RunConfig, consts: DerivedConstants) -> RunSummary:
    s = RunSummary(values={}, timings={})
    s.set("command", command)
    s.set("gamma", rc.gamma)
    s.set("R0", rc.flow.R0)
    s.set("vartheta", rc.flow.vartheta)
    s.set("m", rc.flow.m)
    s.set("c_e", consts.c_e)
    s.set("c_m", consts.c_m)
    s.set("c_l", consts.c_l)
    s.set("zeta_hat", consts.zeta_hat)
    s.set("R_hat", consts.R_hat)
    s.set("zeta_cap", consts.zeta_cap)
    s.set("m_window_lo", consts.m_window[0])
    s.set("m_window_hi", consts.m_window[1])
    s.set("admissible", consts.admissible)
    return s


def _field_stats(summary: RunSummary, field: SpeedField) -> None:
    summary.set("n_phi", field.grid.n_phi)
    summary.set("n_psi", field.grid.n_psi)
    summary.set("residual_norm", field.residual_norm)
    summary.set("newton_iters", field.newton_iters)
    summary.set("q_min", float(field.q.min()))
    summary.set("q_max", float(field.q.max()))


def _sym_oracle_error(
    field: SpeedField, gas: GasModel, cfg: FlowConfig, consts: DerivedConstants
) -> float:
    sym = SymmetricSolution(gas, cfg, consts)
    qhat = np.asarray(sym.q_hat(field.grid.phi_nodes))
    return float(np.max(np.abs(field.q - qhat[:, None])))


def _out_dir(rc: RunConfig, args) -> Path:
    out = Path(args.out) if getattr(args, "out", None) else Path(rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands.


def cmd_solve_fixed(args) -> int:
    rc = load_config(args.config)
    out = _out_dir(rc, args)
    gas = GasModel(rc.gamma)
    consts = derive_constants(gas, rc.flow)
    zeta = args.zeta if args.zeta is not None else consts.zeta_hat
    xi = args.xi if args.xi is not None else zeta
    t0 = time.perf_counter()
    field = solve_fixed(zeta, xi, rc.flow, gas, consts, rc.options)
    t1 = time.perf_counter()
    angles = recover_theta(field, gas, rc.flow)
    summary = _base_summary("solve-fixed", rc, consts)
    summary.set("zeta", zeta)
    summary.set("xi", xi)
    _field_stats(summary, field)
    summary.set("inlet_defect", inlet_defect(field, gas, rc.flow))
    summary.set("theta_discrepancy", angles.discrepancy)
    summary.set("theta_estimate", angles.estimate)
    if abs(zeta - consts.zeta_hat) <= 1e-12 and abs(xi - zeta) <= 1e-12:
        summary.set("oracle_max_error", _sym_oracle_error(field, gas, rc.flow, consts))
    summary.time("solve", t1 - t0)
    if "csv" in rc.formats:
        _write_field_csv(out / "field.csv", field, angles.theta)
    _emit_summary(summary, out)
    return _EXIT_OK


def cmd_solve_free(args) -> int:
    rc = load_config(args.config)
    out = _out_dir(rc, args)
    gas = GasModel(rc.gamma)
    consts = derive_constants(gas, rc.flow)
    zeta = args.zeta if args.zeta is not None else consts.zeta_hat
    summary = _base_summary("solve-free", rc, consts)
    summary.set("zeta", zeta)
    t0 = time.perf_counter()
    sol = solve_outlet(zeta, rc.flow, gas, consts, rc.options)
    summary.time("solve", time.perf_counter() - t0)
    if isinstance(sol, Nonexistence):
        summary.set("status", "no-solution")
        summary.set("reason", sol.reason)
        summary.set("defect", sol.defect)
        summary.set("detail", sol.detail)
        _emit_summary(summary, out)
        return _EXIT_NONEXISTENCE
    summary.set("status", "ok")
    summary.set("xi", sol.xi)
    summary.set("inlet_defect", sol.inlet_defect)
    summary.set("wall_length", sol.wall_length)
    summary.set("r_equiv", sol.r_equiv)
    _field_stats(summary, sol.field)
    angles = recover_theta(sol.field, gas, rc.flow)
    summary.set("theta_discrepancy", angles.discrepancy)
    summary.set("theta_estimate", angles.estimate)
    if abs(zeta - consts.zeta_hat) <= 1e-12:
        summary.set(
            "oracle_max_error", _sym_oracle_error(sol.field, gas, rc.flow, consts)
        )
    if "csv" in rc.formats:
        _write_field_csv(out / "field.csv", sol.field, angles.theta)
    _emit_summary(summary, out)
    return _EXIT_OK


def cmd_classify(args) -> int:
    rc = load_config(args.config)
    out = _out_dir(rc, args)
    radius = args.radius if args.radius is not None else rc.R
    if radius is None:
        raise ConfigError("classify needs a radius: pass --radius or set flow.R")
    gas = GasModel(rc.gamma)
    consts = derive_constants(gas, rc.flow)
    t0 = time.perf_counter()
    result = classify_radius(radius, rc.flow, gas, consts, rc.options)
    summary = _base_summary("classify", rc, consts)
    summary.time("classify", time.perf_counter() - t0)
    summary.set("radius", radius)
    summary.set("verdict", result.verdict)
    summary.set("r_hat", result.r_hat)
    summary.set("r_star", result.r_star)
    if result.verdict == "EXISTS":
        summary.set("zeta", result.zeta)
        summary.set("xi", result.xi)
        summary.set("wall_length", result.wall_length)
    _emit_summary(summary, out)
    return _EXIT_OK


def cmd_sweep(args) -> int:
    rc = load_config(args.config)
    out = _out_dir(rc, args)
    gas = GasModel(rc.gamma)
    consts = derive_constants(gas, rc.flow)
    t0 = time.perf_counter()
    rows = sweep_zeta(args.n, rc.flow, gas, consts, rc.options, jobs=args.jobs)
    elapsed = time.perf_counter() - t0
    if "csv" in rc.formats:
        _write_csv(
            out / "sweep.csv",
            ["zeta[-]", "xi[-]", "L[len]", "R_equiv[len]", "sup_phi[-]", "status", "message"],
            (
                (r.zeta, r.xi, r.wall_length, r.r_equiv, r.sup_phi, r.status, r.message)
                for r in rows
            ),
        )
    summary = _base_summary("sweep", rc, consts)
    summary.time("sweep", elapsed)
    summary.set("rows", len(rows))
    summary.set("n_ok", sum(1 for r in rows if r.status == "ok"))
    summary.set("n_no_solution", sum(1 for r in rows if r.status == "no-solution"))
    summary.set("n_error", sum(1 for r in rows if r.status == "error"))
    xs = [r.xi for r in rows if r.status == "ok"]
    summary.set("xi_strictly_decreasing", all(b < a for a, b in zip(xs, xs[1:])))
    _emit_summary(summary, out)
    return _EXIT_OK


def cmd_physmap(args) -> int:
    rc = load_config(args.config)
    out = _out_dir(rc, args)
    gas = GasModel(rc.gamma)
    consts = derive_constants(gas, rc.flow)
    summary = _base_summary("physmap", rc, consts)
    radius = args.radius if args.radius is not None else rc.R
    t0 = time.perf_counter()
    if radius is not None:
        sol = match_R(radius, rc.flow, gas, consts, rc.options)
        summary.set("radius", radius)
    else:
        zeta = args.zeta if args.zeta is not None else consts.zeta_hat
        sol = solve_outlet(zeta, rc.flow, gas, consts, rc.options)
        if isinstance(sol, Nonexistence):
            summary.set("zeta", zeta)
            summary.set("status", "no-solution")
            summary.set("reason", sol.reason)
            summary.set("detail", sol.detail)
            summary.time("solve", time.perf_counter() - t0)
            _emit_summary(summary, out)
            return _EXIT_NONEXISTENCE
    summary.time("solve", time.perf_counter() - t0)
    summary.set("status", "ok")
    summary.set("zeta", sol.zeta)
    summary.set("xi", sol.xi)
    summary.set("wall_length", sol.wall_length)
    summary.set("r_equiv", sol.r_equiv)
    _field_stats(summary, sol.field)
    t1 = time.perf_counter()
    angles = recover_theta(sol.field, gas, rc.flow)
    phys = reconstruct(sol.field, angles, rc.flow, gas)
    summary.time("reconstruct", time.perf_counter() - t1)
    summary.set("theta_discrepancy", angles.discrepancy)
    summary.set("theta_estimate", angles.estimate)
    summary.set("mass_flux_out", phys.mass_flux_out)
    checks = geometry_checks(phys, angles, sol.field, gas, rc.flow, consts, R=radius)
    summary.set("geometry_checks", len(checks))
    summary.set("geometry_failed", sum(1 for c in checks if not c.passed))
    for c in checks:
        summary.set(f"geometry.{c.name}", "PASS" if c.passed else "FAIL")
    if "csv" in rc.formats:
        _write_field_csv(out / "field.csv", sol.field, angles.theta)
        _write_coords_csv(out / "coords.csv", sol.field, phys)
        _write_curve_csv(out / "curves_inlet.csv", phys.inlet_curve)
        _write_curve_csv(out / "curves_wall.csv", phys.wall_curve)
        _write_curve_csv(out / "curves_free.csv", phys.free_streamline)
        _write_curve_csv(out / "curves_outlet.csv", phys.outlet_curve)
    _emit_summary(summary, out)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# Verification battery.


@dataclass
class _Check:
    name: str
    status: str  # PASS | FAIL | SKIPPED
    measured: float | None
    tolerance: float | None


def _check(rows, name, measured, tolerance):
    rows.append(
        _Check(
            name,
            "PASS" if measured <= tolerance else "FAIL",
            float(measured),
            float(tolerance),
        )
    )


def _verify_battery(rc: RunConfig, inject: str) -> list[_Check]:
    rows: list[_Check] = []
    gas = GasModel(rc.gamma)
    cfg = rc.flow
    consts = derive_constants(gas, cfg)
    opts = rc.options
    rng = np.random.default_rng(20260818)

    # Gas-model round trips through the exact quadrature paths.
    qs = rng.uniform(0.05 * gas.c_star, 0.999 * gas.c_star, size=8)
    err = max(abs(flux_A_inverse(gas, flux_A(gas, q)) - q) for q in qs)
    _check(rows, "gas_A_roundtrip", err, 1e-10)
    qs2 = rng.uniform(0.05 * gas.c_star, 0.95 * gas.c_star, size=8)
    err = max(abs(mass_flux_inverse(gas, mass_flux(gas, q)) - q) for q in qs2)
    _check(rows, "gas_j_roundtrip", err, 1e-10)
    grid_q = np.linspace(1e-3 * gas.c_star, (1.0 - 1e-9) * gas.c_star, 2001)
    _check(rows, "flux_A_monotone", -float(np.diff(gas.fast_A(grid_q)).min()), 0.0)
    _check(rows, "flux_B_monotone", -float(np.diff(gas.fast_B(grid_q)).min()), 0.0)

    # Scalar identities of the derived constants.
    a_ce = flux_A(gas, consts.c_e)
    ident = float(gas.rho(consts.c_l)) * (a_ce - flux_A(gas, consts.c_l))
    _check(rows, "c_l_identity", abs(ident - 1.0), 1e-10)
    ident = cfg.m / (consts.c_m * float(gas.rho(consts.c_m)))
    _check(rows, "c_m_identity", abs(ident - cfg.R0 * cfg.vartheta), 1e-10)

    # Symmetric oracle.
    sym = SymmetricSolution(gas, cfg, consts)
    _check(
        rows,
        "sym_wall_length",
        abs(sym.sym_wall_length() - (cfg.R0 - consts.R_hat)),
        1e-8,
    )
    sym_field = solve_fixed(consts.zeta_hat, consts.zeta_hat, cfg, gas, consts, opts)
    _check(
        rows,
        "sym_field_oracle",
        _sym_oracle_error(sym_field, gas, cfg, consts),
        1e-7,
    )
    sym_sol = solve_outlet(consts.zeta_hat, cfg, gas, consts, opts)
    if isinstance(sym_sol, FreeSolution):
        h_phi = consts.zeta_hat / opts.n_phi
        _check(rows, "sym_outlet_shoot", abs(sym_sol.xi - consts.zeta_hat), 2.0 * h_phi)
    else:
        rows.append(_Check("sym_outlet_shoot", "FAIL", math.inf, 0.0))

    # Defect monotonicity in xi and the two-xi comparison ordering.
    zeta_probe = 0.6 * consts.zeta_hat
    cap = consts.zeta_cap
    xis = np.linspace(zeta_probe + 0.05 * (cap - zeta_probe), cap - 0.05 * (cap - zeta_probe), 5)
    fields = [solve_fixed(zeta_probe, float(x), cfg, gas, consts, opts) for x in xis]
    defects = [inlet_defect(f, gas, cfg) for f in fields]
    _check(rows, "defect_monotone", -float(np.diff(defects).min()), 0.0)
    f_lo, f_hi = fields[1], fields[3]
    q_hi_interp = np.empty_like(f_lo.q)
    for j in range(f_lo.q.shape[1]):
        q_hi_interp[:, j] = np.interp(
            f_lo.grid.phi_nodes, f_hi.grid.phi_nodes, f_hi.q[:, j]
        )
    _check(
        rows,
        "comparison_xi",
        float((q_hi_interp - f_lo.q).max()),
        1e-8 + 50.0 * (np.max(np.diff(f_lo.grid.phi_nodes)) ** 2 + (cfg.m / opts.n_psi) ** 2),
    )

    # Free solve at the probe zeta: bounds, monotonicity, corner, angles.
    sol = solve_outlet(zeta_probe, cfg, gas, consts, opts)
    if not isinstance(sol, FreeSolution):
        rows.append(_Check("free_solve_probe", "FAIL", math.inf, 0.0))
        return rows
    field = sol.field
    if inject == "monotone":
        qt = field.q.copy()
        i, j = field.grid.n_phi // 2, field.grid.n_psi // 2
        qt[i, j], qt[i + 1, j] = qt[i + 1, j], qt[i, j]
        field = replace(field, q=qt)
    _check(rows, "field_bounds_lower", consts.c_l - float(field.q[1:-1, 1:-1].min()), 1e-6)
    _check(rows, "field_bounds_upper", float(field.q.max()) - consts.c_e, 1e-9)
    _check(rows, "field_monotone_phi", -float(np.diff(field.q, axis=0).min()), 1e-8)
    _check(rows, "field_monotone_psi", -float(np.diff(field.q, axis=1).min()), 1e-8)

    try:
        expo = corner_exponent(sol.field)
        _check(rows, "corner_exponent", abs(expo - 0.475), 0.075)
    except ConstraintError:
        rows.append(_Check("corner_exponent", "SKIPPED", None, None))

    try:
        angles = recover_theta(field, gas, cfg)
    except NonconvergenceError as err:
        rows.append(_Check("theta_consistency", "FAIL", err.estimate or math.inf, 0.0))
        return rows
    theta = angles.theta
    if inject == "theta":
        theta = theta.copy()
        theta[field.grid.zeta_index // 2, -1] += 0.1
        angles = replace(angles, theta=theta)
        disc = float(np.max(np.abs(angles.theta - angles.theta_cross)))
        angles = replace(angles, discrepancy=disc)
    _check(rows, "theta_consistency", angles.discrepancy, 10.0 * angles.estimate)

    try:
        phys = reconstruct(field, angles, cfg, gas)
    except FoldOverError:
        rows.append(_Check("geom_fold_over", "FAIL", math.inf, 0.0))
        return rows
    for c in geometry_checks(phys, angles, field, gas, cfg, consts, R=rc.R):
        rows.append(
            _Check("geom_" + c.name, "PASS" if c.passed else "FAIL", c.measured, c.tolerance)
        )
    return rows


def cmd_verify(args) -> int:
    rc = load_config(args.config)
    out = _out_dir(rc, args)
    t0 = time.perf_counter()
    rows = _verify_battery(rc, args.inject)
    elapsed = time.perf_counter() - t0
    lines = []
    for c in rows:
        measured = "-" if c.measured is None else repr(float(c.measured))
        tolerance = "-" if c.tolerance is None else repr(float(c.tolerance))
        lines.append(f"{c.name} {c.status} {measured} {tolerance}")
    with open(out / "verify.report", "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    n_fail = sum(1 for c in rows if c.status == "FAIL")
    print(f"[time] verify: {elapsed:.3f}s", file=sys.stderr)
    print(f"checks={len(rows)} failed={n_fail}")
    return _EXIT_VERIFY if n_fail else _EXIT_OK


# ---------------------------------------------------------------------------
# Entry point.


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jetstream",
        description=(
            "Subsonic jet flow from a convergent nozzle: potential-plane "
            "free-boundary solver, existence classification, and "
            "physical-plane reconstruction."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to YAML config file")
        p.add_argument("--out", help="output directory (overrides outputs.directory)")

    p = sub.add_parser("solve-fixed", help="solve the fixed-(zeta, xi) problem")
    common(p)
    p.add_argument("--zeta", type=float, help="detachment potential (default: symmetric)")
    p.add_argument("--xi", type=float, help="outlet potential (default: zeta)")
    p.set_defaults(func=cmd_solve_fixed)

    p = sub.add_parser("solve-free", help="solve with the outlet potential shot from mass flux")
    common(p)
    p.add_argument("--zeta", type=float, help="detachment potential (default: symmetric)")
    p.set_defaults(func=cmd_solve_free)

    p = sub.add_parser("classify", help="existence verdict for a nozzle radius")
    common(p)
    p.add_argument("--radius", type=float, help="nozzle radius R (default: flow.R)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="tabulate the family over detachment abscissas")
    common(p)
    p.add_argument("--n", type=int, default=8, help="number of sweep points (default 8)")
    p.add_argument("--jobs", type=int, default=1, help="parallel row workers (default 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("physmap", help="reconstruct the physical-plane flow and curves")
    common(p)
    p.add_argument("--zeta", type=float, help="detachment potential (default: symmetric)")
    p.add_argument("--radius", type=float, help="match this nozzle radius instead of --zeta")
    p.set_defaults(func=cmd_physmap)

    p = sub.add_parser("verify", help="run the invariant suite and write a report")
    common(p)
    p.add_argument(
        "--inject",
        choices=["none", "theta", "monotone"],
        default="none",
        help="fault injection mode for exercising the report",
    )
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return _EXIT_CONFIG
    except ConstraintError as err:
        print(f"constraint violation: {err}", file=sys.stderr)
        return _EXIT_CONSTRAINT
    except (NonconvergenceError, SingularSystemError, FoldOverError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return _EXIT_NUMERICAL
    except (LongNozzleError, ShortNozzleError) as err:
        print(f"no solution: {err}", file=sys.stderr)
        return _EXIT_NONEXISTENCE


if __name__ == "__main__":
    sys.exit(main())

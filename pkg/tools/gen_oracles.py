#!/usr/bin/env python3
"""Generate frozen oracle values for the test suite.

Brute-force reference implementation of the gas-dynamic relations using
scipy.integrate.quad and scipy.optimize.brentq directly -- deliberately
independent of the jetstream package (different quadrature, different root
finder, no shared code).  Run:

    python tools/gen_oracles.py > tests/oracle_data.py

The desk configuration is gamma=1.4, R0=1, vartheta=pi/6, c_e=0.8, m=0.25.
"""

from __future__ import annotations

import math
import sys

from scipy.integrate import quad
from scipy.optimize import brentq

GAMMA = 1.4
R0 = 1.0
VARTHETA = math.pi / 6.0
C_E = 0.8
M_FLUX = 0.25

C_STAR = math.sqrt(2.0 / (GAMMA + 1.0))


def rho(q2: float) -> float:
    """Density as a function of squared speed (stagnation-normalized)."""
    base = 1.0 - 0.5 * (GAMMA - 1.0) * q2
    return base ** (1.0 / (GAMMA - 1.0))


def csq(q2: float) -> float:
    """Squared sound speed c^2 = 1 - (gamma-1) q^2 / 2."""
    return 1.0 - 0.5 * (GAMMA - 1.0) * q2


def pressure(r: float) -> float:
    return r**GAMMA / GAMMA


def a_prime(q: float) -> float:
    """A'(q) = (1 - q^2/c^2) / (q rho(q^2))."""
    q2 = q * q
    return (1.0 - q2 / csq(q2)) / (q * rho(q2))


def b_prime(q: float) -> float:
    return rho(q * q) / q


def flux_a(q: float) -> float:
    val, err = quad(a_prime, C_STAR, q, epsabs=1e-14, epsrel=1e-13, limit=400)
    assert err < 1e-11, (q, err)
    return val


def flux_b(q: float) -> float:
    val, err = quad(b_prime, C_STAR, q, epsabs=1e-14, epsrel=1e-13, limit=400)
    assert err < 1e-11, (q, err)
    return val


def mass_flux(q: float) -> float:
    return q * rho(q * q)


def mass_flux_inverse(j: float) -> float:
    """Subsonic root of q rho(q^2) = j."""
    return brentq(lambda q: mass_flux(q) - j, 1e-14, C_STAR, xtol=1e-15, rtol=8.9e-16)


def flux_a_inverse(a: float) -> float:
    return brentq(lambda q: flux_a(q) - a, 1e-12, C_STAR - 1e-13, xtol=1e-15, rtol=8.9e-16)


def main() -> None:
    lines: list[str] = []

    def emit(name: str, value: float, comment: str = "") -> None:
        tail = f"  # {comment}" if comment else ""
        lines.append(f"{name} = {value!r}{tail}")

    rho_cstar = rho(C_STAR * C_STAR)
    j_max = C_STAR * rho_cstar
    rho_ce = rho(C_E * C_E)

    emit("GAMMA", GAMMA)
    emit("R0", R0)
    emit("VARTHETA", VARTHETA)
    emit("C_E", C_E)
    emit("M_FLUX", M_FLUX)
    emit("C_STAR", C_STAR, "critical speed sqrt(2/(gamma+1))")
    emit("RHO_CSTAR", rho_cstar, "density at the critical speed")
    emit("J_MAX", j_max, "critical mass flux c* rho(c*^2)")
    emit("RHO_CE", rho_ce, "density at q = c_e = 0.8")
    emit("P_E", pressure(rho_ce), "exit pressure matching c_e = 0.8")
    emit("P_SONIC", pressure(rho_cstar), "pressure at the critical speed")
    emit("P_STAG", 1.0 / GAMMA, "stagnation pressure 1/gamma")

    a_ce = flux_a(C_E)
    b_ce = flux_b(C_E)
    emit("A_CE", a_ce, "A(0.8), quadrature from c*")
    emit("B_CE", b_ce, "B(0.8), quadrature from c*, B(c*)=0 convention")
    a_07 = flux_a(0.7)
    b_07 = flux_b(0.7)
    emit("A_07", a_07)
    emit("B_07", b_07)
    q2 = 0.7 * 0.7
    emit(
        "FPRIME_AT_A07",
        rho(q2) ** 2 * csq(q2) / (csq(q2) - q2),
        "dB/dA at q=0.7: rho^2 c^2 / (c^2 - q^2)",
    )
    emit(
        "EPRIME_AT_B07",
        (1.0 - q2 / csq(q2)) / rho(q2) ** 2,
        "dA/dB at q=0.7: (1 - q^2/c^2)/rho^2",
    )

    # Free constants of the desk configuration.
    j_inlet = M_FLUX / (R0 * VARTHETA)
    c_m = mass_flux_inverse(j_inlet)
    emit("C_M", c_m, "subsonic root of R0 vartheta q rho(q^2) = m")
    c_l = brentq(
        lambda q: rho(q * q) * (a_ce - flux_a(q)) - 1.0,
        1e-6,
        C_E,
        xtol=1e-15,
        rtol=8.9e-16,
    )
    emit("C_L", c_l, "root of rho(c_l^2) (A(c_e) - A(c_l)) = 1")
    zeta_hat = M_FLUX * (a_ce - flux_a(c_m)) / VARTHETA
    emit("ZETA_HAT", zeta_hat, "symmetric detachment abscissa")
    r_hat = M_FLUX / (VARTHETA * C_E * rho_ce)
    emit("R_HAT", r_hat, "symmetric jet radius m/(vartheta c_e rho(c_e^2))")
    emit("SYM_WALL_LEN", R0 - r_hat, "R0 - R_hat")
    emit("ZETA_CAP", R0 * c_l, "phi-domain cap R0 c_l")

    lo = R0 * VARTHETA * c_l * rho(c_l * c_l)
    hi = R0 * VARTHETA * C_E * rho_ce
    emit("M_WINDOW_LO", lo, "admissible mass-flux window, lower edge")
    emit("M_WINDOW_HI", hi, "admissible mass-flux window, upper edge")

    # Counterexample: m below the window still yields 0 < zeta_hat < R0 c_l.
    m_bad = 0.9 * lo
    c_m_bad = mass_flux_inverse(m_bad / (R0 * VARTHETA))
    zeta_hat_bad = m_bad * (a_ce - flux_a(c_m_bad)) / VARTHETA
    emit("M_BELOW_WINDOW", m_bad)
    emit("C_M_BELOW_WINDOW", c_m_bad)
    emit("ZETA_HAT_BELOW_WINDOW", zeta_hat_bad, "still inside (0, R0 c_l)")

    # Symmetric flow profile: q_hat(phi) = A^{-1}(A(c_e) - vartheta (zeta_hat - phi)/m)
    for frac in (0.25, 0.5, 0.75):
        phi = frac * zeta_hat
        qv = flux_a_inverse(a_ce - VARTHETA * (zeta_hat - phi) / M_FLUX)
        emit(f"Q_HAT_AT_{int(frac * 100)}", qv, f"q_hat at phi = {frac} zeta_hat")

    # Radial potential: phi_hat(r) = int_r^R0 h(m/(vartheta r')) dr', h = subsonic
    # mass-flux inverse.  At r = R_hat this must equal zeta_hat (change of
    # variables u = m/(vartheta r)); freezing both sides checks the identity.
    def radial_speed(r: float) -> float:
        return mass_flux_inverse(M_FLUX / (VARTHETA * r))

    phi_at_rhat, err = quad(radial_speed, r_hat, R0, epsabs=1e-13, epsrel=1e-13, limit=400)
    assert err < 1e-10
    emit("PHI_HAT_AT_RHAT", phi_at_rhat, "must equal ZETA_HAT")
    r_mid = 0.5 * (r_hat + R0)
    phi_mid, err = quad(radial_speed, r_mid, R0, epsabs=1e-13, epsrel=1e-13, limit=400)
    assert err < 1e-10
    emit("R_MID", r_mid)
    emit("PHI_HAT_AT_RMID", phi_mid)

    emit("H_OF_04", mass_flux_inverse(0.4), "subsonic speed with mass flux 0.4")
    emit("CUBE_ROOT", brentq(lambda x: x**3 - x - 2.0, 1.0, 2.0, xtol=1e-15, rtol=8.9e-16),
         "root of x^3 - x - 2")

    # Independent cross-checks before freezing.
    assert abs(phi_at_rhat - zeta_hat) < 1e-10, (phi_at_rhat, zeta_hat)
    assert abs(mass_flux(c_m) * R0 * VARTHETA - M_FLUX) < 1e-14
    assert abs(rho(c_l * c_l) * (a_ce - flux_a(c_l)) - 1.0) < 1e-12
    assert lo < M_FLUX < hi, (lo, M_FLUX, hi)
    assert c_l < c_m < C_E
    assert 0.0 < zeta_hat_bad < R0 * c_l
    assert not (lo < m_bad < hi)

    sys.stdout.write(
        '"""Frozen oracle constants for the desk configuration.\n\n'
        "Generated by tools/gen_oracles.py (scipy quad/brentq reference\n"
        'implementation, independent of the package).  Do not edit by hand.\n"""\n\n'
    )
    sys.stdout.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()

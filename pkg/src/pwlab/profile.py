"""Wave profiles by ODE shooting and their 2 pi-periodic representation Q.

The profile W solves ``W'' + omega W + gamma |W|^2 W = 0`` with
``W(0) = sqrt(y2)``, ``W'(0) = i J/sqrt(y2)`` (the modulus maximum, so W'
is purely imaginary there).  With ``k = pi/T`` and the Floquet wave number
``p``, ``Q(z) = exp(-i p x) W(x)`` at ``x = z/(2k)`` is 2 pi-periodic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import quadrature as qd
from .domains import ModelCase, Invariants, cubic_roots, _inv
from .errors import PeriodMismatch, ToleranceNotMet

ODE_RTOL = 1e-13
ODE_ATOL = 1e-14
TAIL_TOL = 1e-12
RTOL_FLOOR = 3e-14     # DOP853 refuses anything below 100 eps
MAX_GRID = 8192


def _rhs(case: ModelCase):
    om, g = float(case.omega), float(case.gamma)

    def f(x, u):
        a, b, da, db = u
        r2 = a * a + b * b
        fac = -(om + g * r2)
        return [da, db, fac * a, fac * b]

    return f


@dataclass
class WaveProfile:
    case: ModelCase
    inv: Invariants
    wn: qd.WaveNumbers
    gridN: int
    Q: np.ndarray
    W0: complex
    dW0: complex
    p: float
    periodicity_defect: float = 0.0
    sol: object = field(default=None, repr=False)

    @property
    def k(self) -> float:
        return self.wn.k

    @property
    def T(self) -> float:
        return self.wn.T

    @property
    def mu(self) -> float:
        return self.case.mu(self.p)

    @property
    def z(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.gridN) / self.gridN

    def W(self, x):
        """Complex profile W(x) and W'(x) from the dense ODE solution, x in [0, T]."""
        u = self.sol(np.asarray(x, dtype=float))
        return u[0] + 1j * u[1], u[2] + 1j * u[3]

    def with_Q(self, Q: np.ndarray) -> "WaveProfile":
        """Copy carrying different samples (used for synthetic tests)."""
        return WaveProfile(self.case, self.inv, self.wn, len(Q), np.asarray(Q, complex),
                           self.W0, self.dW0, self.p, self.periodicity_defect, self.sol)


def wavenumbers_m(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, 1.0 / n)


def spectral_derivative(Q: np.ndarray, order: int = 1) -> np.ndarray:
    m = wavenumbers_m(len(Q))
    return np.fft.ifft((1j * m) ** order * np.fft.fft(Q))


def spectral_tail(Q: np.ndarray) -> float:
    """Largest Fourier coefficient with |m| >= n/4, relative to the largest one."""
    c = np.abs(np.fft.fft(Q)) / len(Q)
    m = np.abs(wavenumbers_m(len(Q)))
    top = c.max()
    return float(c[m >= len(Q) // 4].max() / top) if top > 0 else 0.0


def shoot_profile(case: ModelCase, inv, gridN: int = 256, p_override: Optional[float] = None,
                  rtol: float = ODE_RTOL, atol: float = ODE_ATOL,
                  escalate: bool = True) -> WaveProfile:
    """Integrate the profile ODE over one period and sample Q on a uniform grid.

    ``p_override`` selects a different Floquet wave number on the same
    orbit (it must differ from the default by a multiple of 2k).

    Raises
    ------
    PeriodMismatch
        exp(-i p T) W(T) differs from W(0) by more than 1e-8 max|W|.
    ToleranceNotMet
        The integrator failed.
    """
    inv = _inv(inv)
    if gridN < 64 or gridN & (gridN - 1):
        raise ValueError("gridN must be a power of two >= 64")
    wn = qd.wave_numbers(case, inv)
    roots = cubic_roots(case, inv)
    r2 = math.sqrt(roots.y2)
    W0, dW0 = complex(r2, 0.0), complex(0.0, inv.J / r2)
    p = wn.p if p_override is None else float(p_override)
    T = wn.T
    defect = math.inf
    for tol_scale in (1.0, 0.1):
        sol = solve_ivp(_rhs(case), (0.0, T), [r2, 0.0, 0.0, inv.J / r2], method="DOP853",
                        rtol=max(rtol * tol_scale, RTOL_FLOOR), atol=atol * tol_scale,
                        dense_output=True)
        if not sol.success:
            raise ToleranceNotMet(f"integrator failed: {sol.message}")
        WT = sol.y[0, -1] + 1j * sol.y[1, -1]
        defect = abs(np.exp(-1j * p * T) * WT - W0) / r2
        if defect <= 1e-8:
            break
    else:
        raise PeriodMismatch(f"periodicity defect {defect:.2e} exceeds 1e-8")

    n = gridN
    while True:
        z = 2 * np.pi * np.arange(n) / n
        x = z * T / (2 * np.pi)
        u = sol.sol(x)
        Q = np.exp(-1j * p * x) * (u[0] + 1j * u[1])
        if not escalate or spectral_tail(Q) <= TAIL_TOL or n >= MAX_GRID:
            break
        n *= 2
    return WaveProfile(case, inv, wn, n, Q, W0, dW0, p, float(defect), sol.sol)


def orbit_invariants(profile: WaveProfile, x):
    """Angular momentum and energy evaluated along the shot orbit."""
    W, dW = profile.W(x)
    J = np.imag(np.conj(W) * dW)
    r2 = np.abs(W) ** 2
    c = profile.case
    E = 0.5 * np.abs(dW) ** 2 + 0.5 * c.omega * r2 + 0.25 * c.gamma * r2 ** 2
    return J, E


def stationarity_residual_field(case: ModelCase, Q: np.ndarray, k: float, p: float) -> np.ndarray:
    Q = np.asarray(Q, dtype=complex)
    d1 = spectral_derivative(Q, 1)
    d2 = spectral_derivative(Q, 2)
    return 4 * k * k * d2 + 4j * p * k * d1 + case.mu(p) * Q + case.gamma * np.abs(Q) ** 2 * Q


def stationarity_residual(profile: WaveProfile) -> float:
    """max |4k^2 Q'' + 4ipk Q' + mu Q + gamma |Q|^2 Q| on the grid."""
    r = stationarity_residual_field(profile.case, profile.Q, profile.k, profile.p)
    return float(np.max(np.abs(r)))


def functionals_of(case: ModelCase, Q: np.ndarray, k: float):
    """Charge, momentum and energy of 2 pi-periodic samples Q."""
    Q = np.asarray(Q, dtype=complex)
    n = len(Q)
    dz = 2 * np.pi / n
    qh = np.fft.fft(Q) / n
    m = wavenumbers_m(n)
    N = 0.5 * dz * np.sum(np.abs(Q) ** 2)
    M = -np.pi * np.sum(m * np.abs(qh) ** 2)
    grad2 = 2 * np.pi * np.sum((m * np.abs(qh)) ** 2)
    E = 2 * k * k * grad2 - case.gamma * 0.25 * dz * np.sum(np.abs(Q) ** 4)
    return float(N), float(M), float(E)


def functionals(profile: WaveProfile):
    """(N, M, E) of the profile: charge, momentum and case energy."""
    return functionals_of(profile.case, profile.Q, profile.k)


def nondegeneracy_margin(profile: WaveProfile) -> float:
    """y2^2 - y2^3 - J^2 in the defocusing case (positive for every valid profile)."""
    y2 = abs(profile.W0) ** 2
    return y2 * y2 - y2 ** 3 - profile.inv.J ** 2


def export_csv(profile: WaveProfile, path, header_extra: Optional[dict] = None, Q=None):
    """Write z, Re Q, Im Q, |Q| with a JSON header comment."""
    import json
    Q = profile.Q if Q is None else np.asarray(Q)
    meta = {"case": profile.case.name, "J": profile.inv.J, "E": profile.inv.E,
            "T": profile.T, "Phi": profile.wn.Phi, "Psi": profile.wn.Psi,
            "k": profile.k, "ell": profile.p - profile.k, "p": profile.p, "gridN": len(Q)}
    if header_extra:
        meta.update(header_extra)
    z = 2 * np.pi * np.arange(len(Q)) / len(Q)
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True, default=_json_default) + "\n")
        fh.write("z,ReQ,ImQ,absQ\n")
        for row in zip(z, Q.real, Q.imag, np.abs(Q)):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))

"""Two-parameter family of travelling/rotating waves and the Hessian of d(omega, c).

Near a wave with invariants (J, E), the profiles ``lambda Q_{J',E'}`` with
``lambda = k/k' = T'/T`` are critical points of the energy shifted by
``-omega N - c M``, where

    omega = lambda^2 mu(p') - mu(p),        c = 4 k^2 theta'/pi - 4 k p,

``mu(p) = omega_case - p^2`` and ``theta = p T`` is the Floquet phase.  The
Hessian of ``d(omega, c)`` is ``H = -M^{-1} K`` with

    M = d(omega, c)/d(E', J'),   K = d(N, M)(lambda Q_{J',E'})/d(E', J').
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from . import quadrature as qd
from .domains import ModelCase, Invariants, e_minus, domain_contains, _inv
from .errors import LeftDomain, NoConvergence, PWLabError, SingularM, OutOfRange

FD_STEP = 1e-5


@dataclass(frozen=True)
class FamilyMap:
    omega: float
    c: float
    Jp: float
    Ep: float
    lam: float
    v: float
    kp: float
    pp: float
    Tp: float
    Psip: float


@dataclass(frozen=True)
class StabilityReport:
    M: np.ndarray
    K: np.ndarray
    H: np.ndarray
    detM: float
    detK: float
    detH: float
    Delta: float
    K_method: str

    @property
    def H_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.H + self.H.T))


def _branch(case, J, E):
    return qd.wave_numbers(case, (J, E)).branch


def _theta(case: ModelCase, J: float, E: float, branch: str) -> float:
    """Floquet phase pT on a fixed branch, so that it is smooth near (J, E)."""
    if branch == "phi":
        return qd.phase_Phi(case, (J, E))
    return math.pi + qd.renorm_Psi(case, (J, E))


def _primed(case, J, E, branch):
    T = qd.period_T(case, (J, E))
    th = _theta(case, J, E, branch)
    N = qd.charge_N(case, (J, E))
    M = th / (2 * math.pi) * N - 0.5 * J * T
    return T, th, N, M


def _omega_c(case, base_T, base_p, Tp, thp):
    k = math.pi / base_T
    mu = case.mu(base_p)
    om = (case.omega * Tp * Tp - thp * thp) / base_T ** 2 - mu
    c = 4 * k * k * thp / math.pi - 4 * k * base_p
    return om, c


def matrix_M(case: ModelCase, inv) -> np.ndarray:
    """Jacobian [[d omega/dE', dc/dE'], [d omega/dJ', dc/dJ']] at (J', E') = (J, E)."""
    wn = qd.wave_numbers(case, inv)
    _, jac = qd.derivatives(case, inv)
    (T_E, P_E), (T_J, P_J) = jac
    k, p = wn.k, wn.p
    a = 2 * k / math.pi
    b = 4 * k * k / math.pi
    w = case.omega
    return np.array([[a * (w * T_E - p * P_E), b * P_E],
                     [a * (w * T_J - p * P_J), b * P_J]])


def family_map(case: ModelCase, inv, omega: float, c: float, tol: float = 1e-14,
               max_iter: int = 30) -> FamilyMap:
    """Solve for (J', E') whose rescaled profile has family parameters (omega, c)."""
    inv = _inv(inv)
    wn = qd.wave_numbers(case, inv)
    branch = wn.branch
    T, p = wn.T, wn.p
    x = np.array([inv.J, inv.E])
    target = np.array([omega, c])

    def resid(x):
        Tp = qd.period_T(case, tuple(x))
        thp = _theta(case, x[0], x[1], branch)
        return np.array(_omega_c(case, T, p, Tp, thp)) - target, Tp, thp

    r, Tp, thp = resid(x)
    scale = max(1.0, abs(omega), abs(c))
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= tol * scale:
            break
        Mm = _matrix_M_branch(case, x, branch, T)
        # rows of Mm are d/dE' and d/dJ'; unknowns are ordered (J', E')
        A = np.array([[Mm[1, 0], Mm[0, 0]], [Mm[1, 1], Mm[0, 1]]])
        step = np.linalg.solve(A, -r)
        t = 1.0
        for _ in range(30):
            xn = x + t * step
            if domain_contains(case, tuple(xn)).interior:
                try:
                    rn, Tn, thn = resid(xn)
                    if np.max(np.abs(rn)) < np.max(np.abs(r)) or t == 1.0 and np.max(np.abs(rn)) < 1e-10:
                        break
                except PWLabError:
                    pass
            t *= 0.5
        else:
            raise LeftDomain(f"family map left the domain near (J, E) = ({x[0]}, {x[1]})")
        x, r, Tp, thp = xn, rn, Tn, thn
    else:
        if np.max(np.abs(r)) > 1e3 * tol * scale:
            raise NoConvergence(f"family map did not converge for (omega, c) = ({omega}, {c})")
    lam = Tp / T
    kp = math.pi / Tp
    pp = thp / Tp
    om, cc = _omega_c(case, T, p, Tp, thp)
    return FamilyMap(omega=om, c=cc, Jp=float(x[0]), Ep=float(x[1]), lam=lam,
                     v=2 * (lam * pp - p), kp=kp, pp=pp, Tp=Tp, Psip=thp - math.pi)


def _matrix_M_branch(case, x, branch, T_base):
    # exact Jacobian of (omega, c) at a nearby (J', E'), base period T_base
    _, jac = qd.derivatives(case, tuple(x))
    (T_E, P_E), (T_J, P_J) = jac
    Tp = qd.period_T(case, tuple(x))
    thp = _theta(case, x[0], x[1], branch)
    k = math.pi / T_base
    w = case.omega
    a = 2.0 / T_base ** 2
    b = 4 * k * k / math.pi
    return np.array([[a * (w * Tp * T_E - thp * P_E), b * P_E],
                     [a * (w * Tp * T_J - thp * P_J), b * P_J]])


def _K_analytic(case, inv):
    inv = _inv(inv)
    wn = qd.wave_numbers(case, inv)
    co, jac = qd.derivatives(case, inv)
    (T_E, P_E), (T_J, P_J) = jac
    N = qd.charge_N(case, inv)
    dE, dJ = co.dy_dE, co.dy_dJ
    NE = co.C1 * dE[0] + co.C2 * dE[1] + co.C3 * T_E
    NJ = co.C1 * dJ[0] + co.C2 * dJ[1] + co.C3 * T_J
    r = wn.p / (2 * wn.k)
    ME = r * NE + N / (2 * math.pi) * P_E - 1.5 * inv.J * T_E
    MJ = r * NJ + N / (2 * math.pi) * P_J - 1.5 * inv.J * T_J - 0.5 * wn.T
    return np.array([[NE, ME], [NJ, MJ]])


def _fd_step(case, inv, h):
    gap = inv.E - e_minus(case, inv.J)
    if case.defocusing:
        gap = min(gap, qd.e_plus(inv.J) - inv.E)
    return min(h, 0.05 * gap)


def _K_finite_difference(case, inv, h=FD_STEP):
    inv = _inv(inv)
    wn = qd.wave_numbers(case, inv)
    branch, T = wn.branch, wn.T
    h = _fd_step(case, inv, h)

    def NM(J, E):
        Tp, thp, Np, Mp = _primed(case, J, E, branch)
        lam2 = (Tp / T) ** 2
        return np.array([lam2 * Np, lam2 * Mp])

    def central(dj, de, hh):
        return (NM(inv.J + dj * hh, inv.E + de * hh) - NM(inv.J - dj * hh, inv.E - de * hh)) / (2 * hh)

    rows = []
    for dj, de in ((0, 1), (1, 0)):
        d1 = central(dj, de, h)
        d2 = central(dj, de, h / 2)
        rows.append((4 * d2 - d1) / 3)
    return np.array(rows)


def matrix_K(case: ModelCase, inv, method: str = "auto") -> np.ndarray:
    """Jacobian [[dN/dE', dM/dE'], [dN/dJ', dM/dJ']] of the rescaled charge and momentum.

    ``method="auto"`` assembles the closed kernel formulas in the defocusing
    case and uses Richardson-extrapolated central differences otherwise;
    "analytic" and "fd" force one path.
    """
    if method == "auto":
        method = "analytic" if case.defocusing else "fd"
    if method == "analytic":
        return _K_analytic(case, inv)
    if method == "fd":
        return _K_finite_difference(case, inv)
    raise ValueError(f"unknown method {method!r}")


def hessian_H(case: ModelCase, inv, K_method: str = "auto") -> StabilityReport:
    """Stability matrices M, K and the Hessian H = -M^{-1} K of d(omega, c)."""
    M = matrix_M(case, inv)
    detM = float(np.linalg.det(M))
    if abs(detM) < 1e-12:
        raise SingularM(f"det M = {detM:.3e} is numerically zero")
    method = K_method if K_method != "auto" else ("analytic" if case.defocusing else "fd")
    K = matrix_K(case, inv, method)
    H = -np.linalg.solve(M, K)
    return StabilityReport(M=M, K=K, H=H, detM=detM, detK=float(np.linalg.det(K)),
                           detH=float(np.linalg.det(H)), Delta=qd.kam_delta(case, inv),
                           K_method=method)


def d_function(case: ModelCase, inv, omega: float, c: float, gridN: int = 256) -> float:
    """d(omega, c) = lambda^4 E_{J',E'}(Q_{J',E'}) evaluated on the shot profile."""
    from .profile import shoot_profile, functionals
    fm = family_map(case, inv, omega, c)
    prof = shoot_profile(case, (fm.Jp, fm.Ep), gridN, p_override=fm.pp)
    N, M, En = functionals(prof)
    Ejet = En - case.mu(fm.pp) * N - 4 * fm.pp * fm.kp * M
    return fm.lam ** 4 * Ejet


def hessian_from_d(case: ModelCase, inv, h: float = 2e-3, gridN: int = 256) -> np.ndarray:
    """Second-difference Hessian of d at (0, 0), Richardson-extrapolated in h."""
    def d(o, c):
        return d_function(case, inv, o, c, gridN)

    d00 = d(0.0, 0.0)

    def hess(hh):
        dpp = {}
        for i in (-1, 1):
            for j in (-1, 1):
                dpp[i, j] = d(i * hh, j * hh)
        Hoo = (d(hh, 0) - 2 * d00 + d(-hh, 0)) / hh ** 2
        Hcc = (d(0, hh) - 2 * d00 + d(0, -hh)) / hh ** 2
        Hoc = (dpp[1, 1] - dpp[1, -1] - dpp[-1, 1] + dpp[-1, -1]) / (4 * hh * hh)
        return np.array([[Hoo, Hoc], [Hoc, Hcc]])

    H1, H2 = hess(h), hess(h / 2)
    return (4 * H2 - H1) / 3


def gradient_d(case: ModelCase, inv, h: float = 1e-4, gridN: int = 256) -> np.ndarray:
    """Central-difference gradient (dd/domega, dd/dc) at (0, 0)."""
    go = (d_function(case, inv, h, 0.0, gridN) - d_function(case, inv, -h, 0.0, gridN)) / (2 * h)
    gc = (d_function(case, inv, 0.0, h, gridN) - d_function(case, inv, 0.0, -h, gridN)) / (2 * h)
    return np.array([go, gc])


# ---------------------------------------------------------------------------
# scans

SCAN_FIELDS = ("J", "E", "T", "Phi", "Psi", "Delta", "detM", "detK", "detH", "flag")


def _scan_row(args):
    case, J, E = args
    row = dict.fromkeys(SCAN_FIELDS, math.nan)
    row.update(J=J, E=E, flag="")
    try:
        wn = qd.wave_numbers(case, (J, E))
        rep = hessian_H(case, (J, E))
        row.update(T=wn.T, Phi=wn.Phi, Psi=wn.Psi, Delta=rep.Delta, detM=rep.detM,
                   detK=rep.detK, detH=rep.detH)
        if not (rep.detH < 0 and rep.Delta > 0):
            row["flag"] = "sign"
    except PWLabError as exc:
        row["flag"] = type(exc).__name__
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        row["flag"] = type(exc).__name__
    return row


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get("PWLAB_THREADS", "1")))
    except ValueError:
        return 1


def scan_points(case: ModelCase, points: Sequence[tuple]) -> list:
    """Evaluate scan rows at the given (J, E) points, preserving order."""
    tasks = [(case, float(J), float(E)) for J, E in points]
    workers = n_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_scan_row, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [_scan_row(t) for t in tasks]


def scan_det_hessian(case: ModelCase, J_values, E_max: float, n_points: int,
                     E_offset: float = 0.05, E_min: Optional[float] = None) -> list:
    """Rows (J, E, T, Phi, Psi, Delta, detM, detK, detH, flag) on a (J, E) grid.

    For each J the energy runs over ``n_points`` equispaced values from
    ``E_-(J) + E_offset`` (or ``E_min``) to ``E_max``.  Failed points are kept
    and flagged.
    """
    pts = []
    for J in J_values:
        lo = e_minus(case, J) + E_offset if E_min is None else E_min
        for E in np.linspace(lo, E_max, n_points):
            pts.append((J, E))
    return scan_points(case, pts)

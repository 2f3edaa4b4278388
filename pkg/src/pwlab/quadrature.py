"""Period, phases, action, charge and momentum of periodic waves as single integrals.

All quantities are integrals over ``phi in [0, pi/2]`` after the substitution
``y = s(phi) = y1 cos^2(phi) + y2 sin^2(phi)``, which removes the square-root
singularities at the turning points.  With ``gap(phi) = |y3 - s(phi)|``:

    T   = 2 sqrt(2) int 1/sqrt(gap)
    Phi = 2 sqrt(2) J int 1/(s sqrt(gap))
    N   = 2 sqrt(2) k int s/sqrt(gap),      k = pi/T
    M   = (p/2k) N - J T/2,                 p = k + Psi/T

The renormalized phase ``Psi = Phi - pi sign(J)`` is evaluated from a
regularized integrand so that it is smooth across ``J = 0``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domains import (DEFOCUSING, FOCUSING_COUNTER, FOCUSING_CORO, CubicRoots,
                      Invariants, ModelCase, cubic_roots, domain_contains,
                      e_minus, e_plus, root_derivatives, _inv)
from .errors import (BoundaryDegeneracy, DegenerateRoots, NoConvergence,
                     OutOfRange, OutsideImage, PhaseBranchError, UndefinedAtZeroJ)

SQRT2 = math.sqrt(2.0)
HALF_PI = 0.5 * math.pi
GAP_MIN = 1e-10
PHASE_MARGIN = 1e-9

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def adaptive_gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                            rtol: float = 1e-13, atol: float = 1e-14,
                            max_level: int = 40, init_panels: int = 4,
                            max_panels: int = 4096) -> np.ndarray:
    """Integrate a vector of integrands over [a, b] with adaptive 16-point panels.

    ``f`` maps an array of nodes to an array of shape ``(nk, len(nodes))``
    (a 1-d result is treated as ``nk = 1``).
    A panel is accepted once its 16-point value agrees with the sum over its
    two halves; the finer value is kept.
    """
    edges = np.linspace(a, b, init_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    total = None
    accepted = []
    scale = None
    for _ in range(max_level):
        mid = 0.5 * (lo + hi)
        lo3 = np.concatenate([lo, lo, mid])
        hi3 = np.concatenate([hi, mid, hi])
        c = 0.5 * (lo3 + hi3)
        h = 0.5 * (hi3 - lo3)
        nodes = c[:, None] + h[:, None] * _GL_X[None, :]
        vals = np.atleast_2d(np.asarray(f(nodes.ravel())))
        nk = vals.shape[0]
        vals = vals.reshape(nk, len(lo3), 16) @ _GL_W * h[None, :]
        n = len(lo)
        coarse = vals[:, :n]
        fine = vals[:, n:2 * n] + vals[:, 2 * n:]
        if scale is None:
            scale = np.abs(fine.sum(axis=1))
            total = np.zeros(nk)
        err = np.abs(fine - coarse)
        width = (hi - lo) / (b - a)
        thresh = np.maximum(rtol * scale, atol)[:, None] * np.maximum(width, 1e-3)[None, :]
        ok = np.all(err <= thresh, axis=0)
        total = total + fine[:, ok].sum(axis=1)
        accepted.append(int(ok.sum()))
        if ok.all():
            return total
        if not np.all(np.isfinite(fine[:, ~ok])):
            raise BoundaryDegeneracy("non-finite integrand; point too close to the boundary")
        scale = np.maximum(scale, np.abs(total + fine[:, ~ok].sum(axis=1)))
        lo_r, hi_r = lo[~ok], hi[~ok]
        if len(lo_r) > max_panels:
            raise BoundaryDegeneracy("adaptive quadrature needs too many panels; "
                                     "point too close to the boundary")
        mid_r = 0.5 * (lo_r + hi_r)
        lo = np.concatenate([lo_r, mid_r])
        hi = np.concatenate([mid_r, hi_r])
    raise BoundaryDegeneracy("adaptive quadrature did not converge; point too close to the boundary")


@dataclass(frozen=True)
class QuadratureFrame:
    """Roots and the maps s, sigma, gap of the phi-substitution."""

    case: ModelCase
    J: float
    E: float
    roots: CubicRoots

    def s(self, phi):
        c2 = np.cos(phi) ** 2
        return self.roots.y1 * c2 + self.roots.y2 * (1.0 - c2)

    def gap(self, phi):
        return self.case.gamma * (self.s(phi) - self.roots.y3)

    def sigma(self, phi):
        """sqrt(gap/|y3|); equals sqrt(1 - s/y3) in the defocusing case."""
        return np.sqrt(self.gap(phi) / abs(self.roots.y3))


@dataclass(frozen=True)
class WaveNumbers:
    T: float
    Phi: float          # nan where undefined (J = 0 off the corotating line E < 0)
    Psi: float          # nan on the corotating discontinuity line
    action: float
    k: float
    ell: float
    p: float
    branch: str = "psi"  # which phase fixes p in the corotating case

    @property
    def theta(self) -> float:
        """Phase pT of the Floquet multiplier exp(i p T)."""
        return self.p * self.T


@dataclass(frozen=True)
class DerivCoeffs:
    A1: float
    A2: float
    B1: float
    B2: float
    B3: float
    C1: float
    C2: float
    C3: float
    dy_dE: np.ndarray = field(repr=False)
    dy_dJ: np.ndarray = field(repr=False)
    branch: str = "psi"


def make_frame(case: ModelCase, inv) -> QuadratureFrame:
    inv = _inv(inv)
    status = domain_contains(case, inv)
    if not status.interior:
        raise OutOfRange(
            f"{case.name}: (J, E) = ({inv.J:.6g}, {inv.E:.6g}) is not interior "
            f"({status.kind}{'/' + status.detail if status.detail else ''})")
    try:
        roots = cubic_roots(case, inv)
    except DegenerateRoots as exc:
        raise BoundaryDegeneracy(str(exc)) from exc
    return QuadratureFrame(case, inv.J, inv.E, roots)


def _trig(phi):
    return np.cos(phi) ** 2, np.sin(phi) ** 2


def _on_coro_line(case, J, E):
    return case.corotating and abs(J) <= PHASE_MARGIN and E < 0


def _coro_branch(fr: QuadratureFrame) -> str:
    # Psi is smooth away from J=0, E<0 (y3 -> 0); Phi is smooth away from
    # J=0, E>0 (y1 -> 0).  Use whichever singular root is farther from zero.
    if not fr.case.corotating:
        return "psi"
    return "psi" if abs(fr.roots.y3) > fr.roots.y1 else "phi"


@functools.lru_cache(maxsize=4096)
def _base(case: ModelCase, J: float, E: float):
    fr = make_frame(case, (J, E))
    y1, y2, y3 = fr.roots.y1, fr.roots.y2, fr.roots.y3
    g_sign = case.gamma
    a = math.sqrt(abs(y3))
    psi_ok = a > 0.0

    def f(phi):
        c2, s2 = _trig(phi)
        s = y1 * c2 + y2 * s2
        g = g_sign * (s - y3)
        rg = np.sqrt(g)
        out = np.empty((4, phi.size))
        out[0] = 1.0 / rg
        out[1] = s / rg
        out[2] = 1.0 / (a * rg * (a + rg)) if psi_ok else 0.0
        out[3] = (y2 - y1) ** 2 * s2 * c2 * rg / s
        return out

    vals = adaptive_gauss_legendre(f, 0.0, HALF_PI)
    T = 2 * SQRT2 * vals[0]
    h = 2 * SQRT2 * vals[2]          # Psi / J up to the sign -gamma
    Psi = -g_sign * J * h if psi_ok else math.nan
    return fr, T, vals[1], Psi, SQRT2 * vals[3], h


@functools.lru_cache(maxsize=4096)
def _phi_integral(case: ModelCase, J: float, E: float):
    """2 sqrt(2) int 1/(s sqrt(gap)) = Phi/J, plus the Phi-derivative kernels."""
    fr = make_frame(case, (J, E))
    y1, y2, y3 = fr.roots.y1, fr.roots.y2, fr.roots.y3
    if y1 <= 0.0:
        raise UndefinedAtZeroJ("Phi is undefined when the orbit passes through the origin")
    g_sign = case.gamma

    def f(phi):
        c2, s2 = _trig(phi)
        s = y1 * c2 + y2 * s2
        g = g_sign * (s - y3)
        rg = np.sqrt(g)
        out = np.empty((3, phi.size))
        out[0] = 1.0 / (s * rg)
        out[1] = 2 * c2 / (s * s * rg) + (1 + c2) / (s * g * rg)
        out[2] = 2 * s2 / (s * s * rg) + (1 + s2) / (s * g * rg)
        return out

    vals = adaptive_gauss_legendre(f, 0.0, HALF_PI)
    return 2 * SQRT2 * vals[0], SQRT2 * vals[1], SQRT2 * vals[2]


def _key(case, inv):
    inv = _inv(inv)
    return case, float(inv.J), float(inv.E)


def quadrature_frame(case: ModelCase, inv) -> QuadratureFrame:
    return make_frame(case, inv)


def period_T(case: ModelCase, inv) -> float:
    """Period of |W|; for the defocusing J=0 orbit this is half the period of W."""
    return _base(*_key(case, inv))[1]


def phase_Phi(case: ModelCase, inv) -> float:
    """Phase increment of W over one period of |W|.

    Raises UndefinedAtZeroJ at J = 0, except on the corotating line E < 0
    where the orbit does not wind around the origin and Phi = 0.
    """
    case, J, E = _key(case, inv)
    if J == 0.0:
        make_frame(case, (J, E))
        if case.corotating and E < 0:
            return 0.0
        raise UndefinedAtZeroJ("Phi is undefined at J = 0")
    return J * _phi_integral(case, J, E)[0]


def renorm_Psi(case: ModelCase, inv) -> float:
    """Renormalized phase Phi - pi sign(J), from its regularized integral."""
    case, J, E = _key(case, inv)
    if _on_coro_line(case, J, E):
        raise PhaseBranchError("Psi jumps by 2 pi across J = 0, E < 0 in the corotating case")
    Psi = _base(case, J, E)[3]
    if not math.isfinite(Psi):
        raise PhaseBranchError("Psi is undefined on the corotating discontinuity line")
    return Psi


def action(case: ModelCase, inv) -> float:
    """Action 2 int sqrt(2(E - V_J(r))) dr over one oscillation."""
    return _base(*_key(case, inv))[4]


def wave_numbers(case: ModelCase, inv) -> WaveNumbers:
    case, J, E = _key(case, inv)
    fr, T, _, Psi, act, _ = _base(case, J, E)
    k = math.pi / T
    branch = _coro_branch(fr)
    try:
        Phi = phase_Phi(case, (J, E))
    except UndefinedAtZeroJ:
        Phi = math.nan
    if branch == "phi":
        p = Phi / T
        if _on_coro_line(case, J, E):
            Psi = math.nan
    else:
        p = k + Psi / T
    return WaveNumbers(T=T, Phi=Phi, Psi=Psi, action=act, k=k, ell=p - k, p=p, branch=branch)


@functools.lru_cache(maxsize=4096)
def _derivs(case: ModelCase, J: float, E: float):
    fr, T, I, Psi, _, h = _base(case, J, E)
    y1, y2, y3 = fr.roots.y1, fr.roots.y2, fr.roots.y3
    gm = case.gamma
    branch = _coro_branch(fr)
    a = math.sqrt(abs(y3))
    use_psi = branch == "psi"

    def f(phi):
        c2, s2 = _trig(phi)
        s = y1 * c2 + y2 * s2
        g = gm * (s - y3)
        b = np.sqrt(g)
        g32 = g * b
        out = np.empty((6, phi.size))
        out[0] = (1 + c2) / g32
        out[1] = (1 + s2) / g32
        if use_psi:
            ab2 = (a + b) ** 2
            t1 = (2 * a + b) / (a ** 3 * b * ab2)
            t2 = (a + 2 * b) / (a * b ** 3 * ab2)
            out[2] = t1 + t2 * (1 + c2)
            out[3] = t1 + t2 * (1 + s2)
        else:
            out[2] = out[3] = 0.0
        out[4] = (2 * c2 * g - gm * s * (1 + c2)) / g32
        out[5] = (2 * s2 * g - gm * s * (1 + s2)) / g32
        return out

    v = SQRT2 * adaptive_gauss_legendre(f, 0.0, HALF_PI)
    k = math.pi / T
    A1, A2 = v[0], v[1]
    C1, C2 = k * v[4], k * v[5]
    N = 2 * SQRT2 * k * I
    C3 = k * N / math.pi
    dE, dJ = root_derivatives(case, (J, E), fr.roots)
    T_E = -gm * (A1 * dE[0] + A2 * dE[1])
    T_J = -gm * (A1 * dJ[0] + A2 * dJ[1])
    if use_psi:
        B1, B2, B3 = v[2], v[3], h
        Psi_E = J * (B1 * dE[0] + B2 * dE[1])
        Psi_J = J * (B1 * dJ[0] + B2 * dJ[1]) - gm * B3
    else:
        B3, B1, B2 = _phi_integral(case, J, E)
        Psi_E = -J * (B1 * dE[0] + B2 * dE[1])
        Psi_J = -J * (B1 * dJ[0] + B2 * dJ[1]) + B3
    coeffs = DerivCoeffs(A1, A2, B1, B2, B3, C1, C2, C3, dE, dJ, branch)
    jac = np.array([[T_E, Psi_E], [T_J, Psi_J]])
    return coeffs, jac


def derivatives(case: ModelCase, inv):
    """Kernel coefficients and the Jacobian [[T_E, Psi_E], [T_J, Psi_J]].

    In the corotating case the phase column holds the derivatives of Psi or
    of Phi, whichever is smooth at the point; the two differ by a constant.
    """
    coeffs, jac = _derivs(*_key(case, inv))
    return coeffs, jac.copy()


def kam_delta(case: ModelCase, inv) -> float:
    """Determinant T_E Psi_J - Psi_E T_J of the (J,E) -> (T,Psi) map."""
    jac = _derivs(*_key(case, inv))[1]
    return float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])


def charge_N(case: ModelCase, inv) -> float:
    case, J, E = _key(case, inv)
    _, T, I, _, _, _ = _base(case, J, E)
    return 2 * SQRT2 * (math.pi / T) * I


def momentum_M(case: ModelCase, inv) -> float:
    case, J, E = _key(case, inv)
    wn = wave_numbers(case, (J, E))
    return wn.p / (2 * wn.k) * charge_N(case, (J, E)) - 0.5 * J * wn.T


# ---------------------------------------------------------------------------
# (J, E) <-> (T, Psi)


def psi_hat(case: ModelCase, T: float) -> float:
    """Bound on |Psi| at period T (defocusing and counter-rotating cases)."""
    r = math.sqrt((T * T + 2 * math.pi ** 2) / 3.0)
    if case.defocusing:
        return r - math.pi
    if case.omega == 1:
        return math.pi - r
    return math.inf


def in_image(case: ModelCase, T: float, Psi: float) -> bool:
    if not (math.isfinite(T) and math.isfinite(Psi)):
        return False
    if case.defocusing:
        return T > math.pi and abs(Psi) < psi_hat(case, T)
    if case.omega == 1:
        return 0 < T < math.pi and abs(Psi) < psi_hat(case, T)
    return T > 0


def map_to_TPsi(case: ModelCase, inv):
    case, J, E = _key(case, inv)
    wn = wave_numbers(case, (J, E))
    return wn.T, (wn.Psi if wn.branch == "psi" else wn.p * wn.T - math.pi)


def _seed_points(case: ModelCase, n: int = 32):
    u = np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1]   # Chebyshev points in (-1, 1)
    v = 0.5 * (u + 1.0)
    pts = []
    if case.defocusing:
        jmax = 2.0 / (3.0 * math.sqrt(3.0))
        for Jv in 0.999 * jmax * u:
            em, ep = e_minus(case, Jv), e_plus(Jv)
            for t in v:
                pts.append((Jv, em + (ep - em) * t))
    else:
        for Jv in 4.0 * u:
            em = e_minus(case, Jv)
            for t in v:
                pts.append((Jv, em + 10.0 ** (-3 + 4.5 * t)))
    return pts


@functools.lru_cache(maxsize=8)
def _seed_table(case: ModelCase):
    rows = []
    for J, E in _seed_points(case):
        try:
            T, Psi = map_to_TPsi(case, (J, E))
        except Exception:
            continue
        rows.append((J, E, T, Psi))
    return np.array(rows)


def invert_TPsi(case: ModelCase, T: float, Psi: float, tol: float = 1e-12,
                max_iter: int = 50) -> Invariants:
    """Newton inverse of (J, E) -> (T, Psi), seeded from a coarse table.

    Raises
    ------
    OutsideImage
        (T, Psi) violates the known image bounds.
    NoConvergence
        Newton did not reach the tolerance from any of the nearest seeds.
    """
    T, Psi = float(T), float(Psi)
    if not in_image(case, T, Psi):
        raise OutsideImage(f"{case.name}: (T, Psi) = ({T}, {Psi}) is outside the image")
    table = _seed_table(case)
    dist = (np.log(table[:, 2] / T)) ** 2 + ((table[:, 3] - Psi) / math.pi) ** 2
    order = np.argsort(dist)
    target = np.array([T, Psi])
    last_err = None
    for idx in order[:6]:
        x = table[idx, :2].copy()
        try:
            return _newton_invert(case, x, target, tol, max_iter)
        except (NoConvergence, OutOfRange, PhaseBranchError) as exc:
            last_err = exc
    raise NoConvergence(f"inversion failed at (T, Psi) = ({T}, {Psi}): {last_err}")


def _residual(case, x, target):
    Tv, Pv = map_to_TPsi(case, (x[0], x[1]))
    return np.array([Tv, Pv]) - target


def _newton_invert(case, x, target, tol, max_iter):
    r = _residual(case, x, target)
    for _ in range(max_iter):
        nr = np.linalg.norm(r)
        if nr < tol * max(1.0, np.linalg.norm(target)):
            return Invariants(float(x[0]), float(x[1]))
        jac = derivatives(case, (x[0], x[1]))[1]
        # columns of jac.T are d/dE and d/dJ; unknowns ordered (J, E)
        Jm = np.array([[jac[1, 0], jac[0, 0]], [jac[1, 1], jac[0, 1]]])
        step = np.linalg.solve(Jm, -r)
        t = 1.0
        for _ in range(30):
            xn = x + t * step
            try:
                rn = _residual(case, xn, target)
                if np.linalg.norm(rn) < nr:
                    break
            except (OutOfRange, BoundaryDegeneracy, PhaseBranchError):
                pass
            t *= 0.5
        else:
            raise NoConvergence("line search failed")
        x, r = xn, rn
    raise NoConvergence(f"no convergence in {max_iter} Newton iterations")

"""Model cases, effective potentials, existence domains and cubic roots.

The stationary profile equation is

    W'' + omega W + gamma |W|^2 W = 0,

with conserved angular momentum ``J = Im(conj(W) W')`` and energy
``E = |W'|^2/2 + V_J(|W|)``, where

    V_J(r) = J^2/(2 r^2) + omega r^2/2 + gamma r^4/4.

Writing ``y = r^2`` gives ``4 y (E - V_J(sqrt(y))) = P(y)`` with

    P(y) = -gamma y^3 - 2 omega y^2 + 4 E y - 2 J^2,

whose three real roots bound the motion of ``|W|^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateRoots, OutOfRange

# Interior of D requires this distance (in E) from every boundary curve.
BOUNDARY_MARGIN = 1e-9
ROOT_GAP_MIN = 1e-10
J2_MAX_DEFOCUSING = 4.0 / 27.0


@dataclass(frozen=True)
class ModelCase:
    """Sign pair (gamma, omega) selecting one family of periodic waves."""

    gamma: int
    omega: int
    name: str

    def __post_init__(self):
        if self.gamma not in (-1, 1) or self.omega not in (-1, 1):
            raise OutOfRange("gamma and omega must be +1 or -1")
        if self.gamma == -1 and self.omega == -1:
            raise OutOfRange(
                "defocusing case with omega=-1 has no nontrivial bounded solutions")

    @property
    def focusing(self) -> bool:
        return self.gamma == 1

    @property
    def defocusing(self) -> bool:
        return self.gamma == -1

    @property
    def corotating(self) -> bool:
        return self.gamma == 1 and self.omega == -1

    def mu(self, p):
        """Coefficient of Q in the reduced evolution equation: 1-p^2 or -(1+p^2)."""
        return self.omega - p * p

    @classmethod
    def from_name(cls, name: str) -> "ModelCase":
        try:
            return CASES[name.strip().lower().replace("_", "-")]
        except KeyError:
            raise OutOfRange(
                f"unknown case {name!r}; expected one of {sorted(CASES)}") from None

    def __str__(self):
        return self.name


DEFOCUSING = ModelCase(-1, 1, "defocusing")
FOCUSING_COUNTER = ModelCase(1, 1, "focusing-counter")
FOCUSING_CORO = ModelCase(1, -1, "focusing-coro")

CASES = {c.name: c for c in (DEFOCUSING, FOCUSING_COUNTER, FOCUSING_CORO)}


@dataclass(frozen=True)
class Invariants:
    J: float
    E: float


@dataclass(frozen=True)
class CubicRoots:
    """Roots of the case polynomial in the fixed ordering convention.

    Defocusing: ``0 <= y1 < y2 < y3``.  Focusing: ``y3 <= 0 <= y1 < y2``.
    The motion of ``|W|^2`` takes place on ``[y1, y2]`` in every case.
    """

    y1: float
    y2: float
    y3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.y1, self.y2, self.y3])


@dataclass(frozen=True)
class PotentialFrame:
    """Critical and turning radii of the effective potential V_J.

    ``q`` always parametrizes J (``J = q(1-q^2)``, ``q(q^2-1)`` or
    ``q(1+q^2)``); ``Q`` is the second defocusing root and is None in the
    focusing cases, which have a single critical radius.
    """

    q: float
    Q: Optional[float]
    r_q: float
    r_Q: Optional[float]
    r1: Optional[float] = None
    r2: Optional[float] = None
    r3: Optional[float] = None


@dataclass(frozen=True)
class DomainStatus:
    kind: str                      # "interior", "boundary" or "outside"
    detail: Optional[str] = None   # "plane_wave", "homoclinic", "soliton", ...

    @property
    def interior(self) -> bool:
        return self.kind == "interior"


def _inv(inv) -> Invariants:
    if isinstance(inv, Invariants):
        return inv
    J, E = inv
    return Invariants(float(J), float(E))


def cubic_poly(case: ModelCase, J: float, E: float, y):
    """The case polynomial P(y) = -gamma y^3 - 2 omega y^2 + 4 E y - 2 J^2."""
    y = np.asarray(y, dtype=float)
    return -case.gamma * y**3 - 2 * case.omega * y**2 + 4 * E * y - 2 * J * J


def cubic_poly_prime(case: ModelCase, E: float, y):
    y = np.asarray(y, dtype=float)
    return -3 * case.gamma * y**2 - 4 * case.omega * y + 4 * E


def _monic(case, J, E):
    # y^3 + a y^2 + b y + c, obtained from P by dividing by -gamma
    g = case.gamma
    return 2.0 * case.omega * g, -4.0 * E * g, 2.0 * J * J * g


def _real_cubic_roots(a, b, c):
    """Three real roots of y^3 + a y^2 + b y + c, ascending (trigonometric form)."""
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    if p >= 0.0:
        # triple root (or complex pair): only p == 0 is admissible here
        t = -np.cbrt(q)
        return np.array([t, t, t]) - shift
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    arg = min(1.0, max(-1.0, arg))
    theta = math.acos(arg) / 3.0
    t = m * np.cos(theta - 2.0 * np.pi * np.arange(3) / 3.0)
    return np.sort(t - shift)


def _newton_polish(a, b, c, y):
    f = ((y + a) * y + b) * y + c
    for _ in range(3):
        df = (3.0 * y + 2.0 * a) * y + b
        if df == 0.0:
            break
        y_new = y - f / df
        f_new = ((y_new + a) * y_new + b) * y_new + c
        if abs(f_new) >= abs(f):
            break
        y, f = y_new, f_new
    return y


def cubic_roots(case: ModelCase, inv) -> CubicRoots:
    """Roots y1, y2, y3 of the case polynomial at (J, E).

    The closed-form trigonometric solution is refined by one guarded Newton
    step per root; the root of smallest modulus is then recomputed from the
    product rule, which keeps it accurate when it is close to zero.

    Raises
    ------
    DegenerateRoots
        If ``y2 - y1`` or the gap between the oscillation interval and the
        third root is below 1e-10 (the point is on the boundary of D).
    """
    inv = _inv(inv)
    J, E = inv.J, inv.E
    a, b, c = _monic(case, J, E)
    u = _real_cubic_roots(a, b, c)
    u = np.array([_newton_polish(a, b, c, float(x)) for x in u])
    i_small = int(np.argmin(np.abs(u)))
    others = np.delete(u, i_small)
    prod_others = others[0] * others[1]
    if c == 0.0:
        u[i_small] = 0.0
    elif prod_others != 0.0:
        u[i_small] = -c / prod_others
    u = np.sort(u)
    if case.defocusing:
        y1, y2, y3 = u
        y1 = max(y1, 0.0)
        gap = y3 - y2
    else:
        y3, y1, y2 = u
        y1 = max(y1, 0.0)
        y3 = min(y3, 0.0)
        gap = y1 - y3
    if y2 - y1 < ROOT_GAP_MIN or gap < ROOT_GAP_MIN:
        raise DegenerateRoots(
            f"{case.name}: roots ({y1:.3g}, {y2:.3g}, {y3:.3g}) are degenerate at "
            f"(J, E) = ({J:.6g}, {E:.6g})")
    return CubicRoots(float(y1), float(y2), float(y3))


def root_derivatives(case: ModelCase, inv, roots: CubicRoots | None = None):
    """Implicit derivatives dy_i/dE and dy_i/dJ, returned as two arrays of length 3."""
    inv = _inv(inv)
    if roots is None:
        roots = cubic_roots(case, inv)
    y = roots.as_array()
    dP = cubic_poly_prime(case, inv.E, y)
    return -4.0 * y / dP, 4.0 * inv.J / dP


# ---------------------------------------------------------------------------
# effective potential and the parametrization of J


def effective_potential(case: ModelCase, J: float, r):
    r = np.asarray(r, dtype=float)
    return J * J / (2 * r**2) + case.omega * r**2 / 2 + case.gamma * r**4 / 4


def _solve_monotone(f, target, lo, hi, increasing):
    # bisection to a narrow bracket, then Newton with a numerical slope
    flo = f(lo) - target
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = f(mid) - target
        if (fm > 0) == increasing:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-9:
            break
    x = 0.5 * (lo + hi)
    for _ in range(4):
        h = 1e-7
        df = (f(x + h) - f(x - h)) / (2 * h)
        if df == 0:
            break
        step = (f(x) - target) / df
        if not lo - 1e-8 <= x - step <= hi + 1e-8:
            break
        x -= step
    return x


def parametrize_J(case: ModelCase, J: float, E: float | None = None) -> PotentialFrame:
    """Critical radii of V_J, plus turning radii when E is supplied.

    Raises
    ------
    OutOfRange
        Defocusing case with ``J^2 > 4/27``.
    """
    J = float(J)
    sgn = 1.0 if J >= 0 else -1.0
    aJ = abs(J)
    if case.defocusing:
        if J * J > J2_MAX_DEFOCUSING * (1 + 1e-14):
            raise OutOfRange(f"defocusing case requires J^2 <= 4/27, got J={J}")
        third = 1.0 / math.sqrt(3.0)
        f = lambda x: x * (1 - x * x)  # noqa: E731
        if aJ >= 2.0 / (3.0 * math.sqrt(3.0)):
            q = Q = third
        else:
            q = 0.0 if aJ == 0 else _solve_monotone(f, aJ, 0.0, third, True)
            Q = 1.0 if aJ == 0 else _solve_monotone(f, aJ, third, 1.0, False)
        q, Q = sgn * q, sgn * Q
        r_q = math.sqrt(max(1 - q * q, 0.0))
        r_Q = math.sqrt(max(1 - Q * Q, 0.0))
    elif case.omega == 1:
        f = lambda x: x * (x * x - 1)  # noqa: E731
        q = 1.0 if aJ == 0 else _solve_monotone(f, aJ, 1.0, 2.0 + aJ ** (1 / 3), True)
        q *= sgn
        Q, r_Q = None, None
        r_q = math.sqrt(q * q - 1)
    else:
        f = lambda x: x * (1 + x * x)  # noqa: E731
        q = 0.0 if aJ == 0 else _solve_monotone(f, aJ, 0.0, 1.0 + aJ ** (1 / 3), True)
        q *= sgn
        Q, r_Q = None, None
        r_q = math.sqrt(1 + q * q)
    r1 = r2 = r3 = None
    if E is not None:
        roots = cubic_roots(case, Invariants(J, float(E)))
        r1, r2 = math.sqrt(roots.y1), math.sqrt(roots.y2)
        r3 = math.sqrt(roots.y3) if roots.y3 >= 0 else math.nan
    return PotentialFrame(q, Q, r_q, r_Q, r1, r2, r3)


def e_minus(case: ModelCase, J: float) -> float:
    """Lower energy boundary E_-(J) (minimum of the effective potential well)."""
    fr = parametrize_J(case, J)
    if case.defocusing:
        Q2 = fr.Q * fr.Q
        return 0.25 * (1 - Q2) * (1 + 3 * Q2)
    q2 = fr.q * fr.q
    if case.omega == 1:
        return 0.25 * (q2 - 1) * (3 * q2 + 1)
    return 0.25 * (q2 + 1) * (3 * q2 - 1)


def e_plus(J: float) -> float:
    """Upper energy boundary E_+(J) of the defocusing domain."""
    fr = parametrize_J(DEFOCUSING, J)
    q2 = fr.q * fr.q
    return 0.25 * (1 - q2) * (1 + 3 * q2)


def domain_contains(case: ModelCase, inv, margin: float = BOUNDARY_MARGIN) -> DomainStatus:
    """Classify (J, E) as interior, boundary or outside of the existence domain."""
    inv = _inv(inv)
    J, E = inv.J, inv.E
    if not (math.isfinite(J) and math.isfinite(E)):
        return DomainStatus("outside", "nonfinite")
    if case.defocusing:
        if J * J > J2_MAX_DEFOCUSING * (1 + 1e-12):
            return DomainStatus("outside", "J_out_of_range")
        em, ep = e_minus(case, J), e_plus(J)
        if E - em > margin and ep - E > margin:
            return DomainStatus("interior")
        if abs(E - em) <= margin:
            return DomainStatus("boundary", "plane_wave")
        if abs(E - ep) <= margin:
            degenerate = J * J >= J2_MAX_DEFOCUSING * (1 - 1e-12)
            return DomainStatus("boundary", "plane_wave" if degenerate else "homoclinic")
        return DomainStatus("outside")
    if case.corotating and abs(J) <= margin and abs(E) <= margin:
        return DomainStatus("outside", "soliton")
    em = e_minus(case, J)
    if E - em > margin:
        return DomainStatus("interior")
    if abs(E - em) <= margin:
        return DomainStatus("boundary", "plane_wave")
    return DomainStatus("outside")


def require_interior(case: ModelCase, inv) -> Invariants:
    inv = _inv(inv)
    status = domain_contains(case, inv)
    if not status.interior:
        raise OutOfRange(
            f"{case.name}: (J, E) = ({inv.J:.6g}, {inv.E:.6g}) is not interior "
            f"({status.kind}{'/' + status.detail if status.detail else ''})")
    return inv


def homoclinic_reference(q: float, x):
    """Defocusing homoclinic orbit at E = E_+(J), J = q(1-q^2), q^2 < 1/3.

    The dtype of ``x`` is preserved, so extended-precision input
    (``np.longdouble``) yields an extended-precision profile.
    """
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(float)
    one = x.dtype.type(1)
    q = x.dtype.type(q)
    if q * q >= one / 3:
        raise OutOfRange("homoclinic orbits require q^2 < 1/3")
    c = np.sqrt((one - 3 * q * q) / 2)
    th = np.tanh(c * x)
    if q == 0:
        return (th * one).astype(np.result_type(x.dtype, np.complex64))
    modulus = np.sqrt(2 * (q * q + c * c * th * th))
    phase = q * x + np.arctan((c / q) * th)
    return modulus * np.exp(1j * phase.astype(np.result_type(x.dtype, np.complex64)))

"""Split-step evolution of the reduced NLS and Ginzburg-Landau equations for Q(z, t).

NLS:  i Q_t + 4 i p k Q_z + 4 k^2 Q_zz + mu Q + gamma |Q|^2 Q = 0
GL:     Q_t = 4 k^2 Q_zz + 4 i p k Q_z + (1 - p^2) Q - |Q|^2 Q      (defocusing)

Both linear parts are diagonal in Fourier space with symbol
``lam_m = 4 k^2 m^2 + 4 p k m - mu``; the NLS nonlinear sub-flow is an
exact phase rotation and the GL one the exact solution of r' = -r^3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .domains import ModelCase, DEFOCUSING
from .errors import BlowUp, OutOfRange
from .profile import WaveProfile, functionals_of, shoot_profile, wavenumbers_m

BLOWUP_LEVEL = 1e6


@dataclass(frozen=True)
class SymmetryAction:
    phi: float
    xi: float

    def apply(self, Q: np.ndarray) -> np.ndarray:
        """exp(i phi) Q(. + xi), with the shift done exactly in Fourier space."""
        return np.exp(1j * self.phi) * shift(Q, self.xi)


@dataclass
class EvolutionTrace:
    times: np.ndarray
    rho: np.ndarray
    driftN: np.ndarray
    driftM: np.ndarray
    driftE: np.ndarray
    finalState: np.ndarray
    deviation: np.ndarray = field(default=None)
    blowup: Optional[float] = None

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w") as fh:
            if header:
                fh.write("# " + header + "\n")
            fh.write("t,rho,driftN,driftM,driftE\n")
            for row in zip(self.times, self.rho, self.driftN, self.driftM, self.driftE):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def shift(Q: np.ndarray, xi: float) -> np.ndarray:
    m = wavenumbers_m(len(Q))
    return np.fft.ifft(np.fft.fft(Q) * np.exp(1j * m * xi))


def symbol(n: int, k: float, p: float, mu: float) -> np.ndarray:
    m = wavenumbers_m(n)
    return 4 * k * k * m * m + 4 * p * k * m - mu


def h1_norm(Q: np.ndarray) -> float:
    n = len(Q)
    qh = np.fft.fft(Q) / n
    m = wavenumbers_m(n)
    return math.sqrt(2 * math.pi * np.sum((1 + m * m) * np.abs(qh) ** 2))


def _ref_samples(reference) -> np.ndarray:
    return reference.Q if isinstance(reference, WaveProfile) else np.asarray(reference, complex)


def orbital_distance(Q: np.ndarray, reference: Union[WaveProfile, np.ndarray]):
    """H^1 distance from Q to the orbit {exp(i phi) Q_ref(. + xi)}.

    Returns ``(rho, SymmetryAction)`` with the minimizing phase and shift.
    """
    u = np.asarray(Q, dtype=complex)
    v = _ref_samples(reference)
    if len(u) != len(v):
        raise ValueError("Q and reference must share the grid")
    n = len(u)
    m = wavenumbers_m(n)
    w = 1 + m * m
    uh, vh = np.fft.fft(u) / n, np.fft.fft(v) / n
    c = w * np.conj(uh) * vh
    # S(xi) = sum_m c_m exp(i m xi); all grid shifts at once
    S_grid = np.fft.ifft(c) * n
    j = int(np.argmax(np.abs(S_grid)))
    dxi = 2 * np.pi / n

    def S(xi):
        return np.sum(c * np.exp(1j * m * xi))

    def neg_abs2(xi):
        return -abs(S(xi)) ** 2

    xi0 = j * dxi
    if np.abs(S_grid).max() > 0:
        try:
            r = minimize_scalar(neg_abs2, bracket=(xi0 - dxi, xi0, xi0 + dxi), method="golden",
                                tol=1e-10)
            xi = float(r.x) if -r.fun >= abs(S(xi0)) ** 2 else xi0
        except ValueError:
            # flat correlation (e.g. shift-invariant data): the grid maximum is exact
            xi = xi0
        # Newton on d|S|^2/dxi = 2 Re(conj(S) S')
        for _ in range(6):
            e = np.exp(1j * m * xi)
            s0 = np.sum(c * e)
            s1 = np.sum(1j * m * c * e)
            s2 = np.sum(-(m * m) * c * e)
            g = 2 * (np.conj(s0) * s1).real
            hss = 2 * (abs(s1) ** 2 + (np.conj(s0) * s2).real)
            if hss >= 0:
                break
            step = g / hss
            if abs(step) > dxi:
                break
            xi -= step
            if abs(step) < 1e-15:
                break
    else:
        xi = 0.0
    s = S(xi)
    phi = -math.atan2(s.imag, s.real) if abs(s) > 0 else 0.0
    act = SymmetryAction(phi % (2 * np.pi), xi % (2 * np.pi))
    rho = h1_norm(u - act.apply(v))
    return rho, act


def _record(case, Q, k, base, ref):
    N, M, E = functionals_of(case, Q, k)
    rho = orbital_distance(Q, ref)[0] if ref is not None else math.nan
    dev = h1_norm(Q - ref) if ref is not None else math.nan
    return rho, abs(N - base[0]), abs(M - base[1]), abs(E - base[2]), dev


def _trace(times, rec, Q, blowup=None):
    rec = np.array(rec, dtype=float).reshape(-1, 5)
    return EvolutionTrace(times=np.array(times), rho=rec[:, 0], driftN=rec[:, 1],
                          driftM=rec[:, 2], driftE=rec[:, 3], finalState=Q,
                          deviation=rec[:, 4], blowup=blowup)


def _run(case, Q0, k, p, dt, t_end, record_every, reference, linear_half, nonlinear):
    Q = np.array(Q0, dtype=complex)
    n = len(Q)
    if n & (n - 1):
        raise ValueError("grid size must be a power of two")
    ref = None if reference is None else _ref_samples(reference)
    base = functionals_of(case, Q, k)
    nsteps = int(round(t_end / dt))
    times, rec = [0.0], [_record(case, Q, k, base, ref)]
    qh = np.fft.fft(Q)
    for step in range(1, nsteps + 1):
        qh *= linear_half
        Q = np.fft.ifft(qh)
        Q = nonlinear(Q)
        qh = np.fft.fft(Q)
        qh *= linear_half
        if step % record_every == 0 or step == nsteps:
            Q = np.fft.ifft(qh)
            amp = np.max(np.abs(Q))
            if not np.isfinite(amp) or amp > BLOWUP_LEVEL:
                t = step * dt
                raise BlowUp(f"max|Q| = {amp:.3g} at t = {t:.6g}", time=t,
                             trace=_trace(times, rec, Q, blowup=t))
            times.append(step * dt)
            rec.append(_record(case, Q, k, base, ref))
    return _trace(times, rec, np.fft.ifft(qh))


def evolve_nls(case: ModelCase, Q0: np.ndarray, k: float, p: float, dt: float, t_end: float,
               record_every: int = 100, reference=None) -> EvolutionTrace:
    """Strang splitting for the reduced NLS equation.

    ``reference`` (profile or samples) is the wave used for rho; it defaults
    to Q0.  Raises BlowUp (carrying the partial trace) if max|Q| > 1e6.
    """
    if dt > 1e-2:
        raise ValueError("dt must be at most 1e-2")
    lam = symbol(len(Q0), k, p, case.mu(p))
    half = np.exp(-0.5j * dt * lam)
    g = case.gamma

    def nonlinear(Q):
        return Q * np.exp(1j * g * dt * np.abs(Q) ** 2)

    ref = Q0 if reference is None else reference
    return _run(case, Q0, k, p, dt, t_end, record_every, ref, half, nonlinear)


def evolve_gl(case: ModelCase, Q0: np.ndarray, k: float, p: float, dt: float, t_end: float,
              record_every: int = 100, reference=None) -> EvolutionTrace:
    """Strang splitting for the Ginzburg-Landau flow (defocusing case only)."""
    if not case.defocusing:
        raise OutOfRange("the Ginzburg-Landau flow is defined for the defocusing case")
    lam = symbol(len(Q0), k, p, case.mu(p))
    half = np.exp(-0.5 * dt * lam)

    def nonlinear(Q):
        r2 = np.abs(Q) ** 2
        return Q / np.sqrt(1 + 2 * r2 * dt)

    ref = Q0 if reference is None else reference
    return _run(case, Q0, k, p, dt, t_end, record_every, ref, half, nonlinear)


def gl_vector_field(Q: np.ndarray, k: float, p: float) -> np.ndarray:
    """Right-hand side of the Ginzburg-Landau equation for Q."""
    lam = symbol(len(Q), k, p, DEFOCUSING.mu(p))
    return np.fft.ifft(-lam * np.fft.fft(Q)) - np.abs(Q) ** 2 * Q


def gl_growth_rate(profile: WaveProfile, n: int = 64, h: float = 1e-7) -> float:
    """Largest eigenvalue of the linearized GL vector field at the profile.

    The Jacobian is built column by column from central differences of
    ``gl_vector_field`` in the real Fourier basis used for H, so it is
    independent of the operator assembly.
    """
    from .spectral import from_coeffs, to_coeffs
    Q = profile.Q
    N = len(Q)
    dim = 2 * (2 * n + 1)
    A = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        q = from_coeffs(e, N)
        d = (gl_vector_field(Q + h * q, profile.k, profile.p)
             - gl_vector_field(Q - h * q, profile.k, profile.p)) / (2 * h)
        A[:, j] = to_coeffs(d, n)
    return float(np.max(np.linalg.eigvals(A).real))


def random_perturbation(gridN: int, seed: int) -> np.ndarray:
    """Seeded band-limited field (modes |m| <= gridN/8) with unit H^1 norm."""
    rng = np.random.default_rng(seed)
    m = wavenumbers_m(gridN)
    band = np.abs(m) <= gridN // 8
    coef = np.zeros(gridN, dtype=complex)
    nb = int(band.sum())
    coef[band] = rng.standard_normal(nb) + 1j * rng.standard_normal(nb)
    R = np.fft.ifft(coef)
    return R / h1_norm(R)


def stability_experiment(case: ModelCase, inv, epsilon: float = 1e-3, t_end: float = 100.0,
                         seed: int = 0, gridN: int = 256, dt: float = 1e-3,
                         record_every: int = 100):
    """Evolve Q_{J,E} + epsilon R under NLS and report sup_t rho/epsilon."""
    if epsilon > 1e-2:
        raise ValueError("epsilon must be at most 1e-2")
    prof = shoot_profile(case, inv, gridN, escalate=False)
    R = random_perturbation(gridN, seed)
    Q0 = prof.Q + epsilon * R
    trace = evolve_nls(case, Q0, prof.k, prof.p, dt, t_end, record_every, reference=prof)
    return float(np.max(trace.rho) / epsilon), trace

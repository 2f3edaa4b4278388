"""Second variation H of the modified energy at a wave profile, in a real Fourier basis.

Writing a perturbation as ``u + i v`` with real u, v, the operator is

    [[-4k^2 d_zz - mu + a,   4pk d_z + b          ],
     [-4pk d_z + b,          -4k^2 d_zz - mu + c ]]

with ``a = s(3R^2 + I^2)``, ``b = 2 s R I``, ``c = s(R^2 + 3I^2)`` where
``Q = R + i I`` and ``s = -gamma`` (+1 defocusing, -1 focusing).  Each
component is expanded in the orthonormal basis
``1/sqrt(2pi), cos(mz)/sqrt(pi), sin(mz)/sqrt(pi)``, m = 1..n, so the L2
inner product ``Re int conj(q1) q2 dz`` is the Euclidean one on
coefficient vectors.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigh, toeplitz

from .domains import ModelCase
from .errors import AliasWarning
from .profile import WaveProfile, shoot_profile, spectral_derivative, wavenumbers_m

ALIAS_TOL = 1e-10
TOL_ZERO_REL = 1e-8


@dataclass
class OperatorMatrix:
    n: int
    entries: np.ndarray
    k: float
    p: float
    mu: float
    case: ModelCase

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def apply(self, q: np.ndarray) -> np.ndarray:
        """Apply to complex samples q (any grid size); returns samples on the same grid."""
        return from_coeffs(self.entries @ to_coeffs(q, self.n), len(q))


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    n_negative: int
    n_positive: int
    kernel_dim_estimate: int
    kernel_residuals: dict
    tol_zero: float
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)
    kernel_alignment: float = math.nan

    def to_json(self) -> dict:
        return {"n_negative": self.n_negative, "n_positive": self.n_positive,
                "kernel_dim_estimate": self.kernel_dim_estimate,
                "kernel_residuals": {k: float(v) for k, v in self.kernel_residuals.items()},
                "kernel_alignment": float(self.kernel_alignment),
                "tol_zero": self.tol_zero,
                "lowest": [float(x) for x in self.eigenvalues[:8]]}


def _unitary(n: int) -> np.ndarray:
    """Columns: real basis (1, cos 1..n, sin 1..n) in the complex basis e^{imz}/sqrt(2pi), m=-n..n."""
    size = 2 * n + 1
    U = np.zeros((size, size), dtype=complex)
    U[n, 0] = 1.0
    r = 1.0 / math.sqrt(2.0)
    for m in range(1, n + 1):
        U[n + m, m] = r
        U[n - m, m] = r
        U[n + m, n + m] = -1j * r
        U[n - m, n + m] = 1j * r
    return U


def _block_unitary(n: int) -> np.ndarray:
    U = _unitary(n)
    Z = np.zeros_like(U)
    return np.block([[U, Z], [Z, U]])


def to_coeffs(q: np.ndarray, n: int) -> np.ndarray:
    """Real-basis coefficients (u part then v part) of complex samples q = u + i v."""
    q = np.asarray(q, dtype=complex)
    N = len(q)
    if N < 2 * n + 1:
        raise ValueError("grid too coarse for the requested number of modes")
    U = _unitary(n)
    out = []
    for comp in (q.real, q.imag):
        f = np.fft.fft(comp) / N
        c = np.array([f[m % N] for m in range(-n, n + 1)]) * math.sqrt(2 * math.pi)
        out.append((U.conj().T @ c).real)
    return np.concatenate(out)


def from_coeffs(x: np.ndarray, N: int) -> np.ndarray:
    """Complex samples on an N-point grid from real-basis coefficients."""
    size = len(x) // 2
    n = (size - 1) // 2
    U = _unitary(n)
    comps = []
    for part in (x[:size], x[size:]):
        c = U @ part / math.sqrt(2 * math.pi)
        f = np.zeros(N, dtype=complex)
        for j, m in enumerate(range(-n, n + 1)):
            f[m % N] += c[j]
        comps.append(np.fft.ifft(f).real * N)
    return comps[0] + 1j * comps[1]


def _resample(Q: np.ndarray, N: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto an N-point grid."""
    n0 = len(Q)
    if N == n0:
        return Q.copy()
    f = np.fft.fft(Q) / n0
    m = wavenumbers_m(n0).astype(int)
    g = np.zeros(N, dtype=complex)
    keep = np.abs(m) < min(n0, N) // 2
    g[m[keep] % N] = f[keep]
    return np.fft.ifft(g) * N


def _toeplitz_from_samples(f: np.ndarray, n: int) -> np.ndarray:
    # multiplication operator in the basis e^{imz}/sqrt(2pi): entries fhat_{m-l}
    N = len(f)
    fh = np.fft.fft(f) / N
    col = np.array([fh[j % N] for j in range(0, 2 * n + 1)])
    row = np.array([fh[(-j) % N] for j in range(0, 2 * n + 1)])
    return toeplitz(col, row)


def assemble_H(profile: WaveProfile, n: int = 64, Q: Optional[np.ndarray] = None) -> OperatorMatrix:
    """Galerkin matrix of H in the real basis with modes -n..n per component."""
    if n < 16:
        raise ValueError("n must be at least 16")
    Q = profile.Q if Q is None else np.asarray(Q, dtype=complex)
    case, k, p = profile.case, profile.k, profile.p
    mu = case.mu(p)
    c = np.abs(np.fft.fft(Q)) / len(Q)
    m0 = np.abs(wavenumbers_m(len(Q)))
    top = c.max()
    if top > 0 and len(Q) // 2 > n and c[m0 >= n].max() > ALIAS_TOL * top:
        warnings.warn(f"profile spectrum at mode {n} exceeds {ALIAS_TOL:g}", AliasWarning)
    Nf = 1 << int(math.ceil(math.log2(max(4 * (4 * n + 1), len(Q)))))
    Qf = _resample(Q, Nf)
    R, I = Qf.real, Qf.imag
    s = -case.gamma
    A = _toeplitz_from_samples(s * (3 * R * R + I * I), n)
    B = _toeplitz_from_samples(s * 2 * R * I, n)
    C = _toeplitz_from_samples(s * (R * R + 3 * I * I), n)
    m = np.arange(-n, n + 1)
    lap = np.diag(4 * k * k * m * m - mu).astype(complex)
    dz = np.diag(1j * m)
    L = np.block([[lap + A, 4 * p * k * dz + B], [-4 * p * k * dz + B, lap + C]])
    Ub = _block_unitary(n)
    Hr = (Ub.conj().T @ L @ Ub).real
    Hr = 0.5 * (Hr + Hr.T)
    return OperatorMatrix(n=n, entries=Hr, k=k, p=p, mu=mu, case=case)


def kernel_functions(profile: WaveProfile, Q: Optional[np.ndarray] = None):
    """The kernel directions Q' and iQ as complex samples."""
    Q = profile.Q if Q is None else Q
    return spectral_derivative(Q, 1), 1j * Q


def _orthonormal(vectors):
    M = np.column_stack(vectors)
    q, _ = np.linalg.qr(M)
    return q


def spectrum_low(opmat: OperatorMatrix, count: Optional[int] = None,
                 profile: Optional[WaveProfile] = None,
                 tol_zero_rel: float = TOL_ZERO_REL) -> SpectralReport:
    """Full symmetric eigendecomposition with eigenvalue counting.

    ``tol_zero = tol_zero_rel * ||H||_2``.  When the profile is given,
    kernel residuals ``||H q|| / ||q||`` for q in {Q', iQ} and the alignment
    of the two eigenvectors nearest zero with span{Q', iQ} are reported.
    """
    w, V = eigh(opmat.entries)
    tol = tol_zero_rel * opmat.norm
    n_neg = int(np.sum(w < -tol))
    n_zero = int(np.sum(np.abs(w) <= tol))
    n_pos = len(w) - n_neg - n_zero
    res = {}
    align = math.nan
    if profile is not None:
        dQ, iQ = kernel_functions(profile)
        kvecs = []
        for name, q in (("dQ", dQ), ("iQ", iQ)):
            x = to_coeffs(q, opmat.n)
            kvecs.append(x)
            nx = np.linalg.norm(x)
            res[name] = float(np.linalg.norm(opmat.entries @ x) / nx) if nx > 0 else 0.0
        idx = np.argsort(np.abs(w))[:2]
        if all(np.linalg.norm(v) > 0 for v in kvecs):
            K = _orthonormal(kvecs)
            sv = np.linalg.svd(K.T @ V[:, idx], compute_uv=False)
            align = float(sv.min())
    if count is not None:
        w_out, V_out = w[:count], V[:, :count]
    else:
        w_out, V_out = w, V
    return SpectralReport(eigenvalues=w_out, n_negative=n_neg, n_positive=n_pos,
                          kernel_dim_estimate=n_zero, kernel_residuals=res, tol_zero=tol,
                          eigenvectors=V_out, kernel_alignment=align)


def rayleigh_quotient(opmat: OperatorMatrix, q: np.ndarray) -> float:
    x = to_coeffs(q, opmat.n)
    return float(x @ opmat.entries @ x / (x @ x))


def constrained_positivity(profile: WaveProfile, opmat: OperatorMatrix) -> float:
    """Smallest eigenvalue of H restricted to the complement of span{Q', iQ, Q, iQ'}.

    The last two directions are the constraint functions: perturbations with
    ``<Q, q> = <iQ', q> = 0`` keep the charge and momentum fixed to first
    order, and ``Q = H d_omega Q``, ``iQ' = H d_c Q``.
    """
    dQ, iQ = kernel_functions(profile)
    cons = [dQ, iQ, profile.Q, 1j * dQ]
    B = _orthonormal([to_coeffs(q, opmat.n) for q in cons])
    P = np.eye(opmat.dim) - B @ B.T
    Hp = P @ opmat.entries @ P
    # the 4 projected-out directions give zero eigenvalues; shift them away
    Hp = Hp + 1e6 * opmat.norm * (B @ B.T)
    return float(eigh(Hp, eigvals_only=True, subset_by_index=[0, 0])[0])


def family_derivatives(profile: WaveProfile, h: float = 1e-5):
    """d_omega Q and d_c Q at (0, 0) by central differences of family profiles."""
    from .stability import family_map

    def prof(o, c):
        fm = family_map(profile.case, profile.inv, o, c)
        pr = shoot_profile(profile.case, (fm.Jp, fm.Ep), profile.gridN, p_override=fm.pp,
                           escalate=False)
        return fm.lam * pr.Q

    dO = (prof(h, 0.0) - prof(-h, 0.0)) / (2 * h)
    dC = (prof(0.0, h) - prof(0.0, -h)) / (2 * h)
    return dO, dC


@dataclass
class KernelODEResult:
    residual_R1: float
    residual_R2: float
    defect_R1: float
    defect_R2: float
    expected_defect_R1: float
    expected_defect_R2: float


def kernel_ode_solutions(profile: WaveProfile, h: float = 1e-5, n_points: int = 400,
                         degree: int = 80) -> KernelODEResult:
    """Residuals of the non-periodic kernel solutions R1 = dQ/dk + 2xQ', R2 = dQ/dp + ixQ.

    dW/dk and dW/dp are obtained by central differences of shot profiles in
    (J, E) and the chain rule through (k, p); they must solve the linearized
    profile equation ``v'' + omega v + gamma (2|W|^2 v + W^2 conj(v)) = 0``.
    The second derivative is taken from a Chebyshev fit.  The periodicity
    defects ``R(2pi) - R(0)`` are also returned with their expected values
    ``2T Q'(0)`` and ``T Q(0)`` (derivative in z).
    """
    from . import quadrature as qd
    from .stability import _theta
    case, J, E = profile.case, profile.inv.J, profile.inv.E
    branch = profile.wn.branch
    T = profile.T
    x = 0.5 * T * (1 - np.cos(np.pi * (np.arange(n_points) + 0.5) / n_points))

    def W_at(Jv, Ev):
        pr = shoot_profile(case, (Jv, Ev), 64, escalate=False)
        return pr.W(x)

    def kp(Jv, Ev):
        Tv = qd.period_T(case, (Jv, Ev))
        return np.array([math.pi / Tv, _theta(case, Jv, Ev, branch) / Tv])

    dW_dJ = [(a - b) / (2 * h) for a, b in zip(W_at(J + h, E), W_at(J - h, E))]
    dW_dE = [(a - b) / (2 * h) for a, b in zip(W_at(J, E + h), W_at(J, E - h))]
    jac = np.column_stack([(kp(J + h, E) - kp(J - h, E)) / (2 * h),
                           (kp(J, E + h) - kp(J, E - h)) / (2 * h)])   # d(k,p)/d(J,E)
    inv = np.linalg.inv(jac)                                          # d(J,E)/d(k,p)
    W, dW = profile.W(x)
    k, p = profile.k, profile.p

    def residual(col):
        v = inv[0, col] * dW_dJ[0] + inv[1, col] * dW_dE[0]
        dv = inv[0, col] * dW_dJ[1] + inv[1, col] * dW_dE[1]
        fit_r = np.polynomial.Chebyshev.fit(x, dv.real, degree, domain=[0, T])
        fit_i = np.polynomial.Chebyshev.fit(x, dv.imag, degree, domain=[0, T])
        d2v = fit_r.deriv()(x) + 1j * fit_i.deriv()(x)
        r = d2v + case.omega * v + case.gamma * (2 * np.abs(W) ** 2 * v + W ** 2 * np.conj(v))
        core = slice(n_points // 20, n_points - n_points // 20)
        return float(np.max(np.abs(r[core])) / max(1.0, np.max(np.abs(v))))

    res1, res2 = residual(0), residual(1)
    # periodicity defects of R_i(z) = exp(-ipx) v_i(x) between z=0 and z=2pi
    xe = np.array([0.0, T])
    Wj = [shoot_profile(case, pt, 64, escalate=False).W(xe)[0]
          for pt in ((J + h, E), (J - h, E), (J, E + h), (J, E - h))]
    vJ, vE = (Wj[0] - Wj[1]) / (2 * h), (Wj[2] - Wj[3]) / (2 * h)
    defects = []
    for col in (0, 1):
        v = inv[0, col] * vJ + inv[1, col] * vE
        R = np.exp(-1j * p * xe) * v
        defects.append(float(abs(R[1] - R[0])))
    Q0 = profile.Q[0]
    dQ0 = spectral_derivative(profile.Q, 1)[0]
    return KernelODEResult(res1, res2, defects[0], defects[1],
                           float(abs(2 * T * dQ0)), float(abs(T * Q0)))

import math
import warnings

import numpy as np
import pytest

from pwlab.domains import DEFOCUSING, FOCUSING_CORO, FOCUSING_COUNTER
from pwlab.errors import AliasWarning
from pwlab.profile import shoot_profile, spectral_derivative
from pwlab.spectral import (assemble_H, constrained_positivity, family_derivatives,
                            from_coeffs, kernel_ode_solutions, rayleigh_quotient, spectrum_low,
                            to_coeffs)

from conftest import CASES, cached_profile, sample_points

POINTS = {
    "defocusing": [(0.0, 3 / 16), (0.1, 0.12)],
    "focusing-counter": [(0.0, 1.0), (1.0, 2.0)],
    "focusing-coro": [(0.5, 0.3), (0.05, -0.2)],
}


def points():
    for c in CASES:
        for pt in POINTS[c.name]:
            yield pytest.param(c, pt, id=f"{c.name}-{pt[0]}-{pt[1]}")


def test_basis_round_trip():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(2 * (2 * 20 + 1))
    q = from_coeffs(x, 128)
    assert np.allclose(to_coeffs(q, 20), x, atol=1e-13)
    # the coefficient inner product is the L2 one, Re int conj(q1) q2 dz
    y = rng.standard_normal(x.size)
    q2 = from_coeffs(y, 128)
    l2 = (np.conj(q) * q2).real.sum() * 2 * math.pi / 128
    assert abs(l2 - x @ y) < 1e-12


def test_zero_profile_gives_fourier_symbol():
    prof = cached_profile(DEFOCUSING, (0.1, 0.12))
    n = 20
    op = assemble_H(prof, n, Q=np.zeros(prof.gridN, dtype=complex))
    k, p, mu = prof.k, prof.p, prof.mu
    m = np.arange(-n, n + 1)
    sym = 4 * k * k * m * m - 4 * p * k * m - mu
    expected = np.sort(np.concatenate([sym, sym]))
    w = np.linalg.eigvalsh(op.entries)
    assert np.allclose(w, expected, atol=1e-12 * np.abs(expected).max())


@pytest.mark.parametrize("c,pt", list(points()))
def test_kernel_and_eigencount(c, pt):
    prof = cached_profile(c, pt)
    op = assemble_H(prof, 64)
    assert np.array_equal(op.entries, op.entries.T)
    rep = spectrum_low(op, profile=prof)
    assert rep.kernel_residuals["dQ"] <= 1e-6
    assert rep.kernel_residuals["iQ"] <= 1e-6
    assert rep.n_negative == 1 and rep.kernel_dim_estimate == 2
    assert rep.n_negative + rep.kernel_dim_estimate + rep.n_positive == op.dim
    assert rep.kernel_alignment >= 0.999
    assert np.all(np.diff(rep.eigenvalues) >= 0)


@pytest.mark.parametrize("c,pt", list(points()))
def test_eigenvalues_converge_in_n(c, pt):
    prof = cached_profile(c, pt)
    w1 = spectrum_low(assemble_H(prof, 48), count=5).eigenvalues
    w2 = spectrum_low(assemble_H(prof, 96), count=5).eigenvalues
    assert np.all(np.abs(w1 - w2) <= 1e-8 * np.maximum(1.0, np.abs(w1)))


def test_small_amplitude_eigenvalues():
    E = 0.01
    w = spectrum_low(assemble_H(shoot_profile(DEFOCUSING, (0.0, E)), 64)).eigenvalues
    nz = w[np.abs(w) > 1e-8]
    assert -1.2 * E <= w[0] <= -0.8 * E
    assert 2.4 * E <= nz[1] <= 3.6 * E
    w = spectrum_low(assemble_H(shoot_profile(FOCUSING_COUNTER, (0.0, E)), 64)).eigenvalues
    nz = w[np.abs(w) > 1e-8]
    assert -3.6 * E <= w[0] <= -2.4 * E
    assert 0.8 * E <= nz[1] <= 1.2 * E


@pytest.mark.parametrize("c", CASES, ids=lambda c: c.name)
def test_eigencount_on_random_points(c):
    for J, E in sample_points(c, 5, seed=17):
        prof = shoot_profile(c, (J, E))
        rep = spectrum_low(assemble_H(prof, 64), profile=prof)
        assert (rep.n_negative, rep.kernel_dim_estimate) == (1, 2)


@pytest.mark.parametrize("c,pt", list(points()))
def test_constrained_positivity(c, pt):
    prof = cached_profile(c, pt)
    op = assemble_H(prof, 64)
    rep = spectrum_low(op)
    cmin = constrained_positivity(prof, op)
    assert cmin > 0
    # interlacing for a codimension-4 restriction: lambda_1 <= cmin <= lambda_5
    assert rep.eigenvalues[0] <= cmin <= rep.eigenvalues[4] + 1e-12
    dQ = spectral_derivative(prof.Q)
    assert abs(rayleigh_quotient(op, dQ)) < rep.tol_zero
    assert abs(rayleigh_quotient(op, 1j * prof.Q)) < rep.tol_zero


@pytest.mark.parametrize("c,pt", [(DEFOCUSING, (0.1, 0.12)), (FOCUSING_COUNTER, (1.0, 2.0)),
                                  (FOCUSING_CORO, (0.5, 0.3))], ids=lambda x: str(x))
def test_family_derivatives_map_to_constraint_functions(c, pt):
    prof = cached_profile(c, pt)
    op = assemble_H(prof, 64)
    dO, dC = family_derivatives(prof)
    n = op.n
    for d, target in ((dO, prof.Q), (dC, 1j * spectral_derivative(prof.Q))):
        lhs = op.entries @ to_coeffs(d, n)
        rhs = to_coeffs(target, n)
        assert np.linalg.norm(lhs - rhs) <= 1e-5 * np.linalg.norm(rhs)


@pytest.mark.parametrize("c,pt", [(DEFOCUSING, (0.1, 0.12)), (FOCUSING_COUNTER, (1.0, 2.0))],
                         ids=lambda x: str(x))
def test_kernel_ode_solutions(c, pt):
    prof = cached_profile(c, pt)
    r = kernel_ode_solutions(prof)
    assert r.residual_R1 <= 1e-4 and r.residual_R2 <= 1e-4
    assert r.defect_R1 > 0.1 * r.expected_defect_R1 > 0
    assert r.defect_R2 > 0.1 * r.expected_defect_R2 > 0
    assert abs(r.defect_R1 - r.expected_defect_R1) <= 1e-3 * r.expected_defect_R1
    assert abs(r.defect_R2 - r.expected_defect_R2) <= 1e-3 * r.expected_defect_R2


def test_alias_warning_for_short_truncation():
    prof = shoot_profile(FOCUSING_CORO, (0.0, -1e-4))
    with pytest.warns(AliasWarning):
        assemble_H(prof, 16)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assemble_H(cached_profile(DEFOCUSING, (0.1, 0.12)), 64)


def test_truncation_validation():
    with pytest.raises(ValueError):
        assemble_H(cached_profile(DEFOCUSING, (0.1, 0.12)), 8)


def test_report_json():
    prof = cached_profile(DEFOCUSING, (0.1, 0.12))
    js = spectrum_low(assemble_H(prof, 32), profile=prof).to_json()
    assert js["n_negative"] == 1 and js["kernel_dim_estimate"] == 2
    assert set(js["kernel_residuals"]) == {"dQ", "iQ"}

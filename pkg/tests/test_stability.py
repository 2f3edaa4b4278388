import math

import numpy as np
import pytest

from pwlab import quadrature as qd
from pwlab import stability as sb
from pwlab.domains import DEFOCUSING, FOCUSING_CORO, FOCUSING_COUNTER
from pwlab.profile import functionals_of, shoot_profile

from conftest import CASES, sample_points

POINTS = {
    "defocusing": [(0.0, 3 / 16), (0.1, 0.12), (-0.2, 0.2)],
    "focusing-counter": [(0.0, 1.0), (1.0, 2.0), (-2.0, 5.0)],
    "focusing-coro": [(0.5, 0.3), (-1.0, 1.0), (0.05, -0.2), (0.0, 1.0)],
}


def all_points():
    for c in CASES:
        for pt in POINTS[c.name]:
            yield pytest.param(c, pt, id=f"{c.name}-{pt[0]}-{pt[1]}")


@pytest.mark.parametrize("c,pt", list(all_points()))
def test_family_map_identity(c, pt):
    fm = sb.family_map(c, pt, 0.0, 0.0)
    assert abs(fm.Jp - pt[0]) < 1e-12 and abs(fm.Ep - pt[1]) < 1e-12
    assert abs(fm.lam - 1) < 1e-14 and abs(fm.v) < 1e-12


@pytest.mark.parametrize("c,pt", list(all_points()))
def test_matrix_M_inverts_family_map(c, pt):
    M = sb.matrix_M(c, pt)
    h = 1e-6
    rows = []
    for do, dc in ((h, 0.0), (0.0, h)):
        fp = sb.family_map(c, pt, do, dc)
        fmn = sb.family_map(c, pt, -do, -dc)
        rows.append([(fp.Ep - fmn.Ep) / (2 * h), (fp.Jp - fmn.Jp) / (2 * h)])
    Minv = np.linalg.inv(M)
    assert np.allclose(np.array(rows), Minv, rtol=1e-5, atol=1e-6 * np.abs(Minv).max())


@pytest.mark.parametrize("c", CASES, ids=lambda c: c.name)
def test_det_M_is_scaled_kam_determinant(c):
    sign = -1.0 if c.corotating else 1.0
    for J, E in sample_points(c, 30, seed=3):
        k = qd.wave_numbers(c, (J, E)).k
        lhs = np.linalg.det(sb.matrix_M(c, (J, E)))
        rhs = sign * 8 * k ** 3 / math.pi ** 2 * qd.kam_delta(c, (J, E))
        assert abs(lhs - rhs) <= 1e-9 * abs(rhs)


@pytest.mark.parametrize("c,pt", list(all_points()))
def test_K_analytic_matches_finite_differences(c, pt):
    Ka = sb.matrix_K(c, pt, "analytic")
    Kf = sb.matrix_K(c, pt, "fd")
    assert np.allclose(Ka, Kf, rtol=1e-6, atol=1e-6 * np.abs(Ka).max())


def test_K_analytic_vs_fd_on_defocusing_grid():
    for J, E in sample_points(DEFOCUSING, 20, seed=8):
        Ka = sb.matrix_K(DEFOCUSING, (J, E), "analytic")
        Kf = sb.matrix_K(DEFOCUSING, (J, E), "fd")
        assert np.all(np.abs(Ka - Kf) <= 1e-4 * np.abs(Ka).max())


def test_charge_increases_with_rescaled_energy_at_zero_J():
    for E in (0.01, 0.1, 0.2, 0.24):
        assert sb.matrix_K(DEFOCUSING, (0.0, E))[0, 0] > 0


@pytest.mark.parametrize("c", CASES, ids=lambda c: c.name)
def test_hessian_structure(c):
    for J, E in sample_points(c, 15, seed=9):
        rep = sb.hessian_H(c, (J, E))
        H = rep.H
        assert abs(H[0, 1] - H[1, 0]) <= 1e-4 * np.abs(H).max()
        assert abs(rep.detH * rep.detM - rep.detK) <= 1e-6 * abs(rep.detK)
        assert rep.detH < 0 and rep.detK * rep.detM < 0
        ev = rep.H_eigenvalues
        assert ev[0] < 0 < ev[1]


def test_defocusing_det_K_negative():
    for J, E in sample_points(DEFOCUSING, 40, seed=10):
        assert np.linalg.det(sb.matrix_K(DEFOCUSING, (J, E))) < 0


def test_singular_M_error():
    with pytest.raises(ValueError):
        sb.matrix_K(DEFOCUSING, (0.0, 0.1), "nope")


@pytest.mark.parametrize("c,pt", [(DEFOCUSING, (0.1, 0.12)), (FOCUSING_COUNTER, (1.0, 2.0)),
                                  (FOCUSING_CORO, (0.5, 0.3))], ids=lambda x: str(x))
def test_scaling_identity(c, pt):
    # E^{omega,c}(lambda Q_{J',E'}) evaluated at the base wave numbers equals
    # lambda^4 times the modified energy of Q_{J',E'} at its own wave numbers
    wn = qd.wave_numbers(c, pt)
    fm = sb.family_map(c, pt, 0.01, -0.02)
    prof = shoot_profile(c, (fm.Jp, fm.Ep), 256, p_override=fm.pp)
    U = fm.lam * prof.Q
    N, M, En = functionals_of(c, U, wn.k)
    lhs = En - (c.mu(wn.p) + fm.omega) * N - (4 * wn.p * wn.k + fm.c) * M
    assert abs(lhs - sb.d_function(c, pt, 0.01, -0.02)) < 1e-10 * max(1.0, abs(lhs))


@pytest.mark.parametrize("c,pt", [(DEFOCUSING, (0.1, 0.12)), (FOCUSING_COUNTER, (1.0, 2.0)),
                                  (FOCUSING_CORO, (0.5, 0.3))], ids=lambda x: str(x))
def test_gradient_of_d_is_minus_charge_and_momentum(c, pt):
    g = sb.gradient_d(c, pt)
    N, M = qd.charge_N(c, pt), qd.momentum_M(c, pt)
    wn = qd.wave_numbers(c, pt)
    if wn.branch == "phi":
        M = wn.p / (2 * wn.k) * N - 0.5 * pt[0] * wn.T
    assert abs(g[0] + N) < 1e-6 * abs(N)
    assert abs(g[1] + M) < 1e-6 * max(abs(M), abs(N))


@pytest.mark.slow
@pytest.mark.parametrize("c,pt", [(DEFOCUSING, (0.1, 0.12)), (FOCUSING_COUNTER, (1.0, 2.0))],
                         ids=lambda x: str(x))
def test_hessian_matches_second_differences_of_d(c, pt):
    H = sb.hessian_H(c, pt).H
    Hd = sb.hessian_from_d(c, pt)
    assert np.all(np.abs(H - Hd) <= 1e-3 * np.abs(H).max())


def test_scan_rows_and_flags():
    rows = sb.scan_det_hessian(FOCUSING_COUNTER, [0, 1], 3.0, 4)
    assert len(rows) == 8
    assert all(r["flag"] == "" and r["detH"] < 0 for r in rows)
    bad = sb.scan_points(DEFOCUSING, [(0.0, 0.3)])
    assert bad[0]["flag"] == "OutOfRange" and math.isnan(bad[0]["detH"])

import math

import numpy as np
import pytest

from pwlab.domains import DEFOCUSING, FOCUSING_CORO, FOCUSING_COUNTER
from pwlab.dynamics import (SymmetryAction, evolve_gl, evolve_nls, gl_growth_rate, h1_norm,
                            orbital_distance, random_perturbation, shift, stability_experiment)
from pwlab.errors import BlowUp, OutOfRange
from pwlab.profile import functionals_of, spectral_derivative
from pwlab.spectral import assemble_H, spectrum_low

from conftest import cached_profile

REF = {"defocusing": (0.1, 0.12), "focusing-counter": (1.0, 2.0), "focusing-coro": (0.5, 0.3)}


def test_distance_to_itself_is_zero():
    prof = cached_profile(DEFOCUSING, REF["defocusing"])
    rho, act = orbital_distance(prof.Q, prof)
    assert rho <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_distance_is_group_invariant(seed):
    prof = cached_profile(FOCUSING_COUNTER, REF["focusing-counter"])
    rng = np.random.default_rng(seed)
    phi, xi = rng.uniform(0, 2 * math.pi, 2)
    u = np.exp(-1j * phi) * shift(prof.Q, xi)
    assert orbital_distance(u, prof)[0] <= 1e-10
    R = random_perturbation(prof.gridN, seed)
    v = prof.Q + 1e-3 * R
    g = SymmetryAction(phi, xi)
    assert abs(orbital_distance(g.apply(v), prof)[0] - orbital_distance(v, prof)[0]) <= 1e-10
    assert abs(h1_norm(g.apply(v)) - h1_norm(v)) <= 1e-12 * h1_norm(v)


def test_distance_bounded_by_perturbation():
    prof = cached_profile(DEFOCUSING, REF["defocusing"])
    for seed in range(3):
        R = random_perturbation(prof.gridN, seed)
        assert abs(h1_norm(R) - 1) < 1e-13
        assert orbital_distance(prof.Q + 1e-2 * R, prof)[0] <= 1e-2 * h1_norm(R) + 1e-15


def test_random_perturbation_is_band_limited_and_seeded():
    R = random_perturbation(256, 3)
    c = np.abs(np.fft.fft(R))
    m = np.abs(np.fft.fftfreq(256, 1 / 256))
    assert c[m > 32].max() < 1e-12 * c.max()
    assert np.array_equal(R, random_perturbation(256, 3))
    assert not np.array_equal(R, random_perturbation(256, 4))


@pytest.mark.parametrize("c,dt", [(DEFOCUSING, 1e-3), (FOCUSING_COUNTER, 5e-4),
                                  (FOCUSING_CORO, 1e-3)], ids=lambda x: str(x))
def test_profile_is_stationary_under_nls(c, dt):
    # the splitting offset from the exact profile is O(dt^2); the larger
    # counter-rotating amplitude needs the smaller step for 1e-6
    prof = cached_profile(c, REF[c.name])
    tr = evolve_nls(c, prof.Q, prof.k, prof.p, dt, 10.0, record_every=1000, reference=prof)
    assert tr.rho.max() <= 1e-6
    assert tr.driftN.max() <= 1e-8 and tr.driftM.max() <= 1e-8
    assert tr.driftE.max() <= 1e-6
    assert np.all(np.diff(tr.times) > 0)


def test_plane_wave_rotates_at_constant_modulus():
    A, k, p = 0.6, 0.9, 0.3
    mu = DEFOCUSING.mu(p)
    Q0 = np.full(64, A, dtype=complex)
    tr = evolve_nls(DEFOCUSING, Q0, k, p, 1e-2, 2.0, record_every=50)
    rate = mu + DEFOCUSING.gamma * A * A
    assert np.allclose(tr.finalState, A * np.exp(1j * rate * 2.0), atol=1e-12)
    p_on = math.sqrt(1 - A * A)
    tr = evolve_nls(DEFOCUSING, Q0, k, p_on, 1e-2, 2.0, record_every=50)
    assert np.allclose(tr.finalState, Q0, atol=1e-12)


def test_strang_splitting_is_second_order():
    prof = cached_profile(DEFOCUSING, REF["defocusing"])
    z = prof.z
    Q0 = prof.Q * (1 + 0.05 * np.cos(z) + 0.03j * np.sin(2 * z))

    def run(dt):
        tr = evolve_nls(DEFOCUSING, Q0, prof.k, prof.p, dt, 1.0, record_every=10 ** 6)
        return tr.finalState

    ref = run(1.25e-3)
    e1 = h1_norm(run(1e-2) - ref)
    e2 = h1_norm(run(5e-3) - ref)
    assert 3.5 < e1 / e2 < 4.5


def test_time_step_and_case_validation():
    prof = cached_profile(FOCUSING_COUNTER, REF["focusing-counter"])
    with pytest.raises(ValueError):
        evolve_nls(FOCUSING_COUNTER, prof.Q, prof.k, prof.p, 0.02, 1.0)
    with pytest.raises(OutOfRange):
        evolve_gl(FOCUSING_COUNTER, prof.Q, prof.k, prof.p, 1e-3, 1.0)
    with pytest.raises(ValueError):
        evolve_nls(FOCUSING_COUNTER, prof.Q[:100], prof.k, prof.p, 1e-3, 1.0)


def test_blowup_is_reported_with_partial_trace():
    Q0 = np.full(64, 2e6, dtype=complex)
    with pytest.raises(BlowUp) as exc:
        evolve_nls(FOCUSING_COUNTER, Q0, 1.0, 0.0, 1e-3, 0.01, record_every=1)
    assert exc.value.time is not None and exc.value.trace is not None


def test_profile_is_stationary_under_gl():
    prof = cached_profile(DEFOCUSING, REF["defocusing"])
    # the splitting offset is O(dt^2) and then grows at the unstable rate
    tr = evolve_gl(DEFOCUSING, prof.Q, prof.k, prof.p, 2.5e-4, 10.0, record_every=4000)
    assert tr.deviation.max() <= 1e-8


def test_translation_direction_is_neutral_under_gl():
    prof = cached_profile(DEFOCUSING, REF["defocusing"])
    dQ = spectral_derivative(prof.Q)
    eps = 1e-6
    tr = evolve_gl(DEFOCUSING, prof.Q + eps * dQ, prof.k, prof.p, 1e-3, 5.0, record_every=500,
                   reference=prof)
    d0 = eps * h1_norm(dQ)
    assert np.all(np.abs(tr.deviation / d0 - 1) <= 0.1)


def test_gl_growth_rate_matches_lowest_eigenvalue():
    for pt in ((0.0, 3 / 16), (0.1, 0.12)):
        prof = cached_profile(DEFOCUSING, pt)
        lam1 = spectrum_low(assemble_H(prof, 32)).eigenvalues[0]
        assert abs(gl_growth_rate(prof, n=32) + lam1) <= 1e-6


def test_stability_experiment_linear_response():
    r1, tr = stability_experiment(DEFOCUSING, REF["defocusing"], epsilon=1e-3, t_end=10.0,
                                  seed=0, record_every=500)
    r2, _ = stability_experiment(DEFOCUSING, REF["defocusing"], epsilon=1e-4, t_end=10.0,
                                 seed=0, record_every=500)
    assert r1 <= 10 and r2 <= 10
    assert 1 / 3 <= r1 / r2 <= 3
    with pytest.raises(ValueError):
        stability_experiment(DEFOCUSING, REF["defocusing"], epsilon=0.1)


def test_trace_csv(tmp_path):
    prof = cached_profile(DEFOCUSING, REF["defocusing"])
    tr = evolve_nls(DEFOCUSING, prof.Q, prof.k, prof.p, 1e-3, 0.2, record_every=50)
    path = tmp_path / "t.csv"
    tr.to_csv(path, header="x")
    lines = path.read_text().splitlines()
    assert lines[0] == "# x" and lines[1] == "t,rho,driftN,driftM,driftE"
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    assert data.shape == (len(tr.times), 5)
    N, M, E = functionals_of(DEFOCUSING, tr.finalState, prof.k)
    assert abs(N - functionals_of(DEFOCUSING, prof.Q, prof.k)[0]) < 1e-12

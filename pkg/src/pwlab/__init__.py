"""Periodic waves of the cubic NLS equation: invariants, stability matrices, spectra, dynamics."""
from .domains import (DEFOCUSING, FOCUSING_CORO, FOCUSING_COUNTER, CubicRoots, Invariants,
                      ModelCase, PotentialFrame, cubic_roots, domain_contains, e_minus,
                      e_plus, homoclinic_reference, parametrize_J)
from .quadrature import (charge_N, derivatives, invert_TPsi, kam_delta, map_to_TPsi,
                         momentum_M, period_T, phase_Phi, renorm_Psi, wave_numbers)
from .stability import family_map, hessian_H, matrix_K, matrix_M, scan_det_hessian
from .profile import functionals, shoot_profile, stationarity_residual
from .spectral import assemble_H, constrained_positivity, spectrum_low
from .dynamics import evolve_gl, evolve_nls, orbital_distance, stability_experiment

__version__ = "0.1.0"

"""quasiloc: a numerical laboratory for interacting fermions in a quasi-periodic chain."""

from .diophantine import (GOLDEN_MEAN, SILVER_MEAN, DiophantineFrequency,
                          RationalFrequencyError, torus_norm,
                          continued_fraction, convergents,
                          frequency_diophantine_constant,
                          phase_diophantine_constant, golden_frequency)
from .cutoffs import smooth_cutoff, smooth_step
from .single_particle import (ModelParams, onsite_potential, onsite_energy,
                              build_single_particle_matrix,
                              single_particle_spectrum, fermi_occupation,
                              free_propagator, matsubara_propagator_sum,
                              tadpole_nu_tilde, tadpole_counterterm,
                              transfer_matrix, lyapunov_exponent,
                              eigenstate_localization, localization_table,
                              one_body_two_point, one_body_correlation_matrix,
                              free_density)
from .many_body import (FockSector, enumerate_sector, build_hamiltonian,
                        annihilation_matrix, SpectralDecomposition,
                        diagonalize, two_point_function, correlation_matrix,
                        equal_time_matrix, occupations, density,
                        occupations_expectation, mean_particle_number,
                        CorrelationFunction, compute_correlation,
                        IncompleteSpectralDataError)
from .multiscale import (ScaleFamily, ScaleConfigurationError,
                         QuadratureError, ZeroDivisorError, chi_h, f_h,
                         chi_ultraviolet, partition_of_unity_check,
                         telescoping_residual, scale_of,
                         single_scale_propagator, filtered_propagator,
                         scale_decay_constants, chain_graph_value)
from .counterterm import (CountertermResult, BracketError, fix_counterterm,
                          counterterm_grid, counterterm_flow_check)
from .analysis import (DecayFit, TemporalDecay, PhasePoint, FitError,
                       fit_spatial_decay, fit_temporal_decay, phase_scan)

__version__ = "0.1.0"

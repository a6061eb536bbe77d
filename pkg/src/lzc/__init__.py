"""Transition probabilities for a linearly driven level crossing a Coulomb band.

The model: level 0 with energy beta*t coupled by constants g_j to band levels
with energies k_j/t. Closed forms live in :mod:`lzc.analytic`; the
Schrodinger-equation integrator in :mod:`lzc.propagator` checks them.
"""
from .analytic import (BandCoefficients, ProbabilityReport, band_coefficients, n2_probabilities,
                       n2_roots, p00_degenerate, p00_independent_crossings, p0j_asymptote,
                       p0j_log_average, pq0_asymptote, pq0_direct, pq0_time_average, report,
                       survival_probability)
from .errors import (ConfigError, DegeneracyError, DegenerateRootError, InvalidStart, LZCError,
                     NormDriftError, NotConverged, PoleError, ProbabilityRangeError,
                     RootIsolationFailure, SingularMatrixError, StepLimitExceeded)
from .model import (CharacteristicRoots, ModelParams, build_char_poly, char_poly_value,
                    companion_roots, find_roots, root_residual)
from .propagator import (AmplitudeState, IntegratorConfig, converged_p00, dressed_populations,
                         init_band, init_level0, propagate, propagate_many,
                         time_averaged_population)
from .special import falling_factorial, gamma_ratio, log_gamma, stirling2

__version__ = "0.1.0"

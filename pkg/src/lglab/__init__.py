"""Latent Gaussian random graphs G(n, p, d, r): calibration, sampling,
signed-triangle statistics, proof-level bounds and detection experiments."""

__version__ = "0.1.0"

from .bounds import (BoundReport, ConstantMode, GammaEstimate, KLBound, Lemma, TailCheckReport, TauBounds,
                     bound_report, chebyshev_tv_lower, e_tau_var_tau_bounds, gamma_moments, gamma_values,
                     kl_tv_upper, tail_check)
from .calibrate import (DEFAULT_QUADRATURE, ModelParams, QuadratureConfig, calibrate_mu, edge_density,
                        expect_over_inner_product, lambda_value)
from .connection import (ConnectionSpec, Family, GridConfig, ValidationReport, from_table, make_builtin,
                         make_custom, spec_from_descriptor, validate_assumptions)
from .errors import *  # noqa: F401,F403
from .experiments import (ExperimentConfig, SweepCell, ks_distance, phase_sweep, run_power,
                          tv_lower_empirical)
from .sampler import (GraphSample, LatentState, read_graph, sample_er, sample_graph, sample_graph_threshold,
                      sample_graph_uniform, sample_latents, write_graph)
from .seeding import SeedContext
from .tristat import (MotifEstimate, TriangleStats, motif_prob_estimates, signed_triangle_statistic,
                      signed_triangles_naive, signed_triangles_trace, tau_from_counts)

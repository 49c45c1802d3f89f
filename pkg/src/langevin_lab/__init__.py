"""langevin_lab: a desk-scale laboratory for Langevin Monte Carlo.

Exact Gaussian oracles, deterministic grid propagation of chain and
diffusion laws, Renyi/KL/chi-squared/TV divergences, functional-
inequality-driven step-size planning, seeded stochastic ensembles, and
Monte-Carlo verification of the exponential-moment and iterate-tail
bounds that drive the step-size analysis.
"""

from .divergence import (DivergenceReport, GaussianLaw, GridDensity, chi2_grid,
                         check_change_of_measure, check_weak_triangle, kl_gaussian,
                         kl_grid, renyi_gaussian, renyi_grid, tv_gaussian_1d, tv_grid,
                         w2_gaussian, weak_triangle_coefficient)
from .density_lab import (DecayCurve, PropagationConfig, PropagationResult,
                          decay_curve, diffusion_decay_curve, propagate_diffusion_density,
                          propagate_lmc_density, richardson_check, target_density_grid)
from .gaussian_oracle import (QuadraticTarget, bias_bound, lmc_law, renyi_bias,
                              stationary_law)
from .planner import (InitDesign, Plan, PlanRequest, init_design, lo_decay_closed_form,
                      lo_horizon, lo_phase_boundary, plan_log_concave, plan_lo,
                      plan_lsi, plan_mlsi, predict_continuous_decay,
                      super_poincare_beta)
from .potentials import (FIConstants, HolderReport, ModifiedPotential, PotentialSpec,
                         SmoothnessRecord, ensemble_mean_norm, estimate_mean_norm,
                         finite_difference_grad, make_builtin, make_modified,
                         verify_holder)
from .sampler import (Ensemble, MgfReport, NormTrajectory, TailBoundInputs, TailReport,
                      check_brownian_mgf, check_displacement_mgf, check_iterate_tails,
                      interpolated_position, lmc_run, run_max_norm_trajectories,
                      tail_threshold)

__version__ = "0.1.0"

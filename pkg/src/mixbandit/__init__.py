"""Linear stochastic bandits under temporally dependent observation noise.

Library layout:

- ``numerics``: factored SPD updates and ball-constrained least squares
- ``noise``: dependent-noise generators with exact mixing envelopes
- ``confidence``: the anytime-valid ellipsoidal confidence sequence
- ``policy``: delayed optimistic arm selection, baselines, regret bounds
- ``spa``: the log-loss forecasting game backing the concentration checks
- ``harness``: seeded Monte Carlo experiments, invariant suite, outputs
- ``kernels``: numba-compiled hot loops (``MIXBANDIT_BACKEND=numpy`` for the
  pure reference path)
"""

from .confidence import (EllipsoidSet, RadiusParams, build_set, delayed_view,
                         iid_baseline_radius_sq, membership, radius_sq,
                         ucb_value)
from .config import ConfigError, ExperimentConfig, load_config
from .harness import (run_coverage, run_many, run_replication, run_sweep,
                      run_verify)
from .noise import (IidGaussianNoise, MarkovTwoStateNoise, MixingProfile,
                    NoiseProcess, SuperposedChainsNoise, algebraic_profile,
                    certified_profile, conditional_mean_oracle,
                    dyadic_superposed_process, geometric_profile, make_noise,
                    next_noise, no_mixing, phi, tabulated_profile)
from .numerics import (ConvergenceError, DesignStats, SpdMatrix,
                       constrained_least_squares, quad_form_inv,
                       rank_one_update)
from .policy import (PolicySpec, PolicyState, RegretTrace, choose_delay,
                     gap_bound, min_gap, record_round, select_arm,
                     worst_case_bound)
from .spa import (ForecasterState, LogLossLedger, QuadratureError,
                  QuadraticLossSum, blocked_forecaster, blocked_regret,
                  blocked_regret_bound, decomposition_check, drift_bound,
                  drift_exceedance, ewa_regret, ewa_regret_bound,
                  mixture_log_loss, run_undelayed)

__version__ = "0.1.0"

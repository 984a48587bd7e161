"""Online reflection adaptation with tabular learners."""

from .actions import (ActionReduction, action_decode, action_encode, best_flip,
                      flip_matrix, flip_spectral_efficiency, reduce_action_space)
from .contraction import iterate_distances, projected_bellman, random_mdp, verify_contraction
from .quantile import (max_wasserstein_d1, qr_loss, quantile_levels, quantile_projection,
                       wasserstein_d1)
from .tables import (DeviationState, QuantileTable, ScalarQTable, compute_state,
                     expected_return, greedy_action, load_table, qlearning_step,
                     qrdrl_step, save_table)

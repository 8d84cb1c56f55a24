"""Distribution estimation when each user holds many samples and privatizes all of them at once."""
from .baselines import all_sample_hr, one_sample_hr
from .channels import (FlipChannel, HadamardResponse, OneHotFlip, PrivacyBudget, compose, debias,
                       flip_bit, flip_onehot, hr_decode, hr_encode, verify_ldp)
from .coin import CoinConfig, estimate_coin
from .core import (UserBatch, UserData, binomial_tail, make_rng, project_to_simplex,
                   sample_user_data, sample_users, tv_distance, uniform)
from .estimators import (EstimateReport, choose_regime, estimate, estimate_high_privacy,
                         estimate_large_m, estimate_medium_m, estimate_small_m, hadamard_sets)
from .partitions import build_partition, invert_monotone, locate, select_case
from .shuffle import amplified_epsilon, choose_local_budget
from .theory import alpha_brute_force, alpha_closed_form, paninski_dist

__version__ = "0.1.0"

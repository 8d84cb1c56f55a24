"""Item-level Hadamard Response baselines.

``one_sample_hr`` keeps only each user's first sample and is user-level
private.  ``all_sample_hr`` privatizes every sample separately, which is only
item-level private; it is the error floor the user-level estimators chase.
"""
from __future__ import annotations

import numpy as np

from .channels import HadamardResponse
from .core import UserBatch, project_to_simplex


def _as_batch(users) -> UserBatch:
    if isinstance(users, UserBatch):
        return users
    return UserBatch.from_users(list(users))


def one_sample_hr(users, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    users = _as_batch(users)
    ch = HadamardResponse(users.k, epsilon)
    x = users.first_samples(rng)
    return project_to_simplex(ch.decode(ch.encode(x, rng)))


def all_sample_hr(users, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Each of the n*m samples sent through its own HR message.

    Messages are drawn in aggregate from the pooled symbol counts, which has
    the same law as encoding the samples one by one.
    """
    users = _as_batch(users)
    ch = HadamardResponse(users.k, epsilon)
    return project_to_simplex(ch.decode_counts(ch.message_counts(users.total_counts(), rng)))

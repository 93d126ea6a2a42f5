import numpy as np

from orbitot.rng import make_rng


def random_spd(d, rng, jitter=0.2):
    """Well-conditioned random SPD matrix: Gram matrix plus a ridge."""
    b = rng.standard_normal((d, d))
    return b @ b.T / d + jitter * np.eye(d)


def random_spd_pair(d, seed, jitter=0.2):
    rng = make_rng(seed)
    return random_spd(d, rng, jitter), random_spd(d, rng, jitter)

import numpy as np

from ensk.core import validate_pool


def make_pool(accuracies, costs=None):
    costs = costs if costs is not None else [1.0] * len(accuracies)
    return validate_pool((f"m{i}", float(a), float(c)) for i, (a, c) in enumerate(zip(accuracies, costs)))


def random_weights(rng, ell):
    """Random non-decreasing decision weights of length ell + 1."""
    return tuple(np.sort(rng.uniform(0.0, 1.0, ell + 1)))

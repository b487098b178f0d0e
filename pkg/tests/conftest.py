import numpy as np
import pytest

from sinkrelax import ExperimentSpec, TransportProblem, build_problem


def random_problem(m: int, n: int, epsilon: float, seed: int,
                   marginal_kind: str = "random") -> TransportProblem:
    """Random dense full-rank instance used throughout the suite."""
    return build_problem(ExperimentSpec("random_dense", m, n, epsilon, seed=seed,
                                        marginal_kind=marginal_kind))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

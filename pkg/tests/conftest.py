"""Shared fixtures and helpers for the test suite.

Randomised property tests draw from seeded numpy generators so every run is
reproducible; helpers here centralise the sampling of valid parameter triples.
"""

from __future__ import annotations

import numpy as np
import pytest

from invasim import ModelParams, validate_params


@pytest.fixture
def p() -> ModelParams:
    """The workhorse parameter triple used by most frozen oracles."""
    return validate_params(1.0, 1.0, 0.5)


def random_coexistence_triple(rng: np.random.Generator) -> tuple[float, float, float]:
    """A random (a1, a2, gamma) satisfying both coexistence inequalities.

    The ratio a1/a2 is placed strictly inside (gamma, 1/gamma) with a 5%
    relative margin on each side, so the sampled triples stay well away from
    the degenerate boundary.
    """
    gamma = float(rng.uniform(0.05, 0.95))
    a2 = float(rng.uniform(0.3, 3.0))
    u = float(rng.uniform(0.05, 0.95))
    a1 = a2 * (gamma + u * (1.0 / gamma - gamma))
    return a1, a2, gamma


def random_params(rng: np.random.Generator) -> ModelParams:
    a1, a2, gamma = random_coexistence_triple(rng)
    return validate_params(a1, a2, gamma)

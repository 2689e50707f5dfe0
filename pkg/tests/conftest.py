"""Shared fixtures.

Heavy objects (assembled systems, series bundles, pair interactions) are
session scoped and built lazily, so module tests at n=100 never pay for the
acceptance-scale n=200 machinery and vice versa.
"""

import numpy as np
import pytest

from diracdiag.decoupling import build_decoupling_bundle
from diracdiag.grids import build_channel_grid
from diracdiag.manybody import build_pair_interaction
from diracdiag.oneparticle import OneParticleSystem, assemble_system


@pytest.fixture(scope="session")
def grid100():
    return build_channel_grid(100)


@pytest.fixture(scope="session")
def grid200():
    return build_channel_grid(200)


def _system_getter(grid):
    cache = {}

    def get(gamma: float) -> OneParticleSystem:
        if gamma not in cache:
            cache[gamma] = assemble_system(grid, gamma)
        return cache[gamma]

    return get


@pytest.fixture(scope="session")
def sys100(grid100):
    """Factory: sys100(gamma) -> assembled system on the n=100 grid, cached."""
    return _system_getter(grid100)


@pytest.fixture(scope="session")
def sys200(grid200):
    """Factory: sys200(gamma) -> assembled system on the n=200 grid, cached."""
    return _system_getter(grid200)


@pytest.fixture(scope="session")
def bundle100(sys100):
    return build_decoupling_bundle(sys100(0.0), order=8)


@pytest.fixture(scope="session")
def bundle200(sys200):
    return build_decoupling_bundle(sys200(0.0), order=12)


@pytest.fixture(scope="session")
def pair100(grid100):
    return build_pair_interaction(grid100)


@pytest.fixture(scope="session")
def pair200(grid200):
    return build_pair_interaction(grid200)


def toy_two_level() -> OneParticleSystem:
    """Hand-built 2x2 system: D_0 = diag(1, -1), V swaps the levels.

    Closed forms for everything make it the sharpest series oracle: the
    positive projector of D_0 + gV is (I + (D_0 + gV)/sqrt(1+g^2))/2.
    """
    eye = np.eye(2)
    d0 = np.diag([1.0, -1.0])
    v = np.array([[0.0, 1.0], [1.0, 0.0]])
    return OneParticleSystem(
        grid=None, gamma=0.0, d0=d0, v=v, dgamma=d0,
        abs_d0_half=eye, abs_d0_neg_half=eye,
        p_plus_0=np.diag([1.0, 0.0]), p_plus_gamma=np.diag([1.0, 0.0]),
        u_fw=eye, u_gamma=eye, gap=1.0,
        evals=np.array([-1.0, 1.0]), evecs=np.eye(2)[:, ::-1].copy(),
    )

"""
Shared fixtures: toy and small generated instances, backends and
quick algorithm configurations.
"""

import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

import numpy as np
import pytest

from core.solvers import HighsBackend, ReferenceBackend
from modules.driver.schemas import AlgoConfig
from modules.instances.schemas import InstanceSpec
from modules.instances.service_layer import chain_links, generate_instance, toy_instance


@pytest.fixture
def toy():
    """One zone, one hour; least-cost optimum x=1 at cost 3."""
    return toy_instance()


@pytest.fixture
def toy_integer():
    return toy_instance(integer_block=1.0)


@pytest.fixture
def two_zone():
    spec = InstanceSpec(
        name="two-zone",
        zones=2,
        periods=3,
        hours_per_period=4,
        technologies=["gas", "wind"],
        links=chain_links(2),
        seed=7,
    )
    return generate_instance(spec)


@pytest.fixture
def two_zone_integer():
    spec = InstanceSpec(
        name="two-zone-int",
        zones=2,
        periods=2,
        hours_per_period=3,
        technologies=["gas", "solar"],
        links=chain_links(2),
        integer_mode=True,
        default_block=25.0,
        seed=11,
    )
    return generate_instance(spec)


@pytest.fixture
def family_member():
    """Member of the seeded acceptance family; several carry cut rows in the 1e6 range."""

    def build(index):
        rng = np.random.default_rng(2024)
        for i in range(index + 1):
            zones = int(rng.integers(2, 5))
            spec = InstanceSpec(
                name=f"family-{i}",
                zones=zones,
                periods=int(rng.integers(2, 7)),
                hours_per_period=int(rng.integers(4, 25)),
                links=chain_links(zones),
                seed=int(rng.integers(0, 2**31)),
            )
        return generate_instance(spec)

    return build


@pytest.fixture(params=["highs", "reference"])
def backend(request):
    return HighsBackend() if request.param == "highs" else ReferenceBackend()


@pytest.fixture
def config():
    return AlgoConfig(delta_ls=1e-6, delta_mga=1e-3, k_ls=300, k_mga=300, vectors_total=4, seed=3)

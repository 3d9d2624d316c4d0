"""
MGA weight generation tests.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from core.exceptions import DimensionMismatchError
from modules.mga_weights.schemas import MgaWeightVector
from modules.mga_weights.service_layer import combination_set, random_vector, variable_minmax, weight_array

GROUPS = {"gas": [0, 1], "wind": [2], "link": [3]}


def test_variable_minmax_pairs():
    vectors = variable_minmax(GROUPS, 4)
    assert len(vectors) == 6
    assert vectors[0].weights == [1.0, 1.0, 0.0, 0.0]
    assert vectors[1].weights == [-1.0, -1.0, 0.0, 0.0]
    assert [v.label for v in vectors[:2]] == ["min:gas", "max:gas"]
    assert variable_minmax([[0], [1, 2]], 3)[2].group == "g1"


def test_variable_minmax_errors():
    with pytest.raises(ValueError):
        variable_minmax({}, 3)
    with pytest.raises(DimensionMismatchError):
        variable_minmax({"a": [5]}, 3)


def test_random_vector_is_seeded():
    a = random_vector(5, 42)
    assert a == random_vector(5, 42)
    assert a != random_vector(5, 43)
    assert all(-1.0 <= v <= 1.0 for v in a.weights)
    assert a.label == "random:42"


def test_combination_split():
    vectors = combination_set(4, GROUPS, 16, 0.75, seed=9)
    methods = [v.method for v in vectors]
    assert methods == ["minmax"] * 12 + ["random"] * 4
    # the min/max list of 6 is cycled in order
    assert vectors[6] == vectors[0]
    assert all(v.combination for v in vectors)
    assert vectors == combination_set(4, GROUPS, 16, 0.75, seed=9)


def test_combination_edges():
    assert combination_set(4, GROUPS, 0, 0.75, seed=1) == []
    assert all(v.method == "random" for v in combination_set(4, {}, 3, 0.0, seed=1))
    with pytest.raises(ValueError):
        combination_set(4, {}, 3, 0.5, seed=1)
    with pytest.raises(ValueError):
        combination_set(4, GROUPS, 3, 1.5, seed=1)


def test_weight_vector_validation():
    with pytest.raises(ValidationError):
        MgaWeightVector(weights=[0.0, 0.0], method="random", seed=1)
    with pytest.raises(ValidationError):
        MgaWeightVector(weights=[0.5, 0.0], method="minmax", group="a", sign=1)
    assert MgaWeightVector(weights=[0.0, 0.0]).label == "custom"


def test_weight_array():
    np.testing.assert_array_equal(weight_array(MgaWeightVector(weights=[1.0, 2.0]), 2), [1.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        weight_array([1.0], 2)
    with pytest.raises(ValueError):
        weight_array([np.nan, 1.0], 2)


def test_random_weights_are_centered():
    draws = np.array([random_vector(3, seed).weights for seed in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0)) < 0.05)


def test_full_minmax_fraction():
    vectors = combination_set(4, GROUPS, 5, 1.0, seed=0)
    assert [v.method for v in vectors] == ["minmax"] * 5
    assert variable_minmax({"solo": [2]}, 3)[1].weights == [0.0, 0.0, -1.0]

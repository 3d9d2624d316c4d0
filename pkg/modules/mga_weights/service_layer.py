"""
CGA Planner - MGA Weight Generation

Random Vector, Variable Min/Max and the Combination mix of both.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Mapping, Sequence, Union

import numpy as np

from core.exceptions import DimensionMismatchError
from core.seeds import child_seeds
from modules.mga_weights.schemas import MgaWeightVector

logger = logging.getLogger(__name__)

Groups = Union[Mapping[str, Sequence[int]], Sequence[Sequence[int]]]


def weight_array(weights: Union[MgaWeightVector, Sequence[float], np.ndarray], n: int) -> np.ndarray:
    """Weights as a float array of length ``n``."""
    values = weights.weights if isinstance(weights, MgaWeightVector) else weights
    w = np.asarray(values, dtype=float)
    if w.ndim != 1 or w.shape[0] != n:
        raise DimensionMismatchError(f"weight vector has length {w.size}, expected {n}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weight vector has non-finite entries")
    return w


def random_vector(n: int, seed: int) -> MgaWeightVector:
    """Weights drawn independently uniform on [-1, 1]."""
    if n < 1:
        raise ValueError(f"random weight vector needs n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, n)
    return MgaWeightVector(weights=[float(v) for v in weights], method="random", seed=int(seed))


def _named_groups(groups: Groups) -> Dict[str, List[int]]:
    if isinstance(groups, Mapping):
        return {str(name): [int(j) for j in members] for name, members in groups.items()}
    return {f"g{i}": [int(j) for j in members] for i, members in enumerate(groups)}


def variable_minmax(groups: Groups, n: int) -> List[MgaWeightVector]:
    """
    Two vectors per group: +1 on its members (minimize the group total)
    followed by -1 (maximize it).

    Args:
        groups: planning index sets, as a list or a name -> indices mapping
        n: planning dimension

    Returns:
        2 * len(groups) weight vectors in group order
    """
    named = _named_groups(groups)
    if not named:
        raise ValueError("variable min/max needs at least one group")
    vectors = []
    for name, members in named.items():
        if not members:
            raise ValueError(f"group '{name}' is empty")
        if any(j < 0 or j >= n for j in members):
            raise DimensionMismatchError(f"group '{name}' has indices outside 0..{n - 1}")
        for sign in (1, -1):
            weights = np.zeros(n)
            weights[members] = float(sign)
            vectors.append(MgaWeightVector(weights=weights.tolist(), method="minmax", group=name, sign=sign))
    return vectors


def combination_set(
    n: int,
    groups: Groups,
    total: int,
    minmax_fraction: float,
    seed: int,
) -> List[MgaWeightVector]:
    """
    Mixed weight set: the first ceil(fraction * total) vectors cycle
    through the Variable Min/Max list, the rest are Random Vectors.
    """
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    if not 0.0 <= minmax_fraction <= 1.0:
        raise ValueError(f"minmax_fraction must lie in [0, 1], got {minmax_fraction}")

    num_minmax = math.ceil(round(minmax_fraction * total, 9))
    vectors: List[MgaWeightVector] = []
    if num_minmax:
        cycle = variable_minmax(groups, n)
        vectors.extend(cycle[i % len(cycle)] for i in range(num_minmax))
    vectors.extend(random_vector(n, s) for s in child_seeds(seed, total - num_minmax))

    logger.debug(f"Weight set: {num_minmax} min/max + {total - num_minmax} random vectors")
    return [v.model_copy(update={"combination": True}) for v in vectors]

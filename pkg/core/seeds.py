"""
CGA Planner - Seed Derivation

All randomness in a run flows from one root seed; each consumer
(instance generator, weight generator, clustering) gets its own
stream derived from a label.
"""

import hashlib

import numpy as np


def derive_seed(root_seed: int, label: str) -> int:
    """Derive a 32-bit child seed for ``label`` from ``root_seed``."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    label_key = int.from_bytes(digest, "little")
    sequence = np.random.SeedSequence([int(root_seed), label_key])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def child_seeds(seed: int, count: int) -> list:
    """Deterministic list of ``count`` seeds spawned from ``seed``."""
    if count <= 0:
        return []
    return [int(s) for s in np.random.SeedSequence(int(seed)).generate_state(count, dtype=np.uint32)]

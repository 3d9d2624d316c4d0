"""
CGA Planner - Cut Pool

Central store of Benders cuts with the sharing strategies applied when
a master problem asks for its view:

    none             each MGA iterate starts from its own cuts only
    least-cost-only  cuts from the least-cost solve are shared
    all              every cut in the pool is shared
    first-n          the first n cuts by insertion order are shared

Every view also contains the requesting iterate's own cuts.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.config import settings
from core.documents import load_document, parse_model, write_document
from core.exceptions import DimensionMismatchError
from core.metrics import CUTS_INSERTED
from modules.benders.schemas import Cut
from modules.cutpool.schemas import CutStrategy, PoolDocument

logger = logging.getLogger(__name__)

POOL_KIND = "cut-pool"
LEAST_COST = "least-cost"

Phase = Union[str, int]

_FIRST_N = re.compile(r"^first-n\((\d+)\)$")


def parse_strategy(text: str) -> Tuple[str, Optional[int]]:
    """'first-n(100)' -> ('first-n', 100); other names pass through."""
    text = text.strip().lower()
    match = _FIRST_N.match(text)
    if match:
        return "first-n", int(match.group(1))
    if text not in ("none", "least-cost-only", "all", "first-n"):
        raise ValueError(f"Unknown cut strategy '{text}'")
    return text, None


def evaluate_cut(cut: Cut, x: Sequence[float]) -> float:
    """value + subgradient'(x - point)"""
    x = np.asarray(x, dtype=float)
    point = np.asarray(cut.point, dtype=float)
    if x.shape != point.shape:
        raise DimensionMismatchError(f"cut has dimension {point.shape[0]}, point has {x.shape[0]}")
    return float(cut.value + np.asarray(cut.subgradient, dtype=float) @ (x - point))


class CutPool:
    """
    Ordered cut store.

    Single writer: the active solve inserts, masters read views. Pools
    for concurrent solves are separate objects (see ``seeded_copy``).
    """

    def __init__(
        self,
        num_planning: int,
        num_periods: int,
        strategy: CutStrategy = "least-cost-only",
        first_n: Optional[int] = None,
    ):
        if strategy not in ("none", "least-cost-only", "all", "first-n"):
            raise ValueError(f"Unknown cut strategy '{strategy}'")
        self.num_planning = num_planning
        self.num_periods = num_periods
        self.strategy = strategy
        self.first_n = first_n
        self.lc_iterations = 0
        self.mga_iterations: List[int] = []
        self.cuts: List[Cut] = []
        self._arrays: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    def __len__(self) -> int:
        return len(self.cuts)

    def __repr__(self) -> str:
        return f"CutPool(strategy={self.strategy!r}, cuts={len(self.cuts)})"

    # Insertion

    def insert(self, cuts: Sequence[Cut]) -> "CutPool":
        """Append ``cuts`` in the given order."""
        for cut in cuts:
            if len(cut.subgradient) != self.num_planning:
                raise DimensionMismatchError(
                    f"cut for period {cut.period} has dimension {len(cut.subgradient)}, pool expects {self.num_planning}"
                )
        if cuts:
            self.cuts.extend(cuts)
            self._arrays = None
            CUTS_INSERTED.inc(len(cuts))
        return self

    def record_iterations(self, phase: Phase, iterations: int) -> None:
        """Remember how many iterations a finished solve took (adaptive first-n)."""
        if phase == LEAST_COST:
            self.lc_iterations = iterations
        else:
            self.mga_iterations.append(iterations)

    # Views

    @property
    def effective_first_n(self) -> int:
        """
        Shared-cut count for first-n.

        Without a configured n this is |P| * (least-cost iterations +
        5 * mean MGA iterations so far), using the least-cost count
        as the mean before any MGA iterate has finished.
        """
        if self.first_n is not None:
            return self.first_n
        mean_mga = float(np.mean(self.mga_iterations)) if self.mga_iterations else float(self.lc_iterations)
        return int(round(self.num_periods * (self.lc_iterations + 5.0 * mean_mga)))

    def view_indices(self, phase: Phase) -> np.ndarray:
        """Global indices (insertion order) of the cuts visible to ``phase``."""
        total = len(self.cuts)
        if phase == LEAST_COST:
            return np.array([i for i, c in enumerate(self.cuts) if c.provenance == "least-cost"], dtype=int)

        iterate_id = int(phase)
        if self.strategy == "all":
            return np.arange(total)

        shared = np.zeros(total, dtype=bool)
        if self.strategy == "least-cost-only":
            shared = np.array([c.provenance == "least-cost" for c in self.cuts], dtype=bool)
        elif self.strategy == "first-n":
            shared[: min(self.effective_first_n, total)] = True
        own = np.array([c.provenance == "mga" and c.iterate_id == iterate_id for c in self.cuts], dtype=bool)
        return np.flatnonzero(shared | own) if total else np.zeros(0, dtype=int)

    def view(self, phase: Phase) -> List[Cut]:
        return [self.cuts[i] for i in self.view_indices(phase)]

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(period ids, subgradients k x n, intercepts) over the whole pool."""
        if self._arrays is None:
            if self.cuts:
                periods = np.array([c.period for c in self.cuts], dtype=int)
                subgradients = np.array([c.subgradient for c in self.cuts], dtype=float)
                points = np.array([c.point for c in self.cuts], dtype=float)
                values = np.array([c.value for c in self.cuts], dtype=float)
                intercepts = values - np.einsum("ij,ij->i", subgradients, points)
            else:
                periods = np.zeros(0, dtype=int)
                subgradients = np.zeros((0, self.num_planning))
                intercepts = np.zeros(0)
            self._arrays = (periods, subgradients, intercepts)
        return self._arrays

    def seeded_copy(self) -> "CutPool":
        """Independent pool holding only the least-cost cuts."""
        pool = CutPool(self.num_planning, self.num_periods, self.strategy, self.first_n)
        pool.lc_iterations = self.lc_iterations
        pool.insert([c for c in self.cuts if c.provenance == "least-cost"])
        return pool


def view_for(pool: CutPool, phase: Phase) -> List[Cut]:
    """Cuts visible to ``phase`` ("least-cost" or an MGA iterate id), in insertion order."""
    return pool.view(phase)


def insert_cuts(pool: CutPool, cuts: Sequence[Cut]) -> CutPool:
    return pool.insert(cuts)


def write_pool(pool: CutPool, path: Path) -> Path:
    """Write ``pool`` as a schema-versioned JSON document."""
    document = PoolDocument(
        num_planning=pool.num_planning,
        num_periods=pool.num_periods,
        strategy=pool.strategy,
        first_n=pool.first_n,
        lc_iterations=pool.lc_iterations,
        mga_iterations=pool.mga_iterations,
        cuts=pool.cuts,
    )
    path = write_document(path, POOL_KIND, settings.POOL_SCHEMA_VERSION, document.model_dump(mode="json"))
    logger.info(f"Cut pool with {len(pool)} cuts written to {path}")
    return path


def read_pool(path: Path) -> CutPool:
    """Read a pool written by ``write_pool``."""
    text = Path(path).read_text(encoding="utf-8")
    payload = load_document(text, POOL_KIND, settings.POOL_SCHEMA_VERSION)
    document = parse_model(PoolDocument, payload, text=text, kind=POOL_KIND)
    pool = CutPool(document.num_planning, document.num_periods, document.strategy, document.first_n)
    pool.lc_iterations = document.lc_iterations
    pool.mga_iterations = list(document.mga_iterations)
    pool.insert(document.cuts)
    return pool

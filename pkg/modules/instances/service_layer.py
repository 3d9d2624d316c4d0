"""
CGA Planner - Instance Generator

Builds desk-scale capacity expansion instances: generator and link
capacities as planning columns, hourly dispatch and flows as the
operational columns of each period.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from core.config import settings
from modules.instances.schemas import TECHNOLOGY_TEMPLATES, GeneratorSpec, InstanceSpec, LinkSpec
from modules.model.schemas import ConstraintSet, Instance, OperationalBlock, SparseMatrix

logger = logging.getLogger(__name__)


@dataclass
class _Unit:
    """Resolved generator: template merged with explicit spec"""

    name: str
    spec: GeneratorSpec
    availability: np.ndarray
    block: float


def _demand_profiles(spec: InstanceSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.demand is not None:
        return np.asarray(spec.demand, dtype=float)
    hours = np.arange(spec.total_hours)
    profiles = np.zeros((spec.zones, spec.total_hours))
    for z in range(spec.zones):
        scale = rng.uniform(0.6, 1.0)
        shape = 0.75 + 0.2 * np.sin(2.0 * np.pi * ((hours % 24) - 8) / 24.0)
        noise = rng.normal(0.0, 0.03, spec.total_hours)
        profiles[z] = np.round(np.clip(spec.peak_demand * scale * (shape + noise), 0.0, None), 4)
    return profiles


def _availability_profile(technology: str, total_hours: int, rng: np.random.Generator) -> np.ndarray:
    hours = np.arange(total_hours)
    if technology == "wind":
        phase = rng.uniform(0.0, 2.0 * np.pi)
        profile = 0.4 + 0.3 * np.sin(2.0 * np.pi * hours / 36.0 + phase) + rng.normal(0.0, 0.1, total_hours)
    elif technology == "solar":
        daylight = np.clip(np.sin(np.pi * ((hours % 24) - 6) / 12.0), 0.0, None)
        profile = daylight * rng.uniform(0.7, 1.0) + rng.normal(0.0, 0.03, total_hours) * (daylight > 0)
    else:
        profile = np.ones(total_hours)
    return np.round(np.clip(profile, 0.0, 1.0), 4)


def _resolve_units(spec: InstanceSpec, rng: np.random.Generator) -> List[_Unit]:
    generators = list(spec.generators)
    if not generators:
        generators = [
            GeneratorSpec(zone=z, technology=tech, **TECHNOLOGY_TEMPLATES[tech])
            for z in range(1, spec.zones + 1)
            for tech in spec.technologies
        ]

    units = []
    seen: Dict[str, int] = {}
    for gen in generators:
        base = f"z{gen.zone}/{gen.technology}"
        seen[base] = seen.get(base, 0) + 1
        name = base if seen[base] == 1 else f"{base}#{seen[base]}"
        if gen.availability is None:
            availability = _availability_profile(gen.technology, spec.total_hours, rng)
        else:
            availability = np.resize(np.asarray(gen.availability, dtype=float), spec.total_hours)
        block = gen.integral_block or spec.default_block
        units.append(_Unit(name=name, spec=gen, availability=availability, block=block))
    return units


def _link_name(link: LinkSpec) -> str:
    return f"link/{link.from_zone}-{link.to_zone}"


def _build_block(
    spec: InstanceSpec,
    p: int,
    units: List[_Unit],
    demand: np.ndarray,
    penalty: float,
) -> OperationalBlock:
    H = spec.hours_per_period
    G = len(units)
    L = len(spec.links)
    n = G + L
    m = (G + L) * H
    offset = (p - 1) * H

    def gen_col(g: int, h: int) -> int:
        return g * H + h

    def flow_col(l: int, h: int) -> int:
        return G * H + l * H + h

    # Coupling rows: gen - avail*block*x <= 0, then +flow - x <= 0, then -flow - x <= 0
    a_rows: List[int] = []
    a_cols: List[int] = []
    a_vals: List[float] = []
    b_rows: List[int] = []
    b_cols: List[int] = []
    b_vals: List[float] = []
    row = 0
    for g, unit in enumerate(units):
        factor = unit.block if spec.integer_mode else 1.0
        for h in range(H):
            coef = float(unit.availability[offset + h]) * factor
            if coef != 0.0:
                a_rows.append(row)
                a_cols.append(g)
                a_vals.append(-coef)
            b_rows.append(row)
            b_cols.append(gen_col(g, h))
            b_vals.append(1.0)
            row += 1
    for sign in (1.0, -1.0):
        for l in range(L):
            for h in range(H):
                a_rows.append(row)
                a_cols.append(G + l)
                a_vals.append(-1.0)
                b_rows.append(row)
                b_cols.append(flow_col(l, h))
                b_vals.append(sign)
                row += 1
    r = row

    # Operational rows: zone balance per hour, then the optional emission cap
    c_rows: List[int] = []
    c_cols: List[int] = []
    c_vals: List[float] = []
    senses: List[str] = []
    rhs: List[float] = []
    for z in range(1, spec.zones + 1):
        for h in range(H):
            q = len(senses)
            for g, unit in enumerate(units):
                if unit.spec.zone == z:
                    c_rows.append(q)
                    c_cols.append(gen_col(g, h))
                    c_vals.append(1.0)
            for l, link in enumerate(spec.links):
                if link.to_zone == z:
                    c_rows.append(q)
                    c_cols.append(flow_col(l, h))
                    c_vals.append(1.0)
                elif link.from_zone == z:
                    c_rows.append(q)
                    c_cols.append(flow_col(l, h))
                    c_vals.append(-1.0)
            senses.append("E")
            rhs.append(float(demand[z - 1, offset + h]))
    balance_rows = list(range(len(senses)))

    if spec.emission_cap is not None:
        q = len(senses)
        for g, unit in enumerate(units):
            if unit.spec.emission_rate > 0:
                for h in range(H):
                    c_rows.append(q)
                    c_cols.append(gen_col(g, h))
                    c_vals.append(unit.spec.emission_rate)
        senses.append("L")
        rhs.append(float(spec.emission_cap))

    op_cost = [unit.spec.varcost for unit in units for _ in range(H)] + [0.0] * (L * H)
    op_lower = [0.0] * (G * H) + [-link.max_cap for link in spec.links for _ in range(H)]
    op_upper: List[Optional[float]] = [None] * (G * H) + [link.max_cap for link in spec.links for _ in range(H)]
    op_names = [f"gen[{unit.name}][h{h + 1}]" for unit in units for h in range(H)] + [
        f"flow[{_link_name(link)}][h{h + 1}]" for link in spec.links for h in range(H)
    ]

    return OperationalBlock(
        period=p,
        op_cost=op_cost,
        coupling_matrix=SparseMatrix(shape=(r, n), rows=a_rows, cols=a_cols, values=a_vals),
        op_matrix=SparseMatrix(shape=(r, m), rows=b_rows, cols=b_cols, values=b_vals),
        rhs=[0.0] * r,
        op_constraints=ConstraintSet(
            matrix=SparseMatrix(shape=(len(senses), m), rows=c_rows, cols=c_cols, values=c_vals),
            senses=senses,
            rhs=rhs,
        ),
        op_lower=op_lower,
        op_upper=op_upper,
        balance_rows=balance_rows,
        slack_penalty=penalty,
        op_names=op_names,
    )


def _planning_columns(spec: InstanceSpec, units: List[_Unit]) -> Tuple[List[float], List[Optional[float]], List[bool]]:
    cost: List[float] = []
    upper: List[Optional[float]] = []
    integer: List[bool] = []
    for unit in units:
        if spec.integer_mode:
            cost.append(unit.spec.capex * unit.block)
            upper.append(float(max(1, math.floor(unit.spec.max_cap / unit.block))))
            integer.append(True)
        else:
            cost.append(unit.spec.capex)
            upper.append(unit.spec.max_cap)
            integer.append(False)
    for link in spec.links:
        cost.append(link.capex)
        upper.append(link.max_cap)
        integer.append(False)
    return cost, upper, integer


def generate_instance(spec: InstanceSpec) -> Instance:
    """
    Generate a capacity expansion instance.

    Args:
        spec: generator specification (already validated by pydantic)

    Returns:
        Instance that passes validate_instance; deterministic per seed
    """
    rng = np.random.default_rng(spec.seed)
    demand = _demand_profiles(spec, rng)
    units = _resolve_units(spec, rng)

    cost, upper, integer = _planning_columns(spec, units)
    names = [unit.name for unit in units] + [_link_name(link) for link in spec.links]

    groups: Dict[str, List[int]] = {}
    for j, unit in enumerate(units):
        groups.setdefault(f"z{unit.spec.zone}/{unit.spec.technology}", []).append(j)
    for l, link in enumerate(spec.links):
        groups.setdefault(_link_name(link), []).append(len(units) + l)

    max_op_cost = max([unit.spec.varcost for unit in units], default=0.0)
    penalty = spec.slack_penalty or settings.SLACK_PENALTY_FACTOR * max(max_op_cost, 1.0)

    periods = [_build_block(spec, p, units, demand, penalty) for p in range(1, spec.periods + 1)]

    instance = Instance(
        name=spec.name,
        planning_cost=cost,
        planning_lower=[0.0] * len(cost),
        planning_upper=upper,
        planning_integer=integer,
        planning_constraints=ConstraintSet(matrix=SparseMatrix(shape=(0, len(cost)))),
        planning_names=names,
        planning_groups=groups,
        periods=periods,
    )
    logger.info(
        f"Generated instance '{spec.name}': {len(cost)} planning columns, {spec.periods} periods x "
        f"{spec.hours_per_period} hours, integer_mode={spec.integer_mode}"
    )
    return instance


def chain_links(zones: int, capex: float = 20.0, max_cap: float = 100.0) -> List[LinkSpec]:
    """Links 1-2, 2-3, ... connecting all zones in a line."""
    return [LinkSpec(from_zone=z, to_zone=z + 1, capex=capex, max_cap=max_cap) for z in range(1, zones)]


def toy_instance(
    demand: float = 1.0,
    varcost: float = 2.0,
    capex: float = 1.0,
    max_cap: float = 2.0,
    periods: int = 1,
    slack_penalty: float = 1e4,
    integer_block: Optional[float] = None,
    with_generator: bool = True,
) -> Instance:
    """
    One zone, one hour per period, a single always-available generator.

    With the defaults the least-cost optimum is x=1 at total cost 3.
    """
    generators = []
    if with_generator:
        generators.append(
            GeneratorSpec(
                zone=1,
                technology="gas",
                capex=capex,
                varcost=varcost,
                max_cap=max_cap,
                availability=[1.0],
                integral_block=integer_block,
            )
        )
    spec = InstanceSpec(
        name="toy",
        zones=1,
        periods=periods,
        hours_per_period=1,
        generators=generators,
        technologies=["gas"],
        demand=[[demand] * periods],
        integer_mode=integer_block is not None,
        slack_penalty=slack_penalty,
    )
    if not with_generator:
        return _generator_free(spec)
    return generate_instance(spec)


def _generator_free(spec: InstanceSpec) -> Instance:
    # Shed-only periods still need one planning column; add an idle one
    base = generate_instance(spec.model_copy(update={"generators": [], "technologies": []}))
    blocks = [
        block.model_copy(update={"coupling_matrix": SparseMatrix(shape=(block.coupling_matrix.shape[0], 1))})
        for block in base.periods
    ]
    return base.model_copy(
        update={
            "planning_cost": [0.0],
            "planning_lower": [0.0],
            "planning_upper": [0.0],
            "planning_integer": [False],
            "planning_constraints": ConstraintSet(matrix=SparseMatrix(shape=(0, 1))),
            "planning_names": ["idle"],
            "planning_groups": {},
            "periods": blocks,
        }
    )

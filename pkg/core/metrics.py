"""
CGA Planner - Metrics

Prometheus counters for solver activity.
"""

from pathlib import Path

from prometheus_client import Counter, Histogram, REGISTRY, generate_latest

# Registration is process-global; re-imports (tests, reloads) reuse the collectors
try:
    SUBPROBLEM_SOLVES = Counter("cga_subproblem_solves_total", "Cut-generating subproblem solves")
    SUBPROBLEM_LATENCY = Histogram("cga_subproblem_latency_seconds", "Subproblem solve latency")
    MASTER_SOLVES = Counter("cga_master_solves_total", "Master problem solves", ["kind"])
    MASTER_LATENCY = Histogram("cga_master_latency_seconds", "Master solve latency", ["kind"])
    CUTS_INSERTED = Counter("cga_cuts_inserted_total", "Cuts inserted into cut pools")
except ValueError:
    SUBPROBLEM_SOLVES = REGISTRY._names_to_collectors.get("cga_subproblem_solves_total")
    SUBPROBLEM_LATENCY = REGISTRY._names_to_collectors.get("cga_subproblem_latency_seconds")
    MASTER_SOLVES = REGISTRY._names_to_collectors.get("cga_master_solves_total")
    MASTER_LATENCY = REGISTRY._names_to_collectors.get("cga_master_latency_seconds")
    CUTS_INSERTED = REGISTRY._names_to_collectors.get("cga_cuts_inserted_total")


def write_metrics(path: Path) -> Path:
    """Write the current registry in text exposition format."""
    path = Path(path)
    path.write_bytes(generate_latest(REGISTRY))
    return path

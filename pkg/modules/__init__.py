"""
CGA Planner - Modules Package
"""

__all__ = [
    "model",
    "instances",
    "monolith",
    "benders",
    "cutpool",
    "cga",
    "mga_weights",
    "partition",
    "driver",
]

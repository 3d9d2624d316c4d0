"""
CGA Planner - MGA Weights Module

Objective weight vectors for near-optimal exploration.
"""

__version__ = "1.0.0"

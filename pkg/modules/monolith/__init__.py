"""
CGA Planner - Monolith Module

Single-LP least-cost and MGA oracles.
"""

__version__ = "1.0.0"

"""
CGA Planner - Benders Module

Multi-cut Benders decomposition for the least-cost problem.
"""

__version__ = "1.0.0"

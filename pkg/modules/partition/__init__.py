"""
CGA Planner - Partition Module

Directional clustering of MGA weight vectors.
"""

__version__ = "1.0.0"

"""
CGA Planner - Instances Module

Synthetic capacity expansion instances and their file format.
"""

__version__ = "1.0.0"

"""
CGA Planner - Model Module

Two-block planning problem data model and validation.
"""

__version__ = "1.0.0"

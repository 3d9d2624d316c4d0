"""
CGA Planner - CGA Module

Budget-constrained cutting-plane iterations for MGA.
"""

__version__ = "1.0.0"

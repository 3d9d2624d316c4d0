"""
CGA Planner - Core Module Initialization
"""

__version__ = "1.0.0"
__description__ = "Cutting-plane generation of near-optimal planning alternatives"

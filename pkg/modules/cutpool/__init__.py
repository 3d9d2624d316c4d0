"""
CGA Planner - Cut Pool Module

Shared Benders cut store and sharing strategies.
"""

__version__ = "1.0.0"

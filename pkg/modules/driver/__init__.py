"""
CGA Planner - Driver Module

End-to-end runs, monolithic comparison and reports.
"""

__version__ = "1.0.0"

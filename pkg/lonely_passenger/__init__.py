# Lonely Passenger Toolkit
"""
Exact verification toolkit for the lonely-passenger (singleton bins) problem.
"""

__version__ = "1.0.0"

"""
Numerical checks of the analytic bounds and the verify suites.
"""

"""
znkz: level-0 sl_N KZ solutions on Z_N curves

Curves s^N = Π(z - λ_j), their cycles and periods, the determinant and
theta-function solutions, and exact checks of the identities behind them.
"""

__version__ = "0.1.0"

"""Network MIMO performance toolkit.

System-level Monte Carlo simulation and a Gamma/Laplace analytic engine for
ergodic rates of user-centric and disjoint base-station clustering with
zero-forcing beamforming over Poisson-deployed networks.
"""

__version__ = "0.1.0"

"""Comparison of stochastic chemical reaction networks.

Checks order-preservation conditions on concrete networks, simulates coupled
pairs of chains whose paths stay ordered, and compares first passage times
and stationary laws.
"""
__version__ = "0.1.0"

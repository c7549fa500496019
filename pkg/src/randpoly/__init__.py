"""Random polynomials over the integers: irreducibility statistics and experiments"""

__version__ = "0.1.0"

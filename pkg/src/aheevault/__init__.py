"""Secret-key homomorphic cipher over GF(p) plus a client-side encrypted blob vault."""

__version__ = "0.1.0"

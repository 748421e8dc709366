"""Numerical verification lab for a family of Lagrangian translating
solitons: closed-form chart geometry cross-checked against forward-mode
AD, self-contained special functions with inequality certificates, the
weighted Gaussian monotonicity identity on the exactly translated flow,
and the log-log divergence sweep behind the non-existence argument."""

from . import cli, errors, geometry, monotone, quadrature, soliton, specfun

__all__ = ["cli", "errors", "geometry", "monotone", "quadrature", "soliton",
           "specfun"]
__version__ = "0.1.0"

"""Primal-dual solvers for nonconvex-nonconcave saddle problems under weak MVI."""

__version__ = "0.1.0"

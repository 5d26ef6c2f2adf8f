"""Desk-scale verification toolkit for quasitilings, block codes and
entropy machinery over amenable group actions on Z, Z^2 and the discrete
Heisenberg group."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend  # noqa: F401

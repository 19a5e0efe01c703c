"""Truncated second-quantized Dirac dynamics in external electromagnetic fields.

The package provides, at finite momentum truncation: the free Dirac structure
(``spinor``), lattices and potentials (``grid``, ``potentials``), interaction
and dressing kernels with Hilbert-Schmidt diagnostics (``operators``,
``hsbounds``), time evolution and its dressed variants (``dynamics``),
determinant-based many-body calculus on wedge states and a small Fock sandbox
(``wedge``, ``fock``), and a command line runner (``cli``).
"""

__version__ = "0.1.0"

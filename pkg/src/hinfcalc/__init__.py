"""Numerical workbench for joint H-infinity calculi of commuting Ritt and sectorial matrix tuples.

Submodules: geometry, symbols, operators, calculus, transfer, dilation,
rademacher, shiftnorms, workbench, jsonio, cli.  Importing the package does
not pull in numpy, so the command line can pin BLAS threads first.
"""

__version__ = "0.1.0"

__all__ = ["calculus", "dilation", "errors", "geometry", "jsonio", "operators", "rademacher", "shiftnorms",
           "symbols", "transfer", "workbench"]

"""Harmonic analysis on the de Sitter hyperboloid H4+ and its cone C4+.

Submodules:

- ``specfn``: gamma, Legendre, Bessel, Macdonald and hypergeometric kernels
- ``charts``: the seven coordinate systems on both surfaces
- ``generators``: so(1,4) generators as jet-differentiated operators, Casimirs
- ``bases``: normalized eigenfunction families
- ``transforms``: expansions, Plancherel checks, transition coefficients,
  the orispherical transform
- ``checks``: verification suites shared by the tests and the command line
- ``cli``: the ``desitter`` command

Submodules load on first attribute access so that the command line can cap
BLAS threads before numpy is imported.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = ("specfn", "jets", "charts", "generators", "bases", "transforms", "checks", "cli")
__all__ = list(_SUBMODULES)


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f"{__name__}.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

"""Picks the compiled plant integrator when available.

Set ``CDPR_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _plant_py

python_advance = _plant_py.advance
compiled_advance = None

if os.environ.get("CDPR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _plant_ext

        compiled_advance = _plant_ext.advance
    except ImportError:  # extension not built
        compiled_advance = None

advance = compiled_advance or python_advance
KERNEL = "compiled" if compiled_advance is not None else "python"


def get(name=None):
    """Integrator by name: ``"compiled"``, ``"python"`` or None for the default."""
    if name is None:
        return advance
    if name == "python":
        return python_advance
    if name == "compiled":
        if compiled_advance is None:
            raise RuntimeError("compiled plant kernel is not available")
        return compiled_advance
    raise ValueError(f"unknown kernel {name!r}")

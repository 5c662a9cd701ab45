"""Hot bond loops.

The compiled Cython module is used when it was built; otherwise the numpy
implementation is selected.  Setting ``POREPD_PURE_PYTHON=1`` before import
forces the fallback.
"""

import os

from . import _bonds_py

BACKEND = "python"
_compiled = None

if os.environ.get("POREPD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _bonds as _compiled  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _compiled = None

python_bond_forces = _bonds_py.bond_forces
compiled_bond_forces = _compiled.bond_forces if _compiled is not None else None
bond_forces = compiled_bond_forces if compiled_bond_forces is not None else python_bond_forces

__all__ = ["BACKEND", "bond_forces", "python_bond_forces", "compiled_bond_forces"]

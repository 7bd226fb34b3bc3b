"""Kernel backend selection.

Prefers the compiled extension when the build produced one, otherwise falls
back to the numpy implementation. Both expose the same two entry points with
bit-identical results, so which one loads affects speed only.
"""

from sparselut import _slowcore

try:
    from sparselut import _fastcore as _impl  # type: ignore[attr-defined]
except ImportError:
    _impl = _slowcore

rewire_step = _impl.rewire_step
fill_table = _impl.fill_table


def backend_name() -> str:
    """'compiled' when the Cython core loaded, else 'python'."""
    return _impl.BACKEND_NAME

"""Backend selection for the network kernels.

The compiled extension is used when it was built; otherwise the
pure-Python module is loaded.  Both expose ``residual``, ``jacobian``,
``lu_solve``, ``newton`` and ``rk4_oltc``.
"""

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

OK = _kernels_py.OK
NOT_CONVERGED = _kernels_py.NOT_CONVERGED
SINGULAR = _kernels_py.SINGULAR
COLLAPSED = _kernels_py.COLLAPSED

_active = _compiled if _compiled is not None else _kernels_py

def available():
    """Names of the backends importable in this environment."""
    return ["compiled", "python"] if _compiled is not None else ["python"]

def get(name=None):
    """Return a backend module by name, or the active one."""
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")

def use(name):
    """Switch the active backend; returns the previous backend name."""
    global _active
    previous = active_name()
    _active = get(name)
    return previous

def active_name():
    return "python" if _active is _kernels_py else "compiled"

def __getattr__(attr):
    # Module-level delegation so callers can write ``kernels.newton(...)``.
    if attr in ("residual", "jacobian", "lu_solve", "newton", "rk4_oltc"):
        return getattr(_active, attr)
    raise AttributeError(attr)

"""Trial-solver engines.

The compiled Cython core is preferred; a pure numpy fallback with identical
semantics loads when the extension is unavailable. `ENGINE` names the one in
use, and `solve_trial_groups` is the single entry point the simulator calls.
"""

from . import fallback

try:
    from . import _zfcore  # compiled extension

    _HAVE_COMPILED = True
except ImportError:  # pragma: no cover - build-environment dependent
    _zfcore = None
    _HAVE_COMPILED = False

ENGINE = "cython" if _HAVE_COMPILED else "numpy"


def solve_trial_groups(*args, engine=None, **kwargs):
    """Dispatch one trial's cluster-group workload to the selected engine."""
    eng = engine or ENGINE
    if eng == "cython":
        if not _HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but not built")
        return _zfcore.solve_trial_groups(*args, **kwargs)
    if eng == "numpy":
        return fallback.solve_trial_groups(*args, **kwargs)
    raise ValueError(f"unknown engine {eng!r}")

"""Selects the compiled kernel core at import, falling back to pure Python.

Set FGP_PURE_PYTHON=1 to force the fallback (used by the parity tests and
the benchmark).
"""

import os

if os.environ.get("FGP_PURE_PYTHON") == "1":
    from . import _core_py as _impl

    USING_COMPILED = False
else:
    try:
        from . import _core_cy as _impl  # type: ignore[attr-defined]

        USING_COMPILED = True
    except ImportError:
        from . import _core_py as _impl

        USING_COMPILED = False

dinic = _impl.dinic
hough_vote = _impl.hough_vote

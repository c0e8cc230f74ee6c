"""Kernel dispatch: the compiled extension when it was built, else numpy/Python.

Set ``PDTEKIT_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels as python

compiled = None
if os.environ.get("PDTEKIT_PURE") != "1":
    try:
        from . import _ckernels as compiled  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled = None

impl = compiled if compiled is not None else python
IMPLEMENTATION = impl.IMPLEMENTATION
Cipher = impl.Cipher
dpf_gen = impl.dpf_gen
dpf_expand = impl.dpf_expand
xor_scan = impl.xor_scan

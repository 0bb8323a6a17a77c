"""Backend selection for the neighbourhood kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Setting ``CMCS_SPLP_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernels as python

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if os.environ.get("CMCS_SPLP_BACKEND", "").lower() == "python" or compiled is None:
    active = python
else:
    active = compiled

BACKEND = "compiled" if active is compiled else "python"


def available():
    return {"python": python, **({"compiled": compiled} if compiled is not None else {})}


def get(name=None):
    if name is None:
        return active
    try:
        return available()[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None

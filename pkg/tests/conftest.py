import numpy as np
import pytest

from cmcs_splp import kernels
from cmcs_splp.instance import Instance


def small_instance(rng, m, n, cost_hi=20, fixed_hi=30):
    """Random instance with narrow cost ranges so that ties are common."""
    fixed = rng.integers(0, fixed_hi, size=m, endpoint=True)
    costs = rng.integers(0, cost_hi, size=(m, n), endpoint=True)
    return Instance(fixed, costs, f"r{m}x{n}")


def random_open_set(rng, m, lo=2, hi=None):
    hi = m if hi is None else min(hi, m)
    r = int(rng.integers(lo, hi, endpoint=True))
    return sorted(int(i) for i in rng.choice(m, size=r, replace=False))


BACKENDS = [kernels.python] + ([kernels.compiled] if kernels.compiled is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE = {}


def record(criterion, status, detail=""):
    ACCEPTANCE[criterion] = (status, detail)
    print(f"criterion {criterion}: {status} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}".rstrip())

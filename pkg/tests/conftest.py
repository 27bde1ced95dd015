import warnings

import numpy as np
import pytest

from wkbresum.potentials import make

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture
def sho():
    return make("sho")


@pytest.fixture
def morse():
    return make("morse", A=1, B=4, alpha=1)


@pytest.fixture
def rosen_morse():
    return make("rosen_morse", U0=4, U1=1, a=1)


@pytest.fixture
def eckart():
    return make("eckart", **{"lambda": 10, "b": 2, "alpha": 1})


NAMED = [
    ("sho", {}),
    ("harmonic3d", {"b": 1, "l": 1}),
    ("coulomb", {"V0": 2, "b": 1, "l": 0}),
    ("eckart", {"lambda": 10, "b": 2, "alpha": 1}),
    ("morse", {"A": 1, "B": 4, "alpha": 1}),
    ("rosen_morse", {"U0": 4, "U1": 1, "a": 1}),
]


def well_points(model, n=5):
    """Real points strictly inside the classically allowed region at mid-well energy."""
    from wkbresum.dunham import mid_well_energy

    tp = model.turning_points(mid_well_energy(model))
    return np.linspace(tp.z_a.real, tp.z_b.real, n + 2)[1:-1]

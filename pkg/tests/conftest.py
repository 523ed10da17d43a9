import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sqthermo import gaussian as gs
from sqthermo.params import ModeSpec, ReservoirSpec, SqueezeParams

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# frozen high-precision oracle values (mpmath, 40 digits)
N_TH_BETA1 = 0.58197670686932642  # 1 / (e - 1)
N_STEADY_R05 = 1.1695773036912272  # n_th cosh(1) + sinh^2(0.5)
A_STEADY_R05 = 1.2715403174076219  # sinh(1) (n_th + 1/2)
W_MAX_R05 = 0.58760059682190073  # (2 n_th + 1) sinh^2(0.5)


phases = st.floats(0.0, 2 * math.pi, allow_nan=False)
squeezings = st.floats(0.0, 1.2, allow_nan=False)
occupations = st.floats(0.0, 3.0, allow_nan=False)
small_displacements = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def gaussian_states(draw, r_max=1.2, n_max=3.0, displaced=True):
    state = gs.thermal_from_occupation(draw(st.floats(0.0, n_max)))
    state = gs.apply_squeeze(state, SqueezeParams(draw(st.floats(0.0, r_max)), draw(phases)))
    if displaced:
        state = gs.displace(state, complex(draw(small_displacements), draw(small_displacements)))
    return state


@st.composite
def reservoirs(draw, r_max=1.2):
    return ReservoirSpec(
        draw(st.floats(0.2, 5.0)),
        draw(st.floats(0.5, 2.0)),
        SqueezeParams(draw(st.floats(0.0, r_max)), draw(phases)),
        draw(st.floats(0.1, 3.0)),
    )


@pytest.fixture
def res05():
    return ReservoirSpec(1.0, 1.0, SqueezeParams(0.5, 0.0), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_gaussian(rng, r_max=1.0, n_max=2.0, alpha_max=0.0):
    state = gs.thermal_from_occupation(rng.uniform(0, n_max))
    state = gs.apply_squeeze(state, SqueezeParams(rng.uniform(0, r_max), rng.uniform(0, 2 * math.pi)))
    if alpha_max:
        state = gs.displace(state, alpha_max * complex(rng.uniform(-1, 1), rng.uniform(-1, 1)))
    return state


UNIT = ModeSpec(1.0)


# one-line acceptance verdicts, printed after the run
_VERDICTS = {}


def record_verdict(n, title, ok, detail):
    _VERDICTS[n] = f"[{n:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kcvrp.instance import METRICS, from_coords, gen_random, make_instance

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def unit_metric(m: int) -> np.ndarray:
    w = np.ones((m, m))
    np.fill_diagonal(w, 0.0)
    return w


def line_metric(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    return np.abs(p[:, None] - p[None, :])


@st.composite
def instances(draw, variants=("unit",), ks=(3, 4, 5), n_max=7, max_demand=None):
    n = draw(st.integers(1, n_max))
    k = draw(st.sampled_from(ks))
    variant = draw(st.sampled_from(variants))
    metric = draw(st.sampled_from(METRICS))
    seed = draw(st.integers(0, 2**32 - 1))
    cap = max_demand
    if variant == "splittable" and cap is None:
        cap = max(1, 10 // n)
    return gen_random(n, k, variant, metric, seed, cap)


@st.composite
def metrics(draw, m_min=3, m_max=8):
    m = draw(st.integers(m_min, m_max))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return from_coords(3, "unit", [1] * (m - 1), rng.random((m, 2))).weights


@pytest.fixture
def unit_instance():
    def build(n, k, depot_dist=1.0):
        w = unit_metric(n + 1) * 1.0
        w[0, 1:] = w[1:, 0] = depot_dist
        return make_instance(k, "unit", [1] * n, w)
    return build

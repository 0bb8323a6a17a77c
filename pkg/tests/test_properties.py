import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cmcs_splp import components as comp
from cmcs_splp.cmcs import Configuration, parse_config, write_config
from cmcs_splp.components import paper_pool
from cmcs_splp.generator import nondominated
from cmcs_splp.instance import Instance, parse_instance, write_instance
from cmcs_splp.solution import init_solution

from oracles import closest_two


@st.composite
def instances(draw, max_m=12, max_n=12, hi=15):
    m = draw(st.integers(2, max_m))
    n = draw(st.integers(1, max_n))
    fixed = draw(hnp.arrays(np.int64, m, elements=st.integers(0, hi)))
    costs = draw(hnp.arrays(np.int64, (m, n), elements=st.integers(0, hi)))
    return Instance(fixed, costs)


@settings(max_examples=60, deadline=None)
@given(instances(), st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_random_operations_keep_cache_exact(inst, seed, steps):
    rng = np.random.default_rng(seed)
    state = init_solution(inst, rng.choice(inst.m, size=2, replace=False))
    for _ in range(steps):
        closed = np.flatnonzero(state.y == 0)
        if closed.size and (state.size <= 2 or rng.random() < 0.5):
            state.open_site(int(rng.choice(closed)))
        elif state.size > 2:
            state.close_site(int(rng.choice(state.opened)))
    state.check()
    p, q = closest_two(inst, state.opened.tolist())
    assert state.p.tolist() == p.tolist() and state.q.tolist() == q.tolist()


@settings(max_examples=40, deadline=None)
@given(instances(), st.integers(0, 2**32 - 1))
def test_components_keep_invariants(inst, seed):
    rng = np.random.default_rng(seed)
    state = init_solution(inst, rng.choice(inst.m, size=2, replace=False))
    for spec in paper_pool() * 2:
        before = state.value
        spec.apply(state, rng)
        assert state.size >= 2
        if spec.improvement_pressure:
            assert state.value <= before
    state.check()


@settings(max_examples=30, deadline=None)
@given(instances(max_m=6, max_n=6, hi=10**6))
def test_instance_text_round_trip(inst):
    assert parse_instance(write_instance(inst)) == inst


@settings(max_examples=80, deadline=None)
@given(hnp.arrays(np.int64, st.tuples(st.integers(1, 25), st.integers(1, 7)), elements=st.integers(0, 5)))
def test_nondominated_front(values):
    keep = nondominated(values)
    kept = values[keep]
    for row in kept:
        assert not (kept < row).all(axis=1).any()
    for row in values[~keep]:
        assert (kept < row).all(axis=1).any()


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.data())
def test_config_round_trip(k, data):
    comps = tuple(data.draw(st.permutations(paper_pool()))[:k])

    def row():
        w = np.array(data.draw(st.lists(st.integers(0, 9), min_size=k, max_size=k)), dtype=float)
        if w.sum() == 0:
            w[0] = 1
        return w / w.sum()

    cfg = Configuration(comps, np.array([row() for _ in range(k)]), np.array([row() for _ in range(k)]))
    back = parse_config(write_config(cfg))
    assert back.names == cfg.names
    assert np.allclose(back.succ, cfg.succ, atol=1e-11)
    assert np.allclose(back.fail, cfg.fail, atol=1e-11)

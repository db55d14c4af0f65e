import io
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpagerank import DeltaError, Graph, GraphDelta, ParseError, apply_delta, load_delta, transitions
from dpagerank.graph import write_edge_list

from conftest import graph_from_text


def test_two_cycle():
    g = graph_from_text("0 1\n1 0\n")
    assert g.n == 2
    assert transitions(g, 0) == [(1, 1.0)]
    assert transitions(g, 1) == [(0, 1.0)]
    assert not g.dangling.any()


def test_equal_weights_halve():
    g = graph_from_text("0 1 2.0\n0 2 2.0\n")
    assert transitions(g, 0) == [(1, 0.5), (2, 0.5)]
    assert g.dangling.tolist() == [False, True, True]


def test_parallel_edges_merge():
    g = graph_from_text("0 1\n0 1 3.0\n")
    assert transitions(g, 0) == [(1, 1.0)]
    assert g.weight(0, 1) == 4.0
    assert g.out_weight_sum[0] == 4.0


def test_comments_blank_lines_and_n_override():
    g = graph_from_text("# header\n\n0 1\n   \n# 5 6\n", n=4)
    assert g.n == 4
    assert g.dangling.tolist() == [False, True, True, True]


def test_n_is_max_id_plus_one():
    g = graph_from_text("3 0\n")
    assert g.n == 4
    assert g.dangling.tolist() == [True, True, True, False]


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("0 1\n0\n", 2),
        ("0 1 2 3\n", 1),
        ("0 x\n", 1),
        ("-1 2\n", 1),
        ("# c\n0 1 0\n", 2),
        ("0 1 -2.5\n", 1),
        ("0 1 nan\n", 1),
        ("1.5 2\n", 1),
    ],
)
def test_parse_errors_name_line(text, lineno):
    with pytest.raises(ParseError) as exc:
        graph_from_text(text)
    assert exc.value.lineno == lineno
    assert f"line {lineno}" in str(exc.value)


def test_transitions_examples(two_cycle, chain3):
    assert transitions(two_cycle, 0) == [(1, 1.0)]
    assert transitions(chain3, 2) == []
    with pytest.raises(IndexError):
        transitions(chain3, 3)
    with pytest.raises(IndexError):
        transitions(chain3, -1)


def test_self_loop_is_an_ordinary_entry():
    g = graph_from_text("0 0\n0 1\n")
    assert transitions(g, 0) == [(0, 0.5), (1, 0.5)]


def test_graph_is_immutable(two_cycle):
    with pytest.raises(ValueError):
        two_cycle.probs[0] = 0.3
    with pytest.raises(AttributeError):
        two_cycle.n = 5


def test_apply_delta_replace_edge(chain3):
    g, changed = apply_delta(chain3, GraphDelta(additions=[(0, 2, 1.0)], removals=[(0, 1)]))
    assert transitions(g, 0) == [(2, 1.0)]
    assert changed == {0}
    assert transitions(chain3, 0) == [(1, 1.0)]


def test_apply_empty_delta_is_identity(chain3):
    g, changed = apply_delta(chain3, GraphDelta())
    assert changed == set()
    assert g.same_structure(chain3)


def test_apply_delta_grows_n(two_cycle):
    g, changed = apply_delta(two_cycle, GraphDelta(additions=[(0, 2, 1.0)]))
    assert g.n == 3
    assert transitions(g, 0) == [(1, 0.5), (2, 0.5)]
    assert g.dangling[2]
    assert changed == {0}


def test_apply_delta_adds_weight_to_existing_edge():
    g = graph_from_text("0 1\n0 2\n")
    g2, _ = apply_delta(g, GraphDelta(additions=[(0, 1, 2.0)]))
    assert transitions(g2, 0) == [(1, 0.75), (2, 0.25)]


def test_remove_absent_edge_errors(chain3):
    with pytest.raises(DeltaError, match=r"\(0, 2\)"):
        apply_delta(chain3, GraphDelta(removals=[(0, 2)]))
    with pytest.raises(DeltaError, match=r"\(7, 1\)"):
        apply_delta(chain3, GraphDelta(removals=[(7, 1)]))


def test_delta_pair_at_most_once():
    with pytest.raises(DeltaError):
        GraphDelta(additions=[(0, 1, 1.0)], removals=[(0, 1)])
    with pytest.raises(DeltaError):
        GraphDelta(additions=[(0, 1, 1.0), (0, 1, 2.0)])
    with pytest.raises(DeltaError):
        GraphDelta(additions=[(0, 1, 0.0)])


def test_load_delta_format():
    delta = load_delta(io.StringIO("# edits\n+ 0 2 1.5\n- 0 1\n+ 3 4\n"))
    assert delta.additions == ((0, 2, 1.5), (3, 4, 1.0))
    assert delta.removals == ((0, 1),)
    for bad in ("* 0 1\n", "- 0\n", "+ 0 1 2 3\n", "+ 0 1 0\n"):
        with pytest.raises(ParseError):
            load_delta(io.StringIO(bad))
    with pytest.raises(DeltaError):
        load_delta(io.StringIO("+ 0 1\n- 0 1\n"))


def test_write_edge_list_round_trip():
    g = graph_from_text("0 1 0.3\n0 2 0.7\n2 0\n")
    buf = io.StringIO()
    write_edge_list(g, buf)
    assert graph_from_text(buf.getvalue()).same_structure(g)


edge_lists = st.lists(
    st.tuples(
        st.integers(0, 15),
        st.integers(0, 15),
        st.floats(0.01, 100, allow_nan=False, allow_infinity=False),
    ),
    min_size=1,
    max_size=60,
)


def _column_sums(g):
    return np.bincount(np.repeat(np.arange(g.n), g.out_degree), weights=g.probs, minlength=g.n)


@given(edge_lists)
def test_columns_stochastic(edges):
    s, t, w = zip(*edges)
    g = Graph.from_edges(s, t, w)
    sums = _column_sums(g)
    assert np.all(np.abs(sums[~g.dangling] - 1.0) <= 1e-12)
    assert np.all(sums[g.dangling] == 0)
    assert np.all(g.probs > 0)
    for j in range(g.n):
        targets = [i for i, _ in transitions(g, j)]
        assert len(targets) == len(set(targets))
        assert all(0 <= i < g.n for i in targets)


@given(edge_lists, st.randoms(use_true_random=False))
def test_load_is_permutation_invariant(edges, rnd):
    lines = [f"{s} {t} {w!r}" for s, t, w in edges]
    g1 = graph_from_text("\n".join(lines))
    rnd.shuffle(lines)
    g2 = graph_from_text("\n".join(lines))
    assert g1.n == g2.n
    assert np.array_equal(g1.indptr, g2.indptr)
    assert np.array_equal(g1.indices, g2.indices)
    assert np.allclose(g1.probs, g2.probs, rtol=0, atol=1e-12)


def _inverse(g, delta):
    """Delta undoing ``delta`` on ``g`` (additions must be new edges)."""
    return GraphDelta(
        additions=[(s, t, g.weight(s, t)) for s, t in delta.removals],
        removals=[(s, t) for s, t, _ in delta.additions],
    )


@settings(max_examples=60)
@given(edge_lists, st.data())
def test_delta_round_trip(edges, data):
    s, t, w = zip(*edges)
    g = Graph.from_edges(s, t, w, n=16)
    present = sorted({(a, b) for a, b, _ in g.edges()})
    removals = data.draw(st.lists(st.sampled_from(present), unique=True, max_size=5))
    absent = [(a, b) for a in range(16) for b in range(16) if (a, b) not in set(present)]
    adds = data.draw(st.lists(st.sampled_from(absent), unique=True, max_size=5))
    delta = GraphDelta(additions=[(a, b, 1.5) for a, b in adds], removals=removals)
    g2, changed = apply_delta(g, delta)
    assert changed == {a for a, _ in adds} | {a for a, _ in removals}
    g3, _ = apply_delta(g2, _inverse(g, delta))
    assert g3.n == g.n
    assert np.array_equal(g3.indptr, g.indptr)
    assert np.array_equal(g3.indices, g.indices)
    assert np.allclose(g3.probs, g.probs, rtol=0, atol=1e-12)


def test_large_random_graph_columns_stochastic():
    rnd = random.Random(3)
    edges = [(rnd.randrange(500), rnd.randrange(500), rnd.uniform(0.1, 5)) for _ in range(4000)]
    g = Graph.from_edges(*zip(*edges))
    sums = _column_sums(g)
    assert np.max(np.abs(sums[~g.dangling] - 1)) <= 1e-12

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpagerank import (
    ConfigError,
    Graph,
    OpicState,
    Scheduler,
    SolverConfig,
    dense_reference_solve,
    gauss_seidel,
    opic,
    power_iteration,
)
from dpagerank.classic import opic_matrix, opic_steps

from conftest import corpus, dense_solve, topological_dag


def test_power_iteration_two_cycle_hits_fixed_point(two_cycle):
    x, trace = power_iteration(two_cycle, SolverConfig(Z=[0.5, 0.5]))
    assert x.tolist() == [0.5, 0.5]
    assert trace.converged and len(trace.rows) == 1


def test_power_iteration_chain_first_round(chain3):
    # one sparse product from x0 = Z, checked against a dense iterate
    P = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    Z = np.full(3, 1 / 3)
    expected = 0.85 * P @ Z + 0.15 * Z
    x, trace = power_iteration(chain3, SolverConfig(max_rounds=1))
    assert np.allclose(x, [0.05, 1 / 3, 1 / 3], atol=1e-15)
    assert np.allclose(x, expected, atol=1e-15)
    assert not trace.converged


def test_power_iteration_single_dangling(single_dangling):
    x, trace = power_iteration(single_dangling, SolverConfig(Z=[1.0], epsilon=1e-14))
    assert x[0] == pytest.approx(0.15, abs=1e-15)
    assert trace.converged


def test_gauss_seidel_chain_is_exact_in_one_sweep(chain3):
    # back-substitution: 0.05, 0.85*0.05 + 0.05, 0.85*0.0925 + 0.05
    x, trace = gauss_seidel(chain3, SolverConfig(max_rounds=1))
    assert np.allclose(x, [0.05, 0.0925, 0.128625], atol=1e-15)


def test_gauss_seidel_fixed_point_and_dangling(two_cycle, single_dangling):
    x, _ = gauss_seidel(two_cycle, SolverConfig(Z=[0.5, 0.5], max_rounds=1))
    assert x.tolist() == [0.5, 0.5]
    x, _ = gauss_seidel(single_dangling, SolverConfig(Z=[1.0], max_rounds=1))
    assert x[0] == pytest.approx(0.15, abs=1e-16)


def test_dense_reference_examples(chain3, single_dangling, two_cycle):
    cfg = SolverConfig()
    assert np.allclose(dense_reference_solve(chain3, cfg), [0.05, 0.0925, 0.128625], atol=1e-15)
    x = dense_reference_solve(single_dangling, SolverConfig(Z=[1.0]), completed=True)
    assert x[0] == pytest.approx(1.0, abs=1e-15)
    for d in (0.1, 0.5, 0.99):
        x = dense_reference_solve(two_cycle, SolverConfig(d=d, Z=[0.5, 0.5]))
        assert np.allclose(x, [0.5, 0.5], atol=1e-14)


def test_dense_reference_refuses_large_graphs():
    g = Graph.from_edges([0], [1], n=5001)
    with pytest.raises(ValueError, match="refused"):
        dense_reference_solve(g, SolverConfig())


@pytest.mark.parametrize("seed, g", corpus(count=9))
def test_solvers_agree_with_oracle(seed, g):
    cfg = SolverConfig(epsilon=1e-12, max_rounds=5000)
    x_ref = dense_solve(g)
    assert np.abs(dense_reference_solve(g, cfg) - x_ref).sum() <= 1e-12
    for solver in (power_iteration, gauss_seidel):
        x, trace = solver(g, cfg)
        assert trace.converged
        assert np.abs(x - x_ref).sum() <= 1e-8
    xc = dense_solve(g, completed=True)
    for solver in (power_iteration, gauss_seidel):
        x, _ = solver(g, cfg, completed=True)
        assert np.abs(x - xc).sum() <= 1e-8


@pytest.mark.parametrize("seed, g", corpus(count=6))
def test_power_iteration_contracts_by_d(seed, g):
    cfg = SolverConfig(epsilon=1e-13, max_rounds=400)
    x = dense_solve(g)
    _, trace = power_iteration(g, cfg, reference=x)
    errs = trace.errors("pi")
    for a, b in zip(errs, errs[1:]):
        assert b <= cfg.d * a + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10_000), st.data())
def test_gauss_seidel_one_sweep_exact_on_dags(n, seed, data):
    g = topological_dag(n, seed)
    x0 = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    x, _ = gauss_seidel(g, SolverConfig(max_rounds=1), x0=x0)
    assert np.abs(x - dense_solve(g)).sum() <= 1e-12


def test_trace_records_reference_error(two_cycle):
    x, trace = gauss_seidel(two_cycle, SolverConfig(), reference=np.array([0.5, 0.5]))
    assert trace.rows[0].round == 0 and trace.rows[0].l1_error == 0.0


# --- OPIC ---------------------------------------------------------------


def test_opic_single_node(single_dangling):
    state = OpicState.initial(1, 0.85)
    for _ in range(5):
        opic_steps(state, single_dangling, Scheduler("cyc", 1), 1)
        assert state.estimate().tolist() == [1.0]
        assert state.total_fluid() == pytest.approx(1.0, abs=1e-15)


def test_opic_two_cycle_matches_stationary_vector(two_cycle):
    Pp = opic_matrix(two_cycle, 0.85)
    w, v = np.linalg.eig(Pp)
    stat = np.real(v[:, np.argmin(np.abs(w - 1))])
    stat /= stat.sum()
    # the history converges only like 1/rounds
    x, trace = opic(two_cycle, SolverConfig(max_rounds=2000), Scheduler("cyc", 2), reference=stat)
    assert np.allclose(stat, [0.5, 0.5])
    assert np.abs(x - stat).sum() <= 1e-3
    assert len(trace.rows) == 2001
    errs = trace.errors("opic-cyc")
    assert errs[-1] < errs[10] < errs[1]


@pytest.mark.parametrize("kind", ["cyc", "argmax"])
def test_opic_conserves_effective_fluid(kind):
    g = corpus(count=2)[1][1]
    state = OpicState.initial(g.n, 0.85)
    sched = Scheduler(kind, g.n)
    for _ in range(5 * g.n):
        opic_steps(state, g, sched, 1)
        assert abs(state.total_fluid() - 1.0) <= 1e-12
        assert state.effective_fluid().min() >= -1e-15


def test_opic_rank_one_pool_equals_dense_emulation():
    g = corpus(count=3)[2][1]
    n, d = g.n, 0.85
    Pp = opic_matrix(g, d)
    assert np.allclose(Pp.sum(axis=0), 1.0)
    state = OpicState.initial(n, d)
    F = np.full(n, 1.0 / n)
    H = np.zeros(n)
    sched = Scheduler("cyc", n)
    for k in range(3 * n):
        j = k % n
        f = F[j]
        H[j] += f
        F[j] = 0.0
        F += f * Pp[:, j]
        opic_steps(state, g, sched, 1)
        assert np.allclose(state.effective_fluid(), F, atol=1e-14)
        assert np.allclose(state.H, H, atol=1e-14)


def test_opic_converges_to_completed_pagerank():
    g = corpus(count=1)[0][1]
    x, _ = opic(g, SolverConfig(max_rounds=3000), Scheduler("argmax", g.n))
    assert np.abs(x - dense_solve(g, completed=True)).sum() < 1e-2


def test_opic_requires_uniform_z(two_cycle):
    with pytest.raises(ConfigError):
        opic(two_cycle, SolverConfig(Z=[0.3, 0.7]))
    with pytest.raises(ConfigError):
        opic(two_cycle, SolverConfig(), Scheduler("greedy", 2))


@pytest.mark.parametrize(
    "kwargs",
    [dict(d=0.0), dict(d=1.0), dict(epsilon=0.0), dict(max_rounds=0), dict(Z=[0.5, 0.6]),
     dict(Z=[1.5, -0.5])],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_config_z_length_checked(chain3):
    with pytest.raises(ConfigError):
        power_iteration(chain3, SolverConfig(Z=[0.5, 0.5]))

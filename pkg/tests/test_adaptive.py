import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from disperkit.adaptive import AdaptiveConfig, assemble_dataset, run_adaptive, uniform_sweep
from disperkit.eigensolve import solve_modes
from disperkit.errors import ContractViolation, StructuralError
from disperkit.synthetic import crossing_family, veering_family, veering_width
from disperkit.tracking import match_interval


@pytest.mark.parametrize("kwargs", [
    dict(k_min=1.0, k_max=1.0),
    dict(k_min=2.0, k_max=1.0),
    dict(k_min=-0.1, k_max=1.0),
    dict(k_min=0.0, k_max=1.0, N0=1),
    dict(k_min=0.0, k_max=1.0, delta_k_min=0.5),
    dict(k_min=0.0, k_max=1.0, eps_bar=0.0),
    dict(k_min=0.0, k_max=1.0, v_p_max=-1.0),
])
def test_config_validation(kwargs):
    with pytest.raises(ContractViolation):
        AdaptiveConfig(**kwargs)


def test_initial_grid_and_bisection_bound():
    cfg = AdaptiveConfig(0.0, 7.0, N0=71)
    assert np.allclose(np.diff(cfg.initial_grid()), 0.1)
    assert cfg.bisection_bound() == 7  # 0.1 / 2^7 < 1e-3 <= 0.1 / 2^6


def test_veering_refinement_concentrates_at_veering():
    m = veering_family(0.02)
    ds = run_adaptive(m, AdaptiveConfig(0.5, 1.5, N0=11))
    assert ds.max_epsilon <= 0.05
    assert not ds.flagged and not ds.exceeded
    new = sorted(set(ds.grid) - set(np.linspace(0.5, 1.5, 11)))
    assert new and all(abs(k - 1.05) < 0.1 for k in new)
    assert ds.solve_count == len(ds.grid)
    # grid records: first iteration is the initial grid, last one is final
    assert ds.iterations[0]["grid"] == list(np.linspace(0.5, 1.5, 11))
    assert ds.iterations[-1]["grid"] == list(ds.grid)
    assert not any(iv["refined"] for iv in ds.iterations[-1]["intervals"])


def test_veering_branches_follow_eigenvalue_order():
    m = veering_family(0.02)
    ds = run_adaptive(m, AdaptiveConfig(0.5, 1.5, N0=11))
    for lab in (0, 1):
        b = ds.branch(lab)
        assert len(b.ks) == len(ds.grid)
        lam = [solve_modes(m, k, detect_clusters=False).omegas[lab] for k in b.ks]
        assert np.allclose([o[0] for o in b.omegas], lam)


def test_crossing_needs_no_refinement():
    m = crossing_family()
    cfg = AdaptiveConfig(0.5, 1.5, N0=11)
    ds = run_adaptive(m, cfg)
    assert len(ds.grid) == 11 and len(ds.iterations) == 1
    assert ds.max_epsilon < 1e-3
    # the branch starting lowest keeps its block through the crossing
    first = ds.branch(0)
    lo = [o[0] for o in first.omegas]
    assert lo[-1] > min(ds.branch(1).omegas[-1])


def test_flagged_at_minimum_step():
    # a veering of width ~0.02 seen with delta_k_min = 0.02 cannot be resolved
    m = veering_family(0.02)
    cfg = AdaptiveConfig(0.5, 1.5, N0=11, delta_k_min=0.02)
    ds = run_adaptive(m, cfg)
    assert ds.flagged and not ds.exceeded
    for f in ds.flagged:
        assert f["k_right"] - f["k_left"] <= 0.02
        assert f["epsilon"] > 0.05
        assert abs(0.5 * (f["k_left"] + f["k_right"]) - 1.05) < 0.05
    last = ds.iterations[-1]["intervals"]
    assert sum(iv["flagged"] for iv in last) == len(ds.flagged)


def test_veering_narrower_than_grid_is_invisible():
    # with both ends far outside the veering the shapes have simply swapped;
    # matching follows the shapes and reports no ambiguity
    ds = run_adaptive(veering_family(1e-5), AdaptiveConfig(0.5, 1.5, N0=11))
    assert len(ds.grid) == 11 and ds.max_epsilon < 1e-6


def test_iteration_cap_sets_exceeded():
    m = veering_family(0.02)
    ds = run_adaptive(m, AdaptiveConfig(0.5, 1.5, N0=11, max_iterations=1))
    assert ds.exceeded and len(ds.iterations) == 2
    assert not any(iv["refined"] for iv in ds.iterations[-1]["intervals"])


def test_threads_do_not_change_results():
    m = veering_family(0.02)
    cfg = AdaptiveConfig(0.5, 1.5, N0=11)
    a = run_adaptive(m, cfg, threads=1)
    b = run_adaptive(m, cfg, threads=3)
    assert np.array_equal(a.grid, b.grid)
    assert a.rows() == b.rows()
    assert a.iterations == b.iterations


def test_uniform_sweep_agrees_with_direct_matching():
    m = veering_family(0.02)
    grid = np.linspace(0.5, 1.5, 6)
    ds = uniform_sweep(m, grid)
    sets = [solve_modes(m, k) for k in grid]
    eps = [match_interval(a, b).epsilon for a, b in zip(sets[:-1], sets[1:])]
    assert np.allclose(ds.epsilons, eps)
    with pytest.raises(ContractViolation):
        uniform_sweep(m, [1.0, 0.5])


def test_fine_uniform_grid_resolves_veering():
    m = veering_family(0.02)
    w = veering_width(0.02)
    coarse = uniform_sweep(m, np.arange(0.5, 1.5 + 1e-9, 10 * w))
    fine = uniform_sweep(m, np.linspace(0.5, 1.5, 1001))
    assert coarse.max_epsilon > 0.05 >= fine.max_epsilon


def test_assemble_dataset_structure_checks():
    m = veering_family(0.02)
    sets = [solve_modes(m, k) for k in (0.5, 0.6, 0.7)]
    mt = [match_interval(sets[0], sets[1]), match_interval(sets[1], sets[2])]
    ds = assemble_dataset([0.5, 0.6, 0.7], sets, mt)
    assert len(ds.branches) == 6
    with pytest.raises(StructuralError):
        assemble_dataset([0.5, 0.6, 0.7], sets, mt[:1])
    with pytest.raises(StructuralError):
        assemble_dataset([0.5, 0.65, 0.7], sets, mt)


def test_modes_leaving_window_end_their_branch():
    m = veering_family(0.02)
    # lambda_max = (1.8 * 2)^2 = 12.96: the spectator at lambda = 10 + k^2 leaves near k = 1.72
    cfg = AdaptiveConfig(0.2, 2.0, v_p_max=1.8, N0=10)
    ds = run_adaptive(m, cfg)
    short = [b for b in ds.branches if b.ks[-1] < cfg.k_max]
    assert len(short) == 1
    assert short[0].ks[0] == cfg.k_min
    assert all(o[0] ** 2 <= 12.96 for o in short[0].omegas)
    assert len(ds.branches) == 3


@given(st.integers(2, 30))
def test_rows_sorted_and_complete(n0):
    m = crossing_family()
    ds = uniform_sweep(m, np.linspace(0.5, 1.5, n0))
    rows = ds.rows()
    assert rows == sorted(rows)
    assert len(rows) == 6 * n0

import numpy as np
import pytest
import scipy.linalg as sla
from conftest import alu_plate, random_family
from hypothesis import given
from hypothesis import strategies as st

from disperkit.assembly import SafeMatrices, stiffness_at
from disperkit.eigensolve import (ModeSet, ModeWindow, fix_phase, orthonormality_error,
                                  residuals, solve_modes)
from disperkit.errors import MassNotSPDError, SolverError
from disperkit.synthetic import crossing_family, veering_family


@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 5, allow_nan=False))
def test_solution_is_m_orthonormal_eigenbasis(seed, k):
    m = random_family(np.random.default_rng(seed), n=8)
    modes = solve_modes(m, k)
    assert orthonormality_error(modes) < 1e-10
    assert residuals(m, modes).max() < 1e-10
    assert np.all(np.diff(modes.eigenvalues) >= 0)
    ref = sla.eigh(stiffness_at(m, k), m.M_dense, eigvals_only=True)
    assert np.allclose(modes.eigenvalues, ref, rtol=1e-10, atol=1e-12)


def test_window_keeps_exactly_the_modes_below_cutoff():
    m = alu_plate()
    full = solve_modes(m, 2.0)
    win = ModeWindow.from_velocity(3.0, 2.0)
    part = solve_modes(m, 2.0, win)
    keep = full.omegas <= win.omega_max
    assert part.size == keep.sum() > 0
    assert np.allclose(part.eigenvalues, full.eigenvalues[keep])


def test_fixed_phase_largest_entry_real_positive():
    modes = solve_modes(alu_plate(), 1.3)
    for q in modes.vectors.T:
        j = np.argmax(np.abs(q))
        assert abs(q[j].imag) == 0 and q[j].real > 0


@given(st.lists(st.floats(-np.pi, np.pi), min_size=4, max_size=4))
def test_fix_phase_removes_arbitrary_phases(phases):
    base = fix_phase(solve_modes(random_family(np.random.default_rng(3), n=4), 0.7))
    scrambled = ModeSet(base.k, base.eigenvalues, base.vectors * np.exp(1j * np.array(phases)),
                        base.mass)
    assert np.allclose(fix_phase(scrambled).vectors, base.vectors, atol=1e-12)


def test_veering_pair_is_not_clustered():
    m = veering_family(1e-4)
    modes = solve_modes(m, 1.05)
    assert all(c.d == 1 for c in modes.clusters)


def test_exact_crossing_is_clustered():
    # at the crossing point the two decoupled modes are a genuine degenerate pair
    modes = solve_modes(crossing_family(k_star=1.0, inner=0.0), 1.0)
    assert sorted(c.d for c in modes.clusters)[-1] == 2


def test_annulus_pairs_form_clusters(pipe):
    modes = solve_modes(pipe, 0.5, ModeWindow.from_velocity(1.0, 1.0))
    dims = [c.d for c in modes.clusters]
    assert dims.count(2) >= 3
    assert set(dims) <= {1, 2}
    for c in modes.clusters:
        lam = modes.eigenvalues[list(c.indices)]
        assert (lam.max() - lam.min()) / lam.max() <= 1e-6
        G = c.basis.conj().T @ (modes.mass @ c.basis)
        assert np.allclose(G, np.eye(c.d), atol=1e-10)


def test_negative_wavenumber_rejected():
    with pytest.raises(SolverError):
        solve_modes(alu_plate(2, 2), -1.0)


def test_singular_mass_raises():
    I = np.eye(3)
    m = SafeMatrices.from_arrays(I, np.zeros((3, 3)), I, np.diag([1.0, 0.0, 1.0]))
    with pytest.raises(MassNotSPDError):
        solve_modes(m, 0.5)


def test_empty_window():
    modes = solve_modes(alu_plate(2, 2), 3.0, ModeWindow(1e-6))
    assert modes.size == 0 and modes.clusters == ()
    assert residuals(alu_plate(2, 2), modes).size == 0

import numpy as np
import pytest

from blptomo.errors import ValidationError
from blptomo.qmath import random_density_matrix
from blptomo.tomography import (
    CoefficientVector,
    DynamicsDataset,
    Label,
    basis_operators,
    decompose,
    labels,
    prepared_states,
    recover_basis_dynamics,
    reconstruct_dynamics,
)


@pytest.mark.parametrize("n", range(2, 13))
def test_count_law(n):
    assert len(basis_operators(n)) == len(prepared_states(n)) == n * n
    assert len(set(labels(n))) == n * n


def test_qubit_basis_is_split_identity_and_half_paulis():
    ops = dict(basis_operators(2))
    assert np.array_equal(ops[Label("diag", 1)] + ops[Label("diag", 2)], np.eye(2))
    assert np.array_equal(ops[Label("x", 2, 1)], [[0, 0.5], [0.5, 0]])
    sigma_y = np.array([[0, -1j], [1j, 0]])
    # y(2,1) = i(|2><1| - |1><2|)/2 = sigma_y / 2
    assert np.array_equal(ops[Label("y", 2, 1)], sigma_y / 2)


def test_ten_level_basis_has_100_labels():
    assert len(basis_operators(10)) == 100


@pytest.mark.parametrize("n", [2, 3, 5])
def test_basis_linearly_independent(n):
    vecs = np.array([op.ravel() for _, op in basis_operators(n)])
    gram = vecs.conj() @ vecs.T
    assert np.linalg.matrix_rank(gram) == n * n


def test_basis_rejects_small_dimension():
    with pytest.raises(ValidationError):
        basis_operators(1)
    with pytest.raises(ValidationError):
        prepared_states(1)


def test_qubit_preparations():
    states = dict(prepared_states(2))
    s = 1 / np.sqrt(2)
    assert np.allclose(states[Label("diag", 1)], [1, 0])
    assert np.allclose(states[Label("diag", 2)], [0, 1])
    assert np.allclose(states[Label("x", 2, 1)], [s, s])
    # (|m> + i|n>)/sqrt2 with m=2, n=1
    assert np.allclose(states[Label("y", 2, 1)], [1j * s, s])


@pytest.mark.parametrize("n", [2, 6, 10])
def test_preparations_normalized(n):
    states = prepared_states(n)
    assert len(states) == n * n
    for _, psi in states:
        assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_recovery_at_t0_gives_basis_operators(process3):
    basis = recover_basis_dynamics(process3.prepared_dataset())
    for lab, op in basis_operators(3):
        assert np.allclose(basis.series[lab][0], op, atol=1e-15)
    assert np.allclose(basis.series[Label("x", 2, 1)][0][:2, :2], [[0, 0.5], [0.5, 0]], atol=1e-15)


def test_recovery_is_left_inverse(process3):
    basis = recover_basis_dynamics(process3.prepared_dataset())
    for lab, op in basis_operators(3):
        direct = process3.evolve(op)
        assert np.max(np.abs(basis.series[lab] - direct)) < 1e-10


def test_basis_trace_law(process3):
    basis = recover_basis_dynamics(process3.prepared_dataset())
    for lab, mats in basis.series.items():
        want = 1.0 if lab.kind == "diag" else 0.0
        assert np.allclose(np.trace(mats, axis1=1, axis2=2), want, atol=1e-9)


def test_recovery_names_missing_series(process3):
    ds = process3.prepared_dataset()
    partial = {k: v for k, v in ds.series.items() if k != Label("y", 3, 1)}
    short = DynamicsDataset("prepared", 3, ds.times, partial, ds.metadata)
    with pytest.raises(ValidationError, match=r"\(y,3,1\)"):
        recover_basis_dynamics(short)


def test_mismatched_time_grid_rejected(process3):
    ds = process3.prepared_dataset()
    series = dict(ds.series)
    series[Label("diag", 1)] = series[Label("diag", 1)][:-1]
    with pytest.raises(ValidationError, match=r"\(diag,1\)"):
        DynamicsDataset("prepared", 3, ds.times, series, ds.metadata)


def test_decompose_examples():
    c = decompose(np.eye(2) / 2)
    assert np.allclose(c.a0, [0.5, 0.5]) and not c.ax.any() and not c.ay.any()
    plus = np.full((2, 2), 0.5)
    c = decompose(plus)
    assert np.allclose(c.a0, [0.5, 0.5])
    assert c.ax[1, 0] == pytest.approx(1.0)
    assert c.ay[1, 0] == 0.0


def test_decompose_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        rho = random_density_matrix(n, rng)
        c = decompose(rho)
        assert np.linalg.norm(c.recompose() - rho) <= 1e-12
        assert abs(c.a0.sum() - 1) < 1e-10


def test_decompose_rejects_invalid():
    with pytest.raises(ValidationError):
        decompose(np.diag([2.0, -1.0]))


def test_flat_round_trip():
    rng = np.random.default_rng(4)
    c = decompose(random_density_matrix(4, rng))
    back = CoefficientVector.from_flat(c.flat(), 4)
    assert np.array_equal(back.recompose(), c.recompose())


def test_reconstruct_prepared_state_reproduces_series(process3):
    ds = process3.prepared_dataset()
    basis = recover_basis_dynamics(ds)
    for lab, psi in prepared_states(3):
        rhos = reconstruct_dynamics(decompose(np.outer(psi, psi.conj())), basis)
        assert np.max(np.abs(rhos - ds.series[lab])) < 1e-12


def test_reconstruct_unit_population_gives_diag_series(process3):
    basis = recover_basis_dynamics(process3.prepared_dataset())
    c = CoefficientVector(np.array([1.0, 0, 0]), np.zeros((3, 3)), np.zeros((3, 3)))
    assert np.array_equal(reconstruct_dynamics(c, basis), basis.series[Label("diag", 1)])


def test_reconstruct_matches_direct_evolution(process3):
    basis = recover_basis_dynamics(process3.prepared_dataset())
    rng = np.random.default_rng(5)
    for _ in range(20):
        rho0 = random_density_matrix(3, rng)
        rhos = reconstruct_dynamics(decompose(rho0), basis)
        direct = process3.evolve(rho0)
        assert np.max(np.linalg.norm(rhos - direct, axis=(1, 2))) < 1e-10
        for r in rhos:
            assert abs(np.trace(r) - 1) < 1e-9
            assert np.max(np.abs(r - r.conj().T)) < 1e-9
            assert np.linalg.eigvalsh(r)[0] > -1e-9


def test_channel_linearity(process3):
    basis = recover_basis_dynamics(process3.prepared_dataset())
    rng = np.random.default_rng(6)
    for _ in range(20):
        a = rng.uniform()
        ra, rb = random_density_matrix(3, rng), random_density_matrix(3, rng)
        mixed = reconstruct_dynamics(decompose(a * ra + (1 - a) * rb), basis)
        parts = a * reconstruct_dynamics(decompose(ra), basis) + (1 - a) * reconstruct_dynamics(decompose(rb), basis)
        assert np.max(np.abs(mixed - parts)) < 1e-10


def test_reconstruct_dimension_mismatch(process3):
    basis = recover_basis_dynamics(process3.prepared_dataset())
    with pytest.raises(ValidationError, match="dimension"):
        reconstruct_dynamics(decompose(np.eye(2) / 2), basis)


def test_psd_projection_is_opt_in(process3):
    ds = process3.prepared_dataset()
    # perturb one population series so reconstructed states go slightly negative
    noisy = dict(ds.series)
    bad = np.array(noisy[Label("diag", 1)])
    bad[1:] = np.diag([1.0, 0.0, 0.0])
    noisy[Label("diag", 1)] = bad
    basis = recover_basis_dynamics(DynamicsDataset("prepared", 3, ds.times, noisy, ds.metadata))
    c = decompose(np.full((3, 3), 1 / 3))
    raw = reconstruct_dynamics(c, basis)
    fixed = reconstruct_dynamics(c, basis, psd_projection=True)
    assert np.linalg.eigvalsh(raw).min() < -1e-3
    assert np.linalg.eigvalsh(fixed).min() > -1e-12
    assert np.allclose(np.trace(fixed, axis1=1, axis2=2), 1)
    assert np.allclose(raw[0], fixed[0])


def test_dataset_is_immutable(process3):
    ds = process3.prepared_dataset()
    with pytest.raises(ValueError):
        ds.series[Label("diag", 1)][0, 0, 0] = 2

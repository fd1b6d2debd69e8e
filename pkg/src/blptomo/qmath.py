"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Density matrices
and pure states are validated on entry to the functions that need them rather
than being wrapped in classes.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError

#: default slack for Hermiticity, trace and positivity checks
DEFAULT_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValidationError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def hermiticity_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T)))


def check_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")


def check_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL, name: str = "matrix") -> None:
    check_square(a, name)
    err = hermiticity_error(a)
    if err > tol:
        raise ValidationError(f"{name} is not Hermitian: max|A - A^dag| = {err:.3e} > {tol:.1e}")


def hermitian_eigenvalues(h, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    Raises :class:`ValidationError` if ``h`` is not square or deviates from
    Hermiticity by more than ``tol``.
    """
    h = as_matrix(h)
    check_hermitian(h, tol)
    # symmetrise so that LAPACK only ever sees the intended operator
    return np.linalg.eigvalsh(0.5 * (h + h.conj().T))


def check_density_matrix(rho, tol: float = DEFAULT_TOL, name: str = "density matrix") -> np.ndarray:
    """Validate ``rho`` as a density matrix and return it as a complex array.

    Checks Hermiticity, unit trace and positive semidefiniteness, each with
    slack ``tol``. The error message names the violated bound.
    """
    rho = as_matrix(rho)
    check_hermitian(rho, tol, name)
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"{name} trace is {tr.real:.12g}{tr.imag:+.3g}j, |tr - 1| > {tol:.1e}")
    lam_min = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if lam_min < -tol:
        raise ValidationError(f"{name} is not positive semidefinite: min eigenvalue {lam_min:.3e} < -{tol:.1e}")
    return rho


def check_pure_state(psi, tol: float = 1e-9) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.ndim != 1 or psi.size < 1:
        raise ValidationError(f"pure state must be a 1-d vector, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"pure state is not normalized: |psi| = {norm:.12g}")
    return psi


def pure_to_density(psi, tol: float = 1e-9) -> np.ndarray:
    """Projector ``|psi><psi|`` of a normalized state vector."""
    psi = check_pure_state(psi, tol)
    return np.outer(psi, psi.conj())


def partial_trace_env(rho_full, n_sys: int, n_env: int) -> np.ndarray:
    """Trace out the environment of a ``system (x) environment`` operator.

    The system index is the slow one: joint index ``i = s * n_env + e``.
    Works on any square operator of the right size (not only states), so it
    can be applied to traceless differences as well.
    """
    rho_full = np.asarray(rho_full, dtype=np.complex128)
    if n_sys < 1 or n_env < 1:
        raise ValidationError(f"subsystem dimensions must be positive, got {n_sys}, {n_env}")
    d = n_sys * n_env
    if rho_full.shape != (d, d):
        raise ValidationError(
            f"joint operator has shape {rho_full.shape}, expected ({d}, {d}) for {n_sys} x {n_env}"
        )
    return np.trace(rho_full.reshape(n_sys, n_env, n_sys, n_env), axis1=1, axis2=3)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2).conj()


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``G G^dag / tr`` with complex Gaussian ``G`` (Ginibre)."""
    k = n if rank is None else rank
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def project_psd(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues to zero and renormalise the trace."""
    h = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real

"""Operator-basis tomography of an N-level open system.

An N x N density matrix is expanded in the N^2 Hermitian operators

    diag(m)     = |m><m|
    x(m, n)     = (|m><n| + |n><m|) / 2          m > n
    y(m, n)     = i (|m><n| - |n><m|) / 2        m > n

with real, time-independent coefficients.  Because the open-system dynamics is
linear, knowing how each basis operator evolves fixes the evolution of every
initial state.  The basis operators themselves are not states, so they are
recovered from N^2 physical pure preparations:

    |m>                      -> diag(m)(t)
    (|m> + |n>)/sqrt2        -> x(m, n)(t) + (diag(m)(t) + diag(n)(t)) / 2
    (|m> + i|n>)/sqrt2       -> -y(m, n)(t) + (diag(m)(t) + diag(n)(t)) / 2

Labels use 1-based levels ``m, n`` throughout; array indices are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Mapping, NamedTuple

import numpy as np

from .errors import ValidationError
from .qmath import DEFAULT_TOL, check_density_matrix, project_psd

Flavor = Literal["prepared", "basis"]

# tolerance for the trace law of recovered basis series
BASIS_TRACE_TOL = 1e-9


class Label(NamedTuple):
    """Basis operator / preparation identifier: ``(kind, m, n)``.

    ``n`` is ``None`` for ``kind == "diag"``; otherwise ``m > n``.
    """

    kind: str
    m: int
    n: int | None = None

    def __str__(self) -> str:
        if self.kind == "diag":
            return f"(diag,{self.m})"
        return f"({self.kind},{self.m},{self.n})"

    def validate(self, dim: int) -> None:
        if self.kind == "diag":
            if self.n is not None or not 1 <= self.m <= dim:
                raise ValidationError(f"invalid label {self} for dimension {dim}")
        elif self.kind in ("x", "y"):
            if self.n is None or not (1 <= self.n < self.m <= dim):
                raise ValidationError(f"invalid label {self} for dimension {dim}: need 1 <= n < m <= N")
        else:
            raise ValidationError(f"unknown label kind {self.kind!r}")


# A prepared state is identified by the basis label it isolates.
PreparedId = Label


def labels(dim: int) -> list[Label]:
    """All N^2 labels in canonical order: diagonals, then x, then y (m > n, row-major)."""
    if dim < 2:
        raise ValidationError(f"dimension must be >= 2, got {dim}")
    pairs = [(m, n) for m in range(2, dim + 1) for n in range(1, m)]
    return (
        [Label("diag", m) for m in range(1, dim + 1)]
        + [Label("x", m, n) for m, n in pairs]
        + [Label("y", m, n) for m, n in pairs]
    )


def basis_operator(label: Label, dim: int) -> np.ndarray:
    label.validate(dim)
    op = np.zeros((dim, dim), dtype=np.complex128)
    m = label.m - 1
    if label.kind == "diag":
        op[m, m] = 1.0
        return op
    n = label.n - 1
    if label.kind == "x":
        op[m, n] = op[n, m] = 0.5
    else:
        op[m, n] = 0.5j
        op[n, m] = -0.5j
    return op


def basis_operators(dim: int) -> list[tuple[Label, np.ndarray]]:
    return [(lab, basis_operator(lab, dim)) for lab in labels(dim)]


def prepared_state(label: PreparedId, dim: int) -> np.ndarray:
    label.validate(dim)
    psi = np.zeros(dim, dtype=np.complex128)
    if label.kind == "diag":
        psi[label.m - 1] = 1.0
        return psi
    psi[label.m - 1] = 1.0 / np.sqrt(2.0)
    psi[label.n - 1] = (1.0 if label.kind == "x" else 1.0j) / np.sqrt(2.0)
    return psi


def prepared_states(dim: int) -> list[tuple[PreparedId, np.ndarray]]:
    """The N^2 pure preparations whose dynamics determine the channel."""
    return [(lab, prepared_state(lab, dim)) for lab in labels(dim)]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DynamicsDataset:
    """Time series of N x N matrices, one series per label, on a shared grid.

    ``flavor == "prepared"``: each series is the measured/simulated state of a
    prepared initial state and must be a valid density matrix at every time
    (within ``tol``).  ``flavor == "basis"``: each series is the evolved basis
    operator; Hermitian, with trace 1 for diagonal labels and 0 otherwise.
    """

    flavor: Flavor
    dim: int
    times: np.ndarray
    series: Mapping[Label, np.ndarray]
    metadata: Mapping[str, str] = field(default_factory=dict)
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.flavor not in ("prepared", "basis"):
            raise ValidationError(f"unknown dataset flavor {self.flavor!r}")
        times = np.array(self.times, dtype=np.float64, copy=True)
        if times.ndim != 1 or times.size < 1:
            raise ValidationError("times must be a non-empty 1-d sequence")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        series = {}
        for lab, mats in self.series.items():
            lab = Label(*lab)
            lab.validate(self.dim)
            if lab in series:
                raise ValidationError(f"duplicate series label {lab}")
            mats = _freeze(mats)
            if mats.shape != (times.size, self.dim, self.dim):
                raise ValidationError(
                    f"series {lab} has shape {mats.shape}, expected {(times.size, self.dim, self.dim)}"
                )
            series[lab] = mats
        # canonical label order, whatever order the caller supplied
        rank = {lab: i for i, lab in enumerate(labels(self.dim))}
        series = dict(sorted(series.items(), key=lambda item: rank[item[0]]))
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "metadata", dict(self.metadata))
        self._validate_values()

    def _validate_values(self) -> None:
        for lab, mats in self.series.items():
            for k, mat in enumerate(mats):
                where = f"series {lab} at time index {k}"
                if self.flavor == "prepared":
                    check_density_matrix(mat, self.tol, name=where)
                    continue
                herm = float(np.max(np.abs(mat - mat.conj().T)))
                if herm > self.tol:
                    raise ValidationError(f"{where} is not Hermitian: {herm:.3e} > {self.tol:.1e}")
                want = 1.0 if lab.kind == "diag" else 0.0
                tr = np.trace(mat)
                tol = max(self.tol, BASIS_TRACE_TOL)
                if abs(tr - want) > tol:
                    raise ValidationError(f"{where} has trace {tr.real:.12g}, expected {want} within {tol:.1e}")

    @property
    def n_times(self) -> int:
        return self.times.size

    def missing(self) -> list[Label]:
        return [lab for lab in labels(self.dim) if lab not in self.series]

    def stack(self) -> np.ndarray:
        """Series as one read-only array ``(N^2, T, N, N)`` in canonical label order."""
        return self._stack

    @cached_property
    def _stack(self) -> np.ndarray:
        absent = self.missing()
        if absent:
            raise ValidationError("dataset is missing series " + ", ".join(map(str, absent)))
        return _freeze(np.stack([self.series[lab] for lab in labels(self.dim)]))

    def __eq__(self, other):
        if not isinstance(other, DynamicsDataset):
            return NotImplemented
        return (
            self.flavor == other.flavor
            and self.dim == other.dim
            and self.tol == other.tol
            and np.array_equal(self.times, other.times)
            and self.metadata == other.metadata
            and list(self.series) == list(other.series)
            and all(np.array_equal(self.series[k], other.series[k]) for k in self.series)
        )

    __hash__ = None


def recover_basis_dynamics(prepared: DynamicsDataset) -> DynamicsDataset:
    """Invert the preparation relations to obtain the evolved basis operators."""
    if prepared.flavor != "prepared":
        raise ValidationError(f"expected a prepared dataset, got flavor {prepared.flavor!r}")
    absent = prepared.missing()
    if absent:
        raise ValidationError("prepared dataset is missing " + ", ".join(map(str, absent)))
    s = prepared.series
    out = {}
    for lab in labels(prepared.dim):
        if lab.kind == "diag":
            out[lab] = s[lab]
            continue
        mean_diag = 0.5 * (s[Label("diag", lab.m)] + s[Label("diag", lab.n)])
        if lab.kind == "x":
            out[lab] = s[lab] - mean_diag
        else:
            out[lab] = mean_diag - s[lab]
    meta = dict(prepared.metadata)
    meta["derived_from"] = "prepared"
    return DynamicsDataset("basis", prepared.dim, prepared.times, out, meta, prepared.tol)


@dataclass(frozen=True)
class CoefficientVector:
    """Real expansion coefficients of a matrix in the label basis.

    ``ax`` and ``ay`` are N x N tables with entries only below the diagonal,
    indexed ``[m-1, n-1]`` for ``m > n``.
    """

    a0: np.ndarray
    ax: np.ndarray
    ay: np.ndarray

    @property
    def dim(self) -> int:
        return self.a0.size

    def flat(self) -> np.ndarray:
        """Coefficients in canonical label order, matching :meth:`DynamicsDataset.stack`."""
        rows, cols = np.tril_indices(self.dim, -1)
        # tril_indices is row-major (m slow, n fast), the same as labels()
        return np.concatenate([self.a0, self.ax[rows, cols], self.ay[rows, cols]])

    @classmethod
    def from_flat(cls, v: np.ndarray, dim: int) -> "CoefficientVector":
        v = np.asarray(v, dtype=np.float64)
        k = dim * (dim - 1) // 2
        if v.shape != (dim * dim,):
            raise ValidationError(f"expected {dim * dim} coefficients, got {v.shape}")
        rows, cols = np.tril_indices(dim, -1)
        ax = np.zeros((dim, dim))
        ay = np.zeros((dim, dim))
        ax[rows, cols] = v[dim : dim + k]
        ay[rows, cols] = v[dim + k :]
        return cls(v[:dim].copy(), ax, ay)

    def recompose(self) -> np.ndarray:
        """Sum of coefficient times basis operator at t = 0."""
        lower = 0.5 * (self.ax + 1j * self.ay)
        return np.diag(self.a0).astype(np.complex128) + lower + lower.conj().T


def coefficient_vectors(rho: np.ndarray) -> np.ndarray:
    """Flat coefficients of one or many matrices, shape ``(..., N^2)``.

    No validation; used on hot paths where inputs are known to be valid.
    """
    dim = rho.shape[-1]
    rows, cols = np.tril_indices(dim, -1)
    low = rho[..., rows, cols]
    diag = np.diagonal(rho, axis1=-2, axis2=-1).real
    return np.concatenate([diag, 2.0 * low.real, 2.0 * low.imag], axis=-1)


def decompose(rho, tol: float = DEFAULT_TOL) -> CoefficientVector:
    """Expansion coefficients of a density matrix.

    ``a0[m] = rho[m, m]``, ``ax[m, n] = 2 Re rho[m, n]``,
    ``ay[m, n] = 2 Im rho[m, n]`` for ``m > n``.
    """
    rho = check_density_matrix(rho, tol)
    return CoefficientVector.from_flat(coefficient_vectors(rho), rho.shape[0])


def combine(coeffs: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Linear combination of stacked basis series.

    ``coeffs`` has shape ``(..., N^2)``, ``stack`` shape ``(N^2, T, N, N)``;
    returns ``(..., T, N, N)``.
    """
    k = stack.shape[0]
    flat = stack.reshape(k, -1)
    out = np.asarray(coeffs, dtype=np.float64) @ flat
    return out.reshape(coeffs.shape[:-1] + stack.shape[1:])


def reconstruct_dynamics(
    coeffs: CoefficientVector, basis: DynamicsDataset, *, psd_projection: bool = False
) -> np.ndarray:
    """Evolve the state with the given coefficients using the basis dynamics.

    Returns an array ``(T, N, N)``.  With ``psd_projection`` each snapshot is
    clipped onto the PSD cone and renormalised; intended only for noisy lab
    data and off by default.
    """
    if basis.flavor != "basis":
        raise ValidationError(f"expected a basis dataset, got flavor {basis.flavor!r}")
    if coeffs.dim != basis.dim:
        raise ValidationError(f"coefficient dimension {coeffs.dim} does not match dataset dimension {basis.dim}")
    rhos = combine(coeffs.flat(), basis.stack())
    if psd_projection:
        rhos = np.stack([project_psd(r) for r in rhos])
    return rhos


def evolve_states(rhos0: Iterable[np.ndarray], basis: DynamicsDataset) -> np.ndarray:
    """Reconstructed dynamics of several initial states at once, ``(K, T, N, N)``."""
    c = np.stack([coefficient_vectors(np.asarray(r, dtype=np.complex128)) for r in rhos0])
    return combine(c, basis.stack())

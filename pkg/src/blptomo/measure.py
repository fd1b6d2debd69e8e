"""Trace distance, the BLP non-Markovianity functional and its maximization.

The continuous measure integrates the growth rate of the trace distance over
the intervals where it is positive.  On sampled trajectories this becomes the
sum of positive increments between consecutive samples, which is exact
whenever the distance is monotone between samples.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import minimize

from .errors import OptimizerError, ValidationError
from .qmath import DEFAULT_TOL, check_density_matrix
from .tomography import DynamicsDataset, Label, coefficient_vectors, combine, prepared_states

log = logging.getLogger(__name__)

Mode = Literal["orthogonal-pure", "free-pure", "general-density"]
MODES = ("orthogonal-pure", "free-pure", "general-density")
METHODS = ("nelder-mead", "gradient")

# below this projected norm the second state is treated as parallel to the first
DEGENERATE_NORM = 1e-8


def trace_distance(rho1, rho2, tol: float = DEFAULT_TOL) -> float:
    """``0.5 * sum |eig(rho1 - rho2)|`` for two density matrices."""
    rho1 = check_density_matrix(rho1, tol, "rho1")
    rho2 = check_density_matrix(rho2, tol, "rho2")
    if rho1.shape != rho2.shape:
        raise ValidationError(f"dimension mismatch: {rho1.shape} vs {rho2.shape}")
    # canonical argument order makes the result bitwise symmetric
    if rho2.tobytes() < rho1.tobytes():
        rho1, rho2 = rho2, rho1
    return float(trace_distances(rho1, rho2))


def trace_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched trace distance over leading axes; no validation."""
    d = a - b
    d = 0.5 * (d + np.swapaxes(d, -1, -2).conj())
    return 0.5 * np.abs(np.linalg.eigvalsh(d)).sum(axis=-1)


@dataclass(frozen=True)
class DistanceTrajectory:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise ValidationError(f"times {t.shape} and values {v.shape} must be equal-length 1-d arrays")
        if v.size and (v.min() < -1e-12 or v.max() > 1 + 1e-12):
            raise ValidationError(f"trace distances must lie in [0, 1], got range [{v.min()}, {v.max()}]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, DistanceTrajectory):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.values, other.values)

    __hash__ = None


def distance_trajectory(dyn1, dyn2, times) -> DistanceTrajectory:
    dyn1 = np.asarray(dyn1, dtype=np.complex128)
    dyn2 = np.asarray(dyn2, dtype=np.complex128)
    times = np.asarray(times, dtype=np.float64)
    if dyn1.shape != dyn2.shape:
        raise ValidationError(f"trajectory shapes differ: {dyn1.shape} vs {dyn2.shape}")
    if dyn1.shape[0] != times.size:
        raise ValidationError(f"{dyn1.shape[0]} states but {times.size} times")
    return DistanceTrajectory(times, trace_distances(dyn1, dyn2))


def positive_increments(values: np.ndarray) -> float:
    return float(np.sum(np.clip(np.diff(values, axis=-1), 0.0, None), axis=-1))


def blp_functional(traj: DistanceTrajectory | np.ndarray) -> float:
    """Sum of the positive increments of a sampled trace-distance curve."""
    values = traj.values if isinstance(traj, DistanceTrajectory) else np.asarray(traj, dtype=np.float64)
    if values.size < 2:
        raise ValidationError("the BLP functional needs at least two time points")
    return positive_increments(values)


# ---------------------------------------------------------------------------
# pair parametrization


def raw_size(mode: Mode, dim: int) -> int:
    """Length of each raw real vector: 2N for pure modes, 2N^2 for mixed states."""
    return 2 * dim if mode != "general-density" else 2 * dim * dim


def _complex(raw: np.ndarray) -> np.ndarray:
    return raw[0::2] + 1j * raw[1::2]


def pure_pair(raw1: np.ndarray, raw2: np.ndarray, mode: Mode) -> tuple[np.ndarray, np.ndarray] | None:
    """Normalized state vectors for the pure modes, or ``None`` if degenerate."""
    psi1 = _complex(raw1)
    n1 = np.linalg.norm(psi1)
    if n1 < DEGENERATE_NORM:
        return None
    psi1 = psi1 / n1
    psi2 = _complex(raw2)
    if mode == "orthogonal-pure":
        psi2 = psi2 - np.vdot(psi1, psi2) * psi1
    elif mode != "free-pure":
        raise ValidationError(f"mode {mode!r} does not describe pure states")
    n2 = np.linalg.norm(psi2)
    if n2 < DEGENERATE_NORM:
        return None
    psi2 = psi2 / n2
    if mode == "orthogonal-pure":
        # a second projection removes the roundoff left by the first
        psi2 = psi2 - np.vdot(psi1, psi2) * psi1
        psi2 /= np.linalg.norm(psi2)
    return psi1, psi2


def map_pair(raw1: np.ndarray, raw2: np.ndarray, mode: Mode, dim: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Map two raw real vectors to a pair of density matrices.

    Pure modes read each raw vector as interleaved (re, im) amplitudes;
    ``general-density`` reads it as an N x N complex matrix ``A`` and uses
    ``A A^dag / tr``.  Returns ``None`` when the parametrization is
    degenerate (zero vector, or the second state parallel to the first in
    orthogonal mode).
    """
    if mode == "general-density":
        mats = []
        for raw in (raw1, raw2):
            a = _complex(raw).reshape(dim, dim)
            rho = a @ a.conj().T
            tr = np.trace(rho).real
            if tr < DEGENERATE_NORM:
                return None
            mats.append(rho / tr)
        return mats[0], mats[1]
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}")
    pair = pure_pair(raw1, raw2, mode)
    if pair is None:
        return None
    psi1, psi2 = pair
    return np.outer(psi1, psi1.conj()), np.outer(psi2, psi2.conj())


@dataclass(frozen=True)
class PairParams:
    raw1: np.ndarray
    raw2: np.ndarray
    mode: Mode = "orthogonal-pure"

    def __eq__(self, other):
        if not isinstance(other, PairParams):
            return NotImplemented
        return (
            self.mode == other.mode
            and np.array_equal(self.raw1, other.raw1)
            and np.array_equal(self.raw2, other.raw2)
        )

    __hash__ = None


@dataclass(frozen=True)
class BLPResult:
    value: float
    pair: PairParams
    rho1: np.ndarray
    rho2: np.ndarray
    trajectory: DistanceTrajectory
    diagnostics: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, BLPResult):
            return NotImplemented
        return (
            self.value == other.value
            and self.pair == other.pair
            and np.array_equal(self.rho1, other.rho1)
            and np.array_equal(self.rho2, other.rho2)
            and self.trajectory == other.trajectory
            and self.diagnostics == other.diagnostics
        )

    __hash__ = None


def _check_basis(basis: DynamicsDataset) -> None:
    if basis.flavor != "basis":
        raise ValidationError(f"expected a basis dataset, got flavor {basis.flavor!r}")
    if basis.n_times < 2:
        raise ValidationError("the BLP functional needs at least two time points")


class Objective:
    """Non-Markovianity of a raw parameter vector, evaluated on a basis dataset.

    The evolved difference ``rho1(t) - rho2(t)`` is built in one pass from the
    coefficient difference, which equals reconstructing both states separately
    because the dynamics is linear.
    """

    def __init__(self, basis: DynamicsDataset, mode: Mode):
        _check_basis(basis)
        self.basis = basis
        self.mode = mode
        self.dim = basis.dim
        self.stack = basis.stack()
        k, t, n, _ = self.stack.shape
        # complex entries as interleaved real pairs so a real matmul suffices
        self._flat = np.ascontiguousarray(self.stack.reshape(k, -1)).view(np.float64)
        self._shape = (t, n, n)
        self.size = raw_size(mode, self.dim)
        self.evaluations = 0

    def states(self, x: np.ndarray):
        return map_pair(x[: self.size], x[self.size :], self.mode, self.dim)

    def difference(self, rho1: np.ndarray, rho2: np.ndarray) -> np.ndarray:
        c = coefficient_vectors(rho1) - coefficient_vectors(rho2)
        return (c @ self._flat).view(np.complex128).reshape(self._shape)

    def distances(self, rho1: np.ndarray, rho2: np.ndarray) -> np.ndarray:
        delta = self.difference(rho1, rho2)
        return 0.5 * np.abs(np.linalg.eigvalsh(delta)).sum(axis=-1)

    def __call__(self, x: np.ndarray) -> float:
        self.evaluations += 1
        pair = self.states(x)
        if pair is None:
            return 0.0
        return positive_increments(self.distances(*pair))


@dataclass(frozen=True)
class OptimizerOptions:
    mode: Mode = "orthogonal-pure"
    restarts: int = 64
    max_iter: int = 2000
    tol: float = 1e-6
    seed: int = 0
    method: Literal["nelder-mead", "gradient"] = "nelder-mead"
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.restarts < 1 or self.max_iter < 1 or self.tol <= 0:
            raise ValidationError("restarts and max_iter must be positive and tol > 0")


def _nelder_mead(f, x0: np.ndarray, opts: OptimizerOptions) -> tuple[np.ndarray, float, int, bool]:
    # Re-seeding the simplex at the incumbent guards against premature collapse.
    x, best, iters, converged = x0, f(x0), 0, False
    while iters < opts.max_iter:
        res = minimize(
            lambda z: -f(z),
            x,
            method="Nelder-Mead",
            options={
                "maxiter": opts.max_iter - iters,
                "xatol": np.inf,
                "fatol": opts.tol,
                "adaptive": x.size > 8,
            },
        )
        iters += max(int(res.nit), 1)
        gain = -res.fun - best
        if gain > 0:
            x, best = res.x, -res.fun
        if gain <= opts.tol:
            converged = True
            break
    return x, best, iters, converged


def _gradient_ascent(f, x0: np.ndarray, opts: OptimizerOptions) -> tuple[np.ndarray, float, int, bool]:
    h = opts.fd_step
    x, fx = x0.copy(), f(x0)
    step, stalls = 1.0, 0
    eye = np.eye(x.size) * h
    for it in range(1, opts.max_iter + 1):
        g = np.array([(f(x + e) - f(x - e)) / (2 * h) for e in eye])
        gnorm = np.linalg.norm(g)
        if gnorm == 0.0:
            return x, fx, it, True
        direction = g / gnorm
        while step > 1e-12:
            trial = x + step * direction
            ft = f(trial)
            if ft > fx:
                break
            step *= 0.5
        else:
            return x, fx, it, True
        gain = ft - fx
        x, fx = trial, ft
        step *= 2.0
        stalls = stalls + 1 if gain <= opts.tol else 0
        if stalls >= 3:
            return x, fx, it, True
    return x, fx, opts.max_iter, False


def _initial_point(rng: np.random.Generator, objective: Objective) -> np.ndarray | None:
    x = rng.normal(size=2 * objective.size)
    if objective.states(x) is not None:
        return x
    # one perturbed retry, then give up on this restart
    x = x + rng.normal(size=x.size)
    return x if objective.states(x) is not None else None


def prepared_pair_floor(basis: DynamicsDataset, chunk: int = 512) -> tuple[float, tuple[int, int]]:
    """Best functional value over all pairs of the N^2 preparation states.

    Returns the value and the (i, j) indices into :func:`prepared_states`.
    """
    _check_basis(basis)
    psis = np.array([psi for _, psi in prepared_states(basis.dim)])
    rhos = np.einsum("ki,kj->kij", psis, psis.conj())
    dyn = combine(coefficient_vectors(rhos), basis.stack())
    ii, jj = np.triu_indices(len(psis), 1)
    best, arg = -1.0, (0, 1)
    for start in range(0, ii.size, chunk):
        i, j = ii[start : start + chunk], jj[start : start + chunk]
        vals = np.clip(np.diff(trace_distances(dyn[i], dyn[j]), axis=-1), 0.0, None).sum(axis=-1)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, arg = float(vals[k]), (int(i[k]), int(j[k]))
    return best, arg


def _result(objective: Objective, x: np.ndarray, mode: Mode, diagnostics: dict) -> BLPResult:
    size = objective.size
    rho1, rho2 = objective.states(x)
    dyn = combine(coefficient_vectors(np.stack([rho1, rho2])), objective.stack)
    traj = distance_trajectory(dyn[0], dyn[1], objective.basis.times)
    return BLPResult(
        value=blp_functional(traj),
        pair=PairParams(np.array(x[:size]), np.array(x[size:]), mode),
        rho1=rho1,
        rho2=rho2,
        trajectory=traj,
        diagnostics=diagnostics,
    )


def optimize_pair(basis: DynamicsDataset, options: OptimizerOptions | None = None) -> BLPResult:
    """Maximize the non-Markovianity over initial pairs with multi-start local search.

    Each restart draws its starting point from an independent child of
    ``SeedSequence(seed)``, so the result for ``R`` restarts is the best of
    the first ``R`` restarts of any longer run.  Ties go to the lowest
    restart index.  The value is never below the best pair of preparation
    states, which is evaluated as a floor.
    """
    opts = options or OptimizerOptions()
    objective = Objective(basis, opts.mode)
    local = _nelder_mead if opts.method == "nelder-mead" else _gradient_ascent
    children = np.random.SeedSequence(opts.seed).spawn(opts.restarts)

    best_x, best_val, best_idx = None, -np.inf, -1
    runs, abandoned = [], []
    for idx, child in enumerate(children):
        x0 = _initial_point(np.random.default_rng(child), objective)
        if x0 is None:
            abandoned.append(idx)
            log.warning("restart %d abandoned: degenerate starting pair", idx)
            continue
        x, val, iters, converged = local(objective, x0, opts)
        runs.append({"restart": idx, "value": val, "iterations": iters, "converged": converged})
        log.debug("restart %d: value %.10f after %d iterations", idx, val, iters)
        if val > best_val:
            best_x, best_val, best_idx = x, val, idx
    if best_x is None:
        raise OptimizerError(f"all {opts.restarts} restarts were abandoned (degenerate parametrization)")

    floor, (i, j) = prepared_pair_floor(basis)
    diagnostics = {
        "method": opts.method,
        "mode": opts.mode,
        "seed": opts.seed,
        "restarts": opts.restarts,
        "max_iter": opts.max_iter,
        "tol": opts.tol,
        "best_restart": best_idx,
        "iterations": int(sum(r["iterations"] for r in runs)),
        "evaluations": objective.evaluations,
        "converged": [r["converged"] for r in runs],
        "restart_values": [r["value"] for r in runs],
        "abandoned": abandoned,
        "prepared_floor": floor,
        "floor_used": False,
    }
    if floor > best_val:
        # the optimizer got stuck below a preparation pair; report that pair
        psis = [psi for _, psi in prepared_states(basis.dim)]
        fp = Objective(basis, "free-pure")
        x = np.concatenate([_interleave(psis[i]), _interleave(psis[j])])
        diagnostics["floor_used"] = True
        return _result(fp, x, "free-pure", diagnostics)
    return _result(objective, best_x, opts.mode, diagnostics)


def _interleave(z: np.ndarray) -> np.ndarray:
    out = np.empty(2 * z.size)
    out[0::2], out[1::2] = z.real, z.imag
    return out


def bloch_grid(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """Polar and azimuthal grids; both half-open so the equator is hit for even ``n_theta``."""
    theta = np.pi * np.arange(n_theta) / n_theta
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    return theta, phi


def grid_scan_qubit(basis: DynamicsDataset, resolution: tuple[int, int] = (200, 400)) -> BLPResult:
    """Exhaustive scan over antipodal pure qubit pairs on a Bloch-angle grid.

    Every orthogonal pure pair is ``(I +- n.sigma)/2`` for a unit vector ``n``;
    polar angle ``pi`` duplicates the swapped ``0`` pair and is skipped.  The
    evolved difference is linear in ``n`` and its trace distance is taken in
    closed form from the 2 x 2 eigenvalues, independently of the optimizer.
    """
    _check_basis(basis)
    if basis.dim != 2:
        raise ValidationError(f"grid scan is only defined for qubits, got dimension {basis.dim}")
    n_theta, n_phi = resolution
    s = basis.series
    # evolved Pauli operators: sigma_x = 2 x(2,1), sigma_y = 2 y(2,1), sigma_z = diag(1) - diag(2)
    sig = np.stack(
        [2 * s[Label("x", 2, 1)], 2 * s[Label("y", 2, 1)], s[Label("diag", 1)] - s[Label("diag", 2)]]
    )
    theta, phi = bloch_grid(n_theta, n_phi)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    n = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    a = np.einsum("...c,ct->...t", n, sig[:, :, 0, 0].real)
    d = np.einsum("...c,ct->...t", n, sig[:, :, 1, 1].real)
    b = np.einsum("...c,ct->...t", n, sig[:, :, 1, 0])
    mean = 0.5 * (a + d)
    radius = np.sqrt(0.25 * (a - d) ** 2 + np.abs(b) ** 2)
    dist = 0.5 * (np.abs(mean + radius) + np.abs(mean - radius))
    values = np.clip(np.diff(dist, axis=-1), 0.0, None).sum(axis=-1)
    k = int(np.argmax(values))  # first maximum in row-major order
    it, ip = np.unravel_index(k, values.shape)
    t, p = theta[it], phi[ip]
    psi1 = np.array([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)])
    psi2 = np.array([-np.exp(-1j * p) * np.sin(t / 2), np.cos(t / 2)])
    x = np.concatenate([_interleave(psi1), _interleave(psi2)])
    diagnostics = {
        "method": "grid",
        "resolution": [int(n_theta), int(n_phi)],
        "theta": float(t),
        "phi": float(p),
        "grid_value": float(values[it, ip]),
    }
    return _result(Objective(basis, "orthogonal-pure"), x, "orthogonal-pure", diagnostics)


"""Open discrete-time quantum walk on a periodic 1-d lattice.

The walker lives on sites ``x = -X..X`` with a two-level coin (``L``/``R``,
identified with the polarizations ``H``/``V``).  The environment is a pair of
frequency modes ``w1 = Omega - omega0`` and ``w2 = Omega + omega0`` starting in
an equal-weight superposition.  One step is

    U_step = U_dt . (T (x) 1_env) . (C (x) 1_env)

with the Hadamard coin ``C``, the coin-conditioned shift ``T`` and the
polarization/frequency phase ``U_dt = sum_p,w exp(i n_p w dt_p) |p><p| (x) |w><w|``.

Index layout (0-based): system index ``s = (x + X) * 2 + d`` with ``d = 0``
for ``L`` and ``d = 1`` for ``R``; joint index ``s * 2 + f`` for frequency
``f`` (system slowest).  External labels add one to ``s``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Literal

import numpy as np

from .errors import ValidationError
from .qmath import check_density_matrix, partial_trace_env
from .tomography import DynamicsDataset, prepared_states

SPEED_OF_LIGHT = 299_792_458.0
N_ENV = 2

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


@dataclass(frozen=True)
class QWConfig:
    """Parameters of the open walk. Defaults are the published values.

    ``phase_convention`` selects the exponent of the polarization phase:
    ``"literal"`` uses ``n_p * w * dt_p``, ``"omega-dt"`` uses ``w * dt_p``.
    ``coin_map`` fixes which polarization the ``L`` coin state carries.
    ``thickness`` (m) is recorded for reference only; ``dt_h``/``dt_v`` are
    used as given and never derived from it.
    """

    X: int = 0
    steps: int = 20
    omega0: float = 7.2e12
    Omega: float = 2.4166e15
    n_h: float = 1.554
    n_v: float = 1.545
    dt_h: float = 1.036e-11
    dt_v: float = 1.030e-11
    boundary: Literal["periodic"] = "periodic"
    env_weights: tuple[float, float] = (0.5, 0.5)
    phase_convention: Literal["literal", "omega-dt"] = "literal"
    coin_map: Literal["L=H", "L=V"] = "L=H"
    thickness: float = 0.5e-3

    def __post_init__(self):
        object.__setattr__(self, "env_weights", tuple(float(w) for w in self.env_weights))
        if not isinstance(self.X, (int, np.integer)) or self.X < 0:
            raise ValidationError(f"X must be a nonnegative integer, got {self.X!r}")
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps!r}")
        if self.dt_h < 0 or self.dt_v < 0:
            raise ValidationError("dt_h and dt_v must be nonnegative")
        if self.boundary != "periodic":
            raise ValidationError(f"unsupported boundary {self.boundary!r}; only 'periodic' is implemented")
        if self.phase_convention not in ("literal", "omega-dt"):
            raise ValidationError(f"unknown phase convention {self.phase_convention!r}")
        if self.coin_map not in ("L=H", "L=V"):
            raise ValidationError(f"unknown coin map {self.coin_map!r}")
        w = self.env_weights
        if len(w) != 2 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
            raise ValidationError(f"env_weights must be two nonnegative numbers summing to 1, got {w}")

    @property
    def sites(self) -> int:
        return 2 * self.X + 1

    @property
    def dim(self) -> int:
        return 2 * self.sites

    @property
    def frequencies(self) -> tuple[float, float]:
        return (self.Omega - self.omega0, self.Omega + self.omega0)

    def replace(self, **changes) -> "QWConfig":
        d = asdict(self)
        d.update(changes)
        return QWConfig(**d)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def shift_operator(sites: int) -> np.ndarray:
    """Coin-conditioned periodic shift on ``lattice (x) coin``: L moves to j-1, R to j+1."""
    t = np.zeros((2 * sites, 2 * sites), dtype=np.complex128)
    for j in range(sites):
        t[((j - 1) % sites) * 2 + 0, j * 2 + 0] = 1.0
        t[((j + 1) % sites) * 2 + 1, j * 2 + 1] = 1.0
    return t


def coupling_phases(config: QWConfig) -> np.ndarray:
    """Diagonal of U_dt restricted to ``coin (x) env``: entry ``[d * 2 + f]``."""
    pol = {"H": (config.n_h, config.dt_h), "V": (config.n_v, config.dt_v)}
    order = ("H", "V") if config.coin_map == "L=H" else ("V", "H")
    phases = []
    for p in order:
        n_p, dt_p = pol[p]
        scale = n_p if config.phase_convention == "literal" else 1.0
        for w in config.frequencies:
            phases.append(np.exp(1j * scale * w * dt_p))
    return np.array(phases)


def build_step_operator(config: QWConfig) -> np.ndarray:
    """Joint one-step unitary acting on ``lattice (x) coin (x) frequency``."""
    s = config.sites
    walk = shift_operator(s) @ np.kron(np.eye(s), HADAMARD)
    u_dt = np.tile(coupling_phases(config), s)
    return u_dt[:, None] * np.kron(walk, np.eye(N_ENV))


def environment_state(config: QWConfig) -> np.ndarray:
    return np.sqrt(np.array(config.env_weights, dtype=np.complex128))


def evolve_reduced(config: QWConfig, rho0, *, step_operator: np.ndarray | None = None) -> np.ndarray:
    """Reduced system states at steps ``0..steps``, shape ``(steps + 1, N, N)``.

    The joint state starts as ``rho0 (x) |e><e|`` and is propagated with the
    step unitary; the environment is traced out after every step.
    """
    n = config.dim
    rho0 = check_density_matrix(rho0)
    if rho0.shape != (n, n):
        raise ValidationError(f"initial state has dimension {rho0.shape[0]}, walk with X={config.X} needs {n}")
    u = build_step_operator(config) if step_operator is None else step_operator
    e = environment_state(config)
    joint = np.kron(rho0, np.outer(e, e.conj()))
    out = np.empty((config.steps + 1, n, n), dtype=np.complex128)
    out[0] = partial_trace_env(joint, n, N_ENV)
    u_dag = u.conj().T
    for k in range(1, config.steps + 1):
        joint = u @ joint @ u_dag
        out[k] = partial_trace_env(joint, n, N_ENV)
    return out


def config_metadata(config: QWConfig) -> dict[str, str]:
    """Provenance strings for a simulated dataset; the config is embedded as JSON."""
    doc = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(config).items()}
    return {
        "source": "openqw-sim",
        "time_unit": "step",
        "coin_polarization": config.coin_map,
        "phase_convention": config.phase_convention,
        "qwconfig": json.dumps(doc, sort_keys=True),
    }


def config_from_metadata(metadata) -> QWConfig | None:
    raw = metadata.get("qwconfig")
    if raw is None:
        return None
    doc = json.loads(raw)
    doc["env_weights"] = tuple(doc["env_weights"])
    return QWConfig(**doc)


def generate_prepared_dataset(config: QWConfig) -> DynamicsDataset:
    """Simulate every preparation state and collect a prepared dataset."""
    u = build_step_operator(config)
    series = {
        lab: evolve_reduced(config, np.outer(psi, psi.conj()), step_operator=u)
        for lab, psi in prepared_states(config.dim)
    }
    times = np.arange(config.steps + 1, dtype=np.float64)
    return DynamicsDataset("prepared", config.dim, times, series, config_metadata(config))


def dephasing_factors(delta_phase_per_step: float, steps: int) -> np.ndarray:
    return np.cos(np.arange(steps + 1) * delta_phase_per_step)


def synthetic_dephasing_dataset(delta_phase_per_step: float, steps: int) -> tuple[DynamicsDataset, float]:
    """Qubit pure-dephasing channel with coherence factor ``cos(k * delta)`` at step k.

    Populations are frozen and off-diagonal elements are scaled by the factor.
    The channel is the equal mixture of the rotations ``exp(+-i k delta Z / 2)``,
    so it is completely positive.  Returns the prepared dataset and the exact
    non-Markovianity ``sum_k max(0, |f(k+1)| - |f(k)|)``.
    """
    if steps < 2:
        raise ValidationError(f"steps must be >= 2, got {steps}")
    f = dephasing_factors(delta_phase_per_step, steps)
    series = {}
    for lab, psi in prepared_states(2):
        rho = np.outer(psi, psi.conj())
        mats = np.repeat(rho[None], steps + 1, axis=0)
        mats[:, 0, 1] *= f
        mats[:, 1, 0] *= f
        series[lab] = mats
    times = np.arange(steps + 1, dtype=np.float64)
    meta = {
        "time_unit": "step",
        "source": "synthetic-dephasing",
        "delta_phase_per_step": repr(float(delta_phase_per_step)),
    }
    value = float(np.sum(np.clip(np.diff(np.abs(f)), 0.0, None)))
    return DynamicsDataset("prepared", 2, times, series, meta), value

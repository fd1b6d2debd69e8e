import numpy as np
import pytest

from blptomo.qmath import random_unitary
from blptomo.tomography import DynamicsDataset, prepared_states


def random_kraus(n, rng, n_env=3):
    """Kraus operators of a random CPTP map via a Stinespring isometry."""
    u = random_unitary(n * n_env, rng)
    # isometry |s> -> U (|s> (x) |0_env>), environment fast index
    v = u[:, ::n_env].reshape(n, n_env, n)
    return [v[:, e, :] for e in range(n_env)]


def apply_kraus(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


class RandomProcess:
    """Independent random channel per time point; t=0 is the identity."""

    def __init__(self, n, n_times, seed):
        rng = np.random.default_rng(seed)
        self.n = n
        self.times = np.arange(n_times, dtype=float)
        self.kraus = [[np.eye(n)]] + [random_kraus(n, rng) for _ in range(n_times - 1)]

    def evolve(self, rho):
        return np.stack([apply_kraus(k, rho) for k in self.kraus])

    def prepared_dataset(self):
        series = {lab: self.evolve(np.outer(psi, psi.conj())) for lab, psi in prepared_states(self.n)}
        return DynamicsDataset("prepared", self.n, self.times, series, {"time_unit": "step"})


@pytest.fixture
def process3():
    return RandomProcess(3, 6, seed=7)

"""Problem definitions: RVE specs, strain fields, and the analytic benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def grid(num_points: int, length: float = 1.0) -> np.ndarray:
    """Uniform periodic grid x_k = k L / N (left endpoints)."""
    return length * np.arange(num_points) / num_points


@dataclass(frozen=True, eq=False)
class RveSpec:
    """A periodic representative volume element under antiplane shear.

    mu holds the sampled shear modulus on the uniform grid (size N in 1D,
    N x N in 2D, indexed [k0] or [k0, k1]); mu0 is the reference modulus of
    the fixed-point split.
    """

    dims: int
    size: int
    length: float
    mu: np.ndarray
    mu0: float

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        if not _is_power_of_two(self.size):
            raise ValueError("grid size must be a power of two")
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.size,) * self.dims:
            raise ValueError(f"mu shape {mu.shape} does not match grid")
        if not np.all(mu > 0):
            raise ValueError("shear modulus must be positive everywhere")
        if self.mu0 <= 0:
            raise ValueError("reference modulus must be positive")
        object.__setattr__(self, "mu", mu)

    @property
    def n_qubits_per_dim(self) -> int:
        return int(self.size).bit_length() - 1

    def points(self) -> np.ndarray:
        return grid(self.size, self.length)


def mu_midpoint(mu: np.ndarray) -> float:
    """Reference modulus (min mu + max mu)/2, the contraction-optimal split."""
    mu = np.asarray(mu, dtype=float)
    return float((mu.min() + mu.max()) / 2.0)


@dataclass(frozen=True, eq=False)
class StrainField:
    """Strain samples, one grid array per component, plus the scaling ledger.

    components has shape (dims, N) or (dims, N, N). ledger lists every scalar
    factor applied between physical values and raw amplitudes; a raw amplitude
    divided by the ledger product reconstructs the physical value.
    """

    components: np.ndarray
    ledger: tuple = ()

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=float)
        if arr.ndim not in (2, 3) or arr.shape[0] != arr.ndim - 1:
            raise ValueError(f"bad strain array shape {arr.shape}")
        object.__setattr__(self, "components", arr)

    @property
    def dims(self) -> int:
        return self.components.shape[0]

    @property
    def ledger_product(self) -> float:
        return float(np.prod(self.ledger)) if self.ledger else 1.0

    def mean(self) -> np.ndarray:
        return self.components.reshape(self.dims, -1).mean(axis=1)

    def reconstruct(self, amplitudes: np.ndarray) -> np.ndarray:
        return np.asarray(amplitudes) / self.ledger_product


@dataclass(frozen=True, eq=False)
class IterationPlan:
    """Fixed step budget and initial field for the fixed-point iteration."""

    steps: int
    gamma0: np.ndarray | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("at least one fixed-point step is required")

    def park_names(self) -> tuple[str, ...]:
        return tuple(f"park_{s}" for s in range(1, self.steps))


@dataclass(frozen=True)
class AnalyticBenchmark:
    """Coherent-profile benchmark with a closed-form strain solution.

    The modulus profile kappa(x) = mu_mat / (alpha + (1/alpha - alpha)
    sin^2(pi x / L)) gives mu = kappa in 1D and mu = kappa(x0) kappa(x1) in
    2D. Stress is mu gamma; equilibrium forces kappa(x_i) gamma_i(x_i) to be
    the constant C_i = 2 gammabar_i mu_mat alpha / (1 + alpha^2).
    """

    dims: int
    length: float
    mu_mat: float
    alpha: float
    gammabar: tuple

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if len(self.gammabar) != self.dims:
            raise ValueError("one macroscopic strain component per dimension")

    def kappa(self, x):
        x = np.asarray(x, dtype=float)
        a = self.alpha
        return self.mu_mat / (a + (1.0 / a - a) * np.sin(np.pi * x / self.length) ** 2)

    def mu(self, *xs):
        if len(xs) != self.dims:
            raise ValueError("one coordinate per dimension")
        out = self.kappa(xs[0])
        for x in xs[1:]:
            out = out * self.kappa(x)
        return out

    def stress_constant(self, component: int = 0) -> float:
        a = self.alpha
        return 2.0 * self.gammabar[component] * self.mu_mat * a / (1.0 + a * a)

    def strain(self, *xs) -> np.ndarray:
        if len(xs) != self.dims:
            raise ValueError("one coordinate per dimension")
        return np.array(
            [self.stress_constant(i) / self.kappa(xs[i]) for i in range(self.dims)]
        )

    def sigma_bar(self) -> np.ndarray:
        """Homogenised stress: sigma_i = C_i kappa(x_other); mean kappa = mu_mat."""
        scale = 1.0 if self.dims == 1 else self.mu_mat
        return np.array([self.stress_constant(i) * scale for i in range(self.dims)])

    def sample_mu(self, num_points: int) -> np.ndarray:
        x = grid(num_points, self.length)
        if self.dims == 1:
            return self.kappa(x)
        return np.outer(self.kappa(x), self.kappa(x))

    def sample_strain(self, num_points: int) -> np.ndarray:
        x = grid(num_points, self.length)
        if self.dims == 1:
            return self.strain(x)
        ones = np.ones(num_points)
        g0 = self.stress_constant(0) / self.kappa(x)
        g1 = self.stress_constant(1) / self.kappa(x)
        return np.stack([np.outer(g0, ones), np.outer(ones, g1)])


def bench_1d(num_points: int, gammabar: float = 0.01) -> tuple[RveSpec, AnalyticBenchmark]:
    bench = AnalyticBenchmark(dims=1, length=1.0, mu_mat=1.0, alpha=0.75, gammabar=(gammabar,))
    spec = RveSpec(dims=1, size=num_points, length=1.0, mu=bench.sample_mu(num_points), mu0=1.0)
    return spec, bench


def bench_2d(num_points: int, gammabar: tuple = (0.01, 0.01)) -> tuple[RveSpec, AnalyticBenchmark]:
    """2D separable benchmark; the solver reference is the contraction-optimal midpoint."""
    bench = AnalyticBenchmark(dims=2, length=1.0, mu_mat=1.0, alpha=0.75, gammabar=tuple(gammabar))
    mu = bench.sample_mu(num_points)
    spec = RveSpec(dims=2, size=num_points, length=1.0, mu=mu, mu0=mu_midpoint(mu))
    return spec, bench

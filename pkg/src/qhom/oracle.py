"""Classical reference solver: FFT fixed point, stress averages, equilibrium.

Ground truth for every circuit test. Transform convention: the forward DFT is
unnormalised with a +i kernel (f_hat[k] = sum_j f[j] exp(+2 pi i j k / N), i.e.
N^dims times numpy's ifftn) and the inverse carries 1/N^dims; the strain zero
mode is pinned to gammabar * N^dims each step.
"""

from __future__ import annotations

import numpy as np

from .problem import RveSpec, StrainField


def relabel(k, num_points: int):
    """Centre frequency labels: k for k < N/2, k - N above."""
    k = np.asarray(k)
    return np.where(k < num_points // 2, k, k - num_points)


def dft(values: np.ndarray) -> np.ndarray:
    n_total = values.size
    return np.fft.ifftn(values) * n_total


def idft(values: np.ndarray) -> np.ndarray:
    n_total = values.size
    return np.fft.fftn(values) / n_total


def _freqs(spec: RveSpec) -> list[np.ndarray]:
    r = relabel(np.arange(spec.size), spec.size).astype(float)
    if spec.dims == 1:
        return [r]
    ones = np.ones(spec.size)
    return [np.outer(r, ones), np.outer(ones, r)]


def _as_gammabar(spec: RveSpec, gammabar) -> np.ndarray:
    g = np.atleast_1d(np.asarray(gammabar, dtype=float))
    if g.size != spec.dims:
        raise ValueError("one macroscopic strain component per dimension")
    return g


def step(spec: RveSpec, gammabar, gamma: np.ndarray) -> np.ndarray:
    """One fixed-point update: polarisation, Green's operator, zero-mode pin."""
    gbar = _as_gammabar(spec, gammabar)
    gamma = np.asarray(gamma, dtype=float)
    tau = (spec.mu - spec.mu0) * gamma
    scale = spec.size**spec.dims
    if spec.dims == 1:
        tau_hat = dft(tau[0])
        gamma_hat = -(1.0 / spec.mu0) * tau_hat
        gamma_hat[0] = gbar[0] * scale
        return idft(gamma_hat).real[None, :]
    x0, x1 = _freqs(spec)
    den = x0**2 + x1**2
    den[0, 0] = 1.0
    t0 = dft(tau[0])
    t1 = dft(tau[1])
    dot = (x0 * t0 + x1 * t1) / den
    g0 = -(1.0 / spec.mu0) * x0 * dot
    g1 = -(1.0 / spec.mu0) * x1 * dot
    g0[0, 0] = gbar[0] * scale
    g1[0, 0] = gbar[1] * scale
    return np.stack([idft(g0).real, idft(g1).real])


def initial_field(spec: RveSpec, gammabar, gamma0: np.ndarray | None = None) -> np.ndarray:
    gbar = _as_gammabar(spec, gammabar)
    if gamma0 is None:
        shape = (spec.dims,) + (spec.size,) * spec.dims
        return np.broadcast_to(gbar.reshape((spec.dims,) + (1,) * spec.dims), shape).copy()
    gamma0 = np.asarray(gamma0, dtype=float)
    if gamma0.shape != (spec.dims,) + (spec.size,) * spec.dims:
        raise ValueError("initial strain field does not match the grid")
    return gamma0.copy()


def fft_fixed_point(spec: RveSpec, gammabar, steps: int, gamma0=None) -> list[StrainField]:
    """All iterates [gamma^0 .. gamma^S] of the fixed-point scheme."""
    gamma = initial_field(spec, gammabar, gamma0)
    out = [StrainField(gamma)]
    for _ in range(steps):
        gamma = step(spec, gammabar, gamma)
        out.append(StrainField(gamma))
    return out


def relative_error(gamma: np.ndarray, reference: np.ndarray) -> float:
    gamma = np.asarray(gamma, dtype=float)
    reference = np.asarray(reference, dtype=float)
    return float(np.linalg.norm(gamma - reference) / np.linalg.norm(reference))


def homogenised_stress(spec: RveSpec, strain) -> np.ndarray:
    """Grid average of mu times strain, one value per component."""
    gamma = strain.components if isinstance(strain, StrainField) else np.asarray(strain)
    if gamma.shape != (spec.dims,) + spec.mu.shape:
        raise ValueError(f"strain shape {gamma.shape} does not match the modulus grid")
    sigma = spec.mu * gamma
    return sigma.reshape(spec.dims, -1).mean(axis=1)


def equilibrium_residual(spec: RveSpec, strain) -> float:
    """Norm of the spectral divergence of sigma, relative to the norm of sigma."""
    gamma = strain.components if isinstance(strain, StrainField) else np.asarray(strain)
    sigma = spec.mu * gamma
    xi = [2.0 * np.pi / spec.length * f for f in _freqs(spec)]
    sigma_hat = [dft(sigma[i]) for i in range(spec.dims)]
    div = sum(1j * xi[i] * sigma_hat[i] for i in range(spec.dims))
    norm_sigma = np.sqrt(sum(float(np.vdot(s, s).real) for s in sigma_hat))
    return float(np.linalg.norm(div) / norm_sigma)


def pick_steps(spec: RveSpec, gammabar, target: float, max_steps: int = 64) -> int:
    """Smallest step count whose update moves the field by less than target."""
    gamma = initial_field(spec, gammabar)
    for s in range(1, max_steps + 1):
        advanced = step(spec, gammabar, gamma)
        move = np.linalg.norm(advanced - gamma) / np.linalg.norm(advanced)
        gamma = advanced
        if move <= target:
            return s
    return max_steps

"""Classical fixed-point solver against the closed-form benchmarks."""

from __future__ import annotations

import numpy as np
import pytest

from qhom import oracle
from qhom.problem import IterationPlan, RveSpec, bench_1d, bench_2d, mu_midpoint


def _random_spec(rng, dims, size):
    shape = (size,) * dims
    mu = 1.0 + rng.random(shape)
    return RveSpec(dims=dims, size=size, length=1.0, mu=mu, mu0=float(mu.mean()))


def test_relabel_signed_frequencies():
    assert [oracle.relabel(k, 8) for k in range(8)] == [0, 1, 2, 3, -4, -3, -2, -1]


def test_dft_matches_numpy_convention():
    rng = np.random.default_rng(0)
    v = rng.random(16)
    assert np.allclose(oracle.dft(v), 16 * np.fft.ifft(v))
    assert np.allclose(oracle.idft(oracle.dft(v)), v)


def test_bench_1d_converges_to_closed_form():
    spec, bench = bench_1d(64)
    fields = oracle.fft_fixed_point(spec, (0.01,), 20)
    err = oracle.relative_error(fields[20].components, bench.sample_strain(64))
    assert err == pytest.approx(3.036048e-12, rel=1e-3)


def test_bench_1d_iterate_errors_decrease():
    spec, bench = bench_1d(64)
    fields = oracle.fft_fixed_point(spec, (0.01,), 5)
    ref = bench.sample_strain(64)
    errs = [oracle.relative_error(fields[s].components, ref) for s in (3, 4, 5)]
    assert errs[0] == pytest.approx(1.5537259e-3, rel=1e-5)
    assert errs[1] == pytest.approx(4.1766686e-4, rel=1e-5)
    assert errs[2] == pytest.approx(1.1790365e-4, rel=1e-5)
    assert errs[0] > errs[1] > errs[2]


def test_bench_1d_homogenised_stress():
    spec, bench = bench_1d(64)
    final = oracle.fft_fixed_point(spec, (0.01,), 20)[-1]
    sigma = oracle.homogenised_stress(spec, final)
    assert sigma[0] == pytest.approx(0.0096, abs=1e-9)
    assert bench.sigma_bar()[0] == pytest.approx(0.0096, abs=1e-15)


def test_bench_2d_converges_to_closed_form():
    spec, bench = bench_2d(32)
    assert spec.mu0 == pytest.approx(1.1701388888888888)
    fields = oracle.fft_fixed_point(spec, (0.01, 0.01), 20)
    err = oracle.relative_error(fields[20].components, bench.sample_strain(32))
    assert err == pytest.approx(1.17994e-8, rel=1e-3)


def test_mean_strain_is_preserved():
    rng = np.random.default_rng(1)
    for dims in (1, 2):
        spec = _random_spec(rng, dims, 8)
        gbar = rng.random(dims) * 0.02
        for field in oracle.fft_fixed_point(spec, gbar, 4):
            mean = field.components.reshape(dims, -1).mean(axis=1)
            assert np.allclose(mean, gbar, atol=1e-14)


def test_fixed_point_of_homogeneous_material_is_uniform():
    spec = RveSpec(dims=2, size=8, length=1.0, mu=np.full((8, 8), 1.3), mu0=1.3)
    fields = oracle.fft_fixed_point(spec, (0.02, -0.01), 3)
    for field in fields:
        assert np.allclose(field.components[0], 0.02, atol=1e-15)
        assert np.allclose(field.components[1], -0.01, atol=1e-15)


def test_equilibrium_residual_vanishes_in_1d():
    rng = np.random.default_rng(2)
    spec = _random_spec(rng, 1, 16)
    converged = oracle.fft_fixed_point(spec, (0.01,), 40)[-1]
    assert oracle.equilibrium_residual(spec, converged) < 1e-12


def test_equilibrium_residual_lives_on_nyquist_rows_in_2d():
    # The per-step real-part projection breaks spectral equilibrium exactly at
    # the Nyquist frequency (where the signed-frequency Green operator is not
    # conjugate-symmetric); every other mode balances to machine precision.
    rng = np.random.default_rng(2)
    spec = _random_spec(rng, 2, 8)
    gamma = oracle.fft_fixed_point(spec, (0.01, 0.01), 40)[-1].components
    sigma = spec.mu * gamma
    sig_hat = [oracle.dft(sigma[i]) for i in range(2)]
    r = np.array([oracle.relabel(k, 8) for k in range(8)], float)
    xi0 = 2.0 * np.pi * r[:, None] * np.ones(8)
    xi1 = 2.0 * np.pi * np.ones((8, 1)) * r[None, :]
    div = 1j * xi0 * sig_hat[0] + 1j * xi1 * sig_hat[1]
    interior = np.ones((8, 8), dtype=bool)
    interior[4, :] = False
    interior[:, 4] = False
    assert np.linalg.norm(div[interior]) < 1e-12
    assert oracle.equilibrium_residual(spec, gamma) > 1e-3


def test_equilibrium_residual_small_for_smooth_benchmark():
    spec, _ = bench_2d(32)
    converged = oracle.fft_fixed_point(spec, (0.01, 0.01), 20)[-1]
    assert oracle.equilibrium_residual(spec, converged) < 1e-6


def test_pick_steps_matches_update_move_rule():
    spec, _ = bench_1d(16)
    steps = oracle.pick_steps(spec, (0.01,), 1e-3)
    assert steps == 5
    fields = oracle.fft_fixed_point(spec, (0.01,), steps + 1)
    moves = [
        np.linalg.norm(fields[s].components - fields[s - 1].components)
        / np.linalg.norm(fields[s].components)
        for s in range(1, steps + 1)
    ]
    assert moves[-1] <= 1e-3
    assert all(m > 1e-3 for m in moves[:-1])


def test_initial_field_defaults_to_uniform_load():
    spec, _ = bench_1d(8)
    gamma = oracle.initial_field(spec, (0.03,))
    assert gamma.shape == (1, 8)
    assert np.allclose(gamma, 0.03)


def test_step_rejects_wrong_shape():
    spec, _ = bench_1d(8)
    with pytest.raises(ValueError):
        oracle.step(spec, (0.01,), np.zeros((1, 4)))

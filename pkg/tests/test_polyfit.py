"""Polynomial fitting, amplitude encoders and the extended-domain relabelling."""

from __future__ import annotations

import numpy as np
import pytest

from qhom import gates
from qhom.polyfit import (
    EncodingError,
    build_extended_encoding,
    build_u_poly,
    encode_lookup,
    expand_bits,
    extended_domain,
    extended_targets,
    fit_extended_relabel,
    fit_from_csv_lines,
    fit_grid,
    fit_polynomial,
    fit_to_csv_lines,
    relabel,
    relabel_array,
    samples_from_csv_lines,
)
from qhom.state import StateVector


def _uniform(num_qubits: int, register) -> StateVector:
    sv = StateVector(num_qubits)
    for q in register:
        sv.apply(gates.h(q))
    return sv


def _branch(sv: StateVector, size: int, ancilla: int, value: int = 1) -> np.ndarray:
    return np.array([sv.amplitude(k | (value << ancilla)).real for k in range(size)])


def test_relabel_signed_frequencies():
    assert list(relabel_array(8)) == [0, 1, 2, 3, -4, -3, -2, -1]
    assert relabel(5, 8) == -3
    with pytest.raises(ValueError):
        relabel_array(7)
    with pytest.raises(ValueError):
        relabel(8, 8)


def test_fit_polynomial_reproduces_exact_data():
    k = np.arange(16)
    values = 1.5 - 2.0 * (k / 16) + 0.25 * (k / 16) ** 3
    fit = fit_polynomial({int(i): float(v) for i, v in zip(k, values)}, 3)
    assert fit.residual < 1e-12
    assert np.allclose(fit.evaluate(k), values)
    assert np.allclose(fit.grid_values(), values)


def test_fit_polynomial_two_variables():
    samples = {}
    for k0 in range(4):
        for k1 in range(4):
            t0, t1 = k0 / 4, k1 / 4
            samples[(k0, k1)] = 2.0 + t0 - 3.0 * t1 + 0.5 * t0 * t1
    fit = fit_polynomial(samples, (1, 1))
    assert fit.variables == 2
    assert fit.coeffs.shape == (2, 2)
    assert fit.residual < 1e-12
    assert fit.evaluate(2, 3) == pytest.approx(samples[(2, 3)])


def test_fit_polynomial_rejects_underdetermined_data():
    with pytest.raises(ValueError, match="fewer samples"):
        fit_polynomial({0: 1.0, 1: 2.0}, 3)
    diagonal = {(k, k): float(k) for k in range(5)}
    with pytest.raises(ValueError, match="rank-deficient"):
        fit_polynomial(diagonal, (1, 1))


def test_fit_grid_degree_cap():
    with pytest.raises(ValueError, match="fewer samples"):
        fit_grid(np.zeros((4, 4)), 5)
    fit = fit_grid(np.arange(8.0), 1)
    assert fit.residual < 1e-12


def test_encode_lookup_writes_amplitudes():
    rng = np.random.default_rng(0)
    values = rng.uniform(-0.9, 0.9, size=8)
    block, info = encode_lookup(values, (0, 1, 2), 3)
    sv = _uniform(4, (0, 1, 2))
    block.apply_to(sv)
    assert info.value_scale == 1.0
    assert np.allclose(_branch(sv, 8, 3) * np.sqrt(8), values, atol=1e-12)


def test_encode_lookup_zero_branch_convention():
    values = np.full(4, 0.6)
    block, _ = encode_lookup(values, (0, 1), 2, value_on=0)
    sv = _uniform(3, (0, 1))
    block.apply_to(sv)
    assert np.allclose(_branch(sv, 4, 2, value=0) * 2.0, values)


def test_encode_lookup_rescales_or_refuses():
    values = np.array([0.5, 2.0])
    block, info = encode_lookup(values, (0,), 1)
    assert info.value_scale == 2.0
    assert info.linear_factor == 0.5
    sv = _uniform(2, (0,))
    block.apply_to(sv)
    assert np.allclose(_branch(sv, 2, 1) * np.sqrt(2), values * info.linear_factor)
    with pytest.raises(EncodingError):
        encode_lookup(values, (0,), 1, rescale=False)
    with pytest.raises(EncodingError):
        encode_lookup(values, (0,), 1, scale=1.5)


def test_build_u_poly_multiplexed_matches_grid_values():
    k = np.arange(8)
    vals = 0.3 + 0.5 * (k / 8) - 0.7 * (k / 8) ** 2
    fit = fit_grid(vals, 2)
    block, info = build_u_poly(fit, ((0, 1, 2),), 3, mode="multiplexed")
    sv = _uniform(4, (0, 1, 2))
    block.apply_to(sv)
    assert np.allclose(_branch(sv, 8, 3) * np.sqrt(8), vals / info.value_scale, atol=1e-12)


def test_build_u_poly_two_variable_low_bits_first():
    grid = np.fromfunction(lambda i, j: 0.1 * i - 0.05 * j, (4, 4))
    fit = fit_grid(grid, (1, 1))
    block, info = build_u_poly(fit, ((0, 1), (2, 3)), 4, mode="multiplexed")
    sv = _uniform(5, (0, 1, 2, 3))
    block.apply_to(sv)
    for k0 in range(4):
        for k1 in range(4):
            amp = sv.amplitude(k0 | (k1 << 2) | (1 << 4)).real * 4.0
            assert amp == pytest.approx(grid[k0, k1] / info.value_scale, abs=1e-12)


def test_cascade_amplitude_is_sine_of_scaled_value():
    k = np.arange(8)
    vals = 0.3 + 0.5 * (k / 8) - 0.7 * (k / 8) ** 2
    fit = fit_grid(vals, 2)
    block, info = build_u_poly(fit, ((0, 1, 2),), 3, mode="cascade", cascade_lambda=0.25)
    sv = _uniform(4, (0, 1, 2))
    block.apply_to(sv)
    amps = _branch(sv, 8, 3) * np.sqrt(8)
    scaled = 0.25 * vals / info.value_scale
    assert np.allclose(amps, np.sin(scaled), atol=1e-12)
    # The linearisation error is the sine's cubic term, controlled by lambda.
    assert np.max(np.abs(amps - scaled)) <= np.max(np.abs(scaled) ** 3) / 6 + 1e-12
    assert info.linear_factor == pytest.approx(0.25 / info.value_scale)


def test_build_u_poly_rejects_bad_modes():
    fit = fit_grid(np.arange(4.0) / 4.0, 1)
    with pytest.raises(ValueError, match="unknown encoding mode"):
        build_u_poly(fit, ((0, 1),), 2, mode="poly")
    with pytest.raises(ValueError, match="branch"):
        build_u_poly(fit, ((0, 1),), 2, mode="cascade", value_on=0)


def test_expand_bits_is_exact_on_the_grid():
    k = np.arange(16)
    vals = 0.9 - 1.2 * (k / 16) + 0.3 * (k / 16) ** 3
    fit = fit_grid(vals, 3)
    monomials = expand_bits(fit, ((0, 1, 2, 3),))
    for idx in range(16):
        total = sum(
            c for key, c in monomials.items() if all((idx >> q) & 1 for q in key)
        )
        assert total == pytest.approx(vals[idx], abs=1e-12)


def test_expand_bits_two_registers():
    grid = np.fromfunction(lambda i, j: 0.2 * (i / 4) * (j / 4) - 0.1 * (j / 4), (4, 4))
    fit = fit_grid(grid, (1, 1))
    monomials = expand_bits(fit, ((0, 1), (2, 3)))
    for k0 in range(4):
        for k1 in range(4):
            idx = k0 | (k1 << 2)
            total = sum(
                c for key, c in monomials.items() if all((idx >> q) & 1 for q in key)
            )
            assert total == pytest.approx(grid[k0, k1], abs=1e-12)


def test_extended_domain_shape():
    ext = extended_domain(8)
    assert ext.extended_size == 16
    assert ext.defined_ranges == ((0, 4), (12, 16))
    targets = extended_targets(ext)
    assert targets == {0: 0.0, 1: 1.0, 2: 2.0, 3: 3.0, 12: -4.0, 13: -3.0, 14: -2.0, 15: -1.0}


def test_extended_relabel_fit_quality():
    fit = fit_extended_relabel(8, 5)
    assert fit.residual == pytest.approx(0.0955208793986344, rel=1e-9)
    # The fit interpolates the signed frequencies across the unconstrained
    # middle band: adjacent mapped addresses land on opposite sides of the
    # k = N/2 sign jump.
    assert fit.evaluate(3) > 2.5
    assert fit.evaluate(12) < -3.5


def test_extended_encoding_circuit_matches_fit():
    fit = fit_extended_relabel(8, 5)
    ext = extended_domain(8)
    block, info = build_extended_encoding(ext, fit, (0, 1, 2), 3, 4)
    sv = _uniform(5, (0, 1, 2))
    block.apply_to(sv)
    mapped = np.array([k if k < 4 else k + 8 for k in range(8)])
    expected = fit.evaluate(mapped) / info.value_scale / np.sqrt(8)
    assert np.allclose(_branch(sv, 8, 4), expected, atol=1e-10)
    assert info.bit_correction == (2, 3)
    # restore=True returns the extension qubit to |0> on every branch
    leaked = max(abs(sv.amplitude(k | (1 << 3))) for k in range(8))
    assert leaked == 0.0


def test_fit_csv_round_trip():
    k = np.arange(8)
    fit = fit_grid(0.25 - 0.5 * (k / 8) ** 2, 2)
    back = fit_from_csv_lines(fit_to_csv_lines(fit))
    assert back.variables == fit.variables
    assert back.degrees == fit.degrees
    assert back.grid_size == fit.grid_size
    assert np.allclose(back.coeffs, fit.coeffs)
    grid2 = np.fromfunction(lambda i, j: 0.1 * i + 0.2 * j, (4, 4))
    fit2 = fit_grid(grid2, (1, 1))
    back2 = fit_from_csv_lines(fit_to_csv_lines(fit2))
    assert np.allclose(back2.coeffs, fit2.coeffs)


def test_samples_csv_parsing():
    lines = ["# comment", "index,value", "0,1.5", "3,-2.0"]
    assert samples_from_csv_lines(lines) == {0: 1.5, 3: -2.0}
    lines2 = ["k0,k1,value", "0,1,0.5", "2,3,1.25"]
    assert samples_from_csv_lines(lines2) == {(0, 1): 0.5, (2, 3): 1.25}

"""Statevector emulator semantics: gates, reads, projections, sampling."""

from __future__ import annotations

import numpy as np
import pytest

from qhom import gates
from qhom.state import StateVector


def _basis(num_qubits: int, index: int) -> StateVector:
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def test_little_endian_indexing():
    sv = _basis(3, 0)
    sv.apply(gates.x(1))
    assert sv.amplitude(0b010) == pytest.approx(1.0)


def test_controlled_gate_fires_only_on_matching_controls():
    sv = _basis(3, 0b001)
    sv.apply(gates.x(2, controls=((0, 1), (1, 0))))
    assert sv.amplitude(0b101) == pytest.approx(1.0)
    sv2 = _basis(3, 0b011)
    sv2.apply(gates.x(2, controls=((0, 1), (1, 0))))
    assert sv2.amplitude(0b011) == pytest.approx(1.0)


def test_ry_rotates_amplitudes():
    sv = _basis(1, 0)
    theta = 2.0 * np.arccos(0.6)
    sv.apply(gates.ry(0, theta))
    assert sv.amplitude(0) == pytest.approx(0.6)
    assert sv.amplitude(1) == pytest.approx(0.8)


def test_apply_qft_is_the_unitary_dft():
    rng = np.random.default_rng(0)
    amps = rng.random(8) + 1j * rng.random(8)
    amps /= np.linalg.norm(amps)
    sv = StateVector(3, amps.copy())
    sv.apply_qft((0, 1, 2))
    expected = np.fft.ifft(amps) * np.sqrt(8)
    assert np.allclose(sv.amps, expected)
    sv.apply_qft((0, 1, 2), inverse=True)
    assert np.allclose(sv.amps, amps)


def test_apply_qft_controls_restrict_the_subspace():
    rng = np.random.default_rng(1)
    amps = rng.random(8) + 1j * rng.random(8)
    amps /= np.linalg.norm(amps)
    sv = StateVector(3, amps.copy())
    sv.apply_qft((0, 1), controls=((2, 0),))
    low = np.fft.ifft(amps[:4]) * 2.0
    assert np.allclose(sv.amps[:4], low)
    assert np.allclose(sv.amps[4:], amps[4:])


def test_apply_mulry_selects_angle_per_selector_value():
    values = np.array([0.1, 0.4, 0.7, 0.95])
    sv = _basis(3, 0)
    sv.apply(gates.h(1))
    sv.apply(gates.h(2))
    sv.apply_mulry((1, 2), 2.0 * np.arccos(values), 0)
    for sel in range(4):
        assert sv.amplitude(sel << 1) == pytest.approx(0.5 * values[sel])
        assert abs(sv.amplitude(sel << 1 | 1)) == pytest.approx(
            0.5 * np.sqrt(1.0 - values[sel] ** 2)
        )


def test_read_orders_free_qubits_little_endian():
    sv = _basis(3, 0b110)
    out = sv.read(fixed=((1, 1),), free=(0, 2))
    expected = np.zeros(4, dtype=complex)
    expected[0b10] = 1.0
    assert np.allclose(out, expected)


def test_project_renormalises():
    sv = StateVector(2, np.array([0.6, 0.0, 0.0, 0.8], dtype=complex))
    prob, projected = sv.project(((0, 1),))
    assert prob == pytest.approx(0.64)
    assert projected.amplitude(0b11) == pytest.approx(1.0)


def test_probability_of_pattern():
    sv = StateVector(2, np.array([0.6, 0.0, 0.0, 0.8], dtype=complex))
    assert sv.probability(((0, 0), (1, 0))) == pytest.approx(0.36)


def test_sample_is_seed_deterministic_and_unbiased():
    sv = StateVector(2, np.array([0.6, 0.0, 0.0, 0.8], dtype=complex))
    counts = sv.sample(100_000, seed=7)
    again = sv.sample(100_000, seed=7)
    assert counts == again
    assert set(counts) <= {0b00, 0b11}
    p = counts[0b11] / 100_000
    se = np.sqrt(0.64 * 0.36 / 100_000)
    assert abs(p - 0.64) < 3 * se


def test_sample_subset_marginalises():
    sv = StateVector(2, np.array([0.6, 0.0, 0.0, 0.8], dtype=complex))
    counts = sv.sample(50_000, seed=3, qubits=(1,))
    assert set(counts) <= {0, 1}
    assert counts[0] + counts[1] == 50_000


def test_norm_is_preserved_by_gates():
    rng = np.random.default_rng(5)
    amps = rng.random(16) + 1j * rng.random(16)
    amps /= np.linalg.norm(amps)
    sv = StateVector(4, amps)
    sv.apply(gates.h(0))
    sv.apply(gates.ry(2, 0.7, controls=((0, 1),)))
    sv.apply(gates.swap(1, 3))
    sv.apply_qft((0, 1, 2, 3))
    assert sv.norm() == pytest.approx(1.0)


def test_apply_rejects_duplicate_target_and_control():
    sv = _basis(2, 0)
    with pytest.raises(ValueError):
        sv.apply(gates.x(0, controls=((0, 1),)))

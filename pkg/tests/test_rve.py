"""Single-cell solver circuit: layout, exchange, init, steps and readout."""

from __future__ import annotations

import numpy as np
import pytest

from qhom import oracle
from qhom.problem import IterationPlan, RveSpec, bench_1d, bench_2d, mu_midpoint
from qhom.rve import (
    EXECUTE_QUBIT_CAP,
    QubitBudgetError,
    SolverConfig,
    build_encodings,
    build_layout,
    build_ledger,
    build_u_init,
    exchange_pairs,
    readout_strain,
    solve,
    transposition,
)
from qhom.state import StateVector


def _random_spec(rng, dims: int, size: int) -> RveSpec:
    shape = (size,) * dims
    mu = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=shape))
    return RveSpec(dims=dims, size=size, length=1.0, mu=mu, mu0=mu_midpoint(mu))


def test_layout_qubit_counts():
    for size, steps in ((4, 1), (16, 3), (64, 5)):
        spec, _ = bench_1d(size)
        layout = build_layout(spec, IterationPlan(steps=steps))
        n = spec.n_qubits_per_dim
        assert layout.num_qubits == n + 3 * steps + 2
    for size, steps in ((4, 1), (8, 2), (16, 3)):
        spec, _ = bench_2d(size)
        layout = build_layout(spec, IterationPlan(steps=steps))
        n = spec.n_qubits_per_dim
        assert layout.num_qubits == 2 * n + 5 * steps + 3
    spec, _ = bench_2d(16)
    assert build_layout(spec, IterationPlan(steps=3)).num_qubits == EXECUTE_QUBIT_CAP


def test_layout_extended_and_extras():
    spec, _ = bench_2d(8)
    plan = IterationPlan(steps=2)
    base = build_layout(spec, plan)
    ext = build_layout(spec, plan, extended=True)
    assert ext.num_qubits == base.num_qubits + 2
    assert len(ext.ext) == 2
    wide = build_layout(spec, plan, extra=3)
    assert wide.num_qubits == base.num_qubits + 3
    assert len(wide.extras) == 3
    # Extras sit between the parked bundles and w, outside the exchange band.
    assert wide.exchange_width == wide.extras[0]
    assert base.exchange_width == base.w


def test_layout_readout_pattern():
    spec, _ = bench_1d(8)
    layout = build_layout(spec, IterationPlan(steps=2))
    fixed = dict(layout.readout_fixed())
    assert fixed[layout.d] == 0
    assert fixed[layout.e] == 0
    assert fixed[layout.w] == 0
    assert fixed[layout.p0] == 1 and fixed[layout.p1] == 1
    assert fixed[layout.parks[0][0]] == 1 and fixed[layout.parks[0][1]] == 1
    assert set(layout.field_qubits()) == set(layout.k0)


def test_transposition_swaps_exactly_two_states():
    rng = np.random.default_rng(0)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    sv = StateVector(3, amps)
    block = transposition((0, 1, 2), 0b010, 0b101)
    block.apply_to(sv)
    expected = amps.copy()
    expected[[0b010, 0b101]] = expected[[0b101, 0b010]]
    assert np.allclose(sv.amps, expected)
    block.apply_to(sv)
    assert np.allclose(sv.amps, amps)


def test_transposition_gray_walk_palindrome():
    # Three differing bits lower to five fully conditioned X gates, the
    # highest differing bit walked first and the palindrome closing the rest.
    block = transposition((0, 1, 2), 0b000, 0b111)
    emitted = [g for _, g in block.gate_list()]
    assert len(emitted) == 5
    assert [g.targets[0] for g in emitted] == [2, 0, 1, 0, 2]
    assert all(len(g.controls) == 2 for g in emitted)
    for m, (a, b) in ((1, (0, 1)), (2, (0b00, 0b11)), (3, (0b000, 0b111))):
        gate_count = len(transposition((0, 1, 2), a, b).gate_list())
        assert gate_count == 2 * m - 1


def test_transposition_validation():
    with pytest.raises(ValueError, match="differ"):
        transposition((0, 1), 2, 2)
    with pytest.raises(ValueError, match="outside"):
        transposition((0, 1), 0, 4)


def test_exchange_pairs_walk_the_slot_counter():
    spec, _ = bench_1d(8)
    layout = build_layout(spec, IterationPlan(steps=3))
    anc = (1 << layout.p1) | (1 << layout.p0)
    park_bits = [
        (1 << bundle[0]) | (1 << bundle[1]) for bundle in layout.parks
    ]
    ((a0, b0),) = exchange_pairs(layout, 0)
    assert a0 == anc
    assert b0 == 1 << layout.e
    ((a1, b1),) = exchange_pairs(layout, 1)
    assert a1 == anc | park_bits[0]
    assert b1 == (1 << layout.e) | (1 << layout.s[1])
    ((a2, b2),) = exchange_pairs(layout, 2)
    assert a2 == anc | park_bits[0] | park_bits[1]
    assert b2 == (1 << layout.e) | (1 << layout.s[0]) | (1 << layout.s[1])
    with pytest.raises(ValueError, match="outside the plan"):
        exchange_pairs(layout, 3)


def test_exchange_pairs_two_components():
    spec, _ = bench_2d(4)
    layout = build_layout(spec, IterationPlan(steps=1))
    pairs = exchange_pairs(layout, 0)
    assert len(pairs) == 2
    (a0, b0), (a1, b1) = pairs
    assert a1 == a0 | (1 << layout.c)
    assert b1 == b0 | (1 << layout.c)


def test_init_places_chain_and_slot_amplitudes():
    spec, _ = bench_1d(4)
    rng = np.random.default_rng(3)
    g0 = rng.uniform(-0.3, 0.5, size=(1, 4))
    plan = IterationPlan(steps=2, gamma0=g0)
    layout = build_layout(spec, plan)
    enc = build_encodings(spec, layout)
    init = build_u_init(spec, 0.01, plan, layout, step_factor=enc.step_factor)
    sv = StateVector(layout.num_qubits)
    init.apply_to(sv)
    n = spec.size
    for k in range(n):
        amp = sv.amplitude(k << layout.k0[0]).real
        expected = (1.0 / np.sqrt(3.0)) * (1.0 / np.sqrt(n)) * g0[0][k] / n
        assert amp == pytest.approx(expected, abs=1e-15)
    f = enc.step_factor
    slot0 = sv.amplitude(1 << layout.e).real
    slot1 = sv.amplitude((1 << layout.e) | (1 << layout.s[0])).real
    assert slot0 == pytest.approx(0.01 * f / n / np.sqrt(3.0), abs=1e-15)
    assert slot1 == pytest.approx(0.01 * f * f / n / np.sqrt(3.0), abs=1e-15)


def test_uniform_start_folds_to_constant_prep():
    spec1, _ = bench_1d(8)
    table1 = np.full((1, 8), 0.01)
    a = solve(spec1, 0.01, IterationPlan(steps=2))
    b = solve(spec1, 0.01, IterationPlan(steps=2, gamma0=table1))
    assert np.array_equal(a.strain.components, b.strain.components)
    spec2, _ = bench_2d(4)
    table2 = np.stack([np.full((4, 4), 0.01), np.full((4, 4), 0.02)])
    c = solve(spec2, (0.01, 0.02), IterationPlan(steps=1))
    d = solve(spec2, (0.01, 0.02), IterationPlan(steps=1, gamma0=table2))
    assert np.array_equal(c.strain.components, d.strain.components)


def test_one_step_matches_oracle_on_random_cells():
    rng = np.random.default_rng(42)
    cases = [(1, 8), (1, 16), (2, 4), (2, 8)]
    for dims, size in cases:
        for _ in range(2):
            spec = _random_spec(rng, dims, size)
            gbar = tuple(rng.uniform(0.005, 0.02, size=dims))
            rep = solve(spec, gbar, IterationPlan(steps=1))
            ref = oracle.fft_fixed_point(spec, gbar, 1)[1]
            err = oracle.relative_error(rep.strain.components, ref.components)
            assert err < 1e-9, (dims, size, err)


def test_three_steps_match_oracle_in_one_dimension():
    spec, _ = bench_1d(16)
    rep = solve(spec, 0.01, IterationPlan(steps=3))
    ref = oracle.fft_fixed_point(spec, 0.01, 3)[3]
    assert oracle.relative_error(rep.strain.components, ref.components) < 3e-9


def test_multi_step_two_dimensional_deviation_floor():
    # The classical iterate re-projects to a real field each step; the
    # unitary cannot, so the conjugate-asymmetric Nyquist response leaves a
    # small real deviation that shrinks with grid size. At N=8 it sits near
    # 2.4e-6; the one-step and 1D paths are exact to solver precision.
    spec, _ = bench_2d(8)
    rep = solve(spec, (0.01, 0.01), IterationPlan(steps=2))
    ref = oracle.fft_fixed_point(spec, (0.01, 0.01), 2)[2]
    err = oracle.relative_error(rep.strain.components, ref.components)
    assert err < 1e-5


def test_multiplexed_equals_lookup_when_fit_interpolates():
    spec, _ = bench_1d(4)
    plan = IterationPlan(steps=2)
    a = solve(spec, 0.01, plan, SolverConfig(encoding="multiplexed"))
    b = solve(spec, 0.01, plan)
    assert np.max(np.abs(a.strain.components - b.strain.components)) < 1e-12


def test_budget_refusal_and_count_mode():
    spec, _ = bench_1d(4)
    plan = IterationPlan(steps=10)
    with pytest.raises(QubitBudgetError) as err:
        solve(spec, 0.01, plan)
    assert err.value.required == 34
    assert "count mode" in str(err.value)
    rep = solve(spec, 0.01, plan, mode="count")
    assert rep.strain is None
    assert rep.counts.total > 0
    ran = solve(spec, 0.01, IterationPlan(steps=1))
    assert ran.counts is None


def test_count_breakdown_covers_every_stage():
    spec, _ = bench_1d(8)
    rep = solve(spec, 0.01, IterationPlan(steps=2), mode="count")
    by_block = rep.counts.by_block
    assert set(by_block) == {"u_init", "u_poly", "u_green", "u_irve", "u_exch", "shift_1"}
    total_cnot = sum(c for c, _ in by_block.values())
    total_u3 = sum(u for _, u in by_block.values())
    assert (total_cnot, total_u3) == (rep.counts.cnot, rep.counts.u3)


def test_ledger_entries_and_product():
    spec, _ = bench_2d(4)
    plan = IterationPlan(steps=2)
    layout = build_layout(spec, plan)
    enc = build_encodings(spec, layout)
    ledger = build_ledger(spec, plan, enc)
    names = [name for name, _ in ledger.entries]
    assert names == [
        "slot-weight",
        "component-split",
        "grid-uniform",
        "strain-scale",
        "step-1",
        "step-2",
    ]
    values = dict(ledger.entries)
    assert values["slot-weight"] == pytest.approx(1.0 / np.sqrt(3.0))
    assert values["component-split"] == pytest.approx(2.0 ** -0.5)
    assert values["grid-uniform"] == pytest.approx(0.25)
    assert values["strain-scale"] == pytest.approx(0.25)
    assert values["step-1"] == pytest.approx(enc.step_factor)
    assert ledger.product == pytest.approx(float(np.prod(ledger.values)))


def test_readout_requires_success_mass():
    spec, _ = bench_1d(8)
    plan = IterationPlan(steps=1)
    layout = build_layout(spec, plan)
    enc = build_encodings(spec, layout)
    ledger = build_ledger(spec, plan, enc)
    with pytest.raises(ValueError, match="physical branch is empty"):
        readout_strain(StateVector(layout.num_qubits), layout, ledger)


def test_solver_configuration_validation():
    spec1, _ = bench_1d(8)
    with pytest.raises(ValueError, match="unknown mode"):
        solve(spec1, 0.01, IterationPlan(steps=1), mode="estimate")
    layout = build_layout(spec1, IterationPlan(steps=1))
    with pytest.raises(ValueError, match="unknown encoding"):
        build_encodings(spec1, layout, SolverConfig(encoding="poly"))
    with pytest.raises(ValueError, match="extended addressing"):
        build_encodings(spec1, layout, SolverConfig(encoding="multiplexed", extended=True))

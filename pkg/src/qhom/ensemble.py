"""Parallel solution of M load cases in orthogonal subspaces of one register.

A case register of m = ceil(log2 M) qubits indexes the load cases; the
initialiser writes each case's strain data into its own |j> fibre with merged
multiplexers (selector lists extended by the case register, so the cost grows
linearly in M), and a single uncontrolled iteration unitary advances every
fibre at once. The stress readout encodes sigma = mu * gamma on a fresh
ancilla, Fourier-transforms, and flags the zero mode so each case's average
stress sits on one marked amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from .blocks import Block, GateStep, MulRy, Qft, Seq
from .polyfit import build_u_poly, encode_lookup, fit_grid
from .problem import IterationPlan, RveSpec, StrainField
from .rve import (
    EXECUTE_QUBIT_CAP,
    Encodings,
    NormalisationLedger,
    QubitBudgetError,
    QubitLayout,
    SolverConfig,
    _arccos_values,
    _slot_chain,
    build_encodings,
    build_layout,
    build_ledger,
    build_u_iter,
)
from .transpile import count


@dataclass(frozen=True)
class LoadSet:
    """Macroscopic strain per load case; padded to a power of two with zero loads."""

    gammabars: tuple
    labels: tuple = ()

    def __post_init__(self):
        if not self.gammabars:
            raise ValueError("need at least one load case")
        dims = len(self.gammabars[0])
        if any(len(g) != dims for g in self.gammabars):
            raise ValueError("load cases disagree on dimensionality")
        if self.labels and len(self.labels) != len(self.gammabars):
            raise ValueError("one label per load case")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"case-{i}" for i in range(len(self.gammabars))))

    @property
    def dims(self) -> int:
        return len(self.gammabars[0])

    @property
    def num_cases(self) -> int:
        return len(self.gammabars)

    @property
    def register_width(self) -> int:
        return max(1, int(np.ceil(np.log2(self.num_cases))))

    @property
    def num_padded(self) -> int:
        return 1 << self.register_width

    @property
    def padded_flags(self) -> tuple:
        return tuple(i >= self.num_cases for i in range(self.num_padded))

    def load_array(self) -> np.ndarray:
        """(num_padded, dims) array, zero rows for the padding cases."""
        out = np.zeros((self.num_padded, self.dims))
        out[: self.num_cases] = np.asarray(self.gammabars, dtype=float)
        return out


def load_set(gammabars, labels=None) -> LoadSet:
    gammabars = tuple(tuple(float(v) for v in np.atleast_1d(g)) for g in gammabars)
    return LoadSet(gammabars, tuple(labels) if labels else ())


def ensemble_layout(spec: RveSpec, plan: IterationPlan, loads: LoadSet, config: SolverConfig | None = None) -> QubitLayout:
    """Single-RVE layout plus extras: stress ancilla, flag, case register."""
    extended = bool(config.extended) if config is not None else False
    return build_layout(spec, plan, extended=extended, extra=2 + loads.register_width)


def _extras(layout: QubitLayout, loads: LoadSet) -> tuple:
    if len(layout.extras) != 2 + loads.register_width:
        raise ValueError("layout extras do not match the load set")
    return layout.extras[0], layout.extras[1], layout.extras[2:]


def build_parallel_init(
    loads: LoadSet,
    spec: RveSpec,
    plan: IterationPlan,
    layout: QubitLayout,
    step_factor: float = 1.0,
) -> Block:
    """Case superposition plus per-case strain and macroscopic-copy encodes.

    Every multiplexer from the single-RVE initialiser reappears with the case
    register appended to its selector list, so each |j> fibre receives the
    single-RVE init for its own load.
    """
    if loads.dims != spec.dims:
        raise ValueError("load dimensionality does not match the spec")
    _, _, m_reg = _extras(layout, loads)
    n_pts = spec.size
    cases = loads.load_array()

    steps = _slot_chain(layout)
    for q in m_reg:
        steps.append(GateStep(gates.h(q)))
    e0 = ((layout.e, 0),)
    if spec.dims == 2:
        steps.append(GateStep(gates.h(layout.c, controls=e0)))
    for q in layout.k0 + layout.k1:
        steps.append(GateStep(gates.h(q, controls=e0)))

    if plan.gamma0 is None:
        # Per-case constant tables: only the component and case selectors
        # survive, keeping the init O(M) instead of O(M N).
        if spec.dims == 1:
            flat = cases[:, 0]
            selectors = m_reg
        else:
            flat = cases.flatten()
            selectors = (layout.c,) + m_reg
    else:
        g0 = np.asarray(plan.gamma0, dtype=float)
        table = g0[0] if spec.dims == 1 else g0.transpose(0, 2, 1).flatten()
        flat = np.tile(np.ravel(table), loads.num_padded)
        selectors = layout.k0 + layout.k1 + (() if spec.dims == 1 else (layout.c,)) + m_reg
    steps.append(MulRy(selectors, _arccos_values(flat / n_pts), layout.d, controls=e0))

    for t in range(plan.steps):
        ctl = layout.slot_controls(t)
        scale = step_factor ** (t + 1) / n_pts
        if spec.dims == 2:
            angles_c = [2.0 * np.arctan2(g[1], g[0]) for g in cases]
            steps.append(MulRy(m_reg, angles_c, layout.c, controls=ctl))
            values = np.array([np.linalg.norm(g) * scale / np.sqrt(2.0) for g in cases])
        else:
            values = cases[:, 0] * scale
        steps.append(MulRy(m_reg, _arccos_values(values), layout.d, controls=ctl))
    return Seq("u_init", steps)


def build_parallel_solve(
    loads: LoadSet,
    spec: RveSpec,
    plan: IterationPlan,
    layout: QubitLayout,
    enc: Encodings | None = None,
) -> Block:
    """One uncontrolled iteration unitary; the case register is never touched."""
    _extras(layout, loads)
    return build_u_iter(spec, plan, layout, enc)


@dataclass(frozen=True)
class StressInfo:
    """Effective amplitude divisor applied by the stress encode."""

    value_scale: float


def stress_ledger(base: NormalisationLedger, loads: LoadSet, spec: RveSpec, value_scale: float) -> NormalisationLedger:
    """Extend the strain ledger to the flagged zero-mode stress amplitude."""
    entries = base.entries + (
        ("case-weight", 2.0 ** (-loads.register_width / 2.0)),
        ("stress-scale", 1.0 / value_scale),
        ("zero-mode-gain", float(spec.size) ** (spec.dims / 2.0)),
    )
    return NormalisationLedger(entries)


def build_stress_readout(
    spec: RveSpec,
    layout: QubitLayout,
    config: SolverConfig | None = None,
) -> tuple[Block, StressInfo]:
    """Encode sigma = mu * gamma, Fourier-transform, flag the zero mode.

    The modulus multiplexer writes mu(x)/s_sigma onto the stress ancilla, the
    QFTs move the average to k = 0, and a multi-controlled X marks the
    chain's zero-mode success amplitude on the flag qubit. The flagged
    amplitude is sigma_bar per case and component times the returned ledger.
    """
    config = config or SolverConfig()
    p_sigma, flag = layout.extras[0], layout.extras[1]
    e0 = ((layout.e, 0),)
    mu = np.asarray(spec.mu, dtype=float)
    if config.encoding == "lookup":
        block, info = encode_lookup(
            mu.flatten(order="F"), layout.k0 + layout.k1, p_sigma,
            controls=e0, value_on=1, name="u_sigma",
        )
    else:
        degrees = config.mu_degrees
        if degrees is None:
            degrees = min(8, spec.size - 1)
            if spec.dims == 2:
                degrees = (degrees, degrees)
        registers = (layout.k0,) if spec.dims == 1 else (layout.k0, layout.k1)
        block, info = build_u_poly(
            fit_grid(mu, degrees), registers, p_sigma, controls=e0,
            mode=config.encoding, cascade_lambda=config.mu_lambda,
            value_on=1, name="u_sigma",
        )
    steps = [block, Qft(layout.k0, controls=e0)]
    if spec.dims == 2:
        steps.append(Qft(layout.k1, controls=e0))
    controls = [(layout.d, 0), (layout.e, 0), (p_sigma, 1)]
    controls += [(q, 0) for q in layout.s]
    controls += [(q, 0) for q in layout.k0 + layout.k1]
    controls += [(layout.p1, 1), (layout.p0, 1)]
    if spec.dims == 2:
        controls += [(layout.l1, 0), (layout.l0, 0)]
    for bundle in layout.parks:
        controls += [(bundle[0], 1), (bundle[1], 1)]
        controls += [(q, 0) for q in bundle[2:]]
    controls += [(q, 0) for q in layout.ext]
    steps.append(GateStep(gates.x(flag, controls=tuple(controls))))
    return Seq("u_stress", steps), StressInfo(value_scale=1.0 / info.linear_factor)


@dataclass(frozen=True, eq=False)
class EnsembleReport:
    """Per-case outputs; sigma rows align with loads.labels (padding dropped)."""

    loads: LoadSet
    sigma: np.ndarray
    probabilities: np.ndarray
    signed: bool
    strain: tuple = ()
    shots: int | None = None
    num_qubits: int | None = None
    counts: object = None


def _flag_fixed(layout: QubitLayout, loads: LoadSet) -> tuple:
    p_sigma, flag, _ = _extras(layout, loads)
    fixed = [(layout.d, 0), (layout.e, 0), (layout.w, 0), (p_sigma, 1), (flag, 1)]
    fixed += [(q, 0) for q in layout.s]
    fixed += [(q, 0) for q in layout.k0 + layout.k1]
    fixed += [(layout.p1, 1), (layout.p0, 1)]
    if layout.dims == 2:
        fixed += [(layout.l1, 0), (layout.l0, 0)]
    for bundle in layout.parks:
        fixed += [(bundle[0], 1), (bundle[1], 1)]
        fixed += [(q, 0) for q in bundle[2:]]
    fixed += [(q, 0) for q in layout.ext]
    return tuple(fixed)


def extract_report(
    state,
    loads: LoadSet,
    layout: QubitLayout,
    ledger: NormalisationLedger,
    shots: int | None = None,
    seed: int | None = None,
) -> EnsembleReport:
    """Per-case average stress from the flagged amplitudes.

    Emulator mode (shots=None) reads signed amplitudes; sampling mode
    estimates probabilities from shot counts and can only report stress
    magnitudes.
    """
    _, _, m_reg = _extras(layout, loads)
    free = ((layout.c,) if layout.dims == 2 else ()) + m_reg
    fixed = _flag_fixed(layout, loads)
    product = ledger.product
    comps = layout.dims
    if shots is None:
        amps = state.read(fixed, free)
        table = amps.reshape(loads.num_padded, comps).T
        sigma = (np.real(table) / product)[:, : loads.num_cases].T
        probs = np.sum(np.abs(table) ** 2, axis=0)[: loads.num_cases]
        return EnsembleReport(loads, sigma, probs, signed=True)
    fixed_qubits = tuple(q for q, _ in fixed)
    counts = state.sample(shots, seed=seed, qubits=fixed_qubits + free)
    want_prefix = sum(v << i for i, (_, v) in enumerate(fixed))
    prefix_mask = (1 << len(fixed)) - 1
    table = np.zeros((loads.num_padded, comps))
    for value, n_hits in counts.items():
        if value & prefix_mask != want_prefix:
            continue
        rest = value >> len(fixed)
        c = rest & 1 if comps == 2 else 0
        j = rest >> 1 if comps == 2 else rest
        table[j, c] += n_hits / shots
    sigma = np.sqrt(table[: loads.num_cases]) / product
    probs = np.sum(table, axis=1)[: loads.num_cases]
    return EnsembleReport(loads, sigma, probs, signed=False, shots=shots)


def solve_ensemble(
    spec: RveSpec,
    loads: LoadSet,
    plan: IterationPlan,
    config: SolverConfig | None = None,
    mode: str = "execute",
    shots: int | None = None,
    seed: int | None = None,
    keep_strain: bool = True,
) -> EnsembleReport:
    """Full pipeline: parallel init, one iteration unitary, stress readout."""
    config = config or SolverConfig()
    layout = ensemble_layout(spec, plan, loads, config)
    enc = build_encodings(spec, layout, config)
    base = build_ledger(spec, plan, enc)
    init = build_parallel_init(loads, spec, plan, layout, step_factor=enc.step_factor)
    iterate = build_parallel_solve(loads, spec, plan, layout, enc)
    readout, stress_info = build_stress_readout(spec, layout, config)
    ledger = stress_ledger(base, loads, spec, stress_info.value_scale)
    if mode == "count":
        circuit = Seq("u_ensemble", [init, iterate, readout])
        report = count(circuit, layout.num_qubits)
        return EnsembleReport(loads, np.zeros((loads.num_cases, spec.dims)), np.zeros(loads.num_cases),
                              signed=False, num_qubits=layout.num_qubits, counts=report)
    if mode != "execute":
        raise ValueError(f"unknown mode {mode!r}")
    if layout.num_qubits > EXECUTE_QUBIT_CAP:
        raise QubitBudgetError(layout.num_qubits)
    from .state import StateVector

    sv = StateVector(layout.num_qubits)
    init.apply_to(sv)
    iterate.apply_to(sv)
    strain_fields = ()
    if keep_strain:
        _, _, m_reg = _extras(layout, loads)
        case_weight = NormalisationLedger(base.entries + (("case-weight", 2.0 ** (-loads.register_width / 2.0)),))
        fields = []
        for j in range(loads.num_cases):
            m_pattern = tuple((q, (j >> i) & 1) for i, q in enumerate(m_reg))
            fixed = layout.readout_fixed() + m_pattern + ((layout.extras[0], 0), (layout.extras[1], 0))
            amps = sv.read(fixed, layout.field_qubits())
            values = np.real(amps) / case_weight.product
            if layout.dims == 1:
                comps = values.reshape(1, spec.size)
            else:
                comps = values.reshape(2, spec.size, spec.size).transpose(0, 2, 1)
            fields.append(StrainField(components=comps, ledger=case_weight.values))
        strain_fields = tuple(fields)
    readout.apply_to(sv)
    report = extract_report(sv, loads, layout, ledger, shots=shots, seed=seed)
    return EnsembleReport(loads, report.sigma, report.probabilities, signed=report.signed,
                          strain=strain_fields, shots=shots, num_qubits=layout.num_qubits)


def loadset_from_csv_lines(lines) -> LoadSet:
    """Parse case_id,gamma0[,gamma1] rows (header optional)."""
    labels, rows = [], []
    for line in lines:
        line = line.strip()
        if not line or line.lower().startswith("case_id"):
            continue
        parts = [p.strip() for p in line.split(",")]
        labels.append(parts[0])
        rows.append(tuple(float(v) for v in parts[1:]))
    if not rows:
        raise ValueError("no load cases in input")
    return LoadSet(tuple(rows), tuple(labels))


def report_csv_lines(report: EnsembleReport) -> list[str]:
    """case_id,p,sigma columns; magnitudes flagged by the signed field."""
    dims = report.loads.dims
    head = "case_id,probability," + ",".join(f"sigma{i}" for i in range(dims))
    lines = [head]
    for i, label in enumerate(report.loads.labels):
        vals = ",".join(f"{report.sigma[i, c]:.12g}" for c in range(dims))
        lines.append(f"{label},{report.probabilities[i]:.12g},{vals}")
    return lines

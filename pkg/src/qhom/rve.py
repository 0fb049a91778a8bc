"""Circuit assembly for the fixed-point strain solver on a single cell.

One amplitude chain per (slot, e) subspace: the e=0, s=0 chain carries the
running strain iterate, and each e=1 slot parks one pre-scaled copy of the
macroscopic strain that a later step consumes. The physical field is the
post-run amplitude vector divided by the normalisation ledger product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from .blocks import Block, Controlled, GateStep, MulRy, Qft, Seq
from .greens import GammaInfo, build_u_gamma, build_u_green_1d, fit_alphas, fit_alphas_extended
from .polyfit import EncodingError, EncodingInfo, build_u_poly, encode_lookup, fit_grid
from .problem import IterationPlan, RveSpec, StrainField
from .transpile import count

EXECUTE_QUBIT_CAP = 26


class QubitBudgetError(ValueError):
    """Raised when an execute-mode run needs more qubits than the emulator cap."""

    def __init__(self, required: int, cap: int = EXECUTE_QUBIT_CAP):
        self.required = required
        self.cap = cap
        super().__init__(
            f"circuit needs {required} qubits, emulator cap is {cap}; "
            "run in count mode or shrink the grid / step count"
        )


@dataclass(frozen=True, eq=False)
class QubitLayout:
    """Wire assignment for one solve; qubit 0 is the least significant.

    Bottom-up: strain qubit d, component qubit c (2D), Fourier registers,
    extended-domain address bits, live ancilla bundle (p1, p0, l1, l0),
    slot counter (e, s_0..s_{S-2}), parked ancilla bundles for the spent
    steps, caller extras, and one clean work qubit w for MCX lowering.
    """

    dims: int
    size: int
    steps: int
    d: int
    k0: tuple
    p1: int
    p0: int
    e: int
    s: tuple
    parks: tuple
    w: int
    c: int | None = None
    k1: tuple = ()
    l1: int | None = None
    l0: int | None = None
    ext: tuple = ()
    extras: tuple = ()

    @property
    def num_qubits(self) -> int:
        return self.w + 1

    @property
    def anc_bundle(self) -> tuple:
        """Live ancilla qubits, ordered like each park bundle."""
        if self.dims == 1:
            return (self.p0, self.p1)
        return (self.p0, self.p1, self.l0, self.l1)

    @property
    def exchange_width(self) -> int:
        """Exchange acts on the contiguous band below the extras and w."""
        first_free = self.extras[0] if self.extras else self.w
        return first_free

    def slot_controls(self, t: int) -> tuple:
        """Control pattern pinning macroscopic slot t (consumed by step t+1)."""
        pat = [(self.e, 1)]
        for j in range(self.steps - 1):
            pat.append((self.s[j], 1 if j >= self.steps - 1 - t else 0))
        return tuple(pat)

    def field_qubits(self) -> tuple:
        """Readout register order: flat index k0 + N*k1 + N^2*component."""
        qs = self.k0 + self.k1
        if self.c is not None:
            qs = qs + (self.c,)
        return qs

    def readout_fixed(self) -> tuple:
        """Success pattern of the running chain after the final step."""
        fixed = [(self.d, 0), (self.e, 0), (self.w, 0)]
        fixed += [(q, 0) for q in self.s]
        fixed += [(self.p1, 1), (self.p0, 1)]
        if self.dims == 2:
            fixed += [(self.l1, 0), (self.l0, 0)]
        for bundle in self.parks:
            fixed += [(bundle[0], 1), (bundle[1], 1)]
            fixed += [(q, 0) for q in bundle[2:]]
        fixed += [(q, 0) for q in self.ext]
        return tuple(fixed)


def build_layout(spec: RveSpec, plan: IterationPlan, extended: bool = False, extra: int = 0) -> QubitLayout:
    """Assign wires bottom-up for a spec / plan pair.

    extra reserves qubits between the parked bundles and w for a caller
    (the ensemble driver); they sit outside the exchange band.
    """
    n = spec.n_qubits_per_dim
    steps = plan.steps
    if steps < 1:
        raise ValueError("need at least one iteration step")
    cursor = 0

    def take(width: int) -> tuple:
        nonlocal cursor
        qs = tuple(range(cursor, cursor + width))
        cursor += width
        return qs

    d = take(1)[0]
    c = take(1)[0] if spec.dims == 2 else None
    k0 = take(n)
    k1 = take(n) if spec.dims == 2 else ()
    ext = take(2) if (extended and spec.dims == 2) else ()
    p1 = take(1)[0]
    p0 = take(1)[0]
    l1 = take(1)[0] if spec.dims == 2 else None
    l0 = take(1)[0] if spec.dims == 2 else None
    e = take(1)[0]
    s = take(steps - 1)
    bundle_width = 2 if spec.dims == 1 else 4
    parks = tuple(take(bundle_width) for _ in range(steps - 1))
    extras = take(extra)
    w = take(1)[0]
    return QubitLayout(
        dims=spec.dims, size=spec.size, steps=steps, d=d, k0=k0, p1=p1, p0=p0,
        e=e, s=s, parks=parks, w=w, c=c, k1=k1, l1=l1, l0=l0, ext=ext, extras=extras,
    )


@dataclass(frozen=True)
class SolverConfig:
    """Encoding choices for the material and Green blocks."""

    encoding: str = "lookup"
    mu_degrees: object = None
    gamma_degrees: tuple | None = None
    extended: bool = False
    mu_lambda: float = 0.25
    gamma_lambda: float = 0.25


@dataclass(frozen=True, eq=False)
class Encodings:
    """Prebuilt per-step blocks and the amplitude factor one step applies."""

    mu_block: Block
    mu_info: EncodingInfo
    gamma_block: Block
    gamma_info: GammaInfo
    step_factor: float


def build_encodings(spec: RveSpec, layout: QubitLayout, config: SolverConfig | None = None) -> Encodings:
    """Build the polarisation encode (S1) and Green block (S3) once per solve."""
    config = config or SolverConfig()
    if config.encoding not in ("lookup", "multiplexed", "cascade"):
        raise ValueError(f"unknown encoding mode {config.encoding!r}")
    if config.extended and (spec.dims != 2 or config.encoding == "lookup"):
        raise ValueError("extended addressing needs the 2D polynomial Green block")
    e0 = ((layout.e, 0),)
    contrast = spec.mu - spec.mu0

    if config.encoding == "lookup":
        mu_block, mu_info = encode_lookup(
            contrast.flatten(order="F"), layout.k0 + layout.k1, layout.p1,
            controls=e0, value_on=1, name="u_poly",
        )
    else:
        degrees = config.mu_degrees
        if degrees is None:
            degrees = min(8, spec.size - 1)
            if spec.dims == 2:
                degrees = (degrees, degrees)
        registers = (layout.k0,) if spec.dims == 1 else (layout.k0, layout.k1)
        mu_fit = fit_grid(contrast, degrees)
        mu_block, mu_info = build_u_poly(
            mu_fit, registers, layout.p1, controls=e0, mode=config.encoding,
            cascade_lambda=config.mu_lambda, value_on=1, name="u_poly",
        )

    if spec.dims == 1:
        gamma_block, gamma_info = build_u_green_1d(layout.p0, spec.mu0, controls=e0)
    else:
        fits = None
        if config.encoding != "lookup":
            if config.extended:
                fits = fit_alphas_extended(spec.size, spec.mu0, config.gamma_degrees or (3, 4))
            else:
                fits = fit_alphas(spec.size, spec.mu0, config.gamma_degrees or (7, 6))
        inner, gamma_info = build_u_gamma(
            (layout.k0, layout.k1), layout.c, layout.p0, (layout.l0, layout.l1),
            spec.size, spec.mu0, mode=config.encoding, fits=fits,
            ext_qubits=layout.ext or None, bit_reversed=True,
            cascade_lambda=config.gamma_lambda,
        )
        gamma_block = Controlled(inner, e0, name="u_gamma")

    step_factor = mu_info.linear_factor * gamma_info.linear_factor
    return Encodings(mu_block, mu_info, gamma_block, gamma_info, step_factor)


@dataclass(frozen=True)
class NormalisationLedger:
    """Named amplitude factors whose product maps physical values to amplitudes."""

    entries: tuple

    @property
    def values(self) -> tuple:
        return tuple(v for _, v in self.entries)

    @property
    def product(self) -> float:
        return float(np.prod([v for _, v in self.entries])) if self.entries else 1.0


def build_ledger(spec: RveSpec, plan: IterationPlan, enc: Encodings) -> NormalisationLedger:
    """Ledger for the running chain after all steps of the iteration."""
    entries = [("slot-weight", 1.0 / np.sqrt(plan.steps + 1.0))]
    if spec.dims == 2:
        entries.append(("component-split", 2.0 ** -0.5))
    entries.append(("grid-uniform", float(spec.size) ** (-spec.dims / 2.0)))
    entries.append(("strain-scale", 1.0 / spec.size))
    for t in range(plan.steps):
        entries.append((f"step-{t + 1}", enc.step_factor))
    return NormalisationLedger(tuple(entries))


def _slot_chain(layout: QubitLayout) -> list:
    """Rotations preparing equal weight 1/sqrt(S+1) on each (s, e) subspace."""
    steps = [GateStep(gates.ry(layout.e, 2.0 * np.arccos(1.0 / np.sqrt(layout.steps + 1.0))))]
    for j in range(layout.steps - 2, -1, -1):
        ctl = ((layout.e, 1),) + tuple((layout.s[i], 1) for i in range(layout.steps - 2, j, -1))
        steps.append(GateStep(gates.ry(layout.s[j], 2.0 * np.arccos(1.0 / np.sqrt(j + 2.0)), controls=ctl)))
    return steps


def _arccos_values(values: np.ndarray) -> np.ndarray:
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak > 1.0 + 1e-12:
        raise EncodingError(f"strain values exceed the grid scale (peak {peak:.3g})")
    return 2.0 * np.arccos(np.clip(values, -1.0, 1.0))


def build_u_init(
    spec: RveSpec,
    gammabar,
    plan: IterationPlan,
    layout: QubitLayout,
    step_factor: float = 1.0,
) -> Block:
    """Prepare the initial strain chain and the per-slot macroscopic copies.

    Slot t carries the macroscopic strain pre-scaled by step_factor**(t+1) so
    the exchange at step t+1 injects it at the amplitude the running chain has
    decayed to by then.
    """
    n_pts = spec.size
    gbar = np.atleast_1d(np.asarray(gammabar, dtype=float))
    if gbar.shape != (spec.dims,):
        raise ValueError("gammabar must have one component per dimension")
    gamma0 = None if plan.gamma0 is None else np.asarray(plan.gamma0, dtype=float)

    steps = _slot_chain(layout)
    e0 = ((layout.e, 0),)
    if spec.dims == 2:
        steps.append(GateStep(gates.h(layout.c, controls=e0)))
    for q in layout.k0 + layout.k1:
        steps.append(GateStep(gates.h(q, controls=e0)))
    if plan.gamma0 is None:
        # Constant per component, so the grid selectors drop and the prep
        # stays O(1) in the grid size.
        if spec.dims == 1:
            steps.append(GateStep(gates.ry(layout.d, float(_arccos_values(gbar[:1] / n_pts)[0]), controls=e0)))
        else:
            steps.append(MulRy((layout.c,), _arccos_values(gbar / n_pts), layout.d, controls=e0))
    elif spec.dims == 1:
        steps.append(MulRy(layout.k0, _arccos_values(gamma0[0] / n_pts), layout.d, controls=e0))
    else:
        flat = gamma0.transpose(0, 2, 1).flatten()
        selectors = layout.k0 + layout.k1 + (layout.c,)
        steps.append(MulRy(selectors, _arccos_values(flat / n_pts), layout.d, controls=e0))

    for t in range(plan.steps):
        ctl = layout.slot_controls(t)
        scale = step_factor ** (t + 1) / n_pts
        if spec.dims == 2:
            steps.append(GateStep(gates.ry(layout.c, 2.0 * np.arctan2(gbar[1], gbar[0]), controls=ctl)))
            value = float(np.linalg.norm(gbar)) * scale / np.sqrt(2.0)
        else:
            value = gbar[0] * scale
        steps.append(GateStep(gates.ry(layout.d, float(_arccos_values(np.array([value]))[0]), controls=ctl)))
    return Seq("u_init", steps)


def transposition(qubits, idx_a: int, idx_b: int, name: str | None = "u_exch") -> Block:
    """Exact transposition of two basis states over the listed qubits.

    Gray-code palindrome: walk idx_a to idx_b one bit at a time, highest
    differing bit last on the way in, each X fully conditioned on the other
    listed qubits; 2m - 1 multi-controlled X for m differing bits.
    """
    qubits = tuple(qubits)
    if idx_a == idx_b:
        raise ValueError("transposition endpoints must differ")
    for idx in (idx_a, idx_b):
        if not 0 <= idx < (1 << len(qubits)):
            raise ValueError("basis index outside the register")
    diff = [b for b in range(len(qubits)) if (idx_a ^ idx_b) >> b & 1]
    order = [max(diff)] + [b for b in diff if b != max(diff)]
    walk = [idx_a]
    for b in order:
        walk.append(walk[-1] ^ (1 << b))
    forward = []
    for i, b in enumerate(order):
        ctl = tuple(
            (qubits[pos], walk[i] >> pos & 1) for pos in range(len(qubits)) if pos != b
        )
        forward.append(GateStep(gates.x(qubits[b], controls=ctl)))
    return Seq(name, forward[:-1] + [forward[-1]] + forward[-2::-1])


def exchange_pairs(layout: QubitLayout, step: int) -> tuple:
    """Basis-state pairs (k_a, k_b) swapped after the Green stage of a step.

    k_a is the running chain's zero mode at the success ancilla pattern with
    the spent bundles parked; k_b is macroscopic slot `step`. One pair per
    strain component.
    """
    if not 0 <= step < layout.steps:
        raise ValueError("step outside the plan")
    base_a = (1 << layout.p1) | (1 << layout.p0)
    for bundle in layout.parks[:step]:
        base_a |= (1 << bundle[0]) | (1 << bundle[1])
    base_b = 1 << layout.e
    for j in range(layout.steps - 1):
        if j >= layout.steps - 1 - step:
            base_b |= 1 << layout.s[j]
    if layout.dims == 1:
        return ((base_a, base_b),)
    return ((base_a, base_b), (base_a | (1 << layout.c), base_b | (1 << layout.c)))


def build_u_exch(layout: QubitLayout, k_a: int, k_b: int) -> Block:
    """Two-state exchange over the layout's contiguous exchange band."""
    width = layout.exchange_width
    for idx in (k_a, k_b):
        if not 0 <= idx < (1 << width):
            raise ValueError("exchange index outside the exchange band")
    return transposition(tuple(range(width)), k_a, k_b)


def build_u_irve(spec: RveSpec, layout: QubitLayout, enc: Encodings | None = None, step: int = 0) -> Block:
    """One fixed-point step: encode stress, QFT, Green, exchange, inverse QFT."""
    enc = enc or build_encodings(spec, layout)
    e0 = ((layout.e, 0),)
    steps = [enc.mu_block, Qft(layout.k0, controls=e0)]
    if spec.dims == 2:
        steps.append(Qft(layout.k1, controls=e0))
    steps.append(enc.gamma_block)
    for k_a, k_b in exchange_pairs(layout, step):
        steps.append(build_u_exch(layout, k_a, k_b))
    steps.append(Qft(layout.k0, inverse=True, controls=e0))
    if spec.dims == 2:
        steps.append(Qft(layout.k1, inverse=True, controls=e0))
    return Seq("u_irve", steps)


def build_u_iter(spec: RveSpec, plan: IterationPlan, layout: QubitLayout, enc: Encodings | None = None) -> Block:
    """All S steps with the slot-counter and ancilla-park swaps between them."""
    enc = enc or build_encodings(spec, layout)
    steps = []
    for i in range(plan.steps):
        steps.append(build_u_irve(spec, layout, enc, step=i))
        if i < plan.steps - 1:
            shifts = [gates.swap(layout.s[plan.steps - 2 - i], layout.e)]
            shifts += [gates.swap(a, b) for a, b in zip(layout.anc_bundle, layout.parks[i])]
            steps.append(Seq(f"shift_{i + 1}", shifts))
    return Seq("u_iter", steps)


def readout_strain(state, layout: QubitLayout, ledger: NormalisationLedger) -> StrainField:
    """Project onto the success pattern and undo the ledger scaling."""
    amps = state.read(layout.readout_fixed(), layout.field_qubits())
    mass = float(np.sum(np.abs(amps) ** 2))
    if mass < 1e-14:
        raise ValueError("physical branch is empty; wrong pattern or failed run")
    values = np.real(amps) / ledger.product
    n_pts = layout.size
    if layout.dims == 1:
        components = values.reshape(1, n_pts)
    else:
        components = values.reshape(2, n_pts, n_pts).transpose(0, 2, 1)
    return StrainField(components=components, ledger=ledger.values)


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Everything one solve produced; strain is None in count mode."""

    spec: RveSpec
    plan: IterationPlan
    mode: str
    num_qubits: int
    ledger: NormalisationLedger
    strain: StrainField | None = None
    counts: object = None


def solve(spec: RveSpec, gammabar, plan: IterationPlan, config: SolverConfig | None = None, mode: str = "execute") -> SolveReport:
    """Run the full pipeline: layout, encodings, init + iterate, read out.

    mode "execute" applies the circuit on the statevector emulator (qubit
    cap applies); mode "count" lowers it and returns gate counts instead.
    """
    config = config or SolverConfig()
    layout = build_layout(spec, plan, extended=config.extended)
    enc = build_encodings(spec, layout, config)
    ledger = build_ledger(spec, plan, enc)
    init = build_u_init(spec, gammabar, plan, layout, step_factor=enc.step_factor)
    iterate = build_u_iter(spec, plan, layout, enc)
    circuit = Seq("u_solve", [init, iterate])
    if mode == "count":
        return SolveReport(spec, plan, mode, layout.num_qubits, ledger,
                           counts=count(circuit, layout.num_qubits))
    if mode != "execute":
        raise ValueError(f"unknown mode {mode!r}")
    if layout.num_qubits > EXECUTE_QUBIT_CAP:
        raise QubitBudgetError(layout.num_qubits)
    from .state import StateVector

    sv = StateVector(layout.num_qubits)
    circuit.apply_to(sv)
    strain = readout_strain(sv, layout, ledger)
    return SolveReport(spec, plan, mode, layout.num_qubits, ledger, strain=strain)

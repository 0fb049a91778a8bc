"""Circuit blocks: composable units that can both run on a StateVector and
emit a flat gate list for the transpiler.

A block executes structurally (vectorised statevector updates) and emits the
equivalent mid-level gate sequence; the transpiler lowers that sequence to
{CNOT, U3}. Both paths describe the same unitary, which the equivalence tests
check matrix-against-matrix on small layouts.

Labels: a Seq may carry a name; emitted gates are attributed to the nearest
named ancestor, which is what the per-subblock count breakdown reports.
"""

from __future__ import annotations

import numpy as np

from . import gates
from .gates import Gate


def _merge(controls, extra) -> tuple[tuple[int, int], ...]:
    merged = tuple(controls) + tuple(extra)
    seen = {}
    for q, v in merged:
        if q in seen and seen[q] != v:
            raise ValueError(f"conflicting control values on qubit {q}")
        seen[q] = v
    return tuple(dict.fromkeys(merged))


class Block:
    """Base class; subclasses implement apply_to, emit, qubits, adjoint."""

    def apply_to(self, sv, extra_controls=()) -> None:
        raise NotImplementedError

    def emit(self, out: list, label: str | None = None, extra_controls=()) -> None:
        raise NotImplementedError

    def qubits(self) -> set[int]:
        raise NotImplementedError

    def adjoint(self) -> "Block":
        raise NotImplementedError

    def gate_list(self, extra_controls=()) -> list[tuple[str | None, Gate]]:
        out: list[tuple[str | None, Gate]] = []
        self.emit(out, None, extra_controls)
        return out


class GateStep(Block):
    def __init__(self, gate: Gate):
        self.gate = gate

    def apply_to(self, sv, extra_controls=()) -> None:
        g = self.gate
        if extra_controls:
            g = Gate(g.name, g.targets, g.params, _merge(g.controls, extra_controls), mat=g.mat)
        sv.apply(g)

    def emit(self, out, label=None, extra_controls=()) -> None:
        g = self.gate
        if extra_controls:
            g = Gate(g.name, g.targets, g.params, _merge(g.controls, extra_controls), mat=g.mat)
        out.append((label, g))

    def qubits(self) -> set[int]:
        return self.gate.qubits()

    def adjoint(self) -> "GateStep":
        return GateStep(self.gate.adjoint())


class Controlled(Block):
    """Wrap a block so every gate it emits gains the given controls."""

    def __init__(self, block: Block, controls, name: str | None = None):
        self.block = block
        self.controls = tuple(controls)
        self.name = name

    def apply_to(self, sv, extra_controls=()) -> None:
        self.block.apply_to(sv, _merge(self.controls, extra_controls))

    def emit(self, out, label=None, extra_controls=()) -> None:
        inner = self.name if self.name is not None else label
        self.block.emit(out, inner, _merge(self.controls, extra_controls))

    def qubits(self) -> set[int]:
        return self.block.qubits() | {q for q, _ in self.controls}

    def adjoint(self) -> "Controlled":
        return Controlled(self.block.adjoint(), self.controls, self.name)


class Seq(Block):
    def __init__(self, name: str | None, steps):
        self.name = name
        self.steps: tuple[Block, ...] = tuple(
            GateStep(s) if isinstance(s, Gate) else s for s in steps
        )

    def apply_to(self, sv, extra_controls=()) -> None:
        for step in self.steps:
            step.apply_to(sv, extra_controls)

    def emit(self, out, label=None, extra_controls=()) -> None:
        inner = self.name if self.name is not None else label
        for step in self.steps:
            step.emit(out, inner, extra_controls)

    def qubits(self) -> set[int]:
        qs: set[int] = set()
        for step in self.steps:
            qs |= step.qubits()
        return qs

    def adjoint(self) -> "Seq":
        return Seq(self.name, [s.adjoint() for s in reversed(self.steps)])


def _bit_reversal(n: int) -> np.ndarray:
    values = np.arange(1 << n)
    rev = np.zeros_like(values)
    for bit in range(n):
        rev |= ((values >> bit) & 1) << (n - 1 - bit)
    return rev


class Qft(Block):
    """Circuit-form QFT: the swapless H/CP pattern.

    Its unitary is the DFT composed with a bit reversal of the register
    (output bit j lands on wire n-1-j), which is what n Hadamards plus
    n(n-1)/2 controlled phases can realise without swap gates. Callers that
    work in the Fourier domain between a Qft and its inverse index their
    tables through the bit reversal; the inverse undoes it, so a
    Qft ... Qft(inverse) sandwich equals a plain DFT sandwich.
    """

    def __init__(self, qubits, inverse: bool = False, controls=()):
        self.register = tuple(qubits)
        self.inverse = inverse
        self.controls = tuple(controls)
        n = len(self.register)
        if self.register != tuple(range(self.register[0], self.register[0] + n)):
            raise ValueError("QFT register must be contiguous ascending qubits")

    def apply_to(self, sv, extra_controls=()) -> None:
        merged = _merge(self.controls, extra_controls)
        rev = _bit_reversal(len(self.register))
        if self.inverse:
            sv.apply_register_permutation(self.register, rev, merged)
            sv.apply_qft(self.register, inverse=True, controls=merged)
        else:
            sv.apply_qft(self.register, inverse=False, controls=merged)
            sv.apply_register_permutation(self.register, rev, merged)

    def _forward_gates(self, merged) -> list[Gate]:
        q = self.register
        out = []
        for w in range(len(q) - 1, -1, -1):
            out.append(gates.h(q[w], controls=merged))
            for d in range(1, w + 1):
                out.append(
                    gates.phase(q[w], np.pi / (1 << d), controls=_merge(merged, ((q[w - d], 1),)))
                )
        return out

    def emit(self, out, label=None, extra_controls=()) -> None:
        merged = _merge(self.controls, extra_controls)
        seq = self._forward_gates(merged)
        if self.inverse:
            seq = [g.adjoint() for g in reversed(seq)]
        out.extend((label, g) for g in seq)

    def qubits(self) -> set[int]:
        return set(self.register) | {q for q, _ in self.controls}

    def adjoint(self) -> "Qft":
        return Qft(self.register, not self.inverse, self.controls)


def _mottonen_angles(thetas: np.ndarray) -> np.ndarray:
    """Rotation angles for the uniformly controlled RY ladder.

    phi_i = 2^-m * sum_j (-1)^{popcount(j & gray(i))} theta_j, computed via a
    fast Walsh-Hadamard transform and a Gray-code reorder.
    """
    a = np.array(thetas, dtype=float)
    n = a.size
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :] + a[:, 1, :]
        bottom = a[:, 0, :] - a[:, 1, :]
        a = np.stack([top, bottom], axis=1).reshape(-1)
        h *= 2
    values = np.arange(n)
    gray = values ^ (values >> 1)
    return a[gray] / n


def _ruler_controls(m: int) -> list[int]:
    """Control-bit index after each rotation: lowest set bit of i+1, capped."""
    out = []
    for i in range(1, 1 << m):
        out.append((i & -i).bit_length() - 1)
    out.append(m - 1)
    return out


class MulRy(Block):
    """Multiplexed RY: rotate target by angles[v] for selector value v.

    Selectors are listed LSB first. Emission uses the uniformly controlled
    rotation ladder (2^m RY + 2^m CNOT); extra controls are absorbed as
    additional selector bits whose non-matching half carries zero angles.
    """

    def __init__(self, selectors, angles, target: int, controls=()):
        self.selectors = tuple(selectors)
        self.angles = np.asarray(angles, dtype=float)
        self.target = target
        self.controls = tuple(controls)
        if self.angles.shape != (1 << len(self.selectors),):
            raise ValueError("angle table length must be 2**len(selectors)")

    def apply_to(self, sv, extra_controls=()) -> None:
        merged = _merge(self.controls, extra_controls)
        sv.apply_mulry(self.selectors, self.angles, self.target, merged)

    def emit(self, out, label=None, extra_controls=()) -> None:
        merged = _merge(self.controls, extra_controls)
        selectors = list(self.selectors)
        angles = self.angles
        for q, v in merged:
            if q in selectors or q == self.target:
                raise ValueError(f"control qubit {q} overlaps the multiplexer")
            zero = np.zeros_like(angles)
            angles = np.concatenate([zero, angles] if v == 1 else [angles, zero])
            selectors.append(q)
        m = len(selectors)
        if m == 0:
            out.append((label, gates.ry(self.target, float(angles[0]))))
            return
        phis = _mottonen_angles(angles)
        ctrls = _ruler_controls(m)
        for i in range(1 << m):
            out.append((label, gates.ry(self.target, float(phis[i]))))
            out.append((label, gates.cnot(selectors[ctrls[i]], self.target)))

    def qubits(self) -> set[int]:
        return set(self.selectors) | {self.target} | {q for q, _ in self.controls}

    def adjoint(self) -> "MulRy":
        return MulRy(self.selectors, -self.angles, self.target, self.controls)

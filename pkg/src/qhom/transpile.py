"""Lower circuit blocks to the universal {CNOT, U3} gate set and count gates.

Rules (time order, exact unless noted):
  X            = U3(pi, 0, pi);  H = U3(pi/2, 0, pi);  Z/P(t) = U3(0, 0, t)
  RY(t)        = U3(t, 0, 0)
  CP(t)        = P(t/2)_c  P(t/2)_t  CX  P(-t/2)_t  CX
  C-RY(t)      = RY(t/2)  CX  RY(-t/2)  CX
  C-H          = RY(pi/4)  CX  RY(-pi/4)            (H lies in the Y-rotation plane of X)
  SWAP         = CX(a,b) CX(b,a) CX(a,b);  C-SWAP = CX(b,a)  CCX(c,a;b)  CX(b,a)
  Toffoli      = standard 6 CNOT + 9 U3 network
  C^m X, m>=3  = dirty-borrow Toffoli ladder (4(m-2) Toffolis) when m-2 spare
                 qubits exist, else a two-halves split through one work qubit
  C-U3/unitary = ABC decomposition U = P(d) A X B X C with the leftover phase
                 pushed onto the controls as a multi-controlled P
  C^m P        = CP(t/2) on the last control, conjugated by C^{m-1}X, recursing

A bare generic unitary drops its global phase when lowered (documented); every
controlled lowering is exact. No peephole merging happens by default; an
optional adjacent-U3 merge pass exists for exploration only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from .blocks import Block
from .gates import Gate
from .state import StateVector


class LoweringError(ValueError):
    pass


def _u3(q: int, theta: float, phi: float, lam: float) -> Gate:
    return gates.u3(q, theta, phi, lam)


def _cnot(c: int, t: int) -> Gate:
    return gates.cnot(c, t)


def is_terminal(g: Gate) -> bool:
    if g.name == "u3" and not g.controls:
        return True
    return g.name == "x" and len(g.controls) == 1 and g.controls[0][1] == 1


def _zyz(mat: np.ndarray) -> tuple[float, float, float, float]:
    """Return (alpha, beta, gamma, delta) with U = e^{i delta} P(alpha) RY(beta) P(gamma)."""
    a, b = mat[0, 0], mat[0, 1]
    c = mat[1, 0]
    beta = 2.0 * np.arctan2(abs(c), abs(a))
    if abs(a) < 1e-12:
        delta = 0.0
        alpha = float(np.angle(c))
        gamma = float(np.angle(-b))
    elif abs(c) < 1e-12:
        delta = float(np.angle(a))
        alpha = float(np.angle(mat[1, 1] / a))
        gamma = 0.0
    else:
        delta = float(np.angle(a))
        alpha = float(np.angle(c)) - delta
        gamma = float(np.angle(-b)) - delta
    return alpha, float(beta), gamma, delta


def _emit_toffoli(out, label, c0: int, c1: int, t: int) -> None:
    quarter = np.pi / 4.0
    out.append((label, _u3(t, np.pi / 2.0, 0.0, np.pi)))
    out.append((label, _cnot(c1, t)))
    out.append((label, _u3(t, 0.0, 0.0, -quarter)))
    out.append((label, _cnot(c0, t)))
    out.append((label, _u3(t, 0.0, 0.0, quarter)))
    out.append((label, _cnot(c1, t)))
    out.append((label, _u3(t, 0.0, 0.0, -quarter)))
    out.append((label, _cnot(c0, t)))
    out.append((label, _u3(t, 0.0, 0.0, quarter)))
    out.append((label, _u3(t, np.pi / 2.0, 0.0, np.pi)))
    out.append((label, _u3(c1, 0.0, 0.0, quarter)))
    out.append((label, _cnot(c0, c1)))
    out.append((label, _u3(c0, 0.0, 0.0, quarter)))
    out.append((label, _u3(c1, 0.0, 0.0, -quarter)))
    out.append((label, _cnot(c0, c1)))


def _emit_mcx_ladder(out, label, ctrl: list[int], t: int, borrows: list[int]) -> None:
    """4(m-2) Toffoli network with m-2 borrow qubits of arbitrary state."""
    m = len(ctrl)
    descent = [(ctrl[i + 1], borrows[i - 1], borrows[i]) for i in range(m - 3, 0, -1)]
    for _ in range(2):
        _emit_toffoli(out, label, ctrl[m - 1], borrows[m - 3], t)
        for c, b_in, b_out in descent:
            _emit_toffoli(out, label, c, b_in, b_out)
        _emit_toffoli(out, label, ctrl[0], ctrl[1], borrows[0])
        for c, b_in, b_out in reversed(descent):
            _emit_toffoli(out, label, c, b_in, b_out)


def _emit_mcx(out, label, ctrl: list[int], t: int, num_qubits: int) -> None:
    m = len(ctrl)
    if m == 0:
        out.append((label, _u3(t, np.pi, 0.0, np.pi)))
        return
    if m == 1:
        out.append((label, _cnot(ctrl[0], t)))
        return
    if m == 2:
        _emit_toffoli(out, label, ctrl[0], ctrl[1], t)
        return
    busy = set(ctrl) | {t}
    spare = [q for q in range(num_qubits) if q not in busy]
    if len(spare) >= m - 2:
        _emit_mcx_ladder(out, label, ctrl, t, spare[: m - 2])
        return
    if not spare:
        # No free qubit at all: X = H Z H with the phase recursion, which
        # bottoms out in Toffolis and CPs without borrowing anything.
        out.append((label, _u3(t, np.pi / 2.0, 0.0, np.pi)))
        _emit_mcp(out, label, ctrl, t, np.pi, num_qubits)
        out.append((label, _u3(t, np.pi / 2.0, 0.0, np.pi)))
        return
    bridge = spare[0]
    half = (m + 1) // 2
    first, second = ctrl[:half], ctrl[half:] + [bridge]
    for _ in range(2):
        _emit_mcx(out, label, first, bridge, num_qubits)
        _emit_mcx(out, label, second, t, num_qubits)


def _emit_cp(out, label, c: int, t: int, theta: float) -> None:
    half = theta / 2.0
    out.append((label, _u3(c, 0.0, 0.0, half)))
    out.append((label, _u3(t, 0.0, 0.0, half)))
    out.append((label, _cnot(c, t)))
    out.append((label, _u3(t, 0.0, 0.0, -half)))
    out.append((label, _cnot(c, t)))


def _emit_mcp(out, label, ctrl: list[int], t: int, theta: float, num_qubits: int) -> None:
    if not ctrl:
        out.append((label, _u3(t, 0.0, 0.0, theta)))
        return
    if len(ctrl) == 1:
        _emit_cp(out, label, ctrl[0], t, theta)
        return
    last, rest = ctrl[-1], ctrl[:-1]
    _emit_cp(out, label, last, t, theta / 2.0)
    _emit_mcx(out, label, rest, last, num_qubits)
    _emit_cp(out, label, last, t, -theta / 2.0)
    _emit_mcx(out, label, rest, last, num_qubits)
    _emit_mcp(out, label, rest, t, theta / 2.0, num_qubits)


def _emit_controlled_zyz(out, label, ctrl, t, alpha, beta, gamma, delta, num_qubits) -> None:
    out.append((label, _u3(t, 0.0, 0.0, (gamma - alpha) / 2.0)))
    _emit_mcx(out, label, ctrl, t, num_qubits)
    out.append((label, _u3(t, -beta / 2.0, 0.0, -(gamma + alpha) / 2.0)))
    _emit_mcx(out, label, ctrl, t, num_qubits)
    out.append((label, _u3(t, beta / 2.0, alpha, 0.0)))
    phase_on_controls = delta + (alpha + gamma) / 2.0
    if abs(phase_on_controls) > 1e-15:
        _emit_mcp(out, label, ctrl[:-1], ctrl[-1], phase_on_controls, num_qubits)


def _lower_closed(out, label, g: Gate, num_qubits: int) -> None:
    ctrl = [q for q, _ in g.controls]
    m = len(ctrl)

    if g.name == "swap":
        a, b = g.targets
        if m == 0:
            out.append((label, _cnot(a, b)))
            out.append((label, _cnot(b, a)))
            out.append((label, _cnot(a, b)))
        else:
            out.append((label, _cnot(b, a)))
            _emit_mcx(out, label, ctrl + [a], b, num_qubits)
            out.append((label, _cnot(b, a)))
        return

    (t,) = g.targets

    if g.name == "x":
        _emit_mcx(out, label, ctrl, t, num_qubits)
        return
    if g.name in ("z", "phase"):
        theta = np.pi if g.name == "z" else g.params[0]
        _emit_mcp(out, label, ctrl, t, theta, num_qubits)
        return
    if g.name == "h":
        if m == 0:
            out.append((label, _u3(t, np.pi / 2.0, 0.0, np.pi)))
            return
        out.append((label, _u3(t, np.pi / 4.0, 0.0, 0.0)))
        _emit_mcx(out, label, ctrl, t, num_qubits)
        out.append((label, _u3(t, -np.pi / 4.0, 0.0, 0.0)))
        return
    if g.name == "ry":
        theta = g.params[0]
        if m == 0:
            out.append((label, _u3(t, theta, 0.0, 0.0)))
            return
        out.append((label, _u3(t, theta / 2.0, 0.0, 0.0)))
        _emit_mcx(out, label, ctrl, t, num_qubits)
        out.append((label, _u3(t, -theta / 2.0, 0.0, 0.0)))
        _emit_mcx(out, label, ctrl, t, num_qubits)
        return
    if g.name == "u3":
        theta, phi, lam = g.params
        if m == 0:
            out.append((label, _u3(t, theta, phi, lam)))
            return
        _emit_controlled_zyz(out, label, ctrl, t, phi, theta, lam, 0.0, num_qubits)
        return
    if g.name == "unitary":
        alpha, beta, gamma, delta = _zyz(g.mat)
        if m == 0:
            # Global phase e^{i delta} is dropped for the uncontrolled case.
            out.append((label, _u3(t, beta, alpha, gamma)))
            return
        _emit_controlled_zyz(out, label, ctrl, t, alpha, beta, gamma, delta, num_qubits)
        return
    raise LoweringError(f"cannot lower gate kind {g.name!r}")


def _lower_gate(out, label, g: Gate, num_qubits: int) -> None:
    opens = [q for q, v in g.controls if v == 0]
    if not opens:
        _lower_closed(out, label, g, num_qubits)
        return
    for q in opens:
        out.append((label, _u3(q, np.pi, 0.0, np.pi)))
    closed = Gate(g.name, g.targets, g.params, tuple((q, 1) for q, _ in g.controls), mat=g.mat)
    _lower_closed(out, label, closed, num_qubits)
    for q in opens:
        out.append((label, _u3(q, np.pi, 0.0, np.pi)))


def lower_labeled(block: Block, num_qubits: int) -> list[tuple[str | None, Gate]]:
    out: list[tuple[str | None, Gate]] = []
    for label, g in block.gate_list():
        _lower_gate(out, label, g, num_qubits)
    return out


def lower(block: Block, num_qubits: int) -> list[Gate]:
    return [g for _, g in lower_labeled(block, num_qubits)]


def merge_adjacent_u3(seq: list[Gate]) -> list[Gate]:
    """Optional peephole pass: fuse neighbouring U3 gates on the same qubit.

    Drops global phase per fusion; off for all acceptance runs.
    """
    out: list[Gate] = []
    for g in seq:
        if (
            g.name == "u3"
            and out
            and out[-1].name == "u3"
            and out[-1].targets == g.targets
        ):
            prev = out.pop()
            mat = g.matrix() @ prev.matrix()
            alpha, beta, gamma, _ = _zyz(mat)
            out.append(_u3(g.targets[0], beta, alpha, gamma))
        else:
            out.append(g)
    return out


# -- counting ----------------------------------------------------------


@dataclass(frozen=True)
class GateCountReport:
    cnot: int
    u3: int
    depth: int
    by_block: dict

    @property
    def total(self) -> int:
        return self.cnot + self.u3

    def row(self, index) -> tuple:
        return (index, self.cnot, self.u3, self.total, self.depth)


def depth_of(seq) -> int:
    frontier: dict[int, int] = {}
    depth = 0
    for g in seq:
        qs = g.qubits()
        d = 1 + max((frontier.get(q, 0) for q in qs), default=0)
        for q in qs:
            frontier[q] = d
        depth = max(depth, d)
    return depth


def count(block: Block, num_qubits: int) -> GateCountReport:
    labeled = lower_labeled(block, num_qubits)
    by_block: dict[str, list[int]] = {}
    cnot = u3 = 0
    for label, g in labeled:
        key = label if label is not None else "(top)"
        tally = by_block.setdefault(key, [0, 0])
        if g.name == "x":
            cnot += 1
            tally[0] += 1
        else:
            u3 += 1
            tally[1] += 1
    return GateCountReport(
        cnot=cnot,
        u3=u3,
        depth=depth_of([g for _, g in labeled]),
        by_block={k: (v[0], v[1]) for k, v in by_block.items()},
    )


def scaling_table(family, indices) -> list[tuple]:
    """Count a block family over a list of indices; family(i) -> (block, num_qubits)."""
    rows = []
    for index in indices:
        block, nq = family(index)
        rows.append((index, count(block, nq)))
    return rows


def csv_lines(table) -> list[str]:
    lines = ["index,cnot,u3,total,depth"]
    for index, report in table:
        lines.append(",".join(str(v) for v in report.row(index)))
    return lines


# -- matrix helpers (tests and small-scale verification) ----------------


def gates_matrix(seq, num_qubits: int) -> np.ndarray:
    dim = 1 << num_qubits
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        amps = np.zeros(dim, dtype=np.complex128)
        amps[j] = 1.0
        sv = StateVector(num_qubits, amps)
        for g in seq:
            sv.apply(g)
        mat[:, j] = sv.amps
    return mat


def block_matrix(block: Block, num_qubits: int) -> np.ndarray:
    dim = 1 << num_qubits
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        amps = np.zeros(dim, dtype=np.complex128)
        amps[j] = 1.0
        sv = StateVector(num_qubits, amps)
        block.apply_to(sv)
        mat[:, j] = sv.amps
    return mat

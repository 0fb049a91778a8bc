"""Dense statevector emulator.

Amplitudes live in a flat complex128 array of length 2**num_qubits with the
little-endian convention: bit q of a flat index is the value of qubit q.
Gates are applied in place through reshaped views, so no full-size temporary
is ever allocated. The QFT is applied as an FFT along the register axis,
which keeps multi-register circuits tractable well past the point where a
gate-by-gate QFT would be annoying to wait for.
"""

from __future__ import annotations

import numpy as np

from .gates import Gate

_NORM_TOL = 1e-9


class StateVector:
    def __init__(self, num_qubits: int, amps: np.ndarray | None = None):
        if num_qubits < 1:
            raise ValueError("need at least one qubit")
        self.num_qubits = num_qubits
        if amps is None:
            self.amps = np.zeros(1 << num_qubits, dtype=np.complex128)
            self.amps[0] = 1.0
        else:
            amps = np.asarray(amps, dtype=np.complex128)
            if amps.shape != (1 << num_qubits,):
                raise ValueError("amplitude array has the wrong length")
            self.amps = amps.copy()

    # -- bookkeeping ---------------------------------------------------

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def assert_normalised(self, tol: float = _NORM_TOL) -> None:
        drift = abs(self.norm() - 1.0)
        if drift > tol:
            raise AssertionError(f"norm drift {drift:.3e} exceeds {tol:.1e}")

    def amplitude(self, index: int) -> complex:
        return complex(self.amps[index])

    def _axis(self, q: int) -> int:
        return self.num_qubits - 1 - q

    def _check_qubits(self, qubits, controls) -> None:
        touched = set()
        for q in qubits:
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"qubit {q} out of range")
            if q in touched:
                raise ValueError(f"qubit {q} used twice")
            touched.add(q)
        for q, v in controls:
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"control qubit {q} out of range")
            if q in touched:
                raise ValueError(f"qubit {q} is both control and operand")
            touched.add(q)
            if v not in (0, 1):
                raise ValueError("control value must be 0 or 1")

    # -- gate application ----------------------------------------------

    def apply(self, gate: Gate) -> None:
        self._check_qubits(gate.targets, gate.controls)
        tensor = self.amps.reshape((2,) * self.num_qubits)
        idx: list = [slice(None)] * self.num_qubits
        for q, v in gate.controls:
            idx[self._axis(q)] = v

        if gate.name == "swap":
            a, b = gate.targets
            lo = list(idx)
            hi = list(idx)
            lo[self._axis(a)], lo[self._axis(b)] = 0, 1
            hi[self._axis(a)], hi[self._axis(b)] = 1, 0
            tmp = tensor[tuple(lo)].copy()
            tensor[tuple(lo)] = tensor[tuple(hi)]
            tensor[tuple(hi)] = tmp
            return

        (target,) = gate.targets
        i0 = list(idx)
        i1 = list(idx)
        i0[self._axis(target)] = 0
        i1[self._axis(target)] = 1
        i0t, i1t = tuple(i0), tuple(i1)

        if gate.name == "x":
            tmp = tensor[i0t].copy()
            tensor[i0t] = tensor[i1t]
            tensor[i1t] = tmp
            return
        if gate.name == "z":
            tensor[i1t] *= -1.0
            return
        if gate.name == "phase":
            tensor[i1t] *= np.exp(1j * gate.params[0])
            return

        mat = gate.matrix()
        a0 = tensor[i0t]
        a1 = tensor[i1t]
        n0 = mat[0, 0] * a0 + mat[0, 1] * a1
        n1 = mat[1, 0] * a0 + mat[1, 1] * a1
        tensor[i0t] = n0
        tensor[i1t] = n1

    def apply_all(self, gates) -> None:
        for gate in gates:
            self.apply(gate)

    def apply_qft(self, qubits, inverse: bool = False, controls=()) -> None:
        """QFT over a contiguous little-endian register, as an FFT.

        Forward kernel is e^{+2 pi i jk / 2^n} / sqrt(2^n).
        """
        qubits = tuple(qubits)
        self._check_qubits(qubits, controls)
        n = len(qubits)
        start = qubits[0]
        if qubits != tuple(range(start, start + n)):
            raise ValueError("QFT register must be contiguous ascending qubits")
        q_total = self.num_qubits
        high = q_total - start - n
        shape = (2,) * high + (1 << n,) + (2,) * start
        tensor = self.amps.reshape(shape)

        idx: list = [slice(None)] * len(shape)
        high_controls = 0
        for q, v in controls:
            if q >= start + n:
                idx[q_total - 1 - q] = v
                high_controls += 1
            else:
                idx[high + 1 + (start - 1 - q)] = v
        sub = tensor[tuple(idx)]
        axis = high - high_controls
        root = np.sqrt(float(1 << n))
        if inverse:
            out = np.fft.fft(sub, axis=axis) / root
        else:
            out = np.fft.ifft(sub, axis=axis) * root
        tensor[tuple(idx)] = out

    def apply_register_permutation(self, qubits, perm, controls=()) -> None:
        """Relabel register values: new amplitude at value j = old amplitude at perm[j]."""
        qubits = tuple(qubits)
        self._check_qubits(qubits, controls)
        n = len(qubits)
        start = qubits[0]
        if qubits != tuple(range(start, start + n)):
            raise ValueError("register must be contiguous ascending qubits")
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(1 << n)):
            raise ValueError("not a permutation of the register values")
        q_total = self.num_qubits
        high = q_total - start - n
        shape = (2,) * high + (1 << n,) + (2,) * start
        tensor = self.amps.reshape(shape)
        idx: list = [slice(None)] * len(shape)
        high_controls = 0
        for q, v in controls:
            if q >= start + n:
                idx[q_total - 1 - q] = v
                high_controls += 1
            else:
                idx[high + 1 + (start - 1 - q)] = v
        sub = tensor[tuple(idx)]
        axis = high - high_controls
        tensor[tuple(idx)] = np.take(sub, perm, axis=axis)

    def apply_mulry(self, selectors, angles, target: int, controls=()) -> None:
        """RY(angles[v]) on target for each selector-register value v.

        Selectors are listed LSB first; angles has length 2**len(selectors).
        """
        selectors = tuple(selectors)
        angles = np.asarray(angles, dtype=float)
        self._check_qubits(selectors + (target,), controls)
        m = len(selectors)
        if angles.shape != (1 << m,):
            raise ValueError("angle table length must be 2**len(selectors)")

        tensor = self.amps.reshape((2,) * self.num_qubits)
        idx: list = [slice(None)] * self.num_qubits
        ctrl_qubits = set()
        for q, v in controls:
            idx[self._axis(q)] = v
            ctrl_qubits.add(q)
        view = tensor[tuple(idx)]

        remaining = [q for q in range(self.num_qubits - 1, -1, -1) if q not in ctrl_qubits]
        pos = {q: i for i, q in enumerate(remaining)}
        src = [pos[target]] + [pos[s] for s in reversed(selectors)]
        work = np.moveaxis(view, src, range(m + 1))

        half = angles / 2.0
        trailing = (1,) * (work.ndim - 1 - m)
        cos = np.cos(half).reshape((2,) * m + trailing)
        sin = np.sin(half).reshape((2,) * m + trailing)
        a0 = work[0]
        a1 = work[1]
        n0 = cos * a0 - sin * a1
        n1 = sin * a0 + cos * a1
        work[0] = n0
        work[1] = n1

    # -- measurement and readout ----------------------------------------

    def probability(self, fixed) -> float:
        """Probability mass on the subspace where each (qubit, bit) holds."""
        tensor = self.amps.reshape((2,) * self.num_qubits)
        idx: list = [slice(None)] * self.num_qubits
        for q, v in fixed:
            idx[self._axis(q)] = v
        view = tensor[tuple(idx)]
        return float(np.sum(np.abs(view) ** 2))

    def project(self, fixed) -> tuple[float, "StateVector"]:
        """Project onto a (qubit, bit) pattern; return (probability, renormalised state)."""
        prob = self.probability(fixed)
        if prob <= 0.0:
            raise ValueError("projection onto a zero-probability subspace")
        amps = np.zeros_like(self.amps)
        tensor_src = self.amps.reshape((2,) * self.num_qubits)
        tensor_dst = amps.reshape((2,) * self.num_qubits)
        idx: list = [slice(None)] * self.num_qubits
        for q, v in fixed:
            idx[self._axis(q)] = v
        tensor_dst[tuple(idx)] = tensor_src[tuple(idx)] / np.sqrt(prob)
        return prob, StateVector(self.num_qubits, amps)

    def read(self, fixed, free) -> np.ndarray:
        """Amplitudes over the free qubits with everything in `fixed` pinned.

        Returns an array of length 2**len(free), little-endian in the order
        the free qubits are listed.
        """
        base = 0
        for q, v in fixed:
            base |= int(v) << q
        free = list(free)
        count = 1 << len(free)
        offsets = np.zeros(count, dtype=np.int64)
        values = np.arange(count)
        for j, q in enumerate(free):
            offsets += ((values >> j) & 1) << q
        return self.amps[base + offsets]

    def sample(self, shots: int, seed: int, qubits=None) -> dict[int, int]:
        """Multinomial shot counts over the given qubits (default: all)."""
        if qubits is None:
            qubits = list(range(self.num_qubits))
        qubits = list(qubits)
        probs = np.abs(self.amps) ** 2
        tensor = probs.reshape((2,) * self.num_qubits)
        keep_axes = [self._axis(q) for q in qubits]
        drop = tuple(ax for ax in range(self.num_qubits) if ax not in keep_axes)
        marg = tensor.sum(axis=drop) if drop else tensor
        # Remaining axes are in descending qubit order; reorder so axis 0 is
        # the last listed qubit, making the C-order flat index little-endian
        # in the listed order.
        desc = sorted(qubits, reverse=True)
        order = [desc.index(q) for q in reversed(qubits)]
        flat = np.ascontiguousarray(np.transpose(marg, order)).ravel()
        flat = np.clip(flat, 0.0, None)
        flat /= flat.sum()
        rng = np.random.default_rng(seed)
        counts = rng.multinomial(shots, flat)
        return {int(v): int(c) for v, c in enumerate(counts) if c}

"""Gate vocabulary shared by the emulator and the transpiler.

A gate is a small frozen record: a name, target qubits, real parameters and a
control list. Controls are (qubit, value) pairs, so open (value 0) and closed
(value 1) controls are both first class. Multi-controlled X is just an "x"
gate with several controls; CNOT is an "x" gate with one closed control.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

SINGLE_QUBIT_NAMES = ("h", "x", "z", "ry", "u3", "phase", "unitary")
GATE_NAMES = SINGLE_QUBIT_NAMES + ("swap",)

_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    controls: tuple[tuple[int, int], ...] = ()
    mat: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.name not in GATE_NAMES:
            raise ValueError(f"unknown gate name {self.name!r}")
        touched = set(self.targets)
        if len(touched) != len(self.targets):
            raise ValueError("duplicate target qubits")
        for q, v in self.controls:
            if q in touched:
                raise ValueError(f"qubit {q} is both control and target")
            touched.add(q)
            if v not in (0, 1):
                raise ValueError("control value must be 0 or 1")

    def qubits(self) -> set[int]:
        return set(self.targets) | {q for q, _ in self.controls}

    def key(self) -> tuple:
        """Hashable identity used by determinism tests."""
        return (self.name, self.targets, self.params, self.controls)

    def matrix(self) -> np.ndarray:
        """Local unitary on the target qubits (controls excluded)."""
        if self.name == "h":
            return np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]])
        if self.name == "x":
            return np.array([[0.0, 1.0], [1.0, 0.0]])
        if self.name == "z":
            return np.array([[1.0, 0.0], [0.0, -1.0]])
        if self.name == "ry":
            (theta,) = self.params
            c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
            return np.array([[c, -s], [s, c]])
        if self.name == "u3":
            theta, phi, lam = self.params
            c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
            return np.array(
                [
                    [c, -np.exp(1j * lam) * s],
                    [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
                ]
            )
        if self.name == "phase":
            (theta,) = self.params
            return np.array([[1.0, 0.0], [0.0, np.exp(1j * theta)]])
        if self.name == "unitary":
            assert self.mat is not None
            return self.mat
        if self.name == "swap":
            m = np.eye(4)
            m[[1, 2]] = m[[2, 1]]
            return m
        raise AssertionError(self.name)

    def adjoint(self) -> Gate:
        if self.name in ("h", "x", "z", "swap"):
            return self
        if self.name in ("ry", "phase"):
            return dataclasses.replace(self, params=(-self.params[0],))
        if self.name == "u3":
            theta, phi, lam = self.params
            return dataclasses.replace(self, params=(-theta, -lam, -phi))
        if self.name == "unitary":
            assert self.mat is not None
            return dataclasses.replace(self, mat=self.mat.conj().T)
        raise AssertionError(self.name)


def _ctrls(controls) -> tuple[tuple[int, int], ...]:
    return tuple((int(q), int(v)) for q, v in controls)


def h(q: int, controls=()) -> Gate:
    return Gate("h", (q,), (), _ctrls(controls))


def x(q: int, controls=()) -> Gate:
    return Gate("x", (q,), (), _ctrls(controls))


def z(q: int, controls=()) -> Gate:
    return Gate("z", (q,), (), _ctrls(controls))


def ry(q: int, theta: float, controls=()) -> Gate:
    return Gate("ry", (q,), (float(theta),), _ctrls(controls))


def u3(q: int, theta: float, phi: float, lam: float, controls=()) -> Gate:
    return Gate("u3", (q,), (float(theta), float(phi), float(lam)), _ctrls(controls))


def phase(q: int, theta: float, controls=()) -> Gate:
    return Gate("phase", (q,), (float(theta),), _ctrls(controls))


def unitary(q: int, mat: np.ndarray, controls=()) -> Gate:
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (2, 2):
        raise ValueError("unitary gate takes a 2x2 matrix")
    if not np.allclose(mat @ mat.conj().T, np.eye(2), atol=1e-12):
        raise ValueError("matrix is not unitary")
    return Gate("unitary", (q,), (), _ctrls(controls), mat=mat)


def swap(a: int, b: int, controls=()) -> Gate:
    return Gate("swap", (a, b), (), _ctrls(controls))


def cnot(control: int, target: int) -> Gate:
    return x(target, controls=((control, 1),))


def cphase(control: int, target: int, theta: float) -> Gate:
    return phase(target, theta, controls=((control, 1),))


def mcx(controls, target: int) -> Gate:
    """X on target, conditioned on every listed qubit being |1>."""
    return x(target, controls=tuple((int(q), 1) for q in controls))


def toffoli(c0: int, c1: int, target: int) -> Gate:
    return x(target, controls=((c0, 1), (c1, 1)))

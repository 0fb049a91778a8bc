"""Block-encoding of the strain Green's operator as a combination of paulis.

Per Fourier mode k = (k0, k1) with signed labels r_i = relabel(k_i, N),

    Gamma_hat = alpha0 I + alpha1 X + alpha2 Z,
    alpha0 = -1/(2 mu0)
    alpha1 = -(1/mu0) r0 r1 / (r0^2 + r1^2)
    alpha2 = -(1/(2 mu0)) (r0^2 - r1^2) / (r0^2 + r1^2)

acting on the stress qubit (component 0 on |0>). U_prep spreads the l
register over three branches with amplitude 1/sqrt(3); projecting the output
of U_prep^dag U_select U_prep onto l = 00 and flag = 1 applies
Gamma_hat / (3 s_alpha). In 1D the operator is the scalar -1/mu0 and needs a
single flag rotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from .blocks import Block, GateStep, MulRy, Seq, _bit_reversal
from .polyfit import PolyFit, relabel


def lcu_coefficients(k0: int, k1: int, num_points: int, mu0: float) -> tuple:
    r0 = float(relabel(k0, num_points))
    r1 = float(relabel(k1, num_points))
    a0 = -1.0 / (2.0 * mu0)
    rho = r0 * r0 + r1 * r1
    if rho == 0.0:
        return (a0, 0.0, 0.0)
    a1 = -(1.0 / mu0) * r0 * r1 / rho
    a2 = -(1.0 / (2.0 * mu0)) * (r0 * r0 - r1 * r1) / rho
    return (a0, a1, a2)


_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def green_matrix(k0: int, k1: int | None, num_points: int, mu0: float):
    """Exact Green's operator: 2x2 matrix in 2D, scalar -1/mu0 in 1D."""
    if k1 is None:
        if relabel(k0, num_points) == 0:
            raise ValueError("the zero-frequency mode is excluded")
        return -1.0 / mu0
    r0 = float(relabel(k0, num_points))
    r1 = float(relabel(k1, num_points))
    rho = r0 * r0 + r1 * r1
    if rho == 0.0:
        raise ValueError("the zero-frequency mode is excluded")
    xi = np.array([r0, r1])
    return -(1.0 / mu0) * np.outer(xi, xi) / rho


@dataclass(frozen=True)
class LcuDecomposition:
    pauli_terms: tuple
    prefactor: float
    mu0: float

    def reconstruct(self, k0: int, k1: int, num_points: int) -> np.ndarray:
        out = np.zeros((2, 2))
        for label, coeff in self.pauli_terms:
            out = out + coeff(k0, k1, num_points) * _PAULI[label]
        return out


def lcu_decomposition(mu0: float) -> LcuDecomposition:
    terms = (
        ("I", lambda k0, k1, n: lcu_coefficients(k0, k1, n, mu0)[0]),
        ("X", lambda k0, k1, n: lcu_coefficients(k0, k1, n, mu0)[1]),
        ("Z", lambda k0, k1, n: lcu_coefficients(k0, k1, n, mu0)[2]),
    )
    return LcuDecomposition(pauli_terms=terms, prefactor=1.0 / 3.0, mu0=mu0)


def alpha_tables(num_points: int, mu0: float) -> tuple:
    """(alpha0 scalar, alpha1 grid, alpha2 grid) with natural [k0, k1] indexing."""
    r = relabel(np.arange(num_points), num_points).astype(float)
    r0 = r[:, None]
    r1 = r[None, :]
    rho = r0 * r0 + r1 * r1
    safe = np.where(rho == 0.0, 1.0, rho)
    a1 = -(1.0 / mu0) * r0 * r1 / safe
    a2 = -(1.0 / (2.0 * mu0)) * (r0 * r0 - r1 * r1) / safe
    a1 = np.where(rho == 0.0, 0.0, a1)
    a2 = np.where(rho == 0.0, 0.0, a2)
    return (-1.0 / (2.0 * mu0), a1, a2)


def fit_alphas(num_points: int, mu0: float, degrees=(7, 6)) -> tuple:
    """Direct bivariate fits of alpha1 (degrees[0]) and alpha2 (degrees[1]).

    Degrees are capped at num_points - 1 per axis so small grids stay
    full rank.
    """
    _, a1, a2 = alpha_tables(num_points, mu0)
    samples1 = {}
    samples2 = {}
    for i in range(num_points):
        for j in range(num_points):
            samples1[(i, j)] = a1[i, j]
            samples2[(i, j)] = a2[i, j]
    from .polyfit import fit_polynomial

    cap = num_points - 1
    fit1 = fit_polynomial(samples1, min(degrees[0], cap), grid_size=num_points)
    fit2 = fit_polynomial(samples2, min(degrees[1], cap), grid_size=num_points)
    return fit1, fit2


def _alpha_of_signed(r0: float, r1: float, mu0: float) -> tuple:
    rho = r0 * r0 + r1 * r1
    if rho == 0.0:
        return (0.0, 0.0)
    return (-(1.0 / mu0) * r0 * r1 / rho, -(1.0 / (2.0 * mu0)) * (r0 * r0 - r1 * r1) / rho)


def fit_alphas_extended(num_points: int, mu0: float, degrees=(3, 4)) -> tuple:
    """Alpha fits on the doubled-per-axis domain where r is polynomial-smooth.

    Degrees are capped at one less than the count of defined indices per
    axis so small grids stay full rank.
    """
    from .polyfit import extended_domain, fit_polynomial

    ext = extended_domain(num_points)
    defined = ext.defined_indices()
    samples1 = {}
    samples2 = {}
    for kt0 in defined:
        r0 = float(kt0 if kt0 < num_points // 2 else kt0 - ext.extended_size)
        for kt1 in defined:
            r1 = float(kt1 if kt1 < num_points // 2 else kt1 - ext.extended_size)
            a1, a2 = _alpha_of_signed(r0, r1, mu0)
            samples1[(int(kt0), int(kt1))] = a1
            samples2[(int(kt0), int(kt1))] = a2
    cap = len(defined) - 1
    fit1 = fit_polynomial(samples1, min(degrees[0], cap), grid_size=ext.extended_size)
    fit2 = fit_polynomial(samples2, min(degrees[1], cap), grid_size=ext.extended_size)
    return fit1, fit2


def build_u_prep(l0: int, l1: int, controls=()) -> Block:
    """|00> -> (|00> + |01> + |10>)/sqrt(3) on (l1 l0); |11> stays empty."""
    theta0 = 2.0 * np.arccos(np.sqrt(2.0 / 3.0))
    ctl = tuple(controls)
    return Seq(
        "u_prep",
        [
            GateStep(gates.ry(l0, theta0, controls=ctl)),
            GateStep(gates.ry(l1, np.pi / 2.0, controls=ctl + ((l0, 0),))),
        ],
    )


@dataclass(frozen=True)
class GammaInfo:
    mode: str
    value_scale: float
    prefactor: float
    cascade_lambda: float | None = None
    fit_residuals: tuple = ()

    @property
    def linear_factor(self) -> float:
        base = self.prefactor / self.value_scale
        if self.cascade_lambda is not None:
            base *= self.cascade_lambda
        return base


def build_u_green_1d(flag: int, mu0: float, controls=()) -> tuple[Block, GammaInfo]:
    """1D Green's action: flag-|1> amplitude (-1/mu0)/s_g, mode independent."""
    scale = max(1.0, 1.0 / mu0)
    theta = 2.0 * np.arcsin((-1.0 / mu0) / scale)
    block = Seq("u_green", [GateStep(gates.ry(flag, theta, controls=tuple(controls)))])
    return block, GammaInfo(mode="constant", value_scale=scale, prefactor=1.0)


def _axis_map(n_bits: int, bit_reversed: bool) -> np.ndarray:
    return _bit_reversal(n_bits) if bit_reversed else np.arange(1 << n_bits)


def _permute_table(table: np.ndarray, map0: np.ndarray, map1: np.ndarray) -> np.ndarray:
    """Flat selector table T[v0 + n0 v1] = table[map0[v0], map1[v1]]."""
    return table[np.ix_(map0, map1)].flatten(order="F")


def build_u_gamma(
    k_registers,
    stress: int,
    flag: int,
    l_qubits,
    num_points: int,
    mu0: float,
    mode: str = "lookup",
    fits=None,
    ext_qubits=None,
    bit_reversed: bool = False,
    cascade_lambda: float = 0.25,
    name: str | None = "u_gamma",
) -> tuple[Block, GammaInfo]:
    """Composite prep / select / prep-adjoint block encoding of Gamma_hat.

    k_registers holds the two little-endian Fourier registers. bit_reversed
    marks registers carrying QFT output (Fourier bit b of k_i on physical
    qubit k_registers[i][n-1-b]); value tables and monomial selectors are
    permuted accordingly. With extended-domain fits, ext_qubits receive the
    address-map CNOTs sandwiching the select stage.
    """
    reg0, reg1 = (tuple(r) for r in k_registers)
    l0, l1 = l_qubits
    n = len(reg0)
    if (1 << n) != num_points or len(reg1) != n:
        raise ValueError("register widths do not match the grid")
    patterns = {
        0: ((l0, 0), (l1, 0)),
        1: ((l0, 1), (l1, 0)),
        2: ((l0, 0), (l1, 1)),
    }
    map0 = _axis_map(n, bit_reversed)
    residuals: tuple = ()
    extended = False

    if mode == "lookup":
        if fits is not None:
            raise ValueError("lookup mode computes exact tables; fits unused")
        a0, a1_grid, a2_grid = alpha_tables(num_points, mu0)
        scale = max(1.0, abs(a0), float(np.abs(a1_grid).max()), float(np.abs(a2_grid).max()))
        table1 = _permute_table(a1_grid, map0, map0)
        table2 = _permute_table(a2_grid, map0, map0)
    elif mode in ("multiplexed", "cascade"):
        if fits is None:
            fits = fit_alphas(num_points, mu0)
        fit1, fit2 = fits
        residuals = (fit1.residual, fit2.residual)
        a0 = -1.0 / (2.0 * mu0)
        extended = fit1.grid_size == 2 * num_points
        if extended != (fit2.grid_size == 2 * num_points):
            raise ValueError("alpha fits must share their domain")
        if extended:
            if ext_qubits is None or len(ext_qubits) != 2:
                raise ValueError("extended-domain fits need one extension qubit per axis")
            reach = np.array(
                [k if k < num_points // 2 else k + num_points for k in range(num_points)]
            )
            v1 = fit1.evaluate(*np.meshgrid(reach, reach, indexing="ij"))
            v2 = fit2.evaluate(*np.meshgrid(reach, reach, indexing="ij"))
        else:
            v1 = fit1.grid_values()
            v2 = fit2.grid_values()
        scale = max(1.0, abs(a0), float(np.abs(v1).max()), float(np.abs(v2).max()))
    else:
        raise ValueError(f"unknown encoding mode {mode!r}")

    steps: list = [build_u_prep(l0, l1)]
    if mode == "cascade":
        # Every cascade branch realises sin(lambda alpha / s); the constant
        # branch must follow the same map or the combination loses coherence.
        theta0 = 2.0 * cascade_lambda * a0 / scale
    else:
        theta0 = 2.0 * np.arcsin(a0 / scale)
    select: list = [GateStep(gates.ry(flag, theta0, controls=patterns[0]))]

    if mode == "lookup":
        selectors = reg0 + reg1
        select.append(
            MulRy(selectors, 2.0 * np.arcsin(table1 / scale), flag, controls=patterns[1])
        )
        select.append(GateStep(gates.x(stress, controls=patterns[1])))
        select.append(
            MulRy(selectors, 2.0 * np.arcsin(table2 / scale), flag, controls=patterns[2])
        )
        select.append(GateStep(gates.z(stress, controls=patterns[2])))
    else:
        from .polyfit import build_u_poly

        if extended:
            regs = (reg0 + (ext_qubits[0],), reg1 + (ext_qubits[1],))
            if bit_reversed:
                regs = (
                    tuple(reversed(reg0)) + (ext_qubits[0],),
                    tuple(reversed(reg1)) + (ext_qubits[1],),
                )
        else:
            regs = (reg0, reg1)
            if bit_reversed:
                regs = (tuple(reversed(reg0)), tuple(reversed(reg1)))
        enc_mode = mode
        for branch, fit in ((1, fit1), (2, fit2)):
            enc, _ = build_u_poly(
                fit,
                regs,
                flag,
                controls=patterns[branch],
                mode=enc_mode,
                cascade_lambda=cascade_lambda,
                scale=scale,
                name=None,
            )
            select.append(enc)
            pauli = gates.x if branch == 1 else gates.z
            select.append(GateStep(pauli(stress, controls=patterns[branch])))

    if extended:
        msb0 = reg0[0] if bit_reversed else reg0[-1]
        msb1 = reg1[0] if bit_reversed else reg1[-1]
        pre = [GateStep(gates.cnot(msb0, ext_qubits[0])), GateStep(gates.cnot(msb1, ext_qubits[1]))]
        select = pre + select + list(reversed([GateStep(s.gate) for s in pre]))

    steps.extend(select)
    steps.append(build_u_prep(l0, l1).adjoint())
    info = GammaInfo(
        mode=mode,
        value_scale=scale,
        prefactor=1.0 / 3.0,
        cascade_lambda=cascade_lambda if mode == "cascade" else None,
        fit_residuals=residuals,
    )
    return Seq(name, steps), info

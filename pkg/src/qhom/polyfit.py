"""Least-squares polynomial fits of grid functions and amplitude encoders.

Fits live in normalised coordinates t = k / grid_size to keep coefficients
well-conditioned. Three encoder modes:

  lookup       exact table: multiplexed RY with angles 2 arcsin(v_k / s)
  multiplexed  exact on the fitted polynomial's grid values (same ladder)
  cascade      one multi-controlled RY per bit monomial; the ancilla-|1>
               amplitude is sin(lam p(k) / s), linear in p for small lam

s = value_scale >= 1 keeps every rotation argument inside [-1, 1]; the net
amplitude-per-target-unit is recorded as linear_factor (1/s, or lam/s for the
cascade) so readouts can divide it back out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import gates
from .blocks import Block, GateStep, MulRy, Seq


class EncodingError(ValueError):
    pass


def relabel(k, num_points: int):
    """Signed frequency label: k below N/2, k - N above."""
    if num_points % 2 != 0:
        raise ValueError("grid size must be even")
    arr = np.asarray(k)
    if np.any(arr < 0) or np.any(arr >= num_points):
        raise ValueError("grid index out of range")
    return np.where(arr < num_points // 2, arr, arr - num_points)


def relabel_array(num_points: int) -> np.ndarray:
    return relabel(np.arange(num_points), num_points)


@dataclass(frozen=True, eq=False)
class PolyFit:
    """Polynomial in t = k / grid_size, coefficients ascending per variable."""

    variables: int
    degrees: tuple
    coeffs: np.ndarray
    grid_size: int
    residual: float

    def evaluate(self, *ks):
        ts = [np.asarray(k, dtype=float) / self.grid_size for k in ks]
        if len(ts) != self.variables:
            raise ValueError("one index array per fitted variable")
        if self.variables == 1:
            return npoly.polyval(ts[0], self.coeffs)
        return npoly.polyval2d(ts[0], ts[1], self.coeffs)

    def grid_values(self) -> np.ndarray:
        idx = np.arange(self.grid_size)
        if self.variables == 1:
            return self.evaluate(idx)
        k0, k1 = np.meshgrid(idx, idx, indexing="ij")
        return self.evaluate(k0, k1)


def fit_polynomial(samples: dict, degrees, grid_size: int | None = None) -> PolyFit:
    """Least-squares fit of sampled index -> value data.

    1D samples use integer keys, 2D samples (k0, k1) tuples; degrees is an int
    or a per-variable tuple. Raises on a rank-deficient design matrix.
    """
    keys = list(samples.keys())
    values = np.array([samples[k] for k in keys], dtype=float)
    two_d = isinstance(keys[0], tuple)
    degs = tuple(np.atleast_1d(degrees).astype(int))
    if len(degs) == 1 and two_d:
        degs = (degs[0], degs[0])
    if two_d:
        k0 = np.array([k[0] for k in keys], dtype=float)
        k1 = np.array([k[1] for k in keys], dtype=float)
        if grid_size is None:
            grid_size = int(max(k0.max(), k1.max())) + 1
        design = npoly.polyvander2d(k0 / grid_size, k1 / grid_size, degs)
    else:
        k0 = np.array(keys, dtype=float)
        if grid_size is None:
            grid_size = int(k0.max()) + 1
        design = npoly.polyvander(k0 / grid_size, degs[0])
    if design.shape[0] < design.shape[1]:
        raise ValueError("fewer samples than monomials")
    sol, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
    if rank < design.shape[1]:
        raise ValueError("rank-deficient design matrix")
    residual = float(np.max(np.abs(design @ sol - values)))
    coeffs = sol.reshape(degs[0] + 1, degs[1] + 1) if two_d else sol
    return PolyFit(
        variables=2 if two_d else 1,
        degrees=degs,
        coeffs=coeffs,
        grid_size=grid_size,
        residual=residual,
    )


def fit_grid(values: np.ndarray, degrees) -> PolyFit:
    """Fit a full-grid sample array (1D length N, or N x N indexed [k0, k1])."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        samples = {int(k): float(v) for k, v in enumerate(values)}
    else:
        samples = {
            (i, j): float(values[i, j])
            for i in range(values.shape[0])
            for j in range(values.shape[1])
        }
    return fit_polynomial(samples, degrees, grid_size=values.shape[0])


# -- extended-domain relabelling ----------------------------------------


@dataclass(frozen=True)
class ExtendedDomainSpec:
    """Doubled grid on which the relabelling function becomes smooth.

    The signed frequency r(k) jumps at k = N/2; on the 2N grid the values
    r_ext(kt) = kt (kt < N/2) and kt - 2N (kt >= 3N/2) interpolate it with a
    polynomial, leaving the middle band unconstrained. bit_correction names
    the (control, target) pair of the address-map CNOT once qubits are known.
    """

    base_size: int
    extended_size: int
    defined_ranges: tuple
    bit_correction: tuple | None = None

    def defined_indices(self) -> np.ndarray:
        spans = [np.arange(lo, hi) for lo, hi in self.defined_ranges]
        return np.concatenate(spans)


def extended_domain(num_points: int) -> ExtendedDomainSpec:
    half = num_points // 2
    return ExtendedDomainSpec(
        base_size=num_points,
        extended_size=2 * num_points,
        defined_ranges=((0, half), (3 * half, 2 * num_points)),
    )


def extended_targets(ext: ExtendedDomainSpec) -> dict:
    out = {}
    for kt in ext.defined_indices():
        kt = int(kt)
        out[kt] = float(kt if kt < ext.base_size // 2 else kt - ext.extended_size)
    return out


def fit_extended_relabel(num_points: int, degree: int = 5) -> PolyFit:
    ext = extended_domain(num_points)
    return fit_polynomial(extended_targets(ext), degree, grid_size=ext.extended_size)


# -- bit-monomial expansion (cascade mode) -------------------------------


def _mono_multiply(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            key = ka | kb
            out[key] = out.get(key, 0.0) + va * vb
    return out


def _axis_powers(qubits, grid_size: int, max_degree: int) -> list[dict]:
    linear = {frozenset((q,)): float(1 << j) / grid_size for j, q in enumerate(qubits)}
    powers = [{frozenset(): 1.0}]
    for _ in range(max_degree):
        powers.append(_mono_multiply(powers[-1], linear))
    return powers


def expand_bits(fit: PolyFit, registers) -> dict:
    """Multilinear form of the fitted polynomial over register bits.

    Returns {frozenset(qubits): coefficient}; exact because bits are
    idempotent. registers is one little-endian qubit tuple per variable.
    """
    if len(registers) != fit.variables:
        raise ValueError("one qubit register per fitted variable")
    if fit.variables == 1:
        powers = _axis_powers(registers[0], fit.grid_size, fit.degrees[0])
        total: dict = {}
        for d, c in enumerate(fit.coeffs):
            for key, val in powers[d].items():
                total[key] = total.get(key, 0.0) + float(c) * val
        return total
    p0 = _axis_powers(registers[0], fit.grid_size, fit.degrees[0])
    p1 = _axis_powers(registers[1], fit.grid_size, fit.degrees[1])
    total = {}
    for d0 in range(fit.degrees[0] + 1):
        for d1 in range(fit.degrees[1] + 1):
            c = float(fit.coeffs[d0, d1])
            if c == 0.0:
                continue
            for key, val in _mono_multiply(p0[d0], p1[d1]).items():
                total[key] = total.get(key, 0.0) + c * val
    return total


# -- encoders ------------------------------------------------------------


@dataclass(frozen=True)
class EncodingInfo:
    mode: str
    value_scale: float
    linear_factor: float
    cascade_lambda: float | None = None
    bit_correction: tuple | None = None


def _value_scale(values: np.ndarray, scale, rescale: bool) -> float:
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if scale is not None:
        if peak > scale * (1.0 + 1e-12):
            raise EncodingError(f"values exceed the requested scale {scale}")
        return float(scale)
    if peak <= 1.0:
        return 1.0
    if not rescale:
        raise EncodingError(f"values reach {peak:.6g} > 1; rescaling required")
    return peak


def encode_lookup(
    values,
    qubits,
    ancilla: int,
    controls=(),
    value_on: int = 1,
    scale=None,
    rescale: bool = True,
    name: str | None = "lookup",
) -> tuple[Block, EncodingInfo]:
    """Multiplexed RY writing values[k] onto the ancilla amplitude at |k>.

    value_on=1 puts v_k on the ancilla-|1> branch (angle 2 arcsin), value_on=0
    on the |0> branch (angle 2 arccos).
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (1 << len(qubits),):
        raise ValueError("one value per register basis state")
    s = _value_scale(values, scale, rescale)
    v = np.clip(values / s, -1.0, 1.0)
    angles = 2.0 * np.arcsin(v) if value_on == 1 else 2.0 * np.arccos(v)
    block = Seq(name, [MulRy(tuple(qubits), angles, ancilla, controls=tuple(controls))])
    return block, EncodingInfo(mode="lookup", value_scale=s, linear_factor=1.0 / s)


def build_u_poly(
    fit: PolyFit,
    registers,
    ancilla: int,
    controls=(),
    mode: str = "multiplexed",
    cascade_lambda: float = 0.25,
    scale=None,
    rescale: bool = True,
    value_on: int = 1,
    name: str | None = "u_poly",
) -> tuple[Block, EncodingInfo]:
    """Encode a fitted polynomial's grid values onto an ancilla amplitude.

    registers is one little-endian qubit tuple per fitted variable; multi-
    variable value tables are indexed with the first register in the low bits.
    """
    registers = tuple(tuple(r) for r in registers)
    values = fit.grid_values()
    flat = values if fit.variables == 1 else values.flatten(order="F")
    if mode == "multiplexed":
        qubits = tuple(q for reg in registers for q in reg)
        block, info = encode_lookup(
            flat, qubits, ancilla, controls, value_on, scale, rescale, name
        )
        return block, EncodingInfo(
            mode="multiplexed",
            value_scale=info.value_scale,
            linear_factor=info.linear_factor,
        )
    if mode != "cascade":
        raise ValueError(f"unknown encoding mode {mode!r}")
    if value_on != 1:
        raise ValueError("the cascade composes |1>-branch rotations only")
    s = _value_scale(flat, scale, rescale)
    monomials = expand_bits(fit, registers)
    steps = []
    for key in sorted(monomials, key=lambda k: (len(k), sorted(k))):
        theta = 2.0 * cascade_lambda * monomials[key] / s
        ctl = tuple((q, 1) for q in sorted(key))
        steps.append(GateStep(gates.ry(ancilla, theta, controls=ctl)))
    block = _controlled_wrapper(steps, controls, name) if controls else Seq(name, steps)
    return block, EncodingInfo(
        mode="cascade",
        value_scale=s,
        linear_factor=cascade_lambda / s,
        cascade_lambda=cascade_lambda,
    )


def _controlled_wrapper(steps, controls, name) -> Block:
    wrapped = []
    for step in steps:
        g = step.gate
        wrapped.append(
            GateStep(gates.Gate(g.name, g.targets, g.params, g.controls + tuple(controls)))
        )
    return Seq(name, wrapped)


def build_extended_encoding(
    ext: ExtendedDomainSpec,
    fit: PolyFit,
    base_qubits,
    ext_qubit: int,
    ancilla: int,
    controls=(),
    mode: str = "multiplexed",
    cascade_lambda: float = 0.25,
    scale=None,
    restore: bool = True,
    name: str | None = "u_relabel",
) -> tuple[Block, EncodingInfo]:
    """Encode the discontinuous relabelling via the doubled smooth domain.

    The address CNOT (controlled by the base register's top bit) maps k to
    kt = k + N msb(k) before the polynomial multiplex reads it; a closing
    CNOT restores the extension qubit when restore is set.
    """
    base_qubits = tuple(base_qubits)
    if fit.grid_size != ext.extended_size:
        raise ValueError("fit is not built on the extended grid")
    msb = base_qubits[-1]
    correction = gates.cnot(msb, ext_qubit)
    inner, info = build_u_poly(
        fit,
        (base_qubits + (ext_qubit,),),
        ancilla,
        controls=(),
        mode=mode,
        cascade_lambda=cascade_lambda,
        scale=scale,
        name=None,
    )
    steps = [GateStep(correction), inner]
    if restore:
        steps.append(GateStep(correction))
    block: Block = Seq(name, steps)
    if controls:
        out: list = []
        block.emit(out, extra_controls=tuple(controls))
        block = Seq(name, [GateStep(g) for _, g in out])
    return block, EncodingInfo(
        mode=info.mode,
        value_scale=info.value_scale,
        linear_factor=info.linear_factor,
        cascade_lambda=info.cascade_lambda,
        bit_correction=(msb, ext_qubit),
    )


# -- CSV round-trip -------------------------------------------------------


def fit_to_csv_lines(fit: PolyFit) -> list[str]:
    lines = [
        f"# variables={fit.variables} degrees={','.join(str(d) for d in fit.degrees)}"
        f" grid={fit.grid_size} residual={fit.residual:.17g}"
    ]
    if fit.variables == 1:
        lines.append("degree,coefficient")
        for d, c in enumerate(fit.coeffs):
            lines.append(f"{d},{c:.17g}")
    else:
        lines.append("degree0,degree1,coefficient")
        for d0 in range(fit.degrees[0] + 1):
            for d1 in range(fit.degrees[1] + 1):
                lines.append(f"{d0},{d1},{fit.coeffs[d0, d1]:.17g}")
    return lines


def fit_from_csv_lines(lines) -> PolyFit:
    header = lines[0].lstrip("# ").split()
    meta = dict(part.split("=", 1) for part in header)
    variables = int(meta["variables"])
    degrees = tuple(int(d) for d in meta["degrees"].split(","))
    grid_size = int(meta["grid"])
    residual = float(meta["residual"])
    rows = [line.split(",") for line in lines[2:] if line.strip()]
    if variables == 1:
        coeffs = np.zeros(degrees[0] + 1)
        for d, c in rows:
            coeffs[int(d)] = float(c)
    else:
        coeffs = np.zeros((degrees[0] + 1, degrees[1] + 1))
        for d0, d1, c in rows:
            coeffs[int(d0), int(d1)] = float(c)
    return PolyFit(variables, degrees, coeffs, grid_size, residual)


def samples_from_csv_lines(lines) -> dict:
    out = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#") or line[0].isalpha():
            continue
        parts = line.split(",")
        if len(parts) == 2:
            out[int(parts[0])] = float(parts[1])
        else:
            out[(int(parts[0]), int(parts[1]))] = float(parts[2])
    return out

"""Volume Nambu-Poisson structures on open sets of R^n.

The bracket of n functions is the Jacobian determinant divided by the
density of the volume form, so that ``df_1 ^ ... ^ df_n = {f_1..f_n} Omega``
with ``Omega = rho dx^1 ^ ... ^ dx^n``.

Hamiltonian vector fields use the component convention
``X^i = {H_1, ..., H_{n-1}, x^i}``; the flow of ``X`` then reproduces
``dx^i/dt = {H_1, ..., H_{n-1}, x^i}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import diff
from .diff import base_value, det, jacobian_rows, minor_matrix
from .errors import DomainError
from .fields import ScalarField, VectorField


def _always(point) -> bool:
    return True


@dataclass(frozen=True)
class VolumeNPStructure:
    dim: int
    density: ScalarField
    domain: Callable[[Sequence[float]], bool] = field(default=_always, compare=False)

    def __post_init__(self):
        if self.dim < 3:
            raise ValueError(f"volume Nambu structures need n >= 3, got {self.dim}")
        if self.density.dim != self.dim:
            raise ValueError("density dimension does not match the structure")

    @classmethod
    def canonical(cls, dim: int, domain: Callable | None = None) -> "VolumeNPStructure":
        return cls(dim, ScalarField.constant(1.0, dim), domain or _always)

    def with_density(self, density: ScalarField) -> "VolumeNPStructure":
        return VolumeNPStructure(self.dim, density, self.domain)

    def scaled(self, c: float) -> "VolumeNPStructure":
        rho = self.density
        return self.with_density(ScalarField(lambda p, t: rho(p, t) * c, self.dim, f"{c}*{rho.name}"))

    def contains(self, point: Sequence, time: float = 0.0) -> bool:
        plain = [base_value(v) for v in point]
        if not self.domain(plain):
            return False
        try:
            return base_value(self.density(plain, time)) != 0.0
        except (DomainError, ZeroDivisionError):
            return False

    def rho(self, point: Sequence, time: float = 0.0):
        """Density value, refusing points outside the domain."""
        if not self.domain([base_value(v) for v in point]):
            raise DomainError(f"point {[base_value(v) for v in point]} is outside the domain")
        r = self.density(point, time)
        if base_value(r) == 0.0:
            raise DomainError("density vanishes at the point")
        return r


@dataclass(frozen=True)
class HamiltonianTuple:
    fields: tuple[ScalarField, ...]
    structure: VolumeNPStructure

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        n = self.structure.dim
        if len(self.fields) != n - 1:
            raise ValueError(f"need exactly {n - 1} Hamiltonians for n = {n}, got {len(self.fields)}")
        for f in self.fields:
            if f.dim != n:
                raise ValueError(f"Hamiltonian {f.name!r} has dimension {f.dim}, expected {n}")

    @property
    def autonomous(self) -> bool:
        return all(f.autonomous for f in self.fields) and self.structure.density.autonomous


def _out(value, point):
    return float(value) if not any(isinstance(p, diff.Jet) for p in point) else value


def bracket(structure: VolumeNPStructure, fs: Sequence[Callable], point: Sequence, time: float = 0.0):
    """{f_1, ..., f_n}(point) = det(Jacobian) / rho."""
    if len(fs) != structure.dim:
        raise ValueError(f"bracket takes {structure.dim} functions, got {len(fs)}")
    rho = structure.rho(point, time)
    d = det(jacobian_rows(fs, point, time))
    return _out(d / rho, point)


def sharp_basis(structure: VolumeNPStructure, omit: int) -> VectorField:
    """Image of dx^1 ^ .. (dx^omit omitted) .. ^ dx^n under the sharp map."""
    n = structure.dim
    if not 1 <= omit <= n:
        raise IndexError(f"basis index {omit} outside 1..{n}")
    sign = -1.0 if (n - omit) % 2 else 1.0

    def _eval(p, t):
        out: list = [0.0] * n
        out[omit - 1] = sign / structure.rho(p, t)
        return out
    return VectorField(_eval, n, f"sharp(e_{omit})")


def hamiltonian_components(H: HamiltonianTuple, point: Sequence, time: float = 0.0) -> list:
    """X^i = (-1)^(n-i) * minor_i / rho for i = 1..n (carrier values)."""
    n = H.structure.dim
    rho = H.structure.rho(point, time)
    rows = jacobian_rows(H.fields, point, time)
    out = []
    for i in range(n):
        m = det(minor_matrix(rows, i))
        if (n - 1 - i) % 2:
            m = -m
        out.append(m / rho)
    return out


def hamiltonian_vector_field(H: HamiltonianTuple) -> VectorField:
    names = ",".join(f.name for f in H.fields)
    return VectorField(lambda p, t: hamiltonian_components(H, p, t), H.structure.dim, f"X[{names}]")


def directional_derivative_field(X: Callable, g: Callable, dim: int, name: str = "") -> ScalarField:
    """The scalar field x -> dg(X) = sum_k X^k dg/dx^k."""

    def _eval(p, t):
        xs = X(p, t)
        grad = diff.gradient(g, p, t)
        s = 0.0
        for a, b in zip(xs, grad):
            s = s + a * b
        return s
    return ScalarField(_eval, dim, name or "X(g)")


def fundamental_identity_residual(structure: VolumeNPStructure, fs: Sequence[ScalarField],
                                  gs: Sequence[ScalarField], point: Sequence[float],
                                  time: float = 0.0, step: float = 1e-3) -> float:
    """X_f{g_1..g_n} - sum_i {g_1, .., X_f g_i, .., g_n} at a point.

    The derivative of the bracket along X is a central difference along X
    with steps h and h/2 combined by Richardson extrapolation; the inner
    terms are differentiated exactly.
    """
    n = structure.dim
    if len(fs) != n - 1 or len(gs) != n:
        raise ValueError("need n-1 generating functions and n bracket arguments")
    H = HamiltonianTuple(tuple(fs), structure)
    x = np.asarray(point, dtype=float)
    X = np.array([float(v) for v in hamiltonian_components(H, list(x), time)])
    norm = float(np.linalg.norm(X))
    if norm == 0.0:
        lhs = 0.0
    else:
        h = step * max(1.0, float(np.max(np.abs(x)))) / norm

        def central(hh: float) -> float:
            bp = bracket(structure, gs, list(x + hh * X), time)
            bm = bracket(structure, gs, list(x - hh * X), time)
            return (bp - bm) / (2.0 * hh)
        d1, d2 = central(h), central(h / 2.0)
        lhs = (4.0 * d2 - d1) / 3.0
    Xf = hamiltonian_vector_field(H)
    rhs = 0.0
    for i in range(n):
        replaced = list(gs)
        replaced[i] = directional_derivative_field(Xf, gs[i], n)
        rhs += bracket(structure, replaced, list(x), time)
    return lhs - rhs


def leibniz_residual(structure: VolumeNPStructure, f: ScalarField, g: ScalarField,
                     rest: Sequence[ScalarField], point: Sequence[float], time: float = 0.0) -> float:
    """{f g, rest} - f {g, rest} - g {f, rest}."""
    if len(rest) != structure.dim - 1:
        raise ValueError(f"need {structure.dim - 1} remaining arguments")
    fg = ScalarField(lambda p, t: f(p, t) * g(p, t), structure.dim, f"({f.name})*({g.name})")
    fv, gv = f.value(point, time), g.value(point, time)
    return (bracket(structure, [fg, *rest], point, time)
            - fv * bracket(structure, [g, *rest], point, time)
            - gv * bracket(structure, [f, *rest], point, time))


def divergence(structure: VolumeNPStructure, X: Callable, point: Sequence, time: float = 0.0):
    """(1/rho) sum_i d(rho X^i)/dx^i, differentiated exactly."""
    tag = diff.new_tag()
    xs = diff.seed(point, tag)
    rho = structure.rho(xs, time)
    comps = X(xs, time)
    n = len(point)
    total = 0.0
    for i in range(n):
        total = total + diff.partials_of(rho * comps[i], tag, n)[i]
    return _out(total / diff.value_of(rho, tag), point)


def generator_pairings(H: HamiltonianTuple, point: Sequence[float], time: float = 0.0) -> np.ndarray:
    """<dH_j, X_H> for every generator; zero when the generators are conserved."""
    X = np.array([float(v) for v in hamiltonian_components(H, point, time)])
    return np.array([float(np.dot(diff.gradient(f, point, time), X)) for f in H.fields])

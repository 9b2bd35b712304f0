"""Scalar and vector field wrappers around carrier-generic evaluators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import expr
from .diff import base_value


@dataclass(frozen=True)
class ScalarField:
    """``func(point, time)`` returning a carrier value.

    ``source`` keeps the defining expression text when there is one.
    """

    func: Callable
    dim: int
    name: str = ""
    source: str | None = None
    autonomous: bool = True

    def __call__(self, point: Sequence, time: float = 0.0):
        return self.func(point, time)

    def value(self, point: Sequence, time: float = 0.0) -> float:
        return float(base_value(self.func(point, time)))

    @classmethod
    def from_expr(cls, text: str, coords: Sequence[str], table: expr.CoefficientTable | None = None,
                  name: str = "") -> "ScalarField":
        names = None if table is None else table.names()
        node = expr.parse(text, coords, coefficients=names if names is not None else ())
        return cls.from_node(node, coords, table, name=name, source=text)

    @classmethod
    def from_node(cls, node: expr.Node, coords: Sequence[str], table: expr.CoefficientTable | None = None,
                  name: str = "", source: str | None = None) -> "ScalarField":
        fn = expr.compile_node(node, coords, table)
        autonomous = not expr.uses_time(node) and not any(
            table.time_dependent(c) for c in expr.references(node, expr.COEFFICIENT)
        ) if table is not None else not expr.uses_time(node)
        return cls(fn, len(coords), name or (source or expr.pretty_print(node)),
                   source or expr.pretty_print(node), autonomous)

    @classmethod
    def coordinate(cls, i: int, dim: int, name: str | None = None) -> "ScalarField":
        """The coordinate function x^i (0-based index)."""
        return cls(lambda p, t: p[i], dim, name or f"x{i + 1}")

    @classmethod
    def constant(cls, c: float, dim: int) -> "ScalarField":
        return cls(lambda p, t: c, dim, repr(c))


@dataclass(frozen=True)
class VectorField:
    """``func(point, time)`` returning a list of carriers of length ``out_dim``."""

    func: Callable
    dim: int
    label: str = ""
    out_dim: int | None = None

    def __post_init__(self):
        if self.out_dim is None:
            object.__setattr__(self, "out_dim", self.dim)

    def __call__(self, point: Sequence, time: float = 0.0) -> list:
        return self.func(point, time)

    def values(self, point: Sequence, time: float = 0.0) -> np.ndarray:
        out = self.func(point, time)
        if len(out) != self.out_dim:
            raise ValueError(f"{self.label or 'vector field'} returned {len(out)} components, "
                             f"expected {self.out_dim}")
        return np.array([base_value(c) for c in out])

    @classmethod
    def from_exprs(cls, texts: Sequence[str], coords: Sequence[str],
                   table: expr.CoefficientTable | None = None, label: str = "") -> "VectorField":
        comps = [ScalarField.from_expr(s, coords, table) for s in texts]
        return cls.from_components(comps, label)

    @classmethod
    def from_components(cls, comps: Sequence[ScalarField], label: str = "") -> "VectorField":
        funcs = [c.func for c in comps]
        return cls(lambda p, t: [f(p, t) for f in funcs], comps[0].dim, label, len(comps))

    @classmethod
    def constant(cls, vec: Sequence[float], label: str = "") -> "VectorField":
        vals = [float(v) for v in vec]
        return cls(lambda p, t: list(vals), len(vals), label)


def component_fields(texts: Mapping[str, str], coords: Sequence[str],
                     table: expr.CoefficientTable | None = None) -> dict[str, ScalarField]:
    return {name: ScalarField.from_expr(src, coords, table, name=name) for name, src in texts.items()}

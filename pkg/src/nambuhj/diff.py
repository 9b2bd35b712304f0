"""Forward-mode differentiation over first-order jets.

A :class:`Jet` carries a value and the partial derivatives with respect to
the seeded coordinates.  Jets nest: the value and partials of a jet may
themselves be jets created at an earlier level.  Every jet records the tag
of the differentiation that created it, and operations between jets with
different tags treat the older one as a constant.  This is what lets a
Hamiltonian vector field (built from gradients) be differentiated again for
divergence and Lie bracket computations while each level stays first order.

Time is never seeded; it is a passive parameter throughout.
"""

from __future__ import annotations

import itertools
import math
from operator import add as _add, sub as _sub
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError

_tags = itertools.count(1)


def new_tag() -> int:
    return next(_tags)


class Jet:
    __slots__ = ("value", "partials", "tag")

    def __init__(self, value: Any, partials: tuple, tag: int):
        self.value = value
        self.partials = partials
        self.tag = tag

    def __repr__(self) -> str:
        return f"Jet({self.value!r}, {self.partials!r}, tag={self.tag})"

    def __float__(self) -> float:
        return float(self.value)

    # Arithmetic.  A foreign operand (float, or a jet with an older tag) is
    # a constant at this level.

    def __add__(self, other):
        if isinstance(other, Jet):
            if other.tag == self.tag:
                return Jet(self.value + other.value,
                           tuple(map(_add, self.partials, other.partials)),
                           self.tag)
            if other.tag > self.tag:
                return other.__radd__(self)
        return Jet(self.value + other, self.partials, self.tag)

    def __radd__(self, other):
        return Jet(other + self.value, self.partials, self.tag)

    def __sub__(self, other):
        if isinstance(other, Jet):
            if other.tag == self.tag:
                return Jet(self.value - other.value,
                           tuple(map(_sub, self.partials, other.partials)),
                           self.tag)
            if other.tag > self.tag:
                return other.__rsub__(self)
        return Jet(self.value - other, self.partials, self.tag)

    def __rsub__(self, other):
        return Jet(other - self.value, tuple([-p for p in self.partials]), self.tag)

    def __neg__(self):
        return Jet(-self.value, tuple([-p for p in self.partials]), self.tag)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Jet):
            if other.tag == self.tag:
                a, b = self.value, other.value
                return Jet(a * b,
                           tuple([a * q + b * p for p, q in zip(self.partials, other.partials)]),
                           self.tag)
            if other.tag > self.tag:
                return other.__rmul__(self)
        return Jet(self.value * other, tuple([p * other for p in self.partials]), self.tag)

    def __rmul__(self, other):
        return Jet(other * self.value, tuple([other * p for p in self.partials]), self.tag)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            if other.tag == self.tag:
                b = other.value
                q = self.value / b
                return Jet(q,
                           tuple([(p - q * r) / b for p, r in zip(self.partials, other.partials)]),
                           self.tag)
            if other.tag > self.tag:
                return other.__rtruediv__(self)
        return Jet(self.value / other, tuple([p / other for p in self.partials]), self.tag)

    def __rtruediv__(self, other):
        b = self.value
        q = other / b
        return Jet(q, tuple([-(q * p) / b for p in self.partials]), self.tag)

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            return ipow(self, exponent)
        return NotImplemented


def base_value(x: Any) -> float:
    """Innermost real value of a (possibly nested) carrier."""
    while isinstance(x, Jet):
        x = x.value
    return float(x)


def ipow(x, k: int):
    """Integer power by repeated multiplication, identical for every carrier."""
    if k == 0:
        return 1.0 if not isinstance(x, Jet) else x * 0.0 + 1.0
    if k < 0:
        return 1.0 / ipow(x, -k)
    result = x
    for _ in range(k - 1):
        result = result * x
    return result


def _chain(x: Jet, fx, dfx) -> Jet:
    return Jet(fx, tuple(dfx * p for p in x.partials), x.tag)


def sin(x):
    if isinstance(x, Jet):
        return _chain(x, sin(x.value), cos(x.value))
    return math.sin(x)


def cos(x):
    if isinstance(x, Jet):
        return _chain(x, cos(x.value), -sin(x.value))
    return math.cos(x)


def exp(x):
    if isinstance(x, Jet):
        e = exp(x.value)
        return _chain(x, e, e)
    return math.exp(x)


def ln(x):
    if base_value(x) <= 0.0:
        raise DomainError("logarithm of non-positive value")
    if isinstance(x, Jet):
        return _chain(x, ln(x.value), 1.0 / x.value)
    return math.log(x)


def sqrt(x):
    v = base_value(x)
    if v < 0.0 or (v == 0.0 and isinstance(x, Jet)):
        raise DomainError("square root outside its differentiable domain")
    if isinstance(x, Jet):
        s = sqrt(x.value)
        return _chain(x, s, 0.5 / s)
    return math.sqrt(x)


def fabs(x):
    if isinstance(x, Jet):
        sign = 1.0 if base_value(x.value) > 0 else (-1.0 if base_value(x.value) < 0 else 0.0)
        return _chain(x, fabs(x.value), sign)
    return abs(x)


def tanh(x):
    if isinstance(x, Jet):
        th = tanh(x.value)
        return _chain(x, th, 1.0 - th * th)
    return math.tanh(x)


FUNCTIONS: dict[str, Callable] = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "ln": ln,
    "sqrt": sqrt,
    "abs": fabs,
    "tanh": tanh,
}


# ---------------------------------------------------------------------------
# derivatives of fields

def seed(point: Sequence, tag: int | None = None) -> list[Jet]:
    tag = new_tag() if tag is None else tag
    n = len(point)
    return [Jet(p if isinstance(p, Jet) else float(p), tuple([1.0 if j == i else 0.0 for j in range(n)]), tag)
            for i, p in enumerate(point)]


def _is_plain(point: Sequence) -> bool:
    return not any(isinstance(p, Jet) for p in point)


def partials_of(y, tag: int, n: int) -> list:
    if isinstance(y, Jet) and y.tag == tag:
        return list(y.partials)
    return [0.0] * n


def value_of(y, tag: int):
    if isinstance(y, Jet) and y.tag == tag:
        return y.value
    return y


def gradient(f: Callable, point: Sequence, time: float = 0.0):
    """Exact gradient of ``f(point, time)`` with respect to the coordinates.

    Returns a float array for a real point; for a point made of jets the
    entries are carriers of the outer level.
    """
    tag = new_tag()
    y = f(seed(point, tag), time)
    g = partials_of(y, tag, len(point))
    if _is_plain(point):
        return np.array([float(v) for v in g])
    return g


def value_and_gradient(f: Callable, point: Sequence, time: float = 0.0):
    tag = new_tag()
    y = f(seed(point, tag), time)
    return value_of(y, tag), partials_of(y, tag, len(point))


def fd_gradient(f: Callable, point: Sequence, time: float = 0.0, h: float = 1e-5) -> np.ndarray:
    """Central differences with step ``h * max(1, |x_i|)``."""
    if h <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(point, dtype=float)
    out = np.empty(len(x))
    for i in range(len(x)):
        hi = h * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += hi
        xm[i] -= hi
        out[i] = (float(f(xp.tolist(), time)) - float(f(xm.tolist(), time))) / (xp[i] - xm[i])
    return out


def jacobian_rows(fs: Sequence[Callable], point: Sequence, time: float = 0.0) -> list[list]:
    """Gradients of several fields sharing one seeding; carrier entries."""
    tag = new_tag()
    xs = seed(point, tag)
    n = len(point)
    return [partials_of(f(xs, time), tag, n) for f in fs]


def jacobian(fs: Sequence[Callable], point: Sequence, time: float = 0.0) -> np.ndarray:
    rows = jacobian_rows(fs, point, time)
    return np.array([[float(v) for v in r] for r in rows]).reshape(len(fs), len(point))


def det(matrix: Sequence[Sequence]) -> Any:
    """Determinant by Gaussian elimination with partial pivoting.

    Works for any carrier; the pivot is chosen by the magnitude of the real
    part so the elimination order is the same for every carrier.
    """
    a = [list(row) for row in matrix]
    n = len(a)
    if n == 0:
        return 1.0
    sign = 1.0
    result = None
    for k in range(n):
        p = max(range(k, n), key=lambda r: abs(base_value(a[r][k])))
        if base_value(a[p][k]) == 0.0:
            return a[p][k] * 0.0
        if p != k:
            a[k], a[p] = a[p], a[k]
            sign = -sign
        pivot = a[k][k]
        result = pivot if result is None else result * pivot
        for r in range(k + 1, n):
            m = a[r][k] / pivot
            row_k, row_r = a[k], a[r]
            for c in range(k + 1, n):
                row_r[c] = row_r[c] - m * row_k[c]
    return result if sign > 0 else -result


def minor_matrix(rows: Sequence[Sequence], omit: int) -> list[list]:
    """Drop column ``omit`` (0-based)."""
    return [[v for j, v in enumerate(r) if j != omit] for r in rows]


def jacobian_minor(fs: Sequence[Callable], point: Sequence, time: float, omit: int):
    """Determinant of the gradients of ``n-1`` fields with column ``omit`` deleted.

    ``omit`` is 1-based, matching the coordinate numbering x^1..x^n.
    """
    n = len(point)
    if not 1 <= omit <= n:
        raise IndexError(f"omitted coordinate {omit} outside 1..{n}")
    if len(fs) != n - 1:
        raise ValueError(f"need {n - 1} fields, got {len(fs)}")
    rows = jacobian_rows(fs, point, time)
    d = det(minor_matrix(rows, omit - 1))
    return float(d) if _is_plain(point) else d


def vector_jacobian(X: Callable, point: Sequence, time: float = 0.0) -> list[list]:
    """Matrix D[i][j] = d X^i / d x^j of a vector-valued evaluator."""
    tag = new_tag()
    out = X(seed(point, tag), time)
    n = len(point)
    return [partials_of(c, tag, n) for c in out]


def lie_bracket(X: Callable, Y: Callable, point: Sequence, time: float = 0.0) -> np.ndarray:
    """[X, Y] = (DY) X - (DX) Y at the point."""
    tag = new_tag()
    xs = seed(point, tag)
    xo = X(xs, time)
    yo = Y(xs, time)
    n = len(point)
    xv = [value_of(c, tag) for c in xo]
    yv = [value_of(c, tag) for c in yo]
    dx = [partials_of(c, tag, n) for c in xo]
    dy = [partials_of(c, tag, n) for c in yo]
    res = []
    for i in range(len(xo)):
        s = 0.0
        for j in range(n):
            s = s + dy[i][j] * xv[j] - dx[i][j] * yv[j]
        res.append(s)
    if _is_plain(point):
        return np.array([float(v) for v in res])
    return res

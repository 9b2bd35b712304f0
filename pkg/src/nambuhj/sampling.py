"""Seeded sampling of points and random polynomial fields.

All randomness goes through ``numpy.random.Generator`` with the PCG64 bit
generator, so a seed fixes every sampled point and coefficient on any
platform.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

from .expr import _fmt_number
from .fields import ScalarField

RNG_ALGORITHM = "numpy.random.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def _monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            exps = [0] * nvars
            for c in combo:
                exps[c] += 1
            out.append(tuple(exps))
    return out


def _term(coef: float, exps: Sequence[int], coords: Sequence[str]) -> str:
    factors = []
    for name, e in zip(coords, exps):
        if e == 1:
            factors.append(name)
        elif e > 1:
            factors.append(f"{name}^{e}")
    c = _fmt_number(abs(coef))
    return " * ".join([c, *factors]) if factors else c


def random_polynomial_text(rng: np.random.Generator, coords: Sequence[str], degree: int,
                           n_terms: int | None = None, scale: float = 1.0) -> str:
    """Polynomial with coefficients uniform in [-scale, scale], as expression text.

    Coefficients are rounded to 6 decimals so the text is short and exact
    to re-parse.
    """
    monos = _monomials(len(coords), degree)
    if n_terms is not None and n_terms < len(monos):
        idx = sorted(rng.choice(len(monos), size=n_terms, replace=False))
        monos = [monos[i] for i in idx]
    parts = []
    for exps in monos:
        c = round(float(rng.uniform(-scale, scale)), 6)
        if c == 0.0:
            continue
        t = _term(c, exps, coords)
        if not parts:
            parts.append(f"-{t}" if c < 0 else t)
        else:
            parts.append(f" - {t}" if c < 0 else f" + {t}")
    return "".join(parts) or "0"


def random_polynomial(rng: np.random.Generator, coords: Sequence[str], degree: int,
                      n_terms: int | None = None) -> ScalarField:
    return ScalarField.from_expr(random_polynomial_text(rng, coords, degree, n_terms), coords)


def sample_points(rng: np.random.Generator, dim: int, count: int, low: float = -2.0, high: float = 2.0,
                  accept: Callable[[np.ndarray], bool] | None = None, max_tries: int = 100_000) -> np.ndarray:
    """Uniform points in a box, rejection-filtered by ``accept``."""
    pts = []
    tries = 0
    while len(pts) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could only sample {len(pts)} of {count} acceptable points")
        p = rng.uniform(low, high, size=dim)
        if accept is None or accept(p):
            pts.append(p)
    return np.array(pts).reshape(count, dim)

"""Hamilton-Jacobi problem for sections of pi: R^n -> R^(n-1).

``pi`` drops the last coordinate.  A section is the graph
``x -> (x, gamma_n(x))``.  The module evaluates the projected Hamiltonian
field, three equivalent residuals of the HJ condition, the pointwise
Lagrangian-submanifold test, and complete-solution families.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import diff, expr
from .diff import det, jacobian_rows, minor_matrix
from .fields import ScalarField, VectorField
from .nambu import HamiltonianTuple, VolumeNPStructure, hamiltonian_components

RANK_TOL = 1e-10


@dataclass(frozen=True)
class Section:
    gamma: ScalarField
    name: str = ""

    @property
    def base_dim(self) -> int:
        return self.gamma.dim

    @property
    def dim(self) -> int:
        return self.gamma.dim + 1

    @classmethod
    def from_expr(cls, text: str, base_coords: Sequence[str],
                  table: expr.CoefficientTable | None = None) -> "Section":
        return cls(ScalarField.from_expr(text, base_coords, table), text)


def embed(section: Section, base_point: Sequence, time: float = 0.0) -> list:
    if len(base_point) != section.base_dim:
        raise ValueError(f"base point has {len(base_point)} entries, expected {section.base_dim}")
    return [*base_point, section.gamma(base_point, time)]


def project(point: Sequence) -> list:
    return list(point[:-1])


def projected_field(H: HamiltonianTuple, section: Section) -> VectorField:
    """T(pi) o X_H o gamma, a field on the base."""
    m = section.base_dim

    def _eval(b, t):
        return hamiltonian_components(H, embed(section, b, t), t)[:m]
    return VectorField(_eval, m, f"X^gamma[{section.name}]", m)


def relatedness_defect(H: HamiltonianTuple, section: Section, base_point: Sequence[float],
                       time: float = 0.0) -> float:
    """Signed last component of T(gamma)(X^gamma) - X o gamma."""
    x = embed(section, [float(v) for v in base_point], time)
    X = [float(v) for v in hamiltonian_components(H, x, time)]
    grad = diff.gradient(section.gamma, base_point, time)
    return float(np.dot(grad, X[:-1]) - X[-1])


def relatedness_residual(H: HamiltonianTuple, section: Section, base_point: Sequence[float],
                         time: float = 0.0) -> float:
    return abs(relatedness_defect(H, section, base_point, time))


def hj_det_residual(H: HamiltonianTuple, section: Section, base_point: Sequence[float],
                    time: float = 0.0) -> float:
    """det of d(H_i o gamma)/dx^j, the (n-1)x(n-1) Jacobian of the pulled-back Hamiltonians."""
    pulled = [ScalarField(lambda b, t, f=f: f(embed(section, b, t), t), section.base_dim)
              for f in H.fields]
    return float(det(jacobian_rows(pulled, base_point, time)))


def hj_sum_residual(H: HamiltonianTuple, section: Section, base_point: Sequence[float],
                    time: float = 0.0) -> float:
    """Minor-weighted sum of the gamma_n slopes.

    sum_{k<n} (-1)^(n-k) M_k dgamma/dx^k - M_n, divided by rho, where M_k
    is the Jacobian minor of H at gamma(x) with column k deleted.  Equal to
    :func:`relatedness_defect`; the k = n term is the inhomogeneous part.
    """
    n = section.dim
    x = embed(section, [float(v) for v in base_point], time)
    rows = jacobian_rows(H.fields, x, time)
    minors = [float(det(minor_matrix(rows, k))) for k in range(n)]
    grad = diff.gradient(section.gamma, base_point, time)
    s = 0.0
    for k in range(n - 1):
        sign = -1.0 if (n - 1 - k) % 2 else 1.0
        s += sign * minors[k] * grad[k]
    s -= minors[n - 1]
    return s / float(H.structure.rho(x, time))


# ---------------------------------------------------------------------------
# Lagrangian submanifolds

@dataclass
class AnnihilatorReport:
    j: int
    basis: np.ndarray
    dimension: int
    sharp_dimension: int
    lagrangian: bool
    lower_dimensions: dict[int, int] = field(default_factory=dict)
    tangent_dimension: int = 0


def _rank(m: np.ndarray) -> int:
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


def _null_space(a: np.ndarray, n: int) -> np.ndarray:
    """Rows spanning the null space of ``a`` (shape m x n)."""
    if a.size == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(a)
    r = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    return vt[r:]


def _form_on(vectors: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Values of the n basis (n-1)-forms on n-1 vectors."""
    u = np.column_stack(vectors)
    return np.array([float(np.linalg.det(np.delete(u, i, axis=0))) for i in range(n)])


def annihilator(tangent: np.ndarray, j: int) -> np.ndarray:
    """Basis rows (over the basis (n-1)-forms) of Ann^j for the span of ``tangent`` columns."""
    n, d = tangent.shape
    conditions = []
    coord = np.eye(n)
    for S in itertools.combinations(range(d), j):
        vs = [tangent[:, s] for s in S]
        for W in itertools.combinations(range(n), n - 1 - j):
            conditions.append(_form_on(vs + [coord[:, w] for w in W], n))
    a = np.array(conditions).reshape(len(conditions), n)
    return _null_space(a, n)


def sharp_matrix(structure: VolumeNPStructure, point: Sequence[float], time: float = 0.0) -> np.ndarray:
    n = structure.dim
    rho = float(structure.rho(list(point), time))
    return np.diag([(-1.0 if (n - i) % 2 else 1.0) / rho for i in range(1, n + 1)])


def annihilator_report(structure: VolumeNPStructure, point: Sequence[float], tangent: np.ndarray,
                       time: float = 0.0) -> AnnihilatorReport:
    """Lagrangian test for the subspace spanned by the columns of ``tangent``."""
    n = structure.dim
    tangent = np.asarray(tangent, dtype=float).reshape(n, -1)
    S = sharp_matrix(structure, point, time)
    ann = annihilator(tangent, n - 1)
    image = S @ ann.T if ann.size else np.zeros((n, 0))
    # T_xN intersected with the image of sharp
    null = _null_space(np.hstack([S, -tangent]), n + tangent.shape[1])
    inter = S @ null[:, :n].T if null.size else np.zeros((n, 0))
    r_img, r_int = _rank(image), _rank(inter)
    lagrangian = r_img == r_int and _rank(np.hstack([image, inter])) == r_int
    lower = {j: int(annihilator(tangent, j).shape[0]) for j in range(1, n - 1)}
    return AnnihilatorReport(n - 1, ann, int(ann.shape[0]), r_img, bool(lagrangian), lower,
                             _rank(tangent))


def graph_tangent(section: Section, base_point: Sequence[float], time: float = 0.0) -> np.ndarray:
    """Columns d/dx^k + (dgamma/dx^k) d/dx^n."""
    m = section.base_dim
    grad = diff.gradient(section.gamma, base_point, time)
    t = np.zeros((m + 1, m))
    t[:m, :m] = np.eye(m)
    t[m, :] = grad
    return t


def lagrangian_check(structure: VolumeNPStructure, section: Section, base_point: Sequence[float],
                     time: float = 0.0) -> AnnihilatorReport:
    point = [float(v) for v in embed(section, [float(b) for b in base_point], time)]
    return annihilator_report(structure, point, graph_tangent(section, base_point, time), time)


# ---------------------------------------------------------------------------
# complete solutions

@dataclass
class CompleteSolution:
    family: Callable[[float], Section]
    lambdas: list[float]

    @classmethod
    def from_expr(cls, text: str, base_coords: Sequence[str], lambdas: Sequence[float],
                  table: expr.CoefficientTable | None = None, param: str = "lam") -> "CompleteSolution":
        table = table or expr.CoefficientTable()
        node = expr.parse(text, base_coords, coefficients=[*table.names(), param])

        def family(lam: float) -> Section:
            tab = table.with_values(**{param: float(lam)})
            return Section(ScalarField.from_node(node, base_coords, tab), f"{text} [{param}={lam!r}]")
        return cls(family, [float(v) for v in lambdas])

    def phi(self, base_point: Sequence[float], lam: float, time: float = 0.0) -> list[float]:
        return [float(v) for v in embed(self.family(lam), list(base_point), time)]


@dataclass
class CompleteSolutionReport:
    det_residuals: dict[float, float]
    hj_pass: dict[float, bool]
    min_abs_jacobian: float
    singular_at: list[tuple[list[float], float]]
    monotone: bool
    label_error: float
    passed: bool


def recover_label(cs: CompleteSolution, point: Sequence[float], time: float = 0.0) -> float:
    """f = pr_R o Phi^{-1}: the lambda whose section passes through ``point``."""
    base, target = list(point[:-1]), float(point[-1])
    lams = sorted(cs.lambdas)

    def g(lam):
        return cs.family(lam).gamma.value(base, time) - target
    vals = [g(l) for l in lams]
    for l, v in zip(lams, vals):
        if v == 0.0:
            return l
    for (la, va), (lb, vb) in zip(zip(lams, vals), zip(lams[1:], vals[1:])):
        if va * vb < 0:
            return float(brentq(g, la, lb, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    raise ValueError(f"no family member passes through {list(point)}")


def complete_solution_check(H: HamiltonianTuple, cs: CompleteSolution, base_grid: Sequence[Sequence[float]],
                            tol: float = 1e-8, time: float = 0.0, lam_step: float = 1e-5) -> CompleteSolutionReport:
    if not cs.lambdas or not len(base_grid):
        raise ValueError("lambda grid and base grid must be non-empty")
    det_res, hj_ok = {}, {}
    for lam in cs.lambdas:
        sec = cs.family(lam)
        r = max(abs(hj_det_residual(H, sec, list(b), time)) for b in base_grid)
        det_res[lam] = r
        hj_ok[lam] = r <= tol
    min_jac = np.inf
    singular = []
    for lam in cs.lambdas:
        for b in base_grid:
            b = [float(v) for v in b]
            m = len(b)
            grad = diff.gradient(cs.family(lam).gamma, b, time)
            hl = lam_step * max(1.0, abs(lam))
            dlam = (cs.family(lam + hl).gamma.value(b, time)
                    - cs.family(lam - hl).gamma.value(b, time)) / (2 * hl)
            J = np.zeros((m + 1, m + 1))
            J[:m, :m] = np.eye(m)
            J[m, :m] = grad
            J[m, m] = dlam
            d = abs(float(det(J.tolist())))
            min_jac = min(min_jac, d)
            if d < 1e-10:
                singular.append((b, lam))
    lams = sorted(cs.lambdas)
    monotone = True
    label_err = 0.0
    for b in base_grid:
        b = [float(v) for v in b]
        vals = np.array([cs.family(l).gamma.value(b, time) for l in lams])
        diffs = np.diff(vals)
        if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
            monotone = False
    if monotone:
        for b in base_grid:
            for lam in lams:
                rec = recover_label(cs, cs.phi(b, lam, time), time)
                label_err = max(label_err, abs(rec - lam))
    else:
        label_err = np.inf
    passed = all(hj_ok.values()) and not singular and monotone and label_err <= 1e-8 * max(1.0, max(map(abs, lams)))
    return CompleteSolutionReport(det_res, hj_ok, float(min_jac), singular, monotone, float(label_err), passed)

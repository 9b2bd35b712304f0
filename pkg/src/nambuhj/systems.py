"""Built-in systems: third-order Kummer-Schwarz and n coupled Riccati equations.

Each preset bundles the first-order ODE right-hand side, the Hamiltonian
pair/tuple whose Nambu bracket reproduces it, auxiliary functions, vector
fields and presymplectic two-forms, plus the numerically derived conformal
density ``rho*`` that turns the canonical bracket dynamics into the ODE.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import diff
from .diff import base_value, det, jacobian_rows, minor_matrix
from .errors import DomainError, NambuError, StationaryPointError
from .expr import CoefficientTable
from .fields import ScalarField, VectorField
from .nambu import HamiltonianTuple, VolumeNPStructure, bracket
from .sampling import sample_points

PRESETS = ("ks3", "riccati")


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric matrix field given by its upper-triangle entries."""

    name: str
    dim: int
    entries: Mapping[tuple[int, int], ScalarField]

    def matrix(self, point: Sequence[float], time: float = 0.0) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for (i, j), f in self.entries.items():
            v = f.value(point, time)
            m[i, j] += v
            m[j, i] -= v
        return m

    def contract(self, Y: Sequence, point: Sequence, time: float = 0.0) -> list:
        """(iota_Y omega)_j = sum_i Y^i omega_ij, carrier-generic."""
        out: list = [0.0] * self.dim
        for (i, j), f in self.entries.items():
            w = f(point, time)
            out[j] = out[j] + Y[i] * w
            out[i] = out[i] - Y[j] * w
        return out


@dataclass
class SystemPreset:
    name: str
    coords: list[str]
    table: CoefficientTable
    structure: VolumeNPStructure
    hamiltonians: HamiltonianTuple
    rhs: VectorField
    aux: dict[str, ScalarField] = field(default_factory=dict)
    vector_fields: dict[str, VectorField] = field(default_factory=dict)
    two_forms: dict[str, TwoForm] = field(default_factory=dict)
    pairings: dict[tuple[str, str], tuple[str, float]] = field(default_factory=dict)
    printed_density: Callable[[Sequence[float], float], float] | None = None
    box: tuple[float, float] = (-2.0, 2.0)
    accept: Callable[[np.ndarray], bool] | None = None
    derived_density: bool = True

    @property
    def dim(self) -> int:
        return len(self.coords)

    def domain(self, point: Sequence[float]) -> bool:
        return self.structure.domain(point)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        acc = self.accept or self.domain
        return sample_points(rng, self.dim, count, *self.box, accept=acc)

    def density_field(self) -> ScalarField:
        return conformal_density_field(self)

    def nambu_structure(self) -> VolumeNPStructure:
        return self.structure.with_density(self.density_field())

    def nambu_hamiltonians(self) -> HamiltonianTuple:
        return HamiltonianTuple(self.hamiltonians.fields, self.nambu_structure())

    def flow_structure(self) -> VolumeNPStructure:
        """Structure whose Hamiltonian field is integrated by default."""
        return self.nambu_structure() if self.derived_density else self.structure

    def flow_field(self) -> VectorField:
        if self.derived_density:
            return self.nambu_field()
        from .nambu import hamiltonian_vector_field
        return hamiltonian_vector_field(self.hamiltonians)

    def nambu_field(self) -> VectorField:
        """Hamiltonian field of the generators for the density rho*.

        Same values as ``hamiltonian_vector_field(self.nambu_hamiltonians())``
        with one Jacobian evaluation per call.
        """
        H = self.hamiltonians.fields
        rhs = self.rhs
        n = self.dim

        def _eval(p, t):
            rows = jacobian_rows(H, p, t)
            brs = []
            for i in range(n):
                m = det(minor_matrix(rows, i))
                brs.append(-m if (n - 1 - i) % 2 else m)
            f = rhs(p, t)
            i = _usable_index([base_value(v) for v in f])
            scale = f[i] / brs[i]
            return [b * scale for b in brs]
        return VectorField(_eval, n, f"X[{self.name}, rho*]")


def _usable_index(values: Sequence[float], rel_eps: float = 1e-9) -> int:
    eps = rel_eps * max(1.0, max(abs(v) for v in values))
    for i, v in enumerate(values):
        if abs(v) > eps:
            return i
    raise StationaryPointError("right-hand side vanishes in every component")


def canonical_brackets(preset: SystemPreset, point: Sequence, time: float = 0.0) -> list:
    """{H_1..H_{n-1}, x^i} for the canonical volume, i = 1..n."""
    canon = VolumeNPStructure.canonical(preset.dim, preset.structure.domain)
    coords = [ScalarField.coordinate(i, preset.dim) for i in range(preset.dim)]
    H = list(preset.hamiltonians.fields)
    return [bracket(canon, [*H, c], point, time) for c in coords]


def conformal_density_field(preset: SystemPreset) -> ScalarField:
    H = preset.hamiltonians.fields
    n = preset.dim

    def _rho(p, t):
        f = preset.rhs(p, t)
        i = _usable_index([base_value(v) for v in f])
        rows = jacobian_rows(H, p, t)
        m = det(minor_matrix(rows, i))
        if (n - 1 - i) % 2:
            m = -m
        return m / f[i]
    return ScalarField(_rho, n, "rho*", autonomous=preset.hamiltonians.autonomous)


@dataclass(frozen=True)
class DensityEstimate:
    rho: float
    spread: float
    index: int
    brackets: np.ndarray
    rhs: np.ndarray


def derive_density(preset: SystemPreset, point: Sequence[float], time: float = 0.0,
                   rel_eps: float = 1e-9) -> DensityEstimate:
    """rho* from the first coordinate with non-negligible rhs, and the spread of the other ratios."""
    point = [float(v) for v in point]
    if not preset.domain(point):
        raise DomainError(f"point {point} is outside the {preset.name} domain")
    f = preset.rhs.values(point, time)
    i = _usable_index(list(f), rel_eps)
    br = np.array([float(v) for v in canonical_brackets(preset, point, time)])
    rho = br[i] / f[i]
    if rho == 0.0:
        raise StationaryPointError("Nambu bracket vanishes where the rhs does not")
    eps = rel_eps * max(1.0, float(np.max(np.abs(f))))
    spread = 0.0
    for j in range(len(f)):
        if abs(f[j]) > eps:
            spread = max(spread, abs(br[j] / f[j] - rho) / abs(rho))
    return DensityEstimate(float(rho), float(spread), i, br, f)


# ---------------------------------------------------------------------------
# third-order Kummer-Schwarz

KS3_COORDS = ["x", "v", "a"]

KS3_AUX = {
    "h1": "-2/v",
    "h2": "-a/v^2",
    "h3": "-a^2/(2*v^3) - 2*c0*v",
    "hbar1": "4*x/v",
    "hbar2": "2*a*x/v^2 - 2",
    "hbar3": "a^2*x/v^3 - 2*a/v",
    "hbb1": "4*x^2/v",
    "hbb2": "2*x^2*a/v^2 - 4*x",
    "hbb3": "-4*x*a/v + x^2*a^2/v^3 + 4*v",
}

KS3_VECTOR_FIELDS = {
    "Y1": ["0", "0", "2*v"],
    "Y2": ["0", "v", "2*a"],
    "Y3": ["v", "a", "3/2*a^2/v - 2*c0*v^3"],
    "ZP": ["x^2", "0", "0"],
}

KS3_FORMS = {
    "omega_3ks": {(1, 2): "1/v^3"},
    "omega_zp": {(0, 1): "-2*a/v^3", (1, 2): "-2*x/v^3", (0, 2): "2/v^2"},
    "omega_bb": {(0, 2): "-4*x/v^2", (1, 2): "2*x^2/v^3", (0, 1): "4*x*a/v^3 + 4/v"},
}

# iota_Y omega = sign * d(fn)
KS3_PAIRINGS = {
    ("omega_3ks", "Y1"): ("h1", -1.0),
    ("omega_3ks", "Y2"): ("h2", -1.0),
    ("omega_3ks", "Y3"): ("h3", -1.0),
    ("omega_zp", "Y1"): ("hbar1", -1.0),
    ("omega_zp", "Y2"): ("hbar2", -1.0),
    ("omega_zp", "Y3"): ("hbar3", -1.0),
    ("omega_bb", "Y1"): ("hbb1", 1.0),
    ("omega_bb", "Y2"): ("hbb2", 1.0),
    ("omega_bb", "Y3"): ("hbb3", 1.0),
}

# sign of the generating function relative to iota_Y omega, per form
_FORM_SIGN = {"omega_3ks": -1.0, "omega_zp": -1.0, "omega_bb": 1.0}


def _ks3_domain(p) -> bool:
    return base_value(p[1]) != 0.0


def ks3_preset(c0: float = 0.0, b1: Any = -1.0) -> SystemPreset:
    """Kummer-Schwarz system on {v != 0}.

    ``b1`` is a number or an expression in ``t``.  The generators are
    ``h = h3 + b1 h1`` and ``hbar = hbar3 + b1 hbar1``.
    """
    table = CoefficientTable.from_mapping({"c0": c0, "b1": b1})
    coords = KS3_COORDS
    aux = {k: ScalarField.from_expr(s, coords, table, name=k) for k, s in KS3_AUX.items()}
    h_text = f"{KS3_AUX['h3']} + b1*({KS3_AUX['h1']})"
    hbar_text = f"{KS3_AUX['hbar3']} + b1*({KS3_AUX['hbar1']})"
    aux["h"] = ScalarField.from_expr(h_text, coords, table, name="h")
    aux["hbar"] = ScalarField.from_expr(hbar_text, coords, table, name="hbar")
    structure = VolumeNPStructure.canonical(3, _ks3_domain)
    H = HamiltonianTuple((aux["h"], aux["hbar"]), structure)
    rhs = VectorField.from_exprs(["v", "a", "3/2*a^2/v - 2*c0*v^3 + 2*b1*v"], coords, table, "X_3KS")
    vfs = {k: VectorField.from_exprs(v, coords, table, k) for k, v in KS3_VECTOR_FIELDS.items()}
    forms = {
        name: TwoForm(name, 3, {ij: ScalarField.from_expr(s, coords, table) for ij, s in ent.items()})
        for name, ent in KS3_FORMS.items()
    }

    def printed(p, t):
        x, v, a = p
        b = table.value("b1", t)
        return abs(a * a / (v * v) + 4.0 * b) ** 1.5 / v ** 6

    def accept(p) -> bool:
        return abs(p[1]) >= 0.25
    return SystemPreset("ks3", list(coords), table, structure, H, rhs, aux, vfs, forms,
                        dict(KS3_PAIRINGS), printed, (-2.0, 2.0), accept)


def pairing_residual(preset: SystemPreset, form_name: str, field_name: str, fn_name: str,
                     point: Sequence[float], time: float = 0.0) -> float:
    """|| iota_Y omega - sign * d(fn) || at the point.

    ``fn_name`` is an auxiliary function name (its sign comes from the
    form's convention) or an expression, read as iota_Y omega = d(expr).
    """
    try:
        form = preset.two_forms[form_name]
        Y = preset.vector_fields[field_name]
    except KeyError as exc:
        raise NambuError(f"unknown name {exc.args[0]!r}") from None
    if fn_name in preset.aux:
        fn, sign = preset.aux[fn_name], _FORM_SIGN.get(form_name, 1.0)
    else:
        fn, sign = ScalarField.from_expr(fn_name, preset.coords, preset.table), 1.0
    point = [float(v) for v in point]
    lhs = np.array([float(v) for v in form.contract(Y.values(point, time), point, time)])
    rhs = sign * diff.gradient(fn, point, time)
    return float(np.linalg.norm(lhs - rhs))


ks3_pairing_residual = pairing_residual


def form_bracket(form: TwoForm, f: Callable, g: Callable, point: Sequence[float], time: float = 0.0) -> float:
    """Poisson bracket of admissible functions for a rank-2 two-form in R^3.

    With omega_ij = eps_ijk K^k the bracket is K . (grad f x grad g) / |K|^2;
    for omega_3ks this is v^3 (f_v g_a - f_a g_v).
    """
    w = form.matrix(point, time)
    K = np.array([w[1, 2], w[2, 0], w[0, 1]])
    gf = diff.gradient(f, point, time)
    gg = diff.gradient(g, point, time)
    return float(np.dot(K, np.cross(gf, gg)) / np.dot(K, K))


SL2_RELATIONS = [
    # (form, f, g, target, factor): {f, g} = factor * target
    ("omega_3ks", "h1", "h3", "h2", 2.0),
    ("omega_3ks", "h1", "h2", "h1", 1.0),
    ("omega_3ks", "h2", "h3", "h3", 1.0),
    ("omega_zp", "hbar1", "hbar2", "hbar1", 1.0),
    ("omega_zp", "hbar2", "hbar3", "hbar3", 1.0),
    ("omega_zp", "hbar1", "hbar3", "hbar2", 2.0),
]

COMMUTATORS = [
    # [A, B] = factor * C
    ("Y1", "Y3", "Y2", 2.0),
    ("Y1", "Y2", "Y1", 1.0),
    ("Y2", "Y3", "Y3", 1.0),
]


def ks3_sl2_check(preset: SystemPreset, point: Sequence[float], time: float = 0.0) -> dict[str, float]:
    point = [float(v) for v in point]
    if point[1] == 0.0:
        raise DomainError("v = 0 is outside the Kummer-Schwarz domain")
    out = {}
    for form, f, g, target, k in SL2_RELATIONS:
        val = form_bracket(preset.two_forms[form], preset.aux[f], preset.aux[g], point, time)
        out[f"{{{f},{g}}}_{form} - {k:g}*{target}"] = abs(val - k * preset.aux[target].value(point, time))
    for a, b, c, k in COMMUTATORS:
        vf = preset.vector_fields
        br = diff.lie_bracket(vf[a], vf[b], point, time)
        out[f"[{a},{b}] - {k:g}*{c}"] = float(np.linalg.norm(br - k * vf[c].values(point, time)))
    return out


# ---------------------------------------------------------------------------
# n coupled Riccati equations

def _riccati_coords(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)]


def riccati_hamiltonian_text(n: int, l: int) -> str:
    """h^[l] for l = 1..n-1 (sums over k > l and k < l)."""
    xl = f"x{l}"
    s0, s1, s2 = [], [], []
    for k in range(1, n + 1):
        if k == l:
            continue
        xk = f"x{k}"
        d = f"({xl} - {xk})" if k > l else f"({xk} - {xl})"
        s0.append(f"1/{d}")
        s1.append(f"({xl} + {xk})/{d}")
        s2.append(f"{xl}*{xk}/{d}")
    return (f"a0*({' + '.join(s0)}) + a1/2*({' + '.join(s1)}) + a2*({' + '.join(s2)})")


def _pairwise_distinct(p) -> bool:
    vals = [base_value(v) for v in p]
    return all(a != b for a, b in itertools.combinations(vals, 2))


def riccati_preset(n: int = 3, a0: Any = 0.0, a1: Any = 1.0, a2: Any = 0.0,
                   min_gap: float = 0.25) -> SystemPreset:
    if n < 3:
        raise ValueError(f"Riccati preset needs n >= 3, got {n}")
    table = CoefficientTable.from_mapping({"a0": a0, "a1": a1, "a2": a2})
    coords = _riccati_coords(n)
    aux = {f"h{l}": ScalarField.from_expr(riccati_hamiltonian_text(n, l), coords, table, name=f"h{l}")
           for l in range(1, n)}
    structure = VolumeNPStructure.canonical(n, _pairwise_distinct)
    H = HamiltonianTuple(tuple(aux[f"h{l}"] for l in range(1, n)), structure)
    rhs = VectorField.from_exprs([f"a0 + a1*{c} + a2*{c}^2" for c in coords], coords, table, "X_riccati")
    forms = {}
    for l in range(1, n):
        entries = {}
        for k in range(1, n + 1):
            if k == l:
                continue
            i, j = min(k, l) - 1, max(k, l) - 1
            entries[(i, j)] = ScalarField.from_expr(f"1/(x{k} - x{l})^2", coords, table)
        forms[f"omega{l}"] = TwoForm(f"omega{l}", n, entries)

    def printed(p, t):
        prod = 1.0
        for jh in range(n):
            below = sum(1.0 / (p[k] - p[jh]) ** 2 for k in range(jh))
            above = sum(1.0 / (p[jh] - p[k]) ** 2 for k in range(jh + 1, n))
            prod *= below - above
        return prod

    def accept(p) -> bool:
        return all(abs(a - b) >= min_gap for a, b in itertools.combinations(p, 2))
    return SystemPreset("riccati", coords, table, structure, H, rhs, aux, {}, forms, {},
                        printed, (-2.0, 2.0), accept)


def closedness_residual(form: TwoForm, point: Sequence[float], time: float = 0.0, h: float = 1e-4) -> float:
    """max |d_i w_jk + d_j w_ki + d_k w_ij| by Richardson-extrapolated central differences."""
    x = np.asarray(point, dtype=float)
    n = form.dim

    def dmat(i, step):
        e = np.zeros(n)
        e[i] = step * max(1.0, abs(x[i]))
        return (form.matrix(x + e, time) - form.matrix(x - e, time)) / (2 * e[i])

    grads = []
    for i in range(n):
        d1, d2 = dmat(i, h), dmat(i, h / 2)
        grads.append((4 * d2 - d1) / 3)
    worst = 0.0
    for i, j, k in itertools.combinations(range(n), 3):
        c = grads[i][j, k] + grads[j][k, i] + grads[k][i, j]
        worst = max(worst, abs(c))
    return worst


def riccati_bracket_recovery(preset: SystemPreset, point: Sequence[float], time: float = 0.0) -> np.ndarray:
    """{h^[1..n-1], x^k} / rho* - rhs^k for every k."""
    est = derive_density(preset, point, time)
    return est.brackets / est.rho - est.rhs


def get_preset(name: str, **params: Any) -> SystemPreset:
    if name == "ks3":
        return ks3_preset(**params)
    if name == "riccati":
        return riccati_preset(**params)
    raise NambuError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")

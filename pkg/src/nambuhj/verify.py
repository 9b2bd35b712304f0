"""Verification suites shared by the CLI and the acceptance tests.

Each suite samples points with the supplied generator and returns a list
of :class:`~nambuhj.report.Check` records.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import diff, dynamics, hj
from .errors import DomainExitError, NambuError, StationaryPointError
from .fields import ScalarField
from .nambu import (HamiltonianTuple, VolumeNPStructure, bracket, divergence, fundamental_identity_residual,
                    generator_pairings, hamiltonian_components, hamiltonian_vector_field, leibniz_residual)
from .report import Check, check_from
from .sampling import random_polynomial, sample_points
from .systems import (SystemPreset, closedness_residual, derive_density, ks3_sl2_check, pairing_residual,
                      riccati_bracket_recovery)

SUITES = ("bracket", "fi", "hj", "lagrangian", "system")


def permutation_sign(perm: Sequence[int]) -> float:
    sign = 1.0
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def antisymmetry_residual(structure: VolumeNPStructure, fs: Sequence[ScalarField], perm: Sequence[int],
                          point: Sequence[float], time: float = 0.0) -> float:
    base = bracket(structure, fs, point, time)
    permuted = bracket(structure, [fs[i] for i in perm], point, time)
    return permuted - permutation_sign(perm) * base


def bracket_suite(preset: SystemPreset, rng: np.random.Generator, samples: int = 100,
                  degree: int = 2) -> list[Check]:
    st = preset.structure
    coords = preset.coords
    n = preset.dim
    H = preset.hamiltonians
    pts = preset.sample(rng, samples)
    anti, leib, cons = [], [], []
    for p in pts:
        p = list(p)
        g = random_polynomial(rng, coords, degree)
        perm = [int(i) for i in rng.permutation(n)]
        anti.append(antisymmetry_residual(st, [*H.fields, g], perm, p))
        f1, f2 = random_polynomial(rng, coords, degree), random_polynomial(rng, coords, degree)
        r = leibniz_residual(st, f1, f2, H.fields, p)
        scale = 1.0 + abs(bracket(st, [f1, *H.fields], p)) * abs(f2.value(p)) \
            + abs(bracket(st, [f2, *H.fields], p)) * abs(f1.value(p))
        leib.append(r / scale)
        X = np.array([float(v) for v in hamiltonian_components(H, p)])
        pair = generator_pairings(H, p)
        norms = [np.linalg.norm(diff.gradient(f, p)) * np.linalg.norm(X) for f in H.fields]
        cons.append(max(abs(a) / (1.0 + b) for a, b in zip(pair, norms)))
    return [check_from("antisymmetry (exact)", anti, 0.0),
            check_from("leibniz (relative)", leib, 1e-9),
            check_from("conservation of generators (relative)", cons, 1e-10)]


def fi_suite(structure: VolumeNPStructure, coords: Sequence[str], points: np.ndarray,
             rng: np.random.Generator, degree: int = 3, tol: float = 1e-6) -> Check:
    n = structure.dim
    res = []
    for p in points:
        fs = [random_polynomial(rng, coords, degree) for _ in range(n - 1)]
        gs = [random_polynomial(rng, coords, degree) for _ in range(n)]
        res.append(fundamental_identity_residual(structure, fs, gs, list(p)))
    return check_from(f"fundamental identity (n={n})", res, tol)


def divergence_suite(structure: VolumeNPStructure, coords: Sequence[str], points: np.ndarray,
                     rng: np.random.Generator, degree: int = 3, tol: float = 1e-8) -> Check:
    n = structure.dim
    res = []
    for p in points:
        H = HamiltonianTuple(tuple(random_polynomial(rng, coords, degree) for _ in range(n - 1)), structure)
        res.append(divergence(structure, hamiltonian_vector_field(H), list(p)))
    return check_from(f"divergence-free (n={n})", res, tol)


def base_points(preset: SystemPreset, section: hj.Section, rng: np.random.Generator, count: int) -> np.ndarray:
    def accept(b):
        try:
            return preset.structure.contains(hj.embed(section, list(b)))
        except (NambuError, ArithmeticError):
            return False
    return sample_points(rng, preset.dim - 1, count, *preset.box, accept=accept)


def hj_suite(preset: SystemPreset, section_text: str, rng: np.random.Generator, samples: int = 100,
             tol: float = 1e-8) -> list[Check]:
    section = hj.Section.from_expr(section_text, preset.coords[:-1], preset.table)
    H = preset.hamiltonians
    pts = base_points(preset, section, rng, samples)
    dets, sums, rel, mismatch = [], [], [], []
    for b in pts:
        b = list(b)
        d = hj.hj_det_residual(H, section, b)
        s = hj.hj_sum_residual(H, section, b)
        r = hj.relatedness_residual(H, section, b)
        dets.append(d)
        sums.append(s)
        rel.append(r)
        mismatch.append(float((abs(s) <= tol) != (r <= tol)))
    return [check_from("hj_det_residual", dets, tol),
            check_from("hj_sum_residual", sums, tol),
            check_from("relatedness_residual", rel, tol),
            check_from("zero-set agreement (mismatch count)", [sum(mismatch)], 0.0)]


def lagrangian_suite(preset: SystemPreset, section_text: str, rng: np.random.Generator,
                     samples: int = 100) -> list[Check]:
    section = hj.Section.from_expr(section_text, preset.coords[:-1], preset.table)
    st = preset.structure
    n = preset.dim
    pts = base_points(preset, section, rng, samples)
    flag_fail, dim_fail, lower_fail, codim2_fail = 0, 0, 0, 0
    for b in pts:
        rep = hj.lagrangian_check(st, section, list(b))
        flag_fail += not rep.lagrangian
        dim_fail += rep.dimension != n - 1
        lower_fail += any(d != 0 for d in rep.lower_dimensions.values())
        # control: a random codimension-2 subspace through the same point
        point = [float(v) for v in hj.embed(section, list(b))]
        tangent = rng.normal(size=(n, n - 2))
        codim2_fail += hj.annihilator_report(st, point, tangent).lagrangian
    k = len(pts)
    return [Check("codim-1 graphs flagged Lagrangian (failures)", k, float(flag_fail), 0.0),
            Check("dim Ann^(n-1) = n-1 (failures)", k, float(dim_fail), 0.0),
            Check("dim Ann^j = 0 for j <= n-2 (failures)", k, float(lower_fail), 0.0),
            Check("codim-2 subspaces flagged non-Lagrangian (failures)", k, float(codim2_fail), 0.0)]


def density_spreads(preset: SystemPreset, points: np.ndarray, time: float = 0.0) -> tuple[list[float], int]:
    spreads, skipped = [], 0
    for p in points:
        try:
            spreads.append(derive_density(preset, list(p), time).spread)
        except StationaryPointError:
            skipped += 1
    return spreads, skipped


def cross_integration(preset: SystemPreset, rng: np.random.Generator, count: int = 10,
                      t1: float = 0.5, tol: float = 1e-10, max_tries: int = 200) -> list[float]:
    """Sup-norm gap between the rhs flow and the rho* Nambu flow from random starts."""
    cfg = dynamics.IntegratorConfig(dynamics.RK45, (0.0, t1), abs_tol=tol, rel_tol=tol)
    X = preset.nambu_field()
    gaps = []
    tries = 0
    while len(gaps) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not find initial conditions whose flows stay in the domain")
        x0 = preset.sample(rng, 1)[0]
        try:
            a = dynamics.integrate(preset.rhs, x0, cfg, preset.domain)
            b = dynamics.integrate(X, x0, cfg, preset.domain)
        except (DomainExitError, StationaryPointError, NambuError):
            continue
        if not (np.all(np.isfinite(a.states)) and np.max(np.abs(a.states)) < 1e6):
            continue
        grid = np.linspace(0.0, t1, 51)
        ia = np.column_stack([np.interp(grid, a.times, a.states[:, k]) for k in range(preset.dim)])
        ib = np.column_stack([np.interp(grid, b.times, b.states[:, k]) for k in range(preset.dim)])
        gap = max(float(np.max(np.abs(a.final - b.final))), float(np.max(np.abs(ia - ib))))
        gaps.append(gap)
    return gaps


def system_suite(preset: SystemPreset, rng: np.random.Generator, samples: int = 100,
                 cross_count: int = 10) -> list[Check]:
    pts = preset.sample(rng, samples)
    checks = []
    if preset.name == "ks3":
        for (form, field), (fn, _) in preset.pairings.items():
            checks.append(check_from(f"pairing {form}/{field}/{fn}",
                                     [pairing_residual(preset, form, field, fn, list(p)) for p in pts], 1e-9))
        sl2 = [ks3_sl2_check(preset, list(p)) for p in pts]
        for key in sl2[0]:
            tol = 1e-8 if key.startswith("[") else 1e-9
            checks.append(check_from(key, [r[key] for r in sl2], tol))
    elif preset.name == "riccati":
        closed = [max(closedness_residual(f, list(p)) for f in preset.two_forms.values()) for p in pts]
        checks.append(check_from("two-forms closed", closed, 1e-6))
        rec = []
        for p in pts:
            try:
                r = riccati_bracket_recovery(preset, list(p))
            except StationaryPointError:
                continue
            rec.append(float(np.linalg.norm(r) / max(np.linalg.norm(preset.rhs.values(list(p))), 1e-300)))
        checks.append(check_from("bracket recovery (relative)", rec, 1e-6))
    spreads, _ = density_spreads(preset, pts)
    checks.append(check_from("density consistency spread", spreads, 1e-6))
    if preset.derived_density and cross_count:
        checks.append(check_from("cross-integration sup-norm", cross_integration(preset, rng, cross_count), 1e-5))
    return checks

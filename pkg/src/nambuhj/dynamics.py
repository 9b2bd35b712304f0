"""Flow integration with conservation and volume diagnostics.

Two integrators: classical fixed-step RK4 and the embedded Dormand-Prince
5(4) pair with a PI step controller.  Coefficients of non-autonomous fields
are sampled at the stage times.  Any stage that leaves the domain aborts
the run with :class:`~nambuhj.errors.DomainExitError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .diff import base_value
from .errors import DegenerateError, DomainError, DomainExitError, StepUnderflowError
from .fields import ScalarField

RK4 = "rk4-fixed"
RK45 = "rk45-adaptive"


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = RK4
    t_span: tuple[float, float] = (0.0, 1.0)
    step: float = 1e-3
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    initial_step: float | None = None
    min_step: float = 1e-12
    max_step: float = math.inf
    stride: int = 1

    def __post_init__(self):
        t0, t1 = self.t_span
        if not t1 > t0:
            raise ValueError(f"t_span must be increasing, got {self.t_span}")
        if self.method not in (RK4, RK45):
            raise ValueError(f"unknown method {self.method!r}")
        if self.step <= 0 or self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("step and tolerances must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _evaluate(X: Callable, x: np.ndarray, t: float, domain: Callable | None, t_valid: float) -> np.ndarray:
    if domain is not None and not domain(x):
        raise DomainExitError(f"stage at t={t!r} left the domain", t_valid)
    try:
        out = np.array([base_value(v) for v in X(list(x), t)])
    except (DomainError, ZeroDivisionError) as exc:
        raise DomainExitError(f"stage at t={t!r} failed: {exc}", t_valid) from None
    if not np.all(np.isfinite(out)):
        raise DomainExitError(f"non-finite field value at t={t!r}", t_valid)
    return out


def rk4_step(X: Callable, t: float, x: np.ndarray, h: float, domain=None, t_valid=None) -> np.ndarray:
    tv = t if t_valid is None else t_valid
    k1 = _evaluate(X, x, t, domain, tv)
    k2 = _evaluate(X, x + 0.5 * h * k1, t + 0.5 * h, domain, tv)
    k3 = _evaluate(X, x + 0.5 * h * k2, t + 0.5 * h, domain, tv)
    k4 = _evaluate(X, x + h * k3, t + h, domain, tv)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dopri_step(X, t, x, h, k1, domain, t_valid):
    ks = [k1]
    for i in range(1, 7):
        xi = x + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(_evaluate(X, xi, t + _C[i] * h, domain, t_valid))
    x5 = x + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return x5, err, ks[-1]


def integrate(X: Callable, x0: Sequence[float], config: IntegratorConfig,
              domain: Callable[[Sequence[float]], bool] | None = None,
              diagnostics: Mapping[str, Callable[[np.ndarray, float], float]] | None = None) -> Trajectory:
    """Integrate ``dx/dt = X(x, t)`` from ``x0`` over ``config.t_span``.

    Every ``stride``-th accepted step is sampled, and the final state always is.
    """
    t0, t1 = config.t_span
    x = np.asarray(x0, dtype=float).copy()
    if domain is not None and not domain(x):
        raise DomainExitError("initial condition is outside the domain", t0)
    times = [t0]
    states = [x.copy()]
    nsteps = 0
    rejected = 0

    def record(t, y, last=False):
        if nsteps % config.stride == 0 or last:
            if times[-1] != t:
                times.append(t)
                states.append(y.copy())

    if config.method == RK4:
        n = max(1, int(round((t1 - t0) / config.step)))
        h = (t1 - t0) / n
        t = t0
        for k in range(n):
            x = rk4_step(X, t, x, h, domain, t)
            nsteps += 1
            t = t0 + (k + 1) * h if k + 1 < n else t1
            record(t, x, last=(k + 1 == n))
    else:
        t = t0
        k1 = _evaluate(X, x, t, domain, t)
        h = config.initial_step or _initial_step(X, t, x, k1, config, domain)
        err_prev = 1e-4
        while t < t1:
            h = min(h, config.max_step, t1 - t)
            if h < config.min_step and t1 - t > config.min_step:
                raise StepUnderflowError(f"step {h!r} below minimum at t={t!r}")
            x_new, err, k_last = _dopri_step(X, t, x, h, k1, domain, t)
            scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(x), np.abs(x_new))
            en = float(np.sqrt(np.mean((err / scale) ** 2))) if len(x) else 0.0
            if en <= 1.0:
                t = t + h if t1 - (t + h) > 1e-15 * max(1.0, abs(t1)) else t1
                x = x_new
                k1 = k_last
                nsteps += 1
                record(t, x, last=(t == t1))
                # PI controller (exponents 0.7/5 and 0.4/5)
                en = max(en, 1e-10)
                fac = 0.9 * en ** (-0.7 / 5) * err_prev ** (0.4 / 5)
                h = h * min(5.0, max(0.2, fac))
                err_prev = en
            else:
                rejected += 1
                h = h * max(0.2, 0.9 * en ** (-1 / 5))
    traj = Trajectory(np.array(times), np.array(states), steps=nsteps, rejected=rejected)
    if diagnostics:
        for name, fn in diagnostics.items():
            traj.diagnostics[name] = np.array([fn(s, tt) for s, tt in zip(traj.states, traj.times)])
    return traj


def _initial_step(X, t, x, f0, config, domain) -> float:
    scale = config.abs_tol + config.rel_tol * np.abs(x)
    d0 = float(np.sqrt(np.mean((x / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, config.t_span[1] - config.t_span[0])
    f1 = _evaluate(X, x + h0 * f0, t + h0, domain, t)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


@dataclass(frozen=True)
class Drift:
    max_drift: float
    final_drift: float
    conserved_claim: bool


def conservation_report(traj: Trajectory, fields: Sequence[ScalarField]) -> dict[str, Drift]:
    """Drift |f(x(t)) - f(x(t0))| along the samples.

    Time-dependent fields are evaluated at their own sample time and carry
    ``conserved_claim=False``.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    report = {}
    for f in fields:
        vals = np.array([f.value(list(s), float(t)) for s, t in zip(traj.states, traj.times)])
        d = np.abs(vals - vals[0])
        report[f.name] = Drift(float(d.max()), float(d[-1]), f.autonomous)
    return report


def convergence_order(X: Callable, x0: Sequence[float], t1: float, steps: Sequence[float],
                      t0: float = 0.0, domain=None) -> float:
    """Observed RK4 order: slope of log(error) against log(step).

    The reference is the Richardson-extrapolated solution from the smallest
    step and its half.
    """
    steps = sorted(float(h) for h in steps)
    if len(steps) < 3:
        raise ValueError("need at least three step sizes")

    def final(h):
        return integrate(X, x0, IntegratorConfig(RK4, (t0, t1), step=h), domain).final

    finals = [final(h) for h in steps]
    fine = final(steps[0] / 2.0)
    ref = fine + (fine - finals[0]) / 15.0
    errors = np.array([float(np.linalg.norm(f - ref)) for f in finals])
    floor = 1e-14 * max(1.0, float(np.linalg.norm(ref)))
    if np.any(errors <= floor):
        raise DegenerateError("integration error is at round-off level; order is undefined")
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)

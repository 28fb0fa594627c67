"""Iterative solvers: sketched descent, heavy ball, steepest descent, CG.

One engine drives the sketched methods: each iteration a sampling rule picks
an index, the family evaluates its loss, G-gradient direction and exact
step, and the iterate moves by omega times that step, optionally plus a
heavy ball term gamma * (x_k - x_{k-1}). Steepest descent and conjugate
gradients get dedicated loops so they can serve as independent references:
steepest descent must coincide with the full-sketch solver, and conjugate
gradients is algebraically the heavy ball iteration whose step and momentum
coefficients are chosen adaptively instead of held fixed.

Residuals, errors and wall times are recorded at checkpoints; the stopping
test ||A x - b|| <= tol runs at the same granularity. Vector families
default to a checkpoint every 100 iterations so the O(m n) residual never
dominates the O(n) iteration; everything else checks every iteration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidConfigError, SizeLimitError
from .linalg import SpdFactor, as_vector, pinv_psd
from .problems import LinearSystem, resolve_x_star
from .rng import make_rng
from .sampling import CappedRule, rule_expectation, select
from .sketching import VECTOR_KINDS, SketchFamily, apply_update, require_spd

DIVERGENCE_NORM = 1e12

X0_PRESETS = ("ones1000", "zero", "range")


@dataclass
class SolverConfig:
    """Knobs shared by every solver.

    x0 is a preset name or an explicit start vector. "ones1000" is the
    far-away deterministic start 1000 * ones used by the benchmark
    protocol, "zero" is the origin, and "range" projects the far start
    onto range(G^{-1} A'), the subspace the momentum certificates assume.
    check_every = None picks 100 for vector sketch families and 1
    otherwise. reps only matters to the benchmark driver.
    """

    omega: float = 1.0
    gamma: float = 0.0
    tol: float = 1e-10
    max_iters: int = 100_000
    seed: int = 0
    x0: object = "ones1000"
    check_every: int | None = None
    track_cesaro: bool = False
    reps: int = 10

    def validate(self) -> None:
        if not 0.0 < self.omega < 2.0:
            raise InvalidConfigError(f"omega must be in (0, 2), got {self.omega}")
        if self.gamma < 0.0:
            raise InvalidConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.tol < 0.0:
            raise InvalidConfigError(f"tol must be >= 0, got {self.tol}")
        if self.max_iters < 0:
            raise InvalidConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.check_every is not None and self.check_every < 1:
            raise InvalidConfigError("check_every must be >= 1")
        if self.reps < 1:
            raise InvalidConfigError("reps must be >= 1")
        if isinstance(self.x0, str) and self.x0 not in X0_PRESETS:
            raise InvalidConfigError(
                f"unknown x0 preset {self.x0!r}; choose from {X0_PRESETS}"
            )


@dataclass
class IterationTrace:
    """Checkpoint series plus final state for one solver run.

    Checkpoint j describes the iterate after ks[j] updates: its residual
    norm, its B-norm error relative to the start, its squared G-norm error,
    the loss that drove the latest update (or the rule-expected loss, see
    f_mode), and cumulative wall time. Wall times are the only
    non-deterministic fields. selected is -1 before the first update.
    cesaro_f tracks the rule-expected loss of the running iterate average
    when that was requested.
    """

    method: str
    ks: np.ndarray
    residuals: np.ndarray
    rel_errors: np.ndarray
    err_g_sq: np.ndarray
    f_values: np.ndarray
    times: np.ndarray
    selected: np.ndarray
    iterations: int
    converged: bool
    x_final: np.ndarray
    f_mode: str = "selected"
    cesaro_f: np.ndarray | None = None
    x_cesaro: np.ndarray | None = None
    x_star: np.ndarray | None = None
    x_star_is_projection: bool = False
    diverged: bool = False

    def final_residual(self) -> float:
        return float(self.residuals[-1])


def resolve_x0(cfg_x0, system: LinearSystem) -> np.ndarray:
    """Start vector from a preset name or an explicit array."""
    n = system.n
    if isinstance(cfg_x0, str):
        if cfg_x0 == "zero":
            return np.zeros(n)
        if cfg_x0 == "ones1000":
            return 1000.0 * np.ones(n)
        if cfg_x0 == "range":
            base = 1000.0 * np.ones(n)
            return project_onto_gradient_span(system, base)
        raise InvalidConfigError(f"unknown x0 preset {cfg_x0!r}")
    x0 = as_vector(np.asarray(cfg_x0, dtype=np.float64).copy(), "x0")
    if x0.shape != (n,):
        raise InvalidConfigError(f"x0 has length {x0.size}, expected {n}")
    return x0


def project_onto_gradient_span(system: LinearSystem, x: np.ndarray) -> np.ndarray:
    """G-orthogonal projection of x onto range(G^{-1} A').

    Every sketched gradient lives in that span, so iterates started inside
    it stay inside it; the momentum certificates assume exactly this.
    """
    if max(system.m, system.n) > 2000:
        raise SizeLimitError("dense projection refused above desk scale")
    A = system.A
    M = A @ system.G_factor.solve(A.T)
    coeff = pinv_psd(0.5 * (M + M.T)) @ (A @ x)
    return system.G_factor.solve(A.T @ coeff)


class _Recorder:
    """Accumulates checkpoint rows and assembles the trace."""

    def __init__(self, method: str, system: LinearSystem, x0: np.ndarray,
                 f_mode: str, track_cesaro: bool):
        self.method = method
        self.system = system
        self.f_mode = f_mode
        self.track_cesaro = track_cesaro
        try:
            self.x_star, self.is_proj = resolve_x_star(system, x0)
        except SizeLimitError:
            self.x_star, self.is_proj = None, False
        self.err0_b = (system.error_sq_b(x0, self.x_star)
                       if self.x_star is not None else np.nan)
        self.t0 = time.perf_counter()
        self.ks: list[int] = []
        self.residuals: list[float] = []
        self.rel_errors: list[float] = []
        self.err_g_sq: list[float] = []
        self.f_values: list[float] = []
        self.times: list[float] = []
        self.selected: list[int] = []
        self.cesaro_f: list[float] = []

    def record(self, k: int, x: np.ndarray, residual: float, f_value: float,
               sel_index: int, cesaro_f: float = np.nan) -> None:
        self.ks.append(k)
        self.residuals.append(residual)
        if self.x_star is None:
            self.rel_errors.append(np.nan)
            self.err_g_sq.append(np.nan)
        else:
            err_b = self.system.error_sq_b(x, self.x_star)
            self.rel_errors.append(
                np.sqrt(err_b / self.err0_b) if self.err0_b > 0.0 else 0.0)
            self.err_g_sq.append(self.system.error_sq_g(x, self.x_star))
        self.f_values.append(f_value)
        self.selected.append(sel_index)
        self.cesaro_f.append(cesaro_f)
        self.times.append(time.perf_counter() - self.t0)

    def finish(self, iterations: int, converged: bool, x: np.ndarray,
               x_cesaro: np.ndarray | None = None,
               diverged: bool = False) -> IterationTrace:
        return IterationTrace(
            method=self.method,
            ks=np.asarray(self.ks, dtype=np.intp),
            residuals=np.asarray(self.residuals),
            rel_errors=np.asarray(self.rel_errors),
            err_g_sq=np.asarray(self.err_g_sq),
            f_values=np.asarray(self.f_values),
            times=np.asarray(self.times),
            selected=np.asarray(self.selected, dtype=np.intp),
            iterations=iterations,
            converged=converged,
            x_final=x.copy(),
            f_mode=self.f_mode,
            cesaro_f=np.asarray(self.cesaro_f) if self.track_cesaro else None,
            x_cesaro=None if x_cesaro is None else x_cesaro.copy(),
            x_star=self.x_star,
            x_star_is_projection=self.is_proj,
            diverged=diverged,
        )


def _check_finite(x: np.ndarray, rec: _Recorder, k: int) -> None:
    norm = float(np.linalg.norm(x))
    if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
        trace = rec.finish(k, False, np.nan_to_num(x, posinf=0.0, neginf=0.0),
                           diverged=True)
        raise DivergenceError(
            f"iterate norm {norm:.3e} at iteration {k}", trace=trace)


def _run_sketched(method: str, system: LinearSystem, family: SketchFamily,
                  rule, cfg: SolverConfig, gamma: float) -> IterationTrace:
    cfg.validate()
    if family.system is not system:
        raise InvalidConfigError("family was built for a different system")
    x = resolve_x0(cfg.x0, system)
    rng = make_rng(cfg.seed)
    check_every = cfg.check_every or (100 if family.kind in VECTOR_KINDS else 1)
    exact_f = isinstance(rule, CappedRule)
    rec = _Recorder(method, system, x, "expected" if exact_f else "selected",
                    cfg.track_cesaro)

    def cesaro_loss(xsum, k):
        if not cfg.track_cesaro or k == 0:
            return np.nan
        return rule_expectation(family.losses(xsum / k), rule)

    res0 = system.residual_norm(x)
    rec.record(0, x, res0, np.nan, -1, cesaro_loss(None, 0))
    if res0 <= cfg.tol:
        return rec.finish(0, True, x, x.copy() if cfg.track_cesaro else None)

    x_prev = x.copy()
    x_sum = np.zeros_like(x)
    last_sel = -1
    last_f = np.nan
    k = 0
    converged = False
    while k < cfg.max_iters:
        k += 1
        sel = select(rule, family, x, rng)
        if sel.index is None:
            # Every loss is exactly zero: already solved.
            converged = True
            rec.record(k - 1, x, system.residual_norm(x), 0.0, last_sel,
                       cesaro_loss(x_sum, k - 1))
            k -= 1
            break
        last_sel = sel.index
        if exact_f:
            last_f = rule_expectation(sel.losses, rule)
        else:
            last_f = sel.chosen_loss
        ev = family.evaluate(sel.index, x)
        x_next = apply_update(x, ev, cfg.omega)
        if gamma != 0.0:
            x_next = x_next + gamma * (x - x_prev)
        x_prev = x
        x = x_next
        if cfg.track_cesaro:
            x_sum += x
        if k % check_every == 0 or k == cfg.max_iters:
            _check_finite(x, rec, k)
            res = system.residual_norm(x)
            rec.record(k, x, res, last_f, last_sel, cesaro_loss(x_sum, k))
            if res <= cfg.tol:
                converged = True
                break
    x_cesaro = (x_sum / k) if (cfg.track_cesaro and k > 0) else (
        x.copy() if cfg.track_cesaro else None)
    return rec.finish(k, converged, x, x_cesaro)


def run_ssd(system: LinearSystem, family: SketchFamily, rule,
            cfg: SolverConfig | None = None) -> IterationTrace:
    """Sketched descent with exact per-index steps. No momentum.

    Any gamma in cfg is ignored; use :func:`run_ssdm` for heavy ball.
    """
    cfg = cfg or SolverConfig()
    return _run_sketched("ssd", system, family, rule, cfg, 0.0)


def run_ssdm(system: LinearSystem, family: SketchFamily, rule,
             cfg: SolverConfig | None = None) -> IterationTrace:
    """Sketched descent plus heavy ball momentum gamma * (x_k - x_{k-1}).

    The first iteration sees a zero momentum term (both history points
    start at x0). gamma = 0 reproduces :func:`run_ssd` bit for bit.
    """
    cfg = cfg or SolverConfig()
    return _run_sketched("ssdm", system, family, rule, cfg, cfg.gamma)


def run_sd(system: LinearSystem, cfg: SolverConfig | None = None) -> IterationTrace:
    """Steepest descent on an SPD system, exact line search.

    Fixes the geometry B = A, G = I regardless of what the system carries:
    the direction is the residual and the step is the classical
    ||res||^2 / ||res||^2_A ratio. Coincides with the full-sketch solver;
    kept separate so the two can be cross-checked.
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    A = system.A
    require_spd(A, "steepest descent")
    Af = SpdFactor(A)
    x = resolve_x0(cfg.x0, system)
    check_every = cfg.check_every or 1
    rec = _Recorder("sd", system, x, "selected", False)

    def f_of(res):
        return 0.5 * float(res @ Af.solve(res))

    res = A @ x - system.b
    res_norm = float(np.linalg.norm(res))
    rec.record(0, x, res_norm, f_of(res), -1)
    if res_norm <= cfg.tol:
        return rec.finish(0, True, x)
    k = 0
    converged = False
    while k < cfg.max_iters:
        k += 1
        Ares = A @ res
        den = float(res @ Ares)
        if den <= 0.0:
            break
        alpha = float(res @ res) / den
        x = x - (cfg.omega * alpha) * res
        res = A @ x - system.b
        if k % check_every == 0 or k == cfg.max_iters:
            _check_finite(x, rec, k)
            res_norm = float(np.linalg.norm(res))
            rec.record(k, x, res_norm, f_of(res), 0)
            if res_norm <= cfg.tol:
                converged = True
                break
    return rec.finish(k, converged, x)


def run_cg_momentum(system: LinearSystem, cfg: SolverConfig | None = None) -> IterationTrace:
    """Conjugate gradients on an SPD system.

    Algebraically this is the heavy ball update with the step and momentum
    coefficients re-optimized every iteration; with exact arithmetic it
    terminates in at most n steps.
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    A = system.A
    require_spd(A, "conjugate gradients")
    Af = SpdFactor(A)
    x = resolve_x0(cfg.x0, system)
    check_every = cfg.check_every or 1
    rec = _Recorder("cg", system, x, "selected", False)

    def f_of(x_):
        res_ = A @ x_ - system.b
        return 0.5 * float(res_ @ Af.solve(res_))

    u = system.b - A @ x
    res_norm = float(np.linalg.norm(u))
    rec.record(0, x, res_norm, f_of(x), -1)
    if res_norm <= cfg.tol:
        return rec.finish(0, True, x)
    p = u.copy()
    uu = float(u @ u)
    k = 0
    converged = False
    while k < cfg.max_iters:
        k += 1
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            break
        alpha = uu / pAp
        x = x + alpha * p
        u = u - alpha * Ap
        uu_new = float(u @ u)
        if k % check_every == 0 or k == cfg.max_iters:
            _check_finite(x, rec, k)
            res_norm = float(np.linalg.norm(A @ x - system.b))
            rec.record(k, x, res_norm, f_of(x), 0)
            if res_norm <= cfg.tol:
                converged = True
                break
        beta = uu_new / uu
        p = u + beta * p
        uu = uu_new
    return rec.finish(k, converged, x)


def run_method(method: str, system: LinearSystem,
               family: SketchFamily | None = None, rule=None,
               cfg: SolverConfig | None = None) -> IterationTrace:
    """Dispatch on a method name: ssd, ssdm, sd or cg."""
    if method == "ssd":
        return run_ssd(system, family, rule, cfg)
    if method == "ssdm":
        return run_ssdm(system, family, rule, cfg)
    if method == "sd":
        return run_sd(system, cfg)
    if method == "cg":
        return run_cg_momentum(system, cfg)
    raise InvalidConfigError(f"unknown method {method!r}")

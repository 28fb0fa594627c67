"""Spectral constants, certified rates, and a numerical inequality checker.

Write r = G^{1/2} (x - x*). Each sketch index i contributes the whitened
curvature operator

    T_i = G^{-1/2} Z_i G^{-1/2},    Z_i = A' H_i A,

so the index loss is f_i(x) = 1/2 r' T_i r. Every convergence certificate
in this package is a function of a handful of eigenvalue statistics of the
T_i and of their sum: the per-index extremes, the global extremes, and two
rule-dependent constants (lam_lo, lam_hi) that sandwich the expected
selected loss,

    lam_lo * ||r||^2  <=  2 E[f_selected(x)]  <=  lam_hi * ||r||^2.

:func:`spectral_report` computes all of these with dense eigensolvers (desk
scale only), :func:`predicted_rates` and :func:`momentum_rate` turn them
into per-step contraction factors, averaged-iterate bounds and the heavy
ball Lyapunov rate, and :func:`verify_inequalities` hammers the underlying
matrix inequalities with randomized trials, reporting the worst relative
violation of each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidConfigError,
    InvalidInputError,
    NumericalFailureError,
    SizeLimitError,
)
from .linalg import DEFAULT_EIG_CUTOFF, sym_eig
from .problems import resolve_x_star
from .rng import make_rng, standard_normal
from .sampling import CappedRule, GreedyRule, rule_expectation
from .sketching import VECTOR_KINDS, SketchFamily

# Dense eigendecompositions get expensive and inaccurate past desk scale.
MAX_THEORY_DIM = 500


def _qbar(q: int, tau: int, zero_losses: int) -> int:
    """Effective divisor for the greedy lower sandwich constant."""
    return max(q - zero_losses, q - tau + 1)


def sandwich_constants(tsum_min_pos: float, tsum_max: float, mu_hi: float,
                       q: int, rule, zero_losses: int = 0) -> tuple[float, float]:
    """(lam_lo, lam_hi) for one sampling rule.

    zero_losses is the number of indices whose loss vanishes at the current
    iterate; more zeros make the greedy lower constant stronger. The capped
    constants assume the exact-expectation threshold.
    """
    if isinstance(rule, GreedyRule):
        tau = rule.resolve_tau(q)
        lam_lo = tsum_min_pos / _qbar(q, tau, zero_losses)
        lam_hi = min(mu_hi, tau * tsum_max / q)
        return lam_lo, lam_hi
    if isinstance(rule, CappedRule):
        tau1 = GreedyRule(rule.tau1).resolve_tau(q)
        tau2 = GreedyRule(rule.tau2).resolve_tau(q)
        lam_lo = (rule.theta * tsum_min_pos / _qbar(q, tau1, zero_losses)
                  + (1.0 - rule.theta) * tsum_min_pos / _qbar(q, tau2, zero_losses))
        return lam_lo, mu_hi
    raise InvalidConfigError(f"unknown rule type {type(rule).__name__}")


@dataclass
class SpectralReport:
    """Eigenvalue statistics of the whitened curvature operators.

    Per-index arrays are indexed like the family. cond is the ratio of the
    largest to the smallest positive eigenvalue of T_i; for a rank-one T_i
    it is exactly 1. all_pd records whether every T_i is positive definite,
    which unlocks the sharper condition-number rates.
    """

    kind: str
    q: int
    n: int
    eig_max: np.ndarray
    eig_min_pos: np.ndarray
    eig_min: np.ndarray
    rank: np.ndarray
    cond: np.ndarray
    mu_hi: float
    mu_lo: float
    all_pd: bool
    tsum_eig_max: float
    tsum_eig_min_pos: float
    tsum_rank: int
    rule_label: str
    zero_losses: int
    lam_lo: float
    lam_hi: float

    def to_text(self) -> str:
        """Flat key=value dump, one line per scalar, for report files."""
        lines = [
            f"kind={self.kind}",
            f"q={self.q}",
            f"n={self.n}",
            f"rule={self.rule_label}",
            f"zero_losses={self.zero_losses}",
            f"mu_hi={self.mu_hi!r}",
            f"mu_lo={self.mu_lo!r}",
            f"all_pd={self.all_pd}",
            f"tsum_eig_max={self.tsum_eig_max!r}",
            f"tsum_eig_min_pos={self.tsum_eig_min_pos!r}",
            f"tsum_rank={self.tsum_rank}",
            f"lam_lo={self.lam_lo!r}",
            f"lam_hi={self.lam_hi!r}",
            f"cond_max={float(self.cond.max())!r}",
            f"cond_mean={float(self.cond.mean())!r}",
        ]
        return "\n".join(lines) + "\n"


def _whitened_sum(family: SketchFamily) -> np.ndarray:
    """Sum of the T_i as a dense symmetric matrix."""
    sys = family.system
    n = sys.n
    if family.kind in VECTOR_KINDS:
        W = family.w_matrix
        Z = (W / family.denominators) @ W.T
    elif family.kind == "block":
        Z = np.zeros((n, n))
        for i in range(family.q):
            Z += family.curvature_matrix(i)
    else:
        Z = sys.B_factor.dense()
    if sys.G_factor.is_identity:
        T = Z
    else:
        Gih = sys.G_factor.inv_sqrt()
        T = Gih @ Z @ Gih
    return 0.5 * (T + T.T)


def whitened_operator(family: SketchFamily, i: int) -> np.ndarray:
    """T_i as a dense matrix. Reference/testing use."""
    sys = family.system
    Z = family.curvature_matrix(i)
    if sys.G_factor.is_identity:
        T = Z
    else:
        Gih = sys.G_factor.inv_sqrt()
        T = Gih @ Z @ Gih
    return 0.5 * (T + T.T)


def _index_spectra(family: SketchFamily):
    """Per-index (eig_max, eig_min_pos, eig_min, rank) arrays."""
    sys = family.system
    n = sys.n
    q = family.q
    if family.kind in VECTOR_KINDS:
        W = family.w_matrix
        d = family.denominators
        if sys.G_factor.is_identity:
            e = np.einsum("ij,ij->j", W, W)
        else:
            e = np.einsum("ij,ij->j", W, sys.G_factor.solve(W))
        top = e / d
        eig_max = top
        eig_min_pos = top.copy()
        eig_min = top.copy() if n == 1 else np.zeros(q)
        rank = np.ones(q, dtype=np.intp)
        return eig_max, eig_min_pos, eig_min, rank
    eig_max = np.empty(q)
    eig_min_pos = np.empty(q)
    eig_min = np.empty(q)
    rank = np.empty(q, dtype=np.intp)
    for i in range(q):
        w, _ = sym_eig(whitened_operator(family, i))
        cutoff = DEFAULT_EIG_CUTOFF * max(1.0, w[-1])
        pos = w[w > cutoff]
        if pos.size == 0:
            raise InvalidInputError(f"sketch index {i} has a zero operator")
        eig_max[i] = w[-1]
        eig_min_pos[i] = pos[0]
        rank[i] = pos.size
        eig_min[i] = w[0] if pos.size == n else 0.0
    return eig_max, eig_min_pos, eig_min, rank


def spectral_report(family: SketchFamily, rule=None,
                    zero_losses: int = 0) -> SpectralReport:
    """Compute every spectral constant for a family and a sampling rule.

    rule defaults to uniform sampling. zero_losses feeds the effective
    divisor in the greedy lower constant; 0 is the safe generic value.
    """
    sys = family.system
    if sys.n > MAX_THEORY_DIM or sys.m > 10 * MAX_THEORY_DIM:
        raise SizeLimitError(
            f"spectral_report is dense-only; {sys.m}x{sys.n} exceeds "
            f"the {MAX_THEORY_DIM} desk-scale limit"
        )
    if rule is None:
        rule = GreedyRule(1)
    eig_max, eig_min_pos, eig_min, rank = _index_spectra(family)
    wT, _ = sym_eig(_whitened_sum(family))
    cutoff = DEFAULT_EIG_CUTOFF * max(1.0, wT[-1])
    posT = wT[wT > cutoff]
    if posT.size == 0:
        raise InvalidInputError("summed whitened operator is zero")
    lam_lo, lam_hi = sandwich_constants(
        float(posT[0]), float(wT[-1]), float(eig_max.max()),
        family.q, rule, zero_losses,
    )
    return SpectralReport(
        kind=family.kind,
        q=family.q,
        n=sys.n,
        eig_max=eig_max,
        eig_min_pos=eig_min_pos,
        eig_min=eig_min,
        rank=rank,
        cond=eig_max / eig_min_pos,
        mu_hi=float(eig_max.max()),
        mu_lo=float(eig_min_pos.min()),
        all_pd=bool(np.all(eig_min > 0.0)),
        tsum_eig_max=float(wT[-1]),
        tsum_eig_min_pos=float(posT[0]),
        tsum_rank=int(posT.size),
        rule_label=getattr(rule, "label", str(rule)),
        zero_losses=zero_losses,
        lam_lo=lam_lo,
        lam_hi=lam_hi,
    )


# ---------------------------------------------------------------------------
# Rates for the plain (no momentum) solver
# ---------------------------------------------------------------------------


@dataclass
class RateBundle:
    """Certified decay factors and averaged-iterate coefficients.

    step_factor is the guaranteed per-step factor for the expected squared
    G-error. step_factor_pd sharpens it through the per-index condition
    numbers and exists only when every T_i is positive definite.
    fdecay_factor bounds the one-step decay of the expected loss. The
    condition-number expectations are taken under the uniform distribution
    over indices (a documented surrogate for state-dependent rules); the
    _worst variants use the most pessimistic index and are certified for
    any rule.
    """

    omega: float
    step_factor: float
    step_factor_pd: float | None
    step_factor_pd_worst: float | None
    fdecay_factor: float
    fdecay_factor_worst: float
    cesaro_error_coeff: float
    cesaro_loss_coeff: float
    cond_mean: float
    cond_sq_mean: float
    cond_max: float

    def cesaro_error_bound(self, k: int, err0_g_sq: float) -> float:
        """Bound on the expected squared G-error of the running average."""
        if k < 1:
            raise InvalidInputError("k must be >= 1")
        return self.cesaro_error_coeff * err0_g_sq / k

    def cesaro_loss_bound(self, k: int, err0_g_sq: float) -> float:
        """Bound on the expected loss of the running average."""
        if k < 1:
            raise InvalidInputError("k must be >= 1")
        return self.cesaro_loss_coeff * err0_g_sq / k


def _check_omega(omega: float) -> None:
    if not 0.0 < omega < 2.0:
        raise InvalidConfigError(f"omega must be in (0, 2), got {omega}")


def predicted_rates(report: SpectralReport, omega: float = 1.0) -> RateBundle:
    """Turn a spectral report into certified decay factors."""
    _check_omega(omega)
    accel = 2.0 * omega - omega * omega
    cond = report.cond
    shape = 4.0 * cond / (1.0 + cond) ** 2
    pd = report.all_pd
    cond_mean = float(cond.mean())
    cond_sq_mean = float((cond * cond).mean())
    cond_max = float(cond.max())
    fdecay = 1.0 - 4.0 * accel / min(4.0 * cond_mean, 4.0 + cond_sq_mean)
    fdecay_worst = 1.0 - 4.0 * accel / min(4.0 * cond_max, 4.0 + cond_max ** 2)
    return RateBundle(
        omega=omega,
        step_factor=1.0 - accel * report.lam_lo / report.mu_hi,
        step_factor_pd=(1.0 - accel * float(shape.mean())) if pd else None,
        step_factor_pd_worst=(1.0 - accel * float(shape.min())) if pd else None,
        fdecay_factor=fdecay,
        fdecay_factor_worst=fdecay_worst,
        cesaro_error_coeff=report.mu_hi / (omega * (2.0 - omega) * report.lam_lo),
        cesaro_loss_coeff=report.mu_hi / (2.0 * omega * (2.0 - omega)),
        cond_mean=cond_mean,
        cond_sq_mean=cond_sq_mean,
        cond_max=cond_max,
    )


# ---------------------------------------------------------------------------
# Heavy ball rates
# ---------------------------------------------------------------------------


@dataclass
class MomentumRate:
    """Lyapunov contraction certificate for the heavy ball iteration.

    The certified recursion is

        E[V_{k+1}] <= rate * E[V_k],
        V_k = ||r_k||^2 + prev_weight * ||r_{k-1}||^2
              + (2 * loss_weight * omega / mu_hi) * f(x_{k-1}),

    where f is the rule-expected loss. coef_cur and coef_prev are the raw
    coefficients of the two-term error recursion behind the certificate;
    the certificate is vacuous unless admissible (coef_cur + coef_prev < 1),
    in which case coef_cur + coef_prev <= rate < 1.
    """

    gamma: float
    omega: float
    loss_weight: float
    loss_slack: float
    coef_cur: float
    coef_prev: float
    rate: float
    prev_weight: float
    admissible: bool
    mu_hi: float
    mu_lo: float
    lam_lo: float
    lam_hi: float

    def lyapunov(self, err_g_sq_cur: float, err_g_sq_prev: float,
                 expected_loss_prev: float = 0.0) -> float:
        """V_k from its three ingredients."""
        val = err_g_sq_cur + self.prev_weight * err_g_sq_prev
        if self.loss_weight > 0.0:
            val += (2.0 * self.loss_weight * self.omega / self.mu_hi) \
                * expected_loss_prev
        return val


def momentum_rate(report: SpectralReport, gamma: float, omega: float = 1.0,
                  loss_weight: float = 0.0,
                  loss_slack: float = 0.0) -> MomentumRate:
    """Certified heavy ball rate for one (gamma, omega) and free parameters.

    loss_weight and loss_slack are the two free parameters of the Lyapunov
    analysis; (0, 0) is the standard choice and any admissible pair gives a
    valid certificate. Requires gamma >= max(loss_slack, loss_weight - 2 +
    omega) and, when loss_weight > 0, loss_slack < loss_weight * mu_lo /
    mu_hi.
    """
    _check_omega(omega)
    zeta, xi = float(loss_weight), float(loss_slack)
    if zeta < 0.0 or xi < 0.0:
        raise InvalidConfigError("loss_weight and loss_slack must be >= 0")
    if zeta == 0.0 and xi > 0.0:
        raise InvalidConfigError("loss_slack > 0 requires loss_weight > 0")
    if zeta > 0.0 and xi >= zeta * report.mu_lo / report.mu_hi:
        raise InvalidConfigError(
            f"need loss_slack < loss_weight * mu_lo / mu_hi = "
            f"{zeta * report.mu_lo / report.mu_hi:.6g}, got {xi}"
        )
    floor = max(xi, zeta - 2.0 + omega)
    if gamma < floor:
        raise InvalidConfigError(
            f"gamma must be >= max(loss_slack, loss_weight - 2 + omega) "
            f"= {floor:.6g}, got {gamma}"
        )
    coef_cur = (1.0 + 3.0 * gamma + 2.0 * gamma * gamma
                - ((gamma + 2.0 - omega - zeta) * omega / report.mu_hi)
                * report.lam_lo)
    coef_prev = (gamma + 2.0 * gamma * gamma
                 + ((gamma - xi) * omega / report.mu_lo) * report.lam_hi)
    branch = 0.5 * (coef_cur + math.sqrt(coef_cur * coef_cur + 4.0 * coef_prev))
    if zeta > 0.0:
        branch = max(branch, xi * report.mu_hi / (zeta * report.mu_lo))
    admissible = coef_cur + coef_prev < 1.0
    if admissible:
        # Both orderings are theorems; a violation means a broken formula.
        if coef_cur + coef_prev > branch + 1e-12:
            raise NumericalFailureError("rate fell below coefficient sum")
        if branch >= 1.0 + 1e-12:
            raise NumericalFailureError("admissible parameters gave rate >= 1")
    return MomentumRate(
        gamma=gamma,
        omega=omega,
        loss_weight=zeta,
        loss_slack=xi,
        coef_cur=coef_cur,
        coef_prev=coef_prev,
        rate=branch,
        prev_weight=branch - coef_cur,
        admissible=admissible,
        mu_hi=report.mu_hi,
        mu_lo=report.mu_lo,
        lam_lo=report.lam_lo,
        lam_hi=report.lam_hi,
    )


def momentum_cesaro_admissible(report: SpectralReport, gamma: float,
                               omega: float) -> bool:
    """Parameter test for the averaged-iterate momentum bound."""
    _check_omega(omega)
    if gamma < 0.0:
        raise InvalidConfigError(f"gamma must be >= 0, got {gamma}")
    return (omega / report.mu_hi
            + gamma * (1.0 + report.mu_hi / report.mu_lo)) < 2.0


def cesaro_bound(report: SpectralReport, gamma: float, omega: float,
                 k: int, err0_g_sq: float, loss0: float) -> float:
    """Bound on the expected loss of the k-th running average under momentum.

    err0_g_sq is the squared G-error of the start point and loss0 its
    rule-expected loss. Requires the parameters to pass
    :func:`momentum_cesaro_admissible`; gamma = 0 gives the plain averaged
    bound with the momentum terms dropped.
    """
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if not momentum_cesaro_admissible(report, gamma, omega):
        raise InvalidConfigError(
            f"averaged momentum bound needs omega/mu_hi + gamma * "
            f"(1 + mu_hi/mu_lo) < 2 (gamma={gamma}, omega={omega})"
        )
    lo, hi = report.mu_lo, report.mu_hi
    num = lo * hi * (1.0 - gamma) ** 2 * err0_g_sq + 2.0 * gamma * omega * hi * loss0
    den = 2.0 * omega * k * (2.0 * lo * hi - gamma * lo * hi
                             - gamma * hi * hi - omega * lo)
    assert den > 0.0  # admissibility guarantees this
    return num / den


# ---------------------------------------------------------------------------
# Randomized inequality verification
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    checked: int
    worst: float
    passed: bool
    where: tuple | None = None


@dataclass
class InequalityReport:
    trials: int
    rtol: float
    entries: list[CheckResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[CheckResult]:
        return [e for e in self.entries if not e.passed]

    def to_text(self) -> str:
        lines = [f"trials={self.trials} rtol={self.rtol!r}"]
        for e in self.entries:
            tag = "ok" if e.passed else "VIOLATED"
            lines.append(
                f"{e.name}: {tag} checked={e.checked} worst={e.worst:.3e}"
                + (f" at {e.where}" if e.where is not None else "")
            )
        return "\n".join(lines) + "\n"


class _Tracker:
    """Accumulates the worst relative violation of one inequality."""

    def __init__(self, name: str):
        self.name = name
        self.checked = 0
        self.worst = -np.inf
        self.where = None

    def update(self, lhs, rhs, where) -> None:
        """Record violations of lhs <= rhs (arrays or scalars)."""
        lhs = np.atleast_1d(np.asarray(lhs, dtype=np.float64))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=np.float64))
        scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
        v = (lhs - rhs) / scale
        self.checked += v.size
        j = int(np.argmax(v))
        if v[j] > self.worst:
            self.worst = float(v[j])
            self.where = (where, j) if v.size > 1 else (where,)

    def result(self, rtol: float) -> CheckResult:
        passed = self.checked > 0 and self.worst <= rtol
        return CheckResult(self.name, self.checked,
                           self.worst if np.isfinite(self.worst) else 0.0,
                           passed, self.where)


def _range_basis(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the range of a symmetric PSD matrix."""
    w, V = sym_eig(M)
    cutoff = DEFAULT_EIG_CUTOFF * max(1.0, w[-1]) if w.size else 0.0
    keep = w > cutoff
    if not np.any(keep):
        raise InvalidInputError("operator has empty range")
    return V[:, keep]


def verify_inequalities(family: SketchFamily, rules=None, trials: int = 1000,
                        seed: int = 0, rtol: float = 1e-9) -> InequalityReport:
    """Randomized check of every spectral inequality behind the rates.

    Draws error vectors r in the range of the summed whitened operator,
    forms the point x = x* + G^{-1/2} r, and verifies per index i:

    - the order sandwiches between r'T_i r, r'T_i^2 r, r'T_i^3 r;
    - the Rayleigh bounds on the range of T_i;
    - the exact step against 1/eigenvalue brackets and the quadratic ratio;
    - the product-ratio (Kantorovich-type) bounds, including the sharper
      positive definite variants when they apply;
    - agreement of the family's fast loss path with the whitened quadratic;

    and per sampling rule, the expected-loss sandwich with the constants of
    :func:`sandwich_constants` evaluated at that trial's zero-loss count.

    Returns a report whose entries carry the worst relative violation seen;
    a violation above rtol marks the entry failed.
    """
    sys = family.system
    if sys.n > MAX_THEORY_DIM:
        raise SizeLimitError(f"n={sys.n} exceeds the desk-scale limit")
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    report = spectral_report(family)
    if rules is None:
        rules = [GreedyRule(1)]
        if family.q >= 2:
            rules.append(GreedyRule(2))
            rules.append(GreedyRule(None))
            rules.append(CappedRule(0.5, 1, None, exact=True))
    for rule in rules:
        if isinstance(rule, CappedRule) and not rule.exact:
            raise InvalidConfigError(
                "the sandwich certificate assumes the exact capped "
                "threshold; pass exact-mode capped rules"
            )

    rng = make_rng(seed)
    x_star, _ = resolve_x_star(sys, np.zeros(sys.n))
    Gih = None if sys.G_factor.is_identity else sys.G_factor.inv_sqrt()
    Tsum = _whitened_sum(family)
    Q = _range_basis(Tsum)
    tsum_w, _ = sym_eig(Tsum)
    tsum_max = float(tsum_w[-1])
    tsum_min_pos = report.tsum_eig_min_pos

    vector = family.kind in VECTOR_KINDS
    if vector:
        W = family.w_matrix
        d = family.denominators
        V = W if Gih is None else Gih @ W
        e = report.eig_max * d  # ||v_i||^2
        steps = d / e
    else:
        T_list = [whitened_operator(family, i) for i in range(family.q)]
        proj_bases = [_range_basis(T) for T in T_list]

    out = InequalityReport(trials=trials, rtol=rtol)
    t_quad21 = _Tracker("quad2_within_eig_bounds_of_quad1")
    t_quad32 = _Tracker("quad3_within_eig_bounds_of_quad2")
    t_rayleigh = _Tracker("rayleigh_bounds_on_operator_range")
    t_step = _Tracker("step_within_inverse_eig_brackets")
    t_step_ratio = _Tracker("step_matches_quadratic_ratio")
    t_loss = _Tracker("fast_loss_matches_whitened_quadratic")
    t_prod_lo = _Tracker("product_ratio_at_least_one")
    t_prod_hi = _Tracker("product_ratio_gap_bound")
    t_pd_cross = _Tracker("pd_cross_ratio_bound")
    t_pd_prod = _Tracker("pd_product_ratio_bound")
    t_chain = _Tracker("constant_chain_consistency")
    rule_trackers = {r.label: _Tracker(f"expected_loss_sandwich[{r.label}]")
                     for r in rules}

    # Index-constant parts of the chains, checked once.
    gap_mid = (report.eig_max - report.eig_min) ** 2 / (4.0 * report.eig_min_pos ** 2)
    t_chain.update(1.0 + gap_mid, 1.0 + report.cond ** 2 / 4.0, "setup")
    t_chain.update(report.mu_lo, report.eig_min_pos, "setup")
    t_chain.update(report.eig_max, report.mu_hi, "setup")
    if vector:
        # The exact step never depends on x for rank-one sketches.
        t_step.update(1.0 / report.mu_hi, 1.0 / report.eig_max, "setup")
        t_step.update(1.0 / report.eig_max, steps, "setup")
        t_step.update(steps, 1.0 / report.eig_min_pos, "setup")
        t_step.update(1.0 / report.eig_min_pos, 1.0 / report.mu_lo, "setup")
        probe = x_star + (Q[:, 0] if Gih is None else Gih @ Q[:, 0])
        for i in range(min(family.q, 8)):
            ev = family.evaluate(i, probe)
            if ev.step is not None:
                t_step_ratio.update(ev.step, steps[i], "setup")
                t_step_ratio.update(steps[i], ev.step, "setup")

    tiny = 1e-140
    for t in range(trials):
        r = Q @ standard_normal(rng, Q.shape[1])
        rr = float(r @ r)
        x = x_star + (r if Gih is None else Gih @ r)
        losses = family.losses(x)
        zeros = int(np.count_nonzero(losses == 0.0))

        if vector:
            p = V.T @ r
            q1 = p * p / d
            g = report.eig_max
            q2 = q1 * g
            q3 = q2 * g
        else:
            q1 = np.empty(family.q)
            q2 = np.empty(family.q)
            q3 = np.empty(family.q)
            for i, T in enumerate(T_list):
                Tr = T @ r
                q1[i] = float(r @ Tr)
                q2[i] = float(Tr @ Tr)
                q3[i] = float(Tr @ (T @ Tr))

        t_quad21.update(report.eig_min_pos * q1, q2, t)
        t_quad21.update(q2, report.eig_max * q1, t)
        t_quad32.update(report.eig_min_pos * q2, q3, t)
        t_quad32.update(q3, report.eig_max * q2, t)
        t_loss.update(losses, 0.5 * q1, t)
        t_loss.update(0.5 * q1, losses, t)

        if vector:
            rp_sq = p * p / e
            t_rayleigh.update(report.eig_min_pos * rp_sq, q1, t)
            t_rayleigh.update(q1, report.eig_max * rp_sq, t)
        else:
            for i, T in enumerate(T_list):
                rp = proj_bases[i] @ (proj_bases[i].T @ r)
                rp_sq = float(rp @ rp)
                val = float(rp @ (T @ rp))
                t_rayleigh.update(report.eig_min_pos[i] * rp_sq, val, (t, i))
                t_rayleigh.update(val, report.eig_max[i] * rp_sq, (t, i))
            for i in range(family.q):
                ev = family.evaluate(i, x)
                if ev.step is None:
                    continue
                t_step.update(1.0 / report.mu_hi, 1.0 / report.eig_max[i], (t, i))
                t_step.update(1.0 / report.eig_max[i], ev.step, (t, i))
                t_step.update(ev.step, 1.0 / report.eig_min_pos[i], (t, i))
                t_step.update(1.0 / report.eig_min_pos[i], 1.0 / report.mu_lo, (t, i))
                if q3[i] > tiny:
                    t_step_ratio.update(ev.step, q2[i] / q3[i], (t, i))
                    t_step_ratio.update(q2[i] / q3[i], ev.step, (t, i))

        mask = (q1 > tiny) & (q2 > tiny) & (q3 > tiny)
        if np.any(mask):
            ratio = q1[mask] * q3[mask] / (q2[mask] * q2[mask])
            t_prod_lo.update(1.0, ratio, t)
            t_prod_hi.update(ratio, 1.0 + gap_mid[mask], t)
            if report.all_pd:
                cross = rr * q3[mask] / (q1[mask] * q2[mask])
                kanto = ((report.eig_max[mask] + report.eig_min[mask]) ** 2
                         / (4.0 * report.eig_max[mask] * report.eig_min[mask]))
                t_pd_cross.update(cross, kanto, t)
                t_pd_prod.update(ratio, kanto, t)

        for rule in rules:
            lam_lo, lam_hi = sandwich_constants(
                tsum_min_pos, tsum_max, report.mu_hi, family.q, rule, zeros)
            exp_loss = rule_expectation(losses, rule)
            tr = rule_trackers[rule.label]
            tr.update(lam_lo * rr, 2.0 * exp_loss, t)
            tr.update(2.0 * exp_loss, lam_hi * rr, t)

    out.entries.append(t_quad21.result(rtol))
    out.entries.append(t_quad32.result(rtol))
    out.entries.append(t_rayleigh.result(rtol))
    out.entries.append(t_step.result(rtol))
    out.entries.append(t_step_ratio.result(rtol))
    out.entries.append(t_loss.result(rtol))
    out.entries.append(t_prod_lo.result(rtol))
    out.entries.append(t_prod_hi.result(rtol))
    if report.all_pd:
        out.entries.append(t_pd_cross.result(rtol))
        out.entries.append(t_pd_prod.result(rtol))
    out.entries.append(t_chain.result(rtol))
    for tr in rule_trackers.values():
        out.entries.append(tr.result(rtol))
    return out

"""Index selection rules: uniform, greedy over a random subset, capped.

The greedy rule draws tau of the q indices uniformly without replacement and
picks the one with the largest index loss. tau = 1 is plain uniform
sampling, tau = q always picks the globally worst index (max distance), and
intermediate tau interpolates. The capped rule computes every loss, keeps
the indices whose loss clears a threshold blended from two greedy-rule
expected losses, and picks uniformly among the survivors.

The expected value of the largest loss in a uniform tau-subset has a closed
form over the ascending order statistics: the j-th smallest value is the
subset maximum with probability C(tau-1+j, tau-1) / C(q, tau) for
j = tau-1 .. q-1 (0-based sort position tau-1+j above uses j = 0 .. q-tau).
Those weights drive both the capped threshold and the rate certificates in
the theory module, so they are computed carefully and tested against exact
rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError

__all__ = [
    "GreedyRule", "CappedRule", "Selection",
    "uniform", "greedy", "max_distance", "capped", "parse_rule",
    "gs_expectation_weights", "subset_max_expectation",
    "capped_threshold", "capped_candidates", "rule_expectation",
    "draw_sample", "greedy_select", "capped_select", "select",
]


@dataclass(frozen=True)
class GreedyRule:
    """Pick the largest loss among a uniform subset of tau indices.

    tau = None means the whole family, whatever its size.
    """

    tau: int | None = 1

    def __post_init__(self):
        if self.tau is not None and self.tau < 1:
            raise InvalidConfigError(f"tau must be >= 1, got {self.tau}")

    def resolve_tau(self, q: int) -> int:
        tau = q if self.tau is None else self.tau
        if tau > q:
            raise InvalidConfigError(f"tau={tau} exceeds family size q={q}")
        return tau

    @property
    def label(self) -> str:
        if self.tau == 1:
            return "uniform"
        if self.tau is None:
            return "maxdist"
        return f"greedy:{self.tau}"


@dataclass(frozen=True)
class CappedRule:
    """Uniform choice among indices whose loss clears a blended threshold.

    The threshold is theta * E1 + (1 - theta) * E2 where E1, E2 are the
    expected subset-max losses for tau1 and tau2. In exact mode those
    expectations are evaluated from the order statistics of the current
    losses; otherwise both are replaced by the mean loss, a cheaper lower
    bound. The worst index always clears the threshold, so the candidate
    set is never empty.
    """

    theta: float = 0.5
    tau1: int | None = 1
    tau2: int | None = None
    exact: bool = False

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidConfigError(f"theta must be in [0, 1], got {self.theta}")
        for tau in (self.tau1, self.tau2):
            if tau is not None and tau < 1:
                raise InvalidConfigError(f"tau must be >= 1, got {tau}")

    @property
    def label(self) -> str:
        def show(tau):
            return "m" if tau is None else str(tau)

        tag = f"capped:{self.theta:g},{show(self.tau1)},{show(self.tau2)}"
        return tag + (",exact" if self.exact else "")


def uniform() -> GreedyRule:
    return GreedyRule(1)


def greedy(tau: int) -> GreedyRule:
    return GreedyRule(tau)


def max_distance() -> GreedyRule:
    return GreedyRule(None)


def capped(theta: float = 0.5, tau1: int | None = 1, tau2: int | None = None,
           exact: bool = False) -> CappedRule:
    return CappedRule(theta, tau1, tau2, exact)


def parse_rule(text: str):
    """Rule from its CLI spelling.

    uniform | maxdist | greedy:<tau> | capped:<theta>,<tau1>,<tau2>[,exact]
    where a tau of "m" means the whole family.
    """

    def parse_tau(tok: str):
        if tok == "m":
            return None
        try:
            return int(tok)
        except ValueError:
            raise InvalidConfigError(f"bad tau {tok!r} in rule {text!r}") from None

    if text == "uniform":
        return uniform()
    if text == "maxdist":
        return max_distance()
    if text.startswith("greedy:"):
        tau = parse_tau(text.split(":", 1)[1])
        return max_distance() if tau is None else greedy(tau)
    if text.startswith("capped:"):
        body = text.split(":", 1)[1].split(",")
        if len(body) not in (3, 4):
            raise InvalidConfigError(f"capped rule needs 3 or 4 fields: {text!r}")
        exact = False
        if len(body) == 4:
            if body[3] != "exact":
                raise InvalidConfigError(f"unknown capped flag {body[3]!r}")
            exact = True
        try:
            theta = float(body[0])
        except ValueError:
            raise InvalidConfigError(f"bad theta in rule {text!r}") from None
        return capped(theta, parse_tau(body[1]), parse_tau(body[2]), exact)
    raise InvalidConfigError(f"unknown sampling rule {text!r}")


def gs_expectation_weights(q: int, tau: int) -> np.ndarray:
    """Probability that each ascending order statistic is a subset maximum.

    Entry j (for j = 0 .. q - tau) is the probability that the value in
    ascending sort position tau - 1 + j is the largest of a uniform random
    tau-subset of q values: C(tau-1+j, tau-1) / C(q, tau). Computed by the
    multiplicative recurrence w[j+1] = w[j] * (tau+j) / (j+1), which keeps
    full relative accuracy; the entries sum to 1.
    """
    if not 1 <= tau <= q:
        raise InvalidConfigError(f"need 1 <= tau <= q, got tau={tau}, q={q}")
    k = q - tau + 1
    w = np.empty(k)
    w[0] = 1.0 / math.comb(q, tau)
    if k > 1:
        j = np.arange(k - 1)
        w[1:] = w[0] * np.cumprod((tau + j) / (j + 1.0))
    return w


def subset_max_expectation(values: np.ndarray, tau: int) -> float:
    """Expected maximum of a uniform tau-subset of the given values."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    w = gs_expectation_weights(v.size, tau)
    return float(w @ v[tau - 1:])


def capped_threshold(losses: np.ndarray, rule: CappedRule) -> float:
    """Admission threshold for the capped rule at the current losses."""
    q = losses.size
    if rule.exact:
        tau1 = GreedyRule(rule.tau1).resolve_tau(q)
        tau2 = GreedyRule(rule.tau2).resolve_tau(q)
        e1 = subset_max_expectation(losses, tau1)
        e2 = subset_max_expectation(losses, tau2)
        return rule.theta * e1 + (1.0 - rule.theta) * e2
    return float(np.mean(losses))


def capped_candidates(losses: np.ndarray, rule: CappedRule) -> np.ndarray:
    """Indices admitted by the capped threshold. Never empty."""
    thr = capped_threshold(losses, rule)
    cand = np.nonzero(losses >= thr)[0]
    if cand.size == 0:
        # The max always clears the threshold in exact arithmetic; this
        # guards the few-ulp case where the blend rounds above it.
        cand = np.array([int(np.argmax(losses))])
    return cand


def rule_expectation(losses: np.ndarray, rule) -> float:
    """Expected selected loss under a rule, given all q current losses."""
    if isinstance(rule, GreedyRule):
        return subset_max_expectation(losses, rule.resolve_tau(losses.size))
    if isinstance(rule, CappedRule):
        return float(np.mean(losses[capped_candidates(losses, rule)]))
    raise InvalidConfigError(f"unknown rule type {type(rule).__name__}")


def draw_sample(q: int, tau: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform tau-subset of range(q), ascending."""
    if not 1 <= tau <= q:
        raise InvalidConfigError(f"need 1 <= tau <= q, got tau={tau}, q={q}")
    return np.sort(rng.choice(q, size=tau, replace=False))


def greedy_select(losses: np.ndarray, sample: np.ndarray) -> int:
    """Sample index with the largest loss; ties break to the smallest index.

    The sample is kept ascending, so the first maximum is the smallest.
    """
    if len(sample) == 0:
        raise InvalidConfigError("empty sample")
    return int(sample[int(np.argmax(losses))])


def capped_select(all_losses: np.ndarray, rule: CappedRule,
                  rng: np.random.Generator) -> int | None:
    """Uniform draw from the indices clearing the capped threshold.

    Returns None when every loss is zero, i.e. the iterate already solves
    the system.
    """
    if not np.any(all_losses > 0.0):
        return None
    cand = capped_candidates(all_losses, rule)
    return int(cand[rng.integers(cand.size)])


@dataclass
class Selection:
    """Outcome of one selection step.

    index is None only when the rule evaluated every loss and found them all
    zero, i.e. the iterate already solves the system. zero_losses counts
    exact zeros among the evaluated losses; the rate certificates use it.
    chosen_loss is the loss of the selected index at selection time.
    """

    index: int | None
    indices: np.ndarray
    losses: np.ndarray
    zero_losses: int
    threshold: float | None = None
    chosen_loss: float | None = None


def select(rule, family, x: np.ndarray, rng: np.random.Generator) -> Selection:
    """Run one selection step of the rule on the family at x.

    Greedy ties (equal losses in the sample) break to the smallest index;
    the sample is kept in ascending order so argmax does that on its own.
    """
    q = family.q
    if isinstance(rule, GreedyRule):
        tau = rule.resolve_tau(q)
        indices = np.arange(q) if tau == q else draw_sample(q, tau, rng)
        losses = family.losses(x, indices)
        zero = int(np.count_nonzero(losses == 0.0))
        if zero == q:
            return Selection(None, indices, losses, zero)
        pick = greedy_select(losses, indices)
        return Selection(pick, indices, losses, zero,
                         chosen_loss=float(np.max(losses)))
    if isinstance(rule, CappedRule):
        losses = family.losses(x)
        zero = int(np.count_nonzero(losses == 0.0))
        pick = capped_select(losses, rule, rng)
        if pick is None:
            return Selection(None, np.arange(q), losses, zero)
        return Selection(pick, np.arange(q), losses, zero,
                         threshold=capped_threshold(losses, rule),
                         chosen_loss=float(losses[pick]))
    raise InvalidConfigError(f"unknown rule type {type(rule).__name__}")

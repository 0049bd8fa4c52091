"""Token-level indicators from next-token distributions, and text-level features.

Per scored token: probability p, rank r, distribution entropy H (nats),
entropy delta dH = -log p - H, possible-states count eta = floor(e^H),
cumulative probability pi of the eta most likely tokens, and oddballness
xi = sum_j max(0, p_j - p) — the probability mass strictly above the observed
token. Text level: min/max/median of each indicator plus perplexity and token
count (23 numeric features), and paired perplexity diagnostics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import stats
from .ngram import DistributionView, ScoredToken

logger = logging.getLogger(__name__)

METRIC_NAMES = ("p", "r", "H", "dH", "eta", "pi", "xi")
AGGREGATES = ("min", "max", "median")
FEATURE_KEYS = tuple(f"{agg}_{m}" for m in METRIC_NAMES for agg in AGGREGATES) + (
    "ppl",
    "num_tokens",
)

# Probability floor for imported data carrying p = 0; uses are counted so batch
# runs surface data problems without dying.
P_FLOOR = 1e-12


class ClampCounter:
    def __init__(self) -> None:
        self.count = 0

    def bump(self) -> None:
        self.count += 1
        if self.count in (1, 10, 100, 1000):
            logger.warning("clamped %d zero probabilities to %g", self.count, P_FLOOR)

    def reset(self) -> None:
        self.count = 0


clamp_counter = ClampCounter()


@dataclass(frozen=True)
class TokenScoreRecord:
    token: str
    p_t: float
    r_t: int
    H: float
    dH: float
    eta: int
    pi: float
    xi: float
    exact_xi: bool


@dataclass(frozen=True)
class TextFeatureVector:
    aggregates: dict[str, float]  # 21 keys: {min,max,median}_{p,r,H,dH,eta,pi,xi}
    perplexity: float
    num_tokens: int

    def as_dict(self) -> dict[str, float]:
        row = dict(self.aggregates)
        row["ppl"] = self.perplexity
        row["num_tokens"] = float(self.num_tokens)
        return row


def entropy(view: DistributionView) -> float:
    """H = -sum p_i log p_i in nats, with 0 log 0 = 0."""
    p = view.probabilities
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def entropy_delta(p_t: float, H: float) -> float:
    """dH = -log p_t - H; zero in expectation over the distribution."""
    if p_t <= 0.0:
        raise ValueError("entropy_delta: p_t must be positive")
    if p_t > 1.0:
        raise ValueError("entropy_delta: p_t must be <= 1")
    return -math.log(p_t) - H


def possible_states(H: float) -> int:
    """eta = floor(e^H), at least 1.

    A 1e-9 slack keeps floor(exp(log n)) from landing on n - 1 when H is the
    entropy of an exactly uniform distribution.
    """
    if H < 0:
        raise ValueError("possible_states: H must be nonnegative")
    return max(1, math.floor(math.exp(H) + 1e-9))


def cumulative_prob(view: DistributionView, eta: int) -> float:
    """pi = sum of the eta largest probabilities."""
    if not 1 <= eta <= view.size:
        raise ValueError(f"eta out of range: {eta} (V={view.size})")
    return float(np.sum(view.probabilities[view.sorted_desc[:eta]]))


def token_rank(view: DistributionView, index: int) -> int:
    """1-based position in the descending sort; ties broken by ascending index."""
    pos = np.nonzero(view.sorted_desc == index)[0]
    if pos.size == 0:
        raise ValueError(f"token index out of range: {index}")
    return int(pos[0]) + 1


def oddballness(view: DistributionView, index: int) -> tuple[float, bool]:
    """xi = sum_j (p_j - p_t)^+ over the full distribution (always exact)."""
    p = view.probabilities
    p_t = float(p[index])
    return float(np.sum(np.clip(p - p_t, 0.0, None))), True


def oddballness_from_topk(
    topk: Sequence[float], tail_mass: float, p_t: float, r_t: int
) -> tuple[float, bool]:
    """Oddballness from a truncated distribution dump.

    If the observed rank lies inside the top-k then every probability above
    p_t is present and the value is exact; otherwise only the top-k terms are
    summed, a documented lower bound.
    """
    for a, b in zip(topk, topk[1:]):
        if b > a + 1e-12:
            raise ValueError("topk probabilities must be sorted descending")
    total = math.fsum(topk) + tail_mass
    if abs(total - 1.0) > 1e-3:
        raise ValueError(f"topk + tail_mass sums to {total}, not 1")
    xi = math.fsum(max(0.0, p_j - p_t) for p_j in topk)
    return xi, r_t <= len(topk)


def _clamped_p(p: float) -> float:
    if p <= 0.0:
        clamp_counter.bump()
        return P_FLOOR
    return p


def perplexity(records: Sequence[TokenScoreRecord]) -> float:
    """exp of the mean negative log probability (natural log)."""
    if not records:
        raise ValueError("perplexity of empty record list")
    logs = [math.log(_clamped_p(r.p_t)) for r in records]
    return math.exp(-math.fsum(logs) / len(logs))


def record_from_distribution(
    surface: str, view: DistributionView, index: int
) -> TokenScoreRecord:
    """All token-level indicators for one observed token."""
    p_t = float(view.probabilities[index])
    H = entropy(view)
    eta = possible_states(H)
    return TokenScoreRecord(
        token=surface,
        p_t=p_t,
        r_t=token_rank(view, index),
        H=H,
        dH=entropy_delta(_clamped_p(p_t), H),
        eta=eta,
        pi=cumulative_prob(view, eta),
        xi=oddballness(view, index)[0],
        exact_xi=True,
    )


def records_from_scored(scored: Sequence[ScoredToken]) -> list[TokenScoreRecord]:
    return [
        record_from_distribution(s.surface, s.distribution, s.observed_index)
        for s in scored
    ]


def record_from_topk(
    token: str,
    logprob: float,
    rank: int,
    H: float,
    topk: Sequence[float],
    tail_mass: float,
) -> TokenScoreRecord:
    """Indicators from an exported token-score position (truncated top-k)."""
    p_t = _clamped_p(math.exp(logprob))
    eta = possible_states(H)
    # pi over a truncated dump: exact when eta <= k, else the top-k sum as a
    # lower bound.
    pi = math.fsum(topk[: min(eta, len(topk))])
    xi, exact = oddballness_from_topk(topk, tail_mass, p_t, rank)
    return TokenScoreRecord(
        token=token,
        p_t=p_t,
        r_t=rank,
        H=H,
        dH=entropy_delta(p_t, H),
        eta=eta,
        pi=min(1.0, pi),
        xi=xi,
        exact_xi=exact,
    )


def aggregate_features(records: Sequence[TokenScoreRecord]) -> TextFeatureVector:
    """Min/max/median per indicator plus perplexity and token count."""
    if not records:
        raise ValueError("aggregate_features of empty record list")
    columns = {
        "p": [r.p_t for r in records],
        "r": [float(r.r_t) for r in records],
        "H": [r.H for r in records],
        "dH": [r.dH for r in records],
        "eta": [float(r.eta) for r in records],
        "pi": [r.pi for r in records],
        "xi": [r.xi for r in records],
    }
    aggregates: dict[str, float] = {}
    for name, values in columns.items():
        aggregates[f"min_{name}"] = float(min(values))
        aggregates[f"max_{name}"] = float(max(values))
        aggregates[f"median_{name}"] = float(np.median(values))
    return TextFeatureVector(aggregates, perplexity(records), len(records))


@dataclass(frozen=True)
class PplPairDiagnostics:
    n_pairs: int
    mean_ppl_corrupted: float
    std_ppl_corrupted: float
    mean_ppl_fixed: float
    std_ppl_fixed: float
    share_dppl_pos: float
    share_dppl_neg: float
    share_dppl_zero: float
    # share matrix over {dnumtok = 0, > 0, < 0} x {dppl > 0, dppl < 0}
    matrix: dict[str, dict[str, float]]
    ks_statistic: float
    ks_p_value: float
    pearson_rho: float | None
    pearson_p: float | None

    def as_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "mean_ppl_corrupted": self.mean_ppl_corrupted,
            "std_ppl_corrupted": self.std_ppl_corrupted,
            "mean_ppl_fixed": self.mean_ppl_fixed,
            "std_ppl_fixed": self.std_ppl_fixed,
            "share_dppl_pos": self.share_dppl_pos,
            "share_dppl_neg": self.share_dppl_neg,
            "share_dppl_zero": self.share_dppl_zero,
            "matrix": self.matrix,
            "ks_statistic": self.ks_statistic,
            "ks_p_value": self.ks_p_value,
            "pearson_rho": self.pearson_rho,
            "pearson_p": self.pearson_p,
        }


def ppl_pair_diagnostics(
    pairs: Sequence[tuple[Sequence[TokenScoreRecord], Sequence[TokenScoreRecord]]],
) -> PplPairDiagnostics:
    """Paired perplexity diagnostics over (corrupted, fixed) scored texts.

    dppl = ppl(corrupted) - ppl(fixed); dnumtok = len(fixed) - len(corrupted).
    Reports the sign shares, the share matrix conditioned on the sign of
    dnumtok, a KS test between the two perplexity samples, and the pooled
    perplexity-vs-length Pearson correlation (None when undefined).
    """
    if len(pairs) < 2:
        raise ValueError("ppl_pair_diagnostics requires at least 2 pairs")
    ppl_c = [perplexity(c) for c, _ in pairs]
    ppl_f = [perplexity(f) for _, f in pairs]
    n_c = [len(c) for c, _ in pairs]
    n_f = [len(f) for _, f in pairs]
    n = len(pairs)

    dppl = [c - f for c, f in zip(ppl_c, ppl_f)]
    dnum = [b - a for a, b in zip(n_c, n_f)]

    share_pos = sum(1 for d in dppl if d > 0) / n
    share_neg = sum(1 for d in dppl if d < 0) / n
    share_zero = 1.0 - share_pos - share_neg

    matrix: dict[str, dict[str, float]] = {}
    for key, cond in (
        ("numtok_eq0", lambda d: d == 0),
        ("numtok_gt0", lambda d: d > 0),
        ("numtok_lt0", lambda d: d < 0),
    ):
        matrix[key] = {
            "ppl_gt0": sum(1 for dp, dn in zip(dppl, dnum) if cond(dn) and dp > 0) / n,
            "ppl_lt0": sum(1 for dp, dn in zip(dppl, dnum) if cond(dn) and dp < 0) / n,
        }

    ks_stat, ks_p = stats.ks_2sample(ppl_c, ppl_f)
    try:
        rho, rho_p = stats.pearson(ppl_c + ppl_f, [float(v) for v in n_c + n_f])
    except ValueError:
        rho, rho_p = None, None

    def _mean(v: list[float]) -> float:
        return math.fsum(v) / len(v)

    def _std(v: list[float]) -> float:
        m = _mean(v)
        return math.sqrt(math.fsum((x - m) ** 2 for x in v) / (len(v) - 1))

    return PplPairDiagnostics(
        n_pairs=n,
        mean_ppl_corrupted=_mean(ppl_c),
        std_ppl_corrupted=_std(ppl_c),
        mean_ppl_fixed=_mean(ppl_f),
        std_ppl_fixed=_std(ppl_f),
        share_dppl_pos=share_pos,
        share_dppl_neg=share_neg,
        share_dppl_zero=share_zero,
        matrix=matrix,
        ks_statistic=ks_stat,
        ks_p_value=ks_p,
        pearson_rho=rho,
        pearson_p=rho_p,
    )

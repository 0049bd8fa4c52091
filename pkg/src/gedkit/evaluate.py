"""Evaluation harness: F0.5, per-domain class balancing, confidence intervals.

The protocol: expand pairs into labeled instances, undersample the majority
class within each domain so classes are equal-sized, then score predictions
with F0.5 (precision weighted over recall) and attach a bootstrap percentile
interval. On a balanced set the all-positive predictor scores 5/9 = 0.5556,
the random-guess ceiling.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import LabeledInstance
from .errors import DataError
from .stats import t_interval

logger = logging.getLogger(__name__)

OVERALL_DOMAIN = "__overall__"


def f_beta(precision: float, recall: float, beta: float = 0.5) -> float:
    """(1 + b^2) P R / (b^2 P + R); by convention 0 when the denominator is 0."""
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + beta * beta) * precision * recall / denom


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float


def confusion(preds: Sequence[int], labels: Sequence[int]) -> Confusion:
    if len(preds) != len(labels):
        raise ValueError("preds and labels length mismatch")
    tp = fp = fn = tn = 0
    for p, y in zip(preds, labels):
        if p not in (0, 1) or y not in (0, 1):
            raise ValueError("preds and labels must be binary")
        if p == 1 and y == 1:
            tp += 1
        elif p == 1 and y == 0:
            fp += 1
        elif p == 0 and y == 1:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return Confusion(tp, fp, fn, tn, precision, recall)


def _derived_seed(seed: int, *parts: object) -> int:
    key = "\x1f".join([str(seed)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def undersample_balance(
    instances: Sequence[LabeledInstance], seed: int = 0
) -> list[LabeledInstance]:
    """Equalize class counts within each domain by seeded undersampling.

    Domains missing a class are dropped with a warning; kept instances are
    shuffled deterministically within their domain.
    """
    by_domain: dict[str, list[LabeledInstance]] = {}
    for inst in instances:
        by_domain.setdefault(inst.domain, []).append(inst)
    out: list[LabeledInstance] = []
    for domain, group in by_domain.items():
        pos = [i for i in group if i.label == 1]
        neg = [i for i in group if i.label == 0]
        if not pos or not neg:
            logger.warning("domain %r lacks one class, dropped from evaluation", domain)
            continue
        rng = np.random.default_rng(_derived_seed(seed, domain))
        m = min(len(pos), len(neg))
        if len(pos) > m:
            pos = [pos[int(j)] for j in rng.choice(len(pos), size=m, replace=False)]
        if len(neg) > m:
            neg = [neg[int(j)] for j in rng.choice(len(neg), size=m, replace=False)]
        kept = pos + neg
        order = rng.permutation(len(kept))
        out.extend(kept[int(j)] for j in order)
    return out


@dataclass(frozen=True)
class BootstrapResult:
    mean: float
    low: float
    high: float
    skipped: int


def bootstrap_ci(
    preds: Sequence[int],
    labels: Sequence[int],
    metric: Callable[[Sequence[int], Sequence[int]], float] | None = None,
    B: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapResult:
    """Percentile bootstrap over (pred, label) resamples.

    Resamples whose labels are single-class leave the metric undefined; they
    are redrawn up to 10 times, then skipped (the count is reported).
    """
    n = len(preds)
    if n != len(labels):
        raise ValueError("preds and labels length mismatch")
    if n < 2:
        raise ValueError("bootstrap_ci requires n >= 2")
    if metric is None:
        metric = _f05_of
    p = np.asarray(preds, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    values: list[float] = []
    skipped = 0
    for b in range(B):
        rng = np.random.default_rng(_derived_seed(seed, b))
        for _ in range(1 + 10):
            idx = rng.integers(0, n, size=n)
            yy = y[idx]
            if 0 < int(yy.sum()) < n:
                values.append(metric(p[idx].tolist(), yy.tolist()))
                break
        else:
            skipped += 1
    if skipped:
        logger.warning("bootstrap_ci: %d of %d resamples skipped (single-class)", skipped, B)
    if not values:
        raise DataError("all bootstrap resamples were single-class")
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(values, [alpha, 1.0 - alpha])
    return BootstrapResult(float(np.mean(values)), float(low), float(high), skipped)


def _f05_of(preds: Sequence[int], labels: Sequence[int]) -> float:
    c = confusion(preds, labels)
    return f_beta(c.precision, c.recall)


@dataclass(frozen=True)
class EvalReport:
    domain: str
    n: int
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f05: float
    ci_low: float | None
    ci_high: float | None
    ci_method: str  # bootstrap | t_interval | none

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "n": self.n,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "f05": self.f05,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "ci_method": self.ci_method,
        }


def _report_for(
    domain: str,
    preds: Sequence[int],
    labels: Sequence[int],
    ci_method: str,
    B: int,
    level: float,
    seed: int,
) -> EvalReport:
    c = confusion(preds, labels)
    f05 = f_beta(c.precision, c.recall)
    ci_low = ci_high = None
    if ci_method == "bootstrap":
        boot = bootstrap_ci(preds, labels, B=B, level=level, seed=seed)
        # percentile interval of the resampled metric, clipped to contain the
        # point estimate (finite-B quantile jitter)
        ci_low, ci_high = min(boot.low, f05), max(boot.high, f05)
    return EvalReport(
        domain, len(preds), c.tp, c.fp, c.fn, c.tn,
        c.precision, c.recall, f05, ci_low, ci_high,
        ci_method if ci_method != "none" else "none",
    )


def evaluate_predictions(
    predictions: Mapping[str, int],
    instances: Sequence[LabeledInstance],
    group_by_domain: bool = True,
    ci_method: str = "bootstrap",
    B: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> list[EvalReport]:
    """Per-domain reports (after balancing) plus an overall row.

    Every instance id must be present in the predictions; balancing is seeded
    undersampling within each domain.
    """
    for inst in instances:
        if inst.id not in predictions:
            raise DataError(f"prediction missing for instance id {inst.id!r}")
    balanced = undersample_balance(instances, seed)
    if not balanced:
        raise DataError("no domain has both classes; nothing to evaluate")
    groups: dict[str, list[LabeledInstance]] = {}
    if group_by_domain:
        for inst in balanced:
            groups.setdefault(inst.domain, []).append(inst)
    reports = []
    for domain in sorted(groups):
        insts = groups[domain]
        reports.append(
            _report_for(
                domain,
                [predictions[i.id] for i in insts],
                [i.label for i in insts],
                ci_method, B, level, seed,
            )
        )
    reports.append(
        _report_for(
            OVERALL_DOMAIN,
            [predictions[i.id] for i in balanced],
            [i.label for i in balanced],
            ci_method, B, level, seed,
        )
    )
    return reports


def aggregate_runs(
    per_run_reports: Sequence[Sequence[EvalReport]], t_value: float = 4.3
) -> list[EvalReport]:
    """Combine repeated evaluations: per-domain mean F0.5 with a t interval."""
    if len(per_run_reports) < 2:
        raise DataError("aggregate_runs needs at least 2 runs")
    domains = [r.domain for r in per_run_reports[0]]
    out: list[EvalReport] = []
    for domain in domains:
        rows = []
        for run in per_run_reports:
            match = [r for r in run if r.domain == domain]
            if not match:
                raise DataError(f"run is missing domain {domain!r}")
            rows.append(match[0])
        values = [r.f05 for r in rows]
        mean, low, high = t_interval(values, t_value)
        out.append(
            EvalReport(
                domain,
                rows[0].n,
                sum(r.tp for r in rows),
                sum(r.fp for r in rows),
                sum(r.fn for r in rows),
                sum(r.tn for r in rows),
                float(np.mean([r.precision for r in rows])),
                float(np.mean([r.recall for r in rows])),
                mean,
                low,
                high,
                "t_interval",
            )
        )
    return out


def render_report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned plain-text table of evaluation reports."""
    headers = ["domain", "n", "precision", "recall", "f05", "ci_low", "ci_high", "ci"]
    rows = [headers]
    for r in reports:
        rows.append(
            [
                "overall" if r.domain == OVERALL_DOMAIN else r.domain,
                str(r.n),
                f"{r.precision:.4f}",
                f"{r.recall:.4f}",
                f"{r.f05:.4f}",
                "-" if r.ci_low is None else f"{r.ci_low:.4f}",
                "-" if r.ci_high is None else f"{r.ci_high:.4f}",
                r.ci_method,
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = []
    for idx, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)

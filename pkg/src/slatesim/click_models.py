"""Offline click models fit on logged interactions.

Two models: a naive per-item click-through rate (position-blind) and a
position-based model whose click probability factorizes into a per-item
logistic relevance head over the observation snapshot times a per-rank
examination parameter. The PBM is fit by full-batch alternating gradient
ascent on the Bernoulli log-likelihood with backtracking step halving.
Examination parameters are only identified up to scale, so comparisons use
propensities normalized to 1 at rank 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .logs import InteractionLog, log_arrays


class ClickModelError(ValueError):
    pass


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _ranked(scores: np.ndarray, items: np.ndarray, descending: bool = True) -> np.ndarray:
    key = -scores if descending else scores
    order = np.lexsort((items, key))
    return items[order]


@dataclass
class DctrParams:
    """Per-item click and impression counts; CTR ignores rank and state."""

    clicks: np.ndarray
    impressions: np.ndarray

    @property
    def ctr(self) -> np.ndarray:
        """Click rate per item; items never impressed are flagged separately
        and rank as zero."""
        out = np.zeros_like(self.clicks, dtype=np.float64)
        seen = self.impressions > 0
        out[seen] = self.clicks[seen] / self.impressions[seen]
        return out

    @property
    def never_impressed(self) -> np.ndarray:
        return self.impressions == 0

    def item_scores(self, observation: np.ndarray, items: np.ndarray) -> np.ndarray:
        return self.ctr[items]


def fit_dctr(log: InteractionLog) -> DctrParams:
    if not log.rows:
        raise ClickModelError("cannot fit on an empty log")
    _, _, items, _, clicks = log_arrays(log)
    n = log.n_items
    impressions = np.bincount(items.ravel(), minlength=n)
    clicked = np.bincount(items.ravel(), weights=clicks.ravel(), minlength=n)
    return DctrParams(clicks=clicked, impressions=impressions)


@dataclass
class PbmParams:
    """Fitted position-based model.

    Raw parameters are unconstrained; sigmoids keep every predicted
    probability inside [0, 1]. ``loglik_trace`` records the mean
    log-likelihood after each accepted ascent iteration.
    """

    rel_weights: np.ndarray      # (n_items, obs_dim)
    rel_bias: np.ndarray         # (n_items,)
    exam_raw: np.ndarray         # (slate_size,)
    loglik_trace: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def examination(self) -> np.ndarray:
        return _sigmoid(self.exam_raw)

    def item_relevance(self, observation: np.ndarray, items: np.ndarray) -> np.ndarray:
        return _sigmoid(self.rel_weights[items] @ observation + self.rel_bias[items])

    def item_scores(self, observation: np.ndarray, items: np.ndarray) -> np.ndarray:
        return self.item_relevance(observation, items)

    def click_probability(
        self, observation: np.ndarray, items: np.ndarray, ranks: np.ndarray
    ) -> np.ndarray:
        return self.item_relevance(observation, items) * self.examination[ranks - 1]


def fit_pbm(
    log: InteractionLog,
    max_iters: int = 5000,
    tolerance: float = 1e-6,
    init_seed: int | None = None,
) -> PbmParams:
    """Maximum-likelihood PBM fit by alternating full-batch gradient ascent.

    Parameters start at zero (relevance 0.5, examination 0.5) unless
    ``init_seed`` requests a small random jitter. Each half-step backtracks
    by halving until the log-likelihood does not decrease; convergence is
    declared when an iteration improves the mean log-likelihood by less than
    ``tolerance``.
    """
    if not log.rows:
        raise ClickModelError("cannot fit on an empty log")
    if log.slate_size < 2:
        raise ClickModelError("position effects need a slate size of at least 2")
    _, obs, items, ranks, clicks = log_arrays(log)
    clicks = clicks.astype(np.float64)
    total = clicks.size
    n_clicked = clicks.sum()
    if n_clicked == 0 or n_clicked == total:
        raise ClickModelError(
            "log is non-identifiable: every position has the same click outcome"
        )

    n_items, obs_dim, slate = log.n_items, log.obs_dim, log.slate_size
    if init_seed is None:
        weights = np.zeros((n_items, obs_dim))
        bias = np.zeros(n_items)
        exam_raw = np.zeros(slate)
    else:
        rng = np.random.default_rng(init_seed)
        weights = rng.normal(scale=0.01, size=(n_items, obs_dim))
        bias = rng.normal(scale=0.01, size=n_items)
        exam_raw = rng.normal(scale=0.01, size=slate)

    rank_idx = ranks - 1                        # (rows, slate)
    flat_rank = rank_idx.ravel()
    n_rows = len(obs)

    def rel_of(w, b):
        # slates are duplicate-free, so one dense (rows, n_items) logit table
        # covers every position without scatter-accumulation
        z = obs @ w.T + b
        return _sigmoid(np.take_along_axis(z, items, axis=1))

    def loglik_from(rel, exam):
        p = np.clip(rel * exam, 1e-12, 1.0 - 1e-12)
        return float((clicks * np.log(p) + (1.0 - clicks) * np.log(1.0 - p)).mean())

    def rel_gradients(rel, exam):
        p = np.clip(rel * exam, 1e-12, 1.0 - 1e-12)
        dz = clicks * (1.0 - rel) - (1.0 - clicks) / (1.0 - p) * exam * rel * (1.0 - rel)
        spread = np.zeros((n_rows, n_items))
        np.put_along_axis(spread, items, dz, axis=1)
        return spread.T @ obs / total, spread.sum(axis=0) / total

    def exam_gradient(rel, g):
        exam = _sigmoid(g)[rank_idx]
        p = np.clip(rel * exam, 1e-12, 1.0 - 1e-12)
        de = clicks * (1.0 - exam) - (1.0 - clicks) / (1.0 - p) * rel * exam * (1.0 - exam)
        return np.bincount(flat_rank, weights=de.ravel(), minlength=slate) / total

    rel = rel_of(weights, bias)
    trace = [loglik_from(rel, _sigmoid(exam_raw)[rank_idx])]
    converged = False
    step_rel = step_exam = 8.0
    for _ in range(max_iters):
        current = trace[-1]
        # relevance half-step: examination held fixed
        exam = _sigmoid(exam_raw)[rank_idx]
        grad_w, grad_b = rel_gradients(rel, exam)
        accepted_first = True
        for _ in range(60):
            cand_w = weights + step_rel * grad_w
            cand_b = bias + step_rel * grad_b
            cand_rel = rel_of(cand_w, cand_b)
            value = loglik_from(cand_rel, exam)
            if value >= current:
                weights, bias, rel, current = cand_w, cand_b, cand_rel, value
                break
            step_rel *= 0.5
            accepted_first = False
        if accepted_first:
            step_rel = min(step_rel * 2.0, 1024.0)
        # examination half-step: relevance held fixed (cheap evaluations)
        grad_g = exam_gradient(rel, exam_raw)
        accepted_first = True
        for _ in range(60):
            cand_g = exam_raw + step_exam * grad_g
            value = loglik_from(rel, _sigmoid(cand_g)[rank_idx])
            if value >= current:
                exam_raw, current = cand_g, value
                break
            step_exam *= 0.5
            accepted_first = False
        if accepted_first:
            step_exam = min(step_exam * 2.0, 1024.0)
        trace.append(current)
        if current - trace[-2] < tolerance:
            converged = True
            break
    return PbmParams(
        rel_weights=weights,
        rel_bias=bias,
        exam_raw=exam_raw,
        loglik_trace=trace,
        converged=converged,
    )


def normalized_propensities(examination: np.ndarray | PbmParams) -> np.ndarray:
    """Per-rank examination divided by the rank-1 value."""
    exam = examination.examination if isinstance(examination, PbmParams) else np.asarray(
        examination, dtype=np.float64
    )
    if exam[0] <= 0.0:
        raise ClickModelError("rank-1 examination is zero; cannot normalize")
    return exam / exam[0]


def propensity_mse(learned: np.ndarray, true: np.ndarray) -> float:
    learned = np.asarray(learned, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if learned.shape != true.shape:
        raise ValueError(f"length mismatch: {learned.shape} vs {true.shape}")
    return float(((learned - true) ** 2).mean())


def rerank_by_model(model, observation: np.ndarray, items: np.ndarray) -> np.ndarray:
    """Order items by the model's relevance estimate, best first; ties break
    by ascending item id."""
    items = np.asarray(items, dtype=np.int64)
    return _ranked(model.item_scores(observation, items), items, descending=True)


def kendall_tau(a: np.ndarray, b: np.ndarray) -> float:
    """Rank correlation between two score vectors over the same ids."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = len(a)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            sa = np.sign(a[i] - a[j])
            sb = np.sign(b[i] - b[j])
            if sa == 0 or sb == 0:
                continue
            if sa == sb:
                concordant += 1
            else:
                discordant += 1
    pairs = concordant + discordant
    return (concordant - discordant) / pairs if pairs else 0.0

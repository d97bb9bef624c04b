"""Capacity of finite DMCs: Blahut-Arimoto, and a cost-constrained solver for large alphabets."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .quantized_dmc import TransitionMatrix, divergences, mutual_information

__all__ = ["BAResult", "blahut_arimoto", "cost_constrained_capacity"]

_LN2 = math.log(2.0)


class BAResult(NamedTuple):
    probs: np.ndarray
    capacity_bits: float
    converged: bool
    iterations: int
    gap_bits: float
    history: Optional[list] = None


def _linear(T) -> np.ndarray:
    rows = T.rows if isinstance(T, TransitionMatrix) else np.atleast_2d(np.asarray(T, dtype=float))
    if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("transition rows must be nonnegative and sum to 1")
    return rows


def _iterate(W, neg_h, probs, costs, s, tol, max_iter, history):
    """Run the fixed-multiplier iteration from ``probs``; returns (probs, converged, it, gap)."""
    gap = math.inf
    for it in range(1, max_iter + 1):
        q = probs @ W
        with np.errstate(divide="ignore"):
            log_q = np.where(q > 0, np.log(q), 0.0)
        D = neg_h - W @ log_q  # nats, D_i = KL(W_i || q)
        if history is not None:
            history.append(float(probs @ D) / _LN2)
        score = D - s * costs if costs is not None else D
        top = float(score.max())
        weights = probs * np.exp(score - top)
        total = float(weights.sum())
        gap = (-math.log(total)) / _LN2  # max_i score_i - log sum_i p_i exp(score_i)
        probs = weights / total
        if gap < tol:
            return probs, True, it, gap
    return probs, False, max_iter, gap


def blahut_arimoto(
    T,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    init=None,
    costs=None,
    cost_multiplier: float = 0.0,
    track_history: bool = False,
) -> BAResult:
    """Capacity-achieving input distribution of a finite DMC.

    Iterates the standard multiplicative update from ``init`` (uniform by
    default) until the capacity bracket ``max_i D_i - log2 sum_i p_i 2^D_i``
    closes below ``tol`` bits.  With ``costs`` and a positive
    ``cost_multiplier`` the objective becomes ``I - s E[cost]``.

    Hitting ``max_iter`` is not an error: the last iterate is returned with
    ``converged=False``.
    """
    W = _linear(T)
    n_in = W.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        neg_h = np.sum(np.where(W > 0, W * np.log(W), 0.0), axis=1)
    probs = np.full(n_in, 1.0 / n_in) if init is None else np.asarray(init, dtype=float).copy()
    costs = None if costs is None else np.asarray(costs, dtype=float)
    history = [] if track_history else None
    probs, converged, it, gap = _iterate(W, neg_h, probs, costs, cost_multiplier, tol, max_iter, history)
    probs = np.where(probs < 1e-300, 0.0, probs)
    probs /= probs.sum()
    mi = mutual_information(T if isinstance(T, TransitionMatrix) else W, probs)
    if history is not None:
        history.append(mi)
    return BAResult(probs, mi, converged, it, gap, history)


def _to_log_matrix(T) -> TransitionMatrix:
    if isinstance(T, TransitionMatrix):
        return T
    return TransitionMatrix(_linear(T))


def _restricted_optimum(T: TransitionMatrix, costs, budget, start) -> np.ndarray:
    """Maximise the mutual information over a small input subset with SLSQP."""

    def normalised(p):
        p = np.maximum(p, 0.0)
        return p / max(p.sum(), 1e-300)

    def neg_mi(p):
        return -mutual_information(T, normalised(p))

    def neg_grad(p):
        return -(divergences(T, normalised(p)) - 1.0 / _LN2)

    total = float(start.sum())
    start = start / total if total > 0 else np.full(start.size, 1.0 / start.size)
    # an interior start keeps the divergence gradients finite; affordable mass keeps it feasible
    x0 = start
    fits = costs <= budget
    if fits.any():
        x0 = 0.99 * start + 0.01 * fits / fits.sum()
    constraints = [
        {"type": "eq", "fun": lambda p: p.sum() - 1.0, "jac": lambda p: np.ones_like(p)},
        {"type": "ineq", "fun": lambda p: budget - p @ costs, "jac": lambda p: -costs},
    ]
    res = minimize(
        neg_mi, x0, jac=neg_grad, method="SLSQP", bounds=[(0.0, 1.0)] * start.size,
        constraints=constraints, options={"ftol": 1e-14, "maxiter": 500},
    )
    p = normalised(res.x)
    if neg_mi(p) > neg_mi(start):
        p = start
    spent = float(p @ costs)
    cheap = int(np.argmin(costs))
    if spent > budget * (1.0 + 1e-10) and costs[cheap] < budget:
        # pull back onto the budget by mixing in the cheapest input
        t = (spent - budget) / (spent - costs[cheap])
        p = (1.0 - t) * p
        p[cheap] += t
    return p


def _best_multiplier(D, costs, budget) -> tuple[float, float]:
    """Minimise the convex bound ``max_i D_i - s (cost_i - budget)`` over ``s >= 0``."""
    bound = lambda s: float(np.max(D - s * (costs - budget)))  # noqa: E731
    slack = budget - float(np.min(costs))
    # past s_hi the cheapest input alone pushes the bound above its value at s = 0
    s_hi = (float(np.max(D)) + 1.0) / slack if slack > 0 else 1e6
    res = minimize_scalar(bound, bounds=(0.0, s_hi), method="bounded", options={"xatol": 1e-12 * max(s_hi, 1.0)})
    best = min((bound(0.0), 0.0), (bound(float(res.x)), float(res.x)))
    return best[1], best[0]


def cost_constrained_capacity(
    T,
    costs,
    budget: float,
    tol: float = 1e-7,
    max_rounds: int = 100,
    batch: int = 20,
    stall_rounds: int = 3,
    warm_iter: int = 500,
    init=None,
) -> BAResult:
    """Capacity under ``E[cost] <= budget`` for DMCs with many candidate inputs.

    Column generation: the problem is solved exactly on a small working set,
    then every input is priced with the dual bound
    ``U = max_i D(W_i || q) - s (cost_i - budget)``, which upper-bounds the
    capacity for any output law ``q`` and multiplier ``s >= 0``.  The most
    violating inputs join the working set until ``U - I < tol`` bits.
    ``gap_bits`` of the result is that certified gap.  The start is
    Blahut-Arimoto over the inputs that fit the budget on their own (at most
    ``warm_iter`` iterations); small alphabets then put every input in the
    working set.  The search also stops, unconverged, once the rate has not
    improved for ``stall_rounds`` rounds, which happens when the restricted
    solver hits its own precision floor.  A feasible ``init`` distribution
    replaces the warm start when it is better, so the result is never below
    its rate.
    """
    T = _to_log_matrix(T)
    costs = np.asarray(costs, dtype=float)
    n = T.n_inputs
    if costs.shape != (n,):
        raise ValueError(f"costs has shape {costs.shape}, expected ({n},)")
    affordable = np.flatnonzero(costs <= budget)
    if affordable.size == 0:
        raise ValueError("no input satisfies the cost budget")

    cheapest = int(np.argmin(costs))
    # warm start: inputs within budget can be mixed freely, so plain BA over them is feasible
    warm = blahut_arimoto(
        TransitionMatrix(T.rows[affordable], T.log_rows[affordable]), tol=tol, max_iter=warm_iter
    )
    probs = np.zeros(n)
    probs[affordable] = warm.probs
    mi = mutual_information(T, probs)
    if init is not None:
        init = np.asarray(init, dtype=float)
        if init.shape != (n,) or np.any(init < 0) or abs(init.sum() - 1.0) > 1e-9:
            raise ValueError("init must be a probability vector over the inputs")
        if init @ costs > budget * (1.0 + 1e-12):
            raise ValueError("init exceeds the cost budget")
        mi_init = mutual_information(T, init)
        if mi_init > mi:
            probs, mi = init, mi_init
    history = [mi]
    D = divergences(T, probs)
    _, bound = _best_multiplier(D, costs, budget)
    gap = bound - mi
    if gap < tol:
        return BAResult(probs, mi, True, 0, max(gap, 0.0), history)
    if n <= 2 * batch:
        work = list(range(n))
    else:
        s, _ = _best_multiplier(D[affordable], costs[affordable], budget)
        top = np.argsort(-(D - s * costs))[:batch]
        n_likely = min(max(batch, int(np.count_nonzero(probs > 1e-6))), 4 * batch)
        likely = np.argsort(-probs)[:n_likely]
        work = sorted(set(likely.tolist()) | set(top.tolist()) | {cheapest})
    best = (mi, gap, probs)
    prev, stalled, converged = mi, 0, False
    for rounds in range(1, max_rounds + 1):
        idx = np.array(work)
        sub = TransitionMatrix(T.rows[idx], T.log_rows[idx])
        p_work = _restricted_optimum(sub, costs[idx], budget, probs[idx])
        probs = np.zeros(n)
        probs[idx] = p_work
        D = divergences(T, probs)
        mi = mutual_information(T, probs)
        history.append(mi)
        _, bound = _best_multiplier(D, costs, budget)
        gap = bound - mi
        if mi > best[0]:
            best = (mi, gap, probs)
        if gap < tol:
            converged = True
            break
        stalled = stalled + 1 if mi <= prev + 1e-12 else 0
        if stalled >= stall_rounds:
            break
        prev = mi
        # price with the working set's own multiplier, as in exact column generation
        s, _ = _best_multiplier(D[idx], costs[idx], budget)
        score = D - s * costs
        in_work = set(work)
        fresh = [int(i) for i in np.argsort(-score) if int(i) not in in_work][:batch]
        work = sorted(set(np.flatnonzero(probs > 1e-9).tolist()) | set(fresh) | {cheapest})
    mi, gap, probs = best
    return BAResult(probs, mi, bool(gap < tol), rounds, max(gap, 0.0), history)

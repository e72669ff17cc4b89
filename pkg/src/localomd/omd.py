"""Dual-stabilized online mirror descent on the probability simplex.

One stabilized step solves::

    min_{mu in simplex}  <xi, mu> + (1/eta) KL(mu, w) + (1/eta' - 1/eta) KL(mu, w1)

where ``w`` is the previous iterate, ``w1`` the anchor and ``1/eta' >= 1/eta``.
With Shannon entropy the minimizer is
``mu ∝ w^(eta'/eta) * w1^(1 - eta'/eta) * exp(-eta' xi)`` and the minimum value is
``-(1/eta') log`` of the normalizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
from scipy.special import logsumexp

LOG_FLOOR = 1e-300


def _as_simplex(p, name: str = "p") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError(f"{name} is not a probability vector")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} sums to {p.sum():.15g}, not 1")
    return p


def shannon_entropy(p) -> float:
    """Negative entropy ``sum p log p`` (the regularizer, so uniform gives ``-log k``)."""
    p = _as_simplex(p)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz])))


def entropy_gradient(p) -> np.ndarray:
    p = _as_simplex(p)
    return np.log(np.maximum(p, LOG_FLOOR)) + 1.0


def kl(p, q) -> float:
    p = _as_simplex(p, "p")
    q = _as_simplex(q, "q")
    nz = p > 0
    if np.any(q[nz] <= 0):
        raise ValueError("kl(p, q) needs q > 0 wherever p > 0")
    return float(np.sum(p[nz] * (np.log(p[nz]) - np.log(q[nz]))))


class LegendreRegularizer(Protocol):
    """What a local regularizer must provide; only Shannon entropy ships."""

    def value(self, p: np.ndarray) -> float: ...

    def gradient(self, p: np.ndarray) -> np.ndarray: ...

    def conjugate_gradient(self, y: np.ndarray) -> np.ndarray: ...

    def bregman(self, p: np.ndarray, q: np.ndarray) -> float: ...


class ShannonEntropy:
    def value(self, p):
        return shannon_entropy(p)

    def gradient(self, p):
        return entropy_gradient(p)

    def conjugate_gradient(self, y):
        # gradient of the simplex-restricted conjugate: softmax
        y = np.asarray(y, dtype=float)
        return np.exp(y - logsumexp(y))

    def bregman(self, p, q):
        return kl(p, q)


@dataclass(frozen=True)
class StabilizedStep:
    loss: np.ndarray
    prev: np.ndarray  # current iterate w^t
    anchor: np.ndarray  # initial iterate w^1
    inv_rate: float  # 1/eta^t
    next_inv_rate: float  # 1/eta^{t+1}

    def __post_init__(self):
        loss = np.asarray(self.loss, dtype=float)
        if not np.all(np.isfinite(loss)):
            raise ValueError("non-finite loss")
        if not (self.inv_rate > 0 and np.isfinite(self.inv_rate)):
            raise ValueError("inverse learning rate must be positive and finite")
        if not (self.next_inv_rate >= self.inv_rate and np.isfinite(self.next_inv_rate)):
            raise ValueError(f"inverse learning rate decreased: {self.inv_rate} -> {self.next_inv_rate}")
        prev = np.asarray(self.prev, dtype=float)
        anchor = np.asarray(self.anchor, dtype=float)
        if not (loss.shape == prev.shape == anchor.shape):
            raise ValueError("loss, iterate and anchor must have the same length")
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "prev", prev)
        object.__setattr__(self, "anchor", anchor)

    def objective(self, mu) -> float:
        """The stabilized objective at ``mu`` (0 log 0 = 0)."""
        mu = np.asarray(mu, dtype=float)
        nz = mu > 0
        lm = np.log(mu[nz])
        kl_prev = np.sum(mu[nz] * (lm - np.log(np.maximum(self.prev[nz], LOG_FLOOR))))
        kl_anchor = np.sum(mu[nz] * (lm - np.log(np.maximum(self.anchor[nz], LOG_FLOOR))))
        return float(self.loss @ mu + self.inv_rate * kl_prev
                     + (self.next_inv_rate - self.inv_rate) * kl_anchor)


def stabilized_simplex_update(step: StabilizedStep) -> tuple[np.ndarray, float]:
    """Exact minimizer and minimum value of the stabilized objective."""
    if step.next_inv_rate == step.inv_rate and not step.loss.any():
        return step.prev.copy(), 0.0  # exact fixed point, no log/exp round trip
    ratio = step.inv_rate / step.next_inv_rate  # eta'/eta in (0, 1]
    logits = (ratio * np.log(np.maximum(step.prev, LOG_FLOOR))
              + (1.0 - ratio) * np.log(np.maximum(step.anchor, LOG_FLOOR))
              - step.loss / step.next_inv_rate)
    log_z = logsumexp(logits)
    mu = np.exp(logits - log_z)
    return mu, float(-step.next_inv_rate * log_z)


def stabilized_update(loss, prev, anchor, inv_rate: float, next_inv_rate: float):
    """Hot-path variant of :func:`stabilized_simplex_update` without the step object."""
    if next_inv_rate < inv_rate:
        raise ValueError(f"inverse learning rate decreased: {inv_rate} -> {next_inv_rate}")
    if next_inv_rate == inv_rate and not loss.any():
        return np.array(prev, dtype=float), 0.0
    ratio = inv_rate / next_inv_rate
    logits = np.log(np.maximum(prev, LOG_FLOOR)) * ratio - loss / next_inv_rate
    if ratio != 1.0:
        logits += (1.0 - ratio) * np.log(np.maximum(anchor, LOG_FLOOR))
    m = logits.max()
    e = np.exp(logits - m)
    z = e.sum()
    return e / z, float(-next_inv_rate * (m + np.log(z)))


class NotConverged(RuntimeError):
    pass


def numerical_minimizer(step: StabilizedStep, tol: float = 1e-12, max_iter: int = 100_000,
                        theta: float = 0.5, trace: list | None = None) -> tuple[np.ndarray, float]:
    """Entropic mirror descent on the stabilized objective, with backtracking.

    Only the objective's gradient is used. The relative step ``theta`` (in units of
    ``1/eta'``) starts below one and is halved whenever the objective would increase.
    Stops once the simplex stationarity residual ``max |mu (g - <mu, g>)|`` falls
    below ``tol * max(1, max |g|)``. Objective values are appended to ``trace`` when given.
    """
    k = step.loss.size
    log_mu = np.full(k, -np.log(k))
    log_prev = np.log(np.maximum(step.prev, LOG_FLOOR))
    log_anchor = np.log(np.maximum(step.anchor, LOG_FLOOR))
    c, c_next = step.inv_rate, step.next_inv_rate

    def f(lm):
        mu = np.exp(lm)
        return float(step.loss @ mu + c * mu @ (lm - log_prev) + (c_next - c) * mu @ (lm - log_anchor))

    value = f(log_mu)
    if trace is not None:
        trace.append(value)
    for _ in range(max_iter):
        grad = step.loss + c * (log_mu - log_prev + 1.0) + (c_next - c) * (log_mu - log_anchor + 1.0)
        s = theta / c_next
        while True:
            cand = log_mu - s * grad
            cand -= logsumexp(cand)
            new_value = f(cand)
            if new_value <= value + 1e-14 * max(1.0, abs(value)) or s < 1e-30:  # rounding-level slack
                break
            s *= 0.5
        log_mu, value = cand, new_value
        if trace is not None:
            trace.append(value)
        mu = np.exp(log_mu)
        g = step.loss + c * (log_mu - log_prev + 1.0) + (c_next - c) * (log_mu - log_anchor + 1.0)
        # stationarity on the simplex, relative to the gradient scale (the objective's
        # rounding floor stalls the line search below that)
        if float(np.max(np.abs(mu * (g - mu @ g)))) < tol * max(1.0, float(np.max(np.abs(g)))):
            return mu, value
    raise NotConverged(f"no convergence after {max_iter} iterations")


@dataclass
class GDSAudit:
    iterates: np.ndarray  # (T + 1, k): w^1 .. w^{T+1}
    cumulative_loss: float  # sum_t <xi^t, w^t>
    regret_per_vertex: np.ndarray  # sum_t <xi^t, w^t - e_a>
    penalty_per_vertex: np.ndarray  # KL(e_a, w^1) / eta^T
    stability: np.ndarray  # per-step conjugate Bregman terms

    @property
    def regret(self) -> float:
        return float(self.regret_per_vertex.max())

    @property
    def bound_per_vertex(self) -> np.ndarray:
        return self.penalty_per_vertex + self.stability.sum()

    @property
    def holds(self) -> bool:
        return bool(np.all(self.regret_per_vertex <= self.bound_per_vertex + 1e-12))


def entropic_stability(w: np.ndarray, xi: np.ndarray, inv_rate: float) -> float:
    """Conjugate Bregman term ``D*(grad - xi, grad)`` for ``Psi = inv_rate * sum p log p``
    restricted to the simplex: ``<w, xi> + inv_rate * log sum w exp(-xi / inv_rate)``."""
    return float(w @ xi + inv_rate * logsumexp(-xi / inv_rate, b=w))


def gds_omd_run(losses: Sequence, anchor, inv_rates: Sequence[float]) -> GDSAudit:
    """Run stabilized OMD from ``anchor`` with inverse rates ``1/eta^1..1/eta^T``.

    The last step reuses ``1/eta^T`` as its next rate.
    """
    losses = np.asarray(losses, dtype=float)
    anchor = _as_simplex(anchor, "anchor")
    inv_rates = np.asarray(inv_rates, dtype=float)
    T, k = losses.shape
    if inv_rates.shape != (T,):
        raise ValueError("need one inverse rate per round")
    w = anchor.copy()
    iterates = [w]
    cum = 0.0
    vertex_loss = np.zeros(k)
    stability = np.empty(T)
    for t in range(T):
        xi = losses[t]
        nxt = inv_rates[t + 1] if t + 1 < T else inv_rates[t]
        stability[t] = entropic_stability(w, xi, inv_rates[t])
        cum += float(xi @ w)
        vertex_loss += xi
        w, _ = stabilized_simplex_update(StabilizedStep(xi, w, anchor, inv_rates[t], nxt))
        iterates.append(w)
    penalty = -np.log(anchor) * inv_rates[-1]  # KL(e_a, w1) = -log w1(a)
    return GDSAudit(np.array(iterates), cum, cum - vertex_loss, penalty, stability)

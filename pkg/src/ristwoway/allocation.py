"""Greedy max-min sub-band assignment and waterfilling power allocation."""

from __future__ import annotations

import numpy as np

from .channel import ChannelRealization
from .config import ConfigError, SystemConfig
from .rate_model import PhaseVector


def _psi(psi):
    return psi.psi if isinstance(psi, PhaseVector) else np.asarray(psi)


def uniform_band_rates(ch: ChannelRealization, psi, cfg: SystemConfig) -> np.ndarray:
    """``log2(1 + gamma)`` per (k, v, i) with power ``P_k^i / V`` on every band."""
    hbar = ch.effective(_psi(psi))
    p = cfg.P[:, None, :] / cfg.V
    return np.log2(1.0 + p * np.abs(hbar) ** 2 / cfg.sigma2[:, :, None])


def allocate_subbands(ch: ChannelRealization, psi_bar, cfg: SystemConfig) -> np.ndarray:
    """Greedy assignment; returns binary ``eta`` of shape (K, V, 2).

    First every (k, i) in order claims its best free band, then the (k, i)
    with the smallest accumulated rate repeatedly claims its best free band
    until none is left. Ties go to the lowest index.
    """
    K, V = ch.K, ch.V
    if V < 2 * K:
        raise ConfigError(f"V={V} < 2K={2 * K}")
    rates = uniform_band_rates(ch, psi_bar, cfg)
    eta = np.zeros((K, V, 2), dtype=np.int8)
    acc = np.zeros((K, 2))
    free = np.ones(V, dtype=bool)

    def claim(k, i):
        cand = np.where(free, rates[k, :, i], -np.inf)
        v = int(np.argmax(cand))
        eta[k, v, i] = 1
        free[v] = False
        return v

    for k in range(K):
        for i in range(2):
            v = claim(k, i)
            acc[k, i] = rates[k, v, i]
    while free.any():
        k, i = np.unravel_index(int(np.argmin(acc)), acc.shape)
        v = claim(k, i)
        acc[k, i] += rates[k, v, i]
    return eta


def uniform_power(eta: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """``P_k^i / V`` on every allocated band, zero elsewhere."""
    return eta * (cfg.P[:, None, :] / cfg.V)


def owned_uniform_power(eta: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Budget split evenly over the bands each (k, i) owns."""
    count = eta.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(count > 0, P[:, None, :] / count, 0.0)
    return eta * share


def waterfill(eta_row, gains, P: float) -> np.ndarray:
    """Closed-form waterfilling over the allocated bands of one node.

    ``p_v = [(P + sum eta/gain) / sum eta - 1/gain_v]^+`` where allocated.
    """
    eta_row = np.asarray(eta_row).astype(bool)
    gains = np.asarray(gains, dtype=float)
    p = np.zeros(gains.shape)
    n = int(eta_row.sum())
    if n == 0:
        return p
    inv = 1.0 / gains[eta_row]
    level = (P + inv.sum()) / n
    p[eta_row] = np.maximum(level - inv, 0.0)
    return p


def iterative_waterfill_row(eta_row, gains, P: float) -> np.ndarray:
    """Waterfill, dropping the weakest allocated band while any gets zero power."""
    active = np.asarray(eta_row).astype(bool) & (np.asarray(gains) > 0)
    gains = np.asarray(gains, dtype=float)
    while active.any():
        p = waterfill(active, gains, P)
        starved = active & (p <= 0.0)
        if not starved.any():
            return p
        weakest = int(np.argmin(np.where(active, gains, np.inf)))
        active[weakest] = False
    # degenerate: keep the best allocated band at full power
    p = np.zeros(gains.shape)
    owned = np.flatnonzero(eta_row)
    if owned.size:
        p[owned[int(np.argmax(gains[owned]))]] = P
    return p


def channel_gains(ch: ChannelRealization, psi, sigma2) -> np.ndarray:
    """``|g + h^H psi|^2 / sigma2`` per (k, v, i)."""
    return np.abs(ch.effective(_psi(psi))) ** 2 / np.asarray(sigma2)[:, :, None]


def iterative_waterfill(ch: ChannelRealization, eta: np.ndarray, psi, cfg: SystemConfig) -> np.ndarray:
    """Per-node iterative waterfilling; returns ``p`` of shape (K, V, 2).

    Pruned bands keep their indicator and simply carry zero power, so
    every band still has exactly one owner.
    """
    gains = channel_gains(ch, psi, cfg.sigma2)
    p = np.zeros(eta.shape)
    for k in range(ch.K):
        for i in range(2):
            p[k, :, i] = iterative_waterfill_row(eta[k, :, i], gains[k, :, i], cfg.P[k, i])
    return p

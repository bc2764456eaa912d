"""SNRs, rates, the max-min objective and the weighted-MMSE surrogate.

Array layout: per-(k, v, i) quantities have shape (K, V, 2). Each sub-band
serves one (k, i), so receive filters and MSE weights are stored per
(k, v) with the direction implied by the allocation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .channel import ChannelRealization


@dataclass(frozen=True)
class PhaseVector:
    """RIS reflection coefficients.

    For a discrete codebook the coefficients are built from the integer
    indices ``b`` as ``exp(2j*pi*b/2**bits)``; ``bits=None`` is continuous.
    """

    psi: np.ndarray
    bits: Optional[int] = None
    b: Optional[np.ndarray] = None

    @classmethod
    def from_indices(cls, b, bits: int) -> "PhaseVector":
        b = np.asarray(b, dtype=np.int64) % (1 << bits)
        return cls(psi=np.exp(2j * np.pi * b / (1 << bits)), bits=bits, b=b)

    @classmethod
    def from_angles(cls, theta) -> "PhaseVector":
        return cls(psi=np.exp(1j * np.asarray(theta, dtype=float)), bits=None)

    @property
    def R(self) -> int:
        return self.psi.shape[0]

    def __len__(self) -> int:
        return self.R


@dataclass
class Allocation:
    """Sub-band indicators ``eta`` and powers ``p``, both shape (K, V, 2)."""

    eta: np.ndarray
    p: np.ndarray

    def check(self, P: np.ndarray, tol: float = 1e-9) -> None:
        """Assert the allocation constraints; raises AssertionError."""
        eta, p = self.eta, self.p
        assert set(np.unique(eta)).issubset({0, 1}), "eta must be binary"
        assert np.all(eta.sum(axis=(0, 2)) == 1), "each sub-band must have exactly one owner"
        assert np.all(p >= 0), "negative power"
        assert np.all(p[eta == 0] == 0), "power on an unallocated sub-band"
        used = (eta * p).sum(axis=1)
        assert np.all(used <= P + tol), "power budget exceeded"


def effective_gain(g, h, psi) -> complex:
    """``g + h^H psi``."""
    h = np.asarray(h)
    if h.shape[-1] == 0:
        return np.asarray(g) + 0j
    return g + np.conj(h) @ np.asarray(psi)


def snr(p, hbar, sigma2):
    return np.asarray(p) * np.abs(hbar) ** 2 / np.asarray(sigma2)


def rate(p, hbar, sigma2, eta, V: int):
    """Returns ``(Gamma, gamma)``: rate in bps/Hz and SNR."""
    gamma = snr(p, hbar, sigma2)
    return np.asarray(eta) / V * np.log2(1.0 + gamma), gamma


def _psi(psi) -> np.ndarray:
    return psi.psi if isinstance(psi, PhaseVector) else np.asarray(psi)


def band_rates(ch: ChannelRealization, alloc: Allocation, psi, sigma2) -> np.ndarray:
    """Gamma for every (k, v, i), shape (K, V, 2)."""
    hbar = ch.effective(_psi(psi))
    Gamma, _ = rate(alloc.p, hbar, np.asarray(sigma2)[:, :, None], alloc.eta, ch.V)
    return Gamma


def direction_sumrates(ch, alloc, psi, sigma2, kappa) -> np.ndarray:
    """Weighted sum-rate of each direction, shape (2,)."""
    Gamma = band_rates(ch, alloc, psi, sigma2)
    return np.einsum("k,kvi->i", np.asarray(kappa, dtype=float), Gamma)


def min_weighted_sumrate(ch, alloc, psi, sigma2, kappa) -> float:
    return float(direction_sumrates(ch, alloc, psi, sigma2, kappa).min())


class Served(NamedTuple):
    """Per-(k, v) view of the direction that owns each band."""

    owned: np.ndarray  # (K, V) bool
    direction: np.ndarray  # (K, V) int, meaningful where owned
    p: np.ndarray  # (K, V)
    g: np.ndarray  # (K, V)
    h: np.ndarray  # (K, V, R)
    sigma2: np.ndarray  # (K, V)


def served(ch: ChannelRealization, alloc: Allocation, sigma2) -> Served:
    eta = alloc.eta
    owned = eta.any(axis=2)
    direction = np.argmax(eta, axis=2)
    kk, vv = np.indices(owned.shape)
    return Served(
        owned=owned,
        direction=direction,
        p=alloc.p[kk, vv, direction] * owned,
        g=ch.g[kk, vv, direction],
        h=ch.h[kk, vv, direction],
        sigma2=np.asarray(sigma2, dtype=float),
    )


def mse(p, g, h, psi, u, sigma2):
    """MSE of the scaled estimate ``u*y``, expanded in psi.

    ``1 + 2 sqrt(p) Re{pi psi - u g} + p (psi^H Pi psi + |u g|^2) + sigma2 |u|^2``
    with ``pi = sqrt(p) g* |u|^2 h^H - u h^H`` and ``Pi = |u|^2 h h^H``.
    Broadcasts over leading axes; ``h`` carries R on the last axis.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u)
    g = np.asarray(g)
    psi = np.asarray(psi)
    sp = np.sqrt(p)
    au2 = np.abs(u) ** 2
    hH_psi = np.conj(h) @ psi if np.shape(h)[-1] else np.zeros_like(g)
    pi_psi = sp * np.conj(g) * au2 * hH_psi - u * hH_psi
    quad = au2 * np.abs(hH_psi) ** 2  # psi^H Pi psi
    return 1.0 + 2.0 * sp * np.real(pi_psi - u * g) + p * (quad + np.abs(u * g) ** 2) + sigma2 * au2


def mse_compact(p, hbar, u, sigma2):
    """``|1 - sqrt(p) u hbar|^2 + sigma2 |u|^2``."""
    return np.abs(1.0 - np.sqrt(p) * u * hbar) ** 2 + sigma2 * np.abs(u) ** 2


@dataclass
class SurrogateState:
    """Receive filters ``u`` and MSE weights ``w``, both (K, V)."""

    u: np.ndarray
    w: np.ndarray
    f1: float = float("nan")
    f2: float = float("nan")

    @property
    def f(self) -> float:
        return max(self.f1, self.f2)


def zeta(eta, w, eps, V: int):
    """Per-band surrogate term ``(eta/V)(w eps - log2 w - 1)``."""
    return np.asarray(eta) / V * (w * eps - np.log2(w) - 1.0)


def surrogate_terms(ch, alloc, psi, state: SurrogateState, sigma2) -> np.ndarray:
    """zeta for every (k, v), shape (K, V); zero on bands nobody in k owns."""
    s = served(ch, alloc, sigma2)
    hbar = effective_gain(s.g, s.h, _psi(psi))
    eps = mse_compact(s.p, hbar, state.u, s.sigma2)
    return np.where(s.owned, zeta(s.owned, state.w, eps, ch.V), 0.0)


def surrogate_objective(ch, alloc, psi, state: SurrogateState, sigma2, kappa) -> tuple[float, float, float]:
    """Returns ``(f1, f2, max(f1, f2))`` and stores f1, f2 on ``state``."""
    terms = surrogate_terms(ch, alloc, psi, state, sigma2)
    s_dir = np.argmax(alloc.eta, axis=2)
    owned = alloc.eta.any(axis=2)
    weighted = np.asarray(kappa, dtype=float)[:, None] * terms
    f1 = float(weighted[owned & (s_dir == 0)].sum())
    f2 = float(weighted[owned & (s_dir == 1)].sum())
    state.f1, state.f2 = f1, f2
    return f1, f2, max(f1, f2)

"""Geometry, multipath taps and per-sub-band channel responses.

DFT convention: ``[F]_{v,n} = exp(-2j*pi*v*n/V)``, i.e. ``numpy.fft.fft``.
With ``f_v^H`` the v-th row of F,

* direct response   ``g[k, v, i] = F[v, :] @ g_taps``
* reflected vector  ``h[k, v, i] = conj(F[v, :] @ H_taps)``

so that ``g + h^H psi`` is exactly the DFT of the time-domain composite
channel ``g_taps + H_taps @ psi``. Direction i = 0 is Node_k^1 -> Node_k^2,
direction i = 1 the reverse. Nodes of pair k are index-matched across the
two clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


@dataclass(frozen=True)
class Geometry:
    """Node positions, shape (2, K, 3): cluster (node index 1/2), pair, xyz."""

    positions: np.ndarray
    ris_position: np.ndarray

    @property
    def d_direct(self) -> np.ndarray:
        """Node_k^1 - Node_k^2 distance per pair, shape (K,)."""
        return np.linalg.norm(self.positions[0] - self.positions[1], axis=-1)

    @property
    def d_ris(self) -> np.ndarray:
        """Node - RIS distance, shape (2, K)."""
        return np.linalg.norm(self.positions - self.ris_position, axis=-1)


@dataclass(frozen=True)
class TapVector:
    taps: np.ndarray
    source_kind: str  # "k-k", "k-r" or "r-k"


@dataclass(frozen=True)
class ChannelRealization:
    """Frequency responses plus the time-domain taps they came from.

    Shapes: ``g`` (K, V, 2); ``h`` (K, V, 2, R); ``xi_kk`` (K, 2, L_kk);
    ``xi_kr`` (R, K, 2, L_kr); ``xi_rk`` (R, K, 2, L_rk).
    """

    g: np.ndarray
    h: np.ndarray
    xi_kk: np.ndarray
    xi_kr: np.ndarray
    xi_rk: np.ndarray
    geometry: Geometry | None = None

    @property
    def K(self) -> int:
        return self.g.shape[0]

    @property
    def V(self) -> int:
        return self.g.shape[1]

    @property
    def R(self) -> int:
        return self.h.shape[-1]

    def effective(self, psi: np.ndarray) -> np.ndarray:
        """Composite response ``g + h^H psi`` for every (k, v, i)."""
        if self.R == 0:
            return self.g.copy()
        return self.g + np.conj(self.h) @ np.asarray(psi)

    def without_ris(self) -> "ChannelRealization":
        """Same realization with the reflected link removed (R = 0)."""
        K, V = self.g.shape[:2]
        return ChannelRealization(
            g=self.g,
            h=np.zeros((K, V, 2, 0), dtype=complex),
            xi_kk=self.xi_kk,
            xi_kr=self.xi_kr[:0],
            xi_rk=self.xi_rk[:0],
            geometry=self.geometry,
        )

    def truncate(self, R: int) -> "ChannelRealization":
        """Keep only the first R RIS elements."""
        return ChannelRealization(
            g=self.g,
            h=self.h[..., :R],
            xi_kk=self.xi_kk,
            xi_kr=self.xi_kr[:R],
            xi_rk=self.xi_rk[:R],
            geometry=self.geometry,
        )


def sample_geometry(cfg: SystemConfig, rng: np.random.Generator) -> Geometry:
    """Place Node_k^1 / Node_k^2 uniformly inside their cluster spheres."""
    centers = np.asarray(cfg.cluster_centers, dtype=float)
    radius = float(cfg.cluster_radius)
    positions = np.empty((2, cfg.K, 3))
    for c in range(2):
        for k in range(cfg.K):
            if radius == 0.0:
                offset = np.zeros(3)
            else:
                # rejection sampling from the bounding cube
                while True:
                    offset = rng.uniform(-radius, radius, size=3)
                    if offset @ offset <= radius * radius:
                        break
            positions[c, k] = centers[c] + offset
    return Geometry(positions=positions, ris_position=np.asarray(cfg.ris_position, dtype=float))


def path_loss(d, beta: float, rho0: float, d0: float = 1.0):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distance must be positive")
    return rho0 * (d / d0) ** (-beta)


def pdp_profile(L: int, alpha: float) -> np.ndarray:
    """Normalized exponential power-delay profile; sums to one."""
    l = np.arange(L)
    return (1.0 - alpha) / (1.0 - alpha**L) * alpha**l


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def sample_taps(L: int, alpha: float, rho, rng: np.random.Generator, size=(), kind: str = "k-k") -> TapVector:
    """Multipath taps with exponential PDP scaled to total power ``rho``.

    ``rho`` broadcasts against ``size``; taps occupy the trailing axis.
    """
    nu = complex_normal(rng, tuple(size) + (L,))
    amp = np.sqrt(np.asarray(rho, dtype=float)[..., None] * pdp_profile(L, alpha))
    return TapVector(taps=amp * nu, source_kind=kind)


def cascade_reflected(xi_kr, xi_rk, V: int) -> np.ndarray:
    """Linear convolution of node-RIS and RIS-node taps, zero-padded to V.

    Works on the trailing axis; leading axes broadcast.
    """
    a = np.asarray(getattr(xi_kr, "taps", xi_kr))
    b = np.asarray(getattr(xi_rk, "taps", xi_rk))
    La, Lb = a.shape[-1], b.shape[-1]
    if La + Lb - 1 > V:
        raise ValueError(f"cascaded length {La + Lb - 1} exceeds V={V}")
    lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    out = np.zeros(lead + (V,), dtype=np.result_type(a, b, complex))
    for m in range(Lb):
        out[..., m : m + La] += a * b[..., m : m + 1]
    return out


def zero_pad(taps, V: int) -> np.ndarray:
    taps = np.asarray(getattr(taps, "taps", taps))
    L = taps.shape[-1]
    if L > V:
        raise ValueError(f"tap length {L} exceeds V={V}")
    pad = [(0, 0)] * (taps.ndim - 1) + [(0, V - L)]
    return np.pad(taps, pad)


def freq_response(padded_taps, axis: int = -1) -> np.ndarray:
    """V-point DFT ``F @ taps`` with ``[F]_{v,n} = exp(-2j*pi*v*n/V)``."""
    return np.fft.fft(np.asarray(padded_taps), axis=axis)


def build_realization(cfg: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization.

    Random draws are ordered geometry, direct taps, then RIS elements one by
    one, so the realization for R elements is a prefix of the one for R + 1
    under the same seed.
    """
    K, V, R = cfg.K, cfg.V, cfg.R
    geo = sample_geometry(cfg, rng)

    rho_kk = path_loss(geo.d_direct, cfg.beta_kk, cfg.rho0, cfg.d0)  # (K,)
    # direction i transmits from node i (cluster i) and receives at the other
    d_tx = geo.d_ris.T  # (K, 2): distance from transmitter of direction i
    d_rx = geo.d_ris[::-1].T
    rho_kr = path_loss(d_tx, cfg.beta_kr, cfg.rho0, cfg.d0)
    rho_rk = path_loss(d_rx, cfg.beta_rk, cfg.rho0, cfg.d0)

    xi_kk = sample_taps(cfg.L_kk, cfg.alpha, np.repeat(rho_kk[:, None], 2, axis=1), rng, size=(K, 2)).taps

    # one draw per element covering both hops keeps the R-prefix property
    nu = complex_normal(rng, (R, K, 2, cfg.L_kr + cfg.L_rk))
    xi_kr = np.sqrt(rho_kr[..., None] * pdp_profile(cfg.L_kr, cfg.alpha)) * nu[..., : cfg.L_kr]
    xi_rk = np.sqrt(rho_rk[..., None] * pdp_profile(cfg.L_rk, cfg.alpha)) * nu[..., cfg.L_kr :]

    g = freq_response(zero_pad(xi_kk, V))  # (K, 2, V)
    cascaded = cascade_reflected(xi_kr, xi_rk, V)  # (R, K, 2, V)
    H = freq_response(cascaded)  # (R, K, 2, V)
    return ChannelRealization(
        g=np.ascontiguousarray(np.transpose(g, (0, 2, 1))),
        h=np.ascontiguousarray(np.conj(np.transpose(H, (1, 3, 2, 0)))),
        xi_kk=xi_kk,
        xi_kr=xi_kr,
        xi_rk=xi_rk,
        geometry=geo,
    )

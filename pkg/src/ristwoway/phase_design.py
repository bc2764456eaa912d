"""RIS phase-shift design.

* ``project`` - nearest codebook point, element-wise.
* ``init_phase`` - max-min channel-gain initialization through a line
  search over the Lagrange multiplier and a principal eigenvector.
* ``psg_optimize`` - projected subgradient descent on the weighted-MMSE
  surrogate with best-iterate tracking.
* ``exhaustive_phase_oracle`` - brute-force discrete optimum (tiny R only).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .channel import ChannelRealization
from .config import SystemConfig
from .rate_model import (
    Allocation,
    PhaseVector,
    SurrogateState,
    direction_sumrates,
    mse_compact,
    served,
    surrogate_objective,
)

ENUMERATION_CAP = 1 << 16
_TIE_TOL = 1e-12


def project(z, bits: Optional[int]) -> PhaseVector:
    """Element-wise projection onto the phase codebook.

    Zero entries map to phase 0. For a discrete codebook, an entry exactly
    half-way between two points goes to the lower index b.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    mag = np.abs(z)
    if bits is None:
        psi = np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
        return PhaseVector(psi=psi, bits=None)
    M = 1 << bits
    x = np.mod(np.angle(z), 2 * np.pi) * M / (2 * np.pi)
    lo = np.floor(x).astype(np.int64)
    frac = x - lo
    hi = lo + 1
    b = np.where(frac < 0.5, lo, hi)
    tie = np.abs(frac - 0.5) <= _TIE_TOL * M
    b = np.where(tie, np.minimum(lo % M, hi % M), b) % M
    b = np.where(mag > 0, b, 0)
    return PhaseVector.from_indices(b, bits)


def random_phase(R: int, bits: Optional[int], rng: np.random.Generator) -> PhaseVector:
    """Uniformly random codebook vector."""
    if bits is None:
        return PhaseVector.from_angles(rng.uniform(0.0, 2 * np.pi, size=R))
    return PhaseVector.from_indices(rng.integers(0, 1 << bits, size=R), bits)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------


def stacked_channels(ch: ChannelRealization) -> tuple[np.ndarray, np.ndarray]:
    """``g`` of shape (2, KV) and ``H`` of shape (2, KV, R) with rows ``h^H``."""
    K, V, R = ch.K, ch.V, ch.R
    g = np.transpose(ch.g, (2, 0, 1)).reshape(2, K * V)
    H = np.conj(np.transpose(ch.h, (2, 0, 1, 3))).reshape(2, K * V, R)
    return g, H


def augmented_gain_matrices(ch: ChannelRealization) -> np.ndarray:
    """``[[H^H H, H^H g], [g^H H, 0]]`` per direction, shape (2, R+1, R+1)."""
    g, H = stacked_channels(ch)
    R = ch.R
    out = np.zeros((2, R + 1, R + 1), dtype=complex)
    for i in range(2):
        HH = np.conj(H[i].T)
        out[i, :R, :R] = HH @ H[i]
        out[i, :R, R] = HH @ g[i]
        out[i, R, :R] = np.conj(out[i, :R, R])
    return out


@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool


def principal_eigvec(A: np.ndarray, x0: Optional[np.ndarray] = None, tol: float = 1e-10, max_iter: int = 5000) -> EigResult:
    """Eigenpair for the algebraically largest eigenvalue of Hermitian ``A``.

    Power iteration on ``A / c + I`` with ``c = ||A||_1``, which is positive
    semidefinite, so its dominant eigenvector is the one wanted even when
    ``A`` is indefinite. Converged when ``||A x - mu x|| <= tol * c``.
    """
    n = A.shape[0]
    c = float(np.abs(A).sum(axis=0).max())
    if c == 0.0:
        x = np.zeros(n, dtype=complex)
        x[-1] = 1.0
        return EigResult(0.0, x, 0, True)
    B = A / c
    x = np.ones(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).copy()
    nx = np.linalg.norm(x)
    if nx == 0.0:
        x = np.ones(n, dtype=complex)
        nx = np.linalg.norm(x)
    x /= nx
    for it in range(1, max_iter + 1):
        Bx = B @ x
        mu = np.vdot(x, Bx).real
        r = Bx - mu * x
        if np.vdot(r, r).real <= tol * tol:
            return EigResult(float(mu) * c, x, it, True)
        y = Bx + x
        x = y / np.sqrt(np.vdot(y, y).real)
    Bx = B @ x
    mu = np.vdot(x, Bx).real
    return EigResult(float(mu) * c, x, max_iter, bool(np.linalg.norm(Bx - mu * x) <= tol))


@dataclass
class InitSolverState:
    lambda1: float
    Htilde: np.ndarray
    mu: float
    u: np.ndarray
    rho: float
    scores: np.ndarray = field(repr=False, default=None)


def solve_init(ch: ChannelRealization, grid_points: int = 101, tol: float = 1e-10, max_iter: int = 5000) -> InitSolverState:
    """Line search over ``lambda1`` on a uniform grid of [0, 1].

    For each grid value the principal eigenvector of
    ``H2 + lambda1 (H1 - H2)`` is scaled to squared norm R + 1 and scored by
    ``min_i u^H H_i u``; the best-scoring grid point wins (lowest lambda1 on
    ties).
    """
    Ht = augmented_gain_matrices(ch)
    R = ch.R
    lambdas = np.linspace(0.0, 1.0, grid_points) if grid_points > 1 else np.array([0.5])
    scores = np.empty(lambdas.size)
    best = None
    x0 = None
    for j, lam in enumerate(lambdas):
        A = Ht[1] + lam * (Ht[0] - Ht[1])
        res = principal_eigvec(A, x0, tol, max_iter)
        if not res.converged:
            # restart from a neutral vector with a longer budget
            res = principal_eigvec(A, None, tol, 4 * max_iter)
            if not res.converged:
                raise RuntimeError(f"power iteration did not converge at lambda1={lam:.4f}")
        x0 = res.vector
        u = res.vector * np.sqrt(R + 1) / np.linalg.norm(res.vector)
        s = min(float(np.real(np.vdot(u, Ht[i] @ u))) for i in range(2))
        scores[j] = s
        if best is None or s > best.rho:
            best = InitSolverState(lambda1=float(lam), Htilde=A, mu=res.value, u=u, rho=s)
    best.scores = scores
    return best


def init_phase(ch: ChannelRealization, cfg: SystemConfig, state: Optional[InitSolverState] = None) -> PhaseVector:
    """Initial phases maximizing the minimum bidirectional channel gain.

    ``state`` may carry a precomputed line search for this realization; it
    does not depend on the codebook, only the final projection does.
    """
    R = ch.R
    if R == 0:
        return project(np.zeros(0, dtype=complex), cfg.bits)
    st = state if state is not None else solve_init(ch, cfg.lambda_grid_points)
    u = st.u
    last = u[R]
    z = u[:R] if np.abs(last) < 1e-10 else u[:R] / last
    return project(z, cfg.bits)


def min_channel_gain(ch: ChannelRealization, psi) -> float:
    """``min_i ||g_i + H_i psi||^2`` over all sub-bands of all pairs."""
    psi = psi.psi if isinstance(psi, PhaseVector) else np.asarray(psi)
    hbar = ch.effective(psi)
    return float((np.abs(hbar) ** 2).sum(axis=(0, 1)).min())


# ---------------------------------------------------------------------------
# projected subgradient
# ---------------------------------------------------------------------------


class BandView(NamedTuple):
    """The N owned (k, v) bands flattened, with their serving direction."""

    k: np.ndarray
    v: np.ndarray
    direction: np.ndarray
    p: np.ndarray
    g: np.ndarray
    h: np.ndarray  # (N, R)
    sigma2: np.ndarray
    weight: np.ndarray  # kappa_k / V


def band_view(ch, alloc: Allocation, sigma2, kappa) -> BandView:
    k, v, i = np.nonzero(alloc.eta)
    return BandView(
        k=k,
        v=v,
        direction=i,
        p=alloc.p[k, v, i].astype(float),
        g=ch.g[k, v, i],
        h=ch.h[k, v, i],
        sigma2=np.asarray(sigma2, dtype=float)[k, v],
        weight=np.asarray(kappa, dtype=float)[k] / ch.V,
    )


def _vec(psi) -> np.ndarray:
    return psi.psi if isinstance(psi, PhaseVector) else np.asarray(psi)


def mmse_filter(p, hbar, sigma2):
    """``sqrt(p) Xi / (p |Xi|^2 + sigma2)`` with ``Xi = conj(hbar)``."""
    xi = np.conj(hbar)
    return np.sqrt(p) * xi / (p * np.abs(xi) ** 2 + sigma2)


def update_receive_filters(ch, alloc: Allocation, psi, sigma2) -> np.ndarray:
    """MMSE receive filter per (k, v); zero on bands pair k does not own."""
    s = served(ch, alloc, sigma2)
    hbar = s.g + (np.conj(s.h) @ _vec(psi) if ch.R else 0.0)
    return np.where(s.owned, mmse_filter(s.p, hbar, s.sigma2), 0.0)


def update_weights(eps) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("MSE must be positive")
    return 1.0 / eps


def refresh_state(ch, alloc: Allocation, psi, sigma2, kappa) -> SurrogateState:
    """Receive filters and weights at ``psi``, with f1, f2 evaluated there."""
    s = served(ch, alloc, sigma2)
    u = update_receive_filters(ch, alloc, psi, sigma2)
    hbar = s.g + (np.conj(s.h) @ _vec(psi) if ch.R else 0.0)
    eps = np.where(s.owned, mse_compact(s.p, hbar, u, s.sigma2), 1.0)
    state = SurrogateState(u=u, w=update_weights(eps))
    surrogate_objective(ch, alloc, psi, state, sigma2, kappa)
    return state


def _grad_coef(p, hbar, u, w, weight):
    return weight * w * (p * np.abs(u) ** 2 * hbar - np.sqrt(p) * np.conj(u))


def direction_gradients(ch, alloc: Allocation, psi, state: SurrogateState, sigma2, kappa) -> np.ndarray:
    """Gradient of f_i with respect to conj(psi), shape (2, R).

    ``sum_{k,v} (kappa_k eta / V) w h (p |u|^2 hbar - sqrt(p) u*)``.
    """
    b = band_view(ch, alloc, sigma2, kappa)
    hbar = b.g + (np.conj(b.h) @ _vec(psi) if ch.R else 0.0)
    coef = _grad_coef(b.p, hbar, state.u[b.k, b.v], state.w[b.k, b.v], b.weight)
    out = np.zeros((2, ch.R), dtype=complex)
    for i in range(2):
        m = b.direction == i
        out[i] = coef[m] @ b.h[m]
    return out


def _select(f1: float, f2: float, g1, g2, tau: float):
    if abs(f1 - f2) <= _TIE_TOL:
        return tau * g1 + (1.0 - tau) * g2
    return g1 if f1 > f2 else g2


def subgradient(ch, alloc: Allocation, psi, state: SurrogateState, sigma2, kappa, tau: float = 0.5) -> np.ndarray:
    """Subgradient of ``max(f1, f2)``; the tau-blend when the two tie."""
    grads = direction_gradients(ch, alloc, psi, state, sigma2, kappa)
    return _select(state.f1, state.f2, grads[0], grads[1], tau)


class _Inner:
    """Filters, weights, surrogate values and gradients on a band view."""

    def __init__(self, b: BandView, psi: np.ndarray):
        hbar = b.g + (np.conj(b.h) @ psi if b.h.shape[-1] else 0.0)
        self.u = mmse_filter(b.p, hbar, b.sigma2)
        eps = mse_compact(b.p, hbar, self.u, b.sigma2)
        self.w = update_weights(eps)
        z = b.weight * (self.w * eps - np.log2(self.w) - 1.0)
        d = b.direction
        self.f1 = float(z[d == 0].sum())
        self.f2 = float(z[d == 1].sum())
        self.f = max(self.f1, self.f2)
        self._coef = _grad_coef(b.p, hbar, self.u, self.w, b.weight)

    def subgradient(self, b: BandView, tau: float) -> np.ndarray:
        d = b.direction
        g1 = self._coef[d == 0] @ b.h[d == 0]
        g2 = self._coef[d == 1] @ b.h[d == 1]
        return _select(self.f1, self.f2, g1, g2, tau)


def step_sizes(T: int) -> np.ndarray:
    return 1.0 / np.arange(1, T + 1)


@dataclass
class PSGResult:
    psi: PhaseVector
    f_best: float
    best_iter: int
    f_trace: np.ndarray  # f(psi^(t)), t = 0..T
    best_trace: np.ndarray  # running minimum of f_trace


def psg_optimize(ch, alloc: Allocation, psi_start: PhaseVector, cfg: SystemConfig, T_max: Optional[int] = None) -> PSGResult:
    """Projected subgradient descent on ``max(f1, f2)`` from ``psi_start``.

    Step ``t`` moves by ``delta / (t ||delta||)`` and projects. Every
    iterate is scored with freshly updated filters and weights, so the
    tracked objective equals minus the min-direction weighted sum-rate. The
    start counts as iterate 0; the best iterate is returned.
    """
    T = cfg.T_max if T_max is None else T_max
    bits = psi_start.bits
    b = band_view(ch, alloc, cfg.sigma2, cfg.kappa)
    psi = psi_start
    state = _Inner(b, psi.psi)
    f_trace = np.empty(T + 1)
    f_trace[0] = state.f
    best, best_f, best_t = psi, state.f, 0
    kappas = step_sizes(T)
    for t in range(1, T + 1):
        if ch.R > 0:
            delta = state.subgradient(b, cfg.tau)
            nd = np.linalg.norm(delta)
            if nd >= 1e-14:
                psi = project(psi.psi - kappas[t - 1] * delta / nd, bits)
                state = _Inner(b, psi.psi)
        f_trace[t] = state.f
        if state.f < best_f:
            best, best_f, best_t = psi, state.f, t
    return PSGResult(
        psi=best,
        f_best=best_f,
        best_iter=best_t,
        f_trace=f_trace,
        best_trace=np.minimum.accumulate(f_trace),
    )


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


def codebook_vectors(R: int, bits: int) -> np.ndarray:
    """All ``(2**bits)**R`` index vectors, lexicographic order."""
    M = 1 << bits
    return np.array(list(itertools.product(range(M), repeat=R)), dtype=np.int64).reshape(-1, R)


def exhaustive_phase_oracle(ch, alloc: Allocation, cfg: SystemConfig, cap: int = ENUMERATION_CAP) -> PhaseVector:
    """Discrete phase vector maximizing the min-direction weighted sum-rate.

    Enumerates the whole codebook; refuses when that exceeds ``cap``.
    """
    bits = cfg.bits
    if bits is None:
        raise ValueError("exhaustive search needs a discrete codebook")
    R = ch.R
    if (1 << bits) ** R > cap:
        raise ValueError(f"codebook size 2^{bits * R} exceeds the enumeration cap {cap}")
    idx = codebook_vectors(R, bits)
    cands = np.exp(2j * np.pi * idx / (1 << bits))  # (N, R)
    hbar = ch.g[None] + np.einsum("kvir,nr->nkvi", np.conj(ch.h), cands)
    gamma = alloc.p[None] * np.abs(hbar) ** 2 / cfg.sigma2[None, :, :, None]
    Gamma = alloc.eta[None] / ch.V * np.log2(1.0 + gamma)
    sums = np.einsum("k,nkvi->ni", cfg.kappa, Gamma)
    best = int(np.argmax(sums.min(axis=1)))
    return PhaseVector.from_indices(idx[best], bits)


def objective(ch, alloc: Allocation, psi, cfg: SystemConfig) -> float:
    return float(direction_sumrates(ch, alloc, psi, cfg.sigma2, cfg.kappa).min())

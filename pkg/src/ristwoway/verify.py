"""Invariant and oracle checks, run by ``ristwoway verify``.

Every check compares the production path against an independent
computation: a naive DFT and time-domain convolution for the channel, a
grid search for waterfilling, a step-by-step replay of the greedy
allocation, finite differences for the surrogate gradient, and brute-force
enumeration for the phase design.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .allocation import allocate_subbands, iterative_waterfill, iterative_waterfill_row
from .channel import build_realization
from .config import SystemConfig
from .harness import monte_carlo
from .phase_design import direction_gradients, random_phase, refresh_state
from .rate_model import Allocation, PhaseVector, direction_sumrates, surrogate_objective


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def _random_instance(cfg: SystemConfig, rng: np.random.Generator):
    """Realization, random phases, greedy bands and waterfilled powers."""
    ch = build_realization(cfg, rng)
    psi = random_phase(cfg.R, cfg.bits, rng)
    eta = allocate_subbands(ch, psi, cfg)
    alloc = Allocation(eta=eta, p=iterative_waterfill(ch, eta, psi, cfg))
    return ch, psi, alloc


# -- surrogate ---------------------------------------------------------------


def mmse_rate_identity(instances: int = 100, seed: int = 1, K: int = 3, V: int = 16, R: int = 16) -> tuple[bool, str]:
    """At MMSE filters and weights, f_i equals minus the weighted sum-rate."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        cfg = SystemConfig(K=K, V=V, R=R, kappa=rng.uniform(0.5, 2.0, K), seed=seed)
        ch, psi, alloc = _random_instance(cfg, rng)
        state = refresh_state(ch, alloc, psi, cfg.sigma2, cfg.kappa)
        rates = direction_sumrates(ch, alloc, psi, cfg.sigma2, cfg.kappa)
        worst = max(worst, abs(state.f1 + rates[0]), abs(state.f2 + rates[1]))
    return worst < 1e-9, f"max |f_i + sum kappa Gamma| = {worst:.2e} over {instances} instances (< 1e-9)"


def gradient_check(instances: int = 20, directions: int = 5, seed: int = 2, step: float = 1e-6) -> tuple[bool, str]:
    """Central differences of f_i against ``2 Re{d^H grad f_i}``, u and w fixed."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        cfg = SystemConfig(K=3, V=16, R=16, kappa=rng.uniform(0.5, 2.0, 3), seed=seed)
        ch, psi, alloc = _random_instance(cfg, rng)
        state = refresh_state(ch, alloc, psi, cfg.sigma2, cfg.kappa)
        grads = direction_gradients(ch, alloc, psi, state, cfg.sigma2, cfg.kappa)
        for _ in range(directions):
            d = rng.standard_normal(cfg.R) + 1j * rng.standard_normal(cfg.R)
            d /= np.linalg.norm(d)
            fp = surrogate_objective(ch, alloc, psi.psi + step * d, state, cfg.sigma2, cfg.kappa)
            fm = surrogate_objective(ch, alloc, psi.psi - step * d, state, cfg.sigma2, cfg.kappa)
            for i in range(2):
                fd = (fp[i] - fm[i]) / (2 * step)
                an = 2.0 * np.real(np.vdot(d, grads[i]))
                worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
    ok = worst < 1e-4
    return ok, f"max relative error {worst:.2e} over {instances}x{directions} directions, both f_i (< 1e-4)"


# -- channel -----------------------------------------------------------------


def _naive_dft(x: np.ndarray) -> np.ndarray:
    V = x.shape[-1]
    out = np.zeros(x.shape, dtype=complex)
    for v in range(V):
        for n in range(V):
            out[..., v] += x[..., n] * complex(math.cos(2 * math.pi * v * n / V), -math.sin(2 * math.pi * v * n / V))
    return out


def dft_equivalence(realizations: int = 100, seed: int = 3) -> tuple[bool, str]:
    """Frequency-domain ``g + h^H psi`` against the DFT of the time-domain composite."""
    cfg = SystemConfig(R=8)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(realizations):
        ch = build_realization(cfg, rng)
        psi = random_phase(cfg.R, None, rng).psi
        K, V = cfg.K, cfg.V
        td = np.zeros((K, 2, V), dtype=complex)
        for k in range(K):
            for i in range(2):
                td[k, i, : cfg.L_kk] += ch.xi_kk[k, i]
                for r in range(cfg.R):
                    c = np.convolve(ch.xi_kr[r, k, i], ch.xi_rk[r, k, i])
                    td[k, i, : c.size] += psi[r] * c
        ref = np.transpose(_naive_dft(td), (0, 2, 1))
        got = ch.effective(psi)
        worst = max(worst, float(np.abs(got - ref).max() / np.abs(ref).max()))
    return worst < 1e-10, f"max relative deviation {worst:.2e} over {realizations} realizations (< 1e-10)"


# -- waterfilling ------------------------------------------------------------


def _simplex_grid(n: int, points: int = 10_000) -> tuple[np.ndarray, int]:
    """Compositions of m into n parts, with m the largest giving <= points."""
    if n == 1:
        return np.ones((1, 1)), 1
    m = 1
    while math.comb(m + 1 + n - 1, n - 1) <= points:
        m += 1
    comps = [c for c in itertools.product(range(m + 1), repeat=n - 1) if sum(c) <= m]
    grid = np.array([list(c) + [m - sum(c)] for c in comps], dtype=float) / m
    return grid, m


def waterfilling_check(instances: int = 50, seed: int = 4) -> tuple[bool, str]:
    """Closed form against a simplex grid search, plus water-level KKT."""
    rng = np.random.default_rng(seed)
    worst_kkt = 0.0
    worst_gap = 0.0
    ok = True
    for _ in range(instances):
        n = int(rng.integers(1, 5))
        gains = 10.0 ** rng.uniform(-1.5, 1.5, n)
        P = float(10.0 ** rng.uniform(-1, 1))
        p = iterative_waterfill_row(np.ones(n), gains, P)
        val = np.log2(1 + gains * p).sum()
        grid, m = _simplex_grid(n)
        gvals = np.log2(1 + gains * grid * P).sum(axis=1)
        best = gvals.max()
        # any grid point is within n*P/m of the optimum in l1
        resolution = n * (P / m) * gains.max() / math.log(2)
        gap = val - best
        ok &= -1e-12 <= gap <= resolution
        worst_gap = max(worst_gap, gap / resolution)
        on = p > 0
        level = p[on] + 1 / gains[on]
        worst_kkt = max(worst_kkt, float(level.max() - level.min()), abs(p.sum() - P))
        ok &= bool(np.all(1 / gains[~on] >= level.max() - 1e-12))
    ok &= worst_kkt < 1e-9
    return ok, f"closed form >= grid optimum, gap <= {worst_gap:.2f} x resolution; KKT residual {worst_kkt:.1e} (< 1e-9)"


# -- greedy allocation -------------------------------------------------------


def replay_greedy(rates: np.ndarray) -> np.ndarray:
    """Step-by-step replay of the greedy assignment on a (K, V, 2) rate table."""
    K, V, _ = rates.shape
    owner: dict[int, tuple[int, int]] = {}
    total = {(k, i): 0.0 for k in range(K) for i in range(2)}
    remaining = list(range(V))

    def best_band(k, i):
        best_v = None
        for v in remaining:
            if best_v is None or rates[k, v, i] > rates[k, best_v, i]:
                best_v = v
        return best_v

    for k in range(K):
        for i in range(2):
            v = best_band(k, i)
            owner[v] = (k, i)
            remaining.remove(v)
            total[(k, i)] = rates[k, v, i]
    while remaining:
        target = None
        for key in sorted(total):
            if target is None or total[key] < total[target]:
                target = key
        v = best_band(*target)
        owner[v] = target
        remaining.remove(v)
        total[target] += rates[target[0], v, target[1]]
    eta = np.zeros((K, V, 2), dtype=int)
    for v, (k, i) in owner.items():
        eta[k, v, i] = 1
    return eta


def greedy_replay_check(instances: int = 100, seed: int = 5) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    agree = 0
    for _ in range(instances):
        K = int(rng.integers(1, 4))
        V = int(rng.integers(max(2 * K, 8), 17))
        cfg = SystemConfig(K=K, V=V, R=int(rng.integers(0, 9)), L_kk=min(8, V), L_kr=4, L_rk=4)
        ch = build_realization(cfg, rng)
        psi = random_phase(cfg.R, None, rng)
        hbar = ch.effective(psi.psi)
        rates = np.log2(1 + (cfg.P[:, None, :] / V) * np.abs(hbar) ** 2 / cfg.sigma2[:, :, None])
        agree += bool(np.array_equal(allocate_subbands(ch, psi, cfg), replay_greedy(rates)))
    return agree == instances, f"{agree}/{instances} allocations match the replay (100% required)"


# -- tiny-scale oracle -------------------------------------------------------


def oracle_soundness(trials: int = 200, seed: int = 6, ratio: float = 0.95) -> tuple[bool, str]:
    """optPSG never beats the exhaustive optimum and gets close on average."""
    cfg = SystemConfig(K=1, V=2, R=2, bits=1, L_kk=2, L_kr=1, L_rk=2, seed=seed)
    rows = monte_carlo(cfg, ["optPSG", "oracleTiny"], [(2, 1)], trials, seed=seed)
    psg = np.array([r.min_weighted_sumrate for r in rows if r.scheme == "optPSG"])
    orc = np.array([r.min_weighted_sumrate for r in rows if r.scheme == "oracleTiny"])
    bound = bool(np.all(psg <= orc + 1e-12))
    frac = float(psg.mean() / orc.mean())
    return bound and frac >= ratio, (
        f"optPSG <= oracle in {int(np.sum(psg <= orc + 1e-12))}/{trials} trials; "
        f"mean ratio {frac:.4f} (>= {ratio})"
    )


CHECKS: dict[str, Callable[..., tuple[bool, str]]] = {
    "mmse_rate": mmse_rate_identity,
    "gradient": gradient_check,
    "dft": dft_equivalence,
    "waterfilling": waterfilling_check,
    "greedy": greedy_replay_check,
    "oracle": oracle_soundness,
}

QUICK = {
    "mmse_rate": {"instances": 10},
    "gradient": {"instances": 4, "directions": 2},
    "dft": {"realizations": 10},
    "waterfilling": {"instances": 10},
    "greedy": {"instances": 10},
    "oracle": {"trials": 20},
}


def run_all(quick: bool = False, only=None) -> list[CheckResult]:
    names = list(CHECKS) if not only else list(only)
    out = []
    for name in names:
        kwargs = QUICK[name] if quick else {}
        out.append(_timed(name, lambda: CHECKS[name](**kwargs)))
    return out

"""Outer alternating optimization, scheme variants and Monte-Carlo sweeps."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .allocation import allocate_subbands, iterative_waterfill, owned_uniform_power
from .channel import ChannelRealization, build_realization
from .config import ConfigError, SystemConfig
from .phase_design import (
    ENUMERATION_CAP,
    exhaustive_phase_oracle,
    init_phase,
    psg_optimize,
    solve_init,
)
from .rate_model import Allocation, PhaseVector, direction_sumrates

log = logging.getLogger(__name__)

SCHEMES = ("optPSG", "uniPowPSG", "initialPSs", "randInitialPSG", "randPSs", "noRIS", "oracleTiny")

_USES_INIT = ("optPSG", "uniPowPSG", "initialPSs", "oracleTiny")

CSV_COLUMNS = (
    "scheme",
    "R",
    "B",
    "trial",
    "seed",
    "min_sumrate_bpshz",
    "dir1_sumrate",
    "dir2_sumrate",
    "outer_iters",
    "wall_ms",
)


def parse_schemes(text: str | Iterable[str]) -> list[str]:
    names = [s.strip() for s in text.split(",")] if isinstance(text, str) else list(text)
    names = [n for n in names if n]
    bad = [n for n in names if n not in SCHEMES]
    if bad:
        raise ConfigError(f"unknown scheme(s) {bad}; choose from {list(SCHEMES)}")
    return names


@dataclass
class TrialResult:
    scheme: str
    seed: int
    trial: int
    R: int
    B: Optional[int]
    min_weighted_sumrate: float
    dir_sumrates: np.ndarray
    outer_iters: int
    converged: bool
    wall_ms: float
    trace: list = field(default_factory=list, repr=False)
    alloc: Optional[Allocation] = field(default=None, repr=False)
    psi: Optional[PhaseVector] = field(default=None, repr=False)

    @property
    def B_label(self) -> str:
        return "inf" if self.B is None else str(self.B)


def phase_from_uniform(x: np.ndarray, bits: Optional[int]) -> PhaseVector:
    """Map uniforms in [0, 1) to a codebook vector (shared draws across B)."""
    if bits is None:
        return PhaseVector.from_angles(2 * np.pi * x)
    return PhaseVector.from_indices(np.floor(x * (1 << bits)).astype(np.int64), bits)


def alternate(
    ch: ChannelRealization,
    cfg: SystemConfig,
    eta: np.ndarray,
    psi: PhaseVector,
    update_phase: Optional[Callable[[Allocation, PhaseVector], PhaseVector]],
    waterfill: bool = True,
):
    """Alternate phase and power updates until the objective settles.

    Power starts from the allocation matching ``psi`` so the first phase
    update already sees a budget-consistent allocation. Returns
    ``(alloc, psi, trace, iterations, converged)``.
    """

    def power(ps):
        if waterfill:
            return iterative_waterfill(ch, eta, ps, cfg)
        return owned_uniform_power(eta, cfg.P)

    alloc = Allocation(eta=eta, p=power(psi))
    obj = float(direction_sumrates(ch, alloc, psi, cfg.sigma2, cfg.kappa).min())
    trace = [obj]
    if update_phase is None:
        return alloc, psi, trace, 1, True
    converged = False
    it = 0
    for it in range(1, cfg.outer_max_iters + 1):
        psi = update_phase(alloc, psi)
        if waterfill:
            alloc = Allocation(eta=eta, p=power(psi))
        new = float(direction_sumrates(ch, alloc, psi, cfg.sigma2, cfg.kappa).min())
        trace.append(new)
        if abs(new - obj) <= cfg.outer_tol * max(abs(obj), 1e-300):
            converged = True
            obj = new
            break
        obj = new
    return alloc, psi, trace, it, converged


def solve(
    ch: ChannelRealization,
    cfg: SystemConfig,
    scheme: str,
    psi_rand: Optional[PhaseVector] = None,
    psi_bar: Optional[PhaseVector] = None,
):
    """Run one scheme on one realization.

    ``psi_rand`` is the random phase vector used by the random schemes and
    ``psi_bar`` a precomputed initialization (both computed if omitted).
    Returns ``(alloc, psi, trace, outer_iters, converged)``.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    if scheme == "noRIS":
        ch0 = ch.without_ris()
        psi0 = PhaseVector(psi=np.zeros(0, dtype=complex), bits=cfg.bits)
        eta = allocate_subbands(ch0, psi0, cfg)
        return alternate(ch0, cfg, eta, psi0, None)

    if scheme in ("randInitialPSG", "randPSs"):
        if psi_rand is None:
            raise ValueError(f"{scheme} needs a random phase vector")
        psi0 = psi_rand
    else:
        psi0 = psi_bar if psi_bar is not None else init_phase(ch, cfg)
    eta = allocate_subbands(ch, psi0, cfg)

    def psg(alloc, ps):
        return psg_optimize(ch, alloc, ps, cfg).psi

    def oracle(alloc, ps):
        return exhaustive_phase_oracle(ch, alloc, cfg)

    if scheme in ("optPSG", "randInitialPSG"):
        return alternate(ch, cfg, eta, psi0, psg)
    if scheme == "uniPowPSG":
        return alternate(ch, cfg, eta, psi0, psg, waterfill=False)
    if scheme == "oracleTiny":
        if cfg.bits is None or (1 << cfg.bits) ** ch.R > ENUMERATION_CAP:
            raise ConfigError("oracleTiny needs a discrete codebook with 2^(B R) <= 2^16")
        return alternate(ch, cfg, eta, psi0, oracle)
    return alternate(ch, cfg, eta, psi0, None)  # initialPSs, randPSs


def _result(ch, cfg, scheme, seed, trial, out, t0) -> TrialResult:
    alloc, psi, trace, iters, converged = out
    chx = ch.without_ris() if scheme == "noRIS" else ch
    dirs = direction_sumrates(chx, alloc, psi, cfg.sigma2, cfg.kappa)
    if not converged:
        log.warning("%s: outer loop stopped at %d iterations without converging", scheme, iters)
    return TrialResult(
        scheme=scheme,
        seed=seed,
        trial=trial,
        R=ch.R,
        B=cfg.bits,
        min_weighted_sumrate=float(dirs.min()),
        dir_sumrates=dirs,
        outer_iters=iters,
        converged=converged,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        trace=trace,
        alloc=alloc,
        psi=psi,
    )


def run_scheme(cfg: SystemConfig, scheme: str, rng: np.random.Generator, trial: int = 0) -> TrialResult:
    """Draw a realization from ``rng`` and run ``scheme`` on it."""
    t0 = time.perf_counter()
    ch = build_realization(cfg, rng)
    psi_rand = phase_from_uniform(rng.random(cfg.R), cfg.bits)
    out = solve(ch, cfg, scheme, psi_rand=psi_rand)
    return _result(ch, cfg, scheme, cfg.seed, trial, out, t0)


def trial_streams(seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent channel and random-phase generators for one trial."""
    ss = np.random.SeedSequence([seed, trial])
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


def monte_carlo(
    cfg: SystemConfig,
    schemes: Sequence[str],
    sweep: Sequence[tuple[int, Optional[int]]],
    trials: int,
    seed: Optional[int] = None,
    progress: Optional[Callable[[int], None]] = None,
) -> list[TrialResult]:
    """Seeded sweep over ``(R, bits)`` points.

    Within a trial every scheme and every sweep point uses the same
    realization: it is drawn once for the largest R and truncated, and the
    random phase vectors come from one shared set of uniforms.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    schemes = parse_schemes(schemes)
    seed = cfg.seed if seed is None else seed
    rows: list[TrialResult] = []
    if not sweep or not schemes:
        return rows
    R_max = max(R for R, _ in sweep)
    base = cfg.replace(R=R_max, seed=seed)
    for trial in range(trials):
        rng_ch, rng_psi = trial_streams(seed, trial)
        full = build_realization(base, rng_ch)
        uniforms = rng_psi.random(R_max)
        searches: dict[int, object] = {}  # the line search depends on R only
        for R, bits in sweep:
            point = base.replace(R=R, bits=bits)
            ch = full.truncate(R)
            psi_bar = None
            for scheme in schemes:
                t0 = time.perf_counter()
                if scheme in _USES_INIT and psi_bar is None:
                    if R not in searches and R > 0:
                        searches[R] = solve_init(ch, point.lambda_grid_points)
                    psi_bar = init_phase(ch, point, searches.get(R))
                out = solve(ch, point, scheme, psi_rand=phase_from_uniform(uniforms[:R], bits), psi_bar=psi_bar)
                rows.append(_result(ch, point, scheme, seed, trial, out, t0))
        if progress is not None:
            progress(trial)
    return rows


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_csv(rows: Sequence[TrialResult], fh, timing: bool = False) -> None:
    """Write the per-trial table; ``wall_ms`` is left empty unless ``timing``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(
            [
                r.scheme,
                r.R,
                r.B_label,
                r.trial,
                r.seed,
                _fmt(r.min_weighted_sumrate),
                _fmt(r.dir_sumrates[0]),
                _fmt(r.dir_sumrates[1]),
                r.outer_iters,
                _fmt(r.wall_ms) if timing else "",
            ]
        )


def to_csv_text(rows: Sequence[TrialResult], timing: bool = False) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, timing)
    return buf.getvalue()


def summarize(rows: Sequence[TrialResult]) -> list[dict]:
    """Mean and standard error of the objective per (scheme, R, B)."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((r.scheme, r.R, r.B_label), []).append(r.min_weighted_sumrate)
    out = []
    for (scheme, R, B), vals in groups.items():
        a = np.asarray(vals)
        se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else float("nan")
        out.append({"scheme": scheme, "R": R, "B": B, "trials": a.size, "mean": float(a.mean()), "stderr": se})
    return out

import dataclasses
import itertools

import numpy as np
import pytest
from scipy.stats import binomtest

from ristwoway.allocation import allocate_subbands, iterative_waterfill
from ristwoway.channel import build_realization
from ristwoway.config import SystemConfig
from ristwoway.phase_design import (
    augmented_gain_matrices,
    direction_gradients,
    exhaustive_phase_oracle,
    init_phase,
    min_channel_gain,
    mmse_filter,
    objective,
    principal_eigvec,
    project,
    psg_optimize,
    random_phase,
    refresh_state,
    solve_init,
    step_sizes,
    subgradient,
    update_weights,
)
from ristwoway.rate_model import Allocation, PhaseVector, direction_sumrates, surrogate_objective

from .test_rate_model import make_channel

TINY = dict(K=1, V=2, R=2, bits=1, L_kk=2, L_kr=1, L_rk=2)


def instance(cfg, rng, psi=None):
    ch = build_realization(cfg, rng)
    if psi is None:
        psi = random_phase(cfg.R, cfg.bits, rng)
    eta = allocate_subbands(ch, psi, cfg)
    return ch, psi, Allocation(eta=eta, p=iterative_waterfill(ch, eta, psi, cfg))


class TestProject:
    def test_one_bit(self):
        pv = project([0.6 + 0.8j], 1)
        assert pv.b[0] == 0 and pv.psi[0] == 1

    def test_continuous_normalizes(self):
        np.testing.assert_allclose(project([2 * np.exp(1j * np.pi / 3)], None).psi, [np.exp(1j * np.pi / 3)])

    def test_tie_goes_to_lower_index(self):
        pv = project([np.exp(3j * np.pi / 4)], 2)
        assert pv.b[0] == 1
        np.testing.assert_allclose(pv.psi, [1j], atol=1e-15)

    def test_wraparound_tie(self):
        # half-way between b = 3 (270 deg) and b = 0 (360 deg)
        assert project([np.exp(-1j * np.pi / 4)], 2).b[0] == 0

    def test_zero_maps_to_phase_zero(self):
        assert project([0j], 3).b[0] == 0
        assert project([0j], None).psi[0] == 1

    def test_matches_nearest_codebook_point(self, rng):
        z = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        for bits in (1, 2, 3, 5):
            # brute force: argmin over the codebook by distance
            cb = np.exp(2j * np.pi * np.arange(1 << bits) / (1 << bits))
            ref = np.argmin(np.abs(z[:, None] - cb[None]), axis=1)
            np.testing.assert_array_equal(project(z, bits).b, ref)

    def test_unit_modulus(self, rng):
        z = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        for bits in (None, 1, 4):
            np.testing.assert_allclose(np.abs(project(z, bits).psi), 1.0, atol=1e-15)


class TestEigen:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_eigh_on_indefinite_matrix(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        A = X + X.conj().T
        A[-1, -1] = 0.0
        vals, vecs = np.linalg.eigh(A)
        res = principal_eigvec(A)
        assert res.converged
        assert res.value == pytest.approx(vals[-1], rel=1e-8)
        assert abs(np.vdot(vecs[:, -1], res.vector)) == pytest.approx(1.0, abs=1e-6)

    def test_negative_spectrum(self):
        res = principal_eigvec(np.diag([-5.0, -1.0, -3.0]).astype(complex))
        assert res.value == pytest.approx(-1.0, abs=1e-8)

    def test_augmented_matrices_hermitian(self, small_cfg, rng):
        Ht = augmented_gain_matrices(build_realization(small_cfg, rng))
        for i in range(2):
            np.testing.assert_allclose(Ht[i], Ht[i].conj().T, atol=1e-12 * np.abs(Ht[i]).max())

    def test_solver_residual(self, small_cfg, rng):
        st = solve_init(build_realization(small_cfg, rng), grid_points=11)
        np.testing.assert_allclose(st.Htilde, st.Htilde.conj().T, atol=1e-12 * np.abs(st.Htilde).max())
        r = st.Htilde @ st.u - st.mu * st.u
        assert np.linalg.norm(r) <= 1e-8 * np.abs(st.Htilde).sum(axis=0).max() * np.linalg.norm(st.u)


class TestInit:
    def test_coherent_alignment(self):
        ch = make_channel(np.ones((1, 1, 2)), np.ones((1, 1, 2, 1)))
        cfg = SystemConfig(K=1, V=2, R=1, L_kk=2, L_kr=1, L_rk=2)
        psi = init_phase(ch, cfg)
        np.testing.assert_allclose(psi.psi, [1.0], atol=1e-8)
        assert min_channel_gain(ch, psi) == pytest.approx(4.0)

    def test_degenerate_zero_direct_link(self):
        h = np.zeros((1, 2, 2, 1), dtype=complex)
        h[0, :, :, 0] = [[0.3 + 0.4j, 1.0], [0.3 + 0.4j, 1.0]]
        ch = make_channel(np.zeros((1, 2, 2)), h)
        cfg = SystemConfig(K=1, V=2, R=1, bits=2, L_kk=2, L_kr=1, L_rk=2)
        score = min_channel_gain(ch, init_phase(ch, cfg))
        for b in range(4):
            assert abs(score - min_channel_gain(ch, PhaseVector.from_indices([b], 2))) < 1e-9

    def test_no_elements(self):
        cfg = SystemConfig(R=0)
        ch = build_realization(cfg, np.random.default_rng(0))
        assert init_phase(ch, cfg).R == 0

    def test_close_to_discrete_optimum(self):
        rng = np.random.default_rng(21)
        cfg = SystemConfig(K=1, V=2, R=3, bits=1, L_kk=2, L_kr=1, L_rk=2)
        ratios = []
        for _ in range(100):
            ch = build_realization(cfg, rng)
            best = max(min_channel_gain(ch, PhaseVector.from_indices(b, 1)) for b in itertools.product(range(2), repeat=3))
            ratios.append(min_channel_gain(ch, init_phase(ch, cfg)) / best)
        assert np.mean(ratios) >= 0.9

    def test_beats_random_phases(self):
        rng = np.random.default_rng(22)
        cfg = SystemConfig(R=16, lambda_grid_points=21)
        wins = 0
        for _ in range(50):
            ch = build_realization(cfg, rng)
            init = min_channel_gain(ch, init_phase(ch, cfg))
            rand = np.mean([min_channel_gain(ch, random_phase(cfg.R, None, rng)) for _ in range(100)])
            wins += init > rand
        assert binomtest(wins, 50, 0.5, alternative="greater").pvalue < 0.01


class TestFiltersAndWeights:
    def test_zero_channel(self):
        assert mmse_filter(1.0, 0.0, 1.0) == 0

    def test_unit_substitution(self):
        assert mmse_filter(1.0, 1.0, 1.0) == pytest.approx(0.5)

    def test_weights(self):
        np.testing.assert_allclose(update_weights([1.0, 0.25]), [1.0, 4.0])

    @pytest.mark.parametrize("eps", [0.0, -0.1])
    def test_nonpositive_mse_rejected(self, eps):
        with pytest.raises(ValueError):
            update_weights([eps])

    def test_unowned_bands_have_zero_filter(self, small_cfg, rng):
        ch, psi, alloc = instance(small_cfg, rng)
        state = refresh_state(ch, alloc, psi, small_cfg.sigma2, small_cfg.kappa)
        assert np.all(state.u[alloc.eta.sum(axis=2) == 0] == 0)


class TestSubgradient:
    def setup_method(self):
        cfg = SystemConfig(K=2, V=8, R=6, L_kk=4, L_kr=3, L_rk=3)
        self.cfg = cfg
        self.ch, self.psi, self.alloc = instance(cfg, np.random.default_rng(31))
        self.state = refresh_state(self.ch, self.alloc, self.psi, cfg.sigma2, cfg.kappa)
        self.grads = direction_gradients(self.ch, self.alloc, self.psi, self.state, cfg.sigma2, cfg.kappa)

    def _sub(self, f1, f2, tau=0.5):
        st = dataclasses.replace(self.state, f1=f1, f2=f2)
        return subgradient(self.ch, self.alloc, self.psi, st, self.cfg.sigma2, self.cfg.kappa, tau)

    def test_larger_direction_selected(self):
        np.testing.assert_array_equal(self._sub(-1.0, -2.0), self.grads[0])
        np.testing.assert_array_equal(self._sub(-2.0, -1.0), self.grads[1])

    def test_tie_blends(self):
        np.testing.assert_allclose(self._sub(-1.0, -1.0), (self.grads[0] + self.grads[1]) / 2)
        np.testing.assert_allclose(self._sub(-1.0, -1.0, tau=0.2), 0.2 * self.grads[0] + 0.8 * self.grads[1])

    @pytest.mark.parametrize("seed", range(5))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        cfg = self.cfg
        d = rng.standard_normal(cfg.R) + 1j * rng.standard_normal(cfg.R)
        d /= np.linalg.norm(d)
        h = 1e-6
        fp = surrogate_objective(self.ch, self.alloc, self.psi.psi + h * d, self.state, cfg.sigma2, cfg.kappa)
        fm = surrogate_objective(self.ch, self.alloc, self.psi.psi - h * d, self.state, cfg.sigma2, cfg.kappa)
        for i in range(2):
            fd = (fp[i] - fm[i]) / (2 * h)
            an = 2 * np.real(np.vdot(d, self.grads[i]))
            assert abs(fd - an) <= 1e-4 * abs(an)


class TestPSG:
    def test_step_schedule(self):
        s = step_sizes(100)
        np.testing.assert_allclose(s[:3], [1, 0.5, 1 / 3])
        assert np.all(np.diff(s) < 0)
        assert s.sum() > 5  # harmonic sum grows without bound

    def test_no_elements(self):
        cfg = SystemConfig(R=0)
        ch, psi, alloc = instance(cfg, np.random.default_rng(0))
        res = psg_optimize(ch, alloc, psi, cfg, T_max=5)
        assert res.psi.R == 0
        assert np.all(res.f_trace == res.f_trace[0])

    @pytest.mark.parametrize("bits", [None, 1, 3])
    def test_best_tracking(self, bits):
        cfg = SystemConfig(R=8, bits=bits)
        rng = np.random.default_rng(41)
        ch, psi, alloc = instance(cfg, rng)
        res = psg_optimize(ch, alloc, psi, cfg, T_max=30)
        assert res.f_trace.size == 31
        assert np.all(np.diff(res.best_trace) <= 0)
        assert res.f_best == res.f_trace[res.best_iter] == res.best_trace[-1]
        assert objective(ch, alloc, res.psi, cfg) >= objective(ch, alloc, psi, cfg) - 1e-12
        # tracked f is minus the min-direction rate at the returned phases
        assert res.f_best == pytest.approx(-objective(ch, alloc, res.psi, cfg), rel=1e-9)
        np.testing.assert_allclose(np.abs(res.psi.psi), 1.0, atol=1e-12)
        if bits is not None:
            np.testing.assert_allclose(res.psi.psi, np.exp(2j * np.pi * res.psi.b / (1 << bits)))

    def test_start_at_discrete_optimum_never_degrades(self):
        cfg = SystemConfig(**TINY)
        rng = np.random.default_rng(42)
        for _ in range(20):
            ch, _, alloc = instance(cfg, rng)
            best = exhaustive_phase_oracle(ch, alloc, cfg)
            res = psg_optimize(ch, alloc, best, cfg)
            assert objective(ch, alloc, res.psi, cfg) == pytest.approx(objective(ch, alloc, best, cfg), rel=1e-12)

    def test_bounded_by_oracle(self):
        cfg = SystemConfig(**TINY)
        rng = np.random.default_rng(43)
        for _ in range(30):
            ch, start, alloc = instance(cfg, rng)
            got = objective(ch, alloc, psg_optimize(ch, alloc, start, cfg).psi, cfg)
            assert objective(ch, alloc, start, cfg) - 1e-12 <= got
            assert got <= objective(ch, alloc, exhaustive_phase_oracle(ch, alloc, cfg), cfg) + 1e-12


class TestOracle:
    def _manual_best(self, ch, alloc, cfg):
        vals = {}
        for b in itertools.product(range(1 << cfg.bits), repeat=cfg.R):
            pv = PhaseVector.from_indices(b, cfg.bits)
            vals[b] = direction_sumrates(ch, alloc, pv, cfg.sigma2, cfg.kappa).min()
        return max(vals, key=vals.get), vals

    @pytest.mark.parametrize("R", [1, 2])
    def test_matches_manual_enumeration(self, R):
        cfg = SystemConfig(**{**TINY, "R": R})
        rng = np.random.default_rng(50 + R)
        for _ in range(10):
            ch, _, alloc = instance(cfg, rng)
            best, vals = self._manual_best(ch, alloc, cfg)
            assert len(vals) == 2**R
            got = exhaustive_phase_oracle(ch, alloc, cfg)
            assert tuple(got.b) == best

    def test_dominates_random_phases(self):
        cfg = SystemConfig(**{**TINY, "bits": 2})
        rng = np.random.default_rng(52)
        ch, psi, alloc = instance(cfg, rng)
        top = objective(ch, alloc, exhaustive_phase_oracle(ch, alloc, cfg), cfg)
        for _ in range(20):
            assert objective(ch, alloc, random_phase(cfg.R, 2, rng), cfg) <= top + 1e-12

    def test_refuses_continuous(self):
        cfg = SystemConfig(**{**TINY, "bits": None})
        ch, _, alloc = instance(cfg, np.random.default_rng(0))
        with pytest.raises(ValueError):
            exhaustive_phase_oracle(ch, alloc, cfg)

    def test_refuses_over_cap(self):
        cfg = SystemConfig(**TINY)
        ch, _, alloc = instance(cfg, np.random.default_rng(0))
        with pytest.raises(ValueError):
            exhaustive_phase_oracle(ch, alloc, cfg, cap=3)

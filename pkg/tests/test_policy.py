from __future__ import annotations

import numpy as np
import pytest

from vg2s import autodiff as ad
from vg2s.autodiff import grad_check
from vg2s.checkpoint import ParamStore
from vg2s.env import reset, state_features
from vg2s.graph import build_graph
from vg2s.policy import (build_critic_params, build_policy_params,
                         critic_value, decode_step, select_action)
from vg2s.vge import build_encoder_params, encode, latent


@pytest.fixture()
def policy_setup(two_by_two, tiny_cfg, rng):
    store = ParamStore()
    build_encoder_params(store, tiny_cfg, rng)
    build_policy_params(store, tiny_cfg, rng)
    build_critic_params(store, tiny_cfg, rng)
    graph = build_graph(two_by_two)
    h = encode(graph, store, tiny_cfg)
    h_real = ad.take(h, np.arange(4))
    z = latent(h, store, tiny_cfg).z
    st_ = reset(two_by_two)
    return store, h_real, z, st_


def step_logits(setup, cfg, prev=None):
    store, h_real, z, st_ = setup
    feats = state_features(st_)
    sched = np.zeros(4, dtype=bool)
    return decode_step(z, h_real, prev, feats, sched, st_.available(), store, cfg)


class TestDecodeStep:
    def test_full_vector_masking(self, policy_setup, tiny_cfg):
        out = step_logits(policy_setup, tiny_cfg)
        assert out.avail == [0, 2]
        assert np.isneginf(out.full[1]) and np.isneginf(out.full[3])
        assert np.all(np.isfinite(out.full[[0, 2]]))

    def test_logit_clip_bound(self, policy_setup, tiny_cfg):
        out = step_logits(policy_setup, tiny_cfg)
        assert np.all(np.abs(out.logits_avail.data) <= tiny_cfg.logit_clip)

    def test_single_available_prob_one(self, policy_setup, tiny_cfg):
        store, h_real, z, st_ = policy_setup
        feats = state_features(st_)
        out = decode_step(z, h_real, None, feats, np.zeros(4, bool), [2],
                          store, tiny_cfg)
        assert np.exp(out.log_prob(2).data) == pytest.approx(1.0)

    def test_log_probs_normalize(self, policy_setup, tiny_cfg):
        out = step_logits(policy_setup, tiny_cfg)
        total = sum(np.exp(out.log_prob(a).data) for a in out.avail)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_prev_action_changes_logits(self, policy_setup, tiny_cfg):
        a = step_logits(policy_setup, tiny_cfg, prev=None)
        b = step_logits(policy_setup, tiny_cfg, prev=1)
        assert not np.allclose(a.logits_avail.data, b.logits_avail.data)

    def test_empty_avail_rejected(self, policy_setup, tiny_cfg):
        store, h_real, z, st_ = policy_setup
        with pytest.raises(ValueError):
            decode_step(z, h_real, None, state_features(st_), np.zeros(4, bool),
                        [], store, tiny_cfg)

    def test_all_scheduled_rejected(self, policy_setup, tiny_cfg):
        store, h_real, z, st_ = policy_setup
        with pytest.raises(ValueError):
            decode_step(z, h_real, None, state_features(st_), np.ones(4, bool),
                        [0], store, tiny_cfg)


class TestSelectAction:
    def test_greedy_argmax(self):
        logits = np.array([-np.inf, 2.0, -np.inf, 5.0])
        action, logp = select_action(logits, "greedy")
        assert action == 3
        assert logp == pytest.approx(np.log(np.exp(5) / (np.exp(2) + np.exp(5))))

    def test_greedy_tie_lowest_index(self):
        action, _ = select_action(np.array([1.0, 1.0, -np.inf]), "greedy")
        assert action == 0

    def test_sample_respects_mask(self, rng):
        logits = np.array([-np.inf, 0.0, -np.inf, 0.0])
        for _ in range(50):
            action, _ = select_action(logits, "sample", rng)
            assert action in (1, 3)

    def test_sample_needs_rng(self):
        with pytest.raises(ValueError):
            select_action(np.array([0.0, 1.0]), "sample")

    def test_all_masked_rejected(self):
        with pytest.raises(ValueError):
            select_action(np.array([-np.inf, -np.inf]), "greedy")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            select_action(np.array([0.0]), "argmax")

    def test_sample_frequencies(self, rng):
        # two options with logit gap ln 3: expect roughly 3:1 ratio
        logits = np.array([np.log(3.0), 0.0])
        hits = sum(select_action(logits, "sample", rng)[0] == 0 for _ in range(4000))
        assert abs(hits / 4000 - 0.75) < 0.03


class TestCritic:
    def test_scalar_output(self, policy_setup, tiny_cfg):
        store, _, z, _ = policy_setup
        v = critic_value(z, store, tiny_cfg)
        assert v.data.shape == ()

    def test_depends_on_latent(self, policy_setup, tiny_cfg, rng):
        store, _, _, _ = policy_setup
        a = critic_value(ad.as_tensor(rng.normal(size=tiny_cfg.d_latent)), store, tiny_cfg)
        b = critic_value(ad.as_tensor(rng.normal(size=tiny_cfg.d_latent)), store, tiny_cfg)
        assert a.data != b.data


class TestGradients:
    def test_policy_log_prob_gradient(self, policy_setup, tiny_cfg):
        store, h_real, z, st_ = policy_setup
        feats = state_features(st_)
        sched = np.zeros(4, dtype=bool)
        z_fixed = z.data.copy()
        h_fixed = h_real.data.copy()
        params = store.section("policy.")

        def f():
            out = decode_step(ad.as_tensor(z_fixed), ad.as_tensor(h_fixed), None,
                              feats, sched, st_.available(), store, tiny_cfg)
            return ad.mul(out.log_prob(2), -1.0)

        passed, rel = grad_check(f, params)
        assert passed, f"policy gradient mismatch {rel}"

    def test_critic_gradient(self, policy_setup, tiny_cfg):
        store, _, z, _ = policy_setup
        z_fixed = z.data.copy()
        params = store.section("critic.")

        def f():
            return ad.square(critic_value(ad.as_tensor(z_fixed), store, tiny_cfg))

        passed, rel = grad_check(f, params)
        assert passed, f"critic gradient mismatch {rel}"

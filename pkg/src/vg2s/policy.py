"""Autoregressive operation-selection policy with glimpse attention and
tanh-clipped pointer logits, plus the latent-state critic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .checkpoint import ParamStore
from .nnutil import add_linear, add_mlp, glorot, linear, mlp
from .vge import ModelConfig

GLIMPSE_MASK_FILL = -1e8


def build_policy_params(store: ParamStore, cfg: ModelConfig, rng) -> None:
    d2 = 2 * cfg.d_latent
    d_qk = cfg.d_latent + cfg.d_glimpse
    add_mlp(store, "policy.state", 6, cfg.d_latent, cfg.d_latent, rng)
    store.add("policy.dummy_prev", glorot(rng, cfg.d_latent, 1, shape=(cfg.d_latent,)))
    for layer in range(cfg.glimpse_layers):
        for head in range(cfg.glimpse_heads):
            tag = f"policy.glimpse.l{layer}.h{head}"
            store.add(f"{tag}.wq", glorot(rng, d2, d_qk))
            store.add(f"{tag}.wk", glorot(rng, d2, d_qk))
            store.add(f"{tag}.wv", glorot(rng, d2, d2))
    store.add("policy.lc.wq", glorot(rng, d2, cfg.d_latent + cfg.d_logit))
    store.add("policy.lc.wk", glorot(rng, d2, cfg.d_latent + cfg.d_logit))


def build_critic_params(store: ParamStore, cfg: ModelConfig, rng) -> None:
    add_linear(store, "critic.fc1", cfg.d_latent, cfg.critic_hidden, rng)
    add_linear(store, "critic.fc2", cfg.critic_hidden, 1, rng)


@dataclass
class StepLogits:
    """Logits of one decode step.

    `avail` lists the selectable op nodes; `logits_avail` is the taped
    tensor of their logits (same order); `full` is a detached n*m vector
    with -inf at non-selectable positions.
    """

    avail: list[int]
    logits_avail: ad.Tensor
    full: np.ndarray

    def log_prob(self, action: int) -> ad.Tensor:
        idx = self.avail.index(action)
        chosen = ad.take(self.logits_avail, np.array([idx]))
        return ad.sub(ad.tsum(chosen), ad.logsumexp(self.logits_avail, axis=0))


def decode_step(z: ad.Tensor, h_real: ad.Tensor, prev_action: int | None,
                state_feats: np.ndarray, sched_mask: np.ndarray,
                avail: list[int], store: ParamStore, cfg: ModelConfig) -> StepLogits:
    """One pointer step over the real operation nodes.

    z: latent vector (d_latent,); h_real: node embeddings for real ops
    (n*m x d_latent); sched_mask marks already-scheduled ops (excluded from
    glimpse attention); avail lists currently selectable ops.
    """
    if not avail:
        raise ValueError("decode_step with an empty available set")
    num_ops = h_real.data.shape[0]
    d_head = (cfg.d_latent + cfg.d_glimpse) / cfg.glimpse_heads

    if prev_action is None:
        h_prev = store["policy.dummy_prev"]
    else:
        h_prev = ad.reshape(ad.take(h_real, np.array([prev_action])), (cfg.d_latent,))
    context = ad.concat([z, h_prev], axis=0)

    state_emb = mlp(store, "policy.state", ad.Tensor(state_feats))
    keys = ad.concat([h_real, state_emb], axis=1)  # (n*m, 2d)

    attend_mask = ~np.asarray(sched_mask, dtype=bool)
    if not attend_mask.any():
        raise ValueError("glimpse attention has no unscheduled operations")
    q = context
    for layer in range(cfg.glimpse_layers):
        head_sum = None
        for head in range(cfg.glimpse_heads):
            tag = f"policy.glimpse.l{layer}.h{head}"
            qh = ad.matmul(q, store[f"{tag}.wq"])
            kh = ad.matmul(keys, store[f"{tag}.wk"])
            vh = ad.matmul(keys, store[f"{tag}.wv"])
            scores = ad.mul(ad.matmul(kh, ad.reshape(qh, (-1, 1))), 1.0 / np.sqrt(d_head))
            scores = ad.reshape(scores, (num_ops,))
            # additive fill: a literal elementwise product would flip the
            # sign of negative scores instead of suppressing them
            scores = ad.add(scores, np.where(attend_mask, 0.0, GLIMPSE_MASK_FILL))
            weights = ad.softmax(scores, axis=0)
            contrib = ad.reshape(ad.matmul(ad.reshape(weights, (1, -1)), vh), (2 * cfg.d_latent,))
            head_sum = contrib if head_sum is None else ad.add(head_sum, contrib)
        q = head_sum

    q_lc = ad.matmul(q, store["policy.lc.wq"])
    k_lc = ad.matmul(keys, store["policy.lc.wk"])
    raw = ad.reshape(ad.matmul(k_lc, ad.reshape(q_lc, (-1, 1))), (num_ops,))
    logits_all = ad.mul(ad.tanh(ad.mul(raw, 1.0 / cfg.d_latent)), cfg.logit_clip)
    logits_avail = ad.take(logits_all, np.array(avail))

    full = np.full(num_ops, -np.inf)
    full[avail] = logits_avail.data
    return StepLogits(avail=list(avail), logits_avail=logits_avail, full=full)


def select_action(logits: np.ndarray, mode: str, rng=None) -> tuple[int, float]:
    """Pick an action from a full logit vector (-inf marks unavailable).

    Returns (action, log probability).  Greedy takes the argmax with ties
    to the lowest index; sampling draws from the softmax.
    """
    finite = np.isfinite(logits)
    if not finite.any():
        raise ValueError("select_action: no finite logit")
    shifted = logits - logits[finite].max()
    e = np.where(finite, np.exp(shifted), 0.0)
    probs = e / e.sum()
    if mode == "greedy":
        action = int(np.argmax(probs))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sampling mode needs an rng")
        action = int(rng.choice(len(probs), p=probs))
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    return action, float(np.log(probs[action]))


def critic_value(z: ad.Tensor, store: ParamStore, cfg: ModelConfig) -> ad.Tensor:
    """Scalar soft state-value estimate from the latent vector."""
    hidden = ad.tanh(linear(store, "critic.fc1", z))
    return ad.tsum(linear(store, "critic.fc2", hidden))

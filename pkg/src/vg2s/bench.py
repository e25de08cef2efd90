"""Benchmark evaluation, latent export, and policy-vs-dispatching-rule
similarity traces, all emitted as deterministic CSV."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .checkpoint import ParamStore
from .env import reset, state_features
from .graph import build_graph
from .instance import GenConfig, Instance, generate_random
from .oracle import branch_and_bound
from .policy import decode_step, select_action
from .rules import Rule, dispatch, optimality_gap
from .trainer import EncoderCache, InstancePool, TrainConfig, rollout
from .vge import ModelConfig

PDR_METHODS = tuple(r.value for r in Rule)


def solve_with_model(inst: Instance, store: ParamStore, cfg: ModelConfig):
    """Greedy decode at the latent mean; returns (state, makespan)."""
    from . import vge
    from .vge import latent

    graph = build_graph(inst)
    h = vge.encode(graph, store, cfg)
    sample = latent(h, store, cfg, eps=np.zeros(cfg.d_latent))
    h_real = ad.Tensor(h.data[: inst.num_ops])
    traj = rollout(inst, ad.Tensor(sample.mu.data), h_real, store, cfg,
                   "greedy", scale_q_flag=False)
    from .env import replay

    st = replay(inst, traj.actions)
    return st, traj.makespan


def eval_bench(instances: dict[str, Instance], methods: list[str],
               ubs: dict[str, int],
               store: ParamStore | None = None,
               model_cfg: ModelConfig | None = None,
               oracle_budget: int = 10_000_000) -> list[dict]:
    """One row per (instance, method) plus per-(family-prefix, size) group
    aggregates.  Gap stays blank when no best-known makespan is supplied."""
    rows = []
    for name in sorted(instances):
        inst = instances[name]
        for method in methods:
            if method == "oracle":
                res = branch_and_bound(inst, budget=oracle_budget)
                c = res.c_star
            elif method == "vg2s":
                if store is None or model_cfg is None:
                    raise ValueError("vg2s method needs a model checkpoint")
                _, c = solve_with_model(inst, store, model_cfg)
            else:
                _, c = dispatch(inst, Rule(method))
            ub = ubs.get(name)
            rows.append({
                "instance": name,
                "size": f"{inst.n}x{inst.m}",
                "method": method,
                "cmax": c,
                "ub": ub if ub is not None else "",
                "gap": round(optimality_gap(c, ub), 4) if ub is not None else "",
            })
    groups: dict[tuple[str, str, str], list[float]] = {}
    for row in rows:
        if row["gap"] == "":
            continue
        family = row["instance"].rstrip("0123456789_")
        key = (family, row["size"], row["method"])
        groups.setdefault(key, []).append(row["gap"])
    for (family, size, method) in sorted(groups):
        gaps = groups[(family, size, method)]
        rows.append({
            "instance": f"group:{family}",
            "size": size,
            "method": method,
            "cmax": "",
            "ub": "",
            "gap": round(float(np.mean(gaps)), 4),
        })
    return rows


def write_csv(rows: list[dict], path, columns: list[str] | None = None) -> None:
    if not rows:
        Path(path).write_text("")
        return
    columns = columns or list(rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def _similarity_records(inst: Instance, pick_action, instance_id: int) -> list[dict]:
    """Per-step records of a rollout driven by `pick_action(state)`."""
    st = reset(inst)
    records = []
    step = 1
    while not st.done:
        avail = st.available()
        action = pick_action(st)
        j, k = divmod(action, inst.m)
        durations = sorted(inst.duration(*divmod(u, inst.m)) for u in avail)
        rank = durations.index(inst.duration(j, k)) + 1
        records.append({
            "instance": instance_id,
            "step": step,
            "completed_ops": int(st.next_op[j]),
            "pt_rank": rank,
            "num_available": len(avail),
        })
        st.step(action)
        step += 1
    return records


def pdr_similarity(count: int, n: int, m: int, seed: int,
                   store: ParamStore | None = None,
                   model_cfg: ModelConfig | None = None,
                   rule: Rule | None = None) -> list[dict]:
    """Greedy rollouts over `count` generated n x m instances; per decision
    step, the chosen job's completed-op count (most-work-remaining proxy)
    and the chosen op's processing-time rank (shortest-processing-time
    proxy).  Either a model checkpoint or a rule drives the choices."""
    rng = np.random.default_rng(seed)
    gen = GenConfig(m_lo=m, m_hi=m, n_hi=n)
    rows = []
    for idx in range(count):
        inst = generate_random(gen, rng)
        if rule is not None:
            from .rules import select

            pick = lambda st: select(rule, st)
        else:
            if store is None or model_cfg is None:
                raise ValueError("pdr_similarity needs a model or a rule")
            from . import vge
            from .vge import latent

            graph = build_graph(inst)
            h = vge.encode(graph, store, model_cfg)
            sample = latent(h, store, model_cfg, eps=np.zeros(model_cfg.d_latent))
            h_real = ad.Tensor(h.data[: inst.num_ops])
            z = ad.Tensor(sample.mu.data)
            prev_holder = {"prev": None}

            def pick(st, z=z, h_real=h_real, holder=prev_holder):
                out = decode_step(z, h_real, holder["prev"], state_features(st),
                                  st.scheduled.copy(), st.available(), store, model_cfg)
                action, _ = select_action(out.full, "greedy")
                holder["prev"] = action
                return action

        rows.extend(_similarity_records(inst, pick, idx))
    return rows


def export_latents(instances: dict[str, Instance], store: ParamStore,
                   model_cfg: ModelConfig) -> list[dict]:
    """One row per instance: id, the latent mean coordinates, and the
    greedy-decode makespan (projection to 2-D is done externally)."""
    from . import vge
    from .vge import latent

    rows = []
    for name in sorted(instances):
        inst = instances[name]
        graph = build_graph(inst)
        h = vge.encode(graph, store, model_cfg)
        sample = latent(h, store, model_cfg, eps=np.zeros(model_cfg.d_latent))
        h_real = ad.Tensor(h.data[: inst.num_ops])
        traj = rollout(inst, ad.Tensor(sample.mu.data), h_real, store, model_cfg,
                       "greedy", scale_q_flag=False)
        row = {"instance": name}
        for i, v in enumerate(sample.mu.data):
            row[f"mu_{i}"] = repr(float(v))
        row["greedy_cmax"] = traj.makespan
        rows.append(row)
    return rows


def gantt_svg(st, path) -> None:
    """Render a complete schedule as a simple SVG Gantt chart."""
    inst = st.inst
    c_max = st.makespan()
    scale = max(1.0, 900.0 / c_max)
    row_h, pad = 28, 40
    width = int(c_max * scale) + 2 * pad
    height = inst.m * row_h + 2 * pad
    palette = [
        "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
        "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
    ]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{pad}" y="20" font-size="14">makespan {c_max}</text>',
    ]
    for i in range(inst.m):
        y = pad + i * row_h
        parts.append(f'<text x="4" y="{y + row_h // 2}" font-size="11">M{i}</text>')
    for u in range(inst.num_ops):
        j, k = divmod(u, inst.m)
        i = inst.machine(j, k)
        x = pad + float(st.start[u]) * scale
        w = max(1.0, (float(st.end[u]) - float(st.start[u])) * scale)
        y = pad + i * row_h + 2
        color = palette[j % len(palette)]
        parts.append(
            f'<rect x="{x:.1f}" y="{y}" width="{w:.1f}" height="{row_h - 6}" '
            f'fill="{color}" stroke="#333"><title>J{j} op{k}</title></rect>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))

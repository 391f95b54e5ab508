"""Hierarchical operation recommendation and DQN training.

Two value networks share the state ``s = concat(psi, upsilon)``: the
logical network scores the 6 operation families, the physical network
scores every physical operation with out-of-family actions masked.
Granularity selection decides whether to surface the family (coarse
prompt) or the single best operation: in the default ``variance`` mode
the family wins when the population variance of the in-family physical
scores falls below the threshold; the alternative ``confidence`` mode
picks the operation when its score clears a threshold and otherwise the
family with the highest mean operation score.

Training is episodic epsilon-greedy DQN with replay buffers and target
networks at both levels; an episode inserts one operation per family
and terminates once every family has been used, so episodes never
exceed six steps.  Rewards are the executed program's metric (0 on
execution error).  Everything is driven by one SeededRng, so a fixed
seed reproduces training bit for bit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import ops
from .dataset import NUMERIC, Dataset
from .errors import EmptyCorpus
from .executor import Executor, baseline_program, insertion_dataset
from .features import (
    PSI_DIM,
    STATE_DIM,
    featurize_dataset,
    featurize_pipeline,
    state_vector,
)
from .qnet import QNetwork, init_network, loss_and_grads, q_values, sgd_step
from .rng import SeededRng
from .script import PipelineGraph, default_target_var, insert_call, parse

ALL_OPS = ops.all_ops()
N_FAMILIES = len(ops.FAMILY_IDS)
N_OPS = len(ALL_OPS)
HIDDEN_SIZES = (256, 128)
LOGICAL_SIZES = [STATE_DIM, *HIDDEN_SIZES, N_FAMILIES]
PHYSICAL_SIZES = [STATE_DIM, *HIDDEN_SIZES, N_OPS]


@dataclass
class TrainConfig:
    episodes: int = 200
    gamma: float = 0.9
    lr: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_decay_fraction: float = 0.5
    replay_capacity: int = 10000
    batch: int = 64
    target_sync_every: int = 100
    seed: int = 0
    variance_threshold: float = 0.01
    confidence_threshold: float = 0.5
    granularity: str = "variance"  # variance | confidence

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.granularity not in ("variance", "confidence"):
            raise ValueError(f"unknown granularity mode {self.granularity!r}")


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    done: bool


@dataclass(frozen=True)
class Recommendation:
    kind: str  # logical | physical
    name: str
    score: float
    prompt: ops.Prompt


class ReplayBuffer:
    """Fixed-capacity ring buffer; sampling draws with replacement."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.items = []
        self.cursor = 0

    def __len__(self):
        return len(self.items)

    def push(self, item):
        if len(self.items) < self.capacity:
            self.items.append(item)
        else:
            self.items[self.cursor] = item
        self.cursor = (self.cursor + 1) % self.capacity

    def sample(self, batch, rng: SeededRng):
        return [self.items[rng.randint(len(self.items))] for _ in range(batch)]


def default_networks(seed=0):
    """Fresh (logical, physical) networks from one documented seed."""
    rng = SeededRng(seed)
    return init_network(LOGICAL_SIZES, rng), init_network(PHYSICAL_SIZES, rng)


def families_used(g: PipelineGraph):
    used = set()
    for node in g.nodes:
        family = ops.family_of(node.op_name)
        if family is not None:
            used.add(family)
    return used


def family_mask(used):
    return np.array([f in used for f in ops.FAMILY_IDS])


def op_mask_outside(family):
    return np.array([op.family != family for op in ALL_OPS])


def op_mask_used_families(used):
    return np.array([op.family in used for op in ALL_OPS])


def score_variance(scores) -> float:
    """Population variance over raw unmasked scores."""
    scores = np.asarray(scores, dtype=np.float64)
    return float(((scores - scores.mean()) ** 2).mean())


def select_granularity(unmasked_scores, tau) -> str:
    """Family (coarse) when in-family scores barely differ, op otherwise."""
    return "coarse" if score_variance(unmasked_scores) < tau else "fine"


def prompt_context(op: ops.PhysicalOperation, d: Dataset | None):
    """Dataset-derived placeholder values for the op's prompt."""
    if d is None or "{columns}" not in op.prompt_template:
        return None
    sentinel = float(op.defaults().get("v", 0))
    names = [
        c.name
        for c in d.columns
        if c.kind == NUMERIC and any(v is not None and v == sentinel for v in c.values)
    ]
    return {"columns": ", ".join(names)} if names else None


def _ranked(indices, scores):
    return sorted(indices, key=lambda i: (-scores[i], i))


def _family_rec(fam_id, score):
    family = ops.FAMILIES[fam_id]
    return Recommendation("logical", fam_id, float(score), ops.prompt_for(family))


def _op_rec(op, score, d):
    prompt = ops.prompt_for(op, context=prompt_context(op, d))
    return Recommendation("physical", op.name, float(score), prompt)


def recommend(d: Dataset, g: PipelineGraph, nets, cfg: TrainConfig | None = None):
    """Ranked next-operation recommendations; empty once every family
    has been applied (the episode termination state)."""
    cfg = cfg or TrainConfig()
    logical_net, physical_net = nets
    used = families_used(g)
    avail = [f for f in ops.FAMILY_IDS if f not in used]
    if not avail:
        return []
    s = state_vector(d, g)
    logical_scores = q_values(logical_net, s, family_mask(used))

    if cfg.granularity == "confidence":
        phys_scores = q_values(physical_net, s, op_mask_used_families(used))
        open_idx = [i for i, op in enumerate(ALL_OPS) if op.family not in used]
        best_op = min(open_idx, key=lambda i: (-phys_scores[i], i))
        fam_mean = {
            f: float(np.mean([phys_scores[i] for i in open_idx if ALL_OPS[i].family == f]))
            for f in avail
        }
        if phys_scores[best_op] > cfg.confidence_threshold:
            recs = [_op_rec(ALL_OPS[best_op], phys_scores[best_op], d)]
            for i in _ranked([i for i in open_idx if i != best_op], phys_scores):
                recs.append(_op_rec(ALL_OPS[i], phys_scores[i], d))
            return recs
        order = sorted(avail, key=lambda f: (-fam_mean[f], ops.FAMILY_IDS.index(f)))
        return [_family_rec(f, fam_mean[f]) for f in order]

    fam_idx = int(np.argmax(logical_scores))
    best_family = ops.FAMILY_IDS[fam_idx]
    phys_scores = q_values(physical_net, s, op_mask_outside(best_family))
    in_family = [i for i, op in enumerate(ALL_OPS) if op.family == best_family]
    mode = select_granularity(phys_scores[in_family], cfg.variance_threshold)
    other_fams = [
        ops.FAMILY_IDS.index(f) for f in avail if f != best_family
    ]
    if mode == "coarse":
        top = _family_rec(best_family, logical_scores[fam_idx])
        tail = [
            _family_rec(ops.FAMILY_IDS[i], logical_scores[i])
            for i in _ranked(other_fams, logical_scores)
        ]
    else:
        best_op = min(in_family, key=lambda i: (-phys_scores[i], i))
        top = _op_rec(ALL_OPS[best_op], phys_scores[best_op], d)
        tail = [
            _op_rec(ALL_OPS[i], phys_scores[i], d)
            for i in _ranked([i for i in in_family if i != best_op], phys_scores)
        ] + [
            _family_rec(ops.FAMILY_IDS[i], logical_scores[i])
            for i in _ranked(other_fams, logical_scores)
        ]
    # the granularity pick leads; everything else ranks by score
    tail.sort(key=lambda rec: -rec.score)
    return [top] + tail


def _epsilon_at(episode, cfg: TrainConfig):
    decay_span = cfg.episodes * cfg.epsilon_decay_fraction
    if decay_span <= 0:
        return cfg.epsilon_end
    frac = min(1.0, episode / decay_span)
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac


def _td_targets(net_target: QNetwork, batch, gamma):
    """r + gamma * max_a' Q_target(s', a') * (1 - done), floored at 0 so
    targets stay inside [0, 1 + gamma) alongside rewards in [0, 1]."""
    s_next = np.stack([t.s_next for t in batch])
    q_next = np.max(q_values(net_target, s_next), axis=1)
    out = np.empty(len(batch))
    for i, t in enumerate(batch):
        boot = 0.0 if t.done else gamma * q_next[i]
        out[i] = max(0.0, t.r + boot)
    return out


class _Level:
    """One DQN level: online net, target net, replay, update counter."""

    def __init__(self, net, cfg):
        self.net = net
        self.target = net.copy()
        self.buffer = ReplayBuffer(cfg.replay_capacity)
        self.updates = 0

    def learn(self, cfg, rng):
        if len(self.buffer) < cfg.batch:
            return None
        batch = self.buffer.sample(cfg.batch, rng)
        targets = _td_targets(self.target, batch, cfg.gamma)
        states = np.stack([t.s for t in batch])
        actions = np.array([t.a for t in batch])
        loss, gw, gb = loss_and_grads(self.net, states, actions, targets)
        sgd_step(self.net, gw, gb, cfg.lr)
        self.updates += 1
        if self.updates % cfg.target_sync_every == 0:
            self.target.load_from(self.net)
        return loss


def _episode_start(path, label):
    data_dir = os.path.dirname(os.path.abspath(path))
    csv_name = os.path.basename(path)
    ex = Executor(data_dir)
    src = baseline_program(csv_name, label)
    g = parse(src)
    result = ex.run(g)
    return ex, src, g, result


def _state_of(result, g, prev_psi=None):
    d = insertion_dataset(g, result.env) if result.ok else None
    if d is not None:
        psi = featurize_dataset(d)
    elif prev_psi is not None:
        psi = prev_psi
    else:
        psi = np.zeros(PSI_DIM)
    return psi, d


def rollout(path, label, pick, max_steps=N_FAMILIES):
    """Run one episode, applying ``pick(s, used) -> op`` per step.

    Returns (final metric, applied op names).  Execution failures keep
    the inserted statement and contribute reward 0, mirroring training.
    """
    ex, src, g, result = _episode_start(path, label)
    psi, _ = _state_of(result, g)
    used = set()
    metric = result.metric if result.ok and result.metric is not None else 0.0
    applied = []
    for _ in range(max_steps):
        if len(used) == N_FAMILIES:
            break
        s = np.concatenate([psi, featurize_pipeline(g)])
        op = pick(s, used)
        target = default_target_var(g)
        src = insert_call(src, op.name, target)
        g = parse(src)
        result = ex.run(g)
        metric = result.metric if result.ok and result.metric is not None else 0.0
        psi, _ = _state_of(result, g, psi)
        used.add(op.family)
        applied.append(op.name)
    return metric, applied


def greedy_pick(nets):
    logical_net, physical_net = nets

    def pick(s, used):
        scores = q_values(logical_net, s, family_mask(used))
        fam = ops.FAMILY_IDS[int(np.argmax(scores))]
        phys = q_values(physical_net, s, op_mask_outside(fam))
        return ALL_OPS[int(np.argmax(phys))]

    return pick


def random_pick(rng: SeededRng):
    def pick(s, used):
        avail = [f for f in ops.FAMILY_IDS if f not in used]
        fam = avail[rng.randint(len(avail))]
        members = [op for op in ALL_OPS if op.family == fam]
        return members[rng.randint(len(members))]

    return pick


def train(corpus, cfg: TrainConfig):
    """Offline DQN training over (csv_path, label) pairs, round-robin.

    Returns (logical net, physical net, per-episode log).
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("training corpus is empty")
    rng = SeededRng(cfg.seed)
    logical_net, physical_net = (
        init_network(LOGICAL_SIZES, rng),
        init_network(PHYSICAL_SIZES, rng),
    )
    levels = (_Level(logical_net, cfg), _Level(physical_net, cfg))
    log = []
    for episode in range(cfg.episodes):
        eps = _epsilon_at(episode, cfg)
        path, label = corpus[episode % len(corpus)]
        ex, src, g, result = _episode_start(path, label)
        psi, _ = _state_of(result, g)
        used = set()
        final_metric = result.metric if result.ok and result.metric is not None else 0.0
        steps = 0
        while len(used) < N_FAMILIES:
            s = np.concatenate([psi, featurize_pipeline(g)])
            avail = [f for f in ops.FAMILY_IDS if f not in used]
            if rng.random() < eps:
                fam = avail[rng.randint(len(avail))]
            else:
                scores = q_values(logical_net, s, family_mask(used))
                fam = ops.FAMILY_IDS[int(np.argmax(scores))]
            members = [i for i, op in enumerate(ALL_OPS) if op.family == fam]
            if rng.random() < eps:
                op_idx = members[rng.randint(len(members))]
            else:
                phys = q_values(physical_net, s, op_mask_outside(fam))
                op_idx = int(np.argmax(phys))
            op = ALL_OPS[op_idx]
            src = insert_call(src, op.name, default_target_var(g))
            g = parse(src)
            result = ex.run(g)
            reward = result.metric if result.ok and result.metric is not None else 0.0
            psi_next, _ = _state_of(result, g, psi)
            s_next = np.concatenate([psi_next, featurize_pipeline(g)])
            used.add(fam)
            done = len(used) == N_FAMILIES
            levels[0].buffer.push(
                Transition(s, ops.FAMILY_IDS.index(fam), reward, s_next, done)
            )
            levels[1].buffer.push(Transition(s, op_idx, reward, s_next, done))
            for level in levels:
                level.learn(cfg, rng)
            psi = psi_next
            final_metric = reward
            steps += 1
        log.append(
            {
                "episode": episode,
                "dataset": os.path.basename(path),
                "epsilon": eps,
                "steps": steps,
                "final_metric": final_metric,
            }
        )
    return logical_net, physical_net, log

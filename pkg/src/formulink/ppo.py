"""Clipped-surrogate policy optimization over the downlink simulator.

Episodes are single-step: observe one channel realization, emit one raw
action, collect one reward. The training reward only includes the violation
terms named by the formulation being solved (a blind spot in the
formulation is a blind spot in training), while every reported score uses
the full constraint catalog.

The policy is a fully-connected diagonal-Gaussian head over the raw action
vector with a separate value baseline, implemented directly in numpy with
hand-written backprop so the analytic gradient can be checked against
finite differences and runs are bitwise reproducible for a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyEvalSet, NonFiniteLoss
from .formulation import CONSTRAINT_KIND_CATALOG, OptimizationFormulation
from .netenv import (
    ActionVector,
    InstanceBatch,
    NetworkInstance,
    batch_observations,
    evaluate_batch,
    map_raw_actions,
    observation_dim,
    project_power,
    raw_action_dim,
    sample_instances,
    stack_instances,
)

# One large instance pool shared by every run (only the per-run sampling
# stream depends on the seed); big enough that a 200-iteration run sees each
# instance a handful of times, which keeps the policy honest on held-out data.
TRAIN_POOL_SIZE = 32768
TRAIN_POOL_SEED = 555000
HELD_OUT_COUNT = 256
HELD_OUT_SEED = 909090
OBS_STATS_SEED = 424242
OBS_STATS_COUNT = 10000

# exploration scales per action group; the phase coordinates need finer
# noise than the rest for beam alignment to be learnable
LOG_STD_INIT = -1.5
LOG_STD_INIT_THETA = -2.5
ADVANTAGE_CLIP = 5.0

FULL_KIND_SET = frozenset(CONSTRAINT_KIND_CATALOG)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 200
    batch_episodes: int = 1024
    ppo_epochs: int = 4
    clip_ratio: float = 0.2
    learning_rate: float = 3e-4
    value_coeff: float = 0.5
    entropy_coeff: float = 0.01
    hidden_width: int = 128
    hidden_layers: int = 2
    minibatch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0 or self.batch_episodes < 1 or self.ppo_epochs < 1:
            raise ValueError("iteration/batch/epoch counts must be positive")
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must lie in (0, 1)")
        if min(self.learning_rate, self.value_coeff, self.entropy_coeff) < 0:
            raise ValueError("coefficients must be non-negative")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be positive")


@dataclass
class PolicyState:
    params: dict[str, np.ndarray]
    obs_mean: np.ndarray
    obs_std: np.ndarray
    obs_dim: int
    act_dim: int


@dataclass(frozen=True)
class SolveReport:
    curve: tuple[float, ...]              # per-iteration mean true score
    final_score: float                    # mean-action true score on held-out set
    seed: int
    enforced_kinds: tuple[str, ...]
    wall_time: float
    training_violation_terms: dict[str, int]   # reward-term usage counters
    true_score_terms: dict[str, int]
    policy: PolicyState = field(repr=False, default=None)


# --- networks -------------------------------------------------------------------

def _orthogonal(rng: np.random.Generator, n_in: int, n_out: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((n_in, n_out))
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    return gain * (u @ vt)


def _init_params(rng: np.random.Generator, obs_dim: int, act_dim: int,
                 width: int) -> dict[str, np.ndarray]:
    from .netenv import K_USERS, M_RIS, NT
    n_pre = 2 * NT * (K_USERS + 1)
    log_std = np.full(act_dim, LOG_STD_INIT)
    log_std[n_pre + K_USERS:n_pre + K_USERS + M_RIS] = LOG_STD_INIT_THETA
    return {
        "pW1": _orthogonal(rng, obs_dim, width, np.sqrt(2.0)), "pb1": np.zeros(width),
        "pW2": _orthogonal(rng, width, width, np.sqrt(2.0)), "pb2": np.zeros(width),
        "pWm": _orthogonal(rng, width, act_dim, 0.01), "pbm": np.zeros(act_dim),
        "log_std": log_std,
        "vW1": _orthogonal(rng, obs_dim, width, np.sqrt(2.0)), "vb1": np.zeros(width),
        "vW2": _orthogonal(rng, width, width, np.sqrt(2.0)), "vb2": np.zeros(width),
        "vWm": _orthogonal(rng, width, 1, 1.0), "vbm": np.zeros(1),
    }


def _policy_forward(params, X):
    h1 = np.tanh(X @ params["pW1"] + params["pb1"])
    h2 = np.tanh(h1 @ params["pW2"] + params["pb2"])
    mean = h2 @ params["pWm"] + params["pbm"]
    return mean, (X, h1, h2)


def _value_forward(params, X):
    h1 = np.tanh(X @ params["vW1"] + params["vb1"])
    h2 = np.tanh(h1 @ params["vW2"] + params["vb2"])
    v = (h2 @ params["vWm"] + params["vbm"])[:, 0]
    return v, (X, h1, h2)


def _log_prob(mean, log_std, actions):
    std = np.exp(log_std)
    z = (actions - mean) / std
    return (-0.5 * (z ** 2).sum(axis=1)
            - log_std.sum()
            - 0.5 * mean.shape[1] * np.log(2.0 * np.pi))


def _mlp_backward(cache, W2, Wm, d_out):
    """Gradients of a 2-hidden-layer tanh MLP given d(loss)/d(output)."""
    X, h1, h2 = cache
    dWm = h2.T @ d_out
    dbm = d_out.sum(axis=0)
    dh2 = d_out @ Wm.T
    dz2 = dh2 * (1.0 - h2 ** 2)
    dW2 = h1.T @ dz2
    db2 = dz2.sum(axis=0)
    dh1 = dz2 @ W2.T
    dz1 = dh1 * (1.0 - h1 ** 2)
    dW1 = X.T @ dz1
    db1 = dz1.sum(axis=0)
    return dW1, db1, dW2, db2, dWm, dbm


def clipped_surrogate(params, X, actions, logp_old, advantages, clip_ratio):
    """Policy loss: -mean(min(r*A, clip(r)*A)). Returns (loss, grads).

    Gradients cover the policy parameters only (pW*, pb*, log_std); this is
    the function the finite-difference check exercises.
    """
    mean, cache = _policy_forward(params, X)
    log_std = params["log_std"]
    std = np.exp(log_std)
    logp = _log_prob(mean, log_std, actions)
    ratio = np.exp(logp - logp_old)
    b = X.shape[0]

    s1 = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    s2 = clipped * advantages
    loss = -np.minimum(s1, s2).mean()

    inside = (ratio > 1.0 - clip_ratio) & (ratio < 1.0 + clip_ratio)
    take_raw = s1 <= s2
    dmin_dratio = np.where(take_raw, advantages, np.where(inside, advantages, 0.0))
    dloss_dlogp = -(dmin_dratio * ratio) / b

    z = (actions - mean) / std
    d_mean = dloss_dlogp[:, None] * z / std            # d logp/d mean = z/std
    d_log_std = (dloss_dlogp[:, None] * (z ** 2 - 1.0)).sum(axis=0)

    dW1, db1, dW2, db2, dWm, dbm = _mlp_backward(cache, params["pW2"], params["pWm"], d_mean)
    grads = {"pW1": dW1, "pb1": db1, "pW2": dW2, "pb2": db2,
             "pWm": dWm, "pbm": dbm, "log_std": d_log_std}
    return float(loss), grads


def _update_grads(params, X, actions, logp_old, advantages, returns, cfg):
    """Combined gradient: clipped surrogate + value regression - entropy bonus."""
    loss_pi, grads = clipped_surrogate(params, X, actions, logp_old,
                                       advantages, cfg.clip_ratio)

    v, vcache = _value_forward(params, X)
    b = X.shape[0]
    diff = v - returns
    loss_v = float((diff ** 2).mean())
    d_v = (2.0 * cfg.value_coeff / b) * diff
    dW1, db1, dW2, db2, dWm, dbm = _mlp_backward(
        vcache, params["vW2"], params["vWm"], d_v[:, None])
    grads.update({"vW1": dW1, "vb1": db1, "vW2": dW2, "vb2": db2,
                  "vWm": dWm, "vbm": dbm})

    # diagonal-Gaussian entropy depends only on log_std
    entropy = float(params["log_std"].sum()
                    + 0.5 * params["log_std"].size * (1.0 + np.log(2.0 * np.pi)))
    grads["log_std"] = grads["log_std"] - cfg.entropy_coeff

    total = loss_pi + cfg.value_coeff * loss_v - cfg.entropy_coeff * entropy
    return total, grads


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        correct1 = 1.0 - self.b1 ** self.t
        correct2 = 1.0 - self.b2 ** self.t
        for key, g in grads.items():
            self.m[key] = self.b1 * self.m[key] + (1.0 - self.b1) * g
            self.v[key] = self.b2 * self.v[key] + (1.0 - self.b2) * g * g
            m_hat = self.m[key] / correct1
            v_hat = self.v[key] / correct2
            params[key] = params[key] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# --- observation statistics and instance pools -------------------------------------

_OBS_STATS: tuple[np.ndarray, np.ndarray] | None = None
_POOL_CACHE: dict[tuple[int, int], InstanceBatch] = {}
_HELD_OUT_CACHE: dict[tuple[int, int], list[NetworkInstance]] = {}


def observation_stats() -> tuple[np.ndarray, np.ndarray]:
    """Fixed normalization statistics from presampled channel draws."""
    global _OBS_STATS
    if _OBS_STATS is None:
        rng = np.random.default_rng(OBS_STATS_SEED)
        from .netenv import K_USERS, M_RIS, NT, _complex_normal
        n = OBS_STATS_COUNT
        batch = InstanceBatch(
            G=_complex_normal(rng, (n, M_RIS, NT)),
            h_r=_complex_normal(rng, (n, K_USERS, M_RIS)),
            h_d=_complex_normal(rng, (n, K_USERS, NT)),
            e_min=np.zeros(n),
        )
        obs = batch_observations(batch)
        _OBS_STATS = (obs.mean(axis=0), np.maximum(obs.std(axis=0), 1e-6))
    return _OBS_STATS


def training_pool(seed: int = TRAIN_POOL_SEED, size: int = TRAIN_POOL_SIZE) -> InstanceBatch:
    """Presampled training instances (with frozen e_min), cached."""
    key = (seed, size)
    if key not in _POOL_CACHE:
        _POOL_CACHE[key] = stack_instances(sample_instances(seed, size))
    return _POOL_CACHE[key]


def held_out_instances(count: int = HELD_OUT_COUNT,
                       seed: int = HELD_OUT_SEED) -> list[NetworkInstance]:
    key = (count, seed)
    if key not in _HELD_OUT_CACHE:
        _HELD_OUT_CACHE[key] = sample_instances(seed, count)
    return _HELD_OUT_CACHE[key]


# --- map_action on the single-action surface ----------------------------------------

def map_action(raw: np.ndarray, instance: NetworkInstance) -> ActionVector:
    """Deterministic raw-vector -> ActionVector squashing for one instance."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (raw_action_dim(instance.nt, instance.m, instance.k),):
        raise DimensionMismatch(
            f"raw action must have shape ({raw_action_dim(instance.nt, instance.m, instance.k)},)")
    w_c, w_k, rho, theta, c = map_raw_actions(raw[None, :], p_max=instance.p_max,
                                              nt=instance.nt, m=instance.m, k=instance.k)
    action = ActionVector(w_c=w_c[0], w_k=w_k[0], rho=rho[0], theta=theta[0], c=c[0])
    return project_power(action, instance.p_max)


# --- training --------------------------------------------------------------------

def train(formulation: OptimizationFormulation, config: TrainConfig,
          eval_instances: list[NetworkInstance] | None = None) -> SolveReport:
    """Solve the formulated problem; reward sees only the formulation's kinds.

    Deterministic for a fixed (formulation kinds, config, eval set):
    identical seeds give bitwise-identical curves on one platform.
    """
    started = time.perf_counter()
    enforced = frozenset(formulation.kinds)
    eval_set = eval_instances if eval_instances is not None else held_out_instances()

    obs_dim = observation_dim()
    act_dim = raw_action_dim()
    seq = np.random.SeedSequence(config.seed)
    init_seed, draw_seed = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
    init_rng = np.random.default_rng(init_seed)
    draw_rng = np.random.default_rng(draw_seed)

    params = _init_params(init_rng, obs_dim, act_dim, config.hidden_width)
    obs_mean, obs_std = observation_stats()
    pool = training_pool()
    optimizer = _Adam(params, config.learning_rate)

    train_terms = {k: 0 for k in CONSTRAINT_KIND_CATALOG}
    true_terms = {k: 0 for k in CONSTRAINT_KIND_CATALOG}
    curve: list[float] = []

    for iteration in range(config.iterations):
        idx = draw_rng.integers(0, len(pool), size=config.batch_episodes)
        batch = pool.subset(idx)
        X = (batch_observations(batch) - obs_mean) / obs_std

        mean, _ = _policy_forward(params, X)
        std = np.exp(params["log_std"])
        actions = mean + std * draw_rng.standard_normal(mean.shape)
        logp_old = _log_prob(mean, params["log_std"], actions)

        w_c, w_k, rho, theta, c = map_raw_actions(actions)
        out = evaluate_batch(batch, w_c, w_k, rho, theta, c, enforced)
        rewards = out["enforced_score"]
        true_scores = out["score"]
        curve.append(float(true_scores.mean()))
        for kind in enforced:
            train_terms[kind] += len(batch)
        for kind in CONSTRAINT_KIND_CATALOG:
            true_terms[kind] += len(batch)

        baseline, _ = _value_forward(params, X)
        advantages = rewards - baseline
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
        advantages = np.clip(advantages, -ADVANTAGE_CLIP, ADVANTAGE_CLIP)

        n = config.batch_episodes
        mb = min(config.minibatch_size, n)
        for _ in range(config.ppo_epochs):
            order = draw_rng.permutation(n)
            for start in range(0, n, mb):
                sel = order[start:start + mb]
                total, grads = _update_grads(params, X[sel], actions[sel],
                                             logp_old[sel], advantages[sel],
                                             rewards[sel], config)
                if not np.isfinite(total):
                    raise NonFiniteLoss(
                        f"non-finite loss at iteration {iteration} (seed {config.seed})")
                optimizer.step(params, grads)

    policy = PolicyState(params=params, obs_mean=obs_mean, obs_std=obs_std,
                         obs_dim=obs_dim, act_dim=act_dim)
    final = evaluate_policy(policy, eval_set, FULL_KIND_SET)
    return SolveReport(
        curve=tuple(curve),
        final_score=final,
        seed=config.seed,
        enforced_kinds=tuple(sorted(enforced)),
        wall_time=time.perf_counter() - started,
        training_violation_terms=train_terms,
        true_score_terms=true_terms,
        policy=policy,
    )


def evaluate_policy(policy: PolicyState, instances: list[NetworkInstance],
                    kinds: frozenset[str] | set[str] = FULL_KIND_SET) -> float:
    """Mean deterministic (mean-action) score over ``instances``."""
    if not instances:
        raise EmptyEvalSet("no instances to evaluate")
    batch = stack_instances(instances)
    X = (batch_observations(batch) - policy.obs_mean) / policy.obs_std
    mean, _ = _policy_forward(policy.params, X)
    w_c, w_k, rho, theta, c = map_raw_actions(mean)
    out = evaluate_batch(batch, w_c, w_k, rho, theta, c, frozenset(kinds))
    return float(out["enforced_score"].mean())


def random_search_oracle(instances: list[NetworkInstance], samples: int = 5000,
                         seed: int = 77) -> float:
    """Best true score among uniformly sampled mapped actions, per instance,
    averaged over the instances. Independent of any learned policy."""
    from .netenv import effective_rows_multi, evaluate_arrays

    rng = np.random.default_rng(seed)
    act_dim = raw_action_dim()
    best_scores = []
    for inst in instances:
        raw = rng.uniform(-3.0, 3.0, size=(samples, act_dim))
        w_c, w_k, rho, theta, c = map_raw_actions(raw, p_max=inst.p_max)
        rows = effective_rows_multi(inst, theta)
        out = evaluate_arrays(rows, w_c, w_k, rho, c,
                              np.full(samples, inst.e_min),
                              inst.sigma2, inst.delta2, inst.eta, inst.xi,
                              inst.p_circuit, inst.p_max, inst.r_min,
                              FULL_KIND_SET)
        best_scores.append(float(out["score"].max()))
    return float(np.mean(best_scores))


# --- parameter flattening (finite-difference checks) --------------------------------

POLICY_PARAM_KEYS = ("pW1", "pb1", "pW2", "pb2", "pWm", "pbm", "log_std")


def flatten_params(params: dict[str, np.ndarray],
                   keys=POLICY_PARAM_KEYS) -> np.ndarray:
    return np.concatenate([params[k].ravel() for k in keys])


def unflatten_params(flat: np.ndarray, template: dict[str, np.ndarray],
                     keys=POLICY_PARAM_KEYS) -> dict[str, np.ndarray]:
    out = dict(template)
    pos = 0
    for k in keys:
        size = template[k].size
        out[k] = flat[pos:pos + size].reshape(template[k].shape).copy()
        pos += size
    return out

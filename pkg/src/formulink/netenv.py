"""Desk-scale RIS-assisted SWIPT downlink with rate splitting.

Two users, four transmit antennas, eight reflecting elements. Each receiver
splits its received power between decoding (share rho) and harvesting
(share 1-rho); the common stream must be decodable by both users before the
private streams are recovered. Energy efficiency is the delivered sum rate
over amplifier-referred transmit power plus circuit power.

All evaluation code is pure: instances are immutable, channels are fixed by
the seed, and the batched and single-action paths share the same formulas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonFiniteAction

NT = 4            # transmit antennas
M_RIS = 8         # reflecting elements
K_USERS = 2
SIGMA2 = 1e-3     # antenna noise power
DELTA2 = 1e-3     # conversion noise power
ETA_EH = 0.7      # harvesting efficiency
XI_AMP = 0.35     # power-amplifier efficiency
P_CIRCUIT = 0.5   # circuit power, normalized W
P_MAX = 1.0
R_MIN = 0.5       # per-user delivered-rate floor, bit/s/Hz
PENALTY_MU = 10.0

INSTANCE_FORMAT_VERSION = 1

# E_min calibration: half the median harvested energy over a fixed pool of
# random power-feasible actions (seeded once, shared by every instance).
_EMIN_ACTION_SEED = 20240614
_EMIN_ACTION_COUNT = 1000
_EMIN_FRACTION = 0.5

# Raw precoder entries are pre-scaled before pairing into complex numbers so
# that a unit-scale raw vector maps to an interior (sub-budget) transmit
# power; the power projection still caps the top end.
PRECODER_INPUT_SCALE = 0.08


def raw_action_dim(nt: int = NT, m: int = M_RIS, k: int = K_USERS) -> int:
    """Real-vector dimension of a raw action: precoder pairs + rho + theta + c."""
    return 2 * nt * (k + 1) + k + m + k


@dataclass(frozen=True)
class NetworkInstance:
    seed: int
    G: np.ndarray        # (M, Nt) complex, BS -> RIS
    h_r: np.ndarray      # (K, M) complex, RIS -> user
    h_d: np.ndarray      # (K, Nt) complex, direct
    sigma2: float = SIGMA2
    delta2: float = DELTA2
    eta: float = ETA_EH
    xi: float = XI_AMP
    p_circuit: float = P_CIRCUIT
    p_max: float = P_MAX
    r_min: float = R_MIN
    e_min: float = 0.0

    @property
    def nt(self) -> int:
        return self.G.shape[1]

    @property
    def m(self) -> int:
        return self.G.shape[0]

    @property
    def k(self) -> int:
        return self.h_d.shape[0]


@dataclass(frozen=True)
class ActionVector:
    w_c: np.ndarray      # (Nt,) complex
    w_k: np.ndarray      # (K, Nt) complex
    rho: np.ndarray      # (K,) in [0, 1]
    theta: np.ndarray    # (M,) in [0, 2*pi)
    c: np.ndarray        # (K,) >= 0


@dataclass(frozen=True)
class EvalReport:
    private_rate: np.ndarray       # R_k, (K,)
    common_rate: np.ndarray        # R_c,k, (K,)
    delivered_common_rate: float   # min(sum c, min_k R_c,k)
    harvested: np.ndarray          # E_k, (K,)
    p_tx: float
    ee: float
    violations: dict[str, float]   # always the full catalog
    score: float                   # ee - mu * sum(all violations)
    enforced_score: float          # ee - mu * sum(enforced violations)


def _expit(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


# --- instance sampling -----------------------------------------------------

def _complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _draw_channels(seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    return (_complex_normal(rng, (M_RIS, NT)),
            _complex_normal(rng, (K_USERS, M_RIS)),
            _complex_normal(rng, (K_USERS, NT)))


def sample_instance(seed: int) -> NetworkInstance:
    """Deterministic channel draw; e_min is frozen into the record."""
    G, h_r, h_d = _draw_channels(seed)
    e_min = float(_calibrate_e_min_block(G[None], h_r[None], h_d[None])[0])
    return NetworkInstance(seed=seed, G=G, h_r=h_r, h_d=h_d, e_min=e_min)


def sample_instances(seed: int, n: int) -> list[NetworkInstance]:
    """n independent instances with child seeds derived from ``seed``."""
    states = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)
    channels = [_draw_channels(int(s)) for s in states]
    out: list[NetworkInstance] = []
    block = 256
    for start in range(0, n, block):
        part = channels[start:start + block]
        e_min = _calibrate_e_min_block(
            np.stack([c[0] for c in part]),
            np.stack([c[1] for c in part]),
            np.stack([c[2] for c in part]))
        for i, (G, h_r, h_d) in enumerate(part):
            out.append(NetworkInstance(seed=int(states[start + i]), G=G, h_r=h_r,
                                       h_d=h_d, e_min=float(e_min[i])))
    return out


_EMIN_ACTIONS: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None


def _emin_action_pool() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    global _EMIN_ACTIONS
    if _EMIN_ACTIONS is None:
        rng = np.random.default_rng(_EMIN_ACTION_SEED)
        raw = rng.standard_normal((_EMIN_ACTION_COUNT, raw_action_dim()))
        w_c, w_k, rho, theta, _ = map_raw_actions(raw)
        _EMIN_ACTIONS = (w_c, w_k, rho, theta)
    return _EMIN_ACTIONS


def _calibrate_e_min_block(G: np.ndarray, h_r: np.ndarray, h_d: np.ndarray) -> np.ndarray:
    """Vectorized e_min for a (B, ...) channel block, one instance per row."""
    w_c, w_k, rho, theta = _emin_action_pool()
    b, a = len(G), len(theta)
    k, m = h_r.shape[1], h_r.shape[2]
    phase = np.exp(1j * theta)                                     # (A, M)
    tmp = np.conj(h_r)[:, None, :, :] * phase[None, :, None, :]    # (B, A, K, M)
    reflected = (tmp.reshape(b, a * k, m) @ G).reshape(b, a, k, -1)
    rows = np.conj(h_d)[:, None, :, :] + reflected                 # (B, A, K, Nt)
    streams = np.concatenate([w_c[:, None, :], w_k], axis=1)       # (A, S, Nt)
    gains = np.abs(np.einsum("bakn,asn->baks", rows, streams)) ** 2
    p_rx = gains.sum(axis=3)
    energy = ETA_EH * (1.0 - rho)[None, :, :] * p_rx               # (B, A, K)
    return _EMIN_FRACTION * np.median(energy.reshape(b, -1), axis=1)


# --- channels ----------------------------------------------------------------

def effective_rows(inst: NetworkInstance, theta: np.ndarray) -> np.ndarray:
    """(K, Nt) array of conjugated effective channels: row_k = h_k^H as a row.

    row_k = h_d,k^H + h_r,k^H diag(e^{j theta}) G, so ``row_k @ w`` is h_k^H w.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (inst.m,):
        raise DimensionMismatch(f"theta must have shape ({inst.m},), got {theta.shape}")
    phase = np.exp(1j * theta)
    return np.conj(inst.h_d) + (np.conj(inst.h_r) * phase[None, :]) @ inst.G


def effective_rows_multi(inst: NetworkInstance, theta: np.ndarray) -> np.ndarray:
    """Same as effective_rows for a (A, M) stack of phase vectors -> (A, K, Nt)."""
    phase = np.exp(1j * np.asarray(theta, dtype=float))        # (A, M)
    reflected = np.einsum("km,am,mn->akn", np.conj(inst.h_r), phase, inst.G)
    return np.conj(inst.h_d)[None, :, :] + reflected


def effective_channel(inst: NetworkInstance, theta: np.ndarray) -> np.ndarray:
    """Per-user effective channel vectors h_k, shape (K, Nt)."""
    return np.conj(effective_rows(inst, theta))


# --- actions -----------------------------------------------------------------

def map_raw_actions(raw: np.ndarray, p_max: float = P_MAX,
                    nt: int = NT, m: int = M_RIS, k: int = K_USERS):
    """Squash a (B, dim) raw matrix into batched action arrays.

    Precoder entries come from consecutive real pairs, then the whole
    precoder set is power-projected; rho is logistic, theta is 2*pi*logistic,
    c is softplus. Deterministic and shape-checked.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[None, :]
    dim = raw_action_dim(nt, m, k)
    if raw.shape[1] != dim:
        raise DimensionMismatch(f"raw action dim must be {dim}, got {raw.shape[1]}")
    b = raw.shape[0]
    n_pre = 2 * nt * (k + 1)
    pre = (PRECODER_INPUT_SCALE * raw[:, :n_pre]).reshape(b, k + 1, nt, 2)
    streams = pre[..., 0] + 1j * pre[..., 1]      # (B, K+1, Nt)
    w_c = streams[:, 0, :]
    w_k = streams[:, 1:, :]
    rho = _expit(raw[:, n_pre:n_pre + k])
    theta = 2.0 * np.pi * _expit(raw[:, n_pre + k:n_pre + k + m])
    c = _softplus(raw[:, n_pre + k + m:])
    w_c, w_k = project_power_batch(w_c, w_k, p_max)
    return w_c, w_k, rho, theta, c


def project_power_batch(w_c: np.ndarray, w_k: np.ndarray,
                        p_max: float) -> tuple[np.ndarray, np.ndarray]:
    p_tx = (np.abs(w_c) ** 2).sum(axis=-1) + (np.abs(w_k) ** 2).sum(axis=(-2, -1))
    scale = np.where(p_tx > p_max, np.sqrt(p_max / np.maximum(p_tx, 1e-300)), 1.0)
    return w_c * scale[..., None], w_k * scale[..., None, None]


def project_power(action: ActionVector, p_max: float = P_MAX) -> ActionVector:
    """Scale the precoders down to the power budget; idempotent, no-op when feasible."""
    w_c, w_k = project_power_batch(action.w_c[None], action.w_k[None], p_max)
    return replace(action, w_c=w_c[0], w_k=w_k[0])


def transmit_power(action: ActionVector) -> float:
    return float((np.abs(action.w_c) ** 2).sum() + (np.abs(action.w_k) ** 2).sum())


# --- evaluation ----------------------------------------------------------------

def evaluate_arrays(rows: np.ndarray, w_c: np.ndarray, w_k: np.ndarray,
                    rho: np.ndarray, c: np.ndarray, e_min: np.ndarray,
                    sigma2: float, delta2: float, eta: float, xi: float,
                    p_circuit: float, p_max: float, r_min: float,
                    enforced_kinds: frozenset[str]):
    """Vectorized scoring over a batch.

    rows: (B, K, Nt) conjugated effective channels; w_c: (B, Nt); w_k: (B, K, Nt);
    rho, c: (B, K); e_min: (B,). Returns a dict of per-batch arrays.
    """
    g_c = np.abs(np.einsum("bkn,bn->bk", rows, w_c)) ** 2          # |h_k^H w_c|^2
    g_p = np.abs(np.einsum("bkn,bjn->bkj", rows, w_k)) ** 2        # |h_k^H w_j|^2
    g_p_sum = g_p.sum(axis=2)
    g_own = np.einsum("bkk->bk", g_p)

    sinr_c = rho * g_c / (rho * (g_p_sum + sigma2) + delta2)
    r_c = np.log2(1.0 + sinr_c)
    interference = g_p_sum - g_own
    sinr_p = rho * g_own / (rho * (interference + sigma2) + delta2)
    r_p = np.log2(1.0 + sinr_p)

    p_rx = g_c + g_p_sum
    energy = eta * (1.0 - rho) * p_rx
    p_tx = (np.abs(w_c) ** 2).sum(axis=1) + (np.abs(w_k) ** 2).sum(axis=(1, 2))

    c_total = c.sum(axis=1)
    ee = (c_total + r_p.sum(axis=1)) / (p_tx / xi + p_circuit)

    viol = {
        "power_budget": np.maximum(0.0, p_tx - p_max),
        "qos_rate": np.maximum(0.0, r_min - (r_p + c)).sum(axis=1),
        "energy_harvest": np.maximum(0.0, e_min[:, None] - energy).sum(axis=1),
        "rsma_common_rate": np.maximum(0.0, c_total - r_c.min(axis=1)),
        # structurally satisfied by the action representation
        "unit_modulus": np.zeros_like(p_tx),
        "ps_ratio_range": np.zeros_like(p_tx),
    }
    total = sum(viol.values())
    enforced = sum(viol[k] for k in viol if k in enforced_kinds)
    if not enforced_kinds:
        enforced = np.zeros_like(p_tx)
    return {
        "r_p": r_p, "r_c": r_c, "energy": energy, "p_rx": p_rx, "p_tx": p_tx,
        "ee": ee, "violations": viol,
        "score": ee - PENALTY_MU * total,
        "enforced_score": ee - PENALTY_MU * enforced,
        "c_total": c_total,
    }


def evaluate(inst: NetworkInstance, action: ActionVector,
             enforced_kinds: frozenset[str] | set[str] | None = None) -> EvalReport:
    """Score one action on one instance.

    ``violations`` and ``score`` always use the full constraint catalog;
    ``enforced_score`` is what a solver restricted to ``enforced_kinds``
    would see as its reward.
    """
    if action.w_c.shape != (inst.nt,) or action.w_k.shape != (inst.k, inst.nt):
        raise DimensionMismatch("precoder shapes do not match the instance")
    if action.rho.shape != (inst.k,) or action.c.shape != (inst.k,):
        raise DimensionMismatch("rho/c shapes do not match the instance")
    parts = [action.w_c, action.w_k, action.rho, action.theta, action.c]
    if not all(np.isfinite(p).all() for p in parts):
        raise NonFiniteAction("action contains non-finite entries")
    kinds = frozenset(enforced_kinds) if enforced_kinds is not None else frozenset(
        ("power_budget", "qos_rate", "energy_harvest", "rsma_common_rate",
         "unit_modulus", "ps_ratio_range"))

    rows = effective_rows(inst, action.theta)
    out = evaluate_arrays(
        rows[None], action.w_c[None], action.w_k[None], action.rho[None],
        action.c[None], np.array([inst.e_min]),
        inst.sigma2, inst.delta2, inst.eta, inst.xi, inst.p_circuit,
        inst.p_max, inst.r_min, kinds)

    c_total = float(out["c_total"][0])
    r_c = out["r_c"][0]
    return EvalReport(
        private_rate=out["r_p"][0],
        common_rate=r_c,
        delivered_common_rate=float(min(c_total, float(r_c.min()))),
        harvested=out["energy"][0],
        p_tx=float(out["p_tx"][0]),
        ee=float(out["ee"][0]),
        violations={k: float(v[0]) for k, v in out["violations"].items()},
        score=float(out["score"][0]),
        enforced_score=float(out["enforced_score"][0]),
    )


# --- batched instance arrays for the solver -----------------------------------

@dataclass(frozen=True)
class InstanceBatch:
    """Stacked channels for vectorized training/evaluation."""
    G: np.ndarray       # (B, M, Nt)
    h_r: np.ndarray     # (B, K, M)
    h_d: np.ndarray     # (B, K, Nt)
    e_min: np.ndarray   # (B,)
    sigma2: float = SIGMA2
    delta2: float = DELTA2
    eta: float = ETA_EH
    xi: float = XI_AMP
    p_circuit: float = P_CIRCUIT
    p_max: float = P_MAX
    r_min: float = R_MIN

    def __len__(self) -> int:
        return self.G.shape[0]

    def subset(self, idx: np.ndarray) -> "InstanceBatch":
        return InstanceBatch(self.G[idx], self.h_r[idx], self.h_d[idx],
                             self.e_min[idx], self.sigma2, self.delta2, self.eta,
                             self.xi, self.p_circuit, self.p_max, self.r_min)


def stack_instances(instances: list[NetworkInstance]) -> InstanceBatch:
    if not instances:
        raise ValueError("cannot stack an empty instance list")
    return InstanceBatch(
        G=np.stack([i.G for i in instances]),
        h_r=np.stack([i.h_r for i in instances]),
        h_d=np.stack([i.h_d for i in instances]),
        e_min=np.array([i.e_min for i in instances]),
        sigma2=instances[0].sigma2, delta2=instances[0].delta2,
        eta=instances[0].eta, xi=instances[0].xi,
        p_circuit=instances[0].p_circuit, p_max=instances[0].p_max,
        r_min=instances[0].r_min,
    )


def batch_rows(batch: InstanceBatch, theta: np.ndarray) -> np.ndarray:
    """(B, K, Nt) conjugated effective channels for per-instance phases (B, M)."""
    phase = np.exp(1j * theta)
    reflected = np.einsum("bkm,bm,bmn->bkn", np.conj(batch.h_r), phase, batch.G)
    return np.conj(batch.h_d) + reflected


def evaluate_batch(batch: InstanceBatch, w_c, w_k, rho, theta, c,
                   enforced_kinds: frozenset[str]):
    rows = batch_rows(batch, theta)
    return evaluate_arrays(rows, w_c, w_k, rho, c, batch.e_min,
                           batch.sigma2, batch.delta2, batch.eta, batch.xi,
                           batch.p_circuit, batch.p_max, batch.r_min,
                           enforced_kinds)


def batch_observations(batch: InstanceBatch) -> np.ndarray:
    """Flattened channel reals, (B, 2*(M*Nt + K*M + K*Nt))."""
    b = len(batch)
    parts = [
        batch.G.reshape(b, -1),
        batch.h_r.reshape(b, -1),
        batch.h_d.reshape(b, -1),
    ]
    flat = np.concatenate(parts, axis=1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def observation_dim(nt: int = NT, m: int = M_RIS, k: int = K_USERS) -> int:
    return 2 * (m * nt + k * m + k * nt)


# --- persistence ----------------------------------------------------------------

def instance_to_json(inst: NetworkInstance) -> dict:
    def c2(a: np.ndarray) -> dict:
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return {
        "format_version": INSTANCE_FORMAT_VERSION,
        "seed": inst.seed,
        "G": c2(inst.G), "h_r": c2(inst.h_r), "h_d": c2(inst.h_d),
        "sigma2": inst.sigma2, "delta2": inst.delta2, "eta": inst.eta,
        "xi": inst.xi, "p_circuit": inst.p_circuit, "p_max": inst.p_max,
        "r_min": inst.r_min, "e_min": inst.e_min,
    }


def instance_from_json(data: dict) -> NetworkInstance:
    def c2(d: dict) -> np.ndarray:
        return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    if data.get("format_version") != INSTANCE_FORMAT_VERSION:
        raise ValueError(f"unsupported instance format {data.get('format_version')!r}")
    return NetworkInstance(
        seed=data["seed"], G=c2(data["G"]), h_r=c2(data["h_r"]), h_d=c2(data["h_d"]),
        sigma2=data["sigma2"], delta2=data["delta2"], eta=data["eta"], xi=data["xi"],
        p_circuit=data["p_circuit"], p_max=data["p_max"], r_min=data["r_min"],
        e_min=data["e_min"],
    )


def save_instance(inst: NetworkInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst)), encoding="utf-8")


def load_instance(path: str | Path) -> NetworkInstance:
    return instance_from_json(json.loads(Path(path).read_text(encoding="utf-8")))

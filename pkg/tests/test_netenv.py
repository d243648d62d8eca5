import dataclasses
import math

import numpy as np
import pytest

from formulink import netenv
from formulink.errors import DimensionMismatch, NonFiniteAction
from formulink.netenv import (
    ActionVector,
    NetworkInstance,
    effective_channel,
    effective_rows,
    evaluate,
    instance_from_json,
    instance_to_json,
    map_raw_actions,
    project_power,
    raw_action_dim,
    sample_instance,
    sample_instances,
    stack_instances,
    transmit_power,
)


def random_action(rng: np.random.Generator, inst: NetworkInstance) -> ActionVector:
    raw = rng.standard_normal(raw_action_dim(inst.nt, inst.m, inst.k))
    w_c, w_k, rho, theta, c = map_raw_actions(raw[None, :], p_max=inst.p_max)
    return ActionVector(w_c=w_c[0], w_k=w_k[0], rho=rho[0], theta=theta[0], c=c[0])


class TestSampling:
    def test_same_seed_identical(self):
        a, b = sample_instance(42), sample_instance(42)
        assert np.array_equal(a.G, b.G)
        assert np.array_equal(a.h_r, b.h_r)
        assert np.array_equal(a.h_d, b.h_d)
        assert a.e_min == b.e_min

    def test_dimensions(self):
        inst = sample_instance(0)
        assert inst.G.shape == (8, 4)
        assert inst.h_r.shape == (2, 8)
        assert inst.h_d.shape == (2, 4)
        assert inst.nt == 4 and inst.m == 8 and inst.k == 2

    def test_channel_moments_over_1000_draws(self):
        # Monte-Carlo moment check: unit-variance circular Gaussian entries
        entries = []
        for inst in sample_instances(2024, 1000):
            entries.append(inst.G.ravel())
        z = np.concatenate(entries)
        assert abs(z.mean()) < 0.05
        assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 0.1

    def test_batch_matches_single_path(self):
        batch = sample_instances(5, 6)
        for inst in batch:
            solo = sample_instance(inst.seed)
            assert np.array_equal(solo.G, inst.G)
            assert solo.e_min == inst.e_min

    def test_e_min_positive_and_frozen(self):
        inst = sample_instance(3)
        assert inst.e_min > 0.0


class TestEffectiveChannel:
    def test_no_ris_elements_degenerates_to_direct(self):
        inst = sample_instance(1)
        bare = NetworkInstance(seed=0, G=np.zeros((0, 4), dtype=complex),
                               h_r=np.zeros((2, 0), dtype=complex), h_d=inst.h_d,
                               e_min=0.1)
        h = effective_channel(bare, np.zeros(0))
        assert np.allclose(h, bare.h_d)

    def test_phase_periodicity(self):
        inst = sample_instance(7)
        theta = np.linspace(0.3, 5.8, inst.m)
        a = effective_channel(inst, theta)
        b = effective_channel(inst, theta + 2 * np.pi)
        assert np.allclose(a, b, atol=1e-12)

    def test_hand_computed_small_case(self):
        # Nt=2, M=2, one user, channels set by hand
        G = np.array([[1 + 0j, 2j], [0.5 - 0.5j, 1 + 1j]])
        h_r = np.array([[1 + 1j, 2 - 1j]])
        h_d = np.array([[0.25 + 0j, -1j]])
        inst = NetworkInstance(seed=0, G=G, h_r=h_r, h_d=h_d, e_min=0.0)
        theta = np.array([np.pi / 3, -np.pi / 4])
        # row = h_d^H + h_r^H diag(e^{j theta}) G, element by element
        expected_row = np.conj(h_d[0]).copy()
        for m in range(2):
            expected_row += np.conj(h_r[0, m]) * np.exp(1j * theta[m]) * G[m]
        got = effective_rows(inst, theta)[0]
        assert np.allclose(got, expected_row, atol=1e-14)
        assert np.allclose(effective_channel(inst, theta)[0], np.conj(expected_row))

    def test_dimension_mismatch(self):
        inst = sample_instance(1)
        with pytest.raises(DimensionMismatch):
            effective_rows(inst, np.zeros(inst.m + 1))


class TestEvaluate:
    def test_zero_precoders(self):
        inst = sample_instance(11)
        action = ActionVector(
            w_c=np.zeros(4, dtype=complex), w_k=np.zeros((2, 4), dtype=complex),
            rho=np.array([0.4, 0.7]), theta=np.zeros(8), c=np.zeros(2))
        report = evaluate(inst, action)
        assert np.all(report.private_rate == 0.0)
        assert np.all(report.common_rate == 0.0)
        assert report.ee == 0.0
        assert report.p_tx == 0.0
        # no signal: the rate floor and harvest floor are both violated
        assert report.violations["qos_rate"] == pytest.approx(2 * inst.r_min)
        assert report.violations["energy_harvest"] == pytest.approx(2 * inst.e_min)
        expected_penalty = netenv.PENALTY_MU * (2 * inst.r_min + 2 * inst.e_min)
        assert report.score == pytest.approx(0.0 - expected_penalty)

    def test_power_splitting_conservation_identity(self):
        rng = np.random.default_rng(0)
        inst = sample_instance(8)
        for _ in range(20):
            action = random_action(rng, inst)
            rows = effective_rows(inst, action.theta)
            p_rx = (np.abs(rows @ action.w_c) ** 2
                    + sum(np.abs(rows @ w) ** 2 for w in action.w_k))
            split = action.rho * p_rx + (1.0 - action.rho) * p_rx
            assert np.all(np.abs(split - p_rx) <= 1e-12 * np.abs(p_rx))

    def test_matches_independent_evaluator(self):
        # second evaluator: plain-python loops, written against the formulas
        rng = np.random.default_rng(5)
        inst = sample_instance(21)
        for _ in range(8):
            action = random_action(rng, inst)
            report = evaluate(inst, action)
            ref = independent_evaluate(inst, action)
            assert report.ee == pytest.approx(ref["ee"], rel=1e-9)
            assert report.score == pytest.approx(ref["score"], rel=1e-9, abs=1e-12)
            for k in range(inst.k):
                assert report.private_rate[k] == pytest.approx(ref["r_p"][k], rel=1e-9)
                assert report.common_rate[k] == pytest.approx(ref["r_c"][k], rel=1e-9)
                assert report.harvested[k] == pytest.approx(ref["energy"][k], rel=1e-9)

    def test_noise_monotonicity(self):
        rng = np.random.default_rng(9)
        inst = sample_instance(30)
        action = random_action(rng, inst)
        louder = dataclasses.replace(inst, sigma2=inst.sigma2 * 4)
        base = evaluate(inst, action)
        noisy = evaluate(louder, action)
        assert np.all(noisy.private_rate < base.private_rate)

    def test_precoder_scaling_response(self):
        rng = np.random.default_rng(14)
        inst = sample_instance(2)
        action = random_action(rng, inst)
        g = 0.5
        scaled = dataclasses.replace(action, w_c=action.w_c * g, w_k=action.w_k * g)
        assert transmit_power(scaled) == pytest.approx(g ** 2 * transmit_power(action), rel=1e-12)
        rows = effective_rows(inst, action.theta)
        assert np.allclose(np.abs(rows @ scaled.w_c) ** 2,
                           g ** 2 * np.abs(rows @ action.w_c) ** 2, rtol=1e-12)

    def test_score_equals_ee_when_feasible(self):
        rng = np.random.default_rng(33)
        inst = sample_instance(17)
        for _ in range(4000):
            action = random_action(rng, inst)
            report = evaluate(inst, action)
            if all(v == 0.0 for v in report.violations.values()):
                assert report.score == report.ee
                break
        else:
            pytest.fail("no feasible random action found")

    def test_score_never_exceeds_ee(self):
        rng = np.random.default_rng(40)
        inst = sample_instance(18)
        for _ in range(50):
            report = evaluate(inst, random_action(rng, inst))
            assert report.score <= report.ee

    def test_rsma_decodability_definition(self):
        rng = np.random.default_rng(50)
        inst = sample_instance(19)
        for _ in range(50):
            report = evaluate(inst, random_action(rng, inst))
            if report.violations["rsma_common_rate"] == 0.0:
                assert report.delivered_common_rate == pytest.approx(
                    min(report.common_rate.min(), report.delivered_common_rate))

    def test_non_finite_action_rejected(self):
        inst = sample_instance(1)
        action = ActionVector(
            w_c=np.full(4, np.nan, dtype=complex), w_k=np.zeros((2, 4), dtype=complex),
            rho=np.array([0.5, 0.5]), theta=np.zeros(8), c=np.zeros(2))
        with pytest.raises(NonFiniteAction):
            evaluate(inst, action)

    def test_dimension_mismatch_rejected(self):
        inst = sample_instance(1)
        action = ActionVector(
            w_c=np.zeros(3, dtype=complex), w_k=np.zeros((2, 4), dtype=complex),
            rho=np.array([0.5, 0.5]), theta=np.zeros(8), c=np.zeros(2))
        with pytest.raises(DimensionMismatch):
            evaluate(inst, action)


def independent_evaluate(inst: NetworkInstance, action: ActionVector) -> dict:
    """Deliberately un-vectorized re-derivation of every reported quantity."""
    k_users = inst.k
    rows = []
    for k in range(k_users):
        row = [complex(np.conj(inst.h_d[k, n])) for n in range(inst.nt)]
        for m in range(inst.m):
            coef = complex(np.conj(inst.h_r[k, m])) * complex(
                math.cos(action.theta[m]), math.sin(action.theta[m]))
            for n in range(inst.nt):
                row[n] += coef * complex(inst.G[m, n])
        rows.append(row)

    def gain(row, w):
        inner = sum(row[n] * complex(w[n]) for n in range(inst.nt))
        return abs(inner) ** 2

    r_p, r_c, energy = [], [], []
    p_tx = sum(abs(complex(x)) ** 2 for x in action.w_c)
    for wk in action.w_k:
        p_tx += sum(abs(complex(x)) ** 2 for x in wk)
    for k in range(k_users):
        rho = float(action.rho[k])
        g_c = gain(rows[k], action.w_c)
        g_all = [gain(rows[k], action.w_k[j]) for j in range(k_users)]
        sinr_c = rho * g_c / (rho * (sum(g_all) + inst.sigma2) + inst.delta2)
        r_c.append(math.log2(1 + sinr_c))
        interference = sum(g_all) - g_all[k]
        sinr_p = rho * g_all[k] / (rho * (interference + inst.sigma2) + inst.delta2)
        r_p.append(math.log2(1 + sinr_p))
        energy.append(inst.eta * (1 - rho) * (g_c + sum(g_all)))

    c_total = float(action.c.sum())
    ee = (c_total + sum(r_p)) / (p_tx / inst.xi + inst.p_circuit)
    violations = (
        max(0.0, p_tx - inst.p_max)
        + sum(max(0.0, inst.r_min - (r_p[k] + float(action.c[k]))) for k in range(k_users))
        + sum(max(0.0, inst.e_min - energy[k]) for k in range(k_users))
        + max(0.0, c_total - min(r_c))
    )
    return {"r_p": r_p, "r_c": r_c, "energy": energy, "ee": ee,
            "score": ee - netenv.PENALTY_MU * violations}


class TestProjectPower:
    def test_overbudget_scaled_to_cap(self):
        rng = np.random.default_rng(3)
        w_c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w_k = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        action = ActionVector(w_c=w_c, w_k=w_k, rho=np.array([0.5, 0.5]),
                              theta=np.zeros(8), c=np.zeros(2))
        scale = math.sqrt(2.0 / transmit_power(action))
        doubled = dataclasses.replace(action, w_c=w_c * scale, w_k=w_k * scale)
        assert transmit_power(doubled) == pytest.approx(2.0)
        projected = project_power(doubled, 1.0)
        assert transmit_power(projected) == pytest.approx(1.0, abs=1e-9)

    def test_feasible_unchanged(self):
        action = ActionVector(w_c=np.full(4, 0.1 + 0j), w_k=np.zeros((2, 4), dtype=complex),
                              rho=np.array([0.5, 0.5]), theta=np.zeros(8), c=np.zeros(2))
        projected = project_power(action, 1.0)
        assert np.array_equal(projected.w_c, action.w_c)

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        w_c = 3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        action = ActionVector(w_c=w_c, w_k=np.zeros((2, 4), dtype=complex),
                              rho=np.array([0.5, 0.5]), theta=np.zeros(8), c=np.zeros(2))
        once = project_power(action, 1.0)
        twice = project_power(once, 1.0)
        assert np.array_equal(once.w_c, twice.w_c)


class TestMapRawActions:
    def test_zero_raw_squashes_to_midpoints(self):
        w_c, w_k, rho, theta, c = map_raw_actions(np.zeros(raw_action_dim()))
        assert np.all(w_c == 0) and np.all(w_k == 0)
        assert np.allclose(rho, 0.5)
        assert np.allclose(theta, np.pi)
        assert np.allclose(c, math.log(2.0))

    def test_power_capped_for_any_raw(self):
        rng = np.random.default_rng(77)
        raw = 100 * rng.standard_normal((64, raw_action_dim()))
        w_c, w_k, _, _, _ = map_raw_actions(raw)
        p = (np.abs(w_c) ** 2).sum(axis=1) + (np.abs(w_k) ** 2).sum(axis=(1, 2))
        assert np.all(p <= 1.0 + 1e-9)

    def test_wrong_dim_rejected(self):
        with pytest.raises(DimensionMismatch):
            map_raw_actions(np.zeros(raw_action_dim() + 1))


class TestPersistence:
    def test_instance_json_round_trip(self):
        inst = sample_instance(123)
        loaded = instance_from_json(instance_to_json(inst))
        assert np.array_equal(loaded.G, inst.G)
        assert np.array_equal(loaded.h_r, inst.h_r)
        assert np.array_equal(loaded.h_d, inst.h_d)
        assert loaded.e_min == inst.e_min
        assert loaded.seed == inst.seed


class TestBatching:
    def test_stacked_evaluation_matches_single(self):
        rng = np.random.default_rng(6)
        instances = sample_instances(61, 5)
        batch = stack_instances(instances)
        raws = rng.standard_normal((5, raw_action_dim()))
        w_c, w_k, rho, theta, c = map_raw_actions(raws)
        out = netenv.evaluate_batch(batch, w_c, w_k, rho, theta, c,
                                    frozenset(netenv.evaluate.__defaults__ or ())
                                    or frozenset(("power_budget", "qos_rate",
                                                  "energy_harvest", "rsma_common_rate",
                                                  "unit_modulus", "ps_ratio_range")))
        for i, inst in enumerate(instances):
            action = ActionVector(w_c=w_c[i], w_k=w_k[i], rho=rho[i],
                                  theta=theta[i], c=c[i])
            report = evaluate(inst, action)
            assert report.score == pytest.approx(float(out["score"][i]), rel=1e-12)
            assert report.ee == pytest.approx(float(out["ee"][i]), rel=1e-12)

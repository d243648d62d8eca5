"""Score actions on the RIS-assisted SWIPT downlink and read the report."""

import numpy as np

from formulink import evaluate, sample_instance
from formulink.netenv import map_raw_actions, raw_action_dim
from formulink.ppo import map_action

inst = sample_instance(seed=42)
print(f"instance seed=42: Nt={inst.nt} M={inst.m} K={inst.k} "
      f"E_min={inst.e_min:.4f} R_min={inst.r_min}")

rng = np.random.default_rng(0)
best = None
for i in range(2000):
    action = map_action(rng.uniform(-3, 3, raw_action_dim()), inst)
    report = evaluate(inst, action)
    if best is None or report.score > best[1].score:
        best = (action, report)

action, report = best
print(f"\nbest of 2000 random actions:")
print(f"  EE={report.ee:.3f}  score={report.score:.3f}  P_tx={report.p_tx:.3f}")
print(f"  private rates: {np.round(report.private_rate, 2)}")
print(f"  common-stream rates: {np.round(report.common_rate, 2)} "
      f"(delivered common: {report.delivered_common_rate:.2f})")
print(f"  harvested energy: {np.round(report.harvested, 3)}")
print("  violations:", {k: round(v, 4) for k, v in report.violations.items() if v > 0} or "none")

# solver's-eye view: a formulation that forgot the decodability constraint
partial = frozenset({"power_budget", "qos_rate", "energy_harvest",
                     "unit_modulus", "ps_ratio_range"})
blind = evaluate(inst, action, enforced_kinds=partial)
print(f"\nsame action, training reward without the common-rate constraint: "
      f"{blind.enforced_score:.3f} (true score stays {blind.score:.3f})")

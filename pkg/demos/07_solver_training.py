"""Train the solver on the reference formulation vs the flawed one.

Uses a reduced iteration count to stay in demo territory; the full-size
comparison lives in `formulink compare` / the acceptance suite. The flawed
arm trains blind to the common-rate decodability constraint, and its true
score pays for it.
"""

import numpy as np

from formulink import TrainConfig, train
from formulink.formulation import ground_truth_formulation, manual_flawed_formulation
from formulink.ppo import held_out_instances, random_search_oracle

config = TrainConfig(iterations=60, seed=1)
held = held_out_instances()

print("training on the reference formulation (all six constraint kinds)...")
real = train(ground_truth_formulation(), config)
print(f"  curve: {real.curve[0]:.2f} -> {real.curve[-1]:.2f}  "
      f"final true score: {real.final_score:.3f}  ({real.wall_time:.0f}s)")

print("training on the flawed formulation (decodability constraint missing)...")
flawed = train(manual_flawed_formulation(), config)
print(f"  curve: {flawed.curve[0]:.2f} -> {flawed.curve[-1]:.2f}  "
      f"final true score: {flawed.final_score:.3f}  ({flawed.wall_time:.0f}s)")

print(f"\nreward terms used in training (flawed arm): "
      f"rsma_common_rate={flawed.training_violation_terms['rsma_common_rate']}")
oracle = random_search_oracle(held)
print(f"random-search reference on the same held-out set: {oracle:.3f}")
print(f"\nthe formulation gap is worth "
      f"{real.final_score - flawed.final_score:.2f} in delivered score")

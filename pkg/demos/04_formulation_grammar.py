"""Parse, canonicalize, and diff optimization formulations."""

from formulink import (
    diff,
    ground_truth_formulation,
    manual_flawed_formulation,
    parse_formulation,
    serialize,
)
from formulink.errors import UnknownKind

gt = ground_truth_formulation()
print(serialize(gt))

round_tripped = parse_formulation(serialize(gt))
print("\nround trip identical:", round_tripped == gt)

d = diff(manual_flawed_formulation(), gt)
print("\nhand-written variant vs reference:")
print("  missing kinds:   ", sorted(d.missing_kinds))
print("  extra kinds:     ", sorted(d.extra_kinds))
print("  variable drift:  ", sorted(d.variable_mismatches))
print("  objective match: ", d.objective_match)

bad = serialize(gt).replace("[power_budget]", "[thermal_budget]")
try:
    parse_formulation(bad)
except UnknownKind as exc:
    print(f"\nforeign constraint kind rejected: {exc}")

"""Run one scripted designer dialogue end to end and print the trace.

The happy-path setting (chunk size 2000, k=1) finishes in exactly four
rounds: requirements, scenario, objective, formulate.
"""

from formulink import build_index
from formulink.orchestrator import run_auto
from formulink.simworld import (
    generate_corpus,
    query_vocabulary,
    scripted_designer,
    scripted_profile,
)

doc, facts = generate_corpus(7)
index = build_index([doc], 2000)
outcome = run_auto(scripted_profile(), index, 1, scripted_designer,
                   vocabulary=query_vocabulary(facts), world=facts)

print(f"status={outcome.status} rounds={outcome.rounds} "
      f"knowledge units={outcome.kinds_collected}/6\n")
for entry in outcome.state.trace:
    retrieved = ", ".join(f"#{r['chunk']}@{r['score']:.3f}"
                          for r in entry["retrieved"]) or "-"
    print(f"round {entry['round']} [{entry['stage']:<20}] "
          f"prompt={entry['prompt_tokens']:>5} tok  retrieved: {retrieved}")

print("\nfinal reply block:")
text = outcome.formulation_text
print(text[text.index("BEGIN_FORMULATION"):])

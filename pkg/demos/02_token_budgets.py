"""Prompt assembly under a hard token budget.

Shows the separator arithmetic, the inclusive budget boundary, and the
explicit oversize error (retrieved context is never silently dropped).
"""

from formulink import ModelProfile, PromptBundle, assemble_prompt, complete
from formulink.errors import ContextOversize
from formulink.simworld import generate_corpus, query_vocabulary

_, facts = generate_corpus(7)
profile = ModelProfile(name="scripted-formulator", backend="scripted")
print(f"profile: context_limit={profile.context_limit} "
      f"reserve={profile.completion_reserve} -> budget={profile.prompt_budget}")

empty, count = assemble_prompt(PromptBundle())
print(f"\nempty bundle: {count} tokens (4 sections x 8-token separators)")

bundle = PromptBundle(
    system_text="Think step by step." + " pad" * 70,
    memory_digest="round 1 [SCENARIO]: hello | noted",
    retrieved=(("eval_corpus#4", "chunk text " * 400),
               ("eval_corpus#7", "other chunk " * 400)),
    user_turn="What constraints am I missing?",
)
flat, count = assemble_prompt(bundle)
print(f"two-chunk bundle: {count} declared tokens, flat text {len(flat)} chars")

ctx = {"stage": "REQUIREMENTS", "retrieved": [], "world": facts,
       "collected": [], "missing": list(query_vocabulary(facts))}
reply = complete(bundle, profile, ctx)
print(f"dispatched fine; reply starts: {reply.text.splitlines()[0][:60]}")

huge = PromptBundle(retrieved=tuple(
    (f"eval_corpus#{i}", "x" * 8000) for i in range(10)))  # 10 x 2000 tokens
try:
    complete(huge, profile, ctx)
except ContextOversize as exc:
    print(f"\n10 x 2000-token chunks: ContextOversize "
          f"(count={exc.token_count}, budget={exc.budget})")

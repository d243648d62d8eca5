"""Token-budgeted prompt assembly and the pluggable completion backend.

The gateway owns one hard guarantee: a prompt whose token count exceeds the
model's budget (context limit minus completion reserve) is never dispatched,
and nothing is ever silently dropped to make it fit. Oversize is always an
explicit error so budget failures stay observable.

Backends are looked up by name in a write-once registry. ``remote_http``
speaks a chat-completions wire protocol; the scripted backend used by the
offline evaluation world registers itself from the sim module.
"""

from __future__ import annotations

import json
import os
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .errors import (
    BackendUnavailable,
    ContextOversize,
    DuplicateBackend,
    MalformedReply,
    UnknownBackend,
)
from .textutil import count_tokens

DEFAULT_CONTEXT_LIMIT = 14000
DEFAULT_COMPLETION_RESERVE = 1000

# Each of the four prompt sections (system, memory, retrieved, user) costs one
# fixed separator; a non-empty retrieved section costs one extra marker.
SECTION_SEPARATOR_TOKENS = 8
_BASE_SECTIONS = 4

REMOTE_TIMEOUT_SECONDS = 60.0
REMOTE_MAX_ATTEMPTS = 3
REMOTE_RETRY_SPACING_SECONDS = 1.0


@dataclass(frozen=True)
class ModelProfile:
    name: str
    context_limit: int = DEFAULT_CONTEXT_LIMIT
    completion_reserve: int = DEFAULT_COMPLETION_RESERVE
    backend: str = "scripted"

    def __post_init__(self):
        if self.prompt_budget <= 0:
            raise ValueError("context_limit must exceed completion_reserve")

    @property
    def prompt_budget(self) -> int:
        return self.context_limit - self.completion_reserve


@dataclass(frozen=True)
class PromptBundle:
    """The four prompt sections, kept separate until assembly.

    ``retrieved`` holds (label, text) pairs in retrieval order; the label is
    the chunk's doc/index identifier and is prefixed to the text on assembly.
    """

    system_text: str = ""
    memory_digest: str = ""
    retrieved: Sequence[tuple[str, str]] = ()
    user_turn: str = ""


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int
    backend_name: str


def assemble_prompt(bundle: PromptBundle) -> tuple[str, int]:
    """Flatten the bundle and return (text, declared token count).

    The declared count is the sum of the section token counts plus the fixed
    separator costs; it is what the budget check uses. The flat text tracks
    it to within one separator per part (checked by the re-tokenization
    tests), so nothing material can hide in the framing.
    """
    parts = [
        "[system]\n" + bundle.system_text,
        "\n\n[memory]\n" + bundle.memory_digest,
        "\n\n[retrieved]\n",
        "\n\n[user]\n" + bundle.user_turn,
    ]
    chunk_lines = "".join(f"<{label}>\n{text}\n" for label, text in bundle.retrieved)
    flat = parts[0] + parts[1] + parts[2] + chunk_lines + parts[3]

    count = (
        count_tokens(bundle.system_text)
        + count_tokens(bundle.memory_digest)
        + sum(count_tokens(text) for _, text in bundle.retrieved)
        + count_tokens(bundle.user_turn)
        + SECTION_SEPARATOR_TOKENS * _BASE_SECTIONS
        + (SECTION_SEPARATOR_TOKENS if bundle.retrieved else 0)
    )
    return flat, count


# --- backend registry ---------------------------------------------------------

BackendFn = Callable[..., str]  # (prompt, bundle, profile, script_context) -> reply text

_REGISTRY: dict[str, BackendFn] = {}


def register_backend(name: str, backend: BackendFn) -> None:
    if name in _REGISTRY:
        raise DuplicateBackend(f"backend {name!r} already registered")
    _REGISTRY[name] = backend


def registered_backends() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def _reset_registry_for_tests() -> None:
    _REGISTRY.clear()
    _register_builtins()


def complete(bundle: PromptBundle, profile: ModelProfile,
             script_context: dict[str, Any] | None = None) -> Completion:
    """Assemble, budget-check, and dispatch. Boundary case (count == budget) dispatches."""
    flat, count = assemble_prompt(bundle)
    budget = profile.prompt_budget
    if count > budget:
        raise ContextOversize(count, budget)
    try:
        backend = _REGISTRY[profile.backend]
    except KeyError:
        raise UnknownBackend(f"no backend named {profile.backend!r}") from None
    reply = backend(flat, bundle=bundle, profile=profile, script_context=script_context)
    if not isinstance(reply, str):
        raise MalformedReply(f"backend {profile.backend!r} returned {type(reply).__name__}, not str")
    return Completion(
        text=reply,
        prompt_tokens=count,
        completion_tokens=count_tokens(reply),
        backend_name=profile.backend,
    )


# --- remote HTTP backend --------------------------------------------------------

def _remote_http_backend(prompt: str, *, bundle: PromptBundle, profile: ModelProfile,
                         script_context: dict[str, Any] | None = None) -> str:
    base = os.environ.get("FORMULINK_API_BASE")
    if not base:
        raise BackendUnavailable("remote_http", 0, "FORMULINK_API_BASE is not set")
    url = base.rstrip("/") + "/v1/chat/completions"
    messages = []
    if bundle.system_text:
        messages.append({"role": "system", "content": bundle.system_text})
    messages.append({"role": "user", "content": prompt})
    body = json.dumps({
        "model": profile.name,
        "messages": messages,
        "temperature": 0,
    }).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get("FORMULINK_API_KEY")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_error = "unknown"
    for attempt in range(1, REMOTE_MAX_ATTEMPTS + 1):
        try:
            req = urllib.request.Request(url, data=body, headers=headers, method="POST")
            with urllib.request.urlopen(req, timeout=REMOTE_TIMEOUT_SECONDS) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
            try:
                text = payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise MalformedReply(f"remote reply missing choices[0].message.content: {payload!r}")
            if not isinstance(text, str):
                raise MalformedReply("remote reply content is not a string")
            return text
        except MalformedReply:
            raise
        except (urllib.error.URLError, OSError, json.JSONDecodeError, TimeoutError) as exc:
            last_error = str(exc)
            if attempt < REMOTE_MAX_ATTEMPTS:
                time.sleep(REMOTE_RETRY_SPACING_SECONDS)
    raise BackendUnavailable("remote_http", REMOTE_MAX_ATTEMPTS, last_error)


def _register_builtins() -> None:
    register_backend("remote_http", _remote_http_backend)


_register_builtins()

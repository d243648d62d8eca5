"""Retrieval-assisted optimization-problem formulation workbench.

A knowledge base with deterministic embeddings feeds a staged designer
dialogue that produces structured problem formulations; a RIS-assisted
SWIPT downlink simulator and a policy-gradient solver measure what a
formulation's quality is worth in delivered performance.
"""

from . import simworld as _simworld  # registers the scripted backend
from .formulation import (
    CONSTRAINT_KIND_CATALOG,
    FormulationDiff,
    OptimizationFormulation,
    diff,
    ground_truth_formulation,
    manual_flawed_formulation,
    parse_formulation,
    serialize,
)
from .gateway import Completion, ModelProfile, PromptBundle, assemble_prompt, complete, register_backend
from .knowledge import (
    Chunk,
    Document,
    KnowledgeIndex,
    build_index,
    embed,
    load_corpus,
    load_index,
    retrieve,
    save_index,
    split_into_chunks,
    write_corpus,
)
from .memory import MemoryRecord, SessionMemory
from .netenv import (
    ActionVector,
    EvalReport,
    NetworkInstance,
    effective_channel,
    evaluate,
    project_power,
    sample_instance,
)
from .orchestrator import SessionState, advance, run_auto, start_session
from .ppo import PolicyState, SolveReport, TrainConfig, evaluate_policy, map_action, train
from .textutil import count_tokens

__version__ = "0.1.0"

__all__ = [
    "CONSTRAINT_KIND_CATALOG",
    "ActionVector",
    "Chunk",
    "Completion",
    "Document",
    "EvalReport",
    "FormulationDiff",
    "KnowledgeIndex",
    "MemoryRecord",
    "ModelProfile",
    "NetworkInstance",
    "OptimizationFormulation",
    "PolicyState",
    "PromptBundle",
    "SessionMemory",
    "SessionState",
    "SolveReport",
    "TrainConfig",
    "advance",
    "assemble_prompt",
    "build_index",
    "complete",
    "count_tokens",
    "diff",
    "effective_channel",
    "embed",
    "evaluate",
    "evaluate_policy",
    "ground_truth_formulation",
    "load_corpus",
    "load_index",
    "manual_flawed_formulation",
    "map_action",
    "parse_formulation",
    "project_power",
    "register_backend",
    "retrieve",
    "run_auto",
    "sample_instance",
    "save_index",
    "serialize",
    "split_into_chunks",
    "start_session",
    "train",
    "write_corpus",
]

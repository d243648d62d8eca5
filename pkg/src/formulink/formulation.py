"""Structured optimization-problem formulations and their wire grammar.

The exchange format is a line-oriented block:

    BEGIN_FORMULATION
    # comments start with '#'
    VAR name : domain [shape] "description"
    MAX name := expression        (or MIN)
    S.T. name[kind] : expression
    END_FORMULATION

Domains are one of ``complex``, ``real-nonneg``, ``real-in[a,b]``,
``angle-in[0,2pi)``; shapes one of ``scalar``, ``vector(n)``,
``indexed-by(set)``. Constraint kinds must come from the registered
catalog. Expressions are opaque text (no '#'); equivalence between
formulations is decided at the kind/name level, not symbolically.

Constructed formulations are canonicalized on creation: variables keep
declaration order, constraints sort by catalog order then name. That makes
``parse(serialize(f)) == f`` a plain equality.

``ConstraintDecl.index_set`` is programmatic metadata (validated against the
declared indexed-by sets) and is not part of the wire grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    FormulationSyntaxError,
    MultipleBlocks,
    NoBlock,
    UnknownKind,
)

CONSTRAINT_KIND_CATALOG: tuple[str, ...] = (
    "power_budget",
    "qos_rate",
    "energy_harvest",
    "rsma_common_rate",
    "unit_modulus",
    "ps_ratio_range",
)

BLOCK_BEGIN = "BEGIN_FORMULATION"
BLOCK_END = "END_FORMULATION"

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_NUM = r"-?\d+(?:\.\d+)?"

_IDENT_RE = re.compile(rf"^{_IDENT}$")
_DOMAIN_RE = re.compile(
    rf"^(?:complex|real-nonneg|real-in\[{_NUM},{_NUM}\]|angle-in\[0,2pi\))$"
)
_SHAPE_RE = re.compile(rf"^(?:scalar|vector\([1-9]\d*\)|indexed-by\({_IDENT}\))$")

_VAR_RE = re.compile(
    rf"^VAR\s+({_IDENT})\s*:\s*(\S+)\s*\[([^\]]+)\]\s*\"([^\"]*)\"\s*$"
)
_OBJ_RE = re.compile(rf"^(MAX|MIN)\s+({_IDENT})\s*:=\s*(.+)$")
_ST_RE = re.compile(rf"^S\.T\.\s+({_IDENT})\[({_IDENT})\]\s*:\s*(.+)$")


@dataclass(frozen=True)
class VariableDecl:
    name: str
    domain: str
    shape: str
    description: str

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")
        if not _DOMAIN_RE.match(self.domain):
            raise ValueError(f"invalid domain {self.domain!r}")
        if not _SHAPE_RE.match(self.shape):
            raise ValueError(f"invalid shape {self.shape!r}")
        if '"' in self.description or "\n" in self.description:
            raise ValueError("description may not contain quotes or newlines")

    @property
    def index_set(self) -> str | None:
        if self.shape.startswith("indexed-by("):
            return self.shape[len("indexed-by("):-1]
        return None


@dataclass(frozen=True)
class ConstraintDecl:
    name: str
    kind: str
    expression: str
    index_set: str | None = None

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid constraint name {self.name!r}")
        if self.kind not in CONSTRAINT_KIND_CATALOG:
            raise UnknownKind(self.kind)
        expr = self.expression.strip()
        if not expr or "#" in expr or "\n" in expr:
            raise ValueError("expression must be non-empty, single-line, without '#'")
        object.__setattr__(self, "expression", expr)


@dataclass(frozen=True)
class Objective:
    name: str
    expression: str

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid objective name {self.name!r}")
        expr = self.expression.strip()
        if not expr or "#" in expr or "\n" in expr:
            raise ValueError("expression must be non-empty, single-line, without '#'")
        object.__setattr__(self, "expression", expr)


@dataclass(frozen=True)
class OptimizationFormulation:
    variables: tuple[VariableDecl, ...]
    sense: str  # "MAX" | "MIN"
    objective: Objective
    constraints: tuple[ConstraintDecl, ...]

    def __post_init__(self):
        if self.sense not in ("MAX", "MIN"):
            raise ValueError(f"sense must be MAX or MIN, got {self.sense!r}")
        names = [v.name for v in self.variables]
        if len(names) != len(set(names)):
            raise ValueError("variable names must be unique")
        cnames = [c.name for c in self.constraints]
        if len(cnames) != len(set(cnames)):
            raise ValueError("constraint names must be unique")
        declared_sets = {v.index_set for v in self.variables if v.index_set}
        for c in self.constraints:
            if c.index_set is not None and c.index_set not in declared_sets:
                raise ValueError(
                    f"constraint {c.name!r} references undeclared index set {c.index_set!r}"
                )
        # canonical order: catalog position, then name
        ordered = tuple(sorted(
            self.constraints,
            key=lambda c: (CONSTRAINT_KIND_CATALOG.index(c.kind), c.name),
        ))
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", ordered)

    @property
    def kinds(self) -> frozenset[str]:
        return frozenset(c.kind for c in self.constraints)

    @property
    def variable_names(self) -> frozenset[str]:
        return frozenset(v.name for v in self.variables)


@dataclass(frozen=True)
class FormulationDiff:
    missing_kinds: frozenset[str]
    extra_kinds: frozenset[str]
    variable_mismatches: frozenset[str]
    objective_match: bool

    @property
    def empty(self) -> bool:
        return (not self.missing_kinds and not self.extra_kinds
                and not self.variable_mismatches and self.objective_match)


def diff(candidate: OptimizationFormulation,
         reference: OptimizationFormulation) -> FormulationDiff:
    """Kind-level and name-level set differences; no symbolic comparison."""
    return FormulationDiff(
        missing_kinds=frozenset(reference.kinds - candidate.kinds),
        extra_kinds=frozenset(candidate.kinds - reference.kinds),
        variable_mismatches=frozenset(candidate.variable_names ^ reference.variable_names),
        objective_match=(candidate.sense == reference.sense
                         and candidate.objective.name == reference.objective.name),
    )


# --- parsing -----------------------------------------------------------------

def extract_block(text: str) -> tuple[list[str], int]:
    """Return the lines between the (single) BEGIN/END markers and the
    1-based line offset of the first content line."""
    lines = text.split("\n")
    begins = [i for i, ln in enumerate(lines) if ln.strip() == BLOCK_BEGIN]
    ends = [i for i, ln in enumerate(lines) if ln.strip() == BLOCK_END]
    if len(begins) > 1 or len(ends) > 1:
        raise MultipleBlocks(f"{len(begins)} begin / {len(ends)} end markers")
    if not begins or not ends or ends[0] < begins[0]:
        raise NoBlock("no BEGIN_FORMULATION/END_FORMULATION block found")
    return lines[begins[0] + 1:ends[0]], begins[0] + 2


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def _fail(lineno: int, line: str, matched_prefix: re.Match | None, expected: str):
    column = (matched_prefix.end() + 1) if matched_prefix else 1
    raise FormulationSyntaxError(lineno, min(column, len(line) + 1), expected)


def parse_formulation(text: str) -> OptimizationFormulation:
    """Parse the single formulation block inside ``text``.

    Total on the grammar; everything else is rejected with a
    position-bearing error.
    """
    block, offset = extract_block(text)
    variables: list[VariableDecl] = []
    constraints: list[ConstraintDecl] = []
    objective: Objective | None = None
    sense: str | None = None

    for i, raw in enumerate(block):
        lineno = offset + i
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("VAR"):
            m = _VAR_RE.match(stripped)
            if not m:
                _fail(lineno, stripped, re.match(r"^VAR\s+", stripped),
                      'VAR name : domain [shape] "description"')
            name, domain, shape, desc = m.groups()
            if not _DOMAIN_RE.match(domain):
                _fail(lineno, stripped, re.match(rf"^VAR\s+{_IDENT}\s*:\s*", stripped),
                      "a domain (complex | real-nonneg | real-in[a,b] | angle-in[0,2pi))")
            if not _SHAPE_RE.match(shape):
                _fail(lineno, stripped, re.match(rf"^VAR\s+{_IDENT}\s*:\s*\S+\s*\[", stripped),
                      "a shape (scalar | vector(n) | indexed-by(set))")
            try:
                variables.append(VariableDecl(name, domain, shape, desc))
            except ValueError as exc:
                raise FormulationSyntaxError(lineno, 1, str(exc)) from None
        elif stripped.startswith(("MAX", "MIN")):
            m = _OBJ_RE.match(stripped)
            if not m:
                _fail(lineno, stripped, re.match(r"^(MAX|MIN)\s+", stripped),
                      "MAX|MIN name := expression")
            if objective is not None:
                raise FormulationSyntaxError(lineno, 1, "a single objective per formulation")
            sense = m.group(1)
            try:
                objective = Objective(m.group(2), m.group(3))
            except ValueError as exc:
                raise FormulationSyntaxError(lineno, 1, str(exc)) from None
        elif stripped.startswith("S.T."):
            m = _ST_RE.match(stripped)
            if not m:
                _fail(lineno, stripped, re.match(r"^S\.T\.\s+", stripped),
                      "S.T. name[kind] : expression")
            name, kind, expr = m.groups()
            if kind not in CONSTRAINT_KIND_CATALOG:
                raise UnknownKind(kind)
            try:
                constraints.append(ConstraintDecl(name, kind, expr))
            except ValueError as exc:
                raise FormulationSyntaxError(lineno, 1, str(exc)) from None
        else:
            raise FormulationSyntaxError(
                lineno, 1, "a VAR, MAX, MIN, or S.T. record"
            )

    if objective is None or sense is None:
        raise FormulationSyntaxError(
            offset + len(block), 1, "an objective (MAX or MIN) record"
        )
    try:
        return OptimizationFormulation(
            variables=tuple(variables),
            sense=sense,
            objective=objective,
            constraints=tuple(constraints),
        )
    except ValueError as exc:
        raise FormulationSyntaxError(offset, 1, str(exc)) from None


def serialize(f: OptimizationFormulation) -> str:
    """Canonical text form; ``parse_formulation(serialize(f)) == f``."""
    lines = [BLOCK_BEGIN]
    for v in f.variables:
        lines.append(f'VAR {v.name} : {v.domain} [{v.shape}] "{v.description}"')
    lines.append(f"{f.sense} {f.objective.name} := {f.objective.expression}")
    for c in f.constraints:
        lines.append(f"S.T. {c.name}[{c.kind}] : {c.expression}")
    lines.append(BLOCK_END)
    return "\n".join(lines)


def contains_single_block(text: str) -> bool:
    try:
        extract_block(text)
        return True
    except (NoBlock, MultipleBlocks):
        return False


def formulation_to_json(f: OptimizationFormulation) -> dict:
    return {
        "variables": [
            {"name": v.name, "domain": v.domain, "shape": v.shape,
             "description": v.description}
            for v in f.variables
        ],
        "sense": f.sense,
        "objective": {"name": f.objective.name, "expression": f.objective.expression},
        "constraints": [
            {"name": c.name, "kind": c.kind, "expression": c.expression}
            for c in f.constraints
        ],
        "text": serialize(f),
    }


def diff_to_json(d: FormulationDiff) -> dict:
    return {
        "missing_kinds": sorted(d.missing_kinds),
        "extra_kinds": sorted(d.extra_kinds),
        "variable_mismatches": sorted(d.variable_mismatches),
        "objective_match": d.objective_match,
    }


# --- reference formulations ----------------------------------------------------
# The full six-kind formulation for the two-user RIS-assisted SWIPT downlink
# with rate splitting, and the flawed hand-written variant that forgets the
# common-rate decodability constraint.

_REFERENCE_VARIABLES: tuple[VariableDecl, ...] = (
    VariableDecl("w_c", "complex", "vector(4)", "common-stream transmit precoder"),
    VariableDecl("w_k", "complex", "indexed-by(users)", "per-user private precoders"),
    VariableDecl("rho_k", "real-in[0,1]", "indexed-by(users)", "power-splitting ratio (decoding share)"),
    VariableDecl("theta_m", "angle-in[0,2pi)", "indexed-by(ris_elements)", "RIS phase shifts"),
    VariableDecl("c_k", "real-nonneg", "indexed-by(users)", "common-rate shares"),
)

_REFERENCE_CONSTRAINTS: dict[str, ConstraintDecl] = {
    "power_budget": ConstraintDecl(
        "power_cap", "power_budget",
        "norm(w_c)^2 + sum_k norm(w_k)^2 <= P_max"),
    "qos_rate": ConstraintDecl(
        "qos_floor", "qos_rate",
        "R_k + c_k >= R_min for each user k"),
    "energy_harvest": ConstraintDecl(
        "harvest_floor", "energy_harvest",
        "eta * (1 - rho_k) * P_rx_k >= E_min for each user k"),
    "rsma_common_rate": ConstraintDecl(
        "common_decodable", "rsma_common_rate",
        "sum_k c_k <= min_k R_c_k"),
    "unit_modulus": ConstraintDecl(
        "ris_modulus", "unit_modulus",
        "|exp(j * theta_m)| = 1 for each element m"),
    "ps_ratio_range": ConstraintDecl(
        "split_range", "ps_ratio_range",
        "0 <= rho_k <= 1 for each user k"),
}

_REFERENCE_OBJECTIVE = Objective(
    "EE", "(sum_k c_k + sum_k R_k) / (P_tx / xi + P_c)")


def reference_formulation(kinds=CONSTRAINT_KIND_CATALOG) -> OptimizationFormulation:
    """Build the reference formulation restricted to ``kinds``."""
    return OptimizationFormulation(
        variables=_REFERENCE_VARIABLES,
        sense="MAX",
        objective=_REFERENCE_OBJECTIVE,
        constraints=tuple(_REFERENCE_CONSTRAINTS[k] for k in CONSTRAINT_KIND_CATALOG
                          if k in set(kinds)),
    )


def ground_truth_formulation() -> OptimizationFormulation:
    return reference_formulation()


def manual_flawed_formulation() -> OptimizationFormulation:
    """The hand-modeled variant that omits the RSMA decodability constraint."""
    return reference_formulation(
        [k for k in CONSTRAINT_KIND_CATALOG if k != "rsma_common_rate"])


def minimal_formulation() -> OptimizationFormulation:
    return OptimizationFormulation(
        variables=(VariableDecl("p", "real-nonneg", "scalar", "transmit power"),),
        sense="MIN",
        objective=Objective("pwr", "p"),
        constraints=(ConstraintDecl("cap", "power_budget", "p <= P_max"),),
    )

"""Staged training-manifest construction and the trainer-adapter contract.

Every training input starts with its task prefix token and carries segment
markers in the fixed order article -> aspects -> triples. Manifests are the
interface external seq2seq trainers consume: JSON Lines of examples plus a
sidecar of stage metadata and loss weights. No gradients live here.
"""

from __future__ import annotations

import enum
import hashlib
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DecodeFailure,
    MissingRationale,
    ReservedTokenCollision,
    StageOrderViolation,
)
from .rationale import (
    Document,
    Rationale,
    parse_rationale,
    serialize_aspects,
    serialize_rationale,
    serialize_triples,
)


class TaskKind(enum.Enum):
    ASP_EXT = "AspExt"
    TRI_EXT = "TriExt"
    SUM_GEN = "SumGen"
    RAT_GEN = "RatGen"

    @property
    def prefix(self) -> str:
        return f"<{self.value}>"


ARTICLE_TOKEN = "<article>"
ASPECTS_TOKEN = "<aspects>"
TRIPLES_TOKEN = "<triples>"
SUMMARY_TOKEN = "<summary>"

SEGMENT_TOKENS = (ARTICLE_TOKEN, ASPECTS_TOKEN, TRIPLES_TOKEN, SUMMARY_TOKEN)
RESERVED_TOKENS = tuple(t.prefix for t in TaskKind) + SEGMENT_TOKENS

PROVENANCE_GOLDEN = "golden"
PROVENANCE_MODEL = "model"


def find_reserved_token(text: str) -> str | None:
    """First reserved token occurring in the text, or None."""
    for token in RESERVED_TOKENS:
        if token in text:
            return token
    return None


class Stage(enum.Enum):
    SINGULAR_ASPECT = "singular_aspect"
    SINGULAR_TRIPLE = "singular_triple"
    SINGULAR_SUMMARY = "singular_summary"
    CONCURRENT_EARLY = "concurrent_early"
    CONCURRENT_LATE = "concurrent_late"
    JOINT = "joint"


CANONICAL_STAGE_ORDER = (
    Stage.SINGULAR_ASPECT,
    Stage.SINGULAR_TRIPLE,
    Stage.SINGULAR_SUMMARY,
    Stage.CONCURRENT_EARLY,
    Stage.CONCURRENT_LATE,
    Stage.JOINT,
)


@dataclass(frozen=True)
class TrainingExample:
    task: TaskKind
    input: str
    target: str
    document_id: str
    loss_weight: float = 1.0
    provenance: str = PROVENANCE_GOLDEN

    def __post_init__(self):
        if not self.input.startswith(self.task.prefix):
            raise ValueError(f"input must begin with {self.task.prefix}")
        if self.loss_weight <= 0:
            raise ValueError("loss_weight must be positive")
        positions = [
            self.input.find(tok) for tok in (ARTICLE_TOKEN, ASPECTS_TOKEN, TRIPLES_TOKEN)
        ]
        present = [p for p in positions if p >= 0]
        if positions[0] < 0:
            raise ValueError(f"input must contain {ARTICLE_TOKEN}")
        if present != sorted(present):
            raise ValueError("segment markers out of canonical order")


@dataclass(frozen=True)
class SkipRecord:
    document_id: str
    reason: str


@dataclass(frozen=True)
class StageManifest:
    stage: Stage
    examples: tuple[TrainingExample, ...]
    loss_config: dict[str, float] = field(default_factory=dict)
    skipped: tuple[SkipRecord, ...] = ()

    def to_jsonl(self) -> str:
        lines = []
        for ex in self.examples:
            lines.append(
                json.dumps(
                    {
                        "stage": self.stage.value,
                        "task": ex.task.value,
                        "input": ex.input,
                        "target": ex.target,
                        "loss_weight": ex.loss_weight,
                        "document_id": ex.document_id,
                        "provenance": ex.provenance,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()

    def meta(self) -> dict:
        return {
            "stage": self.stage.value,
            "example_count": len(self.examples),
            "loss_config": self.loss_config,
            "digest": self.digest(),
            "skipped": [{"document_id": s.document_id, "reason": s.reason} for s in self.skipped],
        }


class TrainerAdapter(ABC):
    """What an external trainer must provide to participate in the curriculum."""

    @abstractmethod
    def train(self, manifest: StageManifest) -> dict:
        """Consume one stage manifest; return a metrics mapping."""

    @abstractmethod
    def greedy_decode(self, task: TaskKind, input: str) -> str:
        """Deterministic decode for a fixed trained state."""


Pair = tuple[Document, Rationale]


def _check_pair(d: Document, r: Rationale | None) -> Rationale:
    if r is None:
        raise MissingRationale(f"document {d.id} has no golden rationale")
    # Ingestion rejects reserved tokens, but library callers can bypass it;
    # a collision here would make segment boundaries ambiguous.
    for label, text in (
        ("document text", d.text),
        ("ground-truth summary", d.ground_truth_summary),
        ("rationale", serialize_rationale(r)),
    ):
        token = find_reserved_token(text)
        if token is not None:
            raise ReservedTokenCollision(
                f"{label} of document {d.id} contains reserved token {token}"
            )
    return r


def _aspext_input(d: Document) -> str:
    return f"{TaskKind.ASP_EXT.prefix} {ARTICLE_TOKEN} {d.text}"


def _triext_input(d: Document, aspects_segment: str) -> str:
    return f"{TaskKind.TRI_EXT.prefix} {ARTICLE_TOKEN} {d.text} {ASPECTS_TOKEN} {aspects_segment}"


def _sumgen_input(d: Document, aspects_segment: str, triples_segment: str) -> str:
    return (
        f"{TaskKind.SUM_GEN.prefix} {ARTICLE_TOKEN} {d.text} "
        f"{ASPECTS_TOKEN} {aspects_segment} {TRIPLES_TOKEN} {triples_segment}"
    )


def _ratgen_input(d: Document) -> str:
    return f"{TaskKind.RAT_GEN.prefix} {ARTICLE_TOKEN} {d.text}"


def build_singular_manifests(
    pairs: list[Pair],
) -> tuple[StageManifest, StageManifest, StageManifest]:
    """One manifest per singular task: aspects from D, triples from (D, A*),
    summary from (D, A*, T*)."""
    aspect_examples = []
    triple_examples = []
    summary_examples = []
    for d, r in pairs:
        r = _check_pair(d, r)
        aspects_segment = serialize_aspects(r.aspects)
        triples_segment = serialize_triples(r.triples)
        aspect_examples.append(
            TrainingExample(TaskKind.ASP_EXT, _aspext_input(d), aspects_segment, d.id)
        )
        triple_examples.append(
            TrainingExample(TaskKind.TRI_EXT, _triext_input(d, aspects_segment), triples_segment, d.id)
        )
        summary_examples.append(
            TrainingExample(
                TaskKind.SUM_GEN,
                _sumgen_input(d, aspects_segment, triples_segment),
                d.ground_truth_summary,
                d.id,
            )
        )
    return (
        StageManifest(Stage.SINGULAR_ASPECT, tuple(aspect_examples)),
        StageManifest(Stage.SINGULAR_TRIPLE, tuple(triple_examples)),
        StageManifest(Stage.SINGULAR_SUMMARY, tuple(summary_examples)),
    )


def build_concurrent_early_manifest(pairs: list[Pair]) -> StageManifest:
    """All three tasks per document, every conditioning segment teacher-forced
    from the golden rationale."""
    examples = []
    for d, r in pairs:
        r = _check_pair(d, r)
        aspects_segment = serialize_aspects(r.aspects)
        triples_segment = serialize_triples(r.triples)
        examples.append(
            TrainingExample(TaskKind.ASP_EXT, _aspext_input(d), aspects_segment, d.id)
        )
        examples.append(
            TrainingExample(TaskKind.TRI_EXT, _triext_input(d, aspects_segment), triples_segment, d.id)
        )
        examples.append(
            TrainingExample(
                TaskKind.SUM_GEN,
                _sumgen_input(d, aspects_segment, triples_segment),
                d.ground_truth_summary,
                d.id,
            )
        )
    return StageManifest(Stage.CONCURRENT_EARLY, tuple(examples))


def build_concurrent_late_manifest(pairs: list[Pair], adapter: TrainerAdapter) -> StageManifest:
    """Cascading self-guided construction.

    The adapter greedy-decodes aspects from the document and triples from the
    document plus its own aspects (exactly two decode calls per document);
    those outputs become conditioning segments verbatim, while targets stay
    golden. Documents whose decode fails are skipped with an audit entry.
    """
    examples = []
    skipped = []
    for d, r in pairs:
        r = _check_pair(d, r)
        aspects_segment = serialize_aspects(r.aspects)
        triples_segment = serialize_triples(r.triples)
        try:
            decoded_aspects = adapter.greedy_decode(TaskKind.ASP_EXT, _aspext_input(d))
            decoded_triples = adapter.greedy_decode(
                TaskKind.TRI_EXT, _triext_input(d, decoded_aspects)
            )
            for decoded in (decoded_aspects, decoded_triples):
                token = find_reserved_token(decoded)
                if token is not None:
                    raise DecodeFailure(f"decode output contains reserved token {token}")
        except DecodeFailure as exc:
            skipped.append(SkipRecord(d.id, str(exc)))
            continue
        examples.append(
            TrainingExample(
                TaskKind.ASP_EXT, _aspext_input(d), aspects_segment, d.id,
                provenance=PROVENANCE_MODEL,
            )
        )
        examples.append(
            TrainingExample(
                TaskKind.TRI_EXT, _triext_input(d, decoded_aspects), triples_segment, d.id,
                provenance=PROVENANCE_MODEL,
            )
        )
        examples.append(
            TrainingExample(
                TaskKind.SUM_GEN,
                _sumgen_input(d, decoded_aspects, decoded_triples),
                d.ground_truth_summary,
                d.id,
                provenance=PROVENANCE_MODEL,
            )
        )
    return StageManifest(Stage.CONCURRENT_LATE, tuple(examples), skipped=tuple(skipped))


def build_joint_manifest(
    pairs: list[Pair],
    lambda_rationale: float = 0.8,
    lambda_summary: float = 1.2,
) -> StageManifest:
    """One rationale-summary example per document; a single encode-decode pair."""
    examples = []
    for d, r in pairs:
        r = _check_pair(d, r)
        target = f"{serialize_rationale(r)} {SUMMARY_TOKEN} {d.ground_truth_summary}"
        examples.append(TrainingExample(TaskKind.RAT_GEN, _ratgen_input(d), target, d.id))
    return StageManifest(
        Stage.JOINT,
        tuple(examples),
        loss_config={"rationale": lambda_rationale, "summary": lambda_summary},
    )


def split_joint_target(target: str) -> tuple[Rationale, str]:
    """Invert a joint-stage target back into (rationale, summary)."""
    marker = f" {SUMMARY_TOKEN} "
    head, sep, tail = target.partition(marker)
    if not sep:
        raise ValueError(f"target has no {SUMMARY_TOKEN} marker")
    return parse_rationale(head), tail


def article_segment(input: str) -> str:
    """The verbatim document text embedded in a training input."""
    start = input.find(ARTICLE_TOKEN)
    if start < 0:
        raise ValueError(f"input has no {ARTICLE_TOKEN} segment")
    start += len(ARTICLE_TOKEN) + 1
    ends = [
        p
        for p in (input.find(ASPECTS_TOKEN, start), input.find(TRIPLES_TOKEN, start))
        if p >= 0
    ]
    if not ends:
        return input[start:]
    # Builders join segments with exactly one space, so drop only that one.
    return input[start : min(ends) - 1]


@dataclass(frozen=True)
class CurriculumPlan:
    stages: tuple[Stage, ...] = CANONICAL_STAGE_ORDER
    override_stage_order: bool = False


@dataclass(frozen=True)
class StageRun:
    stage: Stage
    digest: str
    example_count: int
    metrics: dict


@dataclass(frozen=True)
class CurriculumReport:
    stages: tuple[StageRun, ...]

    def to_json(self) -> dict:
        return {
            "stages": [
                {
                    "stage": run.stage.value,
                    "digest": run.digest,
                    "example_count": run.example_count,
                    "metrics": run.metrics,
                }
                for run in self.stages
            ]
        }


def _validate_plan(plan: CurriculumPlan) -> None:
    if not plan.stages:
        raise StageOrderViolation("plan has no stages")
    ranks = []
    for stage in plan.stages:
        ranks.append(CANONICAL_STAGE_ORDER.index(stage))
    if ranks != sorted(set(ranks)):
        raise StageOrderViolation("stages must follow the canonical order without repeats")
    if not plan.override_stage_order and ranks != list(range(len(ranks))):
        first_missing = next(i for i in range(len(CANONICAL_STAGE_ORDER)) if i not in ranks)
        raise StageOrderViolation(
            f"plan skips prerequisite stage {CANONICAL_STAGE_ORDER[first_missing].value}; "
            "pass the override flag to run anyway"
        )


def _build_stage(stage: Stage, pairs: list[Pair], adapter: TrainerAdapter) -> StageManifest:
    if stage is Stage.SINGULAR_ASPECT:
        return build_singular_manifests(pairs)[0]
    if stage is Stage.SINGULAR_TRIPLE:
        return build_singular_manifests(pairs)[1]
    if stage is Stage.SINGULAR_SUMMARY:
        return build_singular_manifests(pairs)[2]
    if stage is Stage.CONCURRENT_EARLY:
        return build_concurrent_early_manifest(pairs)
    if stage is Stage.CONCURRENT_LATE:
        return build_concurrent_late_manifest(pairs, adapter)
    return build_joint_manifest(pairs)


def run_curriculum(
    plan: CurriculumPlan,
    pairs: list[Pair],
    adapter: TrainerAdapter,
    on_manifest=None,
    checkpoint_path: Path | None = None,
    checkpoint_key: str = "",
) -> CurriculumReport:
    """Execute plan stages strictly in order, training the adapter on each.

    After every stage the checkpoint file (when given) is rewritten with the
    completed stages, so an aborted run can resume without redoing work. A
    checkpoint written under a different checkpoint_key is ignored.
    """
    _validate_plan(plan)

    completed: dict[str, dict] = {}
    if checkpoint_path is not None and Path(checkpoint_path).exists():
        state = json.loads(Path(checkpoint_path).read_text(encoding="utf-8"))
        if state.get("key") == checkpoint_key:
            completed = state.get("entries", {})

    runs: list[StageRun] = []
    for stage in plan.stages:
        if stage.value in completed:
            entry = completed[stage.value]
            runs.append(
                StageRun(stage, entry["digest"], entry["example_count"], entry["metrics"])
            )
            continue
        manifest = _build_stage(stage, pairs, adapter)
        if on_manifest is not None:
            on_manifest(manifest)
        metrics = adapter.train(manifest)
        run = StageRun(stage, manifest.digest(), len(manifest.examples), metrics)
        runs.append(run)
        completed[stage.value] = {
            "digest": run.digest,
            "example_count": run.example_count,
            "metrics": run.metrics,
        }
        if checkpoint_path is not None:
            path = Path(checkpoint_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(
                json.dumps({"key": checkpoint_key, "entries": completed}, sort_keys=True),
                encoding="utf-8",
            )
    return CurriculumReport(tuple(runs))

"""Scoring generated policy maps against ground truth.

Two views, following the two failure modes of document-to-tool mapping:

* reference level: precision/recall/F1 over detected reference spans,
  matched one-to-one by token overlap or containment;
* policy level: a fuzzy Rand index over the grouping of references into
  policy items, computed on the references common to both sides.
  Multi-membership is allowed, so per-pair co-membership is the Jaccard
  similarity of label sets and pair agreement is one minus the absolute
  difference of the two sides' similarities.

A small common-reference intersection can make the grouping score look
perfect while recall is near zero; reports therefore always carry both
numbers side by side.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .document import normalize
from .policy import PolicyMap

DEFAULT_THRESHOLD = 0.6


@dataclass(frozen=True)
class ReferenceSet:
    """Ordered, deduplicated, normalized reference strings of one tool."""

    tool: str
    refs: tuple[str, ...]

    @staticmethod
    def build(tool: str, raw_refs) -> "ReferenceSet":
        seen: dict[str, None] = {}
        for r in raw_refs:
            n = normalize(r)
            if n:
                seen.setdefault(n)
        return ReferenceSet(tool=tool, refs=tuple(seen))


@dataclass(frozen=True)
class Partition:
    """Named clusters of references; a reference may carry several labels."""

    clusters: tuple[tuple[str, tuple[str, ...]], ...]

    @staticmethod
    def build(clusters: dict) -> "Partition":
        out = []
        for name, refs in clusters.items():
            normed: dict[str, None] = {}
            for r in refs:
                n = normalize(r)
                if n:
                    normed.setdefault(n)
            if normed:
                out.append((name, tuple(normed)))
        return Partition(clusters=tuple(out))

    def elements(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _name, refs in self.clusters:
            for r in refs:
                seen.setdefault(r)
        return tuple(seen)

    def labels(self, ref: str) -> frozenset[str]:
        return frozenset(
            name for name, refs in self.clusters if ref in refs
        )


def token_overlap_f1(a: str, b: str) -> float:
    """Multiset token-overlap F1 between two normalized strings."""
    ta, tb = Counter(a.split()), Counter(b.split())
    overlap = sum((ta & tb).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(ta.values())
    recall = overlap / sum(tb.values())
    return 2 * precision * recall / (precision + recall)


def match_references(
    pred: ReferenceSet, gt: ReferenceSet, threshold: float = DEFAULT_THRESHOLD
) -> list[tuple[str, str]]:
    """Greedy one-to-one matching in descending overlap order.

    A pair is eligible when its token-overlap F1 reaches the threshold
    or one normalized string contains the other. Ties break on
    (pred index, gt index).
    """
    if not (0 < threshold <= 1):
        raise ValueError("threshold must be in (0, 1]")
    candidates = []
    for i, p in enumerate(pred.refs):
        for j, g in enumerate(gt.refs):
            f1 = token_overlap_f1(p, g)
            contained = p in g or g in p
            if f1 >= threshold or contained:
                candidates.append((-f1, i, j))
    candidates.sort()
    used_p: set[int] = set()
    used_g: set[int] = set()
    pairs: list[tuple[str, str]] = []
    for _negf1, i, j in candidates:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        pairs.append((pred.refs[i], gt.refs[j]))
    return pairs


def reference_prf(
    pred: ReferenceSet, gt: ReferenceSet, threshold: float = DEFAULT_THRESHOLD
) -> tuple[float, float, float]:
    """Precision, recall, F1 of predicted references against ground truth.

    Empty prediction sets score perfect precision (there is nothing
    wrong to count); empty ground truth scores perfect recall.
    """
    matches = len(match_references(pred, gt, threshold))
    p = 1.0 if not pred.refs else matches / len(pred.refs)
    r = 1.0 if not gt.refs else matches / len(gt.refs)
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


def _jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 1.0


def fuzzy_rand_index(
    part_m: Partition,
    part_gt: Partition,
    threshold: float = DEFAULT_THRESHOLD,
) -> float:
    """Pairwise grouping agreement over the references common to both
    partitions. With single-membership partitions this reduces to the
    classic Rand index. Fewer than two common references score 1.0."""
    pred_set = ReferenceSet(tool="", refs=part_m.elements())
    gt_set = ReferenceSet(tool="", refs=part_gt.elements())
    pairs = match_references(pred_set, gt_set, threshold)
    if len(pairs) < 2:
        return 1.0
    total = 0.0
    n = 0
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            pi, gi = pairs[i]
            pj, gj = pairs[j]
            s_m = _jaccard(part_m.labels(pi), part_m.labels(pj))
            s_gt = _jaccard(part_gt.labels(gi), part_gt.labels(gj))
            total += 1.0 - abs(s_m - s_gt)
            n += 1
    return total / n


@dataclass(frozen=True)
class ToolScore:
    tool: str
    precision: float
    recall: float
    f1: float
    fri: float
    matches: int
    pred_refs: int
    gt_refs: int

    def to_json(self) -> dict:
        return {
            "tool": self.tool,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fri": self.fri,
            "matches": self.matches,
            "pred_refs": self.pred_refs,
            "gt_refs": self.gt_refs,
        }


@dataclass(frozen=True)
class MapScore:
    """Headline numbers are unweighted (macro) means of the per-tool
    scores; headline f1 is the mean of per-tool f1 values."""

    precision: float
    recall: float
    f1: float
    fri: float
    per_tool: tuple[ToolScore, ...] = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fri": self.fri,
            "per_tool": [t.to_json() for t in self.per_tool],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def render_table(self) -> str:
        header = f"{'tool':34} {'P':>6} {'R':>6} {'F1':>6} {'FRI':>6}"
        lines = [header, "-" * len(header)]
        for t in self.per_tool:
            lines.append(
                f"{t.tool:34} {t.precision:6.3f} {t.recall:6.3f}"
                f" {t.f1:6.3f} {t.fri:6.3f}"
            )
        lines.append("-" * len(header))
        lines.append(
            f"{'macro average':34} {self.precision:6.3f} {self.recall:6.3f}"
            f" {self.f1:6.3f} {self.fri:6.3f}"
        )
        return "\n".join(lines)


def _tool_refs(pmap: PolicyMap, tool: str) -> ReferenceSet:
    refs = []
    for item in pmap.items_for_tool(tool):
        refs.extend(item.references)
    return ReferenceSet.build(tool, refs)


def _tool_partition(pmap: PolicyMap, tool: str) -> Partition:
    return Partition.build(
        {it.id: list(it.references) for it in pmap.items_for_tool(tool)}
    )


def evaluate_maps(
    pred: PolicyMap, gt: PolicyMap, threshold: float = DEFAULT_THRESHOLD
) -> MapScore:
    """Score a generated map against ground truth, tool by tool, over
    active items."""
    tools: dict[str, None] = {}
    for t in gt.tools():
        tools.setdefault(t)
    for t in pred.tools():
        tools.setdefault(t)
    per_tool = []
    for tool in tools:
        pred_refs = _tool_refs(pred, tool)
        gt_refs = _tool_refs(gt, tool)
        p, r, f1 = reference_prf(pred_refs, gt_refs, threshold)
        fri = fuzzy_rand_index(
            _tool_partition(pred, tool), _tool_partition(gt, tool), threshold
        )
        per_tool.append(
            ToolScore(
                tool=tool,
                precision=p,
                recall=r,
                f1=f1,
                fri=fri,
                matches=len(match_references(pred_refs, gt_refs, threshold)),
                pred_refs=len(pred_refs.refs),
                gt_refs=len(gt_refs.refs),
            )
        )
    if not per_tool:
        return MapScore(1.0, 1.0, 1.0, 1.0, ())
    n = len(per_tool)
    return MapScore(
        precision=sum(t.precision for t in per_tool) / n,
        recall=sum(t.recall for t in per_tool) / n,
        f1=sum(t.f1 for t in per_tool) / n,
        fri=sum(t.fri for t in per_tool) / n,
        per_tool=tuple(per_tool),
    )

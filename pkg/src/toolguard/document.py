"""Policy document segmentation and reference normalization.

Segmentation is deterministic and covers every non-whitespace character:
markdown structural lines (headers, list items, table rows, rules) are
their own units; prose paragraphs split after sentence-terminal
punctuation followed by whitespace.

Normalization (for the verbatim-reference check) lowercases, collapses
whitespace runs, and strips surrounding punctuation. Exact byte matching
would be too brittle against generative backends; this is the tolerance
the whole framework uses.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .errors import EmptyDocument

_STRUCTURAL = re.compile(r"^\s*(#{1,6}\s|[-*]\s|\d+\.\s|\||---)")
_TERMINAL = ".!?"
_EDGE_PUNCT = " \t.,;:!?\"'()[]{}*#-"

SEPARATOR = "\n\n---\n\n"


@dataclass(frozen=True)
class Sentence:
    index: int
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class PolicyDocument:
    raw_text: str
    sentences: tuple[Sentence, ...]

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.raw_text.encode("utf-8")).hexdigest()


def segment(doc_text: str) -> PolicyDocument:
    if not doc_text or not doc_text.strip():
        raise EmptyDocument("policy document is empty")
    spans: list[tuple[int, int]] = []
    for lstart, lend, structural in _lines(doc_text):
        if structural:
            spans.append(_trim(doc_text, lstart, lend))
        else:
            spans.append((lstart, lend))  # prose, merged below
    merged = _merge_prose(doc_text, spans)
    sentences = [
        Sentence(i, s, e, doc_text[s:e]) for i, (s, e) in enumerate(merged)
    ]
    return PolicyDocument(raw_text=doc_text, sentences=tuple(sentences))


def _lines(text: str):
    """Yields (start, end, structural) per non-blank line."""
    pos = 0
    for line in text.splitlines(keepends=True):
        raw = line.rstrip("\n")
        if raw.strip():
            yield pos, pos + len(raw), bool(_STRUCTURAL.match(raw))
        pos += len(line)


def _merge_prose(text: str, spans):
    """Structural lines stay single units; adjacent prose lines form a
    paragraph that is then sentence-split."""
    out: list[tuple[int, int]] = []
    para: tuple[int, int] | None = None
    prev_end = None
    for start, end, structural in _respan(text, spans):
        if structural:
            if para:
                out.extend(_split_sentences(text, *para))
                para = None
            out.append((start, end))
            prev_end = end
        else:
            if para and not _blank_between(text, prev_end, start):
                para = (para[0], end)
            else:
                if para:
                    out.extend(_split_sentences(text, *para))
                para = (start, end)
            prev_end = end
    if para:
        out.extend(_split_sentences(text, *para))
    return out


def _respan(text: str, spans):
    for start, end in spans:
        structural = bool(_STRUCTURAL.match(text[start:end]))
        yield start, end, structural


def _blank_between(text: str, a: int | None, b: int) -> bool:
    if a is None:
        return True
    return text.count("\n", a, b) > 1


def _split_sentences(text: str, pstart: int, pend: int):
    spans = []
    i = pstart
    while i < pend:
        while i < pend and text[i].isspace():
            i += 1
        if i >= pend:
            break
        start = i
        end = None
        while i < pend:
            if text[i] in _TERMINAL and (i + 1 >= pend or text[i + 1].isspace()):
                end = i + 1
                break
            i += 1
        if end is None:
            end = pend
            while end > start and text[end - 1].isspace():
                end -= 1
        spans.append((start, end))
        i = end
    return spans


def _trim(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def normalize(text: str) -> str:
    """Canonical form for verbatim comparisons."""
    s = re.sub(r"\s+", " ", text.lower()).strip()
    return s.strip(_EDGE_PUNCT)


def normalized_with_positions(text: str) -> tuple[str, list[int]]:
    """Lowercased, whitespace-collapsed text plus, per output char, the
    index of the raw char it came from. Edge punctuation is kept so the
    mapping stays simple; callers strip it from the needle only."""
    out: list[str] = []
    positions: list[int] = []
    in_ws = False
    for i, c in enumerate(text):
        if c.isspace():
            if not in_ws and out:
                out.append(" ")
                positions.append(i)
            in_ws = True
        else:
            out.append(c.lower()[0])
            positions.append(i)
            in_ws = False
    if out and out[-1] == " ":
        out.pop()
        positions.pop()
    return "".join(out), positions


def is_verbatim(reference: str, doc_text: str) -> bool:
    needle = normalize(reference)
    if not needle:
        return False
    hay, _ = normalized_with_positions(doc_text)
    return needle in hay


def reference_spans(reference: str, doc_text: str) -> list[tuple[int, int]]:
    """Raw-text spans of every occurrence of a normalized reference."""
    needle = normalize(reference)
    if not needle:
        return []
    hay, positions = normalized_with_positions(doc_text)
    spans = []
    at = hay.find(needle)
    while at != -1:
        spans.append((positions[at], positions[at + len(needle) - 1] + 1))
        at = hay.find(needle, at + 1)
    return spans


def perturb_document(
    doc: PolicyDocument, noise: PolicyDocument, order: str
) -> PolicyDocument:
    """Concatenate the relevant document with noise in the given order.

    ``relevant_last`` is the reversed condition: the relevant content
    sits at the end of the combined document.
    """
    if order not in ("relevant_first", "relevant_last"):
        raise ValueError(f"unknown order {order!r}")
    if order == "relevant_first":
        combined = doc.raw_text + SEPARATOR + noise.raw_text
    else:
        combined = noise.raw_text + SEPARATOR + doc.raw_text
    return segment(combined)

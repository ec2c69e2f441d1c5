/** Render models derived from the server's coverage view.
 *
 * The server is the single authority on what counts as covered: these
 * helpers only reshape its response for display (which sentences to
 * highlight for the selected tool, what the uncovered panel lists) and
 * never re-derive coverage from references. */
import type { CoverageSentence, CoverageView, PolicyItem } from './model.js';

export type SentenceKind = 'highlighted' | 'covered' | 'uncovered';

export interface RenderedSentence {
  sentence: CoverageSentence;
  kind: SentenceKind;
}

export function renderSentences(
  view: CoverageView,
  selectedTool: string | null,
): RenderedSentence[] {
  const uncovered = new Set(view.uncovered);
  const highlighted = new Set(
    selectedTool ? (view.per_tool[selectedTool] ?? []) : [],
  );
  return view.sentences.map((sentence) => {
    let kind: SentenceKind = 'covered';
    if (uncovered.has(sentence.index)) {
      kind = 'uncovered';
    } else if (selectedTool !== null && highlighted.has(sentence.index)) {
      kind = 'highlighted';
    }
    return { sentence, kind };
  });
}

export function uncoveredSentences(view: CoverageView): CoverageSentence[] {
  const byIndex = new Map(view.sentences.map((s) => [s.index, s]));
  const out: CoverageSentence[] = [];
  for (const index of view.uncovered) {
    const s = byIndex.get(index);
    if (s) out.push(s);
  }
  return out;
}

export interface ToolSummary {
  tool: string;
  sentenceCount: number;
}

export function toolSummaries(view: CoverageView): ToolSummary[] {
  return Object.entries(view.per_tool)
    .map(([tool, indices]) => ({ tool, sentenceCount: indices.length }))
    .sort((a, b) => a.tool.localeCompare(b.tool));
}

export function itemsForTool(
  items: PolicyItem[],
  tool: string | null,
): PolicyItem[] {
  return tool ? items.filter((it) => it.tool === tool) : items;
}

/** Badge text; archived items render distinctly, carrying their reason. */
export function itemBadge(item: PolicyItem): string {
  if (item.status === 'archived') {
    return `archived: ${item.archive_reason ?? 'no reason recorded'}`;
  }
  return 'active';
}

export function coverageRatio(view: CoverageView): number {
  if (view.sentences.length === 0) return 1;
  return (view.sentences.length - view.uncovered.length) / view.sentences.length;
}

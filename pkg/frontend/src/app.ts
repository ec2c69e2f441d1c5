/** DOM wiring for the review page: tool list, highlighted document,
 * uncovered panel, and the per-item editor. All renders read from the
 * latest server responses; after any edit both the map and the coverage
 * view are refetched. */
import { ReviewApi } from './api.js';
import {
  coverageRatio,
  itemBadge,
  itemsForTool,
  renderSentences,
  toolSummaries,
  uncoveredSentences,
} from './coverage.js';
import { MapEditor } from './editor.js';
import type { CoverageView } from './model.js';

interface AppState {
  mapId: string;
  selectedTool: string | null;
  coverage: CoverageView | null;
}

export async function startApp(root: HTMLElement, baseUrl = ''): Promise<void> {
  const api = new ReviewApi(baseUrl);
  const { maps } = await api.listMaps();
  const mapId = maps[0];
  if (!mapId) {
    root.textContent = 'No maps in the review store.';
    return;
  }
  const editor = new MapEditor(api, mapId);
  const state: AppState = { mapId, selectedTool: null, coverage: null };

  async function refresh(): Promise<void> {
    await editor.load();
    state.coverage = await api.getCoverage(state.mapId);
    render();
  }

  function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
  }

  function render(): void {
    const view = state.coverage;
    if (!view) return;
    root.replaceChildren();

    const header = el('header');
    header.append(
      el('h1', undefined, `Policy map: ${state.mapId}`),
      el(
        'span',
        'coverage-ratio',
        `coverage ${(coverageRatio(view) * 100).toFixed(0)}%`,
      ),
    );
    const approveBtn = el(
      'button',
      'approve',
      editor.approved ? 'approved (locked)' : 'approve this version',
    );
    approveBtn.disabled = editor.approved;
    approveBtn.onclick = async () => {
      await editor.approve();
      await refresh();
    };
    header.append(approveBtn);
    if (editor.lastError) {
      header.append(el('div', 'error-banner', editor.lastError));
    }
    root.append(header);

    const layout = el('main', 'layout');

    // tool rail
    const rail = el('nav', 'tools');
    const allBtn = el(
      'button',
      state.selectedTool === null ? 'tool selected' : 'tool',
      'all tools',
    );
    allBtn.onclick = () => {
      state.selectedTool = null;
      render();
    };
    rail.append(allBtn);
    for (const summary of toolSummaries(view)) {
      const btn = el(
        'button',
        state.selectedTool === summary.tool ? 'tool selected' : 'tool',
        `${summary.tool} (${summary.sentenceCount})`,
      );
      btn.onclick = () => {
        state.selectedTool = summary.tool;
        render();
      };
      rail.append(btn);
    }
    layout.append(rail);

    // document with highlights
    const docPane = el('section', 'document');
    for (const { sentence, kind } of renderSentences(view, state.selectedTool)) {
      const span = el('span', `sentence ${kind}`, sentence.text + ' ');
      span.title = sentence.item_ids.join(', ');
      docPane.append(span);
    }
    layout.append(docPane);

    // right pane: uncovered + items
    const side = el('aside', 'side');
    side.append(el('h2', undefined, 'Uncovered sentences'));
    const uncoveredList = el('ul', 'uncovered');
    for (const s of uncoveredSentences(view)) {
      uncoveredList.append(el('li', undefined, s.text));
    }
    side.append(uncoveredList);

    side.append(el('h2', undefined, 'Policy items'));
    for (const item of itemsForTool(editor.items, state.selectedTool)) {
      const card = el('div', `item ${item.status}`);
      card.append(el('h3', undefined, `${item.name} [${item.id}]`));
      card.append(el('span', 'badge', itemBadge(item)));
      card.append(el('p', undefined, item.description));
      const refs = el('ul', 'refs');
      for (const ref of item.references) {
        refs.append(el('li', undefined, ref));
      }
      card.append(refs);

      const addExample = el('form', 'add-example');
      const input = el('input') as HTMLInputElement;
      input.placeholder = 'new violation example';
      const submit = el('button', undefined, 'add violation example');
      addExample.append(input, submit);
      addExample.onsubmit = async (ev) => {
        ev.preventDefault();
        if (input.value.trim()) {
          await editor.addViolationExample(item.id, input.value.trim());
          await refresh();
        }
      };
      card.append(addExample);

      const remove = el('button', 'delete', 'delete item');
      remove.onclick = async () => {
        await editor.deleteItem(item.id);
        await refresh();
      };
      card.append(remove);
      side.append(card);
    }
    layout.append(side);
    root.append(layout);
  }

  await refresh();
}

declare global {
  interface Window {
    toolguardReview?: { start: typeof startApp };
  }
}

if (typeof window !== 'undefined') {
  window.toolguardReview = { start: startApp };
  const mount = document.getElementById('app');
  if (mount) {
    void startApp(mount);
  }
}

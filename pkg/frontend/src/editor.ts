/** Optimistic item editing reconciled against the server.
 *
 * Edits apply to the local copy immediately; the server response either
 * confirms them (its item replaces ours, revision bumped) or the edit
 * rolls back and the rejection surfaces as an inline error. Revision
 * conflicts and approval locks are 409s and roll back the same way. */
import { ApiError, ReviewApi } from './api.js';
import type { ItemPatch, PolicyItem } from './model.js';

export interface EditResult {
  ok: boolean;
  error: string | null;
}

export class MapEditor {
  items: PolicyItem[] = [];
  revisions: Record<string, number> = {};
  approved = false;
  lastError: string | null = null;

  constructor(
    private readonly api: ReviewApi,
    private readonly mapId: string,
  ) {}

  async load(): Promise<void> {
    const envelope = await this.api.getMap(this.mapId);
    this.items = envelope.map.items;
    this.revisions = envelope.item_revisions;
    this.approved = envelope.approved;
    this.lastError = null;
  }

  item(itemId: string): PolicyItem | undefined {
    return this.items.find((it) => it.id === itemId);
  }

  private replace(itemId: string, item: PolicyItem): void {
    this.items = this.items.map((it) => (it.id === itemId ? item : it));
  }

  async patchItem(itemId: string, patch: ItemPatch): Promise<EditResult> {
    const before = this.item(itemId);
    if (!before) {
      return { ok: false, error: `no item ${itemId}` };
    }
    const optimistic: PolicyItem = { ...before, ...patch } as PolicyItem;
    this.replace(itemId, optimistic);
    try {
      const saved = await this.api.patchItem(this.mapId, itemId, {
        ...patch,
        revision: this.revisions[itemId],
      });
      const { revision, ...item } = saved;
      this.replace(itemId, item as PolicyItem);
      this.revisions[itemId] = revision;
      this.lastError = null;
      return { ok: true, error: null };
    } catch (err) {
      this.replace(itemId, before);
      return this.fail(err);
    }
  }

  async addViolationExample(itemId: string, text: string): Promise<EditResult> {
    const item = this.item(itemId);
    if (!item) return { ok: false, error: `no item ${itemId}` };
    return this.patchItem(itemId, {
      violation_examples: [...item.violation_examples, text],
    });
  }

  async addComplianceExample(itemId: string, text: string): Promise<EditResult> {
    const item = this.item(itemId);
    if (!item) return { ok: false, error: `no item ${itemId}` };
    return this.patchItem(itemId, {
      compliance_examples: [...item.compliance_examples, text],
    });
  }

  async createItem(item: PolicyItem): Promise<EditResult> {
    try {
      const saved = await this.api.createItem(this.mapId, item);
      const { revision, ...created } = saved;
      this.items = [...this.items, created as PolicyItem];
      this.revisions[item.id] = revision;
      this.lastError = null;
      return { ok: true, error: null };
    } catch (err) {
      return this.fail(err);
    }
  }

  async deleteItem(itemId: string): Promise<EditResult> {
    const before = this.items;
    this.items = this.items.filter((it) => it.id !== itemId);
    try {
      await this.api.deleteItem(this.mapId, itemId);
      delete this.revisions[itemId];
      this.lastError = null;
      return { ok: true, error: null };
    } catch (err) {
      this.items = before;
      return this.fail(err);
    }
  }

  async approve(): Promise<EditResult> {
    try {
      const result = await this.api.approve(this.mapId);
      this.approved = result.approved;
      this.lastError = null;
      return { ok: true, error: null };
    } catch (err) {
      return this.fail(err);
    }
  }

  private fail(err: unknown): EditResult {
    const message =
      err instanceof ApiError
        ? err.detail
        : err instanceof Error
          ? err.message
          : String(err);
    this.lastError = message;
    return { ok: false, error: message };
  }
}

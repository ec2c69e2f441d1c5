/** Typed client for the review API. All state, including coverage,
 * round-trips through the server; nothing is computed client-side. */
import type {
  CoverageView,
  ItemPatch,
  MapEnvelope,
  PolicyItem,
  SavedItem,
} from './model.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }

  get isRejected(): boolean {
    return this.status === 422;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (payload.detail) detail = payload.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listMaps(): Promise<{ maps: string[] }> {
    return this.request('GET', '/maps');
  }

  getMap(mapId: string): Promise<MapEnvelope> {
    return this.request('GET', `/maps/${mapId}`);
  }

  getCoverage(mapId: string): Promise<CoverageView> {
    return this.request('GET', `/maps/${mapId}/coverage`);
  }

  patchItem(
    mapId: string,
    itemId: string,
    patch: ItemPatch,
  ): Promise<SavedItem> {
    return this.request('PATCH', `/maps/${mapId}/items/${itemId}`, patch);
  }

  createItem(mapId: string, item: PolicyItem): Promise<SavedItem> {
    return this.request('POST', `/maps/${mapId}/items`, item);
  }

  deleteItem(mapId: string, itemId: string): Promise<{ deleted: string }> {
    return this.request('DELETE', `/maps/${mapId}/items/${itemId}`);
  }

  approve(
    mapId: string,
  ): Promise<{ map_id: string; approved: boolean; version: number }> {
    return this.request('POST', `/maps/${mapId}/approve`);
  }

  audit(mapId: string): Promise<{ map_id: string; audit: object[] }> {
    return this.request('GET', `/maps/${mapId}/audit`);
  }
}

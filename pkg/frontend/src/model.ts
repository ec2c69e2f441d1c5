/** Wire types mirroring the review API's JSON bodies. */

export type ItemStatus = 'active' | 'archived';

export interface PolicyItem {
  id: string;
  tool: string;
  name: string;
  description: string;
  references: string[];
  compliance_examples: string[];
  violation_examples: string[];
  status: ItemStatus;
  archive_reason: string | null;
}

export interface PolicyMapDoc {
  version: number;
  doc_fingerprint: string;
  items: PolicyItem[];
}

export interface MapEnvelope {
  map_id: string;
  map: PolicyMapDoc;
  approved: boolean;
  version: number;
  item_revisions: Record<string, number>;
}

export interface CoverageSentence {
  index: number;
  start: number;
  end: number;
  text: string;
  tools: string[];
  item_ids: string[];
}

export interface CoverageView {
  map_id: string;
  approved: boolean;
  sentences: CoverageSentence[];
  uncovered: number[];
  per_tool: Record<string, number[]>;
}

export type ItemPatch = Partial<
  Omit<PolicyItem, 'id'> & { archive_reason: string }
> & { revision?: number };

export interface SavedItem extends PolicyItem {
  revision: number;
}

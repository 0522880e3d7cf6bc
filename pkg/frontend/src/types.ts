// Wire types for the tabot HTTP API. The UI never invents data: everything
// rendered comes verbatim from these payloads.

export type AnswerKind =
  | "direct"
  | "clarification"
  | "paged"
  | "fallback"
  | "error"
  | "help";

export interface RowsPage {
  columns: string[];
  rows: (string | number | boolean | null)[][];
  total_row_count: number;
  offset: number;
}

export interface ChatAnswer {
  kind: AnswerKind;
  text: string;
  rows: RowsPage | null;
  fallback_warning: boolean;
  interpretation_notes: string[];
  suggested_replies: string[];
  session_id: string;
  turn_index: number;
}

export interface FieldStatsDoc {
  type: string;
  diversity: number;
  missing: number;
  categorical: boolean;
  values: string[];
}

export interface FieldDoc {
  name: string;
  type: string;
  display_names: Record<string, string>;
  synonyms: Record<string, string[]>;
  value_synonyms: Record<string, Record<string, string[]>>;
  group: string | null;
  stats: FieldStatsDoc;
}

export interface SchemaDoc {
  format_version: number;
  language: string;
  source: { origin: string; imported_at: string | null };
  row_aliases: Record<string, string[]>;
  fields: FieldDoc[];
  composites: { name: string; parts: string[]; separator: string }[];
  groups: { id: string; members: string[]; default: string | null }[];
}

export interface SchemaResponse {
  schema_version: number;
  schema: SchemaDoc;
}

export interface BotInfo {
  strategy: string;
  intent_count: number;
  entity_count: number;
  generator_version: string;
  schema_version: number;
}

// Enrichment commands mirror the server's command documents exactly.
export type EnrichmentCommand =
  | { op: "add_synonym"; field: string; value: string; locale?: string }
  | { op: "remove_synonym"; field: string; value: string; locale?: string }
  | { op: "add_value_synonym"; field: string; cell_value: string; synonym: string; locale?: string }
  | { op: "add_composite"; name: string; parts: string[]; separator?: string }
  | { op: "remove_composite"; name: string }
  | { op: "add_group"; group_id: string; members: string[]; default_member?: string | null }
  | { op: "remove_group"; group_id: string }
  | { op: "add_row_alias"; value: string; locale?: string }
  | { op: "remove_row_alias"; value: string; locale?: string };

export interface ApiErrorBody {
  error: {
    code: string;
    message: string;
    details?: { command_index: number; error: string }[] | unknown;
  };
}

// Data-owner panel view model: field list with badges, synonym / composite /
// group / row-alias editors, and a dirty-command queue that survives tab
// navigation (it lives here, not in the DOM). Client-side validation
// mirrors the server rules so collisions are flagged before submit; the
// server stays authoritative and 422 diagnostics are mapped back per
// command.

import { ApiRequestError, TabotClient } from "./api.js";
import type { EnrichmentCommand, SchemaDoc, SchemaResponse } from "./types.js";

export interface QueuedCommand {
  command: EnrichmentCommand;
  error: string | null; // server diagnostic after a failed submit
}

export interface SubmitOutcome {
  ok: boolean;
  schemaVersion?: number;
  promptRegenerate: boolean;
}

function fold(text: string): string {
  return text.normalize("NFKD").replace(/[̀-ͯ]/g, "").toLowerCase().trim();
}

export class SchemaEditorViewModel {
  schema: SchemaDoc | null = null;
  schemaVersion = 0;
  queue: QueuedCommand[] = [];

  constructor(private client: TabotClient, private datasetId: string) {}

  async load(): Promise<void> {
    const response = await this.client.getSchema(this.datasetId);
    this.applyResponse(response);
  }

  private applyResponse(response: SchemaResponse): void {
    this.schema = response.schema;
    this.schemaVersion = response.schema_version;
  }

  // -- validation mirroring the server ------------------------------------

  /** Every name a term may collide with: canonical field names, display
   * names, synonyms and composite names; grouped fields may share terms. */
  private termOwners(): Map<string, string> {
    const owners = new Map<string, string>();
    if (!this.schema) return owners;
    for (const field of this.schema.fields) {
      const terms = [field.name, ...Object.values(field.display_names)];
      for (const list of Object.values(field.synonyms)) terms.push(...list);
      for (const term of terms) {
        if (!owners.has(fold(term))) owners.set(fold(term), field.name);
      }
    }
    for (const composite of this.schema.composites) {
      owners.set(fold(composite.name), composite.name);
    }
    return owners;
  }

  private groupOf(fieldName: string): string | null {
    if (!this.schema) return null;
    for (const group of this.schema.groups) {
      if (group.members.some((m) => fold(m) === fold(fieldName))) return group.id;
    }
    return null;
  }

  validate(command: EnrichmentCommand): string | null {
    if (!this.schema) return "schema not loaded";
    const fields = new Set(this.schema.fields.map((f) => fold(f.name)));
    const owners = this.termOwners();

    switch (command.op) {
      case "add_synonym": {
        if (!fields.has(fold(command.field))) return `unknown field ${command.field}`;
        const owner = owners.get(fold(command.value));
        if (owner && fold(owner) !== fold(command.field)) {
          const sameGroup =
            this.groupOf(command.field) !== null &&
            this.groupOf(command.field) === this.groupOf(owner);
          if (!sameGroup) return `"${command.value}" already names ${owner}`;
        }
        return null;
      }
      case "add_value_synonym":
        if (!fields.has(fold(command.field))) return `unknown field ${command.field}`;
        return null;
      case "add_composite": {
        if (fields.has(fold(command.name))) {
          return `composite "${command.name}" shadows a real field`;
        }
        if (command.parts.length < 2) return "a composite needs at least 2 parts";
        if (new Set(command.parts.map(fold)).size !== command.parts.length) {
          return "composite parts must be distinct";
        }
        for (const part of command.parts) {
          if (!fields.has(fold(part))) return `unknown field ${part}`;
        }
        return null;
      }
      case "add_group": {
        if (command.members.length < 2) return "a group needs at least 2 members";
        for (const member of command.members) {
          if (!fields.has(fold(member))) return `unknown field ${member}`;
          const existing = this.groupOf(member);
          if (existing) return `${member} already belongs to group ${existing}`;
        }
        if (
          command.default_member &&
          !command.members.some((m) => fold(m) === fold(command.default_member!))
        ) {
          return "the default must be a member";
        }
        return null;
      }
      case "add_row_alias":
        return command.value.trim() ? null : "alias must not be empty";
      default:
        return null; // removals validate server-side
    }
  }

  /** Queue a command; returns the validation error (the command is queued
   * only when it passes, matching the inline-error-before-submit contract). */
  enqueue(command: EnrichmentCommand): string | null {
    const error = this.validate(command);
    if (error === null) this.queue.push({ command, error: null });
    return error;
  }

  discardQueued(index: number): void {
    this.queue.splice(index, 1);
  }

  /** PATCH the queued commands all-or-nothing. On 422 the per-command
   * diagnostics are attached inline and the queue is retained. */
  async submit(): Promise<SubmitOutcome> {
    if (this.queue.length === 0) return { ok: true, promptRegenerate: false };
    try {
      const response = await this.client.patchSchema(
        this.datasetId,
        this.queue.map((q) => q.command),
      );
      this.applyResponse(response);
      this.queue = [];
      return { ok: true, schemaVersion: this.schemaVersion, promptRegenerate: true };
    } catch (error) {
      if (error instanceof ApiRequestError && Array.isArray(error.details)) {
        for (const item of error.details as { command_index: number; error: string }[]) {
          const queued = this.queue[item.command_index];
          if (queued) queued.error = item.error;
        }
      }
      return { ok: false, promptRegenerate: false };
    }
  }
}

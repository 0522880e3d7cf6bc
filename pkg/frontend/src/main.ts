// SPA wiring: two tabs (Chat / Configure) over the documented endpoints.
// All rendering goes through the pure helpers in render.ts.

import { TabotClient } from "./api.js";
import { ChatViewModel } from "./chat.js";
import {
  renderAnswerHtml, renderChips, renderPendingHtml, renderUserHtml, escapeHtml,
} from "./render.js";
import { SchemaEditorViewModel } from "./schemaEditor.js";
import type { EnrichmentCommand, FieldDoc } from "./types.js";

const client = new TabotClient("");
let datasetId: string | null = null;
let chat: ChatViewModel | null = null;
let editor: SchemaEditorViewModel | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setStatus(text: string): void {
  el<HTMLElement>("status").textContent = text;
}

// -- tabs ---------------------------------------------------------------

function showTab(name: "chat" | "configure"): void {
  el("tab-chat").classList.toggle("active", name === "chat");
  el("tab-configure").classList.toggle("active", name === "configure");
  el("panel-chat").style.display = name === "chat" ? "flex" : "none";
  el("panel-configure").style.display = name === "configure" ? "block" : "none";
}

// -- chat ------------------------------------------------------------------

function repaintTranscript(): void {
  if (!chat) return;
  const container = el("messages");
  container.innerHTML = chat.transcript
    .map((entry) =>
      entry.speaker === "user"
        ? entry.failed
          ? renderPendingHtml(entry.text)
          : renderUserHtml(entry.text)
        : renderAnswerHtml(entry.answer),
    )
    .join("");
  container.scrollTop = container.scrollHeight;
}

async function sendMessage(text: string): Promise<void> {
  if (!chat) {
    setStatus("upload a dataset and generate a bot first");
    return;
  }
  await chat.send(text);
  repaintTranscript();
}

function wireChat(): void {
  const input = el<HTMLInputElement>("chat-input");
  el("send").addEventListener("click", () => {
    const text = input.value;
    input.value = "";
    void sendMessage(text);
  });
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      const text = input.value;
      input.value = "";
      void sendMessage(text);
    }
  });
  el("messages").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("chip")) {
      void sendMessage(target.dataset.reply ?? target.textContent ?? "");
    } else if (target.classList.contains("retry")) {
      void chat?.retryLastFailed().then(repaintTranscript);
    } else if (target.classList.contains("rate-up") || target.classList.contains("rate-down")) {
      const turn = Number(target.closest<HTMLElement>(".rate")?.dataset.turn ?? "-1");
      const rating = target.classList.contains("rate-up") ? "up" : "down";
      void chat?.rate(turn, rating).then((ok) => {
        if (ok) target.classList.add("rated");
      });
    }
  });
}

// -- configure ---------------------------------------------------------------

function fieldBadges(field: FieldDoc): string {
  const badges = [
    `<span class="badge type">${escapeHtml(field.type)}</span>`,
    `<span class="badge">${field.stats.diversity} distinct</span>`,
  ];
  if (field.stats.categorical) badges.push(`<span class="badge cat">categorical</span>`);
  if (field.group) badges.push(`<span class="badge group">group: ${escapeHtml(field.group)}</span>`);
  return badges.join(" ");
}

function repaintEditor(): void {
  if (!editor?.schema) return;
  const schema = editor.schema;
  el("fields").innerHTML = schema.fields
    .map((field) => {
      const synonyms = Object.values(field.synonyms).flat();
      return (
        `<div class="field-row"><strong>${escapeHtml(field.name)}</strong> ` +
        `${fieldBadges(field)}` +
        (synonyms.length
          ? ` <span class="synonyms">= ${synonyms.map(escapeHtml).join(", ")}</span>`
          : "") +
        ` <button class="add-syn" data-field="${escapeHtml(field.name)}">+ synonym</button>` +
        ` <button class="add-valsyn" data-field="${escapeHtml(field.name)}">+ value synonym</button></div>`
      );
    })
    .join("");
  el("composites").innerHTML = schema.composites
    .map((c) => `<div>${escapeHtml(c.name)} = ${c.parts.map(escapeHtml).join(" + ")}</div>`)
    .join("");
  el("groups").innerHTML = schema.groups
    .map((g) =>
      `<div>${escapeHtml(g.id)}: ${g.members.map(escapeHtml).join(", ")}` +
      (g.default ? ` (default ${escapeHtml(g.default)})` : "") + `</div>`)
    .join("");
  el("aliases").innerHTML = Object.values(schema.row_aliases)
    .flat()
    .map((a) => `<span class="badge">${escapeHtml(a)}</span>`)
    .join(" ");
  el("queue").innerHTML = editor.queue
    .map(
      (q, i) =>
        `<div class="queued${q.error ? " invalid" : ""}">` +
        `${escapeHtml(JSON.stringify(q.command))}` +
        (q.error ? ` <span class="inline-error">${escapeHtml(q.error)}</span>` : "") +
        ` <button class="drop" data-index="${i}">x</button></div>`,
    )
    .join("");
  el("schema-version").textContent = `v${editor.schemaVersion}`;
}

function queueCommand(command: EnrichmentCommand): void {
  if (!editor) return;
  const error = editor.enqueue(command);
  if (error) setStatus(`rejected: ${error}`);
  repaintEditor();
}

function wireConfigure(): void {
  el("fields").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const field = target.dataset.field;
    if (!field) return;
    if (target.classList.contains("add-syn")) {
      const value = prompt(`Synonym for ${field}:`);
      if (value) queueCommand({ op: "add_synonym", field, value });
    } else if (target.classList.contains("add-valsyn")) {
      const cell = prompt(`Which ${field} value does the synonym stand for?`);
      const synonym = cell ? prompt(`Synonym for ${field}=${cell}:`) : null;
      if (cell && synonym) {
        queueCommand({ op: "add_value_synonym", field, cell_value: cell, synonym });
      }
    }
  });
  el("add-composite").addEventListener("click", () => {
    const name = prompt("Composite name (e.g. full_name):");
    const parts = prompt("Parts, comma separated (e.g. first_name,last_name):");
    if (name && parts) {
      queueCommand({
        op: "add_composite", name,
        parts: parts.split(",").map((p) => p.trim()).filter(Boolean),
      });
    }
  });
  el("add-group").addEventListener("click", () => {
    const id = prompt("Group id:");
    const members = prompt("Members, comma separated:");
    if (!id || !members) return;
    const memberList = members.split(",").map((m) => m.trim()).filter(Boolean);
    const def = prompt(`Default member (one of ${memberList.join(", ")}; empty for none):`);
    queueCommand({
      op: "add_group", group_id: id, members: memberList,
      default_member: def || null,
    });
  });
  el("add-alias").addEventListener("click", () => {
    const value = prompt("Row alias (e.g. officials):");
    if (value) queueCommand({ op: "add_row_alias", value });
  });
  el("queue").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("drop")) {
      editor?.discardQueued(Number(target.dataset.index));
      repaintEditor();
    }
  });
  el("submit-edits").addEventListener("click", () => {
    void editor?.submit().then((outcome) => {
      repaintEditor();
      if (outcome.ok && outcome.promptRegenerate) {
        if (confirm("Schema updated. Regenerate the bot now?")) void regenerate();
      } else if (!outcome.ok) {
        setStatus("some edits were rejected; see the inline errors");
      }
    });
  });
  el("regenerate").addEventListener("click", () => void regenerate());
}

async function regenerate(): Promise<void> {
  if (!datasetId) return;
  setStatus("generating bot ...");
  const info = await client.generateBot(datasetId);
  setStatus(`bot ready: ${info.strategy}, ${info.intent_count} intents`);
}

// -- upload --------------------------------------------------------------------

function wireUpload(): void {
  el<HTMLInputElement>("csv-file").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const text = await file.text();
    setStatus("uploading ...");
    const created = await client.uploadDataset(text, file.name);
    datasetId = created.dataset_id;
    chat = new ChatViewModel(client, datasetId);
    editor = new SchemaEditorViewModel(client, datasetId);
    await editor.load();
    repaintEditor();
    await regenerate();
    repaintTranscript();
    el("messages").innerHTML = renderChips([
      "How many rows are there?",
      "What kind of questions can I ask?",
    ]);
  });
}

export function boot(): void {
  wireChat();
  wireConfigure();
  wireUpload();
  el("tab-chat").addEventListener("click", () => showTab("chat"));
  el("tab-configure").addEventListener("click", () => showTab("configure"));
  showTab("chat");
  void client.health().then(
    () => setStatus("connected"),
    () => setStatus("service unreachable"),
  );
}

if (typeof document !== "undefined" && document.getElementById("send")) {
  boot();
}

/** Single-page wiring. This is the only module that touches the DOM and the
 * network; everything it renders comes from the pure view modules.
 */

import { ServiceClient } from "./api.js";
import { mechanismBadges, renderBadges } from "./badges.js";
import { EventFeed, renderEventRows } from "./events.js";
import { buildQuery, emptyForm, renderQueryForm, type RawForm } from "./form.js";
import { renderFrontView } from "./front.js";
import { PRESETS, renderPresetPanel } from "./presets.js";
import { renderStatsPanel, StatsHistory } from "./stats.js";
import type { LanguageDescriptor, QueryEnvelope } from "./wire.js";
import { escapeHtml, isBoolAnswer } from "./wire.js";

const client = new ServiceClient("", (url, init) => window.fetch(url, init));

interface AppState {
  languages: LanguageDescriptor[];
  desc: LanguageDescriptor | null;
  raw: RawForm;
  preset: string;
  feed: EventFeed;
  stats: StatsHistory;
}

const state: AppState = {
  languages: [],
  desc: null,
  raw: { values: {}, axes: {} },
  preset: PRESETS[1].name,
  feed: new EventFeed(),
  stats: new StatsHistory(),
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node;
}

function harvestForm(): RawForm {
  const raw: RawForm = {
    values: { ...state.raw.values },
    axes: Object.fromEntries(Object.entries(state.raw.axes).map(([k, a]) => [k, { ...a }])),
  };
  const form = el("form-holder");
  form.querySelectorAll<HTMLInputElement | HTMLSelectElement>("[data-role]").forEach((node) => {
    const role = node.dataset.role;
    const name = node.dataset.var;
    if (role === undefined || name === undefined) return;
    if (role === "value") {
      raw.values[name] = node.value;
      return;
    }
    const axis = raw.axes[name] ?? { sweep: false, fixed: "", lo: "", hi: "", step: "" };
    if (role === "axis-sweep") axis.sweep = (node as HTMLInputElement).checked;
    else if (role === "axis-fixed") axis.fixed = node.value;
    else if (role === "axis-lo") axis.lo = node.value;
    else if (role === "axis-hi") axis.hi = node.value;
    else if (role === "axis-step") axis.step = node.value;
    raw.axes[name] = axis;
  });
  return raw;
}

/** Re-check validity in place (no re-render, so typing keeps focus). */
function refreshValidity(): void {
  if (state.desc === null) return;
  state.raw = harvestForm();
  const built = buildQuery(state.desc, state.raw);
  const errors = el("form-holder").querySelector(".form-errors");
  if (errors !== null) {
    errors.innerHTML = built.errors.map((e) => `<li>${escapeHtml(e)}</li>`).join("");
  }
  const submit = document.getElementById("submit-query") as HTMLButtonElement | null;
  if (submit !== null) submit.disabled = built.errors.length > 0;
}

function renderForm(): void {
  if (state.desc === null) return;
  const holder = el("form-holder");
  holder.innerHTML = renderQueryForm(state.desc, state.raw);
  holder.querySelectorAll("[data-role]").forEach((node) => {
    if (node.getAttribute("data-role") === "axis-sweep") {
      node.addEventListener("change", () => {
        state.raw = harvestForm();
        renderForm(); // sweep toggle swaps the input row shape
      });
    } else {
      node.addEventListener("input", refreshValidity);
      node.addEventListener("change", refreshValidity);
    }
  });
  const form = holder.querySelector("#query-form");
  form?.addEventListener("submit", (e) => {
    e.preventDefault();
    void submitQuery();
  });
}

function verdictHtml(envelope: QueryEnvelope): string {
  if (isBoolAnswer(envelope.answer)) {
    const verdict = envelope.answer.b;
    const dist = state.raw.values.dist;
    const hover =
      dist !== undefined && dist !== ""
        ? `within the queried ${dist} m, answered by ${envelope.mechanism}`
        : `answered by ${envelope.mechanism}`;
    return `<span class="verdict verdict-${verdict}" title="${escapeHtml(hover)}">${verdict ? "yes" : "no"}</span>`;
  }
  return renderFrontView(envelope.answer);
}

async function submitQuery(): Promise<void> {
  if (state.desc === null) return;
  state.raw = harvestForm();
  const built = buildQuery(state.desc, state.raw);
  if (built.query === null) return;
  const result = await client.postQuery(crypto.randomUUID(), built.query);
  const holder = el("result-holder");
  if (!result.ok) {
    holder.innerHTML = `<p class="error-status">request failed with ${result.status}</p>
      <pre class="error-body">${escapeHtml(result.body)}</pre>`;
    return;
  }
  holder.innerHTML = `${verdictHtml(result.envelope)}
    <div class="badges">${renderBadges(mechanismBadges(result.envelope))}</div>`;
  await refreshStats();
}

async function refreshStats(): Promise<void> {
  try {
    state.stats.push(await client.stats());
    el("stats-holder").innerHTML = renderStatsPanel(state.stats);
  } catch {
    // poll again on the next tick; the panel keeps its last snapshot
  }
}

function renderEvents(): void {
  el("events-holder").innerHTML = renderEventRows([...state.feed.rows].reverse());
}

async function eventLoop(): Promise<void> {
  for (;;) {
    try {
      const replay = await client.replayEvents(state.feed.resumeFrom());
      if (state.feed.ingestAll(replay.events) > 0) renderEvents();
      await client.followEvents(state.feed.resumeFrom(), (e) => {
        if (state.feed.ingest(e)) renderEvents();
      });
    } catch {
      // connection dropped; resume below from the last seen seq
    }
    await new Promise((resolve) => setTimeout(resolve, 1500));
  }
}

function selectLanguage(id: string): void {
  const desc = state.languages.find((d) => d.id === id) ?? null;
  state.desc = desc;
  state.raw = desc === null ? { values: {}, axes: {} } : emptyForm(desc);
  renderForm();
  el("result-holder").innerHTML = "";
}

function renderPresets(): void {
  el("preset-holder").innerHTML = renderPresetPanel(state.preset);
  el("preset-holder")
    .querySelector("#preset-select")
    ?.addEventListener("change", (e) => {
      state.preset = (e.target as HTMLSelectElement).value;
      renderPresets();
    });
}

async function boot(): Promise<void> {
  state.languages = await client.languages();
  const select = el("language-select") as HTMLSelectElement;
  select.innerHTML = state.languages
    .map((d) => `<option value="${escapeHtml(d.id)}">${escapeHtml(d.id)}</option>`)
    .join("");
  select.addEventListener("change", () => selectLanguage(select.value));
  if (state.languages.length > 0) selectLanguage(state.languages[0].id);

  renderPresets();
  el("purge-button").addEventListener("click", () => {
    void client.purge().then((removed) => {
      el("purge-note").textContent = `purged ${removed} entries`;
      return refreshStats();
    });
  });

  await refreshStats();
  setInterval(() => void refreshStats(), 2000);
  void eventLoop();
}

window.addEventListener("DOMContentLoaded", () => void boot());

/** Query form: built from a fetched language descriptor, validated against
 * the descriptor's own domains and schemes. No domain knowledge lives here;
 * everything rendered or checked comes out of the descriptor.
 */

import type { BoxAxis, LanguageDescriptor, WireQuery, WireValue } from "./wire.js";
import { escapeHtml } from "./wire.js";

export interface RawAxis {
  sweep: boolean;
  fixed: string;
  lo: string;
  hi: string;
  step: string;
}

export interface RawForm {
  // var name -> typed text (reals), selected member (symbols), name (profiles)
  values: Record<string, string>;
  // axis var name -> sweep/fixed state; present only for box languages
  axes: Record<string, RawAxis>;
}

export function emptyForm(desc: LanguageDescriptor): RawForm {
  const values: Record<string, string> = {};
  const axes: Record<string, RawAxis> = {};
  const axisVars = new Set(boxAxisVars(desc));
  for (const name of Object.keys(desc.variables)) {
    const vd = desc.variables[name];
    if (vd.kind === "box") continue;
    if (axisVars.has(name)) {
      axes[name] = { sweep: false, fixed: "", lo: "", hi: "", step: "" };
    } else {
      values[name] = "";
    }
  }
  return { values, axes };
}

export function boxVarName(desc: LanguageDescriptor): string | null {
  for (const [name, vd] of Object.entries(desc.variables)) {
    if (vd.kind === "box") return name;
  }
  return null;
}

export function boxAxisVars(desc: LanguageDescriptor): string[] {
  const name = boxVarName(desc);
  return name === null ? [] : (desc.variables[name].axisVars ?? []);
}

function parseNumber(text: string): number | null {
  const trimmed = text.trim();
  if (trimmed === "") return null;
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : null;
}

function inDomain(value: number, lo: number | undefined, hi: number | undefined): boolean {
  if (lo !== undefined && value < lo) return false;
  if (hi !== undefined && value > hi) return false;
  return true;
}

function domainText(lo: number | undefined, hi: number | undefined, unit: string | undefined): string {
  const u = unit === undefined || unit === "1" ? "" : ` ${unit}`;
  return `${lo ?? "?"} .. ${hi ?? "?"}${u}`;
}

export interface BuiltQuery {
  query: WireQuery | null;
  errors: string[];
}

/** Assemble the wire query from raw form state, collecting every violation
 * of the descriptor's domains and schemes. Typed magnitudes are passed
 * through verbatim (trimmed), so "0.05" posts as "0.05". */
export function buildQuery(desc: LanguageDescriptor, raw: RawForm): BuiltQuery {
  const errors: string[] = [];
  const bindings: Record<string, WireValue> = {};

  const boxName = boxVarName(desc);
  const axes: BoxAxis[] = [];
  for (const axisName of boxAxisVars(desc)) {
    const state = raw.axes[axisName] ?? { sweep: false, fixed: "", lo: "", hi: "", step: "" };
    const vd = desc.variables[axisName];
    if (state.sweep) {
      const lo = parseNumber(state.lo);
      const hi = parseNumber(state.hi);
      const step = parseNumber(state.step);
      if (lo === null || hi === null || step === null) {
        errors.push(`${axisName}: sweep needs numeric lo, hi, step`);
        continue;
      }
      if (step <= 0) errors.push(`${axisName}: step must be positive`);
      if (lo > hi) errors.push(`${axisName}: lo exceeds hi`);
      if (!inDomain(lo, vd.lo, vd.hi) || !inDomain(hi, vd.lo, vd.hi)) {
        errors.push(`${axisName}: sweep leaves ${domainText(vd.lo, vd.hi, vd.unit)}`);
      }
      axes.push([axisName, state.lo.trim(), state.hi.trim(), state.step.trim(), 1]);
    } else if (state.fixed.trim() !== "") {
      const value = parseNumber(state.fixed);
      if (value === null) {
        errors.push(`${axisName}: not a number`);
      } else if (!inDomain(value, vd.lo, vd.hi)) {
        errors.push(`${axisName}: outside ${domainText(vd.lo, vd.hi, vd.unit)}`);
      } else {
        bindings[axisName] = { q: [state.fixed.trim(), vd.unit ?? "1"] };
      }
    }
  }
  if (axes.length > 0 && boxName !== null) {
    axes.sort((a, b) => (a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0));
    bindings[boxName] = { box: axes };
  }

  for (const [name, text] of Object.entries(raw.values)) {
    const vd = desc.variables[name];
    if (vd === undefined || text.trim() === "") continue;
    if (vd.kind === "real") {
      const value = parseNumber(text);
      if (value === null) {
        errors.push(`${name}: not a number`);
      } else if (!inDomain(value, vd.lo, vd.hi)) {
        errors.push(`${name}: outside ${domainText(vd.lo, vd.hi, vd.unit)}`);
      } else {
        bindings[name] = { q: [text.trim(), vd.unit ?? "1"] };
      }
    } else if (vd.kind === "symbol") {
      if (!(vd.members ?? []).includes(text)) {
        errors.push(`${name}: ${text} is not a member`);
      } else {
        bindings[name] = { sym: text };
      }
    } else if (vd.kind === "profile") {
      bindings[name] = { prof: text.trim() };
    }
  }

  const bound = Object.keys(bindings).sort();
  const schemeOk = desc.schemes.some(
    (s) => s.length === bound.length && [...s].sort().every((n, i) => n === bound[i]),
  );
  if (!schemeOk) {
    const shapes = desc.schemes.map((s) => `{${s.join(", ")}}`).join(" or ");
    errors.push(`bound variables {${bound.join(", ")}} match no scheme; expected ${shapes}`);
  }

  if (errors.length > 0) return { query: null, errors };
  return { query: { l: desc.id, b: bindings }, errors };
}

function renderAxisRow(name: string, vd: { unit?: string; lo?: number; hi?: number }, state: RawAxis): string {
  const sweepChecked = state.sweep ? " checked" : "";
  const inputs = state.sweep
    ? `lo <input data-role="axis-lo" data-var="${name}" value="${escapeHtml(state.lo)}" size="7">
       hi <input data-role="axis-hi" data-var="${name}" value="${escapeHtml(state.hi)}" size="7">
       step <input data-role="axis-step" data-var="${name}" value="${escapeHtml(state.step)}" size="7">`
    : `<input data-role="axis-fixed" data-var="${name}" value="${escapeHtml(state.fixed)}" size="10">`;
  return `<div class="field axis">
    <label class="var-name">${name}</label>
    <label class="sweep-toggle"><input type="checkbox" data-role="axis-sweep" data-var="${name}"${sweepChecked}> sweep</label>
    ${inputs}
    <span class="domain">${domainText(vd.lo, vd.hi, vd.unit)}</span>
  </div>`;
}

/** Render the form as an HTML string; app code owns attaching listeners.
 * The submit button is disabled until the current state builds cleanly. */
export function renderQueryForm(desc: LanguageDescriptor, raw: RawForm): string {
  const rows: string[] = [];
  const axisVars = new Set(boxAxisVars(desc));
  const names = Object.keys(desc.variables).sort();

  for (const name of names) {
    const vd = desc.variables[name];
    if (vd.kind === "box") continue;
    if (axisVars.has(name)) {
      rows.push(renderAxisRow(name, vd, raw.axes[name] ?? { sweep: false, fixed: "", lo: "", hi: "", step: "" }));
      continue;
    }
    const text = raw.values[name] ?? "";
    if (vd.kind === "symbol") {
      const options = ['<option value="">(not set)</option>']
        .concat(
          (vd.members ?? []).map((m) => {
            const sel = m === text ? " selected" : "";
            return `<option value="${escapeHtml(m)}"${sel}>${escapeHtml(m)}</option>`;
          }),
        )
        .join("");
      rows.push(`<div class="field"><label class="var-name">${name}</label>
        <select data-role="value" data-var="${name}">${options}</select></div>`);
    } else if (vd.kind === "profile") {
      rows.push(`<div class="field"><label class="var-name">${name}</label>
        <input data-role="value" data-var="${name}" value="${escapeHtml(text)}" placeholder="stimulus name"></div>`);
    } else {
      rows.push(`<div class="field"><label class="var-name">${name}</label>
        <input data-role="value" data-var="${name}" value="${escapeHtml(text)}" size="12">
        <span class="domain">${domainText(vd.lo, vd.hi, vd.unit)}</span></div>`);
    }
  }

  const built = buildQuery(desc, raw);
  const errorItems = built.errors.map((e) => `<li>${escapeHtml(e)}</li>`).join("");
  const disabled = built.errors.length > 0 ? " disabled" : "";
  const schemes = desc.schemes.map((s) => `<code>{${s.join(", ")}}</code>`).join(" ");
  return `<form id="query-form" data-language="${escapeHtml(desc.id)}">
    ${rows.join("\n")}
    <p class="schemes-hint">valid shapes: ${schemes}</p>
    <ul class="form-errors">${errorItems}</ul>
    <button type="submit" id="submit-query"${disabled}>submit</button>
  </form>`;
}

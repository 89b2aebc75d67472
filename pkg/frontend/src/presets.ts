/** Reuse-threshold presets.
 *
 * Thresholds are fixed when the service starts (config file or environment),
 * so picking a preset here cannot change a submitted query. The selector
 * instead renders the launch snippet that would apply the chosen ladder.
 */

import { escapeHtml } from "./wire.js";

export interface ThresholdPreset {
  name: string;
  train: Record<string, number>;
  battery: Record<string, number>;
}

const TRAIN_DEFAULTS = { t_m: 100.0, t_FB: 0.05, t_v: 0.5, t_mu: 0.05, t_theta: 0.1, t_dist: 1.0 };

function scaledTrain(factor: number): Record<string, number> {
  const out: Record<string, number> = {};
  for (const [key, value] of Object.entries(TRAIN_DEFAULTS)) out[key] = value * factor;
  return out;
}

export const PRESETS: ThresholdPreset[] = [
  { name: "tight", train: scaledTrain(0.5), battery: { t_V: 0.5, t_R: 0.01, t_T: 0.5 } },
  { name: "unit", train: scaledTrain(1.0), battery: { t_V: 1.0, t_R: 0.02, t_T: 1.0 } },
  { name: "double", train: scaledTrain(2.0), battery: { t_V: 2.0, t_R: 0.03, t_T: 2.0 } },
  { name: "loose", train: scaledTrain(5.0), battery: { t_V: 5.0, t_R: 0.05, t_T: 5.0 } },
];

export function presetByName(name: string): ThresholdPreset | undefined {
  return PRESETS.find((p) => p.name === name);
}

export function launchSnippet(preset: ThresholdPreset): string {
  const train = JSON.stringify(preset.train);
  const battery = JSON.stringify(preset.battery);
  return `EXPREUSE_TRAIN='${train}' EXPREUSE_BATTERY='${battery}' python3 -m expreuse serve`;
}

export function renderPresetPanel(selectedName: string): string {
  const options = PRESETS.map((p) => {
    const sel = p.name === selectedName ? " selected" : "";
    return `<option value="${p.name}"${sel}>${p.name}</option>`;
  }).join("");
  const preset = presetByName(selectedName) ?? PRESETS[1];
  return [
    `<label>threshold preset <select id="preset-select">${options}</select></label>`,
    `<pre class="snippet">${escapeHtml(launchSnippet(preset))}</pre>`,
    `<p class="note">Thresholds apply when the service starts; this selector only shows the launch command and does not change the query below.</p>`,
  ].join("\n");
}

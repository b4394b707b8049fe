// Page wiring: upload a suspect image (optionally a bona fide reference),
// show the per-method gallery with verdicts, and flip operating points
// locally - thresholds arrive with the analysis, so no re-request is needed.

import { AnalyzeResponse, ApiClient, ApiError, MethodInfo, UploadRejected } from './api.js';
import { AnalysisView, OPERATING_POINTS, OperatingPoint, bannerSummary, buildAnalysisView } from './cards.js';
import { buildComparePanel } from './compare.js';
import {
  bindCardNavigation,
  bindLinkedZoom,
  renderBanner,
  renderComparePanel,
  renderErrorBanner,
  renderGallery,
} from './view.js';

interface AppState {
  methods: MethodInfo[];
  point: OperatingPoint;
  suspect: AnalysisView | null;
  reference: AnalysisView | null;
}

const api = new ApiClient('');
const state: AppState = { methods: [], point: 'eer', suspect: null, reference: null };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function redraw(): void {
  const banner = el<HTMLDivElement>('banner');
  const gallery = el<HTMLDivElement>('gallery');
  const compare = el<HTMLDivElement>('compare');
  if (!state.suspect) {
    banner.innerHTML = '';
    gallery.innerHTML = '<p class="hint">upload a suspect image to begin</p>';
    compare.innerHTML = '';
    return;
  }
  banner.innerHTML = renderBanner(bannerSummary(state.suspect, state.point), state.point);
  gallery.innerHTML = renderGallery(state.suspect, state.point);
  if (state.reference) {
    const panel = buildComparePanel(state.suspect, state.reference);
    compare.innerHTML =
      '<h2>suspect vs. reference (ordered by score gap)</h2>' +
      renderComparePanel(panel, state.point);
  } else {
    compare.innerHTML = '';
  }
}

function showError(message: string, retry: () => void): void {
  const banner = el<HTMLDivElement>('banner');
  banner.innerHTML = renderErrorBanner(message);
  banner.querySelector('.retry-btn')?.addEventListener('click', retry);
}

async function analyzeInto(slot: 'suspect' | 'reference', file: File): Promise<void> {
  try {
    const response: AnalyzeResponse = await api.analyze(file);
    state[slot] = buildAnalysisView(state.methods, response);
    redraw();
  } catch (err) {
    if (err instanceof UploadRejected) {
      showError(`${file.name}: ${err.message}`, () => undefined);
    } else if (err instanceof ApiError) {
      showError(err.message, () => void analyzeInto(slot, file));
    } else {
      throw err;
    }
  }
}

function bindUpload(inputId: string, slot: 'suspect' | 'reference'): void {
  const input = el<HTMLInputElement>(inputId);
  input.addEventListener('change', () => {
    const file = input.files?.[0];
    if (file) {
      void analyzeInto(slot, file);
    }
  });
}

function bindOperatingPoints(): void {
  const host = el<HTMLDivElement>('operating-points');
  host.innerHTML = OPERATING_POINTS.map(
    ({ id, label }, i) =>
      `<label><input type="radio" name="op" value="${id}" ${i === 0 ? 'checked' : ''}> ${label}</label>`,
  ).join('');
  host.addEventListener('change', () => {
    const picked = host.querySelector<HTMLInputElement>('input[name="op"]:checked');
    if (picked) {
      state.point = picked.value as OperatingPoint;
      redraw(); // pure re-render: thresholds were shipped with the analysis
    }
  });
}

async function boot(): Promise<void> {
  bindOperatingPoints();
  bindUpload('suspect-input', 'suspect');
  bindUpload('reference-input', 'reference');
  bindLinkedZoom(el('main'));
  bindCardNavigation(el('main'));
  try {
    state.methods = await api.methods();
    el<HTMLSpanElement>('method-count').textContent = `${state.methods.length} methods loaded`;
  } catch (err) {
    showError(err instanceof Error ? err.message : String(err), () => void boot());
  }
  redraw();
}

window.addEventListener('load', () => {
  void boot();
});

// DOM rendering. Cards and panels are built as HTML strings (hydrated with a
// couple of event bindings) so the layer stays testable without a browser.

import type { MapEntry } from './api.js';
import {
  AnalysisView,
  BannerSummary,
  MethodCard,
  OperatingPoint,
  bannerSummary,
  thresholdAt,
  verdictFor,
} from './cards.js';
import type { ComparePanel } from './compare.js';

function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function fmtScore(value: number | null): string {
  return value === null ? 'n/a' : value.toFixed(3);
}

function rangeTitle(card: MethodCard): string {
  if (!card.displayRange) {
    return 'no rendered map';
  }
  const [lo, hi] = card.displayRange;
  return `display range ${lo.toPrecision(4)} .. ${hi.toPrecision(4)}`;
}

function scoreBar(card: MethodCard, point: OperatingPoint): string {
  if (card.score === null) {
    return '<div class="scorebar scorebar-empty"></div>';
  }
  const threshold = thresholdAt(card, point);
  const marker =
    threshold === null
      ? ''
      : `<span class="threshold-marker" style="left:${(threshold * 100).toFixed(1)}%" ` +
        `title="threshold ${threshold.toFixed(3)}"></span>`;
  return (
    `<div class="scorebar">` +
    `<span class="score-fill" style="width:${(card.score * 100).toFixed(1)}%"></span>` +
    marker +
    `</div>`
  );
}

export function renderCard(card: MethodCard, point: OperatingPoint, mapSrc?: string): string {
  const verdict = verdictFor(card, point);
  const threshold = thresholdAt(card, point);
  const mapHtml = card.mapUrl
    ? `<img class="map-img" src="${esc(mapSrc ?? card.mapUrl)}" alt="${esc(card.method)} feature map" ` +
      `title="${esc(rangeTitle(card))}" draggable="false">`
    : `<div class="map-missing">no map</div>`;
  const errorHtml = card.error ? `<p class="card-error" role="note">${esc(card.error)}</p>` : '';
  const warningAttr = card.error ? ' data-error="1"' : '';
  return (
    `<article class="card verdict-${verdict}" role="listitem" tabindex="0" ` +
    `data-method="${esc(card.method)}" data-verdict="${verdict}"${warningAttr}>` +
    `<header><h3>${esc(card.method)}</h3>` +
    `<span class="verdict-chip">${verdict === 'attack' ? 'attack' : verdict === 'no-indication' ? 'clear' : 'n/a'}</span>` +
    `</header>` +
    mapHtml +
    `<div class="score-line">score <strong>${fmtScore(card.score)}</strong>` +
    (threshold === null ? '' : ` / thr ${threshold.toFixed(3)}`) +
    `</div>` +
    scoreBar(card, point) +
    errorHtml +
    `</article>`
  );
}

export function renderGallery(view: AnalysisView, point: OperatingPoint, baseUrl = ''): string {
  const cards = view.cards
    .map((c) => renderCard(c, point, c.mapUrl ? `${baseUrl}${c.mapUrl}` : undefined))
    .join('');
  return `<div class="gallery" role="list" aria-label="feature methods">${cards}</div>`;
}

export function renderBanner(summary: BannerSummary, point: OperatingPoint): string {
  const tone = summary.flagged > 0 ? 'banner-attack' : 'banner-clear';
  return (
    `<div class="banner ${tone}" role="status">` +
    `<strong>${esc(summary.text)}</strong> <span class="banner-point">at the ${point.toUpperCase()} operating point</span>` +
    `</div>`
  );
}

export function renderComparePanel(
  panel: ComparePanel,
  point: OperatingPoint,
  baseUrl = '',
): string {
  const rows = panel.pairs
    .map((pair) => {
      const left = pair.suspect
        ? renderCard(pair.suspect, point, pair.suspect.mapUrl ? `${baseUrl}${pair.suspect.mapUrl}` : undefined)
        : `<article class="card card-missing" role="listitem" data-method="${esc(pair.method)}">missing</article>`;
      const right = pair.reference
        ? renderCard(pair.reference, point, pair.reference.mapUrl ? `${baseUrl}${pair.reference.mapUrl}` : undefined)
        : `<article class="card card-missing" role="listitem" data-method="${esc(pair.method)}">missing</article>`;
      const chip = pair.warning
        ? `<span class="warning-chip" role="note">${esc(pair.warning)}</span>`
        : '';
      const gap = pair.gap === null ? '' : `<span class="gap">gap ${pair.gap.toFixed(3)}</span>`;
      return (
        `<section class="compare-row" data-method="${esc(pair.method)}">` +
        `<header class="compare-row-head">${esc(pair.method)} ${gap}${chip}</header>` +
        `<div class="compare-cols">${left}${right}</div>` +
        `</section>`
      );
    })
    .join('');
  return `<div class="compare-panel">${rows}</div>`;
}

export function renderErrorBanner(message: string): string {
  return (
    `<div class="banner banner-error" role="alert"><strong>error:</strong> ${esc(message)} ` +
    `<button type="button" class="retry-btn">retry</button></div>`
  );
}

/** Shared pan/zoom across every map in the container; maps stay pixelated so
 *  artefact pixels are never smoothed away (see styles.css). */
export function bindLinkedZoom(container: HTMLElement): void {
  const state = { scale: 1, x: 0, y: 0 };
  const apply = () => {
    container.querySelectorAll<HTMLImageElement>('.map-img').forEach((img) => {
      img.style.transform = `translate(${state.x}px, ${state.y}px) scale(${state.scale})`;
    });
  };
  container.addEventListener(
    'wheel',
    (ev) => {
      const target = ev.target as HTMLElement;
      if (!target.classList.contains('map-img')) {
        return;
      }
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
      state.scale = Math.min(16, Math.max(1, state.scale * factor));
      if (state.scale === 1) {
        state.x = 0;
        state.y = 0;
      }
      apply();
    },
    { passive: false },
  );
  let dragging: { startX: number; startY: number; baseX: number; baseY: number } | null = null;
  container.addEventListener('pointerdown', (ev) => {
    const target = ev.target as HTMLElement;
    if (!target.classList.contains('map-img') || state.scale === 1) {
      return;
    }
    dragging = { startX: ev.clientX, startY: ev.clientY, baseX: state.x, baseY: state.y };
  });
  container.addEventListener('pointermove', (ev) => {
    if (!dragging) {
      return;
    }
    state.x = dragging.baseX + (ev.clientX - dragging.startX);
    state.y = dragging.baseY + (ev.clientY - dragging.startY);
    apply();
  });
  const stop = () => {
    dragging = null;
  };
  container.addEventListener('pointerup', stop);
  container.addEventListener('pointerleave', stop);
}

/** Arrow-key navigation across the card list. */
export function bindCardNavigation(container: HTMLElement): void {
  container.addEventListener('keydown', (ev) => {
    if (ev.key !== 'ArrowRight' && ev.key !== 'ArrowLeft') {
      return;
    }
    const cards = [...container.querySelectorAll<HTMLElement>('[role="listitem"]')];
    const current = cards.indexOf(document.activeElement as HTMLElement);
    if (current < 0) {
      return;
    }
    const next = ev.key === 'ArrowRight' ? current + 1 : current - 1;
    if (next >= 0 && next < cards.length) {
      cards[next].focus();
      ev.preventDefault();
    }
  });
}

export function galleryBanner(view: AnalysisView, point: OperatingPoint): string {
  return renderBanner(bannerSummary(view, point), point);
}

export function mapsByMethod(maps: MapEntry[]): Map<string, MapEntry> {
  return new Map(maps.map((m) => [m.method, m]));
}

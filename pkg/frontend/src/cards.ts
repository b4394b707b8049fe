// Pure view-model layer: everything displayed derives from API fields, and
// operating-point changes re-evaluate locally - no score is ever computed here.

import type { AnalyzeResponse, MethodInfo, OperatingThresholds } from './api.js';

export type OperatingPoint = 'eer' | 'bpcer10' | 'bpcer20';

export const OPERATING_POINTS: { id: OperatingPoint; label: string }[] = [
  { id: 'eer', label: 'EER' },
  { id: 'bpcer10', label: 'BPCER10' },
  { id: 'bpcer20', label: 'BPCER20' },
];

export interface MethodCard {
  method: string;
  score: number | null;
  thresholds: OperatingThresholds | null;
  mapUrl: string | null;
  displayRange: [number, number] | null;
  error: string | null;
}

export interface AnalysisView {
  id: string;
  cards: MethodCard[];
}

export type Verdict = 'attack' | 'no-indication' | 'unavailable';

/** One card per method advertised by the service; per-method gaps in the
 *  analysis response surface as inline errors instead of dropping the card. */
export function buildAnalysisView(methods: MethodInfo[], response: AnalyzeResponse): AnalysisView {
  const scoreByMethod = new Map(response.scores.map((s) => [s.method, s]));
  const mapByMethod = new Map(response.maps.map((m) => [m.method, m]));
  const cards = methods.map((info): MethodCard => {
    const score = scoreByMethod.get(info.method);
    const map = mapByMethod.get(info.method);
    return {
      method: info.method,
      score: score ? score.score : null,
      thresholds: score ? score.thresholds : info.thresholds,
      mapUrl: map ? map.url : null,
      displayRange: map ? map.display_range : null,
      error: score ? null : 'no score returned for this method',
    };
  });
  return { id: response.id, cards };
}

export function thresholdAt(card: MethodCard, point: OperatingPoint): number | null {
  return card.thresholds ? card.thresholds[point] : null;
}

/** Decision rule shared with the service: score >= threshold means attack. */
export function verdictFor(card: MethodCard, point: OperatingPoint): Verdict {
  const threshold = thresholdAt(card, point);
  if (card.score === null || threshold === null) {
    return 'unavailable';
  }
  return card.score >= threshold ? 'attack' : 'no-indication';
}

export interface BannerSummary {
  flagged: number;
  scored: number;
  text: string;
}

/** The banner never fuses scores; it reports how many methods flag the image. */
export function bannerSummary(view: AnalysisView, point: OperatingPoint): BannerSummary {
  const scored = view.cards.filter((c) => verdictFor(c, point) !== 'unavailable');
  const flagged = scored.filter((c) => verdictFor(c, point) === 'attack');
  const text =
    flagged.length === 0
      ? `no indication (0 of ${scored.length} methods flag this image)`
      : `${flagged.length} of ${scored.length} methods flag this image`;
  return { flagged: flagged.length, scored: scored.length, text };
}

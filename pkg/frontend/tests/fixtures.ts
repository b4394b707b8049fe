// Mock /v1 payloads mirroring the service schema exactly.

import type { AnalyzeResponse, MethodInfo } from '../src/api.js';

export const METHODS: MethodInfo[] = [
  { method: 'BSIF_NH', config: { bank: '3x3_5bit' }, thresholds: { eer: 0.5, bpcer10: 0.4, bpcer20: 0.7 } },
  { method: 'DCT2', config: { blockwise: false }, thresholds: { eer: 0.45, bpcer10: 0.35, bpcer20: 0.6 } },
  { method: 'ELA', config: { quality: 70 }, thresholds: { eer: 0.5, bpcer10: 0.45, bpcer20: 0.65 } },
  { method: 'LBP81', config: {}, thresholds: { eer: 0.55, bpcer10: 0.4, bpcer20: 0.75 } },
];

export function analyzeResponse(overrides: Partial<Record<string, number>> = {}): AnalyzeResponse {
  const scores = {
    BSIF_NH: 0.62,
    DCT2: 0.41,
    ELA: 0.9,
    LBP81: 0.2,
    ...overrides,
  };
  return {
    id: 'tok123',
    scores: METHODS.map((m) => ({
      method: m.method,
      score: scores[m.method as keyof typeof scores] as number,
      eer_threshold: m.thresholds.eer,
      thresholds: m.thresholds,
    })),
    maps: METHODS.filter((m) => m.method !== 'LBP81').map((m) => ({
      method: m.method,
      url: `/v1/maps/tok123/${m.method}.png`,
      display_range: [0, 255] as [number, number],
    })),
  };
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

import { describe, expect, it } from 'vitest';

import { bannerSummary, buildAnalysisView, verdictFor } from '../src/cards.js';
import { METHODS, analyzeResponse } from './fixtures.js';

describe('buildAnalysisView', () => {
  it('yields one card per method advertised by the service', () => {
    const view = buildAnalysisView(METHODS, analyzeResponse());
    expect(view.cards.map((c) => c.method)).toEqual(['BSIF_NH', 'DCT2', 'ELA', 'LBP81']);
    expect(view.id).toBe('tok123');
  });

  it('keeps a card with an inline error when a method returned no score', () => {
    const response = analyzeResponse();
    response.scores = response.scores.filter((s) => s.method !== 'DCT2');
    const view = buildAnalysisView(METHODS, response);
    const dct = view.cards.find((c) => c.method === 'DCT2');
    expect(dct).toBeDefined();
    expect(dct!.score).toBeNull();
    expect(dct!.error).toMatch(/no score/);
    // the rest of the gallery is unaffected
    expect(view.cards.filter((c) => c.error === null)).toHaveLength(3);
  });

  it('attaches map urls and display ranges where present', () => {
    const view = buildAnalysisView(METHODS, analyzeResponse());
    const ela = view.cards.find((c) => c.method === 'ELA')!;
    expect(ela.mapUrl).toBe('/v1/maps/tok123/ELA.png');
    expect(ela.displayRange).toEqual([0, 255]);
    const lbp = view.cards.find((c) => c.method === 'LBP81')!;
    expect(lbp.mapUrl).toBeNull();
  });
});

describe('verdicts and operating points', () => {
  it('flags a card when score >= threshold at the selected point', () => {
    const view = buildAnalysisView(METHODS, analyzeResponse({ BSIF_NH: 0.62 }));
    const card = view.cards.find((c) => c.method === 'BSIF_NH')!;
    expect(verdictFor(card, 'eer')).toBe('attack'); // 0.62 >= 0.5
    expect(verdictFor(card, 'bpcer20')).toBe('no-indication'); // 0.62 < 0.7
  });

  it('switching the point flips verdicts using only shipped thresholds', () => {
    const view = buildAnalysisView(METHODS, analyzeResponse({ DCT2: 0.42 }));
    const card = view.cards.find((c) => c.method === 'DCT2')!;
    expect(verdictFor(card, 'bpcer10')).toBe('attack'); // 0.42 >= 0.35
    expect(verdictFor(card, 'eer')).toBe('no-indication'); // 0.42 < 0.45
    expect(verdictFor(card, 'bpcer20')).toBe('no-indication'); // 0.42 < 0.6
  });

  it('exact threshold ties count as attack', () => {
    const view = buildAnalysisView(METHODS, analyzeResponse({ ELA: 0.5 }));
    const card = view.cards.find((c) => c.method === 'ELA')!;
    expect(verdictFor(card, 'eer')).toBe('attack');
  });

  it('unavailable scores never contribute a verdict', () => {
    const response = analyzeResponse();
    response.scores = [];
    const view = buildAnalysisView(METHODS, response);
    for (const card of view.cards) {
      expect(verdictFor(card, 'eer')).toBe('unavailable');
    }
  });
});

describe('bannerSummary', () => {
  it('counts flagging methods instead of fusing scores', () => {
    const view = buildAnalysisView(METHODS, analyzeResponse());
    // at EER: BSIF_NH 0.62>=0.5, ELA 0.9>=0.5 flag; DCT2 0.41<0.45, LBP81 0.2<0.55 do not
    const summary = bannerSummary(view, 'eer');
    expect(summary.flagged).toBe(2);
    expect(summary.scored).toBe(4);
    expect(summary.text).toBe('2 of 4 methods flag this image');
  });

  it('reports no indication when everything scores below threshold', () => {
    const view = buildAnalysisView(
      METHODS,
      analyzeResponse({ BSIF_NH: 0.1, DCT2: 0.1, ELA: 0.1, LBP81: 0.1 }),
    );
    const summary = bannerSummary(view, 'eer');
    expect(summary.flagged).toBe(0);
    expect(summary.text).toMatch(/^no indication/);
  });
});

// Suspect-vs-reference pairing: both columns always share method order, and
// the order itself is the visual diff - biggest score gaps first.

import type { AnalysisView, MethodCard } from './cards.js';

export interface ComparePair {
  method: string;
  suspect: MethodCard | null;
  reference: MethodCard | null;
  /** |suspect - reference| when both scored, otherwise null (sorted last). */
  gap: number | null;
  warning: string | null;
}

export interface ComparePanel {
  pairs: ComparePair[];
  warnings: string[];
}

export function buildComparePanel(suspect: AnalysisView, reference: AnalysisView): ComparePanel {
  const suspectBy = new Map(suspect.cards.map((c) => [c.method, c]));
  const referenceBy = new Map(reference.cards.map((c) => [c.method, c]));
  const methods = [...suspectBy.keys()];
  for (const m of referenceBy.keys()) {
    if (!suspectBy.has(m)) {
      methods.push(m);
    }
  }
  const warnings: string[] = [];
  const pairs = methods.map((method): ComparePair => {
    const s = suspectBy.get(method) ?? null;
    const r = referenceBy.get(method) ?? null;
    let warning: string | null = null;
    if (!s || !r) {
      warning = `missing in ${s ? 'reference' : 'suspect'} analysis`;
      warnings.push(`${method}: ${warning}`);
    }
    const gap =
      s && r && s.score !== null && r.score !== null ? Math.abs(s.score - r.score) : null;
    return { method, suspect: s, reference: r, gap, warning };
  });
  // Largest gap first; unpaired methods last; ties keep the service order.
  const ranked = pairs
    .map((pair, index) => ({ pair, index }))
    .sort((a, b) => {
      const ga = a.pair.gap ?? -1;
      const gb = b.pair.gap ?? -1;
      if (ga !== gb) {
        return gb - ga;
      }
      return a.index - b.index;
    })
    .map((entry) => entry.pair);
  return { pairs: ranked, warnings };
}

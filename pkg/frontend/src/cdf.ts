import { columnIndex, EmptyCsvError, parseCsv, concatTables, Table } from "./csv.js";
import { styleFor } from "./styles.js";
import { document, legend, makeFrame, polyline, textAt } from "./svg.js";

export interface CdfCurve {
  scheme: string;
  latencyMs: number[];
  cumFrac: number[];
  plateau: number; // final cumulative fraction, annotated on the figure
}

/** Group rows into per-scheme step curves, preserving row order. */
export function cdfCurves(tables: Table[]): CdfCurve[] {
  const table = concatTables(tables);
  const [si, li, fi] = columnIndex(table, ["scheme", "latency_ms", "cum_frac"]);
  const by = new Map<string, CdfCurve>();
  for (const row of table.rows) {
    const scheme = row[si];
    let c = by.get(scheme);
    if (!c) {
      c = { scheme, latencyMs: [], cumFrac: [], plateau: 0 };
      by.set(scheme, c);
    }
    c.latencyMs.push(Number(row[li]));
    c.cumFrac.push(Number(row[fi]));
  }
  for (const c of by.values()) {
    for (const f of c.cumFrac) {
      if (!(f >= 0 && f <= 1)) {
        throw new Error(`scheme ${c.scheme}: cum_frac ${f} outside [0, 1]`);
      }
    }
    c.plateau = c.cumFrac[c.cumFrac.length - 1];
  }
  return [...by.values()];
}

export interface CdfFigure {
  svg: string;
  curves: CdfCurve[];
  warnings: string[];
}

/** Latency CDF figure: one monotone step curve per scheme, each plateau
 * labeled with its final delivered fraction (the PRR). */
export function cdfFigure(csvTexts: string[]): CdfFigure {
  if (csvTexts.length === 0) throw new EmptyCsvError();
  const curves = cdfCurves(csvTexts.map(parseCsv));
  const warnings: string[] = [];
  const warn = (m: string) => warnings.push(m);

  const xMax = Math.max(...curves.map((c) => c.latencyMs[c.latencyMs.length - 1]));
  const frame = makeFrame([0, Math.max(xMax, 1)], [0, 1], "latency (ms)", "delivered fraction of relevant pairs");

  const entries = [];
  for (const c of curves) {
    const style = styleFor(c.scheme, warn);
    const pts: [number, number][] = [[frame.x(0), frame.y(0)]];
    let prev = 0;
    for (let i = 0; i < c.latencyMs.length; i++) {
      // step: hold the previous level until this latency, then rise
      pts.push([frame.x(c.latencyMs[i]), frame.y(prev)]);
      pts.push([frame.x(c.latencyMs[i]), frame.y(c.cumFrac[i])]);
      prev = c.cumFrac[i];
    }
    pts.push([frame.x(frame.x.domain[1]), frame.y(prev)]);
    frame.body.push(polyline(pts, style.color, style.dash));
    frame.body.push(
      textAt(frame.x(frame.x.domain[1]) - 46, frame.y(c.plateau) - 4, c.plateau.toFixed(3), style.color),
    );
    entries.push({ label: style.label, color: style.color, dash: style.dash });
  }
  frame.body.push(...legend(entries));
  return { svg: document(frame.body), curves, warnings };
}

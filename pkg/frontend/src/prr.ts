import { columnIndex, EmptyCsvError, parseCsv, concatTables, Table } from "./csv.js";
import { styleFor } from "./styles.js";
import { bandPath, document, legend, makeFrame, polyline } from "./svg.js";

export interface PrrSeries {
  scheme: string;
  ranges: number[];
  mean: number[];
  std: number[]; // zero-length band when only one seed replicated
  seeds: number;
}

/** Mean and spread per (scheme, range) across seed replicates. */
export function prrSeries(tables: Table[]): PrrSeries[] {
  const table = concatTables(tables);
  const [si, ri, pi, , di] = columnIndex(table, ["scheme", "range_m", "prr", "n", "seed"]);
  const cells = new Map<string, Map<number, number[]>>();
  const seedSets = new Map<string, Set<string>>();
  for (const row of table.rows) {
    const scheme = row[si];
    const r = Number(row[ri]);
    let byRange = cells.get(scheme);
    if (!byRange) {
      byRange = new Map();
      cells.set(scheme, byRange);
      seedSets.set(scheme, new Set());
    }
    if (!byRange.has(r)) byRange.set(r, []);
    byRange.get(r)!.push(Number(row[pi]));
    seedSets.get(scheme)!.add(row[di]);
  }
  const out: PrrSeries[] = [];
  for (const [scheme, byRange] of cells) {
    const ranges = [...byRange.keys()].sort((a, b) => a - b);
    if (ranges.length < 2) {
      throw new Error(`scheme ${scheme}: need at least 2 range points, got ${ranges.length}`);
    }
    const mean = ranges.map((r) => {
      const v = byRange.get(r)!;
      return v.reduce((a, b) => a + b, 0) / v.length;
    });
    const std = ranges.map((r, i) => {
      const v = byRange.get(r)!;
      return Math.sqrt(v.reduce((a, b) => a + (b - mean[i]) ** 2, 0) / v.length);
    });
    out.push({ scheme, ranges, mean, std, seeds: seedSets.get(scheme)!.size });
  }
  return out;
}

export interface PrrFigure {
  svg: string;
  series: PrrSeries[];
  warnings: string[];
}

/** PRR versus target range: mean line per scheme with a +-1 std band
 * across seeds; the band is dropped (with a warning) for a single seed. */
export function prrFigure(csvTexts: string[]): PrrFigure {
  if (csvTexts.length === 0) throw new EmptyCsvError();
  const series = prrSeries(csvTexts.map(parseCsv));
  const warnings: string[] = [];
  const warn = (m: string) => warnings.push(m);

  const allRanges = series.flatMap((s) => s.ranges);
  const frame = makeFrame(
    [Math.min(...allRanges), Math.max(...allRanges)],
    [0, 1],
    "target range (m)",
    "packet reception ratio",
  );

  const entries = [];
  for (const s of series) {
    const style = styleFor(s.scheme, warn);
    if (s.seeds > 1) {
      const upper: [number, number][] = s.ranges.map((r, i) => [
        frame.x(r),
        frame.y(Math.min(1, s.mean[i] + s.std[i])),
      ]);
      const lower: [number, number][] = s.ranges.map((r, i) => [
        frame.x(r),
        frame.y(Math.max(0, s.mean[i] - s.std[i])),
      ]);
      frame.body.push(bandPath(upper, lower, style.color));
    } else {
      warn(`scheme ${s.scheme}: single seed, error band omitted`);
    }
    const pts: [number, number][] = s.ranges.map((r, i) => [frame.x(r), frame.y(s.mean[i])]);
    frame.body.push(polyline(pts, style.color, style.dash));
    for (const [px, py] of pts) {
      frame.body.push(`<circle cx="${px.toFixed(2)}" cy="${py.toFixed(2)}" r="3" fill="${style.color}"/>`);
    }
    entries.push({ label: style.label, color: style.color, dash: style.dash });
  }
  frame.body.push(...legend(entries));
  return { svg: document(frame.body), series, warnings };
}

/** Hand-rolled SVG figure scaffolding: one fixed frame, linear scales,
 * tick labels, and a legend box. No DOM, just strings. */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { top: 24, right: 200, bottom: 52, left: 64 };

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

/** Round-ish tick positions covering the domain. */
export function ticks(domain: [number, number], count = 6): number[] {
  const [lo, hi] = domain;
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const pick = candidates.find((s) => span / s <= count) ?? 10 * step;
  const out: number[] = [];
  for (let v = Math.ceil(lo / pick) * pick; v <= hi + 1e-9; v += pick) {
    out.push(Number(v.toFixed(10)));
  }
  return out;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export interface LegendEntry {
  label: string;
  color: string;
  dash: string;
}

export interface Frame {
  x: Scale;
  y: Scale;
  body: string[];
}

/** Plot frame with axes; callers push shapes into frame.body. */
export function makeFrame(
  xDomain: [number, number],
  yDomain: [number, number],
  xLabel: string,
  yLabel: string,
): Frame {
  const x = linearScale(xDomain, [MARGIN.left, WIDTH - MARGIN.right]);
  const y = linearScale(yDomain, [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const body: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  body.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333"/>`);
  for (const t of ticks(xDomain)) {
    const px = x(t);
    body.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`);
    body.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y1}" stroke="#ddd"/>`);
    body.push(`<text x="${px}" y="${y0 + 20}" text-anchor="middle" font-size="12">${t}</text>`);
  }
  for (const t of ticks(yDomain)) {
    const py = y(t);
    body.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    body.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#ddd"/>`);
    body.push(`<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" font-size="12">${t}</text>`);
  }
  body.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="13">${esc(xLabel)}</text>`,
  );
  body.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
  );
  return { x, y, body };
}

export function polyline(points: [number, number][], color: string, dash: string): string {
  const d = points.map(([px, py]) => `${px.toFixed(2)},${py.toFixed(2)}`).join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline points="${d}" fill="none" stroke="${color}" stroke-width="1.8"${dashAttr}/>`;
}

export function textAt(px: number, py: number, content: string, color: string): string {
  return `<text x="${px.toFixed(2)}" y="${py.toFixed(2)}" font-size="11" fill="${color}">${esc(content)}</text>`;
}

export function bandPath(
  upper: [number, number][],
  lower: [number, number][],
  color: string,
): string {
  const fwd = upper.map(([px, py]) => `${px.toFixed(2)},${py.toFixed(2)}`);
  const back = [...lower].reverse().map(([px, py]) => `${px.toFixed(2)},${py.toFixed(2)}`);
  return `<polygon points="${[...fwd, ...back].join(" ")}" fill="${color}" opacity="0.15"/>`;
}

export function legend(entries: LegendEntry[]): string[] {
  const lx = WIDTH - MARGIN.right + 16;
  const out: string[] = [];
  entries.forEach((e, i) => {
    const ly = MARGIN.top + 16 + i * 20;
    const dashAttr = e.dash ? ` stroke-dasharray="${e.dash}"` : "";
    out.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${e.color}" stroke-width="1.8"${dashAttr}/>`);
    out.push(`<text x="${lx + 32}" y="${ly + 4}" font-size="12">${esc(e.label)}</text>`);
  });
  return out;
}

export function document(body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    ...body,
    `</svg>`,
  ].join("\n");
}

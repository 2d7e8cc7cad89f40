/** Versioned scheme styling so regenerated figures stay comparable. */

export interface SchemeStyle {
  color: string;
  dash: string; // stroke-dasharray, "" for solid
  label: string;
}

export const STYLE_VERSION = 1;

export const SCHEME_STYLES: Record<string, SchemeStyle> = {
  "uu-unicast": { color: "#d62728", dash: "", label: "cellular unicast" },
  "uu-multicast": { color: "#1f77b4", dash: "", label: "cellular broadcast" },
  pc5: { color: "#2ca02c", dash: "", label: "sidelink" },
  "multirat-unicast": { color: "#ff7f0e", dash: "6 3", label: "sidelink + unicast" },
  "multirat-multicast": { color: "#9467bd", dash: "6 3", label: "sidelink + broadcast" },
};

const FALLBACK_COLORS = ["#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/** Known schemes get their fixed style; anything else a default with a warning.
 * The default color hangs off the name so reruns stay stable. */
export function styleFor(scheme: string, warn: (msg: string) => void): SchemeStyle {
  const s = SCHEME_STYLES[scheme];
  if (s) return s;
  warn(`unknown scheme '${scheme}', using default style`);
  let h = 0;
  for (const ch of scheme) h = (h * 31 + ch.charCodeAt(0)) >>> 0;
  return { color: FALLBACK_COLORS[h % FALLBACK_COLORS.length], dash: "2 2", label: scheme };
}

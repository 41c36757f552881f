// Standalone SVG figures; no DOM, no dependencies, byte-deterministic.

export interface Series {
  label: string;
  points: Array<{ x: number; y: number }>;
  dashed?: boolean;
}

const W = 560;
const H = 420;
const M = { left: 70, right: 160, top: 30, bottom: 50 };
const FLOOR = 1e-16;
const COLORS = ["#1f6fb2", "#c23b22", "#2e8b57", "#8a2be2", "#b8860b", "#444444"];

function fmtTick(v: number): string {
  if (v > 0) {
    const e = Math.log10(v);
    if (Number.isInteger(e)) return `1e${e}`;
  }
  return v.toPrecision(2);
}

function renderPlot(
  title: string,
  xLabel: string,
  yLabel: string,
  series: Series[],
  xLog: boolean
): string {
  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) throw new Error("no points to plot");
  const tx = (v: number) => (xLog ? Math.log10(Math.max(v, FLOOR)) : v);
  const ty = (v: number) => Math.log10(Math.max(v, FLOOR));
  const pad = (lo: number, hi: number): [number, number] =>
    hi - lo < 1e-12 ? [lo - 0.5, hi + 0.5] : [lo, hi];
  const [xmin, xmax] = pad(
    Math.min(...pts.map((p) => tx(p.x))),
    Math.max(...pts.map((p) => tx(p.x)))
  );
  const [ymin, ymax] = pad(
    Math.min(...pts.map((p) => ty(p.y))),
    Math.max(...pts.map((p) => ty(p.y)))
  );
  const sx = (v: number) => M.left + ((tx(v) - xmin) / (xmax - xmin)) * (W - M.left - M.right);
  const sy = (v: number) => H - M.bottom - ((ty(v) - ymin) / (ymax - ymin)) * (H - M.top - M.bottom);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<text x="${(M.left + W - M.right) / 2}" y="18" font-family="sans-serif" font-size="14" text-anchor="middle">${title}</text>`,
    `<line x1="${M.left}" y1="${H - M.bottom}" x2="${W - M.right}" y2="${H - M.bottom}" stroke="black"/>`,
    `<line x1="${M.left}" y1="${M.top}" x2="${M.left}" y2="${H - M.bottom}" stroke="black"/>`
  );
  // x ticks: decades when log, five even ticks when linear
  if (xLog) {
    for (let e = Math.ceil(xmin); e <= Math.floor(xmax); e++) {
      const v = Math.pow(10, e);
      parts.push(
        `<line x1="${sx(v).toFixed(1)}" y1="${H - M.bottom}" x2="${sx(v).toFixed(1)}" y2="${H - M.bottom + 5}" stroke="black"/>`,
        `<text x="${sx(v).toFixed(1)}" y="${H - M.bottom + 20}" font-family="sans-serif" font-size="11" text-anchor="middle">${fmtTick(v)}</text>`
      );
    }
  } else {
    for (let k = 0; k <= 4; k++) {
      const v = xmin + ((xmax - xmin) * k) / 4;
      const px = M.left + ((v - xmin) / (xmax - xmin)) * (W - M.left - M.right);
      parts.push(
        `<line x1="${px.toFixed(1)}" y1="${H - M.bottom}" x2="${px.toFixed(1)}" y2="${H - M.bottom + 5}" stroke="black"/>`,
        `<text x="${px.toFixed(1)}" y="${H - M.bottom + 20}" font-family="sans-serif" font-size="11" text-anchor="middle">${v.toPrecision(3)}</text>`
      );
    }
  }
  for (let e = Math.ceil(ymin); e <= Math.floor(ymax); e++) {
    const v = Math.pow(10, e);
    parts.push(
      `<line x1="${M.left - 5}" y1="${sy(v).toFixed(1)}" x2="${M.left}" y2="${sy(v).toFixed(1)}" stroke="black"/>`,
      `<text x="${M.left - 8}" y="${(sy(v) + 4).toFixed(1)}" font-family="sans-serif" font-size="11" text-anchor="end">${fmtTick(v)}</text>`
    );
  }
  parts.push(
    `<text x="${(M.left + W - M.right) / 2}" y="${H - 12}" font-family="sans-serif" font-size="12" text-anchor="middle">${xLabel}</text>`,
    `<text x="16" y="${(M.top + H - M.bottom) / 2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${(M.top + H - M.bottom) / 2})">${yLabel}</text>`
  );
  series.forEach((s, k) => {
    const color = COLORS[k % COLORS.length];
    const path = s.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`)
      .join(" ");
    parts.push(
      `<path d="${path}" fill="none" stroke="${color}" stroke-width="1.5"${s.dashed ? ' stroke-dasharray="6 4"' : ""}/>`
    );
    for (const p of s.points) {
      parts.push(
        `<circle cx="${sx(p.x).toFixed(1)}" cy="${sy(p.y).toFixed(1)}" r="3" fill="${color}"/>`
      );
    }
    const ly = M.top + 14 + 16 * k;
    parts.push(
      `<line x1="${W - M.right + 10}" y1="${ly - 4}" x2="${W - M.right + 30}" y2="${ly - 4}" stroke="${color}" stroke-width="1.5"${s.dashed ? ' stroke-dasharray="6 4"' : ""}/>`,
      `<text x="${W - M.right + 35}" y="${ly}" font-family="sans-serif" font-size="11">${s.label}</text>`
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Log-log line plot (gap vs swept parameter).  Nonpositive gaps are clipped
 * to a tiny floor so exactly-converged rows stay visible at the bottom. */
export function logLogPlot(
  title: string,
  xLabel: string,
  yLabel: string,
  series: Series[]
): string {
  return renderPlot(title, xLabel, yLabel, series, true);
}

/** Linear-t, log-y decay overlay used for the critical-sweep reference. */
export function decayOverlay(
  title: string,
  T: number,
  curves: Array<{ label: string; rate: number; dashed?: boolean }>
): string {
  const n = 60;
  const series: Series[] = curves.map((c) => ({
    label: c.label,
    dashed: c.dashed,
    points: Array.from({ length: n + 1 }, (_, i) => {
      const t = (i / n) * T;
      return { x: t, y: Math.exp(-c.rate * t) };
    }),
  }));
  return renderPlot(title, "t", "bulk mass fraction", series, false);
}

/** Hand-assembled SVG line charts; no DOM, no chart library. */

export interface Series {
  x: number[];
  y: number[];
  color: string;
  label: string;
  width?: number;
  dash?: string;
  markers?: boolean;
}

export interface ChartOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logX?: boolean;
  logY?: boolean;
  annotations?: string[];
  width?: number;
  height?: number;
}

const MARGIN = { left: 72, right: 24, top: 44, bottom: 52 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? mag * 10;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = first; t <= hi + 1e-12 * span; t += step) ticks.push(t);
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.floor(lo); e <= Math.ceil(hi); e++) ticks.push(e);
  return ticks;
}

function fmtTick(v: number, log: boolean): string {
  if (log) return `1e${v}`;
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(0);
  return String(Math.round(v * 1000) / 1000);
}

export function buildChart(opts: ChartOpts): string {
  const W = opts.width ?? 720;
  const H = opts.height ?? 480;
  const iw = W - MARGIN.left - MARGIN.right;
  const ih = H - MARGIN.top - MARGIN.bottom;
  const tx = (v: number) => (opts.logX ? Math.log10(v) : v);
  const ty = (v: number) => (opts.logY ? Math.log10(v) : v);

  const xs = opts.series.flatMap((s) => s.x.map(tx));
  const ys = opts.series.flatMap((s) => s.y.map(ty));
  let x0 = Math.min(...xs);
  let x1 = Math.max(...xs);
  let y0 = Math.min(...ys);
  let y1 = Math.max(...ys);
  if (x0 === x1) (x0 -= 0.5), (x1 += 0.5);
  if (y0 === y1) (y0 -= 0.5), (y1 += 0.5);
  const padX = 0.04 * (x1 - x0);
  const padY = 0.06 * (y1 - y0);
  x0 -= padX; x1 += padX; y0 -= padY; y1 += padY;

  const px = (v: number) => MARGIN.left + ((tx(v) - x0) / (x1 - x0)) * iw;
  const py = (v: number) => MARGIN.top + ih - ((ty(v) - y0) / (y1 - y0)) * ih;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
      `viewBox="0 0 ${W} ${H}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="20" text-anchor="middle" font-size="15" font-weight="bold">` +
      `${esc(opts.title)}</text>`
  );

  const xticks = opts.logX ? logTicks(x0, x1) : niceTicks(x0, x1);
  const yticks = opts.logY ? logTicks(y0, y1) : niceTicks(y0, y1);
  for (const t of xticks) {
    if (t < x0 || t > x1) continue;
    const x = MARGIN.left + ((t - x0) / (x1 - x0)) * iw;
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + ih}" ` +
        `stroke="#ddd"/>`,
      `<text x="${x}" y="${MARGIN.top + ih + 18}" text-anchor="middle">` +
        `${fmtTick(t, !!opts.logX)}</text>`
    );
  }
  for (const t of yticks) {
    if (t < y0 || t > y1) continue;
    const y = MARGIN.top + ih - ((t - y0) / (y1 - y0)) * ih;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + iw}" y2="${y}" ` +
        `stroke="#ddd"/>`,
      `<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end">` +
        `${fmtTick(t, !!opts.logY)}</text>`
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${iw}" height="${ih}" ` +
      `fill="none" stroke="#333"/>`,
    `<text x="${MARGIN.left + iw / 2}" y="${H - 12}" text-anchor="middle">` +
      `${esc(opts.xLabel)}</text>`,
    `<text x="18" y="${MARGIN.top + ih / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${MARGIN.top + ih / 2})">${esc(opts.yLabel)}</text>`
  );

  for (const s of opts.series) {
    const pts = s.x.map((v, i) => `${px(v).toFixed(2)},${py(s.y[i]).toFixed(2)}`);
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}" ` +
        `stroke-width="${s.width ?? 1.5}"${dash}/>`
    );
    if (s.markers) {
      for (const p of pts) {
        const [cx, cy] = p.split(",");
        parts.push(`<circle cx="${cx}" cy="${cy}" r="3" fill="${s.color}"/>`);
      }
    }
  }

  let ly = MARGIN.top + 10;
  for (const s of opts.series) {
    const lx = MARGIN.left + iw - 190;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 22}" y2="${ly}" stroke="${s.color}" ` +
        `stroke-width="2"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`,
      `<text x="${lx + 28}" y="${ly + 4}">${esc(s.label)}</text>`
    );
    ly += 16;
  }
  for (const a of opts.annotations ?? []) {
    parts.push(
      `<text x="${MARGIN.left + 10}" y="${ly + 4}" fill="#333">${esc(a)}</text>`
    );
    ly += 16;
  }
  parts.push("</svg>");
  return parts.join("\n");
}

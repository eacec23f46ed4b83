/**
 * Hand-built SVG rendering of convergence panels: a grid of log-y panels
 * (two columns once there is more than one panel), decade ticks, legend per
 * curve. Pure function of the panel data, so identical inputs give
 * byte-identical output.
 */

import type { PanelData } from "./panels.js";

const PANEL_W = 380;
const PANEL_H = 280;
const MARGIN = { top: 34, right: 16, bottom: 42, left: 64 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/** Values below this floor are clamped so converged tails stay visible. */
export const LOG_FLOOR = 1e-16;

function fmtTick(value: number): string {
  const exp = Math.round(Math.log10(value));
  return `1e${exp}`;
}

function path(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`)
    .join(" ");
}

function renderPanel(panel: PanelData, originX: number, originY: number): string {
  const plotW = PANEL_W - MARGIN.left - MARGIN.right;
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom;
  const x0 = originX + MARGIN.left;
  const y0 = originY + MARGIN.top;

  let xMax = 1;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const curve of panel.curves) {
    for (const [x, y] of curve.points) {
      const clamped = Math.max(y, LOG_FLOOR);
      xMax = Math.max(xMax, x);
      yMin = Math.min(yMin, clamped);
      yMax = Math.max(yMax, clamped);
    }
  }
  if (!Number.isFinite(yMin)) {
    yMin = LOG_FLOOR;
    yMax = 1;
  }
  const expLo = Math.floor(Math.log10(yMin));
  const expHi = Math.ceil(Math.log10(yMax * (yMax === yMin ? 10 : 1)));
  const logLo = expLo;
  const logHi = Math.max(expHi, expLo + 1);

  const sx = (x: number) => x0 + (plotW * x) / xMax;
  const sy = (y: number) =>
    y0 + plotH - (plotH * (Math.log10(Math.max(y, LOG_FLOOR)) - logLo)) / (logHi - logLo);

  const parts: string[] = [`<g class="panel" data-title="${panel.title}">`];
  parts.push(
    `<rect x="${x0}" y="${y0}" width="${plotW}" height="${plotH}" fill="none" stroke="#444"/>`,
  );
  parts.push(
    `<text x="${originX + PANEL_W / 2}" y="${originY + 18}" text-anchor="middle" font-size="13" font-weight="bold">${panel.title}</text>`,
  );

  // y ticks on decades, thinned to at most eight labels
  const decades = logHi - logLo;
  const stride = Math.max(1, Math.ceil(decades / 8));
  for (let e = logLo; e <= logHi; e += stride) {
    const y = sy(Math.pow(10, e));
    parts.push(`<line x1="${x0 - 4}" y1="${y.toFixed(2)}" x2="${x0}" y2="${y.toFixed(2)}" stroke="#444"/>`);
    parts.push(
      `<text x="${x0 - 7}" y="${(y + 3.5).toFixed(2)}" text-anchor="end" font-size="10">${fmtTick(Math.pow(10, e))}</text>`,
    );
  }
  // x ticks
  for (let i = 0; i <= 4; i++) {
    const xVal = Math.round((xMax * i) / 4);
    const x = sx(xVal);
    parts.push(`<line x1="${x.toFixed(2)}" y1="${y0 + plotH}" x2="${x.toFixed(2)}" y2="${y0 + plotH + 4}" stroke="#444"/>`);
    parts.push(
      `<text x="${x.toFixed(2)}" y="${y0 + plotH + 16}" text-anchor="middle" font-size="10">${xVal}</text>`,
    );
  }
  parts.push(
    `<text x="${originX + PANEL_W / 2}" y="${originY + PANEL_H - 8}" text-anchor="middle" font-size="11">iteration</text>`,
  );
  parts.push(
    `<text x="${originX + 14}" y="${y0 + plotH / 2}" text-anchor="middle" font-size="11" transform="rotate(-90 ${originX + 14} ${y0 + plotH / 2})">${panel.yLabel}</text>`,
  );

  panel.curves.forEach((curve, ci) => {
    const color = PALETTE[ci % PALETTE.length];
    if (curve.points.length > 0) {
      const pts = curve.points.map(([x, y]) => [sx(x), sy(y)] as [number, number]);
      parts.push(
        `<path class="curve" data-label="${curve.label}" d="${path(pts)}" fill="none" stroke="${color}" stroke-width="1.4"/>`,
      );
    }
    const ly = y0 + 12 + 13 * ci;
    const lx = x0 + plotW - 6;
    parts.push(`<line x1="${lx - 70}" y1="${ly - 3}" x2="${lx - 54}" y2="${ly - 3}" stroke="${color}" stroke-width="2"/>`);
    parts.push(
      `<text class="legend" x="${lx - 50}" y="${ly}" text-anchor="start" font-size="10">${curve.label}</text>`,
    );
  });
  parts.push("</g>");
  return parts.join("\n");
}

export function renderFigure(panels: PanelData[]): string {
  if (panels.length === 0) {
    throw new Error("no panels to render");
  }
  const cols = panels.length > 1 ? 2 : 1;
  const rows = Math.ceil(panels.length / cols);
  const width = cols * PANEL_W;
  const height = rows * PANEL_H;
  const body = panels
    .map((panel, i) => renderPanel(panel, (i % cols) * PANEL_W, Math.floor(i / cols) * PANEL_H))
    .join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
  );
}

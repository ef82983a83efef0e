/** Pure chart geometry for a series slice, plus a small SVG renderer.
 *
 * Geometry is computed separately from the DOM so tests can assert on
 * coordinates. Multivariate slices are reduced to per-step mean and max
 * lines, the same reduction the scoring prompt applies to wide windows.
 */

import type { SeriesSlice } from "./types.js";

export interface PlotPoint {
  t: number;
  x: number;
  y: number;
}

export interface PlotLine {
  name: "value" | "mean" | "max";
  points: PlotPoint[];
}

export interface PlotMarker {
  t: number;
  x: number;
  y: number;
  label: 0 | 1;
  provenance: string;
}

export interface PlotBand {
  x0: number;
  x1: number;
}

export interface PlotModel {
  width: number;
  height: number;
  lines: PlotLine[];
  /** Query window extent, when it overlaps the slice. */
  band: PlotBand | null;
  markers: PlotMarker[];
  yMin: number;
  yMax: number;
}

export interface PlotOptions {
  width?: number;
  height?: number;
  pad?: number;
  /** Inclusive timestep range to highlight. */
  window?: { t0: number; t1: number };
}

function rows(values: number[] | number[][]): number[][] {
  if (values.length === 0) return [];
  return typeof values[0] === "number"
    ? (values as number[]).map((v) => [v])
    : (values as number[][]);
}

export function reduceSlice(values: number[] | number[][]): PlotLine["name"][] {
  const first = rows(values)[0];
  return first !== undefined && first.length > 1 ? ["mean", "max"] : ["value"];
}

export function plotModel(slice: SeriesSlice, opts: PlotOptions = {}): PlotModel {
  const width = opts.width ?? 720;
  const height = opts.height ?? 180;
  const pad = opts.pad ?? 8;
  const grid = rows(slice.values);
  const n = grid.length;

  const channels: { name: PlotLine["name"]; series: number[] }[] = [];
  if (n > 0 && grid[0]!.length > 1) {
    channels.push({
      name: "mean",
      series: grid.map((row) => row.reduce((a, b) => a + b, 0) / row.length),
    });
    channels.push({ name: "max", series: grid.map((row) => Math.max(...row)) });
  } else {
    channels.push({ name: "value", series: grid.map((row) => row[0] ?? 0) });
  }

  let yMin = Infinity;
  let yMax = -Infinity;
  for (const { series } of channels) {
    for (const v of series) {
      if (v < yMin) yMin = v;
      if (v > yMax) yMax = v;
    }
  }
  if (!isFinite(yMin)) {
    yMin = 0;
    yMax = 1;
  }
  if (yMax === yMin) {
    yMax = yMin + 1;
  }

  const span = Math.max(slice.to - 1 - slice.from, 1);
  const sx = (t: number) => pad + ((t - slice.from) / span) * (width - 2 * pad);
  const sy = (v: number) =>
    height - pad - ((v - yMin) / (yMax - yMin)) * (height - 2 * pad);

  const lines: PlotLine[] = channels.map(({ name, series }) => ({
    name,
    points: series.map((v, i) => ({
      t: slice.from + i,
      x: sx(slice.from + i),
      y: sy(v),
    })),
  }));

  let band: PlotBand | null = null;
  if (opts.window) {
    const t0 = Math.max(opts.window.t0, slice.from);
    const t1 = Math.min(opts.window.t1, slice.to - 1);
    if (t0 <= t1) band = { x0: sx(t0), x1: sx(t1) };
  }

  const primary = lines[0]!;
  const markers: PlotMarker[] = [];
  for (const rec of slice.labels) {
    if (rec.t < slice.from || rec.t >= slice.to) continue;
    const point = primary.points[rec.t - slice.from];
    if (!point) continue;
    markers.push({
      t: rec.t,
      x: point.x,
      y: point.y,
      label: rec.label,
      provenance: rec.provenance,
    });
  }

  return { width, height, lines, band, markers, yMin, yMax };
}

export function linePath(points: PlotPoint[]): string {
  return points
    .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`)
    .join(" ");
}

const SVG_NS = "http://www.w3.org/2000/svg";

/** Build an <svg> element for the model inside the given document. */
export function renderPlot(doc: Document, model: PlotModel): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${model.width} ${model.height}`);
  svg.setAttribute("class", "context-plot");

  if (model.band) {
    const rect = doc.createElementNS(SVG_NS, "rect");
    rect.setAttribute("class", "query-band");
    rect.setAttribute("x", model.band.x0.toFixed(1));
    rect.setAttribute("y", "0");
    rect.setAttribute("width", (model.band.x1 - model.band.x0).toFixed(1));
    rect.setAttribute("height", String(model.height));
    svg.appendChild(rect);
  }
  for (const line of model.lines) {
    const path = doc.createElementNS(SVG_NS, "path");
    path.setAttribute("class", `line line-${line.name}`);
    path.setAttribute("d", linePath(line.points));
    path.setAttribute("fill", "none");
    svg.appendChild(path);
  }
  for (const marker of model.markers) {
    const dot = doc.createElementNS(SVG_NS, "circle");
    dot.setAttribute(
      "class",
      marker.label === 1 ? "marker marker-anomaly" : "marker marker-normal",
    );
    dot.setAttribute("cx", marker.x.toFixed(1));
    dot.setAttribute("cy", marker.y.toFixed(1));
    dot.setAttribute("r", "3");
    svg.appendChild(dot);
  }
  return svg;
}

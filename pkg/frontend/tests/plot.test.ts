import { describe, expect, it } from "vitest";

import { linePath, plotModel } from "../src/plot.js";
import type { SeriesSlice } from "../src/types.js";

function slice(partial: Partial<SeriesSlice>): SeriesSlice {
  return {
    series: "s",
    from: 0,
    to: 4,
    values: [0, 1, 2, 3],
    labels: [],
    ...partial,
  };
}

describe("plot geometry", () => {
  it("univariate slice yields a single value line", () => {
    const model = plotModel(slice({}), { width: 100, height: 50, pad: 0 });
    expect(model.lines.map((l) => l.name)).toEqual(["value"]);
    expect(model.lines[0]!.points).toHaveLength(4);
  });

  it("x coordinates span the drawing area in timestep order", () => {
    const model = plotModel(slice({}), { width: 90, height: 50, pad: 0 });
    const xs = model.lines[0]!.points.map((p) => p.x);
    expect(xs[0]).toBe(0);
    expect(xs[3]).toBe(90);
    expect([...xs].sort((a, b) => a - b)).toEqual(xs);
  });

  it("y axis is inverted: larger values sit higher on screen", () => {
    const model = plotModel(slice({}), { width: 100, height: 50, pad: 0 });
    const ys = model.lines[0]!.points.map((p) => p.y);
    expect(ys[3]).toBeLessThan(ys[0]!);
    expect(model.yMin).toBe(0);
    expect(model.yMax).toBe(3);
  });

  it("multivariate slice reduces to mean and max bands", () => {
    const values = [
      [0, 2, 4],
      [1, 1, 1],
      [3, 0, 0],
    ];
    const model = plotModel(slice({ values, to: 3 }), {
      width: 100,
      height: 50,
      pad: 0,
    });
    expect(model.lines.map((l) => l.name)).toEqual(["mean", "max"]);
    const meanLine = model.lines[0]!;
    const maxLine = model.lines[1]!;
    expect(meanLine.points[0]!.t).toBe(0);
    // mean of (0,2,4) is 2; max is 4
    const yOf = (v: number) => 50 - ((v - model.yMin) / (model.yMax - model.yMin)) * 50;
    expect(meanLine.points[0]!.y).toBeCloseTo(yOf(2), 6);
    expect(maxLine.points[0]!.y).toBeCloseTo(yOf(4), 6);
  });

  it("a 38-channel slice still yields exactly two bands", () => {
    const wide = Array.from({ length: 5 }, (_, t) =>
      Array.from({ length: 38 }, (_, d) => Math.sin(t + d)),
    );
    const model = plotModel(slice({ values: wide, to: 5 }));
    expect(model.lines.map((l) => l.name)).toEqual(["mean", "max"]);
  });

  it("query window becomes a band clipped to the slice", () => {
    const model = plotModel(slice({}), {
      width: 90,
      height: 50,
      pad: 0,
      window: { t0: 2, t1: 9 },
    });
    expect(model.band).not.toBeNull();
    expect(model.band!.x0).toBeCloseTo(60, 6);
    expect(model.band!.x1).toBeCloseTo(90, 6);
  });

  it("window fully outside the slice yields no band", () => {
    const model = plotModel(slice({}), { window: { t0: 50, t1: 60 } });
    expect(model.band).toBeNull();
  });

  it("labels inside the slice become markers at line height", () => {
    const model = plotModel(
      slice({
        labels: [
          { series: "s", t: 2, label: 1, provenance: "human", confidence: 1 },
          { series: "s", t: 9, label: 0, provenance: "human", confidence: 1 },
        ],
      }),
      { width: 90, height: 50, pad: 0 },
    );
    expect(model.markers).toHaveLength(1);
    const marker = model.markers[0]!;
    expect(marker.t).toBe(2);
    expect(marker.label).toBe(1);
    expect(marker.x).toBeCloseTo(model.lines[0]!.points[2]!.x, 6);
  });

  it("flat series still produces a usable vertical scale", () => {
    const model = plotModel(slice({ values: [2, 2, 2, 2] }));
    expect(model.yMax).toBeGreaterThan(model.yMin);
    expect(model.lines[0]!.points.every((p) => isFinite(p.y))).toBe(true);
  });
});

describe("svg path", () => {
  it("emits move-then-line commands", () => {
    expect(
      linePath([
        { t: 0, x: 0, y: 1 },
        { t: 1, x: 10, y: 2 },
        { t: 2, x: 20, y: 3 },
      ]),
    ).toBe("M0.0,1.0 L10.0,2.0 L20.0,3.0");
  });
});

#!/usr/bin/env node
/**
 * Post-processes solver output directories.
 *
 *   analyze <run_dir> [more_run_dirs...]
 *
 * errors.csv       -> convergence.svg  (log-log, fitted lines, slopes)
 * diagnostics.csv  -> energy.svg       (kinetic energy vs time; extra run
 *                                       dirs overlay as labeled curves)
 *
 * Images are written beside their inputs, primary outputs are untouched.
 */

import { existsSync, writeFileSync } from "fs";
import * as path from "path";

import { column, readCsv } from "./csv.js";
import { fitSlopes } from "./fit.js";
import { buildChart, Series } from "./svg.js";

const PALETTE = ["#d62728", "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b"];

export function plotConvergence(runDir: string): string {
  const src = path.join(runDir, "errors.csv");
  const table = readCsv(src);
  const fits = fitSlopes(table, src);
  const dx = column(table, "dx", src);
  const series: Series[] = [];
  const annotations: string[] = [];
  fits.forEach((f, i) => {
    const err = column(table, f.label, src);
    const color = PALETTE[i % PALETTE.length];
    series.push({ x: dx, y: err, color, label: f.label, markers: true });
    series.push({
      x: dx,
      y: dx.map((h) => Math.exp(f.slope * Math.log(h) + f.intercept)),
      color,
      label: `${f.label} fit`,
      dash: "5,4",
      width: 1,
    });
    annotations.push(`${f.label}: slope ${f.slope.toFixed(3)}`);
  });
  const svg = buildChart({
    title: "Grid refinement: max error vs dx",
    xLabel: "dx",
    yLabel: "L-inf error",
    logX: true,
    logY: true,
    series,
    annotations,
  });
  const out = path.join(runDir, "convergence.svg");
  writeFileSync(out, svg);
  return out;
}

export function plotEnergy(runDirs: string[]): string {
  const series: Series[] = [];
  runDirs.forEach((dir, i) => {
    const src = path.join(dir, "diagnostics.csv");
    const table = readCsv(src);
    if (table.rows.length === 0) {
      throw new Error(`${src}: no diagnostics rows to plot`);
    }
    series.push({
      x: column(table, "time", src),
      y: column(table, "kinetic_energy", src),
      color: PALETTE[i % PALETTE.length],
      label: path.basename(path.resolve(dir)),
      width: 1.6,
    });
  });
  const svg = buildChart({
    title: "Kinetic energy over time",
    xLabel: "time",
    yLabel: "kinetic energy",
    series,
  });
  const out = path.join(runDirs[0], "energy.svg");
  writeFileSync(out, svg);
  return out;
}

export function analyze(runDirs: string[]): string[] {
  if (runDirs.length === 0) {
    throw new Error("usage: analyze <run_dir> [more_run_dirs...]");
  }
  const primary = runDirs[0];
  const written: string[] = [];
  const hasErrors = existsSync(path.join(primary, "errors.csv"));
  const diagDirs = runDirs.filter((d) =>
    existsSync(path.join(d, "diagnostics.csv"))
  );
  if (!hasErrors && diagDirs.length === 0) {
    throw new Error(
      `nothing to plot: neither ${path.join(primary, "errors.csv")} nor ` +
        `${path.join(primary, "diagnostics.csv")} exists`
    );
  }
  if (hasErrors) {
    written.push(plotConvergence(primary));
  }
  if (diagDirs.length > 0) {
    written.push(plotEnergy(diagDirs));
  }
  return written;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("analyze.js") || entry.endsWith("analyze.ts")) {
  try {
    for (const out of analyze(process.argv.slice(2))) {
      console.log(`wrote ${out}`);
    }
  } catch (e) {
    console.error(`error: ${e instanceof Error ? e.message : e}`);
    process.exit(1);
  }
}

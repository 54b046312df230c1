/** Convergence-order estimation: least squares on (log dx, log error). */

import { column, NumericTable } from "./csv.js";

export interface ConvergenceFit {
  label: string;
  slope: number;
  intercept: number;
  /** sum of squared residuals of the log-log line */
  residual: number;
}

export class FitError extends Error {}

export function leastSquaresLine(x: number[], y: number[]): {
  slope: number;
  intercept: number;
  residual: number;
} {
  const n = x.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let residual = 0;
  for (let i = 0; i < n; i++) {
    const d = y[i] - (slope * x[i] + intercept);
    residual += d * d;
  }
  return { slope, intercept, residual };
}

/** One fit per error column of an errors.csv table (first column is dx). */
export function fitSlopes(table: NumericTable, source = "errors.csv"): ConvergenceFit[] {
  if (table.rows.length < 3) {
    throw new FitError(
      `${source}: need at least 3 rows for a slope fit, got ${table.rows.length}`
    );
  }
  const dx = column(table, "dx", source);
  const logDx = dx.map(Math.log);
  const fits: ConvergenceFit[] = [];
  for (const name of table.columns) {
    if (name === "dx") continue;
    const err = column(table, name, source);
    if (err.some((e) => e <= 0)) {
      throw new FitError(`${source}: column ${name} has non-positive errors`);
    }
    const { slope, intercept, residual } = leastSquaresLine(logDx, err.map(Math.log));
    fits.push({ label: name, slope, intercept, residual });
  }
  return fits;
}

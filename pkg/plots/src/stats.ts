/**
 * Small statistics helpers for figure construction: kernel density
 * smoothing, empirical quantiles and normal quantiles. These are the only
 * statistics the renderer computes; everything else is read from the
 * artifact files as persisted.
 */

/** Empirical quantile with linear interpolation (matches numpy default). */
export function quantile(sorted: number[], q: number): number {
  if (sorted.length === 0) throw new Error("quantile of empty sample");
  if (q <= 0) return sorted[0];
  if (q >= 1) return sorted[sorted.length - 1];
  const pos = q * (sorted.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  const frac = pos - lo;
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

export function mean(xs: number[]): number {
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

export function stddev(xs: number[]): number {
  const m = mean(xs);
  const v = xs.reduce((a, b) => a + (b - m) * (b - m), 0) / (xs.length - 1);
  return Math.sqrt(v);
}

/** Gaussian kernel density estimate on an equispaced grid (Silverman bandwidth). */
export function kde(xs: number[], points = 200): { grid: number[]; density: number[] } {
  if (xs.length < 2) throw new Error("kde needs at least two observations");
  const sd = stddev(xs);
  const sorted = [...xs].sort((a, b) => a - b);
  const iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  const spread = Math.min(sd, iqr / 1.349) || sd || 1e-9;
  const h = 0.9 * spread * Math.pow(xs.length, -0.2);
  const lo = sorted[0] - 3 * h;
  const hi = sorted[sorted.length - 1] + 3 * h;
  const grid: number[] = [];
  const density: number[] = [];
  const normConst = 1 / (xs.length * h * Math.sqrt(2 * Math.PI));
  for (let k = 0; k < points; k++) {
    const x = lo + ((hi - lo) * k) / (points - 1);
    let acc = 0;
    for (const xi of xs) {
      const z = (x - xi) / h;
      acc += Math.exp(-0.5 * z * z);
    }
    grid.push(x);
    density.push(acc * normConst);
  }
  return { grid, density };
}

/**
 * Inverse standard normal CDF (Acklam's rational approximation, |error| < 1.2e-9).
 */
export function normalQuantile(p: number): number {
  if (p <= 0 || p >= 1) throw new Error(`normalQuantile domain: ${p}`);
  const a = [-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2, 1.38357751867269e2, -3.066479806614716e1, 2.506628277459239];
  const b = [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
  const c = [-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838, -2.549732539343734, 4.374664141464968, 2.938163982698783];
  const d = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
  const pl = 0.02425;
  if (p < pl) {
    const q = Math.sqrt(-2 * Math.log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - pl) {
    const q = Math.sqrt(-2 * Math.log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const q = p - 0.5;
  const r = q * q;
  return ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q) /
    (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

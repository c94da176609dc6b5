/** Dominance helpers for the scatter matrix and the focus-region shading. */

/** True when a is no worse in every objective and strictly better in one. */
export function dominates(a: number[], b: number[]): boolean {
    let strict = false;
    for (let i = 0; i < a.length; i++) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

export function nonDominatedMask(points: number[][]): boolean[] {
    return points.map((p, i) =>
        points.every((q, j) => i === j || !dominates(q, p)),
    );
}

function normalize(points: number[][]): number[][] {
    const k = points[0].length;
    const lo = new Array(k).fill(Infinity);
    const hi = new Array(k).fill(-Infinity);
    for (const p of points) {
        for (let i = 0; i < k; i++) {
            lo[i] = Math.min(lo[i], p[i]);
            hi[i] = Math.max(hi[i], p[i]);
        }
    }
    return points.map((p) =>
        p.map((v, i) => (hi[i] > lo[i] ? (v - lo[i]) / (hi[i] - lo[i]) : 0)),
    );
}

function scalarized(point: number[], w: number[], rho = 0.05): number {
    let worst = -Infinity;
    let sum = 0;
    for (let i = 0; i < point.length; i++) {
        const v = w[i] * point[i];
        worst = Math.max(worst, v);
        sum += v;
    }
    return worst + rho * sum;
}

/**
 * First-objective interval of the front the weight box focuses on: the
 * segment between the scalarized optima at the two extreme w1 values.
 * Pure client-side display; recomputed on slider moves without refetching.
 */
export function focusRange(
    points: number[][],
    w1lo: number,
    w1hi: number,
): [number, number] | null {
    if (points.length === 0 || w1lo > w1hi) return null;
    const scaled = normalize(points);
    const pick = (w1: number): number => {
        const w = [w1, 1 - w1];
        let best = 0;
        for (let i = 1; i < scaled.length; i++) {
            if (scalarized(scaled[i], w) < scalarized(scaled[best], w)) best = i;
        }
        return points[best][0];
    };
    const a = pick(w1lo);
    const b = pick(w1hi);
    return [Math.min(a, b), Math.max(a, b)];
}

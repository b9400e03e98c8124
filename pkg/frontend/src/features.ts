/**
 * Feature expansion and standardization at the classifier boundary.
 *
 * The stored window rows carry 45 continuous features plus one categorical
 * road-class code; the network consumes rows with the code expanded to six
 * indicator inputs. Continuous features are z-scored with statistics from
 * the training windows; the statistics ship with any saved model so
 * prediction applies the identical transform.
 */

import {
    Dataset,
    FEATURE_WIDTH,
    N_ROAD_CLASSES,
    ROAD_COL,
    windowRows,
} from "./dataset";

export const EXPANDED_WIDTH = FEATURE_WIDTH - 1 + N_ROAD_CLASSES; // 51

export interface Standardization {
    mean: number[]; // per expanded column; 0 for indicator columns
    std: number[];  // per expanded column; 1 for indicator columns
}

export function expandRow(row: number[]): number[] {
    const out = new Array<number>(EXPANDED_WIDTH).fill(0);
    let c = 0;
    for (let i = 0; i < FEATURE_WIDTH; i++) {
        if (i === ROAD_COL) continue;
        out[c++] = row[i];
    }
    const code = Math.round(row[ROAD_COL]);
    if (code >= 1 && code <= N_ROAD_CLASSES) {
        out[FEATURE_WIDTH - 1 + code - 1] = 1;
    }
    return out;
}

/** Windows expanded to [n][T][EXPANDED_WIDTH]. */
export function expandWindows(ds: Dataset, indices: number[]): number[][][] {
    return indices.map((idx) => windowRows(ds, idx).map(expandRow));
}

export function fitStandardization(expanded: number[][][]): Standardization {
    const mean = new Array<number>(EXPANDED_WIDTH).fill(0);
    const std = new Array<number>(EXPANDED_WIDTH).fill(1);
    if (expanded.length === 0) return { mean, std };
    const continuous = FEATURE_WIDTH - 1;
    let count = 0;
    for (const win of expanded) {
        for (const row of win) {
            count++;
            for (let c = 0; c < continuous; c++) mean[c] += row[c];
        }
    }
    for (let c = 0; c < continuous; c++) mean[c] /= count;
    const varAcc = new Array<number>(continuous).fill(0);
    for (const win of expanded) {
        for (const row of win) {
            for (let c = 0; c < continuous; c++) {
                const d = row[c] - mean[c];
                varAcc[c] += d * d;
            }
        }
    }
    for (let c = 0; c < continuous; c++) {
        const sd = Math.sqrt(varAcc[c] / count);
        std[c] = sd < 1e-12 ? 1 : sd;
    }
    return { mean, std };
}

export function applyStandardization(
    expanded: number[][][], stats: Standardization): number[][][] {
    return expanded.map((win) => win.map((row) =>
        row.map((v, c) => (v - stats.mean[c]) / stats.std[c])));
}

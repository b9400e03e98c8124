/**
 * Temporal pattern attention scoring path in plain double-precision arrays.
 *
 * The network layer runs the same formulas in float32 tensors; this module
 * exists so the attention gradients can be verified against central finite
 * differences at double precision, and so the tensor implementation can be
 * cross-checked forward against an independent one.
 *
 * Shapes: H is [m][T] (one row per hidden feature across the attention
 * window), hT is the last hidden state [m]. Filters C are [k][T] (each
 * filter spans the full temporal extent), the scorer Wa is [k][m], and the
 * combiners Wh [d][m], Wv [d][k] merge the last state with the attention
 * context into the output [d].
 *
 *   HC = H C^T            [m][k]   row-wise temporal convolution
 *   a  = Wa hT            [k]
 *   s  = HC a             [m]      score of each feature row against hT
 *   alpha = sigmoid(s)    [m]
 *   v  = HC^T alpha       [k]      sigmoid-weighted context
 *   out = Wh hT + Wv v    [d]
 */

export interface TpaParams {
    C: number[][];
    Wa: number[][];
    Wh: number[][];
    Wv: number[][];
}

export interface TpaCache {
    H: number[][];
    hT: number[];
    HC: number[][];
    a: number[];
    s: number[];
    alpha: number[];
    v: number[];
    out: number[];
}

const matVec = (M: number[][], x: number[]): number[] =>
    M.map((row) => row.reduce((acc, v, j) => acc + v * x[j], 0));

const zeros = (n: number): number[] => new Array(n).fill(0);
const zeros2 = (r: number, c: number): number[][] =>
    Array.from({ length: r }, () => zeros(c));

export function tpaForward(H: number[][], hT: number[], p: TpaParams): TpaCache {
    const m = H.length;
    const k = p.C.length;
    const HC = zeros2(m, k);
    for (let i = 0; i < m; i++) {
        for (let j = 0; j < k; j++) {
            let acc = 0;
            for (let l = 0; l < H[i].length; l++) acc += H[i][l] * p.C[j][l];
            HC[i][j] = acc;
        }
    }
    const a = matVec(p.Wa, hT);
    const s = HC.map((row) => row.reduce((acc, v, j) => acc + v * a[j], 0));
    const alpha = s.map((x) => 1 / (1 + Math.exp(-x)));
    const v = zeros(k);
    for (let i = 0; i < m; i++) {
        for (let j = 0; j < k; j++) v[j] += alpha[i] * HC[i][j];
    }
    const context = matVec(p.Wv, v);
    const out = matVec(p.Wh, hT).map((x, i) => x + context[i]);
    return { H, hT, HC, a, s, alpha, v, out };
}

export interface TpaGrads {
    dC: number[][];
    dWa: number[][];
    dWh: number[][];
    dWv: number[][];
    dH: number[][];
    dhT: number[];
    /** Contribution to dHC flowing through the scores alone. */
    scorePathHC: number[][];
}

export function tpaBackward(cache: TpaCache, p: TpaParams,
                            gOut: number[]): TpaGrads {
    const { H, hT, HC, a, alpha, v } = cache;
    const m = H.length;
    const T = H[0].length;
    const k = p.C.length;
    const d = p.Wh.length;

    const dWh = zeros2(d, hT.length);
    const dWv = zeros2(d, k);
    const dhT = zeros(hT.length);
    const dv = zeros(k);
    for (let r = 0; r < d; r++) {
        for (let c = 0; c < hT.length; c++) {
            dWh[r][c] += gOut[r] * hT[c];
            dhT[c] += gOut[r] * p.Wh[r][c];
        }
        for (let c = 0; c < k; c++) {
            dWv[r][c] += gOut[r] * v[c];
            dv[c] += gOut[r] * p.Wv[r][c];
        }
    }

    // v = HC^T alpha: split into the value path (through alpha * HC) and the
    // score path (through alpha's dependence on s = HC a).
    const dAlpha = zeros(m);
    const dHC = zeros2(m, k);
    for (let i = 0; i < m; i++) {
        for (let j = 0; j < k; j++) {
            dAlpha[i] += dv[j] * HC[i][j];
            dHC[i][j] += dv[j] * alpha[i];
        }
    }
    const dS = dAlpha.map((g, i) => g * alpha[i] * (1 - alpha[i]));

    const dA = zeros(k);
    const scorePathHC = zeros2(m, k);
    for (let i = 0; i < m; i++) {
        for (let j = 0; j < k; j++) {
            dA[j] += dS[i] * HC[i][j];
            scorePathHC[i][j] = dS[i] * a[j];
            dHC[i][j] += scorePathHC[i][j];
        }
    }

    const dWa = zeros2(k, hT.length);
    for (let j = 0; j < k; j++) {
        for (let c = 0; c < hT.length; c++) {
            dWa[j][c] += dA[j] * hT[c];
            dhT[c] += dA[j] * p.Wa[j][c];
        }
    }

    const dC = zeros2(k, T);
    const dH = zeros2(m, T);
    for (let i = 0; i < m; i++) {
        for (let j = 0; j < k; j++) {
            for (let l = 0; l < T; l++) {
                dC[j][l] += dHC[i][j] * H[i][l];
                dH[i][l] += dHC[i][j] * p.C[j][l];
            }
        }
    }
    return { dC, dWa, dWh, dWv, dH, dhT, scorePathHC };
}

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

export interface GradientCheckConfig {
    m: number;       // hidden-feature rows (2 * lstm units in the network)
    T: number;       // attention window length
    k: number;       // filter count
    d: number;       // combined output size
    batch: number;
    seed: number;
    step: number;
    tolerance: number;
}

export const DEFAULT_CHECK: GradientCheckConfig = {
    m: 6, T: 5, k: 4, d: 3, batch: 4, seed: 7, step: 1e-3, tolerance: 1e-4,
};

export interface GradientCheckReport {
    maxRelError: number;
    worstBlock: string;
    checks: number;
    passed: boolean;
    perBlock: { [block: string]: number };
}

/** Deterministic light-weight RNG (mulberry32) so checks are repeatable. */
export function makeRng(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
        state = (state + 0x6d2b79f5) >>> 0;
        let t = state;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

const randMat = (rng: () => number, r: number, c: number): number[][] =>
    Array.from({ length: r }, () =>
        Array.from({ length: c }, () => (rng() - 0.5)));

/** Loss for the check: L = 0.5 * sum(out^2), so dL/dout = out. */
function batchLoss(Hs: number[][][], hTs: number[][], p: TpaParams): number {
    let loss = 0;
    for (let b = 0; b < Hs.length; b++) {
        const { out } = tpaForward(Hs[b], hTs[b], p);
        loss += 0.5 * out.reduce((acc, v) => acc + v * v, 0);
    }
    return loss;
}

export function tpaGradientCheck(
    cfg: Partial<GradientCheckConfig> = {}): GradientCheckReport {
    const c = { ...DEFAULT_CHECK, ...cfg };
    const rng = makeRng(c.seed);
    const Hs = Array.from({ length: c.batch }, () => randMat(rng, c.m, c.T));
    const hTs = Array.from({ length: c.batch }, () =>
        randMat(rng, 1, c.m)[0]);
    const params: TpaParams = {
        C: randMat(rng, c.k, c.T),
        Wa: randMat(rng, c.k, c.m),
        Wh: randMat(rng, c.d, c.m),
        Wv: randMat(rng, c.d, c.k),
    };

    const analytic: TpaParams = {
        C: randMat(rng, c.k, c.T).map((r) => r.map(() => 0)),
        Wa: randMat(rng, c.k, c.m).map((r) => r.map(() => 0)),
        Wh: randMat(rng, c.d, c.m).map((r) => r.map(() => 0)),
        Wv: randMat(rng, c.d, c.k).map((r) => r.map(() => 0)),
    };
    for (let b = 0; b < c.batch; b++) {
        const cache = tpaForward(Hs[b], hTs[b], params);
        const grads = tpaBackward(cache, params, cache.out);
        const add = (dst: number[][], src: number[][]) =>
            src.forEach((row, i) => row.forEach((v, j) => (dst[i][j] += v)));
        add(analytic.C, grads.dC);
        add(analytic.Wa, grads.dWa);
        add(analytic.Wh, grads.dWh);
        add(analytic.Wv, grads.dWv);
    }

    const perBlock: { [block: string]: number } = {};
    let maxRelError = 0;
    let worstBlock = "";
    let checks = 0;
    const blocks: [string, number[][], number[][]][] = [
        ["C", params.C, analytic.C],
        ["Wa", params.Wa, analytic.Wa],
        ["Wh", params.Wh, analytic.Wh],
        ["Wv", params.Wv, analytic.Wv],
    ];
    for (const [name, mat, grad] of blocks) {
        let blockMax = 0;
        for (let i = 0; i < mat.length; i++) {
            for (let j = 0; j < mat[i].length; j++) {
                const saved = mat[i][j];
                mat[i][j] = saved + c.step;
                const up = batchLoss(Hs, hTs, params);
                mat[i][j] = saved - c.step;
                const down = batchLoss(Hs, hTs, params);
                mat[i][j] = saved;
                const fd = (up - down) / (2 * c.step);
                const denom = Math.max(Math.abs(fd), Math.abs(grad[i][j]), 1e-8);
                const rel = Math.abs(fd - grad[i][j]) / denom;
                blockMax = Math.max(blockMax, rel);
                checks++;
            }
        }
        perBlock[name] = blockMax;
        if (blockMax > maxRelError) {
            maxRelError = blockMax;
            worstBlock = name;
        }
    }
    return {
        maxRelError, worstBlock, checks,
        passed: maxRelError <= c.tolerance, perBlock,
    };
}

/**
 * CNN-Bi-LSTM network with temporal pattern attention.
 *
 * Each timestep's feature row passes through a shared 1-D convolution with
 * ReLU and dropout; the per-timestep embeddings feed stacked bidirectional
 * LSTM layers; attention applies row-wise convolutional filters across the
 * hidden-state matrix, scores the filtered rows against the last hidden
 * state, and combines the sigmoid-weighted context with that state before
 * the softmax output over the four rating classes.
 */

import * as tf from "@tensorflow/tfjs";

export interface NetworkConfig {
    convFilters: number;
    kernelSize: number;
    dropout: number;
    lstmLayers: number;
    lstmUnits: number;
    tpaFilters: number;
    combineUnits: number;
    epochs: number;
    learningRate: number;
    batchSize: number;
    seed: number;
    /** Attention over the first T-1 states instead of all T. */
    excludeLastState: boolean;
}

export const DEFAULT_CONFIG: NetworkConfig = {
    convFilters: 32,
    kernelSize: 3,
    dropout: 0.2,
    lstmLayers: 2,
    lstmUnits: 64,
    tpaFilters: 16,
    combineUnits: 64,
    epochs: 60,
    learningRate: 1e-3,
    batchSize: 32,
    seed: 0,
    excludeLastState: false,
};

export function resolveConfig(partial: Partial<NetworkConfig> = {}): NetworkConfig {
    const cfg = { ...DEFAULT_CONFIG, ...partial };
    if (cfg.convFilters < 1 || cfg.lstmUnits < 1 || cfg.tpaFilters < 1
        || cfg.lstmLayers < 1 || cfg.combineUnits < 1) {
        throw new Error("network dimensions must be positive");
    }
    if (cfg.dropout < 0 || cfg.dropout >= 1) {
        throw new Error("dropout must lie in [0, 1)");
    }
    return cfg;
}

/**
 * Temporal pattern attention over the Bi-LSTM hidden-state matrix.
 *
 * Input [B, T, m]; output [B, combineUnits]. The filter bank spans the full
 * temporal extent of the attention window, so the row-wise convolution is a
 * single matrix product per hidden feature.
 */
export class TemporalPatternAttention extends tf.layers.Layer {
    static readonly className = "TemporalPatternAttention";

    private readonly filters: number;
    private readonly combineUnits: number;
    private readonly excludeLast: boolean;
    private readonly seed: number;
    private attnWindow = 0;
    private filterBank: tf.LayerVariable | null = null;
    private scorer: tf.LayerVariable | null = null;
    private combineH: tf.LayerVariable | null = null;
    private combineV: tf.LayerVariable | null = null;

    constructor(args: { filters: number; combineUnits: number;
                        excludeLast: boolean; seed: number; name?: string }) {
        super({ name: args.name });
        this.filters = args.filters;
        this.combineUnits = args.combineUnits;
        this.excludeLast = args.excludeLast;
        this.seed = args.seed;
    }

    override build(inputShape: tf.Shape | tf.Shape[]): void {
        const shape = inputShape as tf.Shape;
        const timesteps = shape[1] as number;
        const hidden = shape[2] as number;
        this.attnWindow = this.excludeLast ? timesteps - 1 : timesteps;
        const init = (seedOffset: number) =>
            tf.initializers.glorotUniform({ seed: this.seed + seedOffset });
        if (this.attnWindow > 0) {
            this.filterBank = this.addWeight(
                "filter_bank", [this.attnWindow, this.filters], "float32", init(1));
            this.scorer = this.addWeight(
                "scorer", [hidden, this.filters], "float32", init(2));
            this.combineV = this.addWeight(
                "combine_context", [this.filters, this.combineUnits], "float32",
                init(4));
        }
        this.combineH = this.addWeight(
            "combine_state", [hidden, this.combineUnits], "float32", init(3));
        super.build(inputShape);
    }

    override computeOutputShape(inputShape: tf.Shape | tf.Shape[]): tf.Shape {
        const shape = inputShape as tf.Shape;
        return [shape[0], this.combineUnits];
    }

    override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
        return tf.tidy(() => {
            const x = (Array.isArray(inputs) ? inputs[0] : inputs) as tf.Tensor3D;
            const timesteps = x.shape[1];
            const last = x
                .slice([0, timesteps - 1, 0], [-1, 1, -1])
                .squeeze([1]) as tf.Tensor2D;            // [B, m]
            const fromState = tf.matMul(
                last, this.combineH!.read() as tf.Tensor2D);

            if (this.attnWindow <= 0) {
                // Degenerate window: attention reduces to the last state.
                return fromState;
            }
            const windowed = x.slice([0, 0, 0], [-1, this.attnWindow, -1]);
            const H = windowed.transpose([0, 2, 1]);     // [B, m, T_att]
            const HC = tf.matMul(
                H, this.filterBank!.read().expandDims(0)
                    .tile([H.shape[0], 1, 1]) as tf.Tensor3D);  // [B, m, k]
            const a = tf.matMul(
                last, this.scorer!.read() as tf.Tensor2D);      // [B, k]
            const scores = tf.matMul(HC, a.expandDims(2)).squeeze([2]); // [B, m]
            const alpha = tf.sigmoid(scores);
            const context = tf.matMul(
                alpha.expandDims(1), HC).squeeze([1]) as tf.Tensor2D;   // [B, k]
            const fromContext = tf.matMul(
                context, this.combineV!.read() as tf.Tensor2D);
            return tf.add(fromState, fromContext);
        });
    }

    override getConfig(): tf.serialization.ConfigDict {
        return {
            ...super.getConfig(),
            filters: this.filters,
            combineUnits: this.combineUnits,
            excludeLast: this.excludeLast,
            seed: this.seed,
        };
    }
}

tf.serialization.registerClass(TemporalPatternAttention);

export function buildNetwork(cfg: NetworkConfig, window: number,
                             featureWidth: number): tf.LayersModel {
    if (cfg.kernelSize > featureWidth) {
        throw new Error("conv kernel larger than the feature row");
    }
    const input = tf.input({ shape: [window, featureWidth] });

    // Shared per-timestep 1-D convolution over the feature axis.
    let x = tf.layers.reshape({ targetShape: [window, featureWidth, 1] })
        .apply(input) as tf.SymbolicTensor;
    x = tf.layers.timeDistributed({
        layer: tf.layers.conv1d({
            filters: cfg.convFilters,
            kernelSize: cfg.kernelSize,
            activation: "relu",
            kernelInitializer: tf.initializers.glorotUniform({ seed: cfg.seed + 11 }),
        }),
    }).apply(x) as tf.SymbolicTensor;
    x = tf.layers.dropout({ rate: cfg.dropout, seed: cfg.seed + 12 })
        .apply(x) as tf.SymbolicTensor;
    x = tf.layers.timeDistributed({ layer: tf.layers.flatten() })
        .apply(x) as tf.SymbolicTensor;

    for (let i = 0; i < cfg.lstmLayers; i++) {
        x = tf.layers.bidirectional({
            layer: tf.layers.lstm({
                units: cfg.lstmUnits,
                returnSequences: true,
                kernelInitializer: tf.initializers.glorotUniform(
                    { seed: cfg.seed + 20 + i }),
                recurrentInitializer: tf.initializers.glorotUniform(
                    { seed: cfg.seed + 40 + i }),
            }) as tf.layers.RNN,
            mergeMode: "concat",
        }).apply(x) as tf.SymbolicTensor;
    }

    x = new TemporalPatternAttention({
        filters: cfg.tpaFilters,
        combineUnits: cfg.combineUnits,
        excludeLast: cfg.excludeLastState,
        seed: cfg.seed + 60,
    }).apply(x) as tf.SymbolicTensor;

    // Zero-initialized output head keeps training equivariant under class
    // permutations of the label encoding.
    const output = tf.layers.dense({
        units: 4,
        activation: "softmax",
        kernelInitializer: "zeros",
        biasInitializer: "zeros",
    }).apply(x) as tf.SymbolicTensor;

    const model = tf.model({ inputs: input, outputs: output });
    model.compile({
        optimizer: tf.train.adam(cfg.learningRate),
        loss: "categoricalCrossentropy",
        metrics: ["accuracy"],
    });
    return model;
}

/** Serializable weight snapshot (pure tfjs in Node has no file handler). */
export async function weightsToJson(model: tf.LayersModel): Promise<string> {
    const weights = model.getWeights();
    const arrays = await Promise.all(weights.map(async (w) => ({
        shape: w.shape,
        values: Array.from(await w.data()),
    })));
    return JSON.stringify(arrays);
}

export function weightsFromJson(model: tf.LayersModel, payload: string): void {
    const arrays = JSON.parse(payload) as { shape: number[]; values: number[] }[];
    model.setWeights(arrays.map((a) =>
        tf.tensor(a.values, a.shape as tf.Shape as number[])));
}

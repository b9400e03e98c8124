/**
 * Training and prediction over the dataset-directory contract.
 */

import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import {
    Dataset,
    N_CLASSES,
    RequestManifest,
    loadDataset,
    loadRequest,
    writeProbabilityFile,
} from "./dataset";
import {
    Standardization,
    applyStandardization,
    expandWindows,
    fitStandardization,
} from "./features";
import { NetworkConfig, buildNetwork, resolveConfig } from "./model";

export interface TrainedModel {
    model: tf.LayersModel;
    stats: Standardization;
    config: NetworkConfig;
}

export async function trainOnWindows(
    ds: Dataset, indices: number[], labels: number[],
    partial: Partial<NetworkConfig> = {}): Promise<TrainedModel> {
    if (indices.length === 0) {
        throw new Error("empty training set");
    }
    if (indices.length !== labels.length) {
        throw new Error("training indices/labels length mismatch");
    }
    const config = resolveConfig(partial);
    const expanded = expandWindows(ds, indices);
    const stats = fitStandardization(expanded);
    const x = tf.tensor3d(applyStandardization(expanded, stats));
    const y = tf.tensor2d(labels.map((l) => {
        if (l < 1 || l > N_CLASSES) throw new Error(`label ${l} outside 1..4`);
        const row = new Array<number>(N_CLASSES).fill(0);
        row[l - 1] = 1;
        return row;
    }));

    const model = buildNetwork(config, ds.window, x.shape[2]);
    await model.fit(x, y, {
        epochs: config.epochs,
        batchSize: config.batchSize,
        shuffle: false,   // keep runs reproducible under a fixed seed
        verbose: 0,
    });
    x.dispose();
    y.dispose();
    return { model, stats, config };
}

export async function predictProbabilities(
    trained: TrainedModel, ds: Dataset, indices: number[]): Promise<number[][]> {
    if (indices.length === 0) return [];
    const expanded = applyStandardization(expandWindows(ds, indices),
                                          trained.stats);
    const x = tf.tensor3d(expanded);
    const out = trained.model.predict(x) as tf.Tensor2D;
    const values = (await out.array()) as number[][];
    x.dispose();
    out.dispose();
    return values;
}

export async function trainAccuracy(
    trained: TrainedModel, ds: Dataset, indices: number[],
    labels: number[]): Promise<number> {
    const probs = await predictProbabilities(trained, ds, indices);
    let hits = 0;
    probs.forEach((p, i) => {
        const pred = p.indexOf(Math.max(...p)) + 1;
        if (pred === labels[i]) hits++;
    });
    return hits / labels.length;
}

/** Serve one request manifest: train, then answer every predict split. */
export async function trainAndPredict(
    datasetDir: string, requestPath: string,
    configOverride: Partial<NetworkConfig> = {}): Promise<string[]> {
    const request: RequestManifest = loadRequest(requestPath);
    const ds = loadDataset(request.dataset || datasetDir);
    const config: Partial<NetworkConfig> = {
        seed: request.seed ?? 0,
        ...(request.config ?? {}),
        ...configOverride,
    };
    const trained = await trainOnWindows(
        ds, request.train.indices, request.train.labels, config);

    const written: string[] = [];
    for (const [split, indices] of Object.entries(request.predict)) {
        const probs = await predictProbabilities(trained, ds, indices);
        const outPath = path.join(request.output_dir, `probs_${split}.csv`);
        writeProbabilityFile(outPath, indices, probs);
        written.push(outPath);
    }
    trained.model.dispose();
    return written;
}

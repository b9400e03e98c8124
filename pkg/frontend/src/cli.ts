/**
 * Command-line entry points.
 *
 *   train-predict --dataset DIR --request FILE      engine file contract
 *   train         --dataset DIR --out DIR [...]     standalone training
 *   predict       --dataset DIR --model DIR --out FILE --indices 1,2,...
 *   grad-check                                       attention gradient report
 */

import * as fs from "fs";
import * as path from "path";

import { loadDataset, partitionIndices, writeProbabilityFile } from "./dataset";
import { DEFAULT_CONFIG, NetworkConfig, buildNetwork, weightsFromJson, weightsToJson } from "./model";
import { predictProbabilities, trainAndPredict, trainOnWindows } from "./train";
import { tpaGradientCheck } from "./tpaMath";

interface Flags { [key: string]: string }

function parseFlags(argv: string[]): Flags {
    const flags: Flags = {};
    for (let i = 0; i < argv.length; i++) {
        if (argv[i].startsWith("--")) {
            const key = argv[i].slice(2);
            const next = argv[i + 1];
            if (next !== undefined && !next.startsWith("--")) {
                flags[key] = next;
                i++;
            } else {
                flags[key] = "true";
            }
        }
    }
    return flags;
}

function configFromFlags(flags: Flags): Partial<NetworkConfig> {
    const cfg: Partial<NetworkConfig> = {};
    const numeric: (keyof NetworkConfig)[] = [
        "convFilters", "kernelSize", "dropout", "lstmLayers", "lstmUnits",
        "tpaFilters", "combineUnits", "epochs", "learningRate", "batchSize",
        "seed"];
    for (const key of numeric) {
        if (flags[key] !== undefined) {
            (cfg as Record<string, number | boolean>)[key] = Number(flags[key]);
        }
    }
    if (flags["excludeLastState"] !== undefined) {
        cfg.excludeLastState = flags["excludeLastState"] === "true";
    }
    return cfg;
}

function usage(): never {
    console.error(
        "usage: cli.js <train-predict|train|predict|grad-check> [--flags]\n" +
        "  train-predict --dataset DIR --request FILE\n" +
        "  train --dataset DIR --out DIR [--partition train_true] [--seed N]\n" +
        "  predict --dataset DIR --model DIR --out FILE [--indices i,j,...]\n" +
        "  grad-check [--seed N]");
    process.exit(2);
}

async function cmdTrainPredict(flags: Flags): Promise<void> {
    if (!flags.dataset || !flags.request) usage();
    const written = await trainAndPredict(flags.dataset, flags.request,
                                          configFromFlags(flags));
    console.log(`wrote ${written.length} probability file(s)`);
}

async function cmdTrain(flags: Flags): Promise<void> {
    if (!flags.dataset || !flags.out) usage();
    const ds = loadDataset(flags.dataset);
    const partition = flags.partition ?? "train_true";
    const indices = partitionIndices(ds, partition);
    const labels = indices.map((i) => {
        const label = ds.records[i].label;
        if (label === null) throw new Error(`window ${i} has no label`);
        return label;
    });
    const trained = await trainOnWindows(ds, indices, labels,
                                         configFromFlags(flags));
    fs.mkdirSync(flags.out, { recursive: true });
    fs.writeFileSync(path.join(flags.out, "weights.json"),
                     await weightsToJson(trained.model));
    fs.writeFileSync(path.join(flags.out, "model.json"), JSON.stringify({
        config: trained.config,
        stats: trained.stats,
        window: ds.window,
        expandedWidth: trained.stats.mean.length,
    }, null, 2));
    console.log(`trained on ${indices.length} windows from ${partition}`);
}

async function cmdPredict(flags: Flags): Promise<void> {
    if (!flags.dataset || !flags.model || !flags.out) usage();
    const ds = loadDataset(flags.dataset);
    const meta = JSON.parse(fs.readFileSync(
        path.join(flags.model, "model.json"), "utf8"));
    const model = buildNetwork(meta.config, meta.window,
                               meta.expandedWidth);
    weightsFromJson(model, fs.readFileSync(
        path.join(flags.model, "weights.json"), "utf8"));
    const indices = flags.indices
        ? flags.indices.split(",").map((v) => parseInt(v, 10))
        : ds.records.map((r) => r.index);
    const probs = await predictProbabilities(
        { model, stats: meta.stats, config: meta.config }, ds, indices);
    writeProbabilityFile(flags.out, indices, probs);
    console.log(`wrote ${indices.length} probability rows`);
}

function cmdGradCheck(flags: Flags): void {
    const report = tpaGradientCheck(
        flags.seed ? { seed: Number(flags.seed) } : {});
    console.log(JSON.stringify(report, null, 2));
    if (!report.passed) process.exit(1);
}

async function main(): Promise<void> {
    const [command, ...rest] = process.argv.slice(2);
    const flags = parseFlags(rest);
    switch (command) {
        case "train-predict":
            await cmdTrainPredict(flags);
            break;
        case "train":
            await cmdTrain(flags);
            break;
        case "predict":
            await cmdPredict(flags);
            break;
        case "grad-check":
            cmdGradCheck(flags);
            break;
        default:
            usage();
    }
}

main().catch((err) => {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
});

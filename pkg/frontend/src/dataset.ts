/**
 * Readers and writers for the risk engine's dataset-directory contract.
 *
 * A dataset directory holds `windows.bin` (little-endian header of three
 * uint32 values: count, window length, feature width, followed by float32
 * window tensors) and `index.csv` (one row per window: index, source,
 * end_timestamp, label, raw_label, provenance, partition). Requests name
 * training windows with labels plus the window indices to score per split;
 * answers are `probs_<split>.csv` files with columns index,p1..p4.
 */

import * as fs from "fs";
import * as path from "path";

export const FEATURE_WIDTH = 46;
export const ROAD_COL = 5;
export const N_ROAD_CLASSES = 6;
export const N_CLASSES = 4;

export interface WindowRecord {
    index: number;
    source: string;
    endTimestamp: number;
    label: number | null;
    rawLabel: number | null;
    provenance: string;
    partition: string;
}

export interface Dataset {
    count: number;
    window: number;
    width: number;
    /** Flat float32 payload, count * window * width values. */
    data: Float32Array;
    records: WindowRecord[];
}

export function loadDataset(dir: string): Dataset {
    const binPath = path.join(dir, "windows.bin");
    const buffer = fs.readFileSync(binPath);
    if (buffer.length < 12) {
        throw new Error(`${binPath}: truncated header`);
    }
    const count = buffer.readUInt32LE(0);
    const window = buffer.readUInt32LE(4);
    const width = buffer.readUInt32LE(8);
    if (width !== FEATURE_WIDTH) {
        throw new Error(`${binPath}: unexpected feature width ${width}`);
    }
    const expected = count * window * width;
    const payload = new Float32Array(
        buffer.buffer, buffer.byteOffset + 12, expected);
    if (buffer.length !== 12 + expected * 4) {
        throw new Error(`${binPath}: payload does not match header`);
    }

    const records = readIndex(path.join(dir, "index.csv"));
    if (records.length !== count) {
        throw new Error(`index.csv rows (${records.length}) != tensor count (${count})`);
    }
    return { count, window, width, data: Float32Array.from(payload), records };
}

function readIndex(indexPath: string): WindowRecord[] {
    const text = fs.readFileSync(indexPath, "utf8");
    const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
    const header = lines[0].split(",");
    const col = (name: string) => {
        const i = header.indexOf(name);
        if (i < 0) throw new Error(`${indexPath}: missing column ${name}`);
        return i;
    };
    const ci = col("index");
    const cs = col("source");
    const ct = col("end_timestamp");
    const cl = col("label");
    const cr = header.indexOf("raw_label");
    const cp = col("provenance");
    const cpart = col("partition");

    return lines.slice(1).map((line) => {
        const parts = line.split(",");
        return {
            index: parseInt(parts[ci], 10),
            source: parts[cs],
            endTimestamp: parseFloat(parts[ct]),
            label: parts[cl] === "" ? null : parseInt(parts[cl], 10),
            rawLabel: cr < 0 || parts[cr] === "" ? null : parseInt(parts[cr], 10),
            provenance: parts[cp],
            partition: parts[cpart],
        };
    });
}

/** One window as a [T][width] array of numbers. */
export function windowRows(ds: Dataset, index: number): number[][] {
    if (index < 0 || index >= ds.count) {
        throw new Error(`window index ${index} out of range`);
    }
    const rows: number[][] = [];
    const base = index * ds.window * ds.width;
    for (let t = 0; t < ds.window; t++) {
        const row = new Array<number>(ds.width);
        for (let c = 0; c < ds.width; c++) {
            row[c] = ds.data[base + t * ds.width + c];
        }
        rows.push(row);
    }
    return rows;
}

export function partitionIndices(ds: Dataset, partition: string): number[] {
    return ds.records.filter((r) => r.partition === partition).map((r) => r.index);
}

export interface RequestManifest {
    schema: number;
    dataset: string;
    seed: number;
    train: { indices: number[]; labels: number[] };
    predict: { [split: string]: number[] };
    output_dir: string;
    config?: Partial<import("./model").NetworkConfig>;
}

export function loadRequest(requestPath: string): RequestManifest {
    const req = JSON.parse(fs.readFileSync(requestPath, "utf8")) as RequestManifest;
    if (!req.train || !Array.isArray(req.train.indices)) {
        throw new Error(`${requestPath}: missing train.indices`);
    }
    if (req.train.indices.length !== req.train.labels.length) {
        throw new Error(`${requestPath}: train indices/labels length mismatch`);
    }
    return req;
}

export function writeProbabilityFile(
    filePath: string, indices: number[], probs: number[][]): void {
    const lines = ["index,p1,p2,p3,p4"];
    indices.forEach((idx, row) => {
        const p = probs[row];
        if (p.length !== N_CLASSES) {
            throw new Error(`probability row ${row} has ${p.length} entries`);
        }
        const total = p.reduce((a, b) => a + b, 0);
        if (!isFinite(total) || Math.abs(total - 1) > 1e-6) {
            throw new Error(`probability row ${row} sums to ${total}`);
        }
        lines.push(`${idx},${p.map((v) => v.toPrecision(17)).join(",")}`);
    });
    fs.mkdirSync(path.dirname(filePath), { recursive: true });
    fs.writeFileSync(filePath, lines.join("\n") + "\n");
}

/** Write a dataset directory (used by tests and tooling fixtures). */
export function saveDataset(
    dir: string, windows: number[][][], records: Omit<WindowRecord, "index">[]): void {
    if (windows.length !== records.length) {
        throw new Error("windows/records length mismatch");
    }
    const count = windows.length;
    const t = count > 0 ? windows[0].length : 0;
    const header = Buffer.alloc(12);
    header.writeUInt32LE(count, 0);
    header.writeUInt32LE(t, 4);
    header.writeUInt32LE(FEATURE_WIDTH, 8);
    const payload = Buffer.alloc(count * t * FEATURE_WIDTH * 4);
    let off = 0;
    for (const win of windows) {
        if (win.length !== t) throw new Error("ragged window lengths");
        for (const row of win) {
            if (row.length !== FEATURE_WIDTH) throw new Error("bad row width");
            for (const v of row) {
                payload.writeFloatLE(v, off);
                off += 4;
            }
        }
    }
    fs.mkdirSync(dir, { recursive: true });
    fs.writeFileSync(path.join(dir, "windows.bin"), Buffer.concat([header, payload]));

    const lines = ["index,source,end_timestamp,label,raw_label,provenance,partition"];
    records.forEach((r, i) => {
        lines.push([
            i, r.source, r.endTimestamp,
            r.label === null ? "" : r.label,
            r.rawLabel === null ? "" : r.rawLabel,
            r.provenance, r.partition,
        ].join(","));
    });
    fs.writeFileSync(path.join(dir, "index.csv"), lines.join("\n") + "\n");
}

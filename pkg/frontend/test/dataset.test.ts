import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { afterAll, describe, expect, it } from "vitest";

import {
    FEATURE_WIDTH,
    loadDataset,
    partitionIndices,
    saveDataset,
    windowRows,
    writeProbabilityFile,
} from "../src/dataset";
import { EXPANDED_WIDTH, expandRow, fitStandardization } from "../src/features";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "tpa-dataset-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function fixtureWindows(n: number, t = 4): number[][][] {
    const windows: number[][][] = [];
    for (let i = 0; i < n; i++) {
        const win: number[][] = [];
        for (let r = 0; r < t; r++) {
            const row = Array.from({ length: FEATURE_WIDTH },
                                   (_, c) => Math.sin(i + r * 0.1 + c));
            row[5] = (i % 6) + 1;  // road class column
            win.push(row);
        }
        windows.push(win);
    }
    return windows;
}

describe("dataset directory round trip", () => {
    it("restores header, payload, and index records", () => {
        const dir = path.join(tmp, "ds1");
        const windows = fixtureWindows(6);
        saveDataset(dir, windows, windows.map((_, i) => ({
            source: `clip${i % 2}`,
            endTimestamp: i / 10,
            label: i % 3 === 0 ? null : (i % 4) + 1,
            rawLabel: (i % 4) + 1,
            provenance: i % 3 === 0 ? "" : "true",
            partition: i % 2 === 0 ? "train_true" : "test_true",
        })));
        const ds = loadDataset(dir);
        expect(ds.count).toBe(6);
        expect(ds.window).toBe(4);
        expect(ds.width).toBe(FEATURE_WIDTH);
        const rows = windowRows(ds, 3);
        for (let r = 0; r < 4; r++) {
            for (let c = 0; c < FEATURE_WIDTH; c++) {
                expect(rows[r][c]).toBeCloseTo(windows[3][r][c], 5);
            }
        }
        expect(ds.records[0].label).toBeNull();
        expect(ds.records[1].label).toBe(2);
        expect(partitionIndices(ds, "train_true")).toEqual([0, 2, 4]);
    });

    it("rejects width mismatches", () => {
        const dir = path.join(tmp, "ds2");
        fs.mkdirSync(dir, { recursive: true });
        const header = Buffer.alloc(12);
        header.writeUInt32LE(1, 0);
        header.writeUInt32LE(2, 4);
        header.writeUInt32LE(7, 8);   // wrong width
        fs.writeFileSync(path.join(dir, "windows.bin"),
                         Buffer.concat([header, Buffer.alloc(2 * 7 * 4)]));
        fs.writeFileSync(path.join(dir, "index.csv"),
                         "index,source,end_timestamp,label,raw_label,provenance,partition\n");
        expect(() => loadDataset(dir)).toThrow(/feature width/);
    });
});

describe("probability files", () => {
    it("writes simplex rows with indices", () => {
        const file = path.join(tmp, "probs_query.csv");
        writeProbabilityFile(file, [4, 9], [
            [0.7, 0.1, 0.1, 0.1],
            [0.25, 0.25, 0.25, 0.25],
        ]);
        const lines = fs.readFileSync(file, "utf8").trim().split("\n");
        expect(lines[0]).toBe("index,p1,p2,p3,p4");
        expect(lines[1].startsWith("4,")).toBe(true);
        const values = lines[2].split(",").slice(1).map(Number);
        expect(values.reduce((a, b) => a + b, 0)).toBeCloseTo(1, 9);
    });

    it("rejects rows that do not sum to one", () => {
        expect(() => writeProbabilityFile(path.join(tmp, "bad.csv"), [0],
                                          [[0.5, 0.5, 0.5, 0.5]]))
            .toThrow(/sums to/);
    });
});

describe("feature expansion", () => {
    it("expands the road code to indicators", () => {
        const row = Array.from({ length: FEATURE_WIDTH }, (_, c) => c * 0.5);
        row[5] = 3;
        const expanded = expandRow(row);
        expect(expanded).toHaveLength(EXPANDED_WIDTH);
        const onehot = expanded.slice(45);
        expect(onehot).toEqual([0, 0, 1, 0, 0, 0]);
        expect(expanded[5]).toBe(3.0);   // column 6 shifts left into slot 5
    });

    it("standardization is identity on indicator columns", () => {
        const windows = fixtureWindows(5).map((w) => w.map(expandRow));
        const stats = fitStandardization(windows);
        for (let c = 45; c < EXPANDED_WIDTH; c++) {
            expect(stats.mean[c]).toBe(0);
            expect(stats.std[c]).toBe(1);
        }
        expect(stats.std.slice(0, 45).every((v) => v > 0)).toBe(true);
    });
});

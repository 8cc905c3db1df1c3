/**
 * Node bindings for the eventsig toolkit.
 *
 * Every function shells out to the native CLI (the only supported interface)
 * and converts its full-precision JSON output into typed arrays. No algorithm
 * logic lives here; values are bit-identical to what the CLI prints because
 * both sides round-trip IEEE-754 doubles through shortest-decimal form.
 */
import { execFileSync } from 'node:child_process';
import { mkdtempSync, rmSync, writeFileSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import path from 'node:path';

export type PointMatrix = number[][] | { data: Float64Array; shape: [number, number] };

export interface SignatureCase {
    points: PointMatrix;
    level: number;
    log?: boolean;
}

export interface SignatureResult {
    dim: number;
    level: number;
    kind: 'log' | 'full';
    labels: string[];
    values: Float64Array;
}

export interface BasisInfo {
    dim: number;
    level: number;
    words: string[];
    sigDimension: number;
    logsigDimension: number;
}

export interface FeatureMatrix {
    patientIds: string[];
    columns: string[];
    schema: string;
    /** row-major feature values, shape [patientIds.length, columns.length] */
    data: Float64Array;
    shape: [number, number];
}

const CLI = process.env.EVENTSIG_CLI ?? 'eventsig';

function runCli(args: string[]): string {
    try {
        return execFileSync(CLI, args, { encoding: 'utf8', maxBuffer: 256 * 1024 * 1024 });
    } catch (err: unknown) {
        const e = err as { stderr?: string; message?: string };
        const stderr = (e.stderr ?? '').trim();
        throw new Error(stderr !== '' ? stderr : (e.message ?? 'eventsig CLI failed'));
    }
}

function toRows(points: PointMatrix): number[][] {
    if (Array.isArray(points)) {
        return points;
    }
    const [n, d] = points.shape;
    if (points.data.length !== n * d) {
        throw new Error(`buffer of length ${points.data.length} does not match shape ${n}x${d}`);
    }
    const rows: number[][] = [];
    for (let i = 0; i < n; i++) {
        rows.push(Array.from(points.data.subarray(i * d, (i + 1) * d)));
    }
    return rows;
}

function inTempDir<T>(fn: (dir: string) => T): T {
    const dir = mkdtempSync(path.join(tmpdir(), 'eventsig-'));
    try {
        return fn(dir);
    } finally {
        rmSync(dir, { recursive: true, force: true });
    }
}

function parseResult(doc: {
    dim: number;
    level: number;
    kind: 'log' | 'full';
    labels: string[];
    values: number[];
}): SignatureResult {
    return {
        dim: doc.dim,
        level: doc.level,
        kind: doc.kind,
        labels: doc.labels,
        values: Float64Array.from(doc.values),
    };
}

function singleSignature(points: PointMatrix, level: number, log: boolean): SignatureResult {
    const rows = toRows(points);
    return inTempDir((dir) => {
        const csv = path.join(dir, 'path.csv');
        writeFileSync(csv, rows.map((r) => r.join(',')).join('\n') + '\n');
        const out = runCli([
            'sig', csv,
            '--level', String(level),
            log ? '--log' : '--full',
            '--format', 'json',
        ]);
        return parseResult(JSON.parse(out));
    });
}

/** Full signature coordinates (levels 1..level) of a piecewise-linear path. */
export function pathSignature(points: PointMatrix, level: number): Float64Array {
    return singleSignature(points, level, false).values;
}

/** Log-signature coordinates in the Lyndon basis. */
export function logSignature(points: PointMatrix, level: number): Float64Array {
    return singleSignature(points, level, true).values;
}

/** Batch evaluation through a single CLI invocation; order is preserved. */
export function signatureBatch(cases: SignatureCase[]): SignatureResult[] {
    if (cases.length === 0) {
        return [];
    }
    return inTempDir((dir) => {
        const jsonl = path.join(dir, 'cases.jsonl');
        const lines = cases.map((c) =>
            JSON.stringify({ points: toRows(c.points), level: c.level, log: c.log ?? true }),
        );
        writeFileSync(jsonl, lines.join('\n') + '\n');
        const out = runCli(['sig', '--batch', jsonl]);
        return out
            .trim()
            .split('\n')
            .map((line) => parseResult(JSON.parse(line)));
    });
}

function basisInfo(dim: number, level: number): BasisInfo {
    const doc = JSON.parse(runCli(['basis', '--dim', String(dim), '--level', String(level), '--format', 'json']));
    return {
        dim: doc.dim,
        level: doc.level,
        words: doc.words,
        sigDimension: doc.sig_dimension,
        logsigDimension: doc.logsig_dimension,
    };
}

/** Lyndon words (as digit strings) ordered by length then lexicographically. */
export function lyndonWords(dim: number, level: number): string[] {
    return basisInfo(dim, level).words;
}

export function sigDimension(dim: number, level: number): number {
    return basisInfo(dim, level).sigDimension;
}

export function logsigDimension(dim: number, level: number): number {
    return basisInfo(dim, level).logsigDimension;
}

export interface FeaturizeOptions {
    featuriser?: 'sig' | 'nonsig';
    featureSet?: 'time_mmse' | 'time_mmse_meds';
    level?: number;
    outcomesCsv?: string;
}

/** Batch featurisation of a timeline JSONL file via the featurize command. */
export function featurizeBatch(timelinesJsonl: string, opts: FeaturizeOptions = {}): FeatureMatrix {
    return inTempDir((dir) => {
        const out = path.join(dir, 'features.csv');
        const args = [
            'featurize', timelinesJsonl,
            '--featuriser', opts.featuriser ?? 'sig',
            '--feature-set', opts.featureSet ?? 'time_mmse',
            '--out', out,
        ];
        if (opts.level !== undefined) {
            args.push('--level', String(opts.level));
        }
        if (opts.outcomesCsv !== undefined) {
            args.push('--outcomes', opts.outcomesCsv);
        }
        runCli(args);
        return parseFeatureCsv(readFileSync(out, 'utf8'));
    });
}

function parseFeatureCsv(text: string): FeatureMatrix {
    const lines = text.trim().split('\n');
    let schema = '';
    if (lines[0]?.startsWith('#schema=')) {
        schema = lines.shift()!.slice('#schema='.length);
    }
    const header = lines.shift()!.split(',');
    const columns = header.slice(3);
    const patientIds: string[] = [];
    const data = new Float64Array((lines.length) * columns.length);
    lines.forEach((line, row) => {
        const cells = line.split(',');
        patientIds.push(cells[0]!);
        cells.slice(3).forEach((cell, col) => {
            data[row * columns.length + col] = Number(cell);
        });
    });
    return { patientIds, columns, schema, data, shape: [patientIds.length, columns.length] };
}

/** Version string of the underlying native toolkit. */
export function nativeVersion(): string {
    const out = runCli(['--version']).trim();
    const match = out.match(/(\d+\.\d+\.\d+)/);
    return match ? match[1]! : out;
}

/**
 * Parity harness: values returned by the bindings must equal what the native
 * CLI prints, bit for bit, across 1000 random (path, level) cases.
 */
import assert from 'node:assert/strict';
import { execFileSync } from 'node:child_process';
import { mkdtempSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import path from 'node:path';
import { test } from 'node:test';

import {
    featurizeBatch,
    logSignature,
    logsigDimension,
    lyndonWords,
    nativeVersion,
    pathSignature,
    signatureBatch,
    sigDimension,
    type SignatureCase,
} from '../src/index.js';

const CLI = process.env.EVENTSIG_CLI ?? 'eventsig';

// deterministic 32-bit linear congruential generator
function makeRng(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
        state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
        return state / 2 ** 32;
    };
}

function randomCase(rng: () => number): SignatureCase {
    const dim = 1 + Math.floor(rng() * 4);
    const level = 1 + Math.floor(rng() * 4);
    const nPoints = 2 + Math.floor(rng() * 7);
    const points: number[][] = [];
    for (let i = 0; i < nPoints; i++) {
        const row: number[] = [];
        for (let j = 0; j < dim; j++) {
            row.push((rng() - 0.5) * 4);
        }
        points.push(row);
    }
    return { points, level, log: rng() < 0.5 };
}

function assertBitIdentical(a: Float64Array, b: Float64Array, label: string): void {
    assert.equal(a.length, b.length, `${label}: length`);
    for (let i = 0; i < a.length; i++) {
        assert.ok(Object.is(a[i], b[i]), `${label}[${i}]: ${a[i]} !== ${b[i]}`);
    }
}

test('1000 random cases are bit-identical to raw CLI batch output', () => {
    const rng = makeRng(20220105);
    const cases: SignatureCase[] = [];
    for (let i = 0; i < 1000; i++) {
        cases.push(randomCase(rng));
    }
    const viaBindings = signatureBatch(cases);

    // independent path: invoke the CLI directly and parse its stdout here
    const dir = mkdtempSync(path.join(tmpdir(), 'eventsig-parity-'));
    try {
        const jsonl = path.join(dir, 'cases.jsonl');
        writeFileSync(
            jsonl,
            cases.map((c) => JSON.stringify({ points: c.points, level: c.level, log: c.log })).join('\n') + '\n',
        );
        const raw = execFileSync(CLI, ['sig', '--batch', jsonl], {
            encoding: 'utf8',
            maxBuffer: 256 * 1024 * 1024,
        });
        const fromCli = raw
            .trim()
            .split('\n')
            .map((line) => Float64Array.from(JSON.parse(line).values as number[]));
        assert.equal(viaBindings.length, 1000);
        assert.equal(fromCli.length, 1000);
        for (let i = 0; i < 1000; i++) {
            assertBitIdentical(viaBindings[i]!.values, fromCli[i]!, `case ${i}`);
        }
    } finally {
        rmSync(dir, { recursive: true, force: true });
    }
});

test('single-call bindings match text-format CLI output bit for bit', () => {
    const rng = makeRng(7);
    for (let i = 0; i < 10; i++) {
        const c = randomCase(rng);
        const viaBinding = c.log
            ? logSignature(c.points, c.level)
            : pathSignature(c.points, c.level);
        const dir = mkdtempSync(path.join(tmpdir(), 'eventsig-single-'));
        try {
            const csv = path.join(dir, 'p.csv');
            writeFileSync(csv, (c.points as number[][]).map((r) => r.join(',')).join('\n') + '\n');
            const raw = execFileSync(
                CLI,
                ['sig', csv, '--level', String(c.level), c.log ? '--log' : '--full'],
                { encoding: 'utf8' },
            );
            const values = Float64Array.from(
                raw.trim().split('\n').map((line) => Number(line.split('\t')[1])),
            );
            assertBitIdentical(viaBinding, values, `single case ${i}`);
        } finally {
            rmSync(dir, { recursive: true, force: true });
        }
    }
});

test('golden two-letter paths', () => {
    const aabba = [[0, 0], [1, 0], [2, 0], [2, 1], [2, 2], [3, 2]];
    const coords = logSignature(aabba, 4);
    const expected = [3, 2, 1, -0.5, -1, -1 / 3, -0.5, 0];
    assert.equal(coords.length, 8);
    expected.forEach((v, i) => {
        assert.ok(Math.abs(coords[i]! - v) < 1e-9, `coord ${i}: ${coords[i]} vs ${v}`);
    });
});

test('single point gives the unit signature', () => {
    const sig = pathSignature([[1.5, 2.5]], 3);
    assert.ok(sig.every((v) => v === 0));
    const log = logSignature([[1.5, 2.5]], 3);
    assert.ok(log.every((v) => v === 0));
});

test('lyndon words and dimensions', () => {
    assert.deepEqual(lyndonWords(2, 4), ['1', '2', '12', '112', '122', '1112', '1122', '1222']);
    assert.equal(sigDimension(2, 4), 30);
    assert.equal(logsigDimension(2, 4), 8);
    assert.equal(sigDimension(3, 2), 12);
    assert.equal(logsigDimension(3, 2), 6);
});

test('shape and NaN errors mirror the native messages', () => {
    assert.throws(() => pathSignature([[0, 0], [1, Number.NaN]], 2), /finite/);
    assert.throws(
        () => pathSignature({ data: new Float64Array(3), shape: [2, 2] }, 2),
        /shape/,
    );
});

test('batch featurisation through the featurize command', () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'eventsig-feat-'));
    try {
        const timelines = path.join(dir, 'timelines.jsonl');
        const events = [
            { patient_id: 'p1', date: '2020-01-01', kind: 'MMSE', value: 25, negated: false, experiencer: 'patient' },
            { patient_id: 'p1', date: '2020-06-01', kind: 'MMSE', value: 22, negated: false, experiencer: 'patient' },
            { patient_id: 'p2', date: '2021-01-01', kind: 'MMSE', value: 28, negated: false, experiencer: 'patient' },
            { patient_id: 'p2', date: '2021-04-01', kind: 'MMSE', value: 27, negated: false, experiencer: 'patient' },
        ];
        writeFileSync(timelines, events.map((e) => JSON.stringify(e)).join('\n') + '\n');
        const matrix = featurizeBatch(timelines, { level: 2 });
        assert.deepEqual(matrix.patientIds, ['p1', 'p2']);
        assert.deepEqual(matrix.shape, [2, 3]);
        assert.equal(matrix.columns.length, 3); // logsig dimension at d=2, L=2
        assert.match(matrix.schema, /^sig:time_mmse:L2/);
        assert.ok(Number.isFinite(matrix.data[0]!));
    } finally {
        rmSync(dir, { recursive: true, force: true });
    }
});

test('version mirrors the native library', () => {
    assert.match(nativeVersion(), /^\d+\.\d+\.\d+$/);
});

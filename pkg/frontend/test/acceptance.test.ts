/**
 * Release criteria for the fusion CNN, checked end to end through the core
 * toolkit's external interfaces: TGD datasets in, the predictions exchange
 * file out, scoring via the core `evaluate` command.
 *
 * The headline criterion reproduces the benchmark ordering: on a held-out
 * synthetic benchmark the CNN must beat the rule estimator by at least 10
 * percentage points on good-grasp accuracy and on branch-finger
 * localization, and exceed its overall accuracy.
 */

import * as tf from '@tensorflow/tfjs';
import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { beforeAll, describe, expect, it } from 'vitest';
import { aggregate } from '../src/features.js';
import { buildModel, DEFAULT_CONFIG } from '../src/model.js';
import { loadModel, predictSamples, predictionsText, saveModel, writePredictions } from '../src/predict.js';
import { trainModel } from '../src/train.js';
import { loadDataset } from '../src/tgd.js';
import { coreCli, generateDataset, parseEvalReport, tempDir } from './helpers.js';
import type { Sample } from '../src/features.js';

const TRAIN_SEED = 707;
const HELD_OUT_SEED = 303;

let dir: string;
let heldOutPath: string;
let trainSamples: Sample[];
let heldOutSamples: Sample[];

beforeAll(async () => {
  await tf.ready();
  dir = tempDir('fusion-acceptance-');
  const trainPath = join(dir, 'train.tgd');
  heldOutPath = join(dir, 'held_out.tgd');
  generateDataset(trainPath, { kind: 'benchmark', seed: TRAIN_SEED });
  generateDataset(heldOutPath, { kind: 'benchmark', seed: HELD_OUT_SEED });
  trainSamples = loadDataset(trainPath).recordings.map(aggregate);
  heldOutSamples = loadDataset(heldOutPath).recordings.map(aggregate);
});

describe('held-out benchmark ordering vs the rule estimator', () => {
  it('CNN beats the rule estimator by >= 10 points on good and branch', async () => {
    const config = { ...DEFAULT_CONFIG, seed: 11 };
    const model = buildModel(config);
    const log = await trainModel(model, trainSamples, {
      epochs: 25, batchSize: 32, learningRate: 3e-3, seed: 11, logEvery: 5, quiet: true,
    });

    // persist + reload: predictions must come from the serialized weights
    const weightsDir = join(dir, 'weights');
    await saveModel(model, weightsDir, {
      config,
      trainSeed: 11,
      datasetDigest: `benchmark seed ${TRAIN_SEED}`,
      finalLoss: log[log.length - 1].loss,
    });
    tf.disposeVariables();
    const { model: reloaded, manifest } = await loadModel(weightsDir);
    expect(manifest.trainSeed).toBe(11);

    const predictions = predictSamples(reloaded, heldOutSamples);
    expect(predictions).toHaveLength(200);
    const predictionsPath = join(dir, 'cnn_predictions.txt');
    writePredictions(predictions, predictionsPath);

    // every recording exactly one line
    const lines = readFileSync(predictionsPath, 'utf-8').trim().split('\n');
    expect(lines).toHaveLength(200);
    expect(new Set(lines.map((l) => l.split(',')[0].trim())).size).toBe(200);

    // score the CNN through the core evaluate command (external predictions)
    const cnnReportPath = join(dir, 'cnn_report.txt');
    coreCli(['evaluate', '--dataset', heldOutPath,
             '--predictions', predictionsPath, '--report', cnnReportPath]);
    const cnn = parseEvalReport(readFileSync(cnnReportPath, 'utf-8'));

    // and the rule estimator through the same command (internal predictions)
    const ruleReportPath = join(dir, 'rule_report.txt');
    coreCli(['evaluate', '--dataset', heldOutPath, '--report', ruleReportPath]);
    const rule = parseEvalReport(readFileSync(ruleReportPath, 'utf-8'));

    console.log(
      `held-out good: cnn ${cnn.perClass['good'].toFixed(3)} vs rule ` +
        `${rule.perClass['good'].toFixed(3)} | branch localization: cnn ` +
        `${cnn.localization.toFixed(3)} vs rule ${rule.localization.toFixed(3)} | ` +
        `overall: cnn ${cnn.overall.toFixed(3)} vs rule ${rule.overall.toFixed(3)}`,
    );

    expect(cnn.perClass['good']).toBeGreaterThanOrEqual(rule.perClass['good'] + 0.10);
    expect(cnn.localization).toBeGreaterThanOrEqual(rule.localization + 0.10);
    expect(cnn.overall).toBeGreaterThan(rule.overall);
    tf.disposeVariables();
  });
});

describe('exchange format', () => {
  it('orders lines by recording id and carries fingers for fingered states', () => {
    const predictions = [
      { id: 'r010', kind: 'branch', finger: 2 },
      { id: 'r002', kind: 'good', finger: null },
      { id: 'r001', kind: 'obstructed', finger: 0 },
    ];
    const text = predictionsText(predictions);
    expect(text).toBe('r001, obstructed, 0\nr002, good\nr010, branch, 2\n');
  });
});

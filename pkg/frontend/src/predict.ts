/**
 * Weights persistence and prediction export.
 *
 * Weights are stored as two files plus a portable manifest: the layer
 * topology + weight specs as JSON, the raw weight data as one binary blob,
 * and a manifest recording the network config, training seed and the digest
 * of the dataset trained on.
 *
 * Predictions are exported in the shared exchange format, one
 * `recording_id, state[, finger]` line per recording. The 4-way head gives
 * the state; for the fingered states the interfering/obstructed finger is
 * chosen post-hoc as the finger with the largest local contact saliency.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';
import * as tf from '@tensorflow/tfjs';
import { CLASS_KINDS, Sample } from './features.js';
import { NetworkConfig } from './model.js';
import { predictClasses } from './train.js';

export interface WeightsManifest {
  config: NetworkConfig;
  trainSeed: number;
  datasetDigest: string;
  finalLoss: number;
}

export async function saveModel(
  model: tf.LayersModel,
  dir: string,
  manifest: WeightsManifest,
): Promise<void> {
  mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer;
      writeFileSync(
        join(dir, 'topology.json'),
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          weightSpecs: artifacts.weightSpecs,
        }),
      );
      writeFileSync(join(dir, 'weights.bin'), Buffer.from(weightData));
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
    }),
  );
  writeFileSync(join(dir, 'manifest.json'), JSON.stringify(manifest, null, 2));
}

export async function loadModel(dir: string): Promise<{
  model: tf.LayersModel;
  manifest: WeightsManifest;
}> {
  const topo = JSON.parse(readFileSync(join(dir, 'topology.json'), 'utf-8'));
  const weightData = readFileSync(join(dir, 'weights.bin'));
  const model = await tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: topo.modelTopology,
      weightSpecs: topo.weightSpecs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength,
      ),
    }),
  );
  const manifest = JSON.parse(readFileSync(join(dir, 'manifest.json'), 'utf-8'));
  return { model, manifest };
}

export interface Prediction {
  id: string;
  kind: string;
  finger: number | null;
}

export function predictSamples(model: tf.LayersModel, samples: Sample[]): Prediction[] {
  const classes = predictClasses(model, samples);
  return samples.map((sample, i) => {
    const kind = CLASS_KINDS[classes[i]];
    let finger: number | null = null;
    if (kind === 'branch' || kind === 'obstructed') {
      finger = argmax(sample.saliency);
    }
    return { id: sample.id, kind, finger };
  });
}

function argmax(values: number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

export function predictionsText(predictions: Prediction[]): string {
  const lines = [...predictions]
    .sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0))
    .map((p) => (p.finger === null ? `${p.id}, ${p.kind}` : `${p.id}, ${p.kind}, ${p.finger}`));
  return lines.join('\n') + '\n';
}

export function writePredictions(predictions: Prediction[], path: string): void {
  writeFileSync(path, predictionsText(predictions));
}

/**
 * Training loop: Adam on softmax cross-entropy with inverse-frequency class
 * weights. Deterministic for a fixed seed: seeded weight init, seeded
 * shuffling, and the single-threaded CPU backend make reruns bit-identical,
 * which the tests assert via the final loss.
 */

import * as tf from '@tensorflow/tfjs';
import { classWeights, labelIndex, Sample } from './features.js';
import { BatchTensors, disposeBatch, packInputs } from './model.js';

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  weightClasses: boolean;
  logEvery: number;
  quiet: boolean;
}

export const DEFAULT_TRAIN: TrainOptions = {
  epochs: 25,
  batchSize: 32,
  learningRate: 3e-3,
  seed: 7,
  weightClasses: true,
  logEvery: 5,
  quiet: false,
};

export interface EpochLog {
  epoch: number;
  loss: number;
  /** Training accuracy; measured every `logEvery` epochs and on the last. */
  accuracy: number | null;
}

/** The model's trainable variables, for explicit gradient computation. */
export function modelVariables(model: tf.LayersModel): tf.Variable[] {
  // LayerVariable wraps the engine Variable in `.val`; the typings keep it
  // internal but custom training loops need the handles.
  return model.trainableWeights.map(
    (w) => (w as unknown as { val: tf.Variable }).val,
  );
}

/** Deterministic PRNG for shuffling (mulberry32). */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled(n: number, random: () => number): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(random() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

interface Packed {
  inputs: BatchTensors;
  labels: tf.Tensor1D;
  weights: tf.Tensor1D;
}

function pack(samples: Sample[], perClassWeight: number[]): Packed {
  const inputs = packInputs(
    samples.map((s) => s.locals),
    samples.map((s) => s.global),
  );
  const labelIdx = samples.map((s) => labelIndex(s.labelKind as string));
  return {
    inputs,
    labels: tf.tensor1d(labelIdx, 'int32'),
    weights: tf.tensor1d(labelIdx.map((k) => perClassWeight[k])),
  };
}

function lossOn(model: tf.LayersModel, packed: Packed, classes: number): tf.Scalar {
  const logits = model.apply([...packed.inputs.locals, packed.inputs.global], {
    training: true,
  }) as tf.Tensor2D;
  const oneHot = tf.oneHot(packed.labels, classes);
  const perSample = tf.losses.softmaxCrossEntropy(
    oneHot,
    logits,
    undefined,
    undefined,
    tf.Reduction.NONE,
  ) as tf.Tensor1D;
  return tf.div(
    tf.sum(tf.mul(perSample, packed.weights)),
    tf.sum(packed.weights),
  ) as tf.Scalar;
}

export async function trainModel(
  model: tf.LayersModel,
  samples: Sample[],
  options: Partial<TrainOptions> = {},
): Promise<EpochLog[]> {
  const opts: TrainOptions = { ...DEFAULT_TRAIN, ...options };
  if (samples.length === 0) throw new Error('no training samples');
  // classWeights also rejects unlabeled samples and missing classes.
  const inverseFrequency = classWeights(samples);
  const perClass = opts.weightClasses ? inverseFrequency : [1, 1, 1, 1];

  const optimizer = tf.train.adam(opts.learningRate);
  const random = rng(opts.seed);
  const classes = 4;
  const log: EpochLog[] = [];
  const trainable = modelVariables(model);

  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    const order = shuffled(samples.length, random);
    let epochLoss = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += opts.batchSize) {
      const batchSamples = order
        .slice(start, start + opts.batchSize)
        .map((i) => samples[i]);
      const packed = pack(batchSamples, perClass);
      const { value, grads } = tf.variableGrads(
        () => lossOn(model, packed, classes),
        trainable,
      );
      optimizer.applyGradients(
        Object.entries(grads).map(([name, tensor]) => ({ name, tensor })),
      );
      epochLoss += (await value.data())[0];
      batches++;
      value.dispose();
      Object.values(grads).forEach((g) => g.dispose());
      packed.labels.dispose();
      packed.weights.dispose();
      disposeBatch(packed.inputs);
    }
    const measure = epoch % opts.logEvery === 0 || epoch === opts.epochs - 1;
    const accuracy = measure ? evaluateAccuracy(model, samples) : null;
    const entry = { epoch, loss: epochLoss / batches, accuracy };
    log.push(entry);
    if (!opts.quiet && measure) {
      console.log(
        `epoch ${String(epoch).padStart(3)}  loss ${entry.loss.toFixed(5)}  ` +
          `train acc ${(100 * (accuracy as number)).toFixed(1)}%`,
      );
    }
  }
  optimizer.dispose();
  return log;
}

export function predictLogits(model: tf.LayersModel, samples: Sample[]): Float32Array {
  return tf.tidy(() => {
    const inputs = packInputs(
      samples.map((s) => s.locals),
      samples.map((s) => s.global),
    );
    const logits = model.predict([...inputs.locals, inputs.global]) as tf.Tensor2D;
    return logits.dataSync() as Float32Array;
  });
}

export function predictClasses(model: tf.LayersModel, samples: Sample[]): number[] {
  const logits = predictLogits(model, samples);
  const out: number[] = [];
  for (let i = 0; i < samples.length; i++) {
    let best = 0;
    for (let k = 1; k < 4; k++) {
      if (logits[i * 4 + k] > logits[i * 4 + best]) best = k;
    }
    out.push(best);
  }
  return out;
}

export function evaluateAccuracy(model: tf.LayersModel, samples: Sample[]): number {
  const classes = predictClasses(model, samples);
  let hits = 0;
  for (let i = 0; i < samples.length; i++) {
    if (classes[i] === labelIndex(samples[i].labelKind as string)) hits++;
  }
  return hits / samples.length;
}

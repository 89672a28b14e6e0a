/**
 * Fusion CNN for grasp-state classification.
 *
 * Three kinds of networks feed one head: four local finger networks (24x4
 * input, one 64-vector each), one global network over the whole 24x16 grid
 * (one 256-vector), and a fully-connected head over the concatenated
 * 4*64 + 256 = 512 fusion vector producing 4 class logits.
 *
 * Backbones are residual stacks scaled to the tiny inputs: a stem conv, two
 * stages of residual blocks with max-pooling between stages, global average
 * pooling, and a dense projection to the feature size. Local backbones pool
 * with a 2x1 kernel so the 4-column finger image keeps its width. Deeper
 * stacks are a config change (more stage widths / blocks per stage).
 */

import * as tf from '@tensorflow/tfjs';
import { FastConv2D } from './fastconv.js';
import { FINGER_COLS, FINGERS } from './features.js';
import { FRAME_COLS, FRAME_ROWS } from './tgd.js';

export interface NetworkConfig {
  localFeatureDim: number;
  globalFeatureDim: number;
  classes: number;
  stageWidths: number[];
  blocksPerStage: number;
  headHidden: number;
  shareLocalWeights: boolean;
  seed: number;
}

export const DEFAULT_CONFIG: NetworkConfig = {
  localFeatureDim: 64,
  globalFeatureDim: 256,
  classes: 4,
  stageWidths: [6, 12],
  blocksPerStage: 2,
  headHidden: 128,
  shareLocalWeights: false,
  seed: 42,
};

/** Reduced configuration used by the finite-difference gradient check. */
export const TINY_CONFIG: NetworkConfig = {
  ...DEFAULT_CONFIG,
  localFeatureDim: 8,
  globalFeatureDim: 16,
  stageWidths: [3],
  blocksPerStage: 1,
  headHidden: 12,
};

export function fusedDim(cfg: NetworkConfig): number {
  return FINGERS * cfg.localFeatureDim + cfg.globalFeatureDim;
}

class SeedSequence {
  constructor(private next: number) {}
  draw(): number {
    return this.next++;
  }
}

function conv(
  width: number,
  kernel: [number, number],
  seeds: SeedSequence,
  name: string,
): tf.layers.Layer {
  return new FastConv2D({
    filters: width,
    kernelSize: kernel,
    seed: seeds.draw(),
    name,
  });
}

function residualBlock(
  x: tf.SymbolicTensor,
  width: number,
  seeds: SeedSequence,
  name: string,
): tf.SymbolicTensor {
  let shortcut = x;
  if ((x.shape[3] as number) !== width) {
    shortcut = conv(width, [1, 1], seeds, `${name}_proj`).apply(x) as tf.SymbolicTensor;
  }
  let y = conv(width, [3, 3], seeds, `${name}_conv1`).apply(x) as tf.SymbolicTensor;
  y = tf.layers.reLU({ name: `${name}_relu1` }).apply(y) as tf.SymbolicTensor;
  y = conv(width, [3, 3], seeds, `${name}_conv2`).apply(y) as tf.SymbolicTensor;
  y = tf.layers.add({ name: `${name}_add` }).apply([y, shortcut]) as tf.SymbolicTensor;
  return tf.layers.reLU({ name: `${name}_relu2` }).apply(y) as tf.SymbolicTensor;
}

function backbone(
  input: tf.SymbolicTensor,
  cfg: NetworkConfig,
  poolKernel: [number, number],
  featureDim: number,
  seeds: SeedSequence,
  prefix: string,
): tf.SymbolicTensor {
  let x = conv(cfg.stageWidths[0], [3, 3], seeds, `${prefix}_stem`).apply(
    input,
  ) as tf.SymbolicTensor;
  x = tf.layers.reLU({ name: `${prefix}_stem_relu` }).apply(x) as tf.SymbolicTensor;
  // Pool straight after the stem: the tactile images carry coarse blobs and
  // bands, and halving the maps early keeps the residual stages cheap.
  x = tf.layers
    .maxPooling2d({ poolSize: poolKernel, name: `${prefix}_pool_stem` })
    .apply(x) as tf.SymbolicTensor;
  cfg.stageWidths.forEach((width, stage) => {
    for (let b = 0; b < cfg.blocksPerStage; b++) {
      x = residualBlock(x, width, seeds, `${prefix}_s${stage}b${b}`);
    }
    x = tf.layers
      .maxPooling2d({ poolSize: poolKernel, name: `${prefix}_pool${stage}` })
      .apply(x) as tf.SymbolicTensor;
  });
  x = tf.layers
    .globalAveragePooling2d({ name: `${prefix}_gap` })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .dense({
      units: featureDim,
      activation: 'relu',
      kernelInitializer: tf.initializers.heNormal({ seed: seeds.draw() }),
      name: `${prefix}_feat`,
    })
    .apply(x) as tf.SymbolicTensor;
  return x;
}

/**
 * Build the fusion model. Inputs: four 24x4x1 finger images plus one
 * 24x16x1 global image; output: raw logits over the four grasp states.
 */
export function buildModel(cfg: NetworkConfig = DEFAULT_CONFIG): tf.LayersModel {
  if (cfg.stageWidths.length < 1) throw new Error('at least one stage is required');
  const seeds = new SeedSequence(cfg.seed);

  const localInputs = Array.from({ length: FINGERS }, (_, f) =>
    tf.input({ shape: [FRAME_ROWS, FINGER_COLS, 1], name: `finger${f}` }),
  );
  const globalInput = tf.input({ shape: [FRAME_ROWS, FRAME_COLS, 1], name: 'global' });

  let localFeatures: tf.SymbolicTensor[];
  if (cfg.shareLocalWeights) {
    // One local network applied to every finger.
    const sharedInput = tf.input({ shape: [FRAME_ROWS, FINGER_COLS, 1], name: 'shared_in' });
    const sharedOut = backbone(sharedInput, cfg, [2, 1], cfg.localFeatureDim, seeds, 'local');
    const shared = tf.model({ inputs: sharedInput, outputs: sharedOut, name: 'local_shared' });
    localFeatures = localInputs.map((inp) => shared.apply(inp) as tf.SymbolicTensor);
  } else {
    localFeatures = localInputs.map((inp, f) =>
      backbone(inp, cfg, [2, 1], cfg.localFeatureDim, seeds, `local${f}`),
    );
  }
  const globalFeature = backbone(globalInput, cfg, [2, 2], cfg.globalFeatureDim, seeds, 'global');

  const fused = tf.layers
    .concatenate({ name: 'fusion' })
    .apply([...localFeatures, globalFeature]) as tf.SymbolicTensor;
  const expected = fusedDim(cfg);
  if (fused.shape[1] !== expected) {
    throw new Error(`fusion vector is ${fused.shape[1]}, expected ${expected}`);
  }

  let head = tf.layers
    .dense({
      units: cfg.headHidden,
      activation: 'relu',
      kernelInitializer: tf.initializers.heNormal({ seed: seeds.draw() }),
      name: 'head_hidden',
    })
    .apply(fused) as tf.SymbolicTensor;
  head = tf.layers
    .dense({
      units: cfg.classes,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seeds.draw() }),
      name: 'logits',
    })
    .apply(head) as tf.SymbolicTensor;

  return tf.model({ inputs: [...localInputs, globalInput], outputs: head, name: 'fusion_cnn' });
}

export interface BatchTensors {
  locals: tf.Tensor4D[];
  global: tf.Tensor4D;
}

/** Pack samples into the five model input tensors. */
export function packInputs(
  locals: Float32Array[][],
  globals: Float32Array[],
): BatchTensors {
  const n = globals.length;
  const localTensors: tf.Tensor4D[] = [];
  for (let f = 0; f < FINGERS; f++) {
    const buf = new Float32Array(n * FRAME_ROWS * FINGER_COLS);
    for (let i = 0; i < n; i++) buf.set(locals[i][f], i * FRAME_ROWS * FINGER_COLS);
    localTensors.push(tf.tensor4d(buf, [n, FRAME_ROWS, FINGER_COLS, 1]));
  }
  const globalBuf = new Float32Array(n * FRAME_ROWS * FRAME_COLS);
  for (let i = 0; i < n; i++) globalBuf.set(globals[i], i * FRAME_ROWS * FRAME_COLS);
  return { locals: localTensors, global: tf.tensor4d(globalBuf, [n, FRAME_ROWS, FRAME_COLS, 1]) };
}

export function disposeBatch(batch: BatchTensors): void {
  batch.locals.forEach((t) => t.dispose());
  batch.global.dispose();
}

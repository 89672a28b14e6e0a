/**
 * Recording -> network input: an aggregated stress-distribution image.
 *
 * The network consumes one image per recording: each taxel's peak pressure
 * over the grasp span minus its pre-grasp baseline, clamped to [0, 1]. The
 * global image is the full 24x16 grid; the four local images are the 24x4
 * finger slices of it.
 */

import { FRAME_COLS, FRAME_ROWS, Recording, TAXELS } from './tgd.js';

export const FINGERS = 4;
export const FINGER_COLS = FRAME_COLS / FINGERS;
export const LOCAL_SIZE = FRAME_ROWS * FINGER_COLS;

export const CLASS_KINDS = ['null', 'good', 'branch', 'obstructed'] as const;
export type ClassKind = (typeof CLASS_KINDS)[number];

export interface Sample {
  id: string;
  labelKind: string | null;
  labelFinger: number | null;
  /** 24x16 aggregated image, row-major, values in [0, 1]. */
  global: Float32Array;
  /** Four 24x4 finger slices of the global image. */
  locals: Float32Array[];
  /** Per-finger contact saliency (max minus median of the slice). */
  saliency: number[];
}

export function aggregate(rec: Recording): Sample {
  const frameCount = rec.frames.length;
  if (frameCount === 0) throw new Error(`recording ${rec.id} has no frames`);
  const graspStart = rec.phaseMarks['grasp'] ?? 0;
  const graspEnd = rec.phaseMarks['release'] ?? frameCount;

  const baseline = new Float64Array(TAXELS);
  if (graspStart > 0) {
    for (let t = 0; t < graspStart; t++) {
      const frame = rec.frames[t];
      for (let i = 0; i < TAXELS; i++) baseline[i] += frame[i];
    }
    for (let i = 0; i < TAXELS; i++) baseline[i] /= graspStart;
  }

  const global = new Float32Array(TAXELS);
  for (let t = graspStart; t < graspEnd; t++) {
    const frame = rec.frames[t];
    for (let i = 0; i < TAXELS; i++) {
      if (frame[i] > global[i]) global[i] = frame[i];
    }
  }
  for (let i = 0; i < TAXELS; i++) {
    global[i] = Math.min(1, Math.max(0, global[i] - baseline[i]));
  }

  const locals = sliceFingers(global);
  return {
    id: rec.id,
    labelKind: rec.labelKind,
    labelFinger: rec.labelFinger,
    global,
    locals,
    saliency: locals.map(fingerSaliency),
  };
}

export function sliceFingers(global: Float32Array): Float32Array[] {
  const locals: Float32Array[] = [];
  for (let f = 0; f < FINGERS; f++) {
    const slice = new Float32Array(LOCAL_SIZE);
    for (let r = 0; r < FRAME_ROWS; r++) {
      for (let c = 0; c < FINGER_COLS; c++) {
        slice[r * FINGER_COLS + c] = global[r * FRAME_COLS + f * FINGER_COLS + c];
      }
    }
    locals.push(slice);
  }
  return locals;
}

/**
 * Contact saliency of one finger slice: peak minus median. A narrow
 * concentration ridge scores high; a broad fruit patch raises the median and
 * scores lower for the same peak.
 */
export function fingerSaliency(slice: Float32Array): number {
  let max = -Infinity;
  for (const v of slice) if (v > max) max = v;
  const sorted = Float32Array.from(slice).sort();
  const mid = sorted.length / 2;
  const median =
    sorted.length % 2 === 1
      ? sorted[(sorted.length - 1) / 2]
      : (sorted[mid - 1] + sorted[mid]) / 2;
  return max - median;
}

export function labelIndex(kind: string): number {
  const idx = CLASS_KINDS.indexOf(kind as ClassKind);
  if (idx < 0) throw new Error(`unknown class kind '${kind}'`);
  return idx;
}

/** Inverse-frequency class weights, normalized to mean 1. */
export function classWeights(samples: Sample[]): number[] {
  const counts = new Array(CLASS_KINDS.length).fill(0);
  for (const s of samples) {
    if (s.labelKind === null) throw new Error(`sample ${s.id} is unlabeled`);
    counts[labelIndex(s.labelKind)]++;
  }
  if (counts.some((c) => c === 0)) {
    const missing = CLASS_KINDS.filter((_, i) => counts[i] === 0);
    throw new Error(`training set lacks classes: ${missing.join(', ')}`);
  }
  const raw = counts.map((c) => samples.length / c);
  const mean = raw.reduce((a, b) => a + b, 0) / raw.length;
  return raw.map((w) => w / mean);
}

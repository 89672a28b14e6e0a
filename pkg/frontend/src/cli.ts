/**
 * Command line front end.
 *
 *   train   --data a.tgd [--data b.tgd ...] --out weights_dir
 *           [--epochs N] [--seed N] [--batch N] [--lr F]
 *   predict --weights weights_dir --data c.tgd --out predictions.txt
 *
 * Datasets are TGD v1 files produced by the core toolkit; predictions are
 * written in the exchange format its `evaluate` command consumes.
 */

import * as tf from '@tensorflow/tfjs';
import { aggregate, Sample } from './features.js';
import { buildModel, DEFAULT_CONFIG } from './model.js';
import { loadModel, predictSamples, saveModel, writePredictions } from './predict.js';
import { trainModel } from './train.js';
import { loadDataset } from './tgd.js';

interface Args {
  command: string;
  data: string[];
  out?: string;
  weights?: string;
  epochs: number;
  seed: number;
  batch: number;
  lr: number;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {
    command: argv[0] ?? '',
    data: [],
    epochs: 25,
    seed: 7,
    batch: 32,
    lr: 3e-3,
  };
  for (let i = 1; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[++i];
    if (value === undefined) throw new Error(`missing value for ${flag}`);
    switch (flag) {
      case '--data':
        args.data.push(value);
        break;
      case '--out':
        args.out = value;
        break;
      case '--weights':
        args.weights = value;
        break;
      case '--epochs':
        args.epochs = Number(value);
        break;
      case '--seed':
        args.seed = Number(value);
        break;
      case '--batch':
        args.batch = Number(value);
        break;
      case '--lr':
        args.lr = Number(value);
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  return args;
}

function loadSamples(paths: string[]): { samples: Sample[]; digest: string } {
  const samples: Sample[] = [];
  const digests: string[] = [];
  for (const path of paths) {
    const dataset = loadDataset(path);
    digests.push(`crc32=${dataset.payloadCrc32} recordings=${dataset.recordings.length}`);
    for (const rec of dataset.recordings) samples.push(aggregate(rec));
  }
  return { samples, digest: digests.join('; ') };
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  if (args.command === 'train') {
    if (args.data.length === 0 || !args.out) {
      throw new Error('train requires --data and --out');
    }
    const { samples, digest } = loadSamples(args.data);
    console.log(`training on ${samples.length} recordings (${digest})`);
    const config = { ...DEFAULT_CONFIG, seed: args.seed };
    const model = buildModel(config);
    const log = await trainModel(model, samples, {
      epochs: args.epochs,
      seed: args.seed,
      batchSize: args.batch,
      learningRate: args.lr,
    });
    const finalLoss = log[log.length - 1].loss;
    await saveModel(model, args.out, {
      config,
      trainSeed: args.seed,
      datasetDigest: digest,
      finalLoss,
    });
    console.log(`saved weights to ${args.out} (final loss ${finalLoss.toFixed(5)})`);
  } else if (args.command === 'predict') {
    if (!args.weights || args.data.length !== 1 || !args.out) {
      throw new Error('predict requires --weights, one --data and --out');
    }
    const { model } = await loadModel(args.weights);
    const { samples } = loadSamples(args.data);
    const predictions = predictSamples(model, samples);
    writePredictions(predictions, args.out);
    console.log(`wrote ${predictions.length} predictions to ${args.out}`);
  } else {
    console.error('usage: cli.ts train|predict ...');
    process.exitCode = 2;
    return;
  }
  tf.disposeVariables();
}

main().catch((err) => {
  console.error(err instanceof Error ? err.message : String(err));
  process.exitCode = 1;
});

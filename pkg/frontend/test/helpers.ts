import { execFileSync } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

/** Repo root (the core toolkit's package lives there). */
export const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), '..', '..');

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

/** Run the core toolkit's CLI; throws on nonzero exit. */
export function coreCli(args: string[]): string {
  return execFileSync('python3', ['-m', 'tactile_grasp.cli', ...args], {
    cwd: REPO_ROOT,
    encoding: 'utf-8',
  });
}

export function generateDataset(
  path: string,
  opts: { kind: 'benchmark' | 'sweep'; seed: number; perClass?: number; noiseSd?: number },
): void {
  const args = ['generate', '--out', path, '--kind', opts.kind, '--seed', String(opts.seed)];
  if (opts.perClass !== undefined) args.push('--per-class', String(opts.perClass));
  if (opts.noiseSd !== undefined) args.push('--noise-sd', String(opts.noiseSd));
  coreCli(args);
}

/** Parse the machine-readable evaluation report of the core toolkit. */
export interface EvalNumbers {
  overall: number;
  perClass: Record<string, number>;
  localization: number;
}

export function parseEvalReport(text: string): EvalNumbers {
  const perClass: Record<string, number> = {};
  let overall = NaN;
  let localization = NaN;
  for (const line of text.split('\n')) {
    const classMatch = line.match(/^class (\S+) count \d+ accuracy ([\d.]+)$/);
    if (classMatch) perClass[classMatch[1]] = Number(classMatch[2]);
    const overallMatch = line.match(/^overall_accuracy ([\d.]+)$/);
    if (overallMatch) overall = Number(overallMatch[1]);
    const locMatch = line.match(/^localization_accuracy ([\d.]+)$/);
    if (locMatch) localization = Number(locMatch[1]);
  }
  return { overall, perClass, localization };
}

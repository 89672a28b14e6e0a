/**
 * TGD v1 dataset reader.
 *
 * A .tgd file is a UTF-8 text manifest, a separator line `payload`, and one
 * binary payload holding every frame of every recording in manifest order as
 * 384 little-endian float32 values (row-major 24x16). The manifest declares
 * the payload byte length and its CRC-32, which this reader verifies.
 */

import { readFileSync } from 'node:fs';

export const FRAME_ROWS = 24;
export const FRAME_COLS = 16;
export const TAXELS = FRAME_ROWS * FRAME_COLS;
const FRAME_BYTES = TAXELS * 4;
const MAGIC = 'TGD v1';

export interface Recording {
  id: string;
  /** Label kind token: null | good | branch | obstructed, or none. */
  labelKind: string | null;
  /** Finger payload for branch/obstructed labels (0-based). */
  labelFinger: number | null;
  /** One Float32Array of 384 values per frame, row-major 24x16. */
  frames: Float32Array[];
  timestampsMs: number[];
  phaseMarks: Record<string, number>;
  meta: Record<string, string>;
}

export interface TgdDataset {
  recordings: Recording[];
  frameIntervalMs: number;
  meta: Record<string, string>;
  payloadCrc32: number;
}

export class TgdFormatError extends Error {}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    crc = CRC_TABLE[(crc ^ data[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

class ManifestReader {
  private lines: string[];
  private pos = 0;

  constructor(text: string, private path: string) {
    this.lines = text.split('\n').map((l) => l.trim());
  }

  next(): string {
    while (this.pos < this.lines.length) {
      const line = this.lines[this.pos++];
      if (line) return line;
    }
    throw new TgdFormatError(`${this.path}: unexpected end of manifest`);
  }

  peek(): string | null {
    for (let i = this.pos; i < this.lines.length; i++) {
      if (this.lines[i]) return this.lines[i];
    }
    return null;
  }

  field(name: string): string {
    const line = this.next();
    const space = line.indexOf(' ');
    const key = space < 0 ? line : line.slice(0, space);
    if (key !== name) {
      throw new TgdFormatError(`${this.path}: expected '${name}', found '${line}'`);
    }
    return space < 0 ? '' : line.slice(space + 1).trim();
  }

  int(name: string): number {
    const value = Number(this.field(name));
    if (!Number.isInteger(value)) {
      throw new TgdFormatError(`${this.path}: '${name}' must be an integer`);
    }
    return value;
  }
}

function splitMeta(line: string, path: string): [string, string] {
  const parts = line.split(' ');
  if (parts.length < 3) throw new TgdFormatError(`${path}: malformed meta line '${line}'`);
  return [parts[1], parts.slice(2).join(' ')];
}

function parseLabel(token: string, path: string): [string | null, number | null] {
  if (token === 'none') return [null, null];
  const parts = token.split(' ');
  const kind = parts[0];
  if (kind === 'null' || kind === 'good') {
    if (parts.length !== 1) throw new TgdFormatError(`${path}: bad label '${token}'`);
    return [kind, null];
  }
  if (kind === 'branch' || kind === 'obstructed') {
    if (parts.length !== 2) throw new TgdFormatError(`${path}: bad label '${token}'`);
    const finger = Number(parts[1]);
    if (!Number.isInteger(finger) || finger < 0 || finger > 3) {
      throw new TgdFormatError(`${path}: bad finger in label '${token}'`);
    }
    return [kind, finger];
  }
  throw new TgdFormatError(`${path}: unknown label kind '${kind}'`);
}

export function loadDataset(path: string): TgdDataset {
  const raw = readFileSync(path);
  const separator = Buffer.from('\npayload\n');
  const cut = raw.indexOf(separator);
  if (cut < 0) throw new TgdFormatError(`${path}: missing payload separator`);
  const manifest = raw.subarray(0, cut).toString('utf-8');
  const payloadRaw = raw.subarray(cut + separator.length);

  const reader = new ManifestReader(manifest, path);
  const magic = reader.next();
  if (magic !== MAGIC) {
    throw new TgdFormatError(`${path}: bad magic '${magic}', expected '${MAGIC}'`);
  }
  const frameIntervalMs = reader.int('frame_interval_ms');
  const rows = reader.int('rows');
  const cols = reader.int('cols');
  if (rows !== FRAME_ROWS || cols !== FRAME_COLS) {
    throw new TgdFormatError(`${path}: unsupported frame geometry ${rows}x${cols}`);
  }
  const count = reader.int('recordings');

  const datasetMeta: Record<string, string> = {};
  while (reader.peek()?.startsWith('meta ')) {
    const [key, value] = splitMeta(reader.next(), path);
    datasetMeta[key] = value;
  }

  const payloadBytes = reader.int('payload_bytes');
  const declaredCrc = reader.int('payload_crc32');
  if (payloadRaw.length !== payloadBytes) {
    throw new TgdFormatError(
      `${path}: payload is ${payloadRaw.length} bytes, manifest declares ${payloadBytes}`,
    );
  }
  // Copy into a fresh, 4-byte-aligned buffer so Float32Array views work.
  const payload = new Uint8Array(payloadRaw.length);
  payload.set(payloadRaw);
  const actualCrc = crc32(payload);
  if (actualCrc !== declaredCrc) {
    throw new TgdFormatError(
      `${path}: payload CRC-32 mismatch (declared ${declaredCrc}, computed ${actualCrc})`,
    );
  }

  const recordings: Recording[] = [];
  let offset = 0;
  for (let r = 0; r < count; r++) {
    const id = reader.field('recording');
    const [labelKind, labelFinger] = parseLabel(reader.field('label'), path);
    const frameCount = reader.int('frames');
    let timestampsMs: number[] = [];
    if (frameCount > 0) {
      timestampsMs = reader.field('timestamps_ms').split(/\s+/).map(Number);
      if (timestampsMs.length !== frameCount || timestampsMs.some((t) => !Number.isInteger(t))) {
        throw new TgdFormatError(`${path}: recording ${id}: bad timestamps`);
      }
    }
    const phaseMarks: Record<string, number> = {};
    const meta: Record<string, string> = {};
    for (;;) {
      const line = reader.next();
      if (line === 'end') break;
      if (line.startsWith('phase ')) {
        const parts = line.split(' ');
        if (parts.length !== 3) throw new TgdFormatError(`${path}: bad phase line '${line}'`);
        phaseMarks[parts[1]] = Number(parts[2]);
      } else if (line.startsWith('meta ')) {
        const [key, value] = splitMeta(line, path);
        meta[key] = value;
      } else {
        throw new TgdFormatError(`${path}: unexpected line in recording ${id}: '${line}'`);
      }
    }

    const frames: Float32Array[] = [];
    for (let i = 0; i < frameCount; i++) {
      if (offset + FRAME_BYTES > payload.length) {
        throw new TgdFormatError(`${path}: recording ${id}: payload truncated at frame ${i}`);
      }
      frames.push(readFrame(payload, offset));
      offset += FRAME_BYTES;
    }
    recordings.push({ id, labelKind, labelFinger, frames, timestampsMs, phaseMarks, meta });
  }
  if (offset !== payload.length) {
    throw new TgdFormatError(`${path}: payload has ${payload.length - offset} trailing bytes`);
  }

  return { recordings, frameIntervalMs, meta: datasetMeta, payloadCrc32: actualCrc };
}

const LITTLE_ENDIAN = (() => {
  const probe = new Uint8Array(new Float32Array([1]).buffer);
  return probe[0] === 0 && probe[3] === 0x3f;
})();

function readFrame(payload: Uint8Array, offset: number): Float32Array {
  if (LITTLE_ENDIAN) {
    return new Float32Array(payload.buffer, payload.byteOffset + offset, TAXELS);
  }
  const view = new DataView(payload.buffer, payload.byteOffset + offset, FRAME_BYTES);
  const out = new Float32Array(TAXELS);
  for (let i = 0; i < TAXELS; i++) out[i] = view.getFloat32(i * 4, true);
  return out;
}

import type { RLEMask } from "./types.js";

/**
 * Decode a run-length mask to a flat Uint8Array of 0/1, row-major.
 * Counts alternate zero/one runs and start with zeros; a leading 0 marks a
 * mask whose first pixel is set.
 */
export function rleDecode(mask: RLEMask): Uint8Array {
  const [rows, cols] = mask.size;
  const total = rows * cols;
  const out = new Uint8Array(total);
  let pos = 0;
  let value = 0;
  for (const run of mask.counts) {
    if (run < 0 || !Number.isInteger(run)) throw new Error(`bad run length ${run}`);
    if (value) out.fill(1, pos, pos + run);
    pos += run;
    value ^= 1;
  }
  if (pos !== total) throw new Error(`run lengths sum to ${pos}, expected ${total}`);
  return out;
}

export function rleEncode(flat: Uint8Array, rows: number, cols: number): RLEMask {
  if (flat.length !== rows * cols) throw new Error("flat size mismatch");
  const counts: number[] = [];
  if (flat.length === 0) return { size: [rows, cols], counts };
  if (flat[0]) counts.push(0);
  let run = 1;
  for (let i = 1; i < flat.length; i++) {
    if ((flat[i] !== 0) === (flat[i - 1] !== 0)) {
      run++;
    } else {
      counts.push(run);
      run = 1;
    }
  }
  counts.push(run);
  return { size: [rows, cols], counts };
}

export function maskArea(mask: RLEMask): number {
  let area = 0;
  for (let i = 1; i < mask.counts.length; i += 2) area += mask.counts[i];
  return area;
}

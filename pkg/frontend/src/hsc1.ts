/**
 * Binary interchange with the ctisim toolkit.
 *
 * Cube frame ("HSC1"): 4-byte magic, then rows/cols/bands as u32
 * little-endian, then rows*cols*bands float32 little-endian stored
 * plane-major (band, then row, then column).
 *
 * Dataset record: id as u64 little-endian, input frame, target frame.
 * Prediction record: id as u64 little-endian, cube frame.
 */

import * as fs from "fs";

export const HSC1_MAGIC = "HSC1";
const HEADER_BYTES = 16;

/** A cube frame with plane-major (bands, rows, cols) float32 payload. */
export interface Frame {
  rows: number;
  cols: number;
  bands: number;
  data: Float32Array;
}

export interface SampleRecord {
  id: number;
  input: Frame;
  target: Frame;
}

export class FormatError extends Error {}

export function encodeFrame(frame: Frame): Buffer {
  const { rows, cols, bands, data } = frame;
  if (data.length !== rows * cols * bands) {
    throw new FormatError(
      `frame payload length ${data.length} does not match ${rows}x${cols}x${bands}`,
    );
  }
  const buf = Buffer.alloc(HEADER_BYTES + data.length * 4);
  buf.write(HSC1_MAGIC, 0, "ascii");
  buf.writeUInt32LE(rows, 4);
  buf.writeUInt32LE(cols, 8);
  buf.writeUInt32LE(bands, 12);
  Buffer.from(data.buffer, data.byteOffset, data.byteLength).copy(buf, HEADER_BYTES);
  return buf;
}

export function decodeFrame(buf: Buffer, offset: number): { frame: Frame; next: number } {
  if (offset + HEADER_BYTES > buf.length) {
    throw new FormatError(`truncated frame header at byte ${offset}`);
  }
  const magic = buf.toString("ascii", offset, offset + 4);
  if (magic !== HSC1_MAGIC) {
    throw new FormatError(`bad magic ${JSON.stringify(magic)} at byte ${offset}`);
  }
  const rows = buf.readUInt32LE(offset + 4);
  const cols = buf.readUInt32LE(offset + 8);
  const bands = buf.readUInt32LE(offset + 12);
  const count = rows * cols * bands;
  const start = offset + HEADER_BYTES;
  const end = start + count * 4;
  if (count < 1 || end > buf.length) {
    throw new FormatError(
      `truncated frame payload at byte ${start}: need ${count * 4} bytes, have ${buf.length - start}`,
    );
  }
  // copy out so the frame owns its memory independent of the file buffer
  let data: Float32Array;
  if ((buf.byteOffset + start) % 4 === 0) {
    data = new Float32Array(buf.buffer, buf.byteOffset + start, count).slice();
  } else {
    data = new Float32Array(count);
    for (let i = 0; i < count; i++) data[i] = buf.readFloatLE(start + i * 4);
  }
  return { frame: { rows, cols, bands, data }, next: end };
}

export function decodeRecords(buf: Buffer): SampleRecord[] {
  const records: SampleRecord[] = [];
  let offset = 0;
  while (offset < buf.length) {
    if (offset + 8 > buf.length) {
      throw new FormatError(`truncated record id at byte ${offset}`);
    }
    const id = Number(buf.readBigUInt64LE(offset));
    offset += 8;
    const input = decodeFrame(buf, offset);
    const target = decodeFrame(buf, input.next);
    records.push({ id, input: input.frame, target: target.frame });
    offset = target.next;
  }
  return records;
}

export function readRecordsFile(path: string): SampleRecord[] {
  return decodeRecords(fs.readFileSync(path));
}

export function writePredictionsFile(path: string, predictions: Iterable<{ id: number; frame: Frame }>): number {
  const chunks: Buffer[] = [];
  let count = 0;
  for (const { id, frame } of predictions) {
    const idBuf = Buffer.alloc(8);
    idBuf.writeBigUInt64LE(BigInt(id));
    chunks.push(idBuf, encodeFrame(frame));
    count += 1;
  }
  fs.writeFileSync(path, Buffer.concat(chunks));
  return count;
}

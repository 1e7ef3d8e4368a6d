// EMB1: the neutral binary container for per-clip embeddings, shared with
// the analysis toolkit. Layout (all integers little-endian, no padding):
//
//   magic   4 bytes  "EMB1"
//   version u32      format version (currently 1)
//   dim     u32      vector length
//   count   u32      number of rows
//   model   u32 length + UTF-8 bytes
//   layer   u32
//   rows    count times: (u32 length + UTF-8 clip id, dim float32 values)
//
// Values are IEEE-754 binary32; write/read round-trips are value-exact for
// every representable float32, subnormals included. Non-finite values are
// rejected on both write and read.

import { readFileSync, writeFileSync } from 'node:fs'

export const MAGIC = 'EMB1'
export const FORMAT_VERSION = 1

const U32_MAX = 0xffffffff

export class EmbeddingFormatError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'EmbeddingFormatError'
  }
}

export interface EmbeddingRow {
  clipId: string
  values: Float32Array
}

export interface EmbeddingTable {
  modelId: string
  layer: number
  dim: number
  rows: EmbeddingRow[]
}

function checkTable(table: EmbeddingTable): void {
  if (!Number.isInteger(table.layer) || table.layer < 0 || table.layer > U32_MAX) {
    throw new EmbeddingFormatError('layer must be an unsigned 32-bit integer')
  }
  if (!Number.isInteger(table.dim) || table.dim < 0 || table.dim > U32_MAX) {
    throw new EmbeddingFormatError('dim must be an unsigned 32-bit integer')
  }
  const seen = new Set<string>()
  for (const row of table.rows) {
    if (seen.has(row.clipId)) {
      throw new EmbeddingFormatError(`duplicate clip id '${row.clipId}'`)
    }
    seen.add(row.clipId)
    if (row.values.length !== table.dim) {
      throw new EmbeddingFormatError(
        `row '${row.clipId}' has ${row.values.length} values, expected dim ${table.dim}`,
      )
    }
    for (const v of row.values) {
      if (!Number.isFinite(v)) {
        throw new EmbeddingFormatError('refusing to write non-finite embedding values')
      }
    }
  }
}

export function encodeEmb1(table: EmbeddingTable): Uint8Array {
  checkTable(table)
  const encoder = new TextEncoder()
  const modelBytes = encoder.encode(table.modelId)
  const idBytes = table.rows.map(row => encoder.encode(row.clipId))

  let size = 4 + 4 + 4 + 4 + 4 + modelBytes.length + 4
  for (const id of idBytes) size += 4 + id.length + 4 * table.dim

  const out = new Uint8Array(size)
  const view = new DataView(out.buffer)
  let pos = 0
  const putU32 = (v: number) => {
    view.setUint32(pos, v, true)
    pos += 4
  }
  const putBytes = (b: Uint8Array) => {
    out.set(b, pos)
    pos += b.length
  }

  putBytes(encoder.encode(MAGIC))
  putU32(FORMAT_VERSION)
  putU32(table.dim)
  putU32(table.rows.length)
  putU32(modelBytes.length)
  putBytes(modelBytes)
  putU32(table.layer)
  for (let i = 0; i < table.rows.length; i++) {
    const id = idBytes[i]!
    putU32(id.length)
    putBytes(id)
    for (const v of table.rows[i]!.values) {
      view.setFloat32(pos, v, true)
      pos += 4
    }
  }
  return out
}

class Reader {
  pos = 0
  private view: DataView
  private decoder = new TextDecoder('utf-8', { fatal: true })

  constructor(private data: Uint8Array, private label: string) {
    this.view = new DataView(data.buffer, data.byteOffset, data.byteLength)
  }

  take(n: number): Uint8Array {
    if (this.pos + n > this.data.length) {
      throw new EmbeddingFormatError(
        `${this.label}: truncated file (needed ${n} bytes at offset ${this.pos})`,
      )
    }
    const out = this.data.subarray(this.pos, this.pos + n)
    this.pos += n
    return out
  }

  u32(): number {
    const v = this.view.getUint32(this.boundedOffset(4), true)
    this.pos += 4
    return v
  }

  f32(): number {
    const v = this.view.getFloat32(this.boundedOffset(4), true)
    this.pos += 4
    return v
  }

  string(): string {
    const length = this.u32()
    try {
      return this.decoder.decode(this.take(length))
    } catch (err) {
      if (err instanceof EmbeddingFormatError) throw err
      throw new EmbeddingFormatError(`${this.label}: invalid UTF-8 string`)
    }
  }

  get remaining(): number {
    return this.data.length - this.pos
  }

  private boundedOffset(n: number): number {
    if (this.pos + n > this.data.length) {
      throw new EmbeddingFormatError(
        `${this.label}: truncated file (needed ${n} bytes at offset ${this.pos})`,
      )
    }
    return this.pos
  }
}

export function decodeEmb1(data: Uint8Array, label = '<bytes>'): EmbeddingTable {
  const r = new Reader(data, label)
  const magic = new TextDecoder().decode(r.take(4))
  if (magic !== MAGIC) {
    throw new EmbeddingFormatError(`${label}: bad magic (not an EMB1 file)`)
  }
  const version = r.u32()
  if (version !== FORMAT_VERSION) {
    throw new EmbeddingFormatError(`${label}: unsupported format version ${version}`)
  }
  const dim = r.u32()
  const count = r.u32()
  const modelId = r.string()
  const layer = r.u32()
  const rows: EmbeddingRow[] = []
  const seen = new Set<string>()
  for (let i = 0; i < count; i++) {
    const clipId = r.string()
    const values = new Float32Array(dim)
    for (let j = 0; j < dim; j++) {
      values[j] = r.f32()
      if (!Number.isFinite(values[j])) {
        throw new EmbeddingFormatError(`${label}: non-finite embedding value`)
      }
    }
    if (seen.has(clipId)) {
      throw new EmbeddingFormatError(`${label}: duplicate clip ids`)
    }
    seen.add(clipId)
    rows.push({ clipId, values })
  }
  if (r.remaining !== 0) {
    throw new EmbeddingFormatError(`${label}: ${r.remaining} trailing bytes after payload`)
  }
  return { modelId, layer, dim, rows }
}

export function writeEmb1File(table: EmbeddingTable, path: string): void {
  writeFileSync(path, encodeEmb1(table))
}

export function readEmb1File(path: string): EmbeddingTable {
  return decodeEmb1(new Uint8Array(readFileSync(path)), path)
}

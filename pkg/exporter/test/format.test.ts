import { describe, expect, it } from 'vitest'
import {
  EmbeddingFormatError,
  decodeEmb1,
  encodeEmb1,
  type EmbeddingTable,
} from '../src/format.js'

// Byte-level reference frozen from the analysis toolkit's writer: the same
// table must serialize to the same 71 bytes here.
const REFERENCE_HEX =
  '454d423101000000030000000200000008000000746f792d70726f6a' +
  '0200000001000000610000803f000020c00000504006000000636c69702f62' +
  '0000000000000080c2160100'

function referenceTable(): EmbeddingTable {
  return {
    modelId: 'toy-proj',
    layer: 2,
    dim: 3,
    rows: [
      { clipId: 'a', values: new Float32Array([1.0, -2.5, 3.25]) },
      { clipId: 'clip/b', values: new Float32Array([0.0, -0.0, 1e-40]) },
    ],
  }
}

function hex(bytes: Uint8Array): string {
  return [...bytes].map(b => b.toString(16).padStart(2, '0')).join('')
}

function bits(values: Float32Array): Uint32Array {
  return new Uint32Array(values.buffer, values.byteOffset, values.length)
}

describe('encodeEmb1', () => {
  it('reproduces the frozen byte reference', () => {
    expect(hex(encodeEmb1(referenceTable()))).toBe(REFERENCE_HEX)
  })

  it('writes a valid zero-row file', () => {
    const empty = encodeEmb1({ modelId: 'm', layer: 0, dim: 16, rows: [] })
    const back = decodeEmb1(empty)
    expect(back.rows.length).toBe(0)
    expect(back.dim).toBe(16)
    expect(back.modelId).toBe('m')
  })

  it('rejects non-finite values', () => {
    const table = referenceTable()
    table.rows[0]!.values[1] = NaN
    expect(() => encodeEmb1(table)).toThrow(EmbeddingFormatError)
    table.rows[0]!.values[1] = Infinity
    expect(() => encodeEmb1(table)).toThrow(/non-finite/)
  })

  it('rejects duplicate clip ids', () => {
    const table = referenceTable()
    table.rows[1] = { ...table.rows[1]!, clipId: 'a' }
    expect(() => encodeEmb1(table)).toThrow(/duplicate/)
  })

  it('rejects rows that do not match dim', () => {
    const table = referenceTable()
    table.rows[0] = { clipId: 'a', values: new Float32Array([1, 2]) }
    expect(() => encodeEmb1(table)).toThrow(/expected dim/)
  })

  it('rejects a negative or fractional layer', () => {
    expect(() => encodeEmb1({ modelId: 'm', layer: -1, dim: 1, rows: [] })).toThrow(/layer/)
    expect(() => encodeEmb1({ modelId: 'm', layer: 0.5, dim: 1, rows: [] })).toThrow(/layer/)
  })
})

describe('decodeEmb1 round trip', () => {
  it('is value-exact, subnormals and signed zero included', () => {
    const values = new Float32Array([
      0.0,
      -0.0,
      1.5,
      -2.5,
      3.4028234663852886e38, // largest finite float32
      1.1754943508222875e-38, // smallest normal
      1.401298464324817e-45, // smallest subnormal
      -1e-40,
    ])
    const table: EmbeddingTable = {
      modelId: 'edge',
      layer: 0,
      dim: values.length,
      rows: [{ clipId: 'c', values }],
    }
    const back = decodeEmb1(encodeEmb1(table))
    expect(back.modelId).toBe('edge')
    expect(back.layer).toBe(0)
    expect([...bits(back.rows[0]!.values)]).toEqual([...bits(values)])
    expect(Object.is(back.rows[0]!.values[1], -0)).toBe(true)
  })

  it('keeps row order and ids', () => {
    const back = decodeEmb1(encodeEmb1(referenceTable()))
    expect(back.rows.map(r => r.clipId)).toEqual(['a', 'clip/b'])
    expect(back.layer).toBe(2)
  })
})

describe('decodeEmb1 validation', () => {
  const good = () => encodeEmb1(referenceTable())

  it('rejects bad magic', () => {
    const data = good()
    data[0] = 0x58
    expect(() => decodeEmb1(data)).toThrow(/bad magic/)
  })

  it('rejects an unsupported version', () => {
    const data = good()
    data[4] = 9
    expect(() => decodeEmb1(data)).toThrow(/version 9/)
  })

  it('rejects a truncated header', () => {
    expect(() => decodeEmb1(good().subarray(0, 10))).toThrow(/truncated/)
  })

  it('rejects truncated rows', () => {
    const data = good()
    expect(() => decodeEmb1(data.subarray(0, data.length - 3))).toThrow(/truncated/)
  })

  it('rejects trailing bytes', () => {
    const data = good()
    const padded = new Uint8Array(data.length + 1)
    padded.set(data)
    expect(() => decodeEmb1(padded)).toThrow(/trailing/)
  })

  it('rejects non-finite payloads', () => {
    const data = good()
    const view = new DataView(data.buffer)
    // header is 32 bytes (magic..layer with the 8-byte model id), row 'a'
    // adds 4 + 1 bytes of id, so its first float starts at offset 37
    view.setFloat32(37, NaN, true)
    expect(() => decodeEmb1(data)).toThrow(/non-finite/)
  })

  it('rejects duplicate clip ids', () => {
    const table: EmbeddingTable = {
      modelId: 'm',
      layer: 0,
      dim: 1,
      rows: [
        { clipId: 'aa', values: new Float32Array([1]) },
        { clipId: 'ab', values: new Float32Array([2]) },
      ],
    }
    const data = encodeEmb1(table)
    // patch the second id 'ab' -> 'aa'
    const idx = findSubsequence(data, new TextEncoder().encode('ab'))
    data[idx + 1] = 'a'.charCodeAt(0)
    expect(() => decodeEmb1(data)).toThrow(/duplicate/)
  })

  it('rejects invalid UTF-8 in ids', () => {
    const data = good()
    const idx = findSubsequence(data, new TextEncoder().encode('clip/b'))
    data[idx] = 0xff
    expect(() => decodeEmb1(data)).toThrow(/UTF-8/)
  })
})

function findSubsequence(haystack: Uint8Array, needle: Uint8Array): number {
  outer: for (let i = 0; i + needle.length <= haystack.length; i++) {
    for (let j = 0; j < needle.length; j++) {
      if (haystack[i + j] !== needle[j]) continue outer
    }
    return i
  }
  throw new Error('subsequence not found')
}

// Minimal RIFF/WAVE reader: integer PCM (8/16/24/32 bit) and IEEE float
// (32/64 bit), downmixed to mono float64 with the same scaling the analysis
// toolkit applies (int16 / 32768, int32 / 2^31, uint8 offset-binary,
// 24-bit promoted to int32 before scaling). No resampling.

export class AudioReadError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'AudioReadError'
  }
}

export interface MonoClip {
  samples: Float64Array
  sampleRate: number
}

interface FmtChunk {
  format: number
  channels: number
  sampleRate: number
  bitsPerSample: number
}

const FORMAT_PCM = 1
const FORMAT_IEEE_FLOAT = 3

function ascii(view: DataView, offset: number): string {
  let s = ''
  for (let i = 0; i < 4; i++) s += String.fromCharCode(view.getUint8(offset + i))
  return s
}

export function parseWav(bytes: Uint8Array): MonoClip {
  if (bytes.length < 12) throw new AudioReadError('file too small to be a WAV')
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength)
  if (ascii(view, 0) !== 'RIFF' || ascii(view, 8) !== 'WAVE') {
    throw new AudioReadError('not a RIFF/WAVE file')
  }

  let fmt: FmtChunk | null = null
  let data: Uint8Array | null = null
  let offset = 12
  while (offset + 8 <= bytes.length) {
    const id = ascii(view, offset)
    const size = view.getUint32(offset + 4, true)
    const body = offset + 8
    if (body + size > bytes.length) {
      throw new AudioReadError(`truncated '${id}' chunk`)
    }
    if (id === 'fmt ') {
      if (size < 16) throw new AudioReadError('fmt chunk too small')
      fmt = {
        format: view.getUint16(body, true),
        channels: view.getUint16(body + 2, true),
        sampleRate: view.getUint32(body + 4, true),
        bitsPerSample: view.getUint16(body + 14, true),
      }
    } else if (id === 'data') {
      data = bytes.subarray(body, body + size)
    }
    offset = body + size + (size % 2) // chunks are word-aligned
  }

  if (fmt === null) throw new AudioReadError('missing fmt chunk')
  if (data === null) throw new AudioReadError('missing data chunk')
  if (fmt.channels < 1) throw new AudioReadError('channel count must be positive')
  if (fmt.sampleRate < 1) throw new AudioReadError('sample rate must be positive')

  const decoded = decodeSamples(fmt, data)
  return { samples: downmix(decoded, fmt.channels), sampleRate: fmt.sampleRate }
}

function decodeSamples(fmt: FmtChunk, data: Uint8Array): Float64Array {
  const bytesPerSample = fmt.bitsPerSample / 8
  if (!Number.isInteger(bytesPerSample)) {
    throw new AudioReadError(`unsupported bit depth ${fmt.bitsPerSample}`)
  }
  const count = Math.floor(data.length / bytesPerSample)
  if (count * bytesPerSample !== data.length) {
    throw new AudioReadError('data chunk is not a whole number of samples')
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength)
  const out = new Float64Array(count)

  if (fmt.format === FORMAT_PCM) {
    switch (fmt.bitsPerSample) {
      case 8:
        for (let i = 0; i < count; i++) out[i] = (view.getUint8(i) - 128) / 128
        return out
      case 16:
        for (let i = 0; i < count; i++) out[i] = view.getInt16(2 * i, true) / 32768
        return out
      case 24:
        for (let i = 0; i < count; i++) {
          const lo = view.getUint16(3 * i, true)
          const hi = view.getInt8(3 * i + 2)
          out[i] = (hi * 65536 + lo) / 8388608
        }
        return out
      case 32:
        for (let i = 0; i < count; i++) out[i] = view.getInt32(4 * i, true) / 2147483648
        return out
      default:
        throw new AudioReadError(`unsupported PCM bit depth ${fmt.bitsPerSample}`)
    }
  }
  if (fmt.format === FORMAT_IEEE_FLOAT) {
    switch (fmt.bitsPerSample) {
      case 32:
        for (let i = 0; i < count; i++) out[i] = view.getFloat32(4 * i, true)
        return out
      case 64:
        for (let i = 0; i < count; i++) out[i] = view.getFloat64(8 * i, true)
        return out
      default:
        throw new AudioReadError(`unsupported float bit depth ${fmt.bitsPerSample}`)
    }
  }
  throw new AudioReadError(`unsupported WAV format tag ${fmt.format}`)
}

function downmix(interleaved: Float64Array, channels: number): Float64Array {
  if (channels === 1) return interleaved
  const frames = Math.floor(interleaved.length / channels)
  const mono = new Float64Array(frames)
  for (let f = 0; f < frames; f++) {
    let sum = 0
    for (let c = 0; c < channels; c++) sum += interleaved[f * channels + c]!
    mono[f] = sum / channels
  }
  return mono
}

// Backend registry: one backend per model id, any of which may be absent.
// Each backend maps a mono clip to per-frame activation rows at a given
// layer; the extractor never cares how.

import { splitmix64, fnv1a64, MASK64 } from './rng.js'

export class CheckpointLoadError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'CheckpointLoadError'
  }
}

export class DimensionMismatchError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'DimensionMismatchError'
  }
}

export interface Backend {
  readonly modelId: string
  readonly dim: number
  readonly layers: readonly number[]
  /** One activation row per analysis frame at the requested layer. */
  embed(samples: Float64Array, sampleRate: number, layer: number): Float32Array[]
}

export interface ModelInfo {
  dim: number
  layers: readonly number[]
  /** Resampling and availability notes for this backend. */
  note: string
  load(): Backend
}

const registry = new Map<string, ModelInfo>()

export function registerModel(modelId: string, info: ModelInfo): void {
  registry.set(modelId, info)
}

export function modelInfo(modelId: string): ModelInfo {
  const info = registry.get(modelId)
  if (info === undefined) {
    const known = [...registry.keys()].sort().join(', ')
    throw new CheckpointLoadError(`no backend registered for model id '${modelId}' (known: ${known})`)
  }
  return info
}

export function loadBackend(modelId: string): Backend {
  return modelInfo(modelId).load()
}

// --- statproj: a tiny self-contained backend ---------------------------------
//
// Windowed signal statistics projected through a fixed pseudorandom bank.
// Weights are derived from a splitmix64 stream keyed by (model id, layer),
// so the backend needs no checkpoint and is bit-deterministic everywhere.

export const STATPROJ_ID = 'statproj'
export const STATPROJ_DIM = 16
const STATPROJ_LAYERS = [0, 1, 2, 3] as const
const WINDOW = 2048
const HOP = 1024
const N_STATS = 8

function uniformBank(key: string, count: number): Float64Array {
  let state = fnv1a64(key)
  const out = new Float64Array(count)
  for (let i = 0; i < count; i++) {
    state = splitmix64(state) & MASK64
    // top 53 bits -> [0, 1), then shift to [-1, 1)
    out[i] = (Number(state >> 11n) / 2 ** 53) * 2 - 1
  }
  return out
}

function frameStats(frame: Float64Array): Float64Array {
  const n = frame.length
  let sum = 0
  let sumSq = 0
  let sumAbs = 0
  let crossings = 0
  let max = -Infinity
  let min = Infinity
  for (let i = 0; i < n; i++) {
    const v = frame[i]!
    sum += v
    sumSq += v * v
    sumAbs += Math.abs(v)
    if (v > max) max = v
    if (v < min) min = v
    if (i > 0 && v * frame[i - 1]! < 0) crossings++
  }
  let firstSq = 0
  const half = n >> 1
  for (let i = 0; i < half; i++) firstSq += frame[i]! * frame[i]!
  const stats = new Float64Array(N_STATS)
  stats[0] = sum / n
  stats[1] = Math.sqrt(sumSq / n)
  stats[2] = sumAbs / n
  stats[3] = crossings / n
  stats[4] = half > 0 ? Math.sqrt(firstSq / half) : 0
  stats[5] = n - half > 0 ? Math.sqrt((sumSq - firstSq) / (n - half)) : 0
  stats[6] = max
  stats[7] = min
  return stats
}

class StatProjBackend implements Backend {
  readonly modelId = STATPROJ_ID
  readonly dim = STATPROJ_DIM
  readonly layers = STATPROJ_LAYERS

  embed(samples: Float64Array, sampleRate: number, layer: number): Float32Array[] {
    if (!this.layers.includes(layer as 0 | 1 | 2 | 3)) {
      throw new RangeError(
        `layer ${layer} not valid for model ${this.modelId} (valid: ${this.layers.join(', ')})`,
      )
    }
    if (sampleRate <= 0) throw new RangeError('sample rate must be positive')
    const bank = uniformBank(`${this.modelId}/layer${layer}`, this.dim * N_STATS)

    let clip = samples
    if (clip.length < WINDOW) {
      const padded = new Float64Array(WINDOW)
      padded.set(clip)
      clip = padded
    }
    const frames: Float32Array[] = []
    for (let start = 0; start + WINDOW <= clip.length; start += HOP) {
      const stats = frameStats(clip.subarray(start, start + WINDOW))
      const row = new Float32Array(this.dim)
      for (let d = 0; d < this.dim; d++) {
        let acc = 0
        for (let s = 0; s < N_STATS; s++) acc += bank[d * N_STATS + s]! * stats[s]!
        row[d] = acc
      }
      frames.push(row)
    }
    return frames
  }
}

registerModel(STATPROJ_ID, {
  dim: STATPROJ_DIM,
  layers: STATPROJ_LAYERS,
  note: 'deterministic statistics projection; uses audio at its native rate, no resampling',
  load: () => new StatProjBackend(),
})

// Published models are registered with their known shapes so manifests can be
// validated, but no weights ship with this package; loading them reports a
// checkpoint failure until a backend implementation is installed.
registerModel('jukebox-5b', {
  dim: 4800,
  layers: [36],
  note: 'requires the 5B checkpoint and a GPU runtime; resamples to 44.1 kHz',
  load: () => {
    throw new CheckpointLoadError(
      "no checkpoint bundled for 'jukebox-5b'; install a backend and register it with registerModel()",
    )
  },
})

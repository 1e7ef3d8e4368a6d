import { splitmix64 } from './rng.js'

export interface Segment {
  samples: Float64Array
  /** Offset of the crop in the source clip; 0 when the clip was padded. */
  start: number
  padded: boolean
}

// Python's round() resolves .5 ties to the even neighbour; the analysis
// toolkit computes target lengths that way, so exact halves (e.g. 62.5
// samples) must land on the same integer here.
export function roundHalfEven(x: number): number {
  const lo = Math.floor(x)
  const frac = x - lo
  if (frac > 0.5) return lo + 1
  if (frac < 0.5) return lo
  return lo % 2 === 0 ? lo : lo + 1
}

/**
 * Crop a fixed-length segment (seeded-uniform start) or zero-pad the tail.
 *
 * The start offset is `splitmix64(seed) % n_possible_starts`, the same rule
 * the analysis toolkit applies, so one seed yields one crop everywhere.
 */
export function selectSegment(
  samples: Float64Array,
  sampleRate: number,
  targetS: number,
  seed: bigint,
): Segment {
  if (targetS <= 0) throw new RangeError('segment length must be positive')
  if (!Number.isInteger(sampleRate) || sampleRate <= 0) {
    throw new RangeError('sample rate must be a positive integer')
  }
  const targetN = roundHalfEven(targetS * sampleRate)
  const n = samples.length
  if (n >= targetN) {
    const start = Number(splitmix64(seed) % BigInt(n - targetN + 1))
    return { samples: samples.subarray(start, start + targetN), start, padded: false }
  }
  const padded = new Float64Array(targetN)
  padded.set(samples)
  return { samples: padded, start: 0, padded: true }
}

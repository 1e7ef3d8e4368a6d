// Deterministic 64-bit mixing shared with the analysis toolkit: crop
// boundaries depend only on (seed, clip_id), so both tools compute the
// same start offsets without exchanging any state.

export const MASK64 = (1n << 64n) - 1n

/** One splitmix64 step: maps a 64-bit integer to a well-mixed 64-bit integer. */
export function splitmix64(x: bigint): bigint {
  x = (x + 0x9e3779b97f4a7c15n) & MASK64
  let z = ((x ^ (x >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64
  return z ^ (z >> 31n)
}

/** FNV-1a hash of the UTF-8 encoding of `text`. */
export function fnv1a64(text: string): bigint {
  let h = 0xcbf29ce484222325n
  for (const byte of new TextEncoder().encode(text)) {
    h ^= BigInt(byte)
    h = (h * 0x100000001b3n) & MASK64
  }
  return h
}

/** Per-clip seed derived from a global seed; stable across runs and tools. */
export function clipSeed(seed: bigint, clipId: string): bigint {
  return splitmix64((seed & MASK64) ^ fnv1a64(clipId))
}

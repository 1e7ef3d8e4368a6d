import { readFileSync } from 'node:fs'
import { dirname, isAbsolute, resolve } from 'node:path'
import Papa from 'papaparse'

import { DimensionMismatchError, loadBackend, modelInfo, type Backend } from './backends.js'
import { writeEmb1File, type EmbeddingRow } from './format.js'
import { clipSeed } from './rng.js'
import { selectSegment } from './segment.js'
import { AudioReadError, parseWav } from './wav.js'

export class ManifestError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'ManifestError'
  }
}

export interface ExtractorSpec {
  modelId: string
  layer: number
  /** Segment length in seconds cropped from each clip. */
  segmentS?: number
  /** 'mean' pools frames over time; 'none' requires a single frame. */
  pool?: 'mean' | 'none'
  seed?: bigint
}

export const DEFAULT_SEGMENT_S = 25
export const DEFAULT_POOL = 'mean'

export interface ManifestEntry {
  clipId: string
  audioPath: string
}

export interface ExtractSummary {
  modelId: string
  layer: number
  dim: number
  rows: number
  outPath: string
}

/** Parse a manifest CSV; needs clip_id and audio_path columns, extras are ignored. */
export function parseManifest(text: string): ManifestEntry[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  })
  const fields = parsed.meta.fields ?? []
  for (const required of ['clip_id', 'audio_path']) {
    if (!fields.includes(required)) {
      throw new ManifestError(`manifest must have a '${required}' column (got: ${fields.join(', ')})`)
    }
  }
  const entries: ManifestEntry[] = []
  const seen = new Set<string>()
  for (const row of parsed.data) {
    const clipId = (row['clip_id'] ?? '').trim()
    if (clipId === '') throw new ManifestError('empty clip_id in manifest')
    if (seen.has(clipId)) throw new ManifestError(`duplicate clip_id '${clipId}' in manifest`)
    seen.add(clipId)
    entries.push({ clipId, audioPath: row['audio_path'] ?? '' })
  }
  return entries
}

function readClip(path: string): { samples: Float64Array; sampleRate: number } {
  let bytes: Buffer
  try {
    bytes = readFileSync(path)
  } catch (err) {
    throw new AudioReadError(`cannot read audio file ${path}: ${(err as Error).message}`)
  }
  return parseWav(new Uint8Array(bytes))
}

function poolFrames(frames: Float32Array[], dim: number, pool: 'mean' | 'none', clipId: string): Float32Array {
  if (frames.length === 0) {
    throw new DimensionMismatchError(`backend produced no frames for clip '${clipId}'`)
  }
  for (const frame of frames) {
    if (frame.length !== dim) {
      throw new DimensionMismatchError(
        `backend produced ${frame.length}-dim frames for clip '${clipId}', expected ${dim}`,
      )
    }
  }
  if (pool === 'none') {
    if (frames.length !== 1) {
      throw new RangeError(
        `pool 'none' needs exactly one frame per clip, got ${frames.length} for '${clipId}'`,
      )
    }
    return frames[0]!
  }
  const acc = new Float64Array(dim)
  for (const frame of frames) {
    for (let d = 0; d < dim; d++) acc[d]! += frame[d]!
  }
  const mean = new Float32Array(dim)
  for (let d = 0; d < dim; d++) mean[d] = acc[d]! / frames.length
  return mean
}

/**
 * Run one backend over every clip in a manifest and write an EMB1 file.
 *
 * Each clip is cropped (or zero-padded) to `segmentS` seconds with a start
 * offset derived from (seed, clip_id), matching the analysis toolkit's
 * select_segment, then embedded and pooled to a single row.
 */
export function extract(
  manifestPath: string,
  spec: ExtractorSpec,
  outPath: string,
  options: { audioRoot?: string } = {},
): ExtractSummary {
  const segmentS = spec.segmentS ?? DEFAULT_SEGMENT_S
  const pool = spec.pool ?? DEFAULT_POOL
  const seed = spec.seed ?? 0n
  if (segmentS <= 0) throw new RangeError('segment length must be positive')
  if (pool !== 'mean' && pool !== 'none') {
    throw new RangeError(`unknown pool mode '${pool}' (expected 'mean' or 'none')`)
  }

  const info = modelInfo(spec.modelId)
  if (!info.layers.includes(spec.layer)) {
    throw new RangeError(
      `layer ${spec.layer} not valid for model ${spec.modelId} (valid: ${info.layers.join(', ')})`,
    )
  }

  let manifestText: string
  try {
    manifestText = readFileSync(manifestPath, 'utf-8')
  } catch (err) {
    throw new ManifestError(`cannot open manifest ${manifestPath}: ${(err as Error).message}`)
  }
  const entries = parseManifest(manifestText)

  const backend: Backend = loadBackend(spec.modelId)
  const root = options.audioRoot ?? dirname(manifestPath)

  const rows: EmbeddingRow[] = []
  for (const entry of entries) {
    const path = isAbsolute(entry.audioPath) ? entry.audioPath : resolve(root, entry.audioPath)
    const clip = readClip(path)
    const segment = selectSegment(clip.samples, clip.sampleRate, segmentS, clipSeed(seed, entry.clipId))
    const frames = backend.embed(segment.samples, clip.sampleRate, spec.layer)
    rows.push({ clipId: entry.clipId, values: poolFrames(frames, info.dim, pool, entry.clipId) })
  }

  writeEmb1File({ modelId: spec.modelId, layer: spec.layer, dim: info.dim, rows }, outPath)
  return { modelId: spec.modelId, layer: spec.layer, dim: info.dim, rows: rows.length, outPath }
}

export { clipSeed, fnv1a64, splitmix64 } from './rng.js'
export { roundHalfEven, selectSegment, type Segment } from './segment.js'
export { AudioReadError, parseWav, type MonoClip } from './wav.js'
export {
  EmbeddingFormatError,
  FORMAT_VERSION,
  MAGIC,
  decodeEmb1,
  encodeEmb1,
  readEmb1File,
  writeEmb1File,
  type EmbeddingRow,
  type EmbeddingTable,
} from './format.js'
export {
  CheckpointLoadError,
  DimensionMismatchError,
  STATPROJ_DIM,
  STATPROJ_ID,
  loadBackend,
  modelInfo,
  registerModel,
  type Backend,
  type ModelInfo,
} from './backends.js'
export {
  DEFAULT_POOL,
  DEFAULT_SEGMENT_S,
  ManifestError,
  extract,
  parseManifest,
  type ExtractSummary,
  type ExtractorSpec,
  type ManifestEntry,
} from './extract.js'

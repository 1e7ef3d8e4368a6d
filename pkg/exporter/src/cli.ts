#!/usr/bin/env node
// CLI: emb1-export extract --model <id> --layer <n> --manifest <csv> --out <emb1>
// Errors are reported as one JSON object on stderr, exit code 1, matching
// the analysis toolkit's convention.

import { parseArgs } from 'node:util'
import { extract } from './extract.js'

const USAGE = `usage: emb1-export extract --model <id> --layer <n> --manifest <csv> --out <emb1>
                            [--seed <n>] [--segment-s <seconds>] [--pool mean|none]
                            [--audio-root <dir>]

Extract one embedding row per manifest clip and write an EMB1 file.
Audio paths in the manifest resolve against --audio-root (default: the
manifest's directory).`

class UsageError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'UsageError'
  }
}

function requireOption(value: string | undefined, flag: string): string {
  if (value === undefined) throw new UsageError(`missing required option ${flag}`)
  return value
}

function parseIntStrict(value: string, flag: string): number {
  const n = Number(value)
  if (!Number.isInteger(n)) throw new UsageError(`${flag} must be an integer, got '${value}'`)
  return n
}

function run(argv: string[]): number {
  if (argv.includes('--help') || argv.includes('-h')) {
    process.stdout.write(USAGE + '\n')
    return 0
  }
  const command = argv[0]
  if (command !== 'extract') {
    throw new UsageError(`unknown command '${command ?? ''}' (expected: extract)`)
  }

  let parsed
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        model: { type: 'string' },
        layer: { type: 'string' },
        manifest: { type: 'string' },
        out: { type: 'string' },
        seed: { type: 'string', default: '0' },
        'segment-s': { type: 'string', default: '25' },
        pool: { type: 'string', default: 'mean' },
        'audio-root': { type: 'string' },
      },
      strict: true,
    })
  } catch (err) {
    throw new UsageError((err as Error).message)
  }
  const opts = parsed.values

  const pool = opts.pool!
  if (pool !== 'mean' && pool !== 'none') {
    throw new UsageError(`--pool must be 'mean' or 'none', got '${pool}'`)
  }
  const segmentS = Number(opts['segment-s'])
  if (!Number.isFinite(segmentS)) {
    throw new UsageError(`--segment-s must be a number, got '${opts['segment-s']}'`)
  }
  let seed: bigint
  try {
    seed = BigInt(opts.seed!)
  } catch {
    throw new UsageError(`--seed must be an integer, got '${opts.seed}'`)
  }

  const summary = extract(
    requireOption(opts.manifest, '--manifest'),
    {
      modelId: requireOption(opts.model, '--model'),
      layer: parseIntStrict(requireOption(opts.layer, '--layer'), '--layer'),
      segmentS,
      pool,
      seed,
    },
    requireOption(opts.out, '--out'),
    { audioRoot: opts['audio-root'] },
  )
  process.stdout.write(JSON.stringify(summary) + '\n')
  return 0
}

export function main(argv: string[]): number {
  try {
    return run(argv)
  } catch (err) {
    const e = err as Error
    process.stderr.write(JSON.stringify({ error: e.name || 'Error', message: e.message }) + '\n')
    return 1
  }
}

const entry = process.argv[1] ?? ''
if (entry.endsWith('cli.js') || entry.endsWith('emb1-export')) {
  process.exit(main(process.argv.slice(2)))
}

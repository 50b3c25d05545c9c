#!/usr/bin/env node
/** driftmon-export: write NDJSON embeddings for a directory of images.
 *
 * Usage:
 *   driftmon-export --images DIR --out embeddings.ndjson
 *       [--backbone seeded-small|seeded-tiny] [--model-dir DIR]
 *       [--layer logits|penultimate] [--resize 256] [--batch-size 16]
 *       [--mean 0.5] [--std 0.5] [--seed 42]
 *
 * Exit codes: 0 success, 1 usage error, 2 data error.
 */
import { BUILTIN_BACKBONES, LayerChoice } from './backbone'
import { ExportConfig, InconsistentDimError, exportEmbeddings } from './exporter'

function usage(message?: string): never {
  if (message) console.error(`driftmon-export: ${message}`)
  console.error(
    'usage: driftmon-export --images DIR --out FILE [--backbone NAME] [--model-dir DIR]\n' +
      '                       [--layer logits|penultimate] [--resize N] [--batch-size N]\n' +
      '                       [--mean X] [--std X] [--seed N]',
  )
  process.exit(1)
}

function parseArgs(argv: string[]): ExportConfig {
  const opts: Record<string, string> = {}
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    if (!key.startsWith('--')) usage(`unexpected argument ${key}`)
    const value = argv[i + 1]
    if (value === undefined) usage(`missing value for ${key}`)
    opts[key.slice(2)] = value
  }
  if (!opts.images || !opts.out) usage('--images and --out are required')
  const layer = (opts.layer ?? 'penultimate') as LayerChoice
  if (layer !== 'logits' && layer !== 'penultimate') usage(`bad --layer ${opts.layer}`)
  if (opts.backbone && opts['model-dir']) usage('use either --backbone or --model-dir')
  if (opts.backbone && !(opts.backbone in BUILTIN_BACKBONES)) {
    usage(`unknown backbone ${opts.backbone}; built-ins: ${Object.keys(BUILTIN_BACKBONES).join(', ')}`)
  }
  const num = (key: string, fallback: number) => {
    if (!(key in opts)) return fallback
    const v = Number(opts[key])
    if (!Number.isFinite(v)) usage(`bad numeric value for --${key}`)
    return v
  }
  return {
    imagesDir: opts.images,
    outPath: opts.out,
    backbone: opts.backbone,
    modelDir: opts['model-dir'],
    layer,
    resize: num('resize', 256),
    batchSize: num('batch-size', 16),
    mean: num('mean', 0.5),
    std: num('std', 0.5),
    seed: num('seed', 42),
  }
}

async function main(): Promise<number> {
  const cfg = parseArgs(process.argv.slice(2))
  try {
    const result = await exportEmbeddings(cfg)
    console.error(
      `driftmon-export: wrote ${result.written} vectors` +
        (result.dim !== null ? ` (d=${result.dim})` : '') +
        (result.skipped ? `, skipped ${result.skipped} unreadable` : ''),
    )
    return 0
  } catch (err) {
    if (err instanceof InconsistentDimError || (err as NodeJS.ErrnoException).code === 'ENOENT') {
      console.error(`driftmon-export: ${(err as Error).message}`)
      return 2
    }
    throw err
  }
}

main().then(code => process.exit(code))

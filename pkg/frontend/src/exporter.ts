/** Embedding export: image directory -> NDJSON consumed by the monitoring engine.
 *
 * One line per image: {"id": "<path relative to the directory>", "vec": [...]}.
 * Images are decoded, resized to a square input, normalized as (p - mean)/std,
 * and run through the backbone in batches. Unreadable files are skipped with a
 * warning and counted; a dimension change mid-run aborts, since mixed
 * dimensions would poison the downstream baseline fit.
 */
import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'
import { Backbone, LayerChoice, buildSeededBackbone, loadBackboneFromDir } from './backbone'
import { GrayImage, ImageDecodeError, decodePgm } from './pgm'

export interface ExportConfig {
  imagesDir: string
  outPath: string
  backbone?: string
  modelDir?: string
  layer?: LayerChoice
  resize?: number
  batchSize?: number
  mean?: number
  std?: number
  seed?: number
}

export interface ExportResult {
  written: number
  skipped: number
  dim: number | null
}

export class InconsistentDimError extends Error {}

export function listImageFiles(dir: string): string[] {
  const out: string[] = []
  const walk = (sub: string) => {
    for (const entry of fs.readdirSync(path.join(dir, sub), { withFileTypes: true })) {
      const rel = sub ? `${sub}/${entry.name}` : entry.name
      if (entry.isDirectory()) walk(rel)
      else if (entry.name.toLowerCase().endsWith('.pgm')) out.push(rel)
    }
  }
  walk('')
  return out.sort()
}

export function imageToInput(img: GrayImage, size: number, mean: number, std: number): tf.Tensor3D {
  return tf.tidy(() => {
    const raw = tf.tensor3d(img.pixels, [img.height, img.width, 1])
    const resized =
      img.height === size && img.width === size ? raw : tf.image.resizeBilinear(raw, [size, size])
    return resized.sub(mean).div(std) as tf.Tensor3D
  })
}

export async function exportEmbeddings(cfg: ExportConfig): Promise<ExportResult> {
  const layer = cfg.layer ?? 'penultimate'
  const resize = cfg.resize ?? 256
  const batchSize = cfg.batchSize ?? 16
  const mean = cfg.mean ?? 0.5
  const std = cfg.std ?? 0.5

  const backbone: Backbone = cfg.modelDir
    ? await loadBackboneFromDir(cfg.modelDir, layer)
    : buildSeededBackbone(cfg.backbone ?? 'seeded-small', layer, resize, cfg.seed ?? 42)

  const files = listImageFiles(cfg.imagesDir)
  const lines: string[] = []
  let skipped = 0
  let dim: number | null = null

  for (let start = 0; start < files.length; start += batchSize) {
    const ids: string[] = []
    const inputs: tf.Tensor3D[] = []
    for (const rel of files.slice(start, start + batchSize)) {
      try {
        const img = decodePgm(fs.readFileSync(path.join(cfg.imagesDir, rel)))
        inputs.push(imageToInput(img, resize, mean, std))
        ids.push(rel)
      } catch (err) {
        if (err instanceof ImageDecodeError) {
          skipped++
          console.error(`driftmon-export: skipping unreadable image ${rel}: ${err.message}`)
        } else {
          throw err
        }
      }
    }
    if (inputs.length === 0) continue
    const batch = tf.stack(inputs) as tf.Tensor4D
    inputs.forEach(t => t.dispose())
    const out = backbone.run(batch)
    const values = (await out.array()) as number[][]
    batch.dispose()
    out.dispose()
    for (let i = 0; i < ids.length; i++) {
      const vec = values[i]
      if (dim === null) dim = vec.length
      else if (vec.length !== dim) {
        throw new InconsistentDimError(
          `image ${ids[i]} produced a ${vec.length}-d vector; expected ${dim}`,
        )
      }
      lines.push(JSON.stringify({ id: ids[i], vec }))
    }
  }

  fs.writeFileSync(cfg.outPath, lines.length ? lines.join('\n') + '\n' : '')
  if (lines.length === 0) {
    console.error(`driftmon-export: no readable images in ${cfg.imagesDir}; wrote an empty file`)
  }
  return { written: lines.length, skipped, dim }
}

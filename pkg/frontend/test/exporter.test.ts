import { execFileSync } from 'child_process'
import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import { encodePgm } from '../src/pgm'
import { exportEmbeddings, listImageFiles } from '../src/exporter'
import { SeededRng } from '../src/rng'

let workDir: string

function writeImages(dir: string, count: number, seed = 7, size = 20): string[] {
  fs.mkdirSync(dir, { recursive: true })
  const rng = new SeededRng(seed)
  const names: string[] = []
  for (let i = 0; i < count; i++) {
    const pixels = new Float32Array(size * size)
    for (let k = 0; k < pixels.length; k++) pixels[k] = rng.nextFloat()
    const name = `img${String(i).padStart(2, '0')}.pgm`
    fs.writeFileSync(path.join(dir, name), encodePgm({ width: size, height: size, pixels }))
    names.push(name)
  }
  return names
}

function readNdjson(file: string): { id: string; vec: number[] }[] {
  const text = fs.readFileSync(file, 'utf8')
  if (!text) return []
  return text
    .trimEnd()
    .split('\n')
    .map(line => JSON.parse(line))
}

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), 'driftmon-export-'))
})

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true })
})

describe('exportEmbeddings', () => {
  it('writes one line per image with constant dimension and unique ids', async () => {
    const dir = path.join(workDir, 'ten')
    writeImages(dir, 10)
    const out = path.join(workDir, 'ten.ndjson')
    const result = await exportEmbeddings({
      imagesDir: dir,
      outPath: out,
      backbone: 'seeded-tiny',
      resize: 32,
    })
    expect(result.written).toBe(10)
    expect(result.skipped).toBe(0)
    const rows = readNdjson(out)
    expect(rows).toHaveLength(10)
    const dims = new Set(rows.map(r => r.vec.length))
    expect(dims.size).toBe(1)
    expect(new Set(rows.map(r => r.id)).size).toBe(10)
    for (const row of rows) {
      expect(row.vec.every(v => Number.isFinite(v))).toBe(true)
    }
  })

  it('re-export reproduces vectors within 1e-6', async () => {
    const dir = path.join(workDir, 'repeat')
    writeImages(dir, 6, 11)
    const outA = path.join(workDir, 'a.ndjson')
    const outB = path.join(workDir, 'b.ndjson')
    const cfg = { imagesDir: dir, backbone: 'seeded-tiny', resize: 32, batchSize: 4 }
    await exportEmbeddings({ ...cfg, outPath: outA })
    await exportEmbeddings({ ...cfg, outPath: outB })
    const a = readNdjson(outA)
    const b = readNdjson(outB)
    expect(b.map(r => r.id)).toEqual(a.map(r => r.id))
    for (let i = 0; i < a.length; i++) {
      for (let k = 0; k < a[i].vec.length; k++) {
        expect(Math.abs(a[i].vec[k] - b[i].vec[k])).toBeLessThanOrEqual(1e-6)
      }
    }
  })

  it('identical images produce identical vectors', async () => {
    const dir = path.join(workDir, 'twins')
    fs.mkdirSync(dir, { recursive: true })
    const pixels = new Float32Array(16 * 16).fill(0.25)
    const img = encodePgm({ width: 16, height: 16, pixels })
    fs.writeFileSync(path.join(dir, 'one.pgm'), img)
    fs.writeFileSync(path.join(dir, 'two.pgm'), img)
    const out = path.join(workDir, 'twins.ndjson')
    await exportEmbeddings({ imagesDir: dir, outPath: out, backbone: 'seeded-tiny', resize: 16 })
    const [one, two] = readNdjson(out)
    expect(one.vec).toEqual(two.vec)
  })

  it('empty directory yields an empty file and succeeds', async () => {
    const dir = path.join(workDir, 'empty')
    fs.mkdirSync(dir, { recursive: true })
    const out = path.join(workDir, 'empty.ndjson')
    const result = await exportEmbeddings({ imagesDir: dir, outPath: out, backbone: 'seeded-tiny' })
    expect(result.written).toBe(0)
    expect(fs.readFileSync(out, 'utf8')).toBe('')
  })

  it('skips unreadable images with a count', async () => {
    const dir = path.join(workDir, 'mixed')
    writeImages(dir, 3, 13)
    fs.writeFileSync(path.join(dir, 'broken.pgm'), Buffer.from('P5 nonsense'))
    const out = path.join(workDir, 'mixed.ndjson')
    const result = await exportEmbeddings({
      imagesDir: dir,
      outPath: out,
      backbone: 'seeded-tiny',
      resize: 16,
    })
    expect(result.written).toBe(3)
    expect(result.skipped).toBe(1)
  })

  it('finds images in nested directories with relative-path ids', async () => {
    const dir = path.join(workDir, 'nested')
    writeImages(path.join(dir, 'sub'), 2, 17)
    writeImages(dir, 1, 18)
    const files = listImageFiles(dir)
    expect(files).toEqual(['img00.pgm', 'sub/img00.pgm', 'sub/img01.pgm'])
  })

  it('logits layer yields the configured dimension', async () => {
    const dir = path.join(workDir, 'logits')
    writeImages(dir, 2, 19)
    const out = path.join(workDir, 'logits.ndjson')
    const result = await exportEmbeddings({
      imagesDir: dir,
      outPath: out,
      backbone: 'seeded-tiny',
      layer: 'logits',
      resize: 16,
    })
    expect(result.dim).toBe(4) // seeded-tiny logits
    const penult = await exportEmbeddings({
      imagesDir: dir,
      outPath: out,
      backbone: 'seeded-tiny',
      layer: 'penultimate',
      resize: 16,
    })
    expect(penult.dim).toBe(8) // final conv filter count
  })
})

describe('integration with the monitoring engine', () => {
  it('exported NDJSON fits a baseline via the engine CLI', async () => {
    const dir = path.join(workDir, 'engine')
    writeImages(dir, 10, 23)
    const out = path.join(workDir, 'engine.ndjson')
    const result = await exportEmbeddings({
      imagesDir: dir,
      outPath: out,
      backbone: 'seeded-tiny',
      resize: 32,
    })
    expect(result.written).toBe(10)
    const baseline = path.join(workDir, 'engine-baseline.json')
    const stderr = execFileSync(
      'python3',
      ['-m', 'driftmon.cli', 'fit', '--input', out, '--metric', 'cosine', '--out', baseline],
      { encoding: 'utf8', stdio: ['ignore', 'pipe', 'pipe'] },
    )
    const doc = JSON.parse(fs.readFileSync(baseline, 'utf8'))
    expect(doc.dim).toBe(result.dim)
    expect(doc.n_samples).toBe(10)
  }, 30_000)
})

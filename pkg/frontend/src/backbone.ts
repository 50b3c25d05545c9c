/** Vision backbones for embedding export.
 *
 * Two sources of a backbone:
 *   - a built-in convolutional net with deterministic, seeded weights (no
 *     downloads, works fully offline; a fixed random projection is enough for
 *     the monitoring engine, which only needs stable, separable features)
 *   - a local tfjs LayersModel directory (`model.json` + weight shards) for
 *     real pretrained weights.
 *
 * Either way the exporter reads one of two layers: `logits` (the final dense
 * output) or `penultimate` (the pooled features feeding it).
 */
import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'
import { SeededRng } from './rng'

export type LayerChoice = 'logits' | 'penultimate'

export interface BackboneSpec {
  convFilters: number[]
  logitsDim: number
}

export const BUILTIN_BACKBONES: Record<string, BackboneSpec> = {
  /** three stride-2 conv blocks, 32-d pooled features, 16-d logits */
  'seeded-small': { convFilters: [8, 16, 32], logitsDim: 16 },
  /** two stride-2 conv blocks, 8-d pooled features, 4-d logits; fast in tests */
  'seeded-tiny': { convFilters: [4, 8], logitsDim: 4 },
}

export interface Backbone {
  /** maps a [n, size, size, 1] batch to [n, d] activations */
  run(batch: tf.Tensor4D): tf.Tensor2D
  dim: number | undefined
}

export function buildSeededBackbone(
  name: string,
  layer: LayerChoice,
  inputSize: number,
  seed = 42,
): Backbone {
  const spec = BUILTIN_BACKBONES[name]
  if (!spec) {
    throw new Error(`unknown backbone ${name}; built-ins: ${Object.keys(BUILTIN_BACKBONES).join(', ')}`)
  }
  const input = tf.input({ shape: [inputSize, inputSize, 1] })
  let x = input
  for (const filters of spec.convFilters) {
    x = tf.layers
      .conv2d({ filters, kernelSize: 3, strides: 2, padding: 'same', activation: 'relu' })
      .apply(x) as tf.SymbolicTensor
  }
  const pooled = tf.layers.globalAveragePooling2d({}).apply(x) as tf.SymbolicTensor
  const logits = tf.layers.dense({ units: spec.logitsDim }).apply(pooled) as tf.SymbolicTensor
  const model = tf.model({ inputs: input, outputs: layer === 'logits' ? logits : pooled })

  // overwrite initializer output with seeded uniform weights (+-1/sqrt(fanIn))
  const rng = new SeededRng(seed)
  const seeded = model.getWeights().map(w => {
    const n = w.shape.reduce((a, b) => a * (b ?? 1), 1)
    const fanIn = w.shape.length > 1 ? n / (w.shape[w.shape.length - 1] ?? 1) : n
    return tf.tensor(rng.uniformArray(n, 1 / Math.sqrt(fanIn)), w.shape as number[])
  })
  model.setWeights(seeded)
  return wrapModel(model)
}

/** IO handler for a LayersModel saved on disk (model.json + binary shards). */
function dirLoadHandler(dir: string): tf.io.IOHandler {
  return {
    load: async () => {
      const manifest = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf8'))
      const weightSpecs: tf.io.WeightsManifestEntry[] = []
      const buffers: Buffer[] = []
      for (const group of manifest.weightsManifest ?? []) {
        weightSpecs.push(...group.weights)
        for (const p of group.paths) {
          buffers.push(fs.readFileSync(path.join(dir, p)))
        }
      }
      const weightData = new Uint8Array(Buffer.concat(buffers)).buffer
      return {
        modelTopology: manifest.modelTopology,
        format: manifest.format,
        generatedBy: manifest.generatedBy,
        convertedBy: manifest.convertedBy,
        weightSpecs,
        weightData,
      }
    },
  }
}

export async function loadBackboneFromDir(dir: string, layer: LayerChoice): Promise<Backbone> {
  const model = await tf.loadLayersModel(dirLoadHandler(dir))
  if (layer === 'logits') return wrapModel(model as tf.LayersModel)
  const lastDense = [...model.layers].reverse().find(l => l.getClassName() === 'Dense')
  if (!lastDense) throw new Error('model has no Dense layer; cannot locate the penultimate output')
  const penult = lastDense.input as tf.SymbolicTensor
  return wrapModel(tf.model({ inputs: model.inputs, outputs: penult }))
}

function wrapModel(model: tf.LayersModel): Backbone {
  const outShape = model.outputs[0].shape
  return {
    dim: outShape.length === 2 && outShape[1] != null ? outShape[1] : undefined,
    run(batch: tf.Tensor4D): tf.Tensor2D {
      return tf.tidy(() => {
        const out = model.predict(batch) as tf.Tensor
        return out.reshape([batch.shape[0], -1]) as tf.Tensor2D
      })
    },
  }
}

import { describe, expect, it } from 'vitest'
import { ImageDecodeError, decodePgm, encodePgm } from '../src/pgm'

describe('pgm codec', () => {
  it('round-trips pixels', () => {
    const img = {
      width: 3,
      height: 2,
      pixels: new Float32Array([0, 0.25, 0.5, 0.75, 1, 0.1]),
    }
    const back = decodePgm(encodePgm(img))
    expect(back.width).toBe(3)
    expect(back.height).toBe(2)
    // half-step quantization error plus float32 representation slack
    for (let i = 0; i < img.pixels.length; i++) {
      expect(Math.abs(back.pixels[i] - img.pixels[i])).toBeLessThanOrEqual(0.5 / 255 + 1e-6)
    }
  })

  it('accepts header comments', () => {
    const data = Buffer.concat([
      Buffer.from('P5\n# made by hand\n2 2\n255\n', 'ascii'),
      Buffer.from([0, 128, 255, 64]),
    ])
    const img = decodePgm(data)
    expect(img.width).toBe(2)
    expect(img.pixels[1]).toBeCloseTo(128 / 255, 6)
  })

  it('rejects non-P5 data', () => {
    expect(() => decodePgm(Buffer.from('P6\n1 1\n255\n\0'))).toThrow(ImageDecodeError)
  })

  it('rejects truncated pixel data', () => {
    const data = Buffer.concat([Buffer.from('P5\n4 4\n255\n'), Buffer.from([1, 2, 3])])
    expect(() => decodePgm(data)).toThrow(/shorter/)
  })

  it('rejects non-8-bit maxval', () => {
    const data = Buffer.concat([Buffer.from('P5\n1 1\n65535\n'), Buffer.from([0, 0])])
    expect(() => decodePgm(data)).toThrow(/maxval/)
  })
})

/** Binary PGM (P5) decoding: 8-bit grayscale with '#' comments in the header. */

export interface GrayImage {
  width: number
  height: number
  /** row-major pixels, normalized to [0, 1] */
  pixels: Float32Array
}

export class ImageDecodeError extends Error {}

export function decodePgm(data: Buffer): GrayImage {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x35) {
    throw new ImageDecodeError('not a P5 PGM')
  }
  const tokens: string[] = []
  let i = 2
  while (tokens.length < 3 && i < data.length) {
    const c = data[i]
    if (c === 0x23 /* '#' */) {
      while (i < data.length && data[i] !== 0x0a) i++
    } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
      i++
    } else {
      let j = i
      while (j < data.length && !isSpace(data[j])) j++
      tokens.push(data.subarray(i, j).toString('ascii'))
      i = j
    }
  }
  if (tokens.length < 3) throw new ImageDecodeError('truncated PGM header')
  i++ // single whitespace byte after maxval
  const [width, height, maxval] = tokens.map(t => Number.parseInt(t, 10))
  if (!Number.isFinite(width) || !Number.isFinite(height) || width < 1 || height < 1) {
    throw new ImageDecodeError('bad PGM dimensions')
  }
  if (maxval !== 255) {
    throw new ImageDecodeError(`only 8-bit PGM supported (maxval 255, got ${maxval})`)
  }
  const n = width * height
  if (data.length - i < n) throw new ImageDecodeError('PGM pixel data shorter than width*height')
  const pixels = new Float32Array(n)
  for (let k = 0; k < n; k++) {
    pixels[k] = data[i + k] / 255
  }
  return { width, height, pixels }
}

export function encodePgm(img: GrayImage): Buffer {
  const header = Buffer.from(`P5\n${img.width} ${img.height}\n255\n`, 'ascii')
  const body = Buffer.alloc(img.width * img.height)
  for (let k = 0; k < body.length; k++) {
    body[k] = Math.max(0, Math.min(255, Math.round(img.pixels[k] * 255)))
  }
  return Buffer.concat([header, body])
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d
}

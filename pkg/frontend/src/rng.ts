/** splitmix64 over BigInt, used to give backbone weights a fixed, documented seed. */

const MASK = (1n << 64n) - 1n
const GAMMA = 0x9e3779b97f4a7c15n

export class SeededRng {
  private state: bigint

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK
  }

  /** next 64-bit value */
  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK
    let z = this.state
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK
    return z ^ (z >> 31n)
  }

  /** uniform float in [0, 1) from the top 53 bits */
  nextFloat(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53
  }

  /** uniform in [-limit, limit], rounded to float32 for stable model weights */
  uniformArray(n: number, limit: number): Float32Array {
    const out = new Float32Array(n)
    for (let i = 0; i < n; i++) {
      out[i] = (this.nextFloat() * 2 - 1) * limit
    }
    return out
  }
}

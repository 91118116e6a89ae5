/**
 * Deterministic random streams for fixture checkpoint weights.
 *
 * splitmix64 for the bit stream (tiny, well studied, trivially portable),
 * 53-bit uniforms, Box-Muller gaussians. This does not need to match any
 * generator on the Python side; it only has to make fixture generation
 * reproducible byte for byte.
 */

const MASK64 = (1n << 64n) - 1n;

export function splitmix64(seed: bigint): () => bigint {
  let state = seed & MASK64;
  return () => {
    state = (state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  };
}

export function uniforms(seed: bigint, n: number): Float64Array {
  const next = splitmix64(seed);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = Number(next() >> 11n) * 2 ** -53; // [0, 1)
  }
  return out;
}

export function gaussians(seed: bigint, n: number): Float64Array {
  const next = splitmix64(seed);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i += 2) {
    const u1 = Number(next() >> 11n) * 2 ** -53;
    const u2 = Number(next() >> 11n) * 2 ** -53;
    const r = Math.sqrt(-2.0 * Math.log(1.0 - u1)); // 1-u1 in (0,1], no log(0)
    const theta = 2.0 * Math.PI * u2;
    out[i] = r * Math.cos(theta);
    if (i + 1 < n) out[i + 1] = r * Math.sin(theta);
  }
  return out;
}

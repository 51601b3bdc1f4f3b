/**
 * Bit-reproducible elementary math for the synthetic training formula.
 *
 * The engine computes its transcendentals from IEEE-754 double adds,
 * multiplies, divides and exact power-of-two scalings in a pinned order,
 * precisely so that a reimplementation in another language can reproduce
 * the results bit for bit.  This module is that reimplementation: each
 * routine follows the engine's operation sequence exactly.
 */

const LN2_HI = 6.93147180369123816490e-1; // high 32 bits of ln 2
const LN2_LO = 1.90821492927058770002e-10; // ln 2 - LN2_HI
const INV_LN2 = 1.4426950408889634;
const SQRT_HALF = 0.7071067811865476;

const LOG_TERMS = 12; // atanh series t^(2j+1)/(2j+1), j < 12; t^2 <= 0.0295
const EXP_TERMS = 22; // Taylor depth; |r| <= ln(2)/2

const view = new DataView(new ArrayBuffer(8));

/** The exact double 2**k for k in [-1074, 1023], built from its bit pattern. */
function pow2(k: number): number {
  if (k >= -1022) {
    view.setBigUint64(0, BigInt(k + 1023) << 52n);
  } else {
    view.setBigUint64(0, 1n << BigInt(k + 1074));
  }
  return view.getFloat64(0);
}

/** x * 2**k, exact whenever the result stays normal. */
export function ldexp(x: number, k: number): number {
  return x * pow2(k);
}

/** Split finite x > 0 into [mantissa in [0.5, 1), exponent], exactly. */
export function frexp(x: number): [number, number] {
  let scaled = x;
  let shift = 0;
  view.setFloat64(0, scaled);
  let biased = Number((view.getBigUint64(0) >> 52n) & 0x7ffn);
  if (biased === 0) {
    // subnormal: renormalize with an exact scale first
    scaled = x * pow2(64);
    shift = 64;
    view.setFloat64(0, scaled);
    biased = Number((view.getBigUint64(0) >> 52n) & 0x7ffn);
  }
  const e = biased - 1022;
  return [scaled * pow2(-e), e - shift];
}

/** Natural log for finite x > 0, identical on every IEEE-754 runtime. */
export function portableLog(x: number): number {
  if (!(x > 0) || !Number.isFinite(x)) {
    throw new RangeError(`portableLog domain error: ${x}`);
  }
  let [m, e] = frexp(x); // x = m * 2**e, m in [0.5, 1); exact
  if (m < SQRT_HALF) {
    m *= 2.0;
    e -= 1;
  }
  // ln(m) = 2 * atanh(t) with t = (m-1)/(m+1), |t| <= 3 - 2*sqrt(2)
  const t = (m - 1.0) / (m + 1.0);
  const t2 = t * t;
  let s = 1.0 / (2 * LOG_TERMS - 1);
  for (let j = LOG_TERMS - 2; j >= 0; j--) {
    s = s * t2 + 1.0 / (2 * j + 1);
  }
  const lnM = 2.0 * t * s;
  return e * LN2_HI + (e * LN2_LO + lnM);
}

/** exp for |x| <= 700, identical on every IEEE-754 runtime. */
export function portableExp(x: number): number {
  if (Number.isNaN(x) || Math.abs(x) > 700.0) {
    throw new RangeError(`portableExp domain error: ${x}`);
  }
  if (x === 0.0) {
    return 1.0;
  }
  const k = Math.floor(x * INV_LN2 + 0.5);
  const r = x - k * LN2_HI - k * LN2_LO;
  let p = 1.0;
  for (let j = EXP_TERMS; j >= 1; j--) {
    p = 1.0 + (r * p) / j;
  }
  return ldexp(p, k);
}

/**
 * Round with halves going up: 2.5 -> 3.
 *
 * floor(x + 0.5) is unambiguous across runtimes for the non-negative
 * values this worker rounds; native rounding functions disagree on halves.
 */
export function roundHalfUp(x: number): number {
  if (x < 0.0) {
    throw new RangeError("roundHalfUp is pinned for non-negative values only");
  }
  return Math.floor(x + 0.5);
}

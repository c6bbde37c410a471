// splitmix64, BigInt port of the native generator. Every seeded feature
// must draw identical values on both sides, so keep the steps frozen.

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4b7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;
const TWO53 = 9007199254740992; // 2**53

export class SplitMix64 {
  state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
    return (z ^ (z >> 31n)) & MASK64;
  }

  below(n: number): number {
    if (n <= 0) throw new Error("below() needs n >= 1");
    return Number(this.nextU64() % BigInt(n));
  }

  unit(): number {
    // top 53 bits; exact in IEEE doubles
    return Number(this.nextU64() >> 11n) / TWO53;
  }

  signedUnit(): number {
    return this.unit() * 2.0 - 1.0;
  }
}

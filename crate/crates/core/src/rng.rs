//! Counter-based randomness.
//!
//! Every random quantity in the crate is a pure function of a 64-bit key and
//! a short tuple of integer counters (coordinates, level, stream tag). There
//! is no generator state, so evaluation order and thread count never change a
//! value.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 finalizer.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed hash of a word sequence. Distinct sequence lengths never collide
/// structurally because the length is absorbed last.
#[inline]
pub fn hash_words(key: u64, words: &[u64]) -> u64 {
    let mut h = mix64(key ^ SEED_SALT);
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ w);
    }
    mix64(h ^ (words.len() as u64).wrapping_mul(GOLDEN))
}

/// Specialised two-coordinate hash used on the hot path of the planar DP.
/// Agrees with `hash_words(key, &[stream, x, y])`.
#[inline(always)]
pub fn hash3(key: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut h = mix64(key ^ SEED_SALT);
    h = mix64(h.wrapping_add(GOLDEN) ^ a);
    h = mix64(h.wrapping_add(GOLDEN) ^ b);
    h = mix64(h.wrapping_add(GOLDEN) ^ c);
    mix64(h ^ 3u64.wrapping_mul(GOLDEN))
}

/// Uniform variate in `[0, 1)` with 53 random bits.
#[inline(always)]
pub fn unit_half_open(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform variate in the open interval `(0, 1)` on a grid of 2^52 midpoints.
#[inline(always)]
pub fn unit_open(h: u64) -> f64 {
    ((h >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal quantile, Wichura's AS241 (PPND16).
///
/// Relative accuracy is about 1e-16 over `(0, 1)`. Only `+ - * / sqrt ln`
/// are used, so results are reproducible wherever those are correctly
/// rounded.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
                + 6.726_577_092_700_87e4)
                * r
                + 4.592_195_393_154_987e4)
                * r
                + 1.373_169_376_550_946e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5.226_495_278_852_854e3 * r + 2.872_908_573_572_194_3e4) * r
                + 3.930_789_580_009_271e4)
                * r
                + 2.121_379_430_158_659_7e4)
                * r
                + 5.394_196_021_424_751e3)
                * r
                + 6.871_870_074_920_579e2)
                * r
                + 4.231_333_070_160_091e1)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_8e-1)
                * r
                + 6.897_673_349_851e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358e-1)
                * r
                + 5.998_322_065_558_88e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Standard normal variate keyed by a hash value.
#[inline]
pub fn gaussian(h: u64) -> f64 {
    normal_quantile(unit_open(h))
}

/// Seed for a replicate, derived from the master seed, grid size and index.
pub fn replicate_seed(master: u64, n: u64, index: u64) -> u64 {
    hash_words(master, &[0x5EED, n, index])
}

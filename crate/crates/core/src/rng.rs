//! Reproducible randomness.
//!
//! Every random draw in the library comes from [`Rng`], a ChaCha8 stream
//! seeded from a `u64`. ChaCha is counter based and its output is defined
//! bit-for-bit independently of the platform, so a seed pins a run exactly.
//! Standard normals are produced with the Box–Muller transform from pairs of
//! uniforms taken off the same stream.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)`.
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    // 53 random mantissa bits.
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals via Box–Muller.
pub fn normal_pair<R: RngCore + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = 1.0 - uniform(rng); // (0, 1]
    let u2 = uniform(rng);
    let radius = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (radius * theta.cos(), radius * theta.sin())
}

pub fn fill_normal<R: RngCore + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = normal_pair(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = normal_pair(rng).0;
    }
}

pub fn normal_vec<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    fill_normal(rng, &mut out);
    out
}

/// Element-wise cubes of standard normals: a heavy-tailed test distribution.
pub fn gaussian_cubed<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut out = normal_vec(rng, len);
    for v in &mut out {
        *v = *v * *v * *v;
    }
    out
}

/// Uniform subset of `{0, .., n-1}` of size `k`, returned in ascending order.
pub fn sample_without_replacement<R: RngCore + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot sample {k} of {n}");
    // Partial Fisher–Yates.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + index_below(rng, n - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Uniform integer in `[0, bound)`.
pub fn index_below<R: RngCore + ?Sized>(rng: &mut R, bound: usize) -> usize {
    let mut adapter = RngAdapter(rng);
    adapter.random_range(0..bound)
}

/// Fair coin returning `+1.0` or `-1.0`.
pub fn rademacher<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    if rng.next_u32() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Tags passed to [`derive_seed`] to keep the seeds of different roles apart.
pub mod stream {
    pub const DATA: u64 = 1;
    pub const FRAME: u64 = 2;
    pub const CODER: u64 = 3;
}

/// Derive an independent stream seed from a base seed and cell coordinates.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix64(base), |acc, &c| mix64(acc ^ mix64(c)))
}

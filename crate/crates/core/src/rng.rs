//! Seeded pseudo-random stream: splitmix64 expansion into xoshiro256++.
//!
//! The stream is fully portable: any implementation of these two public
//! algorithms produces the same 64-bit outputs for the same seed, and every
//! derived quantity (uniforms, normals, shuffles) consumes a fixed number of
//! raw outputs.

use std::f64::consts::PI;

/// One step of the splitmix64 generator. Advances `state` and returns the
/// mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps a raw 64-bit output to `[0, 1)` using its top 53 bits.
#[inline]
pub fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box–Muller transform. `u1` must lie in `(0, 1]`; returns the cosine and
/// sine partners.
#[inline]
pub fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Deterministic random stream owned by a single task.
#[derive(Debug)]
pub struct SeedStream {
    state: [u64; 4],
    seed: u64,
    cached_normal: Option<f64>,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        SeedStream {
            state,
            seed,
            cached_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Next raw xoshiro256++ output.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform01(&mut self) -> f64 {
        u64_to_unit(self.next_u64())
    }

    /// Standard normal draw. Uniforms are consumed in pairs; the sine partner
    /// of each pair is returned by the following call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform01();
        let u2 = self.uniform01();
        let (z0, z1) = box_muller(u1, u2);
        self.cached_normal = Some(z1);
        z0
    }

    /// Uniform index in `0..n`, drawn as `floor(u * n)`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform01() * n as f64) as usize).min(n - 1)
    }

    /// In-place Fisher–Yates shuffle from the last index down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang, using this stream's normals and
    /// uniforms. Shapes below one use the `U^(1/shape)` boost.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let boost = (1.0 - self.uniform01()).powf(1.0 / shape);
            return self.gamma(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = 1.0 - self.uniform01();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mapping_endpoints() {
        assert_eq!(u64_to_unit(0), 0.0);
        let top = u64_to_unit(u64::MAX);
        assert_eq!(top, ((1u64 << 53) - 1) as f64 / (1u64 << 53) as f64);
        assert!(top < 1.0);
    }

    #[test]
    fn box_muller_fixed_points() {
        assert!(box_muller(0.5, 0.25).0.abs() < 1e-15);
        let (z, _) = box_muller((-2.0f64).exp(), 0.0);
        assert!((z - 2.0).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeedStream::new(42);
        let mut b = SeedStream::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn single_element_shuffle() {
        let mut s = SeedStream::new(3);
        let mut v = vec![9];
        s.shuffle(&mut v);
        assert_eq!(v, vec![9]);
    }

    #[test]
    fn gamma_mean_matches_shape() {
        let mut s = SeedStream::new(11);
        for &shape in &[0.5, 1.0, 3.0, 150.0] {
            let n = 200_000;
            let mean = (0..n).map(|_| s.gamma(shape)).sum::<f64>() / n as f64;
            assert!((mean - shape).abs() < 0.02 * shape.max(1.0), "shape {shape}: {mean}");
        }
    }
}

//! Seeded, splittable random streams.
//!
//! A [`RngStream`] is a `(seed, stream-id)` key, not a stateful generator.
//! Every sampler turns its key into a fresh ChaCha8 generator, so results
//! are pure functions of the key. Child keys for parallel trials come from
//! [`RngStream::split`], which mixes the parent stream-id with an index.
//!
//! Normal variates use the Box–Muller transform with this fixed convention:
//! two consecutive 64-bit outputs `a`, `b` give `u1 = 1 - (a >> 11)·2⁻⁵³`
//! in `(0, 1]` and `u2 = (b >> 11)·2⁻⁵³`; the pair of normals is
//! `r·cos(2πu2), r·sin(2πu2)` with `r = √(-2 ln u1)`, emitted cosine first.
//! The transcendental functions come from `libm` so the bits do not depend
//! on the platform math library.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// Key of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Child stream for sub-task `index`; distinct indices give distinct stream-ids.
    pub fn split(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    /// Two-level split, e.g. `(side, trial)`.
    pub fn split2(&self, a: u64, b: u64) -> Self {
        self.split(a).split(b)
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn gaussians(&self) -> GaussianStream {
        GaussianStream::new(*self)
    }
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Standard normal variates drawn from one stream.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(key: RngStream) -> Self {
        Self {
            rng: key.generator(),
            spare: None,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    fn pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * libm::log(u1)).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * libm::cos(theta), r * libm::sin(theta))
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.pair();
        self.spare = Some(b);
        a
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        let mut i = 0;
        if let Some(z) = self.spare.take() {
            if out.is_empty() {
                self.spare = Some(z);
                return;
            }
            out[0] = z;
            i = 1;
        }
        while i + 1 < out.len() {
            let (a, b) = self.pair();
            out[i] = a;
            out[i + 1] = b;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.sample();
        }
    }

    pub fn vec(&mut self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        self.fill(&mut v);
        v
    }
}

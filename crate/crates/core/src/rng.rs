//! Keyed random streams.
//!
//! Every variate is a function of `(master seed, replica, purpose)` and,
//! for per-site draws, the site index: each site owns two 64-bit words at
//! a fixed keystream offset, so the result does not depend on the order in
//! which sites are visited or on the thread that visits them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }
}

/// What a stream is used for; each replica gets one stream per purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Stationarizer = 0,
    Label = 1,
    Site = 2,
    Aggregate = 3,
    Positions = 4,
    FarField = 5,
    Field = 6,
}

const PURPOSES: u64 = 8;

/// Sequential stream for `(seed, replica, purpose)`.
pub fn stream(seed: SeedSpec, replica: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.master_seed);
    rng.set_stream(replica.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}

/// Uniform on the open interval (0, 1) from 52 random bits. The midpoint
/// offset needs the 53rd bit of the mantissa, so 53 bits would round the top
/// value up to 1.
pub fn open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Key of lattice site `k` in d=1.
pub fn site_key_1d(k: i64) -> u128 {
    (k as i128 + (1i128 << 62)) as u128
}

/// Key of lattice site `(i, j)` in d=2; coordinates are taken modulo 2^33.
pub fn site_key_2d(i: i64, j: i64) -> u128 {
    let wrap = |v: i64| ((v as i128 + (1i128 << 32)).rem_euclid(1i128 << 33)) as u128;
    (wrap(i) << 33) | wrap(j)
}

/// Random access to per-site uniform pairs.
pub struct SiteDraws {
    rng: ChaCha8Rng,
    next: Option<u128>,
}

impl SiteDraws {
    pub fn new(seed: SeedSpec, replica: u64) -> Self {
        SiteDraws { rng: stream(seed, replica, Purpose::Site), next: None }
    }

    /// The two uniforms owned by `key`.
    pub fn draw(&mut self, key: u128) -> [f64; 2] {
        if self.next != Some(key) {
            self.rng.set_word_pos(key * 4);
        }
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        self.next = Some(key + 1);
        [open_unit(a), open_unit(b)]
    }
}

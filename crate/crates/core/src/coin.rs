//! Fair coins and exact sampling from them.
//!
//! A [`CoinSource`] emits one pseudorandom bit per [`Coin::flip`], from a
//! seeded generator chosen by name. [`uniform_below`] turns fair bits into an
//! exactly uniform integer below `T` (the "fast dice roller": keep a uniform
//! value `c` below a range `v`, double both with each flip, and on `v >= T`
//! either accept `c < T` or recycle the excess range). [`sample_weighted`]
//! picks index `k` with probability exactly `m_k / T` by walking the binary
//! expansions of the `m_k / T`.

use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoinError {
    #[error("cannot sample below zero")]
    EmptyRange,
    #[error("all weights are zero")]
    ZeroWeights,
    #[error("total weight overflows")]
    Overflow,
    #[error("unknown bit generator `{0}`")]
    UnknownGenerator(String),
}

/// A source of fair bits.
pub trait Coin {
    fn flip(&mut self) -> bool;
}

type GeneratorCtor = fn(u64) -> Box<dyn RngCore + Send>;

/// Bit generators by name; the first entry is the default.
pub const GENERATORS: &[(&str, GeneratorCtor)] = &[
    ("chacha8", |seed| Box::new(ChaCha8Rng::seed_from_u64(seed))),
    ("chacha20", |seed| {
        Box::new(ChaCha20Rng::seed_from_u64(seed))
    }),
];

pub const DEFAULT_GENERATOR: &str = "chacha8";

/// Seeded pseudorandom coin with a flip counter.
pub struct CoinSource {
    rng: Box<dyn RngCore + Send>,
    generator: &'static str,
    seed: u64,
    word: u64,
    left: u32,
    consumed: u64,
}

impl CoinSource {
    pub fn new(seed: u64) -> CoinSource {
        CoinSource::with_generator(DEFAULT_GENERATOR, seed).expect("default generator exists")
    }

    pub fn with_generator(name: &str, seed: u64) -> Result<CoinSource, CoinError> {
        let (generator, ctor) = GENERATORS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| CoinError::UnknownGenerator(name.to_string()))?;
        Ok(CoinSource {
            rng: ctor(seed),
            generator,
            seed,
            word: 0,
            left: 0,
            consumed: 0,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator(&self) -> &'static str {
        self.generator
    }

    /// Bits flipped so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }
}

impl std::fmt::Debug for CoinSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoinSource")
            .field("generator", &self.generator)
            .field("seed", &self.seed)
            .field("consumed", &self.consumed)
            .finish()
    }
}

impl Coin for CoinSource {
    /// Bits of each 64-bit word are used least significant first.
    fn flip(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        self.consumed += 1;
        bit
    }
}

/// Returns `i` in `[0, t)` with probability exactly `1/t`. Uses no flips for
/// `t == 1` and on average fewer than `log2(t) + 2` otherwise.
pub fn uniform_below<C: Coin + ?Sized>(coin: &mut C, t: u64) -> Result<u64, CoinError> {
    if t == 0 {
        return Err(CoinError::EmptyRange);
    }
    if t == 1 {
        return Ok(0);
    }
    let n = t as u128;
    let mut v: u128 = 1;
    let mut c: u128 = 0;
    loop {
        v <<= 1;
        c = (c << 1) | coin.flip() as u128;
        if v >= n {
            if c < n {
                return Ok(c as u64);
            }
            v -= n;
            c -= n;
        }
    }
}

/// Returns index `k` with probability exactly `weights[k] / sum(weights)`.
///
/// Walks the discrete distribution generating tree of Knuth and Yao: column
/// `j` of the tree holds the `j`-th binary digit of every `m_k / T`, and each
/// flip descends one column. After `d` flips the mass already assigned to `k`
/// is `floor(2^d m_k / T) / 2^d`, so no outcome is short by `2^-d` or more.
/// A weight equal to the total is returned without flipping.
pub fn sample_weighted<C: Coin + ?Sized>(
    coin: &mut C,
    weights: &[u64],
) -> Result<usize, CoinError> {
    let total = weights
        .iter()
        .try_fold(0u64, |acc, w| acc.checked_add(*w))
        .ok_or(CoinError::Overflow)?;
    if total == 0 {
        return Err(CoinError::ZeroWeights);
    }
    if let Some(k) = weights.iter().position(|w| *w == total) {
        return Ok(k);
    }
    let t = total as u128;
    let mut rem: Vec<u128> = weights.iter().map(|w| *w as u128).collect();
    // d counts the unassigned nodes to the left of the current one
    let mut d: u128 = 0;
    loop {
        d = 2 * d + coin.flip() as u128;
        for (k, r) in rem.iter_mut().enumerate() {
            *r *= 2;
            if *r >= t {
                *r -= t;
                if d == 0 {
                    return Ok(k);
                }
                d -= 1;
            }
        }
    }
}

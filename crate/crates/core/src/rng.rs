//! Seekable generators for the entries of the sketching matrix `S`.
//!
//! Two generator modes are available:
//!
//! * [`GeneratorMode::Counter`]: every entry `S[i, j]` is a pure function of
//!   `(seed, i, j)`. The word for row `i` of column `j` comes from a
//!   Philox-4x64-10 permutation keyed by `(seed, j)` with counter `i / 4`
//!   (one permutation yields four consecutive words). Sketches are
//!   independent of blocking, kernel variant and thread count.
//! * [`GeneratorMode::Checkpoint`]: a xoshiro256++ stream reseeded at every
//!   `(r, j)` checkpoint, where `r` is the first sketch row of the current
//!   row block. Cheaper per word, but `S` then depends on the row blocking.
//!
//! The Gaussian distribution consumes two words per sample; all others
//! consume one.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    /// Entry-addressable counter-based generation.
    #[default]
    Counter,
    /// Sequential xoshiro256++ reseeded per `(row block, column)`.
    Checkpoint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform over {-1, +1}.
    Rademacher,
    /// Uniform over the open interval (-1, 1).
    #[default]
    Uniform,
    /// The integers behind [`Distribution::Uniform`], i.e. uniform values
    /// divided by [`scaled_sketch_factor`]. The sketch engine compensates by
    /// scaling `A` by the same factor.
    UniformScaled,
    /// Standard normal via Box–Muller.
    Gaussian,
}

impl Distribution {
    /// Words consumed per sample.
    pub fn words_per_sample(self) -> u64 {
        match self {
            Distribution::Gaussian => 2,
            _ => 1,
        }
    }
}

/// `f = 2⁻³¹`. A sketch with uniform entries equals `(S/f)·(A·f)`, where
/// `S/f` holds the raw integers; multiplying `A` by a power of two is exact.
pub fn scaled_sketch_factor() -> f64 {
    SCALE
}

const SCALE: f64 = 1.0 / 2_147_483_648.0;

const PHILOX_M0: u64 = 0xD2E7_470E_E14C_6C93;
const PHILOX_M1: u64 = 0xCA5A_8263_9512_1157;
const PHILOX_W0: u64 = 0x9E37_79B9_7F4A_7C15;
const PHILOX_W1: u64 = 0xBB67_AE85_84CA_A73B;

/// Tag in the last counter lane separating checkpoint reseeding from the
/// counter-mode word stream.
const CHECKPOINT_TAG: u64 = 0x6368_6b70_7473_6565;

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// Philox-4x64 with 10 rounds (Salmon et al. constants).
pub fn philox4x64(ctr: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Counter-mode word for stream position `i` of column `j`.
pub fn raw_word(seed: u64, i: u64, j: u64) -> u64 {
    philox4x64([i >> 2, 0, 0, 0], [seed, j])[(i & 3) as usize]
}

/// xoshiro256++ (Blackman & Vigna).
#[derive(Clone, Debug)]
pub struct Xoshiro256pp {
    s: [u64; 4],
}

impl Xoshiro256pp {
    /// All-zero states are replaced by a fixed nonzero state.
    pub fn from_state(mut s: [u64; 4]) -> Self {
        if s == [0; 4] {
            s = [PHILOX_W0, PHILOX_W1, PHILOX_M0, PHILOX_M1];
        }
        Xoshiro256pp { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
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
}

const CHECKPOINT_WARMUP: usize = 4;

/// Signed 32-bit integer from the high half of a word, with `i32::MIN`
/// folded to 0 so that the scaled value stays strictly inside (-1, 1).
#[inline]
pub fn word_to_int(w: u64) -> i32 {
    let x = (w >> 32) as u32 as i32;
    if x == i32::MIN {
        0
    } else {
        x
    }
}

#[inline]
pub fn word_to_uniform(w: u64) -> f64 {
    word_to_int(w) as f64 * SCALE
}

#[inline]
pub fn word_to_rademacher(w: u64) -> f64 {
    if w >> 63 == 1 {
        -1.0
    } else {
        1.0
    }
}

#[inline]
pub fn words_to_gaussian(w1: u64, w2: u64) -> f64 {
    let u1 = 0.5 * (1.0 + word_to_uniform(w1));
    let u2 = 0.5 * (1.0 + word_to_uniform(w2));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Clone, Debug)]
enum Stream {
    Unset,
    Counter {
        key: [u64; 2],
        pos: u64,
        cached_block: u64,
        cache: [u64; 4],
    },
    Checkpoint(Xoshiro256pp),
}

/// Regenerates contiguous runs `S[r.., j]` of the sketching matrix.
///
/// Not shareable across threads; every worker owns one.
#[derive(Clone, Debug)]
pub struct SketchSampler {
    seed: u64,
    mode: GeneratorMode,
    dist: Distribution,
    stream: Stream,
    generated: u64,
    timing: Option<Duration>,
}

impl SketchSampler {
    pub fn new(seed: u64, mode: GeneratorMode, dist: Distribution) -> Self {
        SketchSampler {
            seed,
            mode,
            dist,
            stream: Stream::Unset,
            generated: 0,
            timing: None,
        }
    }

    /// Accumulate wall time spent inside [`SketchSampler::fill`]. The clock
    /// reads add overhead of their own.
    pub fn with_timing(mut self, enabled: bool) -> Self {
        self.timing = enabled.then_some(Duration::ZERO);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> GeneratorMode {
        self.mode
    }

    pub fn distribution(&self) -> Distribution {
        self.dist
    }

    /// Total samples produced so far.
    pub fn generated(&self) -> u64 {
        self.generated
    }

    pub fn sample_time(&self) -> Option<Duration> {
        self.timing
    }

    /// Position the sampler at `S[r, j]`.
    pub fn set_state(&mut self, r: u64, j: u64) {
        self.stream = match self.mode {
            GeneratorMode::Counter => Stream::Counter {
                key: [self.seed, j],
                pos: r * self.dist.words_per_sample(),
                cached_block: u64::MAX,
                cache: [0; 4],
            },
            GeneratorMode::Checkpoint => {
                let state = philox4x64([r, 0, 0, CHECKPOINT_TAG], [self.seed, j]);
                let mut x = Xoshiro256pp::from_state(state);
                for _ in 0..CHECKPOINT_WARMUP {
                    x.next_u64();
                }
                Stream::Checkpoint(x)
            }
        };
    }

    #[inline]
    fn next_word(&mut self) -> u64 {
        match &mut self.stream {
            Stream::Counter {
                key,
                pos,
                cached_block,
                cache,
            } => {
                let block = *pos >> 2;
                if block != *cached_block {
                    *cache = philox4x64([block, 0, 0, 0], *key);
                    *cached_block = block;
                }
                let w = cache[(*pos & 3) as usize];
                *pos += 1;
                w
            }
            Stream::Checkpoint(x) => x.next_u64(),
            Stream::Unset => panic!("SketchSampler used before set_state"),
        }
    }

    /// Overwrite `out` with the next `out.len()` samples.
    pub fn fill(&mut self, out: &mut [f64]) {
        let start = self.timing.map(|_| Instant::now());
        match self.dist {
            Distribution::Rademacher => out.iter_mut().for_each(|v| *v = word_to_rademacher(self.next_word())),
            Distribution::Uniform => out.iter_mut().for_each(|v| *v = word_to_uniform(self.next_word())),
            Distribution::UniformScaled => out.iter_mut().for_each(|v| *v = word_to_int(self.next_word()) as f64),
            Distribution::Gaussian => out.iter_mut().for_each(|v| {
                let w1 = self.next_word();
                let w2 = self.next_word();
                *v = words_to_gaussian(w1, w2);
            }),
        }
        self.generated += out.len() as u64;
        if let (Some(t), Some(start)) = (self.timing.as_mut(), start) {
            *t += start.elapsed();
        }
    }

    pub fn get_samples(&mut self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        self.fill(&mut v);
        v
    }
}

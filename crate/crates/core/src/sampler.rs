//! Random token streams drawn through the decoder mask, plus an unmasked
//! control arm.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{decode_pm, CodecError, TokenStream, Vocabulary};
use crate::decoder::{DecodeError, DecoderState, Phase};
use crate::progressive::{ProgressiveMesh, SplitError};

/// Smallest budget that fits `BOS`, one base face and `SEP`.
pub const MIN_TOKENS: usize = 11;

const MAX_ATTEMPTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleConfig {
    pub n_bins: u32,
    /// Budget for everything before the closing `EOS`.
    pub max_tokens: usize,
    /// Chance of stopping at each point where `SEP` or `EOS` is legal.
    pub stop_probability: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n_bins: 128,
            max_tokens: 512,
            stop_probability: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("max_tokens {0} is below the minimum of {MIN_TOKENS}")]
    TooShort(usize),
    #[error(transparent)]
    Vocabulary(#[from] CodecError),
    #[error("masked token was rejected: {0}")]
    Rejected(#[from] DecodeError),
    #[error("no complete stream after {0} attempts")]
    Exhausted(usize),
}

/// Draws a stream uniformly among the tokens the decoder allows at each step.
///
/// `SEP` and `EOS` are taken with probability `stop_probability` wherever they
/// are legal, and always once the budget leaves no room for another group.
/// A base mesh that cannot be closed within the budget is discarded and drawn
/// again from the advanced generator.
pub fn sample_masked(cfg: &SampleConfig, rng: &mut impl Rng) -> Result<TokenStream, SampleError> {
    let vocab = Vocabulary::new(cfg.n_bins)?;
    sample_continuation(cfg, &[vocab.bos()], rng)
}

/// Like [`sample_masked`], but the stream starts with the given tokens, which
/// must begin with `BOS` and be accepted by the decoder. Useful for drawing
/// splits on top of a real base mesh.
pub fn sample_continuation(
    cfg: &SampleConfig,
    prefix: &[u16],
    rng: &mut impl Rng,
) -> Result<TokenStream, SampleError> {
    if cfg.max_tokens < MIN_TOKENS.max(prefix.len()) {
        return Err(SampleError::TooShort(cfg.max_tokens));
    }
    let vocab = Vocabulary::new(cfg.n_bins)?;
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut dec = DecoderState::with_vocabulary(vocab);
        let mut tokens = Vec::with_capacity(cfg.max_tokens + 1);
        fn emit(dec: &mut DecoderState, tokens: &mut Vec<u16>, t: u16) -> Result<(), DecodeError> {
            dec.step(t)?;
            tokens.push(t);
            Ok(())
        }
        for &t in prefix {
            emit(&mut dec, &mut tokens, t)?;
        }
        let mut used = prefix.len();
        loop {
            let remaining = cfg.max_tokens - used;
            match dec.phase() {
                Phase::M0Face(0) => {
                    let sep_ok = dec.check(vocab.sep()).is_ok();
                    if sep_ok && (remaining < 10 || rng.random_bool(cfg.stop_probability)) {
                        emit(&mut dec, &mut tokens, vocab.sep())?;
                        used += 1;
                        continue;
                    }
                    if remaining < 10 {
                        continue 'attempt;
                    }
                }
                Phase::VSplit(0) if remaining < 12 || rng.random_bool(cfg.stop_probability) => {
                    emit(&mut dec, &mut tokens, vocab.eos())?;
                    return Ok(TokenStream {
                        n_bins: cfg.n_bins,
                        tokens,
                    });
                }
                _ => {}
            }
            let mut mask = dec.allowed_tokens();
            mask.forbid(vocab.sep());
            mask.forbid(vocab.eos());
            let count = mask.count();
            if count == 0 {
                if dec.phase() == Phase::VSplit(0) {
                    emit(&mut dec, &mut tokens, vocab.eos())?;
                    return Ok(TokenStream {
                        n_bins: cfg.n_bins,
                        tokens,
                    });
                }
                continue 'attempt;
            }
            let t = mask
                .nth(rng.random_range(0..count))
                .expect("index below count");
            emit(&mut dec, &mut tokens, t)?;
            used += 1;
        }
    }
    Err(SampleError::Exhausted(MAX_ATTEMPTS))
}

/// Control arm: tokens drawn uniformly from the whole vocabulary after `BOS`,
/// ending at the first `EOS` or after `max_tokens + 1` tokens.
pub fn sample_unmasked(cfg: &SampleConfig, rng: &mut impl Rng) -> Result<TokenStream, SampleError> {
    let vocab = Vocabulary::new(cfg.n_bins)?;
    let mut tokens = Vec::with_capacity(cfg.max_tokens + 1);
    tokens.push(vocab.bos());
    while tokens.len() <= cfg.max_tokens {
        let t = rng.random_range(0..vocab.size() as u16);
        tokens.push(t);
        if t == vocab.eos() {
            break;
        }
    }
    Ok(TokenStream {
        n_bins: cfg.n_bins,
        tokens,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StreamFault {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("replay failed: {0}")]
    Replay(#[from] SplitError),
    #[error("level {0} is not manifold")]
    NonManifold(usize),
}

/// Decodes `stream` and checks that every level from `M_0` up is manifold.
pub fn verify_stream(stream: &TokenStream) -> Result<ProgressiveMesh, StreamFault> {
    let pm = decode_pm(stream)?;
    let mut bad = None;
    pm.replay(|k, m| {
        if bad.is_none() && !m.validate().is_valid() {
            bad = Some(k);
        }
    })?;
    match bad {
        Some(k) => Err(StreamFault::NonManifold(k)),
        None => Ok(pm),
    }
}

/// Generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FuzzReport {
    pub masked: usize,
    /// Masked samples that failed to decode or had a non-manifold level,
    /// with the first few messages.
    pub masked_errors: usize,
    pub error_messages: Vec<String>,
    pub masked_tokens: usize,
    pub unmasked: usize,
    pub unmasked_valid: usize,
}

impl FuzzReport {
    pub fn unmasked_valid_rate(&self) -> f64 {
        if self.unmasked == 0 {
            0.0
        } else {
            self.unmasked_valid as f64 / self.unmasked as f64
        }
    }
}

/// Outcome of one fuzz trial, used to fold results computed in any order.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub masked_tokens: usize,
    pub masked_error: Option<String>,
    pub unmasked_valid: bool,
}

pub fn fuzz_trial(cfg: &SampleConfig, seed: u64, index: u64) -> Trial {
    let mut rng = sample_rng(seed, 2 * index);
    let (masked_tokens, masked_error) = match sample_masked(cfg, &mut rng) {
        Ok(s) => (s.len(), verify_stream(&s).err().map(|e| e.to_string())),
        Err(e) => (0, Some(e.to_string())),
    };
    let mut rng = sample_rng(seed, 2 * index + 1);
    let unmasked_valid = sample_unmasked(cfg, &mut rng)
        .map(|s| verify_stream(&s).is_ok())
        .unwrap_or(false);
    Trial {
        masked_tokens,
        masked_error,
        unmasked_valid,
    }
}

impl FromIterator<Trial> for FuzzReport {
    fn from_iter<I: IntoIterator<Item = Trial>>(iter: I) -> Self {
        let mut r = FuzzReport::default();
        for t in iter {
            r.masked += 1;
            r.unmasked += 1;
            r.masked_tokens += t.masked_tokens;
            r.unmasked_valid += t.unmasked_valid as usize;
            if let Some(e) = t.masked_error {
                r.masked_errors += 1;
                if r.error_messages.len() < 8 {
                    r.error_messages.push(e);
                }
            }
        }
        r
    }
}

pub fn fuzz(cfg: &SampleConfig, count: usize, seed: u64) -> FuzzReport {
    (0..count as u64)
        .map(|i| fuzz_trial(cfg, seed, i))
        .collect()
}

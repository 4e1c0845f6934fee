//! Monte Carlo estimates of local densities over `Z_p^4`.
//!
//! Sample `i` uses RNG streams `4i..4i+4`, one per coordinate, so every
//! sample is a pure function of `(seed, i)`. Samples are processed in fixed
//! chunks and the integer tallies are summed, which makes the estimate
//! independent of the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{sample_zp, PadicResidue};

const CHUNK: u64 = 4096;

/// How many digits each sample was drawn with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSchedule {
    pub initial_digits: u32,
    pub max_digits: u32,
    /// Samples that needed at least one doubling.
    pub refined_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p: u64,
    pub samples: u64,
    pub soluble_fraction: f64,
    pub stderr: f64,
    pub undecided_fraction: f64,
    pub seed: u64,
    pub precision_schedule: PrecisionSchedule,
    /// Set when `undecided_fraction >= 1e-4`.
    pub degraded: bool,
}

/// Outcome of deciding one sample at a given precision.
pub(crate) enum Decision {
    Soluble,
    Insoluble,
    /// The residues do not determine the answer yet.
    NeedDigits,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    soluble: u64,
    undecided: u64,
    refined: u64,
}

impl Tally {
    fn add(self, o: Tally) -> Tally {
        Tally {
            soluble: self.soluble + o.soluble,
            undecided: self.undecided + o.undecided,
            refined: self.refined + o.refined,
        }
    }
}

pub(crate) fn draw(p: u64, k: u32, seed: u64, sample: u64) -> Result<[PadicResidue; 4]> {
    let mut out = [PadicResidue { p, k, value: 0 }; 4];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = sample_zp(p, k, seed, 4 * sample + j as u64)?;
    }
    Ok(out)
}

/// Runs `decide` on `samples` Haar-random vectors, doubling the precision of
/// a sample until it is decided or `max_digits` is reached.
///
/// `Error::Undecided` from `decide` is counted, any other error aborts.
pub(crate) fn estimate<F>(
    p: u64,
    samples: u64,
    seed: u64,
    initial_digits: u32,
    max_digits: u32,
    decide: F,
) -> Result<McEstimate>
where
    F: Fn(&[PadicResidue; 4]) -> Result<Decision> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut k = initial_digits;
                loop {
                    let x = draw(p, k, seed, i)?;
                    match decide(&x) {
                        Ok(Decision::Soluble) => t.soluble += 1,
                        Ok(Decision::Insoluble) => {}
                        Ok(Decision::NeedDigits) if k < max_digits => {
                            if k == initial_digits {
                                t.refined += 1;
                            }
                            k = (2 * k).min(max_digits);
                            continue;
                        }
                        Ok(Decision::NeedDigits) | Err(Error::Undecided { .. }) => t.undecided += 1,
                        Err(e) => return Err(e),
                    }
                    break;
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let t = tallies.into_iter().fold(Tally::default(), Tally::add);
    let n = samples as f64;
    let f = t.soluble as f64 / n;
    let undecided_fraction = t.undecided as f64 / n;
    Ok(McEstimate {
        p,
        samples,
        soluble_fraction: f,
        stderr: (f * (1.0 - f) / n).sqrt(),
        undecided_fraction,
        seed,
        precision_schedule: PrecisionSchedule {
            initial_digits,
            max_digits,
            refined_samples: t.refined,
        },
        degraded: undecided_fraction >= 1e-4,
    })
}

/// Largest digit count whose modulus the sampler accepts.
pub(crate) fn max_sample_digits(p: u64) -> u32 {
    let mut k = 0;
    let mut m: u128 = 1;
    while let Some(next) = m.checked_mul(p as u128) {
        if next >= 1 << 126 {
            break;
        }
        m = next;
        k += 1;
    }
    k
}

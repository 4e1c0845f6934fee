//! Diagonal quartic surfaces `a0 x0^4 + a1 x1^4 + a2 x2^4 + a3 x3^4 = 0`.
//!
//! There is no closed-form local criterion here; every `Q_p` question goes
//! to the digit search.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::cubic::small_prime_divisors;
use crate::density::mc_initial_digits;
use crate::error::{Error, Result};
use crate::mc::{self, Decision, McEstimate};
use crate::padic::{ensure_prime, split_unchecked};
use crate::report::rational;
use crate::search::{completeness_depth, search_diagonal, Verdict};

/// Node budgets tried in turn before a form is declared undecided.
pub const BUDGET_ESCALATION: [u64; 3] = [1_000_000, 10_000_000, 100_000_000];

/// Above this bound every prime not dividing the coefficients is skipped:
/// a smooth quartic surface over `F_p` has at least `p^2 + p + 1 - 21 p`
/// points, which is positive for `p >= 23`, and smooth points lift.
pub const SMALL_PRIME_BOUND: u64 = 23;

fn check_nonzero(a: &[i128; 4]) -> Result<()> {
    match a.iter().position(|&c| c == 0) {
        Some(index) => Err(Error::ZeroCoefficient { index }),
        None => Ok(()),
    }
}

/// A nonzero real point exists iff the coefficients do not share one sign.
pub fn quartic_soluble_real(a: [i128; 4]) -> Result<bool> {
    check_nonzero(&a)?;
    Ok(!(a.iter().all(|&c| c > 0) || a.iter().all(|&c| c < 0)))
}

/// Whether the quartic has a `Q_p`-point, escalating the node budget until
/// the search answers.
///
/// ```
/// use diagsurf::quartic::quartic_soluble_at;
/// assert!(!quartic_soluble_at([1, 2, 4, 8], 2).unwrap());
/// assert!(quartic_soluble_at([1, -1, 1, -1], 5).unwrap());
/// ```
pub fn quartic_soluble_at(a: [i128; 4], p: u64) -> Result<bool> {
    let mut nodes = 0;
    for budget in BUDGET_ESCALATION {
        match search_diagonal(4, a, p, budget)? {
            Verdict::Soluble(_) => return Ok(true),
            Verdict::Insoluble => return Ok(false),
            Verdict::Exhausted { nodes: n } => nodes = n,
        }
    }
    Err(Error::Undecided {
        coeffs: a,
        p,
        nodes,
    })
}

/// Monte Carlo estimate of the quartic `sigma_p` over Haar-random `Z_p^4`.
///
/// A sample drawn to `k` digits is decided once every coefficient is a
/// nonzero residue and `k` covers the digits the search reads after
/// normalization; otherwise it is redrawn with twice the digits.
pub fn mc_sigma_p_quartic(p: u64, samples: u64, seed: u64) -> Result<McEstimate> {
    ensure_prime(p)?;
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let initial = mc_initial_digits(p);
    let max = (8 * initial).min(mc::max_sample_digits(p));
    let depth = completeness_depth(4, p);
    mc::estimate(p, samples, seed, initial, max, |x| {
        let mut vals = [0u32; 4];
        for (v, r) in vals.iter_mut().zip(x) {
            match r.valuation() {
                Some(w) => *v = w,
                None => return Ok(Decision::NeedDigits),
            }
        }
        let shift = *vals.iter().min().unwrap_or(&0);
        let k = x[0].k;
        // The search sees a_i / p^(v_i - v_i') modulo p^depth.
        if vals.iter().any(|&v| v - (v - shift) % 4 + depth > k) {
            return Ok(Decision::NeedDigits);
        }
        let a = x.map(|r| r.value as i128);
        Ok(if quartic_soluble_at(a, p)? {
            Decision::Soluble
        } else {
            Decision::Insoluble
        })
    })
}

/// The real factor computed from its definition, with the value quoted for
/// it in the literature alongside.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaInfty {
    /// Normalized volume of the mixed-sign part of `[-1, 1]^4`.
    #[serde(with = "rational")]
    pub computed: BigRational,
    #[serde(with = "rational")]
    pub quoted: BigRational,
    /// Sign patterns contributing, out of 16.
    pub mixed_orthants: u32,
}

/// Archimedean density of the quartic family.
///
/// Each of the 16 sign orthants of `[-1, 1]^4` carries `1/16` of the cube,
/// and the form has a real zero exactly on the mixed-sign orthants.
pub fn sigma_infty_quartic() -> SigmaInfty {
    let mixed_orthants = (0u32..16)
        .filter(|&s| s != 0 && s != 15)
        .count() as u32;
    SigmaInfty {
        computed: BigRational::new(BigInt::from(mixed_orthants), BigInt::from(16)),
        quoted: BigRational::new(BigInt::from(3), BigInt::from(4)),
        mixed_orthants,
    }
}

/// Primes where an integral quartic can fail to have a local point.
pub fn relevant_primes(a: [i128; 4]) -> Vec<u64> {
    let mut primes: BTreeSet<u64> = [2, 3, 5, 7, 11, 13, 17, 19, 23].into();
    for c in a {
        primes.extend(small_prime_divisors(c.unsigned_abs()));
    }
    primes.into_iter().collect()
}

/// Everywhere local solubility; a zero coefficient gives a cone, which
/// counts as soluble.
///
/// ```
/// use diagsurf::quartic::quartic_els;
/// assert!(!quartic_els([1, 1, 1, 1]).unwrap());
/// assert!(quartic_els([1, -1, 1, -1]).unwrap());
/// ```
pub fn quartic_els(a: [i128; 4]) -> Result<bool> {
    if a.iter().all(|&c| c == 0) {
        return Err(Error::InvalidArgument("zero coefficient vector".into()));
    }
    if a.contains(&0) {
        return Ok(true);
    }
    if !quartic_soluble_real(a)? {
        return Ok(false);
    }
    for p in relevant_primes(a) {
        if p > SMALL_PRIME_BOUND && a.iter().all(|&c| split_unchecked(c, p).0 == 0) {
            continue;
        }
        if !quartic_soluble_at(a, p)? {
            return Ok(false);
        }
    }
    Ok(true)
}

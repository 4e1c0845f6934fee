//! Exact local densities of the diagonal cubic family and their product.
//!
//! `sigma_p` is the Haar measure of the coefficient vectors `a in Z_p^4`
//! whose surface has a `Q_p`-point. Splitting by valuation class gives
//! `sigma_p = sum_i A_i V_i`, where `V_i` is the measure of class `i` and
//! `A_i` the soluble proportion inside it. For `p = 3` and `p = 1 mod 3`
//! there is also a closed form, and both are evaluated and compared.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubic::cubic_soluble_at;
use crate::error::{Error, Result};
use crate::mc::{self, Decision, McEstimate};
use crate::padic::{ensure_prime, PrimeTable};
use crate::report::rational;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn check_index(i: usize) -> Result<()> {
    if (1..=5).contains(&i) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("class index {i} not in 1..=5")))
    }
}

/// Soluble proportion `A_i` of valuation class `i`.
pub fn a_coeff(p: u64, i: usize) -> Result<BigRational> {
    check_index(i)?;
    ensure_prime(p)?;
    Ok(match (p % 3, i) {
        (0, 3) => q(7, 9),
        (1, 4) => q(5, 9),
        (1, 5) => q(1, 3),
        _ => BigRational::one(),
    })
}

/// Measure `V_i` of the coefficient vectors in valuation class `i`.
pub fn v_coeff(p: u64, i: usize) -> Result<BigRational> {
    check_index(i)?;
    ensure_prime(p)?;
    Ok(v_unchecked(p, i))
}

fn v_unchecked(p: u64, i: usize) -> BigRational {
    let x = BigRational::new(BigInt::one(), BigInt::from(p));
    v_with_prefactor(&x, &prefactor(&x, 4), i)
}

/// `((1 - x) / (1 - x^3))^e`.
fn prefactor(x: &BigRational, e: i32) -> BigRational {
    let one = BigRational::one();
    let base = (&one - x) / (&one - x * x * x);
    num_traits::pow(base, e as usize)
}

fn v_with_prefactor(x: &BigRational, pre: &BigRational, i: usize) -> BigRational {
    let pw = |e: usize| num_traits::pow(x.clone(), e);
    let (c, exps): (i64, [usize; 3]) = match i {
        1 => (1, [0, 4, 8]),
        2 => (4, [1, 5, 6]),
        3 => (4, [2, 3, 7]),
        4 => (6, [2, 4, 6]),
        _ => (12, [3, 4, 5]),
    };
    let f: BigRational = exps.iter().map(|&e| pw(e)).sum();
    pre * f * BigRational::from_integer(BigInt::from(c))
}

/// Closed form of `sigma_p` for `p = 3` or `p = 1 mod 3`; `None` for other
/// residues, where `sigma_p = 1`.
pub fn closed_form(p: u64) -> Option<BigRational> {
    let x = BigRational::new(BigInt::one(), BigInt::from(p));
    let pre = prefactor(&x, 3);
    let poly = |cs: &[BigRational]| -> BigRational {
        let mut acc = BigRational::zero();
        for c in cs.iter().rev() {
            acc = acc * &x + c;
        }
        acc
    };
    let one = BigRational::one();
    match p % 3 {
        0 => Some(
            pre * poly(&[
                one,
                q(3, 1),
                q(46, 9),
                q(7, 1),
                q(62, 9),
                q(19, 9),
                q(1, 1),
            ]),
        ),
        1 => Some(
            pre * poly(&[one.clone(), q(-1, 1), one.clone()])
                * poly(&[one.clone(), one.clone(), q(1, 3)])
                * poly(&[one, q(3, 1), q(3, 1)]),
        ),
        _ => None,
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDensity {
    pub p: u64,
    #[serde(with = "rational")]
    pub value: BigRational,
    pub float_value: f64,
}

/// Exact `sigma_p`, computed as `sum A_i V_i` and checked against the
/// closed form where one exists.
///
/// ```
/// use diagsurf::density::sigma_p_cubic;
/// let s = sigma_p_cubic(7).unwrap();
/// assert!(s.float_value < 1.0);
/// assert_eq!(sigma_p_cubic(5).unwrap().float_value, 1.0);
/// ```
pub fn sigma_p_cubic(p: u64) -> Result<LocalDensity> {
    ensure_prime(p)?;
    let value = sigma_unchecked(p)?;
    let float_value = to_f64(&value);
    Ok(LocalDensity {
        p,
        value,
        float_value,
    })
}

fn sigma_unchecked(p: u64) -> Result<BigRational> {
    let x = BigRational::new(BigInt::one(), BigInt::from(p));
    let pre = prefactor(&x, 4);
    let mut total = BigRational::zero();
    let mut mass = BigRational::zero();
    for i in 1..=5 {
        let v = v_with_prefactor(&x, &pre, i);
        total += a_coeff(p, i)? * &v;
        mass += v;
    }
    if !mass.is_one() {
        return Err(Error::Inconsistent(format!(
            "class measures at p = {p} sum to {mass}"
        )));
    }
    let expected = closed_form(p).unwrap_or_else(BigRational::one);
    if total != expected {
        return Err(Error::Inconsistent(format!(
            "sigma_{p}: class sum {total} differs from closed form {expected}"
        )));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerProductReport {
    pub limit: u64,
    pub partial_product: f64,
    /// Number of primes contributing a factor (`p = 3` and `p = 1 mod 3`).
    pub factors: usize,
    /// `|product(limit) - product(limit / 10)|`.
    pub tail_indicator: f64,
    /// `sum_{n > limit} 9 / n^2 <= 9 / limit`, a crude bound on the omitted
    /// log-mass.
    pub tail_bound: f64,
    pub sigma_3: LocalDensity,
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `sigma_3 prod_{p = 1 mod 3, p <= limit} sigma_p`.
///
/// The factors are computed in parallel; `ln sigma_p` is accumulated
/// sequentially in ascending order, so the result does not depend on the
/// thread count.
pub fn euler_product_cubic(limit: u64) -> Result<EulerProductReport> {
    if limit < 3 {
        return Err(Error::InvalidArgument(format!("limit {limit} < 3")));
    }
    let bound = u32::try_from(limit)
        .map_err(|_| Error::InvalidArgument(format!("limit {limit} too large")))?;
    let table = PrimeTable::new(bound)?;
    let primes: Vec<u64> = table
        .primes()
        .iter()
        .map(|&p| p as u64)
        .filter(|p| p % 3 != 2)
        .collect();
    let logs: Vec<(u64, f64)> = primes
        .par_iter()
        .map(|&p| {
            let s = sigma_unchecked(p)?;
            // ln(1 + (s - 1)) with s - 1 taken exactly before rounding.
            Ok((p, to_f64(&(s - BigRational::one())).ln_1p()))
        })
        .collect::<Result<_>>()?;
    let mut acc = Compensated::default();
    let mut coarse = Compensated::default();
    for &(p, l) in &logs {
        acc.add(l);
        if p <= limit / 10 {
            coarse = acc;
        }
    }
    let partial_product = acc.value().exp();
    Ok(EulerProductReport {
        limit,
        partial_product,
        factors: logs.len(),
        tail_indicator: (partial_product - coarse.value().exp()).abs(),
        tail_bound: 9.0 / limit as f64,
        sigma_3: sigma_p_cubic(3)?,
    })
}

/// Monte Carlo estimate of `sigma_p` using the closed-form local test.
pub fn mc_sigma_p_cubic(p: u64, samples: u64, seed: u64) -> Result<McEstimate> {
    ensure_prime(p)?;
    let initial = mc_initial_digits(p);
    let max = (8 * initial).min(mc::max_sample_digits(p));
    mc::estimate(p, samples, seed, initial, max, |x| {
        let mut a = [0i128; 4];
        for (slot, r) in a.iter_mut().zip(x) {
            // The class needs the valuation and the unit mod 9.
            match r.valuation() {
                Some(v) if v + 2 <= r.k => *slot = r.value as i128,
                _ => return Ok(Decision::NeedDigits),
            }
        }
        Ok(if cubic_soluble_at(a, p)? {
            Decision::Soluble
        } else {
            Decision::Insoluble
        })
    })
}

/// Starting precision for sampling `Z_p`.
pub(crate) fn mc_initial_digits(p: u64) -> u32 {
    match p {
        2 => 30,
        3 => 20,
        _ => 12,
    }
}

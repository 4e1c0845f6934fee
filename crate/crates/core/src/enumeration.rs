//! Points of `P^3(Q)` ordered by height, and the proportion of everywhere
//! locally soluble surfaces among them.
//!
//! A point is stored as its primitive integer vector whose first nonzero
//! coordinate is positive; the height is the largest absolute coordinate.

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubic::cubic_els;
use crate::density::euler_product_cubic;
use crate::error::{Error, Result};
use crate::quartic::{mc_sigma_p_quartic, quartic_els, sigma_infty_quartic, SigmaInfty, SMALL_PRIME_BOUND};
use crate::padic::PrimeTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProjPoint {
    pub coords: [i64; 4],
    pub height: u64,
}

impl ProjPoint {
    /// Canonical representative of the point through `v`, if `v != 0`.
    pub fn from_vector(v: [i64; 4]) -> Option<Self> {
        let g = v.iter().fold(0i64, |g, &c| g.gcd(&c));
        if g == 0 {
            return None;
        }
        let lead = v.iter().find(|&&c| c != 0).copied().unwrap_or(1);
        let s = if lead < 0 { -g } else { g };
        let coords = v.map(|c| c / s);
        Some(ProjPoint {
            coords,
            height: coords.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0),
        })
    }

    pub fn coeffs(&self) -> [i128; 4] {
        self.coords.map(|c| c as i128)
    }
}

fn is_canonical(v: &[i64; 4]) -> bool {
    match v.iter().find(|&&c| c != 0) {
        Some(&lead) => lead > 0 && v.iter().fold(0i64, |g, &c| g.gcd(&c)) == 1,
        None => false,
    }
}

fn check_height(b: u64) -> Result<i64> {
    if b == 0 {
        return Err(Error::InvalidArgument("height bound must be at least 1".into()));
    }
    i64::try_from(b)
        .ok()
        .filter(|&b| b < 1 << 20)
        .ok_or_else(|| Error::InvalidArgument(format!("height bound {b} too large")))
}

/// Points of height at most `b` whose first coordinate is `x0`.
///
/// The slabs `x0 = 0..=b` partition the points, so they can be consumed
/// independently.
pub fn enum_slab(b: u64, x0: i64) -> Result<impl Iterator<Item = ProjPoint>> {
    let b = check_height(b)?;
    let range = move || -b..=b;
    Ok(range()
        .flat_map(move |x1| range().flat_map(move |x2| range().map(move |x3| [x0, x1, x2, x3])))
        .filter(move |v| x0.abs() <= b && is_canonical(v))
        .map(|v| ProjPoint {
            coords: v,
            height: v.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0),
        }))
}

/// Every point of `P^3(Q)` with height at most `b`, each exactly once, in
/// lexicographic order of the canonical vectors.
///
/// ```
/// use diagsurf::enumeration::enum_projective;
/// assert_eq!(enum_projective(1).unwrap().count(), 40);
/// ```
pub fn enum_projective(b: u64) -> Result<impl Iterator<Item = ProjPoint>> {
    let bi = check_height(b)?;
    let slabs = (0..=bi).map(|x0| enum_slab(b, x0)).collect::<Result<Vec<_>>>()?;
    Ok(slabs.into_iter().flatten())
}

/// `#{P in P^3(Q) : H(P) <= b}` by Mobius inversion over the common divisor.
pub fn count_projective(b: u64) -> Result<u64> {
    let bi = check_height(b)? as u64;
    let mu = mobius(bi);
    let mut total: i128 = 0;
    for d in 1..=bi {
        if mu[d as usize] != 0 {
            let side = 2 * (bi / d) as i128 + 1;
            total += mu[d as usize] as i128 * (side.pow(4) - 1);
        }
    }
    Ok((total / 2) as u64)
}

fn mobius(n: u64) -> Vec<i8> {
    let table = PrimeTable::new(n.max(2) as u32).expect("small sieve");
    (0..=n)
        .map(|k| {
            if k == 0 {
                return 0;
            }
            let f = table.factor(k);
            if f.iter().any(|&(_, e)| e > 1) {
                0
            } else if f.len().is_multiple_of(2) {
                1
            } else {
                -1
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cubic,
    Quartic,
}

impl Family {
    pub fn els(self, a: [i128; 4]) -> Result<bool> {
        match self {
            Family::Cubic => Ok(cubic_els(a)?.soluble),
            Family::Quartic => quartic_els(a),
        }
    }
}

/// Prime bound of the truncated Euler product quoted next to the cubic count.
pub const CUBIC_PREDICTION_LIMIT: u64 = 100_000;
/// Samples per prime for the quartic prediction.
pub const QUARTIC_PREDICTION_SAMPLES: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub family: Family,
    pub height: u64,
    pub total: u64,
    pub soluble: u64,
    /// Points with a zero coordinate; they are cones and counted soluble.
    pub cones: u64,
    pub fraction: f64,
    /// Truncated product of local densities, with the computed archimedean
    /// factor for quartics.
    pub prediction: f64,
    /// Same product with the quoted archimedean factor, quartics only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prediction_with_quoted_infty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_infty: Option<SigmaInfty>,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    total: u64,
    soluble: u64,
    cones: u64,
}

/// Number of distinct orderings of a sorted 4-tuple.
pub(crate) fn orderings(v: &[i64; 4]) -> u64 {
    let mut denom = 1u64;
    let mut run = 1u64;
    for i in 1..4 {
        if v[i] == v[i - 1] {
            run += 1;
            denom *= run;
        } else {
            run = 1;
        }
    }
    24 / denom
}

/// Counts by sorted coefficient tuples. The local tests are invariant under
/// permuting the coefficients and under `a -> -a`, so each sorted primitive
/// tuple stands for all its orderings, and every point is met twice.
fn count_by_multisets(family: Family, b: i64) -> Result<Counts> {
    let parts = (-b..=b)
        .into_par_iter()
        .map(|x0| {
            let mut c = Counts::default();
            for x1 in x0..=b {
                for x2 in x1..=b {
                    for x3 in x2..=b {
                        let v = [x0, x1, x2, x3];
                        let g = v.iter().fold(0i64, |g, &c| g.gcd(&c));
                        if g != 1 {
                            continue;
                        }
                        let w = orderings(&v);
                        c.total += w;
                        if v.contains(&0) {
                            c.cones += w;
                            c.soluble += w;
                        } else if family.els(v.map(|t| t as i128))? {
                            c.soluble += w;
                        }
                    }
                }
            }
            Ok(c)
        })
        .collect::<Result<Vec<Counts>>>()?;
    let c = parts.into_iter().fold(Counts::default(), |a, c| Counts {
        total: a.total + c.total,
        soluble: a.soluble + c.soluble,
        cones: a.cones + c.cones,
    });
    Ok(Counts {
        total: c.total / 2,
        soluble: c.soluble / 2,
        cones: c.cones / 2,
    })
}

/// Proportion of points of height at most `b` whose surface is everywhere
/// locally soluble, with the prediction from local densities.
pub fn empirical_sigma(family: Family, b: u64) -> Result<EmpiricalReport> {
    let bi = check_height(b)?;
    let c = count_by_multisets(family, bi)?;
    let expected = count_projective(b)?;
    if c.total != expected {
        return Err(Error::Inconsistent(format!(
            "enumerated {} points of height <= {b}, expected {expected}",
            c.total
        )));
    }
    let fraction = c.soluble as f64 / c.total as f64;
    let (prediction, prediction_with_quoted_infty, sigma_infty) = match family {
        Family::Cubic => (
            euler_product_cubic(CUBIC_PREDICTION_LIMIT)?.partial_product,
            None,
            None,
        ),
        Family::Quartic => {
            let s = sigma_infty_quartic();
            let finite = quartic_finite_product()?;
            let f = |r: &num_rational::BigRational| {
                num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN) * finite
            };
            (f(&s.computed), Some(f(&s.quoted)), Some(s))
        }
    };
    Ok(EmpiricalReport {
        family,
        height: b,
        total: c.total,
        soluble: c.soluble,
        cones: c.cones,
        fraction,
        prediction,
        prediction_with_quoted_infty,
        sigma_infty,
    })
}

/// Monte Carlo product of the quartic `sigma_p` over `p <= 23`.
fn quartic_finite_product() -> Result<f64> {
    let table = PrimeTable::new(SMALL_PRIME_BOUND as u32)?;
    let mut product = 1.0;
    for &p in table.primes() {
        product *= mc_sigma_p_quartic(p as u64, QUARTIC_PREDICTION_SAMPLES, 0)?.soluble_fraction;
    }
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// All nonzero vectors of the box, normalized by gcd and sign, deduped.
    fn brute_force(b: i64) -> HashSet<[i64; 4]> {
        let mut set = HashSet::new();
        for x0 in -b..=b {
            for x1 in -b..=b {
                for x2 in -b..=b {
                    for x3 in -b..=b {
                        let v = [x0, x1, x2, x3];
                        if v == [0; 4] {
                            continue;
                        }
                        let g = v.iter().fold(0i64, |g, &c| g.gcd(&c));
                        let w = v.map(|c| c / g);
                        let neg = w.map(|c| -c);
                        set.insert(w.max(neg));
                    }
                }
            }
        }
        set
    }

    #[test]
    fn stream_matches_brute_force() {
        for b in 1..=5u64 {
            let stream: Vec<ProjPoint> = enum_projective(b).unwrap().collect();
            let keys: HashSet<[i64; 4]> = stream
                .iter()
                .map(|p| {
                    let neg = p.coords.map(|c| -c);
                    p.coords.max(neg)
                })
                .collect();
            assert_eq!(keys.len(), stream.len(), "duplicates at b = {b}");
            assert_eq!(keys, brute_force(b as i64), "b = {b}");
            assert_eq!(stream.len() as u64, count_projective(b).unwrap());
            assert!(stream.iter().all(|p| p.height >= 1 && p.height <= b));
            assert!(stream.windows(2).all(|w| w[0].coords < w[1].coords));
        }
        assert_eq!(count_projective(1).unwrap(), 40);
    }

    #[test]
    fn nesting() {
        let small: HashSet<ProjPoint> = enum_projective(3).unwrap().collect();
        let large: HashSet<ProjPoint> = enum_projective(4).unwrap().collect();
        assert!(small.is_subset(&large));
    }

    #[test]
    fn canonical_representative() {
        let p = ProjPoint::from_vector([0, -2, 4, 6]).unwrap();
        assert_eq!(p.coords, [0, 1, -2, -3]);
        assert_eq!(p.height, 3);
        assert!(ProjPoint::from_vector([0; 4]).is_none());
    }

    #[test]
    fn count_stabilizes() {
        let r = |b: u64| count_projective(b).unwrap() as f64 / (b as f64).powi(4);
        assert!((r(100) / r(200) - 1.0).abs() < 0.05);
    }

    #[test]
    fn orderings_weights() {
        assert_eq!(orderings(&[1, 2, 3, 4]), 24);
        assert_eq!(orderings(&[1, 1, 3, 4]), 12);
        assert_eq!(orderings(&[1, 1, 3, 3]), 6);
        assert_eq!(orderings(&[1, 1, 1, 4]), 4);
        assert_eq!(orderings(&[2, 2, 2, 2]), 1);
    }

    fn streamed(family: Family, b: u64) -> (u64, u64) {
        let mut total = 0;
        let mut soluble = 0;
        for p in enum_projective(b).unwrap() {
            total += 1;
            let a = p.coeffs();
            if a.contains(&0) || family.els(a).unwrap() {
                soluble += 1;
            }
        }
        (total, soluble)
    }

    #[test]
    fn multiset_counts_match_stream() {
        for (family, b) in [(Family::Cubic, 7), (Family::Quartic, 4)] {
            let c = count_by_multisets(family, b as i64).unwrap();
            assert_eq!((c.total, c.soluble), streamed(family, b), "{family:?}");
        }
    }

    /// At height 1 the only coefficients are 0 and +-1, so the primes
    /// dividing them are irrelevant and the search at every small prime
    /// decides everything.
    #[test]
    fn cubic_height_one_by_search() {
        use crate::search::{search_diagonal, DEFAULT_NODE_BUDGET};
        let primes = PrimeTable::new(50).unwrap();
        let mut soluble = 0;
        for p in enum_projective(1).unwrap() {
            let a = p.coeffs();
            let ok = a.contains(&0)
                || primes.primes().iter().all(|&q| {
                    search_diagonal(3, a, q as u64, DEFAULT_NODE_BUDGET)
                        .unwrap()
                        .is_soluble()
                        .unwrap()
                });
            soluble += ok as u64;
        }
        let r = empirical_sigma(Family::Cubic, 1).unwrap();
        assert_eq!(r.total, 40);
        assert_eq!(r.soluble, soluble);
    }
}

//! Points whose value under a form `f` has no "transverse" prime.
//!
//! A prime `p > M` is transverse for `x` when `p` divides `f(x)` exactly
//! once and does not divide `g(x)`. The proportion of points of height at
//! most `B` with no transverse prime should decay like `1 / log B`.

use std::fmt;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumeration::{count_projective, enum_projective, orderings, ProjPoint};
use crate::error::{Error, Result};
use crate::padic::{pow_mod, PrimeTable};

/// A homogeneous polynomial in `X0..X3` with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Form {
    /// `(coefficient, exponents)`, sorted by exponents, no zero coefficients.
    terms: Vec<(i128, [u32; 4])>,
}

impl Form {
    pub fn new(terms: impl IntoIterator<Item = (i128, [u32; 4])>) -> Result<Self> {
        let mut merged: std::collections::BTreeMap<[u32; 4], i128> = Default::default();
        for (c, e) in terms {
            *merged.entry(e).or_default() += c;
        }
        let terms: Vec<_> = merged.into_iter().filter(|t| t.1 != 0).map(|(e, c)| (c, e)).collect();
        if terms.is_empty() {
            return Err(Error::Parse("form is identically zero".into()));
        }
        let d = terms[0].1.iter().sum::<u32>();
        if terms.iter().any(|t| t.1.iter().sum::<u32>() != d) {
            return Err(Error::Parse("form is not homogeneous".into()));
        }
        Ok(Form { terms })
    }

    /// `X0 X1 X2 X3`.
    pub fn coordinate_product() -> Self {
        Form {
            terms: vec![(1, [1, 1, 1, 1])],
        }
    }

    /// `X0 + X1 + X2 + X3`.
    pub fn coordinate_sum() -> Self {
        Form::new((0..4).map(|i| {
            let mut e = [0; 4];
            e[i] = 1;
            (1, e)
        }))
        .expect("nonzero")
    }

    pub fn degree(&self) -> u32 {
        self.terms[0].1.iter().sum()
    }

    /// Bound on `|F(x)|` over `max |x_i| <= b`.
    pub fn max_abs(&self, b: u64) -> Option<u128> {
        let l1 = self
            .terms
            .iter()
            .try_fold(0u128, |acc, t| acc.checked_add(t.0.unsigned_abs()))?;
        (b as u128).checked_pow(self.degree())?.checked_mul(l1)
    }

    /// Value at `x`, or an error if it overflows `i128`.
    pub fn eval(&self, x: &[i64; 4]) -> Result<i128> {
        let overflow = || Error::InvalidArgument(format!("form value overflows at {x:?}"));
        let mut total: i128 = 0;
        for &(c, e) in &self.terms {
            let mut t = c;
            for i in 0..4 {
                let pw = (x[i] as i128).checked_pow(e[i]).ok_or_else(overflow)?;
                t = t.checked_mul(pw).ok_or_else(overflow)?;
            }
            total = total.checked_add(t).ok_or_else(overflow)?;
        }
        Ok(total)
    }

    /// Parses sums of signed monomials such as `2*X0^3 - X1^2*X2`.
    ///
    /// ```
    /// use diagsurf::transversality::Form;
    /// let f = Form::parse("2*X0^3 - X1^2*X2").unwrap();
    /// assert_eq!(f.eval(&[1, 2, 3, 0]).unwrap(), 2 - 12);
    /// assert_eq!(f.to_string(), "2*X0^3 - X1^2*X2");
    /// ```
    pub fn parse(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty form".into()));
        }
        let mut terms = Vec::new();
        let mut rest = s.as_str();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1, &rest[1..]),
                b'-' => (-1, &rest[1..]),
                _ if terms.is_empty() => (1, rest),
                _ => return Err(Error::Parse(format!("expected + or - before {rest:?}"))),
            };
            let end = body.find(['+', '-']).unwrap_or(body.len());
            terms.push(parse_monomial(&body[..end], sign)?);
            rest = &body[end..];
        }
        Form::new(terms)
    }
}

fn parse_monomial(m: &str, sign: i128) -> Result<(i128, [u32; 4])> {
    if m.is_empty() {
        return Err(Error::Parse("empty term".into()));
    }
    let mut coeff = sign;
    let mut exps = [0u32; 4];
    for factor in m.split('*') {
        let bad = || Error::Parse(format!("cannot read factor {factor:?}"));
        if let Some(var) = factor.strip_prefix(['X', 'x']) {
            let (idx, pow) = match var.split_once('^') {
                Some((i, e)) => (i, e.parse::<u32>().map_err(|_| bad())?),
                None => (var, 1),
            };
            let idx: usize = idx.parse().map_err(|_| bad())?;
            if idx > 3 {
                return Err(Error::Parse(format!("variable X{idx} out of range")));
            }
            exps[idx] += pow;
        } else {
            let c: i128 = factor.parse().map_err(|_| bad())?;
            coeff = coeff.checked_mul(c).ok_or_else(bad)?;
        }
    }
    Ok((coeff, exps))
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, &(c, e)) in self.terms.iter().rev().enumerate() {
            let sign = if c < 0 { "-" } else { "+" };
            match n {
                0 if c < 0 => write!(f, "-")?,
                0 => {}
                _ => write!(f, " {sign} ")?,
            }
            let mut parts = Vec::new();
            if c.abs() != 1 || e == [0; 4] {
                parts.push(c.abs().to_string());
            }
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => parts.push(format!("X{i}")),
                    _ => parts.push(format!("X{i}^{k}")),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SieveConfig {
    /// Only primes `p > min_prime` count.
    pub min_prime: u64,
    pub f: Form,
    pub g: Form,
    /// Ascending height bounds.
    pub heights: Vec<u64>,
}

impl SieveConfig {
    /// `f = X0 X1 X2 X3`, `g = X0 + X1 + X2 + X3`.
    pub fn cubic_family(min_prime: u64, heights: Vec<u64>) -> Self {
        SieveConfig {
            min_prime,
            f: Form::coordinate_product(),
            g: Form::coordinate_sum(),
            heights,
        }
    }

    fn is_cubic_family(&self) -> bool {
        self.f == Form::coordinate_product() && self.g == Form::coordinate_sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transversality {
    pub transverse: bool,
    /// `f(x) = 0`.
    pub degenerate: bool,
}

/// Whether some prime `p > m` has `v_p(f(x)) = 1` and `v_p(g(x)) = 0`.
///
/// ```
/// use diagsurf::enumeration::ProjPoint;
/// use diagsurf::padic::PrimeTable;
/// use diagsurf::transversality::{has_transverse_prime, Form};
/// let table = PrimeTable::new(1000).unwrap();
/// let (f, g) = (Form::coordinate_product(), Form::parse("X0").unwrap());
/// let x = ProjPoint::from_vector([1, 1, 1, 3]).unwrap();
/// assert!(has_transverse_prime(&x, 2, &f, &g, &table).unwrap().transverse);
/// let y = ProjPoint::from_vector([1, 1, 3, 3]).unwrap();
/// assert!(!has_transverse_prime(&y, 2, &f, &g, &table).unwrap().transverse);
/// ```
pub fn has_transverse_prime(
    x: &ProjPoint,
    m: u64,
    f: &Form,
    g: &Form,
    table: &PrimeTable,
) -> Result<Transversality> {
    let fx = f.eval(&x.coords)?;
    if fx == 0 {
        return Ok(Transversality {
            transverse: false,
            degenerate: true,
        });
    }
    let gx = g.eval(&x.coords)?;
    let limit = table.limit() as u128;
    let fx = u64::try_from(fx.unsigned_abs())
        .ok()
        .filter(|&n| (n as u128) <= limit * limit)
        .ok_or_else(|| Error::InvalidArgument(format!("|f(x)| too large to factor at {x:?}")))?;
    let transverse = table
        .factor(fx)
        .into_iter()
        .any(|(p, e)| p > m && e == 1 && gx % p as i128 != 0);
    Ok(Transversality {
        transverse,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    #[serde(rename = "B")]
    pub height: u64,
    pub total: u64,
    pub failures: u64,
    pub fraction: f64,
    #[serde(rename = "fraction_times_logB")]
    pub fraction_times_log_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub min_prime: u64,
    pub f: String,
    pub g: String,
    pub rows: Vec<DecayRow>,
    /// Least-squares `c` in `fraction ~ c / log B`.
    pub fitted_constant: f64,
    /// `"product-sum"` for the specialized counter, `"generic"` otherwise.
    pub method: String,
}

/// Failure counts for every height bound of `config`.
pub fn failure_counts(config: &SieveConfig) -> Result<DecayTable> {
    if config.heights.is_empty() {
        return Err(Error::InvalidArgument("no height bounds given".into()));
    }
    if config.heights.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("height bounds must be ascending".into()));
    }
    let fast = config.is_cubic_family();
    let mut rows = Vec::new();
    for &b in &config.heights {
        let total = count_projective(b)?;
        let failures = if fast {
            product_sum_failures(b, config.min_prime)?
        } else {
            generic_failures(b, config)?
        };
        let fraction = failures as f64 / total as f64;
        rows.push(DecayRow {
            height: b,
            total,
            failures,
            fraction,
            fraction_times_log_b: fraction * (b as f64).ln(),
        });
    }
    Ok(DecayTable {
        min_prime: config.min_prime,
        f: config.f.to_string(),
        g: config.g.to_string(),
        fitted_constant: fit_inverse_log(&rows),
        rows,
        method: if fast { "product-sum" } else { "generic" }.into(),
    })
}

/// Minimizes `sum (fraction_i - c / log B_i)^2`.
fn fit_inverse_log(rows: &[DecayRow]) -> f64 {
    let (num, den) = rows.iter().fold((0.0, 0.0), |(n, d), r| {
        let inv = 1.0 / (r.height as f64).ln();
        (n + r.fraction * inv, d + inv * inv)
    });
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

fn generic_failures(b: u64, config: &SieveConfig) -> Result<u64> {
    let max = config
        .f
        .max_abs(b)
        .filter(|&m| m <= 1 << 52)
        .ok_or_else(|| Error::InvalidArgument(format!("f is too large to factor at height {b}")))?;
    let bound = (max as f64).sqrt().ceil() as u32 + 1;
    let table = PrimeTable::new(bound.max(2))?;
    let points: Vec<ProjPoint> = enum_projective(b)?.collect();
    points
        .par_iter()
        .map(|x| {
            has_transverse_prime(x, config.min_prime, &config.f, &config.g, &table)
                .map(|t| !t.transverse as u64)
        })
        .sum()
}

/// Primes `p > m` dividing `n` exactly once, for `n = 0..=b`.
fn exposed_primes(b: u64, m: u64) -> Result<Vec<Vec<i64>>> {
    let table = PrimeTable::new(b.max(2) as u32)?;
    Ok((0..=b)
        .map(|n| {
            if n == 0 {
                return Vec::new();
            }
            table
                .factor(n)
                .into_iter()
                .filter(|&(p, e)| p > m && e == 1)
                .map(|(p, _)| p as i64)
                .collect()
        })
        .collect())
}

/// Definition of failure for `f = X0 X1 X2 X3`, `g = X0 + X1 + X2 + X3`: a
/// transverse prime divides exactly one coordinate, exactly once, and not
/// the sum.
fn product_sum_fails(x: &[i64; 4], exposed: &[Vec<i64>]) -> bool {
    if x.contains(&0) {
        return true;
    }
    let s: i64 = x.iter().sum();
    for i in 0..4 {
        for &p in &exposed[x[i].unsigned_abs() as usize] {
            if s % p != 0 && (0..4).all(|j| j == i || x[j] % p != 0) {
                return false;
            }
        }
    }
    true
}

/// Orderings of a sorted triple.
fn orderings3(t: &[i64; 3]) -> u64 {
    match (t[0] == t[1], t[1] == t[2]) {
        (true, true) => 1,
        (false, false) => 6,
        _ => 3,
    }
}

/// Failure count for the product/sum pair.
///
/// Both forms are symmetric and the condition is invariant under `x -> -x`,
/// so points are counted through sorted primitive tuples
/// `x0 <= x1 <= x2 <= x3`, weighted by their number of orderings. Of each
/// pair `{v, -v}` only the tuple with `x3 <= -x0` (ties broken by
/// `x2 <= -x1`) is visited.
///
/// For fixed `(x0, x1, x2)`, a prime `q > m` dividing exactly one of them
/// exactly once stays transverse unless `q | x3` or `q | x0 + x1 + x2 + x3`,
/// which leaves a few residue classes of `x3` to check. Without such a
/// prime, `x` fails iff every exposed prime of `x3` divides
/// `x0 x1 x2 (x0 + x1 + x2)`.
fn product_sum_failures(b: u64, m: u64) -> Result<u64> {
    let ctx = Sieve::new(b, m)?;
    let ordered: u64 = (-(b as i64)..=0).into_par_iter().map(|x0| ctx.slab(x0)).sum();
    Ok(ordered / 2)
}

struct Sieve {
    m: u64,
    table: PrimeTable,
    /// Primes `> m` dividing `n` exactly once.
    exposed: Vec<Vec<i64>>,
    /// All primes `> m` dividing `n`.
    big: Vec<Vec<i64>>,
    /// Sorted `x` in `[-b, b]` without exposed primes, `0` included.
    bare: Vec<i64>,
}

/// Per-triple data for the innermost loop.
struct Triple<'a> {
    t: [i64; 3],
    g3: i64,
    s3: i64,
    cands: &'a [i64],
}

impl Sieve {
    fn new(b: u64, m: u64) -> Result<Self> {
        let table = PrimeTable::new((3 * b).max(2) as u32)?;
        let bi = b as i64;
        let exposed = exposed_primes(b, m)?;
        let mut s = Sieve {
            m,
            table,
            bare: (-bi..=bi)
                .filter(|&x| exposed[x.unsigned_abs() as usize].is_empty())
                .collect(),
            exposed,
            big: Vec::new(),
        };
        s.big = (0..=bi).map(|n| s.large(n)).collect();
        Ok(s)
    }

    fn large(&self, n: i64) -> Vec<i64> {
        self.table
            .factor(n.unsigned_abs())
            .into_iter()
            .filter(|&(p, _)| p > self.m)
            .map(|(p, _)| p as i64)
            .collect()
    }

    fn exposed(&self, n: i64) -> &[i64] {
        &self.exposed[n.unsigned_abs() as usize]
    }

    /// Weighted failures over tuples starting with `x0 <= 0`.
    fn slab(&self, x0: i64) -> u64 {
        let top = -x0;
        let mut fails = 0u64;
        let mut base: Vec<i64> = Vec::with_capacity(16);
        let mut cands: Vec<i64> = Vec::with_capacity(16);
        let mut scratch = Scratch::default();
        for x1 in x0..=top {
            let g01 = x0.gcd(&x1);
            base.clear();
            base.extend(self.exposed(x0).iter().filter(|&&p| x1 % p != 0));
            base.extend(self.exposed(x1).iter().filter(|&&p| x0 % p != 0));
            for x2 in x1..=top {
                cands.clear();
                cands.extend(base.iter().filter(|&&p| x2 % p != 0));
                cands.extend(self.exposed(x2).iter().filter(|&&p| x0 % p != 0 && x1 % p != 0));
                cands.sort_unstable_by(|a, b| b.cmp(a));
                let tr = Triple {
                    t: [x0, x1, x2],
                    g3: g01.gcd(&x2),
                    s3: x0 + x1 + x2,
                    cands: &cands,
                };
                let w3 = orderings3(&tr.t);
                fails += 8 * w3 * self.bulk(&tr, x2 + 1, top - 1, &mut scratch);
                let fails_at = |x3: i64| {
                    x3.gcd(&tr.g3) == 1 && product_sum_fails(&[x0, x1, x2, x3], &self.exposed)
                };
                if fails_at(x2) {
                    let v = [x0, x1, x2, x2];
                    fails += orderings(&v) * pair_factor(&v);
                }
                if top > x2 && fails_at(top) {
                    fails += 4 * w3 * pair_factor(&[x0, x1, x2, top]);
                }
            }
        }
        fails
    }

    /// Failing `x3` in `[lo, hi]`, all strictly above `x2`.
    fn bulk(&self, tr: &Triple, lo: i64, hi: i64, scratch: &mut Scratch) -> u64 {
        if lo > hi {
            return 0;
        }
        let [x0, x1, x2] = tr.t;
        if tr.t.contains(&0) {
            // f vanishes; every primitive completion fails.
            return coprime_in(tr.g3, lo, hi);
        }
        if !tr.cands.is_empty() {
            residues_mod_candidates(tr.cands, tr.s3, hi - lo + 1, &mut scratch.classes);
            let check = |x3: i64| {
                tr.cands.iter().all(|&c| x3 % c == 0 || (tr.s3 + x3) % c == 0)
                    && x3.gcd(&tr.g3) == 1
                    && product_sum_fails(&[x0, x1, x2, x3], &self.exposed)
            };
            return scratch
                .classes
                .iter()
                .map(|&(r, l)| residue_class(r, l, lo, hi).filter(|&x3| check(x3)).count() as u64)
                .sum();
        }
        if tr.s3 == 0 {
            return coprime_in(tr.g3, lo, hi);
        }
        // Only exposed primes of x3 can be transverse, and one is unless it
        // divides x0 x1 x2 s3.
        let qs = &mut scratch.qs;
        qs.clear();
        for &v in &tr.t {
            qs.extend_from_slice(&self.big[v.unsigned_abs() as usize]);
        }
        qs.extend(self.large(tr.s3));
        qs.sort_unstable();
        qs.dedup();
        let from = self.bare.partition_point(|&x| x < lo);
        let to = self.bare.partition_point(|&x| x <= hi);
        let bare = &self.bare[from..to];
        let mut n = if tr.g3 == 1 {
            bare.len()
        } else {
            bare.iter().filter(|&&x| x.gcd(&tr.g3) == 1).count()
        } as u64;
        for &q in qs.iter() {
            for x3 in residue_class(0, q, lo, hi) {
                let e = self.exposed(x3);
                // Count each x3 once, under its largest exposed prime.
                if x3 != 0
                    && e.last() == Some(&q)
                    && e.iter().all(|p| qs.binary_search(p).is_ok())
                    && x3.gcd(&tr.g3) == 1
                {
                    n += 1;
                }
            }
        }
        n
    }
}

#[derive(Default)]
struct Scratch {
    classes: Vec<(i64, i64)>,
    qs: Vec<i64>,
}

/// How many of `v`, `-v` the sorted tuple `v` stands for: 2 when it is the
/// chosen representative of a pair, 1 when `v` is its own negative.
fn pair_factor(v: &[i64; 4]) -> u64 {
    let [x0, x1, x2, x3] = *v;
    match (x3.cmp(&-x0), x2.cmp(&-x1)) {
        (std::cmp::Ordering::Less, _) => 2,
        (std::cmp::Ordering::Equal, std::cmp::Ordering::Less) => 2,
        (std::cmp::Ordering::Equal, std::cmp::Ordering::Equal) => 1,
        _ => 0,
    }
}

/// Residue classes `(r, L)` covering every `x` with `x = 0` or
/// `x = -s3 (mod q)` for each candidate `q`. Candidates are folded in by CRT,
/// largest first, until the modulus exceeds `width`.
fn residues_mod_candidates(cands: &[i64], s3: i64, width: i64, out: &mut Vec<(i64, i64)>) {
    out.clear();
    let q = cands[0];
    let r1 = (-s3).rem_euclid(q);
    out.push((0, q));
    if r1 != 0 {
        out.push((r1, q));
    }
    let mut l = q;
    for &q in &cands[1..] {
        if l > width {
            break;
        }
        let inv = pow_mod((l % q) as u64, q as u64 - 2, q as u64) as i64;
        let targets = [0, (-s3).rem_euclid(q)];
        let n = out.len();
        for i in 0..n {
            let r = out[i].0;
            for (k, &a) in targets.iter().enumerate() {
                if k == 1 && a == 0 {
                    break;
                }
                let t = ((a - r).rem_euclid(q) * inv) % q;
                let x = r + l * t;
                if k == 0 {
                    out[i] = (x, l * q);
                } else {
                    out.push((x, l * q));
                }
            }
        }
        l *= q;
    }
}

/// `x` in `[lo, hi]` with `x = r mod q`.
fn residue_class(r: i64, q: i64, lo: i64, hi: i64) -> impl Iterator<Item = i64> {
    let start = lo + (r - lo).rem_euclid(q);
    (start..=hi).step_by(q as usize)
}

/// `#{x in [lo, hi] : gcd(x, g) = 1}`.
fn coprime_in(g: i64, lo: i64, hi: i64) -> u64 {
    if lo > hi {
        return 0;
    }
    if g == 0 {
        return [-1, 1].iter().filter(|&&x| lo <= x && x <= hi).count() as u64;
    }
    let mut primes = Vec::new();
    let mut n = g.abs();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            primes.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        primes.push(n);
    }
    // Inclusion-exclusion over squarefree divisors.
    let mut total: i64 = 0;
    for mask in 0u32..1 << primes.len() {
        let d: i64 = (0..primes.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| primes[i])
            .product();
        let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        total += sign * (hi.div_euclid(d) - (lo - 1).div_euclid(d));
    }
    total as u64
}

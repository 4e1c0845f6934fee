//! Decision procedure for nontrivial `Q_p`-points on diagonal forms
//! `a0 x0^d + a1 x1^d + a2 x2^d + a3 x3^d = 0`.
//!
//! The search walks the tree of primitive residue vectors one p-adic digit
//! at a time. Every `Q_p`-point has a representative with a first unit
//! coordinate `x_j`, which can be scaled to exactly 1; the coordinates before
//! it are then divisible by `p`. Each of the four choices of `j` is a
//! separate subtree.
//!
//! A node `y` (known mod `p^k`) is accepted when the Hensel certificate
//! `v(F(y)) > 2 m` holds, with `m = min_i v(dF/dx_i (y))`. If the
//! certificate fails while `m < k`, every lift of `y` has the same `m` and
//! the same valuation `v(F) <= 2m`, so the whole subtree is dead. A subtree
//! is also dead when `v(F(y))` lies below a lower bound for the valuation of
//! `F(y + p^k t) - F(y)` over all lifts, since then `F` keeps the valuation
//! `v(F(y))` on the whole residue class. Only the remaining nodes are refined.
//!
//! After normalization every coefficient has valuation at most `d - 1`, so
//! with `x_j = 1` we get `m <= v(d) + d - 1`. Hence a point always yields a
//! certificate by depth `v(d) + d`, and arithmetic modulo `p^N` with
//! `N = 2 (v(d) + d - 1) + 1` decides every certificate exactly. Running out
//! of nodes therefore proves insolubility.

use crate::error::{Error, Result};
use crate::padic::{ensure_prime, mul_mod, pow_mod, reduce, split_unchecked, PadicResidue};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Number of p-adic digits after which an exhausted tree proves insolubility.
pub fn completeness_depth(degree: u32, p: u64) -> u32 {
    2 * (max_derivative_valuation(degree, p)) + 1
}

fn max_derivative_valuation(degree: u32, p: u64) -> u32 {
    split_unchecked(degree as i128, p).0 + degree - 1
}

/// Coefficients rescaled so that `min v(a_i) = 0` and every `v(a_i) < d`.
///
/// With `a_i = p^(c + d t_i) a'_i`, the point `y` of the normalized form
/// maps to `x_i = p^(T - t_i) y_i` on the original one (`T = max t_i`), and
/// `F(x) = p^(c + d T) F'(y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedDiagonal {
    pub degree: u32,
    pub p: u64,
    pub coeffs: [i128; 4],
    /// `c`: power of `p` divided out of the whole equation.
    pub common_shift: u32,
    /// `t_i`: powers of `p^d` absorbed into each variable.
    pub absorbed: [u32; 4],
}

pub fn normalize_diagonal(degree: u32, a: [i128; 4], p: u64) -> Result<NormalizedDiagonal> {
    if degree < 2 {
        return Err(Error::InvalidArgument(format!("degree {degree} < 2")));
    }
    ensure_prime(p)?;
    if let Some(index) = a.iter().position(|&c| c == 0) {
        return Err(Error::ZeroCoefficient { index });
    }
    Ok(normalize_unchecked(degree, a, p))
}

fn normalize_unchecked(degree: u32, a: [i128; 4], p: u64) -> NormalizedDiagonal {
    let split = a.map(|c| split_unchecked(c, p));
    let common_shift = split.iter().map(|s| s.0).min().unwrap_or(0);
    let mut coeffs = [0i128; 4];
    let mut absorbed = [0u32; 4];
    for i in 0..4 {
        let (v, u) = split[i];
        let rel = v - common_shift;
        absorbed[i] = rel / degree;
        coeffs[i] = (p as i128).pow(rel % degree) * u;
    }
    NormalizedDiagonal {
        degree,
        p,
        coeffs,
        common_shift,
        absorbed,
    }
}

/// A point of the normalized form carrying a Hensel certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Coordinates modulo `p^depth`; the first unit coordinate is exactly 1.
    pub coords: [PadicResidue; 4],
    /// `v_p(F(y))`, capped at the completeness depth.
    pub certified: u32,
    /// `min_i v_p(dF/dx_i (y))`.
    pub derivative_valuation: u32,
    /// The form the certificate refers to.
    pub normalized: NormalizedDiagonal,
}

impl Witness {
    pub fn values(&self) -> [u128; 4] {
        self.coords.map(|c| c.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Soluble(Witness),
    Insoluble,
    Exhausted { nodes: u64 },
}

impl Verdict {
    pub fn is_soluble(&self) -> Option<bool> {
        match self {
            Verdict::Soluble(_) => Some(true),
            Verdict::Insoluble => Some(false),
            Verdict::Exhausted { .. } => None,
        }
    }
}

/// Decides whether `sum a_i x_i^d = 0` has a nontrivial `Q_p`-point.
///
/// ```
/// use diagsurf::search::{search_diagonal, Verdict, DEFAULT_NODE_BUDGET};
/// let v = search_diagonal(3, [1, 2, 4, 9], 3, DEFAULT_NODE_BUDGET).unwrap();
/// assert_eq!(v, Verdict::Insoluble);
/// ```
pub fn search_diagonal(degree: u32, a: [i128; 4], p: u64, node_budget: u64) -> Result<Verdict> {
    let normalized = normalize_diagonal(degree, a, p)?;
    let depth = completeness_depth(degree, p);
    let modulus = (p as u128)
        .checked_pow(depth)
        .filter(|m| *m < 1u128 << 63)
        .ok_or(Error::PrecisionOverflow { p, digits: depth })? as u64;
    let mut search = Search {
        p,
        degree: degree as u64,
        modulus,
        depth,
        coeffs: normalized.coeffs.map(|c| reduce(c, modulus)),
        coeff_val: normalized.coeffs.map(|c| split_unchecked(c, p).0),
        degree_val: split_unchecked(degree as i128, p).0,
        binomial_val: (0..=degree)
            .map(|l| split_unchecked(binomial(degree, l), p).0)
            .collect(),
        nodes: 0,
        budget: node_budget,
        lead: 0,
    };
    for lead in 0..4 {
        search.lead = lead;
        let mut y = [0u64; 4];
        y[lead] = 1;
        match search.expand(&y, 0) {
            Step::Found(y, k, vf, m) => {
                let coords = y.map(|v| PadicResidue {
                    p,
                    k,
                    value: v as u128,
                });
                return Ok(Verdict::Soluble(Witness {
                    coords,
                    certified: vf,
                    derivative_valuation: m,
                    normalized,
                }));
            }
            Step::OutOfBudget => return Ok(Verdict::Exhausted { nodes: search.nodes }),
            Step::Dead => {}
        }
    }
    Ok(Verdict::Insoluble)
}

fn binomial(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

enum Step {
    Found([u64; 4], u32, u32, u32),
    Dead,
    OutOfBudget,
}

struct Search {
    p: u64,
    degree: u64,
    modulus: u64,
    depth: u32,
    coeffs: [u64; 4],
    coeff_val: [u32; 4],
    degree_val: u32,
    /// `v_p(C(d, l))` for `l = 0..=d`.
    binomial_val: Vec<u32>,
    nodes: u64,
    budget: u64,
    lead: usize,
}

impl Search {
    fn val_capped(&self, mut x: u64, cap: u32) -> u32 {
        if x == 0 {
            return cap;
        }
        let mut v = 0;
        while x.is_multiple_of(self.p) && v < cap {
            x /= self.p;
            v += 1;
        }
        v
    }

    /// Valuation of the partial derivative in coordinate `i` at `y`, or `None` for zero.
    fn derivative_val(&self, i: usize, yi: u64) -> Option<u32> {
        if yi == 0 {
            return None;
        }
        let vy = self.val_capped(yi, self.depth);
        Some(self.degree_val + self.coeff_val[i] + (self.degree as u32 - 1) * vy)
    }

    /// Lower bound for `v(a_i ((y_i + p^k t)^d - y_i^d))` over all integers `t`.
    fn lift_change_bound(&self, i: usize, yi: u64, k: u32) -> u32 {
        let d = self.degree as u32;
        if yi == 0 {
            return self.coeff_val[i] + d * k;
        }
        let vy = self.val_capped(yi, self.depth);
        (1..=d)
            .map(|l| self.coeff_val[i] + self.binomial_val[l as usize] + (d - l) * vy + k * l)
            .min()
            .unwrap()
    }

    /// Visits the children of `y` (known mod `p^k`) in ascending digit order,
    /// lowest free coordinate fastest.
    fn expand(&mut self, y: &[u64; 4], k: u32) -> Step {
        let p = self.p;
        let step = p.pow(k);
        let free: Vec<usize> = (0..4)
            .filter(|&i| i != self.lead && !(k == 0 && i < self.lead))
            .collect();
        let mut terms: [Vec<u64>; 4] = Default::default();
        let mut fixed = 0u64;
        for i in 0..4 {
            if free.contains(&i) {
                terms[i] = (0..p)
                    .map(|t| {
                        let x = (y[i] + t * step) % self.modulus;
                        mul_mod(self.coeffs[i], pow_mod(x, self.degree, self.modulus), self.modulus)
                    })
                    .collect();
            } else {
                let x = y[i] % self.modulus;
                fixed = (fixed
                    + mul_mod(self.coeffs[i], pow_mod(x, self.degree, self.modulus), self.modulus))
                    % self.modulus;
            }
        }
        let mut digits = vec![0u64; free.len()];
        let child_depth = k + 1;
        loop {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Step::OutOfBudget;
            }
            let mut child = *y;
            let mut f = fixed;
            for (slot, &i) in free.iter().enumerate() {
                child[i] = y[i] + digits[slot] * step;
                f = (f + terms[i][digits[slot] as usize]) % self.modulus;
            }
            let vf = self.val_capped(f, self.depth);
            let m = (0..4)
                .filter_map(|i| self.derivative_val(i, child[i]))
                .min()
                .expect("lead coordinate is a unit");
            if vf > 2 * m {
                return Step::Found(child, child_depth, vf, m);
            }
            let constant_valuation = (0..4)
                .filter(|&i| i != self.lead)
                .map(|i| self.lift_change_bound(i, child[i], child_depth))
                .min()
                .unwrap();
            if m >= child_depth && vf >= constant_valuation.min(self.depth) && child_depth < self.depth {
                match self.expand(&child, child_depth) {
                    Step::Dead => {}
                    other => return other,
                }
            }
            // odometer
            let mut slot = 0;
            loop {
                if slot == digits.len() {
                    return Step::Dead;
                }
                digits[slot] += 1;
                if digits[slot] < p {
                    break;
                }
                digits[slot] = 0;
                slot += 1;
            }
        }
    }
}

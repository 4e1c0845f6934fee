//! Closed-form local solubility of diagonal cubic surfaces.
//!
//! Valuation vectors in `Z>=0^4` are grouped under the equivalence generated
//! by permuting coordinates, adding a common constant and reducing each
//! coordinate mod 3. Each move is realized by a scaling of the equation or
//! of a variable, so solubility only depends on the class and on the unit
//! parts of the coefficients. The five classes have representatives
//!
//! | class | representative |
//! |-------|----------------|
//! | δ1    | (0,0,0,0)      |
//! | δ2    | (0,0,0,1)      |
//! | δ3    | (0,0,0,2)      |
//! | δ4    | (0,0,1,1)      |
//! | δ5    | (0,0,1,2)      |

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{
    cube_unit_unchecked, ensure_prime, inverse_mod_prime, mul_mod, reduce, split_unchecked,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeltaClass {
    D1,
    D2,
    D3,
    D4,
    D5,
}

impl DeltaClass {
    pub const ALL: [DeltaClass; 5] = [Self::D1, Self::D2, Self::D3, Self::D4, Self::D5];

    /// 1-based index of the class.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i.wrapping_sub(1)).copied()
    }

    pub fn representative(self) -> [u32; 4] {
        match self {
            Self::D1 => [0, 0, 0, 0],
            Self::D2 => [0, 0, 0, 1],
            Self::D3 => [0, 0, 0, 2],
            Self::D4 => [0, 0, 1, 1],
            Self::D5 => [0, 0, 1, 2],
        }
    }

    fn from_representative(r: [u32; 4]) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.representative() == r)
    }
}

impl fmt::Display for DeltaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "delta{}", self.index())
    }
}

/// A vector of p-adic valuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValVec(pub [u32; 4]);

impl ValVec {
    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// The chain of moves taking a valuation vector to its class representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTransform {
    /// Multiples of 3 removed from each coordinate (powers of `p^3` absorbed into `x_i`).
    pub reductions: [u32; 4],
    /// Common shift in `{0, 1, 2}` added before the second reduction mod 3.
    pub shift: u32,
    /// `permutation[slot]` is the original coordinate placed in `slot`.
    pub permutation: [usize; 4],
}

/// Class of `v` together with the moves that reach its representative.
pub fn valuation_class(v: ValVec) -> (DeltaClass, ClassTransform) {
    let reduced = v.0.map(|x| x % 3);
    let reductions = v.0.map(|x| x / 3);
    for shift in 0..3 {
        let shifted = reduced.map(|x| (x + shift) % 3);
        let mut permutation = [0, 1, 2, 3];
        permutation.sort_by_key(|&i| (shifted[i], i));
        let sorted = permutation.map(|i| shifted[i]);
        if let Some(class) = DeltaClass::from_representative(sorted) {
            return (
                class,
                ClassTransform {
                    reductions,
                    shift,
                    permutation,
                },
            );
        }
    }
    unreachable!("every residue pattern mod 3 is a shift of a representative")
}

/// A cubic surface brought into the shape `sum p^(rep_i) u_i x_i^3` of its class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedCubic {
    pub p: u64,
    pub class: DeltaClass,
    /// Unit parts in representative slot order.
    pub units: [i128; 4],
    pub transform: ClassTransform,
}

impl NormalizedCubic {
    /// Coefficients `p^(rep_i) u_i` of the equisoluble normalized surface.
    pub fn coefficients(&self) -> [i128; 4] {
        let rep = self.class.representative();
        let mut out = [0; 4];
        for s in 0..4 {
            out[s] = (self.p as i128).pow(rep[s]) * self.units[s];
        }
        out
    }
}

pub fn normalize_cubic(a: [i128; 4], p: u64) -> Result<NormalizedCubic> {
    ensure_prime(p)?;
    if let Some(index) = a.iter().position(|&c| c == 0) {
        return Err(Error::ZeroCoefficient { index });
    }
    Ok(normalize_unchecked(a, p))
}

fn normalize_unchecked(a: [i128; 4], p: u64) -> NormalizedCubic {
    let split = a.map(|c| split_unchecked(c, p));
    let (class, transform) = valuation_class(ValVec(split.map(|s| s.0)));
    // Scalings by powers of p leave the unit parts untouched; only the slot order changes.
    let units = transform.permutation.map(|i| split[i].1);
    NormalizedCubic {
        p,
        class,
        units,
        transform,
    }
}

/// Residue vectors mod 9 of `delta3`-shaped coefficients `(u0, u1, u2, 9 u3)`
/// whose surface has no `Q_3`-point.
///
/// The orbit of `(1,2,4,0)` under permuting the first three coordinates,
/// negating any coordinate and scaling the first three by a common unit of
/// `Z/9`.
pub fn q3_bad_set() -> &'static BTreeSet<[u8; 4]> {
    static SET: OnceLock<BTreeSet<[u8; 4]>> = OnceLock::new();
    SET.get_or_init(|| {
        let mut seen = BTreeSet::new();
        let mut queue = vec![[1u8, 2, 4, 0]];
        while let Some(v) = queue.pop() {
            if !seen.insert(v) {
                continue;
            }
            let mut moves = vec![[v[1], v[0], v[2], v[3]], [v[0], v[2], v[1], v[3]]];
            for i in 0..4 {
                let mut w = v;
                w[i] = (9 - w[i]) % 9;
                moves.push(w);
            }
            // 2 generates (Z/9)^*
            moves.push([v[0] * 2 % 9, v[1] * 2 % 9, v[2] * 2 % 9, v[3]]);
            queue.extend(moves.into_iter().filter(|w| !seen.contains(w)));
        }
        seen
    })
}

/// Whether the diagonal cubic surface with coefficients `a` has a `Q_p`-point.
///
/// ```
/// use diagsurf::cubic::cubic_soluble_at;
/// assert!(cubic_soluble_at([1, 1, 7, 7], 7).unwrap());
/// assert!(!cubic_soluble_at([1, 2, 7, 14], 7).unwrap());
/// ```
pub fn cubic_soluble_at(a: [i128; 4], p: u64) -> Result<bool> {
    let n = normalize_cubic(a, p)?;
    Ok(decide_normalized(&n))
}

/// Same as [`cubic_soluble_at`] for a known prime and nonzero coefficients.
pub(crate) fn soluble_at_unchecked(a: [i128; 4], p: u64) -> bool {
    if p % 3 == 2 {
        return true;
    }
    decide_normalized(&normalize_unchecked(a, p))
}

fn decide_normalized(n: &NormalizedCubic) -> bool {
    let p = n.p;
    let u = n.units;
    if p % 3 == 2 {
        return true;
    }
    if p == 3 {
        if n.class != DeltaClass::D3 {
            return true;
        }
        let key = [
            reduce(u[0], 9) as u8,
            reduce(u[1], 9) as u8,
            reduce(u[2], 9) as u8,
            0,
        ];
        return !q3_bad_set().contains(&key);
    }
    // -u_j / u_i is a cube
    let ratio_is_cube = |i: usize, j: usize| {
        let r = mul_mod(reduce(-u[j], p), inverse_mod_prime(reduce(u[i], p), p), p);
        cube_unit_unchecked(r, p)
    };
    match n.class {
        DeltaClass::D1 | DeltaClass::D2 | DeltaClass::D3 => true,
        DeltaClass::D4 => ratio_is_cube(0, 1) || ratio_is_cube(2, 3),
        DeltaClass::D5 => ratio_is_cube(1, 0),
    }
}

/// Everywhere-local-solubility verdict with the primes that fail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElsOutcome {
    pub soluble: bool,
    pub failing_primes: Vec<u64>,
}

/// Everywhere local solubility of a diagonal cubic surface over `Q`.
///
/// A zero coefficient makes the surface a cone over a rational vertex, which
/// counts as soluble. Otherwise only `p = 3` and the primes `p = 1 mod 3`
/// dividing `a0 a1 a2 a3` can obstruct; the real place never does.
pub fn cubic_els(a: [i128; 4]) -> Result<ElsOutcome> {
    if a.iter().all(|&c| c == 0) {
        return Err(Error::InvalidArgument("zero coefficient vector".into()));
    }
    if a.contains(&0) {
        return Ok(ElsOutcome {
            soluble: true,
            failing_primes: vec![],
        });
    }
    let mut primes = BTreeSet::from([3u64]);
    for &c in &a {
        primes.extend(small_prime_divisors(c.unsigned_abs()).filter(|p| p % 3 == 1));
    }
    let failing_primes: Vec<u64> = primes
        .into_iter()
        .filter(|&p| !soluble_at_unchecked(a, p))
        .collect();
    Ok(ElsOutcome {
        soluble: failing_primes.is_empty(),
        failing_primes,
    })
}

/// Distinct prime divisors by trial division.
pub(crate) fn small_prime_divisors(mut n: u128) -> impl Iterator<Item = u64> {
    let mut out = Vec::new();
    let mut f = 2u128;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f as u64);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n as u64);
    }
    out.into_iter()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{search_diagonal, DEFAULT_NODE_BUDGET};
    use std::collections::HashMap;

    /// Union-find closure of the generating moves on a box of valuation vectors.
    fn closure_classes(bound: u32) -> HashMap<[u32; 4], usize> {
        let side = bound + 1;
        let n = side.pow(4) as usize;
        let idx = |v: [u32; 4]| -> usize {
            v.iter().fold(0usize, |acc, &x| acc * side as usize + x as usize)
        };
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let union = |a: usize, b: usize, parent: &mut Vec<usize>| {
            let (ra, rb) = (find(parent, a), find(parent, b));
            parent[ra] = rb;
        };
        let mut all = Vec::new();
        for a in 0..side {
            for b in 0..side {
                for c in 0..side {
                    for d in 0..side {
                        all.push([a, b, c, d]);
                    }
                }
            }
        }
        for v in &all {
            let i = idx(*v);
            for s in 0..3 {
                let mut w = *v;
                w.swap(s, s + 1);
                union(i, idx(w), &mut parent);
            }
            if v.iter().all(|&x| x < bound) {
                union(i, idx(v.map(|x| x + 1)), &mut parent);
            }
            for k in 0..4 {
                if v[k] + 3 <= bound {
                    let mut w = *v;
                    w[k] += 3;
                    union(i, idx(w), &mut parent);
                }
            }
        }
        all.iter()
            .map(|v| (*v, find(&mut parent, idx(*v))))
            .collect()
    }

    #[test]
    fn valuation_class_examples() {
        assert_eq!(valuation_class(ValVec([0, 0, 0, 0])).0, DeltaClass::D1);
        assert_eq!(valuation_class(ValVec([1, 1, 1, 1])).0, DeltaClass::D1);
        assert_eq!(valuation_class(ValVec([0, 1, 1, 1])).0, DeltaClass::D3);
        assert_eq!(valuation_class(ValVec([2, 5, 0, 3])).0, DeltaClass::D4);
    }

    #[test]
    fn classes_match_closure_oracle() {
        let roots = closure_classes(11);
        let rep_roots: Vec<usize> = DeltaClass::ALL
            .iter()
            .map(|c| roots[&c.representative()])
            .collect();
        let distinct: BTreeSet<_> = rep_roots.iter().collect();
        assert_eq!(distinct.len(), 5, "representatives must be inequivalent");
        for (v, root) in &roots {
            if ValVec(*v).weight() > 8 {
                continue;
            }
            let pos = rep_roots.iter().position(|r| r == root).expect("class exhausted");
            assert_eq!(valuation_class(ValVec(*v)).0.index(), pos + 1, "{v:?}");
        }
        assert_eq!(roots[&[0, 1, 1, 1]], roots[&[0, 0, 0, 2]]);
    }

    #[test]
    fn class_is_constant_on_moves() {
        for v in closure_classes(8).keys().filter(|v| ValVec(**v).weight() <= 8) {
            let c = valuation_class(ValVec(*v)).0;
            let mut moved = vec![v.map(|x| x + 1)];
            for s in 0..3 {
                let mut w = *v;
                w.swap(s, s + 1);
                moved.push(w);
            }
            for k in 0..4 {
                let mut w = *v;
                w[k] += 3;
                moved.push(w);
            }
            for w in moved {
                assert_eq!(valuation_class(ValVec(w)).0, c, "{v:?} -> {w:?}");
            }
        }
    }

    #[test]
    fn transform_reaches_representative() {
        for v in closure_classes(6).keys() {
            let (class, t) = valuation_class(ValVec(*v));
            let slots = t.permutation.map(|i| (v[i] - 3 * t.reductions[i] + t.shift) % 3);
            assert_eq!(slots, class.representative());
        }
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_cubic([1, 1, 1, 1], 7).unwrap();
        assert_eq!((n.class, n.units), (DeltaClass::D1, [1, 1, 1, 1]));
        let n = normalize_cubic([1, 1, 7, 7], 7).unwrap();
        assert_eq!((n.class, n.units), (DeltaClass::D4, [1, 1, 1, 1]));
        let n = normalize_cubic([9, 1, 3, 3], 3).unwrap();
        assert_eq!(n.class, DeltaClass::D5);
        assert_eq!(n.transform.shift, 2);
        assert_eq!(n.transform.permutation, [2, 3, 0, 1]);
        assert_eq!(n.coefficients(), [1, 1, 3, 9]);
        assert_eq!(
            normalize_cubic([1, 0, 1, 1], 3),
            Err(Error::ZeroCoefficient { index: 1 })
        );
    }

    #[test]
    fn bad_set_has_48_elements() {
        let s = q3_bad_set();
        assert_eq!(s.len(), 48);
        assert!(s.contains(&[1, 2, 4, 0]));
        assert!(s.contains(&[8, 7, 5, 0]));
        assert!(s.iter().all(|v| v[3] == 0));
    }

    #[test]
    fn local_examples() {
        assert!(cubic_soluble_at([1, 1, 1, 1], 7).unwrap());
        assert!(!cubic_soluble_at([1, 2, 4, 9], 3).unwrap());
        assert!(!cubic_soluble_at([-1, 2, 4, 9], 3).unwrap());
        assert!(cubic_soluble_at([1, 1, 7, 7], 7).unwrap());
        assert!(!cubic_soluble_at([1, 2, 7, 14], 7).unwrap());
        for a in [[1, 2, 3, 4], [7, 11, 13, 17], [-1, -2, -3, -4]] {
            assert!(cubic_soluble_at(a, 5).unwrap());
        }
    }

    #[test]
    fn els_examples() {
        assert_eq!(
            cubic_els([1, 1, 1, 1]).unwrap(),
            ElsOutcome { soluble: true, failing_primes: vec![] }
        );
        assert_eq!(cubic_els([1, 2, 4, 9]).unwrap().failing_primes, vec![3]);
        assert_eq!(cubic_els([1, 2, 7, 14]).unwrap().failing_primes, vec![7]);
        assert!(cubic_els([0, 2, 7, 14]).unwrap().soluble);
        assert!(cubic_els([0, 0, 0, 0]).is_err());
    }

    #[test]
    fn delta3_sweep_at_three() {
        let units: Vec<i128> = (1..9).filter(|u| u % 3 != 0).collect();
        let mut bad = 0;
        let mut total = 0;
        for &u0 in &units {
            for &u1 in &units {
                for &u2 in &units {
                    for &u3 in &units {
                        let a = [u0, u1, u2, 9 * u3];
                        let by_rule = cubic_soluble_at(a, 3).unwrap();
                        let by_search = search_diagonal(3, a, 3, DEFAULT_NODE_BUDGET)
                            .unwrap()
                            .is_soluble()
                            .unwrap();
                        assert_eq!(by_rule, by_search, "{a:?}");
                        total += 1;
                        bad += usize::from(!by_rule);
                    }
                }
            }
        }
        assert_eq!(total, 6usize.pow(4));
        assert_eq!(bad * 9, total * 2);
        assert_eq!(bad, 48 * 6);
    }
}

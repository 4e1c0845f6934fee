//! Integer and p-adic primitives: valuations, cubic residues, the
//! smallest-prime-factor sieve and deterministic sampling of `Z_p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Trial-division primality test, fine for the small primes this crate works with.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    if n.is_multiple_of(3) {
        return n == 3;
    }
    let mut f = 5u64;
    while f.saturating_mul(f) <= n {
        if n.is_multiple_of(f) || n.is_multiple_of(f + 2) {
            return false;
        }
        f += 6;
    }
    true
}

pub(crate) fn ensure_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// Splits `n = p^v * u` with `p` not dividing `u`.
///
/// ```
/// use diagsurf::padic::val_and_unit;
/// assert_eq!(val_and_unit(12, 2).unwrap(), (2, 3));
/// assert_eq!(val_and_unit(-250, 5).unwrap(), (3, -2));
/// ```
pub fn val_and_unit(n: i128, p: u64) -> Result<(u32, i128)> {
    ensure_prime(p)?;
    if n == 0 {
        return Err(Error::InfiniteValuation);
    }
    Ok(split_unchecked(n, p))
}

/// Valuation and unit part without argument checks. `n` must be nonzero.
#[inline]
pub(crate) fn split_unchecked(mut n: i128, p: u64) -> (u32, i128) {
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// `p`-adic valuation of a nonzero integer, `None` for zero.
#[inline]
pub fn valuation(n: i128, p: u64) -> Option<u32> {
    (n != 0).then(|| split_unchecked(n, p).0)
}

/// Representative of `n mod m` in `[0, m)`.
#[inline]
pub fn reduce(n: i128, m: u64) -> u64 {
    n.rem_euclid(m as i128) as u64
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Modular exponentiation by squaring.
pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

/// Inverse of a unit modulo a prime.
pub(crate) fn inverse_mod_prime(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Whether the unit `u` is a cube modulo `p`, for `p = 1 mod 3`.
///
/// Hensel's lemma makes this the same as being a cube in `Z_p^*`.
/// For `p = 2 mod 3` every unit is a cube and callers shortcut, so such
/// primes are rejected here.
pub fn is_cube_unit(u: i128, p: u64) -> Result<bool> {
    ensure_prime(p)?;
    if p % 3 != 1 {
        return Err(Error::NotOneModThree(p));
    }
    let r = reduce(u, p);
    if r == 0 {
        return Err(Error::InvalidArgument(format!("{u} is not a unit mod {p}")));
    }
    Ok(cube_unit_unchecked(r, p))
}

#[inline]
pub(crate) fn cube_unit_unchecked(r: u64, p: u64) -> bool {
    pow_mod(r, (p - 1) / 3, p) == 1
}

/// Smallest-prime-factor table up to an inclusive limit.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u32,
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl PrimeTable {
    /// Builds the table with a linear sieve.
    pub fn new(limit: u32) -> Result<Self> {
        if limit < 2 {
            return Err(Error::InvalidArgument(format!(
                "prime table limit must be at least 2, got {limit}"
            )));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes = Vec::with_capacity(if n > 100 {
            (n as f64 / (n as f64).ln() * 1.2) as usize
        } else {
            32
        });
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &q in &primes {
                if q > si || i * q as usize > n {
                    break;
                }
                spf[i * q as usize] = q;
            }
        }
        Ok(Self { limit, spf, primes })
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    pub fn spf(&self, n: u32) -> Option<u32> {
        if n < 2 || n > self.limit {
            None
        } else {
            Some(self.spf[n as usize])
        }
    }

    pub fn is_prime(&self, n: u32) -> bool {
        self.spf(n) == Some(n)
    }

    /// Prime factorization as `(prime, exponent)` pairs in ascending order.
    ///
    /// Values above the table limit fall back to trial division by the
    /// tabulated primes; a cofactor left over after that is treated as
    /// prime, which is correct whenever `n <= limit^2`.
    pub fn factor(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        let push = |p: u64, out: &mut Vec<(u64, u32)>| match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        };
        if n > self.limit as u64 {
            for &q in &self.primes {
                let q = q as u64;
                if q * q > n {
                    break;
                }
                while n.is_multiple_of(q) {
                    n /= q;
                    push(q, &mut out);
                }
                if n <= self.limit as u64 {
                    break;
                }
            }
            if n > self.limit as u64 {
                push(n, &mut out);
                return out;
            }
        }
        while n >= 2 {
            let q = self.spf[n as usize] as u64;
            n /= q;
            push(q, &mut out);
        }
        out
    }
}

/// An element of `Z/p^k`, standing in for a point of `Z_p` known to `k` digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicResidue {
    pub p: u64,
    pub k: u32,
    pub value: u128,
}

impl PadicResidue {
    pub fn new(p: u64, k: u32, value: u128) -> Result<Self> {
        let m = checked_pow(p, k)?;
        Ok(Self { p, k, value: value % m })
    }

    pub fn modulus(&self) -> u128 {
        (self.p as u128).pow(self.k)
    }

    /// Valuation if the residue is nonzero; zero residues have undetermined valuation.
    pub fn valuation(&self) -> Option<u32> {
        if self.value == 0 {
            return None;
        }
        let mut v = 0;
        let mut x = self.value;
        while x.is_multiple_of(self.p as u128) {
            x /= self.p as u128;
            v += 1;
        }
        Some(v)
    }
}

fn checked_pow(p: u64, k: u32) -> Result<u128> {
    (p as u128)
        .checked_pow(k)
        .filter(|m| *m < 1u128 << 126)
        .ok_or(Error::PrecisionOverflow { p, digits: k })
}

/// Number of base-`p` digits drawn per 64-bit chunk.
fn digits_per_chunk(p: u64) -> u32 {
    let mut c = 0;
    let mut m: u64 = 1;
    while let Some(next) = m.checked_mul(p) {
        if next > 1 << 62 {
            break;
        }
        m = next;
        c += 1;
    }
    c
}

/// Draws the first `k` base-`p` digits of a Haar-uniform element of `Z_p`.
///
/// The output is a pure function of `(seed, index)`: the digit stream comes
/// from a ChaCha8 keystream keyed by `seed` on stream `index`, so sampling
/// order and thread scheduling never matter. Asking for more digits with the
/// same `(seed, index)` refines the same p-adic number.
pub fn sample_zp(p: u64, k: u32, seed: u64, index: u64) -> Result<PadicResidue> {
    if k == 0 {
        return Err(Error::InvalidArgument("precision must be at least 1".into()));
    }
    ensure_prime(p)?;
    checked_pow(p, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let c = digits_per_chunk(p);
    let chunk_mod = p.pow(c);
    let mut value: u128 = 0;
    let mut scale: u128 = 1;
    let mut remaining = k;
    while remaining > 0 {
        let chunk: u64 = rng.random_range(0..chunk_mod);
        let take = remaining.min(c);
        let part = chunk % p.pow(take);
        value += part as u128 * scale;
        scale *= (p as u128).pow(take);
        remaining -= take;
    }
    Ok(PadicResidue { p, k, value })
}

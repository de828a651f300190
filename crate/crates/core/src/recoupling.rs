//! Wigner 6j symbols.
//!
//! Values come from the Racah single sum evaluated in exact integer
//! arithmetic. Every term of the alternating sum is an integer, so the sum is
//! accumulated as a [`BigInt`]; the four triangle coefficients are kept as a
//! prime factorization and only the final `S * sqrt(Δ)` is rounded to `f64`.
//! Results are memoized under a key that is invariant under the 24 classical
//! symmetries of the symbol.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::spin::Spin;

/// Default largest `2j` supported by the shared factorial table.
pub const DEFAULT_MAX_TWICE_J: u32 = 40;

/// Triangle rule: `|a-b| <= c <= a+b` with `a+b+c` an integer.
pub fn triangle_ok(a: Spin, b: Spin, c: Spin) -> bool {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    (a + b + c) % 2 == 0 && c <= a + b && a <= b + c && b <= a + c
}

/// The four triads of `{j1 j2 j3; j4 j5 j6}`, as slot indices.
pub const TRIADS: [[usize; 3]; 4] = [[0, 1, 2], [0, 4, 5], [3, 1, 5], [3, 4, 2]];

/// True when all four triads of the symbol satisfy [`triangle_ok`].
pub fn admissible(js: &[Spin; 6]) -> bool {
    TRIADS.iter().all(|t| triangle_ok(js[t[0]], js[t[1]], js[t[2]]))
}

/// Canonical cache key: the lexicographically smallest of the 24 images of a
/// symbol under column permutations and upper/lower swaps of column pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SixJKey([u32; 6]);

impl SixJKey {
    pub fn new(js: &[Spin; 6]) -> Self {
        let t = js.map(Spin::twice);
        let mut best = t;
        for image in symmetry_images(t) {
            if image < best {
                best = image;
            }
        }
        SixJKey(best)
    }

    pub fn spins(&self) -> [Spin; 6] {
        self.0.map(Spin::from_twice)
    }
}

const COLUMN_PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// All 24 symmetry images of `[j1 j2 j3 j4 j5 j6]` (columns are `(j1,j4)`,
/// `(j2,j5)`, `(j3,j6)`).
pub fn symmetry_images(t: [u32; 6]) -> impl Iterator<Item = [u32; 6]> {
    COLUMN_PERMS.into_iter().flat_map(move |p| {
        let cols = [(t[p[0]], t[p[0] + 3]), (t[p[1]], t[p[1] + 3]), (t[p[2]], t[p[2] + 3])];
        // flip none, or exactly two columns
        [
            [false, false, false],
            [true, true, false],
            [true, false, true],
            [false, true, true],
        ]
        .into_iter()
        .map(move |flip| {
            let mut out = [0u32; 6];
            for (k, &(up, down)) in cols.iter().enumerate() {
                let (u, d) = if flip[k] { (down, up) } else { (up, down) };
                out[k] = u;
                out[k + 3] = d;
            }
            out
        })
    })
}

/// Factorials `0!..=n_max!`, both as big integers and as prime exponent
/// vectors.
#[derive(Debug)]
pub struct FactorialTable {
    primes: Vec<u32>,
    exponents: Vec<Vec<u32>>,
    values: Vec<BigUint>,
}

impl FactorialTable {
    pub fn new(n_max: usize) -> Self {
        let primes = primes_up_to(n_max as u32);
        let mut exponents = Vec::with_capacity(n_max + 1);
        let mut values = Vec::with_capacity(n_max + 1);
        let mut acc = vec![0u32; primes.len()];
        let mut value = BigUint::one();
        exponents.push(acc.clone());
        values.push(value.clone());
        for n in 1..=n_max as u32 {
            let mut m = n;
            for (k, &p) in primes.iter().enumerate() {
                if p > m {
                    break;
                }
                while m % p == 0 {
                    acc[k] += 1;
                    m /= p;
                }
            }
            value *= n;
            exponents.push(acc.clone());
            values.push(value.clone());
        }
        FactorialTable {
            primes,
            exponents,
            values,
        }
    }

    pub fn max_n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn factorial(&self, n: usize) -> &BigUint {
        &self.values[n]
    }

    /// Adds `sign * exponents(n!)` into `acc`.
    fn accumulate(&self, acc: &mut [i64], n: usize, sign: i64) {
        for (a, &e) in acc.iter_mut().zip(&self.exponents[n]) {
            *a += sign * e as i64;
        }
    }
}

fn primes_up_to(n: u32) -> Vec<u32> {
    let mut sieve = vec![true; n as usize + 1];
    let mut primes = Vec::new();
    for i in 2..=n as usize {
        if sieve[i] {
            primes.push(i as u32);
            let mut k = i * i;
            while k <= n as usize {
                sieve[k] = false;
                k += i;
            }
        }
    }
    primes
}

/// 6j evaluator with a shared factorial table and a memo table.
///
/// Lookups take a read lock; inserts are serialized behind the write lock.
#[derive(Debug)]
pub struct Recoupler {
    max_twice_j: u32,
    table: FactorialTable,
    cache: RwLock<HashMap<SixJKey, f64>>,
}

impl Default for Recoupler {
    fn default() -> Self {
        Recoupler::new(DEFAULT_MAX_TWICE_J)
    }
}

static SHARED: Lazy<Recoupler> = Lazy::new(Recoupler::default);

/// The process-wide evaluator (2j_max = 40).
pub fn shared() -> &'static Recoupler {
    &SHARED
}

/// `{j1 j2 j3; j4 j5 j6}` through the shared evaluator.
pub fn wigner6j(js: [Spin; 6]) -> Result<f64> {
    SHARED.wigner6j(js)
}

impl Recoupler {
    pub fn new(max_twice_j: u32) -> Self {
        // largest factorial argument is (t+1)! with t <= j1+j2+j4+j5 <= 2 * (2j_max)
        let n_max = 2 * max_twice_j as usize + 1;
        Recoupler {
            max_twice_j,
            table: FactorialTable::new(n_max),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn max_twice_j(&self) -> u32 {
        self.max_twice_j
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().len()
    }

    pub fn clear_cache(&self) {
        self.cache.write().clear();
    }

    /// Cached 6j value. Non-admissible symbols are 0.
    pub fn wigner6j(&self, js: [Spin; 6]) -> Result<f64> {
        if !admissible(&js) {
            return Ok(0.0);
        }
        let key = SixJKey::new(&js);
        if let Some(&v) = self.cache.read().get(&key) {
            return Ok(v);
        }
        let v = self.evaluate(&key.spins())?;
        self.cache.write().insert(key, v);
        Ok(v)
    }

    /// Same value as [`Recoupler::wigner6j`], bypassing the memo table.
    pub fn wigner6j_uncached(&self, js: [Spin; 6]) -> Result<f64> {
        if !admissible(&js) {
            return Ok(0.0);
        }
        self.evaluate(&SixJKey::new(&js).spins())
    }

    fn evaluate(&self, js: &[Spin; 6]) -> Result<f64> {
        if js.iter().any(|j| j.twice() > self.max_twice_j) {
            return Err(Error::Capacity {
                spins: *js,
                max_twice_j: self.max_twice_j,
            });
        }
        let t = js.map(|j| j.twice() as usize);
        let (sum, delta) = self.racah_parts(&t);
        if sum.is_zero() {
            return Ok(0.0);
        }

        // value^2 = sum^2 * delta_num / delta_den, evaluated exactly then rounded once
        let mut num = sum.magnitude() * sum.magnitude();
        let mut den = BigUint::one();
        for (&p, &e) in self.table.primes.iter().zip(&delta) {
            match e.cmp(&0) {
                std::cmp::Ordering::Greater => num *= BigUint::from(p).pow(e as u32),
                std::cmp::Ordering::Less => den *= BigUint::from(p).pow((-e) as u32),
                std::cmp::Ordering::Equal => {}
            }
        }
        let magnitude = ratio_to_f64(&num, &den).sqrt();
        Ok(if sum.sign() == Sign::Minus {
            -magnitude
        } else {
            magnitude
        })
    }

    /// Integer Racah sum and the prime exponents of the product of the four
    /// squared triangle coefficients. `t` holds doubled spins.
    fn racah_parts(&self, t: &[usize; 6]) -> (BigInt, Vec<i64>) {
        let mut delta = vec![0i64; self.table.primes.len()];
        for tri in TRIADS {
            let (a, b, c) = (t[tri[0]], t[tri[1]], t[tri[2]]);
            self.table.accumulate(&mut delta, (a + b - c) / 2, 1);
            self.table.accumulate(&mut delta, (a + c - b) / 2, 1);
            self.table.accumulate(&mut delta, (b + c - a) / 2, 1);
            self.table.accumulate(&mut delta, (a + b + c) / 2 + 1, -1);
        }

        let alphas = TRIADS.map(|tri| (t[tri[0]] + t[tri[1]] + t[tri[2]]) / 2);
        let betas = [
            (t[0] + t[1] + t[3] + t[4]) / 2,
            (t[1] + t[2] + t[4] + t[5]) / 2,
            (t[2] + t[0] + t[5] + t[3]) / 2,
        ];
        let lo = *alphas.iter().max().unwrap();
        let hi = *betas.iter().min().unwrap();

        let mut sum = BigInt::zero();
        for k in lo..=hi {
            let mut den = BigUint::one();
            for &a in &alphas {
                den *= self.table.factorial(k - a);
            }
            for &b in &betas {
                den *= self.table.factorial(b - k);
            }
            let term = BigInt::from(self.table.factorial(k + 1) / den);
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        (sum, delta)
    }
}

/// `num / den` rounded to `f64` without intermediate overflow.
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    // keep ~128 significant bits in the integer quotient
    let shift = den.bits() as i64 - num.bits() as i64 + 128;
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    let top = q.bits() as i64;
    let drop = (top - 64).max(0);
    let mantissa = (&q >> drop as usize).to_u64().unwrap_or(u64::MAX) as f64;
    mantissa * 2f64.powi((drop - shift) as i32)
}

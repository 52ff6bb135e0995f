//! Regulator extraction from a multiple of the cycle length.
//!
//! A successful infrastructure search produces some positive multiple h0 of
//! the regulator R_x.  The regulator is the smallest divisor n of h0 whose
//! doubled value 2n closes the principal cycle, so it is recovered the same
//! way a group element's order is recovered from a multiple: factor h0, then
//! strip each prime as long as the stripped value still closes the cycle.
//! One below() walk decides each probe, so the whole extraction costs a
//! polynomial number of infrastructure steps on top of one integer
//! factorization.
//!
//! The factorization itself is elementary: trial division by all primes up
//! to 10^4, then Brent's cycle variant of the rho method on what remains,
//! with Miller-Rabin (64 rounds) certifying every reported prime.  Class
//! numbers in reach of the searches here have well under 30 digits, where
//! this combination takes at most seconds.

use crate::error::{Error, Result};
use crate::infra::Infra;
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::sync::OnceLock;

// --- primality -------------------------------------------------------------

/// Number of Miller-Rabin rounds.  The first rounds use the small fixed
/// witnesses that make the test deterministic below 3.3 * 10^24; the rest
/// are drawn from a generator seeded by the number itself, so the verdict
/// is reproducible.
const MILLER_RABIN_ROUNDS: usize = 64;

/// Fixed witnesses; these alone decide primality for all n < 3.3 * 10^24.
const FIXED_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// One Miller-Rabin round: returns false when `witness` proves n composite.
fn passes_round(n: &BigUint, n_minus_1: &BigUint, d: &BigUint, s: u32, witness: &BigUint) -> bool {
    let reduced = witness % n;
    if reduced.is_zero() {
        return true;
    }
    let mut x = reduced.modpow(d, n);
    if x.is_one() || x == *n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == *n_minus_1 {
            return true;
        }
    }
    false
}

/// Miller-Rabin compositeness test with 64 rounds.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for p in FIXED_WITNESSES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    // n - 1 = d * 2^s with d odd
    let s = n_minus_1.trailing_zeros().unwrap_or(0) as u32;
    let d = &n_minus_1 >> s;

    for w in FIXED_WITNESSES {
        if !passes_round(n, &n_minus_1, &d, s, &BigUint::from(w)) {
            return false;
        }
    }
    // remaining rounds with witnesses seeded by the number itself
    let seed = n.iter_u64_digits().fold(0u64, |acc, d| acc ^ d.rotate_left(17));
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let hi = &n_minus_1 - 1u32;
    for _ in FIXED_WITNESSES.len()..MILLER_RABIN_ROUNDS {
        if hi < two {
            break;
        }
        let w = rng.gen_biguint_range(&two, &hi);
        if !passes_round(n, &n_minus_1, &d, s, &w) {
            return false;
        }
    }
    true
}

// --- factorization ----------------------------------------------------------

/// Trial-division bound; primes below it are sieved once and reused.
const TRIAL_BOUND: u64 = 10_000;

/// Iteration cap for one Brent attempt; raised constants are retried first.
const BRENT_ITER_CAP: u64 = 1 << 27;

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_BOUND as usize;
        let mut sieve = vec![true; n + 1];
        let mut out = Vec::new();
        for p in 2..=n {
            if sieve[p] {
                out.push(p as u64);
                let mut k = p * p;
                while k <= n {
                    sieve[k] = false;
                    k += p;
                }
            }
        }
        out
    })
}

/// A positive integer together with its complete prime factorization,
/// sorted by prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factored {
    pub value: BigUint,
    pub factors: Vec<(BigUint, u32)>,
}

impl Factored {
    /// Re-multiplies the factor list; equals `value` for any output of
    /// `factor`.
    pub fn product(&self) -> BigUint {
        let mut acc = BigUint::one();
        for (p, a) in &self.factors {
            acc *= p.pow(*a);
        }
        acc
    }
}

/// Brent's cycle variant of the rho method.  Returns a nontrivial divisor
/// of n, or None when the cycle for this polynomial offset degenerates.
fn brent_rho(n: &BigUint, offset: u64) -> Option<BigUint> {
    let c = BigUint::from(offset);
    let step = |x: &BigUint| (x * x + &c) % n;

    let mut y = BigUint::from(2u32);
    let mut r: u64 = 1;
    let mut q = BigUint::one();
    let mut total: u64 = 0;
    let mut x;
    let mut ys;
    loop {
        x = y.clone();
        for _ in 0..r {
            y = step(&y);
        }
        let mut k: u64 = 0;
        while k < r {
            ys = y.clone();
            let block = 128.min(r - k);
            for _ in 0..block {
                y = step(&y);
                let diff = if x > y { &x - &y } else { &y - &x };
                q = q * diff % n;
            }
            let g = q.gcd(n);
            if !g.is_one() {
                if g == *n {
                    // backtrack one step at a time from the saved point
                    let mut g2;
                    loop {
                        ys = step(&ys);
                        let diff = if x > ys { &x - &ys } else { &ys - &x };
                        g2 = diff.gcd(n);
                        if !g2.is_one() {
                            break;
                        }
                    }
                    if g2 == *n {
                        return None;
                    }
                    return Some(g2);
                }
                return Some(g);
            }
            k += block;
            total += block;
            if total > BRENT_ITER_CAP {
                return None;
            }
        }
        r *= 2;
    }
}

fn push_factor(out: &mut Vec<(BigUint, u32)>, p: BigUint, a: u32) {
    if let Some(e) = out.iter_mut().find(|(q, _)| *q == p) {
        e.1 += a;
    } else {
        out.push((p, a));
    }
}

fn factor_rec(n: BigUint, out: &mut Vec<(BigUint, u32)>, depth: usize) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    if depth > 128 {
        return Err(Error::GuardExceeded {
            where_: "integer factorization",
            detail: "recursion depth exceeded".into(),
        });
    }
    if is_probable_prime(&n) {
        push_factor(out, n, 1);
        return Ok(());
    }
    for offset in 1..64u64 {
        if let Some(d) = brent_rho(&n, offset) {
            let q = &n / &d;
            factor_rec(d, out, depth + 1)?;
            factor_rec(q, out, depth + 1)?;
            return Ok(());
        }
    }
    Err(Error::GuardExceeded {
        where_: "integer factorization",
        detail: format!("no divisor found for a {}-bit composite", n.bits()),
    })
}

/// Complete factorization: trial division up to 10^4, then Brent rho with
/// Miller-Rabin certification of every prime reported.
pub fn factor(n: &BigUint) -> Result<Factored> {
    if n.is_zero() {
        return Err(Error::Config("cannot factor zero".into()));
    }
    let mut rest = n.clone();
    let mut factors: Vec<(BigUint, u32)> = Vec::new();
    for &p in small_primes() {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            break;
        }
        let mut a = 0u32;
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            a += 1;
        }
        if a > 0 {
            factors.push((pb, a));
        }
    }
    if !rest.is_one() {
        if rest < BigUint::from(TRIAL_BOUND * TRIAL_BOUND) || is_probable_prime(&rest) {
            // below the square of the trial bound anything left is prime
            push_factor(&mut factors, rest, 1);
        } else {
            factor_rec(rest, &mut factors, 0)?;
        }
    }
    factors.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Factored {
        value: n.clone(),
        factors,
    })
}

// --- cycle membership -------------------------------------------------------

/// Whether n is a nonnegative multiple of the regulator, decided by one
/// below() walk: 2n closes the cycle exactly when the divisor below 2n is
/// the identity at distance exactly 2n.  The distance check matters: the
/// divisor below a slightly larger target is still the identity whenever
/// the first baby step is longer than the overshoot, and that case must
/// not be mistaken for a multiple.
pub fn is_cycle_multiple(infra: &mut Infra<'_>, n: &BigInt) -> Result<bool> {
    if n.sign() == num_bigint::Sign::Minus {
        return Ok(false);
    }
    if n.is_zero() {
        return Ok(true);
    }
    let target = n << 1;
    let d = infra.below(&target)?;
    Ok(d.is_identity() && d.delta == target)
}

// --- extraction --------------------------------------------------------------

/// The result of stripping a multiple down to the regulator.
#[derive(Clone, Debug)]
pub struct RegulatorExtraction {
    /// The multiple that was fed in.
    pub h0: BigInt,
    /// The regulator R_x.
    pub regulator: BigInt,
    /// Prime factorization of h0.
    pub factors: Vec<(BigUint, u32)>,
}

/// Recovers R_x from a positive multiple h0, given a lower bound l >= 1 on
/// the regulator (l = 1 when nothing is known).
///
/// For each prime power p^a dividing h0 the minimal e with h0 / p^e no
/// longer a multiple is located; p^(e-1) then belongs to the cofactor.  A
/// probe below the lower bound is never a multiple, so it is decided
/// without walking.  The result is verified before returning: 2 R_x closes
/// the cycle and 2 R_x / p does not, for every prime p dividing R_x.
pub fn extract_regulator(
    infra: &mut Infra<'_>,
    h0: &BigInt,
    lower: &BigInt,
) -> Result<RegulatorExtraction> {
    if h0.sign() != num_bigint::Sign::Plus {
        return Err(Error::Config(
            "regulator extraction needs a positive multiple".into(),
        ));
    }
    if lower.sign() != num_bigint::Sign::Plus {
        return Err(Error::Config(
            "the regulator lower bound must be at least 1".into(),
        ));
    }
    if !is_cycle_multiple(infra, h0)? {
        return Err(Error::Config(format!(
            "{h0} is not a multiple of the regulator: 2 * {h0} does not close the cycle"
        )));
    }
    let h0_mag = h0.magnitude().clone();
    let factored = factor(&h0_mag)?;

    // not a multiple, decided without a walk when the probe sinks below
    // the known lower bound
    let probe_is_multiple = |cand: &BigInt, infra: &mut Infra<'_>| -> Result<bool> {
        if cand < lower {
            return Ok(false);
        }
        is_cycle_multiple(infra, cand)
    };

    let mut cofactor = BigInt::one();
    for (p, a) in &factored.factors {
        let p_int = BigInt::from(p.clone());
        let mut cand = h0.clone();
        let mut stripped = 0u32;
        // largest e <= a with h0 / p^e still a multiple
        while stripped < *a {
            let next = &cand / &p_int;
            if probe_is_multiple(&next, infra)? {
                cand = next;
                stripped += 1;
            } else {
                break;
            }
        }
        cofactor *= p_int.pow(stripped);
    }
    let regulator = h0 / &cofactor;

    if !is_cycle_multiple(infra, &regulator)? {
        return Err(Error::GuardExceeded {
            where_: "regulator extraction",
            detail: format!("extracted value {regulator} does not close the cycle"),
        });
    }
    for (p, _) in &factored.factors {
        let p_int = BigInt::from(p.clone());
        if (&regulator % &p_int).is_zero() && is_cycle_multiple(infra, &(&regulator / &p_int))? {
            return Err(Error::GuardExceeded {
                where_: "regulator extraction",
                detail: format!("{regulator} / {p_int} still closes the cycle"),
            });
        }
    }

    Ok(RegulatorExtraction {
        h0: h0.clone(),
        regulator,
        factors: factored.factors,
    })
}

/// The ideal class number h_x = h / R_x; errors when R_x does not divide h,
/// which indicates the inputs do not belong to the same field.
pub fn ideal_class_number(h: &BigInt, regulator: &BigInt) -> Result<BigInt> {
    let (q, r) = h.div_rem(regulator);
    if !r.is_zero() {
        return Err(Error::NonExactDivision {
            context: "class number by regulator",
        });
    }
    Ok(q)
}

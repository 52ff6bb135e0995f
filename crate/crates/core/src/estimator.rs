//! Truncated Euler-product estimation of the divisor class number.
//!
//! For K = F_q(x, y) with y^3 = GH^2 the class number satisfies
//!
//!   log h = A(K) + sum_{n >= 1} (1 / (n q^n)) sum_{nu | n} nu S_nu(n / nu),
//!
//! where A(K) = (g + 2) log q - log((q - x1)(q - x2)) collects the places at
//! infinity and S_nu(n) sums the n-th powers of the local zeta roots over the
//! monic irreducible primes of degree nu.  Truncating the series at places of
//! degree <= lambda yields an approximation E' whose tail B is bounded by an
//! explicitly computable psi, so that
//!
//!   E = [E'],   U = ceil(E' (e^psi - 1)),   |h - E| <= U.
//!
//! Three variants are provided.  `E1U1` truncates the outer sum at n = lambda
//! and bounds the whole tail.  `E2U2` keeps, for every nu <= lambda, the full
//! geometric tail over n (the inner sums telescope into logarithms of
//! 1 - q^{-k}), which shrinks the remaining error to terms of degree at
//! least lambda + 1.  `E2U3` sharpens the first tail term of `E2U2` by
//! computing the degree-(lambda + 1) coefficient contributions that are
//! already determined by the table, instead of bounding them by worst case.
//!
//! S_nu(n) is 6-periodic in n and collapses to a handful of cases: when
//! q^nu = 2 (mod 3) it vanishes for odd n and equals 2(I_nu - F_nu) for even
//! n; when q^nu = 1 (mod 3) it equals 2(I_nu - F_nu) for 3 | n and a scanned
//! constant S_nu(1) otherwise.  Here I_nu counts monic irreducibles of degree
//! nu and F_nu those dividing GH.  The only nontrivial work is the scan for
//! S_nu(1), a cubic-residuosity test of F against every monic irreducible of
//! degree nu, parallelized over index blocks.

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::residue::{divisors, irreducible_count, is_irreducible, smallest_prime_factor};
use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Candidate count above which a degree-nu character scan is refused.
pub const DEFAULT_SCAN_LIMIT: u128 = 100_000_000;

/// Floor for the working precision of the logarithmic sums, in bits.
const MIN_PRECISION_BITS: usize = 192;

/// Extra fractional bits kept beyond the integer part of E'.
const GUARD_BITS: usize = 64;

/// Candidates per parallel scan block.
const SCAN_BLOCK: u128 = 4096;

const RM: RoundingMode = RoundingMode::ToEven;

// --- estimate variants -----------------------------------------------------

/// Which truncation / tail-bound pair to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Outer truncation at n = lambda with the coarse tail bound.
    E1U1,
    /// Per-degree geometric tails summed in closed form; coarse bound on the
    /// degree > lambda remainder.
    E2U2,
    /// Same estimate as `E2U2` with the first remainder term computed from
    /// the table instead of bounded.
    E2U3,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::E1U1 => "E1U1",
            Variant::E2U2 => "E2U2",
            Variant::E2U3 => "E2U3",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E1U1" | "e1u1" => Ok(Variant::E1U1),
            "E2U2" | "e2u2" => Ok(Variant::E2U2),
            "E2U3" | "e2u3" => Ok(Variant::E2U3),
            other => Err(Error::Config(format!("unknown estimate variant `{other}`"))),
        }
    }
}

// --- the S_nu table --------------------------------------------------------

/// Everything known about the primes of one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnuRow {
    /// The degree nu.
    pub nu: usize,
    /// I_nu, the number of monic irreducibles of degree nu.
    pub irreducibles: i128,
    /// F_nu, the number of monic irreducible divisors of GH of degree nu.
    pub ramified: i128,
    /// S_nu(1); analytically zero when q^nu = 2 (mod 3).
    pub s1: i128,
    /// Whether `s1` came from a character scan (as opposed to vanishing).
    pub scanned: bool,
}

/// Power-sum data for all degrees nu <= lambda.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnuTable {
    q: u64,
    rows: Vec<SnuRow>,
}

impl SnuTable {
    /// Scans (where necessary) all degrees up to `max_nu`.  Scans run in
    /// parallel blocks; degrees whose residue fields lack cube roots of
    /// unity are filled in analytically without touching any polynomial.
    pub fn build(curve: &Curve, max_nu: usize, scan_limit: u128) -> Result<Self> {
        let field = curve.field();
        let q = field.q();
        let ramified = ramified_counts(curve.gh(), max_nu)?;
        let mut rows = Vec::with_capacity(max_nu);
        for (nu, &f_count) in ramified.iter().enumerate().skip(1) {
            let i_count = irreducible_count(field, nu)?;
            let (s1, scanned) = if curve.residue_order_mod3(nu) == 2 {
                (0, false)
            } else {
                let candidates =
                    crate::residue::pow_u128_checked(q, nu as u32).unwrap_or(u128::MAX);
                if candidates > scan_limit {
                    return Err(Error::ScanTooLarge {
                        degree: nu,
                        count: candidates,
                        limit: scan_limit,
                    });
                }
                (scan_degree(curve, nu, candidates)?, true)
            };
            rows.push(SnuRow {
                nu,
                irreducibles: i_count,
                ramified: f_count,
                s1,
                scanned,
            });
        }
        Ok(SnuTable { q, rows })
    }

    pub fn rows(&self) -> &[SnuRow] {
        &self.rows
    }

    pub fn max_nu(&self) -> usize {
        self.rows.len()
    }

    /// S_nu(n) for any n >= 1, resolved by 6-periodicity and the congruence
    /// class of q^nu mod 3.
    pub fn s_value(&self, nu: usize, n: u64) -> Result<i128> {
        assert!(n >= 1);
        let row = self
            .rows
            .get(nu - 1)
            .ok_or_else(|| Error::Config(format!("power-sum table has no degree-{nu} row")))?;
        debug_assert_eq!(row.nu, nu);
        let k = match n % 6 {
            0 => 6,
            m => m,
        };
        let unramified_pair = 2 * (row.irreducibles - row.ramified);
        if self.q % 3 == 2 && nu % 2 == 1 {
            // Residue fields of odd degree have no cube roots of unity: the
            // local roots are (1, -1), so odd powers cancel.
            Ok(if k % 2 == 1 { 0 } else { unramified_pair })
        } else {
            // Cube roots of unity present: third powers always sum to 2 per
            // unramified prime; other powers repeat the scanned S_nu(1).
            Ok(if k % 3 == 0 { unramified_pair } else { row.s1 })
        }
    }
}

/// Number of monic irreducible divisors of `gh` of each degree 1..=max_nu,
/// by a distinct-degree gcd ladder against x^{q^nu} - x.
fn ramified_counts(gh: &Poly, max_nu: usize) -> Result<Vec<i128>> {
    let field = gh.field();
    let q = field.q();
    let mut counts = vec![0i128; max_nu + 1];
    let mut remaining = gh.clone();
    let mut frob = Poly::x(field);
    for (nu, slot) in counts.iter_mut().enumerate().take(max_nu + 1).skip(1) {
        if remaining.degree().unwrap_or(0) < nu {
            break;
        }
        frob = frob.pow_mod(q as u128, &remaining)?;
        let split = frob.sub(&Poly::x(field)).gcd(&remaining);
        if let Some(d) = split.degree() {
            if d > 0 {
                // All factors of degree properly dividing nu were removed in
                // earlier rounds, so the gcd is a product of degree-nu primes.
                debug_assert_eq!(d % nu, 0);
                *slot = (d / nu) as i128;
                remaining = remaining.div_exact(&split, "distinct-degree factor removal")?;
                if remaining.degree().unwrap_or(0) > 0 {
                    frob = frob.rem(&remaining)?;
                }
            }
        }
    }
    Ok(counts)
}

/// Sum of z1 + z2 over the monic irreducibles of degree `nu` whose
/// enumeration index lies in `block`.  Blocks partition [0, q^nu) and are
/// summed independently; ramified primes contribute zero by themselves so no
/// filtering against GH is needed.
pub fn s_scan(curve: &Curve, nu: usize, block: Range<u128>) -> Result<i128> {
    let field = curve.field();
    let mut total = 0i128;
    for index in block {
        let p = Poly::monic_by_index(field, nu, index);
        if !is_irreducible(&p) {
            continue;
        }
        total += curve.z_power_sum(&p, 1)? as i128;
    }
    Ok(total)
}

/// Full S_nu(1) scan over all q^nu monic candidates, in parallel blocks.
fn scan_degree(curve: &Curve, nu: usize, candidates: u128) -> Result<i128> {
    let block_count = candidates.div_ceil(SCAN_BLOCK);
    let partials: Result<Vec<i128>> = (0..block_count)
        .into_par_iter()
        .map(|b| {
            let lo = b * SCAN_BLOCK;
            let hi = (lo + SCAN_BLOCK).min(candidates);
            s_scan(curve, nu, lo..hi)
        })
        .collect();
    Ok(partials?.into_iter().sum())
}

// --- high-precision real context -------------------------------------------

/// Working context for the logarithmic sums: a fixed precision, a rounding
/// mode and the shared constants cache required by ln/exp.
struct Real {
    p: usize,
    cc: Consts,
}

impl Real {
    fn new(p: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::GuardExceeded {
            where_: "estimator constants cache",
            detail: format!("{e:?}"),
        })?;
        Ok(Real { p, cc })
    }

    fn int(&self, v: i128) -> BigFloat {
        BigFloat::from_i128(v, self.p)
    }

    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    fn ratio(&self, num: i128, den: i128) -> BigFloat {
        self.div(&self.int(num), &self.int(den))
    }

    fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }

    fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, RM, &mut self.cc)
    }

    fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        a.powi(n, self.p, RM)
    }

    /// q^{-k} for integer k >= 1.
    fn neg_power(&self, base: &BigFloat, k: usize) -> BigFloat {
        self.div(&self.int(1), &self.powi(base, k))
    }

    /// ln(1 - base^{-k}), computed from the small quantity directly so the
    /// cancellation happens at full precision.
    fn ln_one_minus_neg_power(&mut self, base: &BigFloat, k: usize) -> BigFloat {
        let u = self.neg_power(base, k);
        let one_minus = self.sub(&self.int(1), &u);
        self.ln(&one_minus)
    }
}

/// Integer value of an integral BigFloat (as produced by floor/ceil).
fn integral_to_bigint(x: &BigFloat) -> Result<BigInt> {
    if x.is_zero() {
        return Ok(BigInt::zero());
    }
    let (words, _bits, sign, exponent, _inexact) = x.as_raw_parts().ok_or(Error::GuardExceeded {
        where_: "estimator rounding",
        detail: "non-finite value while extracting an integer".into(),
    })?;
    let mut v = BigInt::zero();
    for &w in words.iter().rev() {
        v = (v << 64) | BigInt::from(w);
    }
    let shift = words.len() as i64 * 64 - exponent as i64;
    let v = if shift >= 0 {
        v >> shift
    } else {
        v << (-shift) as usize
    };
    Ok(if sign == Sign::Neg { -v } else { v })
}

/// Nearest integer of a nonnegative value (ties round up).
fn round_nearest(x: &BigFloat, r: &Real) -> Result<BigInt> {
    let half = r.ratio(1, 2);
    integral_to_bigint(&r.add(x, &half).floor())
}

fn round_up(x: &BigFloat) -> Result<BigInt> {
    integral_to_bigint(&x.ceil())
}

/// Low-precision view of a BigFloat, for reporting only.
fn approx_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _bits, sign, exponent, _inexact)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let mut mant = 0.0f64;
    for &w in &words[words.len().saturating_sub(2)..] {
        mant = mant / 18_446_744_073_709_551_616.0 + w as f64;
    }
    // The top word carries the leading 1 of the mantissa: value = 0.m * 2^e.
    let val = mant * (exponent as f64 - 64.0).exp2();
    if sign == Sign::Neg {
        -val
    } else {
        val
    }
}

// --- the estimate -----------------------------------------------------------

/// A class-number estimate E with rigorous error bound U: |h - E| <= U.
#[derive(Clone, Debug)]
pub struct Estimate {
    /// The variant actually computed (may differ from the request when
    /// lambda = 0 forces the fallback).
    pub variant: Variant,
    pub lambda: usize,
    /// log E', the truncated series.
    pub log_e: BigFloat,
    /// The tail bound psi, so that U = ceil(E' (e^psi - 1)).
    pub psi: BigFloat,
    pub e_value: BigInt,
    pub u_bound: BigInt,
    /// Whether 2(E - U) > E + U, i.e. the interval [E - U, E + U] is short
    /// enough that it contains at most one multiple of anything >= E - U.
    pub interval_ok: bool,
    pub warnings: Vec<String>,
    pub table: SnuTable,
}

impl Estimate {
    pub fn lower(&self) -> BigInt {
        &self.e_value - &self.u_bound
    }

    pub fn upper(&self) -> BigInt {
        &self.e_value + &self.u_bound
    }

    pub fn contains(&self, h: &BigInt) -> bool {
        *h >= self.lower() && *h <= self.upper()
    }

    /// |h - E| / U, the headline accuracy diagnostic.
    pub fn ratio(&self, h: &BigInt) -> f64 {
        let num = (h - &self.e_value).abs();
        num.to_f64().unwrap_or(f64::INFINITY) / self.u_bound.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn log_e_approx(&self) -> f64 {
        approx_f64(&self.log_e)
    }

    pub fn psi_approx(&self) -> f64 {
        approx_f64(&self.psi)
    }
}

/// Computes the estimate with default scan limit and precision.
pub fn estimate(curve: &Curve, variant: Variant, lambda_override: Option<usize>) -> Result<Estimate> {
    estimate_with(curve, variant, lambda_override, DEFAULT_SCAN_LIMIT, 0)
}

/// Full-control entry point: `extra_precision_bits` widens the working
/// precision beyond the default (used to verify that E and U are stable
/// under precision doubling).
pub fn estimate_with(
    curve: &Curve,
    variant: Variant,
    lambda_override: Option<usize>,
    scan_limit: u128,
    extra_precision_bits: usize,
) -> Result<Estimate> {
    let lambda = lambda_override.unwrap_or_else(|| curve.lambda());
    let mut warnings = Vec::new();
    let variant = if lambda == 0 && variant != Variant::E1U1 {
        warnings.push(format!(
            "lambda = 0 leaves no finite-place tail data for {variant}; falling back to E1U1"
        ));
        Variant::E1U1
    } else {
        variant
    };

    let table = SnuTable::build(curve, lambda, scan_limit)?;
    let mut r = Real::new(precision_bits(curve) + extra_precision_bits)?;

    let q = r.int(curve.q() as i128);
    let sqrt_q = q.sqrt(r.p, RM);
    let g = curve.genus();

    let log_e = match variant {
        Variant::E1U1 => log_e1_prime(curve, &table, lambda, &q, &mut r)?,
        Variant::E2U2 | Variant::E2U3 => log_e2_prime(curve, &table, lambda, &q, &mut r)?,
    };
    let psi = match variant {
        Variant::E1U1 => psi1(g, lambda, &q, &sqrt_q, &mut r),
        Variant::E2U2 => psi2(g, lambda, &q, &sqrt_q, &mut r),
        Variant::E2U3 => psi3(g, lambda, &table, &q, &sqrt_q, &mut r)?,
    };

    let e_prime = r.exp(&log_e);
    let psi_exp = r.exp(&psi);
    let growth = r.sub(&psi_exp, &r.int(1));
    let u_real = r.mul(&e_prime, &growth);
    if e_prime.is_nan() || u_real.is_nan() {
        return Err(Error::GuardExceeded {
            where_: "estimator precision",
            detail: "series assembly produced a non-finite value".into(),
        });
    }
    let e_value = round_nearest(&e_prime, &r)?;
    let u_bound = round_up(&u_real)?.max(BigInt::from(1));
    let interval_ok = BigInt::from(2) * (&e_value - &u_bound) > &e_value + &u_bound;

    Ok(Estimate {
        variant,
        lambda,
        log_e,
        psi,
        e_value,
        u_bound,
        interval_ok,
        warnings,
        table,
    })
}

/// Working precision: enough bits for the integer part of E' (roughly
/// q^{g+2}) plus a fixed fractional guard.
fn precision_bits(curve: &Curve) -> usize {
    let q_bits = 64 - curve.q().leading_zeros() as usize;
    let p = (curve.genus() + 2) * q_bits + GUARD_BITS;
    p.next_multiple_of(64).max(MIN_PRECISION_BITS)
}

/// A(K) = (g + 2) ln q - ln((q - x1)(q - x2)), the infinite-place part.
fn a_constant(curve: &Curve, q: &BigFloat, r: &mut Real) -> BigFloat {
    let (x1, x2) = curve.signature().x_pair();
    let qi = curve.q() as i128;
    let infinite = (qi - x1 as i128) * (qi - x2 as i128);
    let ln_q = r.ln(q);
    let lhs = r.mul(&r.int(curve.genus() as i128 + 2), &ln_q);
    let ln_inf = r.ln(&r.int(infinite));
    r.sub(&lhs, &ln_inf)
}

/// log E1'(lambda) = A(K) + sum_{n=1}^{lambda} (1/(n q^n)) sum_{nu | n} nu S_nu(n/nu).
fn log_e1_prime(
    curve: &Curve,
    table: &SnuTable,
    lambda: usize,
    q: &BigFloat,
    r: &mut Real,
) -> Result<BigFloat> {
    let mut acc = a_constant(curve, q, r);
    for n in 1..=lambda {
        let mut inner = 0i128;
        for nu in divisors(n as u64) {
            inner += nu as i128 * table.s_value(nu as usize, n as u64 / nu)?;
        }
        let denom = r.mul(&r.int(n as i128), &r.powi(q, n));
        let term = r.div(&r.int(inner), &denom);
        acc = r.add(&acc, &term);
    }
    Ok(acc)
}

/// log E2'(lambda): the same series with the full tail over n retained for
/// every degree nu <= lambda, in closed logarithmic form.  The shape depends
/// on q mod 3 because S_nu(n) vanishes for odd n when q^nu = 2 (mod 3).
fn log_e2_prime(
    curve: &Curve,
    table: &SnuTable,
    lambda: usize,
    q: &BigFloat,
    r: &mut Real,
) -> Result<BigFloat> {
    let mut acc = a_constant(curve, q, r);
    if curve.q() % 3 == 1 {
        // Every power of q is 1 mod 3: per degree nu the powers n with
        // 3 | n contribute 2(I - F) and the rest contribute S_nu(1), which
        // telescopes into two logarithms.
        for nu in 1..=lambda {
            let s1 = table.s_value(nu, 1)?;
            let s3 = table.s_value(nu, 3)?;
            debug_assert_eq!((s1 - s3) % 3, 0);
            let tail_all = r.ln_one_minus_neg_power(q, nu);
            let tail_cubes = r.ln_one_minus_neg_power(q, 3 * nu);
            let t1 = r.mul(&r.int(-s1), &tail_all);
            let t2 = r.mul(&r.int((s1 - s3) / 3), &tail_cubes);
            acc = r.add(&acc, &r.add(&t1, &t2));
        }
    } else {
        // Even degrees behave as above; odd degrees have S_nu(odd) = 0 so
        // only the even powers survive, telescoping with exponent 2 nu.
        for m in 1..=lambda / 2 {
            let nu = 2 * m;
            let s1 = table.s_value(nu, 1)?;
            let s3 = table.s_value(nu, 3)?;
            debug_assert_eq!((s1 - s3) % 3, 0);
            let tail_all = r.ln_one_minus_neg_power(q, nu);
            let tail_cubes = r.ln_one_minus_neg_power(q, 3 * nu);
            let t1 = r.mul(&r.int(-s1), &tail_all);
            let t2 = r.mul(&r.int((s1 - s3) / 3), &tail_cubes);
            acc = r.add(&acc, &r.add(&t1, &t2));
        }
        for m in 1..=lambda.div_ceil(2) {
            let nu = 2 * m - 1;
            let s1 = table.s_value(nu, 1)?;
            let s2 = table.s_value(nu, 2)?;
            debug_assert_eq!(s1, 0);
            debug_assert_eq!((s1 - s2) % 2, 0);
            let tail_all = r.ln_one_minus_neg_power(q, nu);
            let tail_squares = r.ln_one_minus_neg_power(q, 2 * nu);
            let t1 = r.mul(&r.int(-s1), &tail_all);
            let t2 = r.mul(&r.int((s1 - s2) / 2), &tail_squares);
            acc = r.add(&acc, &r.add(&t1, &t2));
        }
    }
    Ok(acc)
}

/// Tail bound for the outer truncation: what remains of the series past
/// n = lambda, bounded degree by degree via the Hasse-Weil envelope.
fn psi1(g: usize, lambda: usize, q: &BigFloat, sqrt_q: &BigFloat, r: &mut Real) -> BigFloat {
    // ln(sqrt(q) / (sqrt(q) - 1)) = -ln(1 - 1/sqrt(q)), and likewise for q.
    let full_half = r.ln_one_minus_neg_power(sqrt_q, 1).neg();
    let full_whole = r.ln_one_minus_neg_power(q, 1).neg();
    let mut partial_half = BigFloat::from_i8(0, r.p);
    let mut partial_whole = BigFloat::from_i8(0, r.p);
    for n in 1..=lambda {
        let nf = r.int(n as i128);
        partial_half = r.add(&partial_half, &r.div(&r.int(1), &r.mul(&nf, &r.powi(sqrt_q, n))));
        partial_whole = r.add(&partial_whole, &r.div(&r.int(1), &r.mul(&nf, &r.powi(q, n))));
    }
    let genus_part = r.mul(&r.int(2 * g as i128), &r.sub(&full_half, &partial_half));
    let unit_part = r.mul(&r.int(2), &r.sub(&full_whole, &partial_whole));
    r.add(&genus_part, &unit_part)
}

/// The two closing terms shared by the degree-restricted tail bounds: the
/// degree >= lambda + 2 remainder, split along the smallest prime factor l
/// of lambda + 1.
fn psi_shared_tail(
    g: usize,
    lambda: usize,
    l: usize,
    q: &BigFloat,
    sqrt_q: &BigFloat,
    r: &mut Real,
) -> BigFloat {
    let one = r.int(1);
    // (2g / (lambda + 2)) * (sqrt(q) / (sqrt(q) - 1)) * q^{-(lambda+2)/2}
    let t3 = {
        let factor = r.div(sqrt_q, &r.sub(sqrt_q, &one));
        let decay = r.neg_power(sqrt_q, lambda + 2);
        let scale = r.ratio(2 * g as i128, lambda as i128 + 2);
        r.mul(&scale, &r.mul(&factor, &decay))
    };
    // (4 / (lambda + 2)) * (q / (q - 1)) * (w / (w - 1)) * w^{-(lambda+2)}
    // with w = q^{(l-1)/l}.
    let t4 = {
        let ln_q = r.ln(q);
        let exponent = r.mul(&r.ratio(l as i128 - 1, l as i128), &ln_q);
        let w = r.exp(&exponent);
        let factor_q = r.div(q, &r.sub(q, &one));
        let factor_w = r.div(&w, &r.sub(&w, &one));
        let decay = r.neg_power(&w, lambda + 2);
        let scale = r.ratio(4, lambda as i128 + 2);
        r.mul(&scale, &r.mul(&factor_q, &r.mul(&factor_w, &decay)))
    };
    r.add(&t3, &t4)
}

/// Tail bound for the degree-restricted series: all contributions come from
/// primes of degree > lambda, whose leading block (degree exactly
/// lambda + 1) is bounded by worst case.
fn psi2(g: usize, lambda: usize, q: &BigFloat, sqrt_q: &BigFloat, r: &mut Real) -> BigFloat {
    let l = smallest_prime_factor(lambda as u64 + 1) as usize;
    let lead = {
        // (2 / (lambda+1)) (g q^{-(lambda+1)/2} + q^{-(lambda+1)})
        let a = r.mul(&r.int(g as i128), &r.neg_power(sqrt_q, lambda + 1));
        let b = r.neg_power(q, lambda + 1);
        r.mul(&r.ratio(2, lambda as i128 + 1), &r.add(&a, &b))
    };
    let subleading = {
        // (2q / ((q-1)(lambda+1))) q^{-(lambda+1)} (q^{(lambda+1)/l} - 1)
        let one = r.int(1);
        let factor = r.div(&r.mul(&r.int(2), q), &r.mul(&r.sub(q, &one), &r.int(lambda as i128 + 1)));
        let decay = r.neg_power(q, lambda + 1);
        let burst = r.sub(&r.powi(q, (lambda + 1) / l), &one);
        r.mul(&factor, &r.mul(&decay, &burst))
    };
    let tail = psi_shared_tail(g, lambda, l, q, sqrt_q, r);
    r.add(&r.add(&lead, &subleading), &tail)
}

/// Sharpened tail bound: the degree-(lambda + 1) coefficient of the series
/// is partly determined by lower-degree power sums already in the table;
/// only the genuinely unknown part is bounded.
fn psi3(
    g: usize,
    lambda: usize,
    table: &SnuTable,
    q: &BigFloat,
    sqrt_q: &BigFloat,
    r: &mut Real,
) -> Result<BigFloat> {
    let l = smallest_prime_factor(lambda as u64 + 1) as usize;
    let m = lambda as u64 + 1;
    let mut known = 0i128;
    for nu in divisors(m) {
        if nu != m {
            known += nu as i128 * table.s_value(nu as usize, m / nu)?;
        }
    }
    let lead = {
        let scale = r.ratio(2 * g as i128, lambda as i128 + 1);
        r.mul(&scale, &r.neg_power(sqrt_q, lambda + 1))
    };
    let corrected = {
        let decay = r.div(&r.neg_power(q, lambda + 1), &r.int(lambda as i128 + 1));
        r.mul(&decay, &r.int(2 + known.abs()))
    };
    let tail = psi_shared_tail(g, lambda, l, q, sqrt_q, r);
    Ok(r.add(&r.add(&lead, &corrected), &tail))
}

// --- tests ------------------------------------------------------------------

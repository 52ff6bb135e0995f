//! Residue rings F_q[x]/(P) and extension fields F_{q^k}.
//!
//! Provides irreducibility testing (Rabin's criterion via iterated Frobenius),
//! irreducible counting I_nu = (1/nu) sum_{d | nu} mu(nu/d) q^d, deterministic
//! extension-field construction, and cube-root extraction in residue fields.
//! Cube roots drive prime-ideal construction: a root r of t^3 = F mod P picks
//! out the degree-one prime above P, and the quadratic cofactor of t^3 - F
//! picks out its complement in the partially split case.

use crate::error::{Error, Result};
use crate::field::{inv_mod_u64, Fq};
use crate::poly::Poly;
use std::cmp::Ordering;

// --- elementary number theory on u64 ---

/// Moebius function.
pub fn moebius(mut n: u64) -> i64 {
    assert!(n >= 1);
    let mut factors = 0;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            factors += 1;
        }
        p += 1;
    }
    if n > 1 {
        factors += 1;
    }
    if factors % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sorted list of divisors.
pub fn divisors(n: u64) -> Vec<u64> {
    assert!(n >= 1);
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Smallest prime factor of n >= 2.
pub fn smallest_prime_factor(n: u64) -> u64 {
    assert!(n >= 2);
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += 1;
    }
    n
}

/// Number of monic irreducibles of degree `deg` over F_q, exactly.
pub fn irreducible_count(field: Fq, deg: usize) -> Result<i128> {
    let q = field.q() as i128;
    let mut total: i128 = 0;
    for d in divisors(deg as u64) {
        let mut qd: i128 = 1;
        for _ in 0..d {
            qd = qd.checked_mul(q).ok_or(Error::ScanTooLarge {
                degree: deg,
                count: u128::MAX,
                limit: u128::MAX,
            })?;
        }
        total = total
            .checked_add(moebius(deg as u64 / d) as i128 * qd)
            .ok_or(Error::ScanTooLarge {
                degree: deg,
                count: u128::MAX,
                limit: u128::MAX,
            })?;
    }
    Ok(total / deg as i128)
}

// --- deterministic polynomial ordering for canonical tie-breaks ---

/// Stable total order on polynomials over one field: by degree, then by
/// coefficient vector from the constant term up. Used wherever a canonical
/// representative must be selected; the specific order carries no meaning.
pub fn poly_cmp(a: &Poly, b: &Poly) -> Ordering {
    a.coeffs()
        .len()
        .cmp(&b.coeffs().len())
        .then_with(|| a.coeffs().cmp(b.coeffs()))
}

// --- irreducibility ---

/// Rabin's test: P of degree d >= 1 is irreducible iff x^(q^d) = x mod P and
/// gcd(x^(q^(d/r)) - x, P) is constant for every prime r dividing d.
pub fn is_irreducible(p: &Poly) -> bool {
    let d = match p.degree() {
        None | Some(0) => return false,
        Some(d) => d,
    };
    if d == 1 {
        return true;
    }
    let field = p.field();
    let q = field.q() as u128;
    let x = Poly::x(field);
    // Proper-divisor checkpoints d/r for prime r | d.
    let mut checkpoints: Vec<usize> = divisors(d as u64)
        .iter()
        .filter(|&&r| r > 1 && crate::field::is_prime_u64(r))
        .map(|&r| d / r as usize)
        .collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut t = x.clone();
    let mut next = 0usize;
    for j in 1..=d {
        t = match t.pow_mod(q, p) {
            Ok(v) => v,
            Err(_) => return false,
        };
        if next < checkpoints.len() && checkpoints[next] == j {
            next += 1;
            if !t.sub(&x).gcd(p).is_constant() {
                return false;
            }
        }
    }
    t == x.rem(p).unwrap_or_else(|_| x.clone())
}

// --- cube roots in F_q[x]/(P) ---

/// All solutions of t^3 = a in the residue field F_q[x]/(P), P irreducible.
/// Returns 0, 1, or 3 roots, sorted by [`poly_cmp`]. Errors if q^deg(P)
/// overflows the exponent arithmetic.
pub fn cube_roots_mod(a: &Poly, p: &Poly) -> Result<Vec<Poly>> {
    let field = p.field();
    let d = p.degree().expect("modulus has positive degree");
    let qd = pow_u128_checked(field.q(), d as u32).ok_or(Error::ScanTooLarge {
        degree: d,
        count: u128::MAX,
        limit: u128::MAX,
    })?;
    let a = a.rem(p)?;
    if a.is_zero() {
        return Ok(vec![Poly::zero(field)]);
    }
    if qd % 3 == 2 {
        // Cubing is a bijection on the residue field.
        let r = a.pow_mod((2 * qd - 1) / 3, p)?;
        debug_assert!(r.pow_mod(3, p).unwrap() == a);
        return Ok(vec![r]);
    }
    // q^d = 1 mod 3: cubes form the index-3 subgroup.
    if !a.pow_mod((qd - 1) / 3, p)?.is_one() {
        return Ok(Vec::new());
    }
    let r = cube_root_amm_mod(&a, p, qd)?;
    debug_assert!(r.pow_mod(3, p).unwrap() == a);
    // Remaining roots differ by the primitive cube roots of unity.
    let omega = unity_cube_root_mod(p, qd)?;
    let mut roots = vec![
        r.clone(),
        r.mul_mod(&omega, p)?,
        r.mul_mod(&omega.mul_mod(&omega, p)?, p)?,
    ];
    roots.sort_by(poly_cmp);
    Ok(roots)
}

/// Residue-class representative with the given enumeration index: the base-q
/// digits of `index` are the coefficients (constant term least significant).
pub fn residue_by_index(field: Fq, deg_bound: usize, index: u128) -> Poly {
    let q = field.q() as u128;
    let mut coeffs = Vec::with_capacity(deg_bound);
    let mut rem = index;
    for _ in 0..deg_bound {
        coeffs.push((rem % q) as u64);
        rem /= q;
    }
    debug_assert_eq!(rem, 0);
    Poly::from_coeffs(field, coeffs)
}

pub(crate) fn pow_u128_checked(base: u64, exp: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

/// A non-cube in F_q[x]/(P) (requires q^d = 1 mod 3), deterministic.
fn non_cube_mod(p: &Poly, qd: u128) -> Result<Poly> {
    let field = p.field();
    let d = p.degree().unwrap();
    let e = (qd - 1) / 3;
    // Walk residues in index order; non-cubes have density 2/3.
    for idx in 2..qd {
        let c = residue_by_index(field, d, idx);
        if c.is_zero() {
            continue;
        }
        if !c.pow_mod(e, p)?.is_one() {
            return Ok(c);
        }
    }
    unreachable!("two thirds of the residue field are non-cubes");
}

/// A primitive cube root of unity in F_q[x]/(P), q^d = 1 mod 3.
fn unity_cube_root_mod(p: &Poly, qd: u128) -> Result<Poly> {
    let b = non_cube_mod(p, qd)?;
    let w = b.pow_mod((qd - 1) / 3, p)?;
    debug_assert!(!w.is_one() && w.pow_mod(3, p).unwrap().is_one());
    Ok(w)
}

/// One cube root of a known cube in F_q[x]/(P) with q^d = 1 mod 3:
/// Adleman-Manders-Miller digit descent in the 3-Sylow subgroup.
fn cube_root_amm_mod(a: &Poly, p: &Poly, qd: u128) -> Result<Poly> {
    let mut t = qd - 1;
    let mut s = 0u32;
    while t.is_multiple_of(3) {
        t /= 3;
        s += 1;
    }
    let g = non_cube_mod(p, qd)?.pow_mod(t, p)?;
    // 3m = 1 mod t kills the prime-to-3 part; the remaining error
    // x^3 * a^(-1) has order dividing 3^(s-1) because a is a cube.
    let m = inv_mod_u128(3 % t, t);
    let mut x = a.pow_mod(m, p)?;
    let a_inv = invert_mod(a, p)?;
    let mut err = x.pow_mod(3, p)?.mul_mod(&a_inv, p)?;
    while !err.is_one() {
        let mut k = 0u32;
        let mut e = err.clone();
        while !e.is_one() {
            e = e.pow_mod(3, p)?;
            k += 1;
        }
        debug_assert!(k < s);
        let gk = g.pow_mod(pow3(s - k), p)?;
        let step = g.pow_mod(pow3(s - k - 1), p)?;
        let mut fixed = false;
        for j in 1..3u128 {
            let cand = err.mul_mod(&gk.pow_mod(j, p)?, p)?;
            let mut c = cand.clone();
            for _ in 0..k.saturating_sub(1) {
                c = c.pow_mod(3, p)?;
            }
            if c.is_one() {
                x = x.mul_mod(&step.pow_mod(j, p)?, p)?;
                err = cand;
                fixed = true;
                break;
            }
        }
        debug_assert!(fixed);
    }
    Ok(x)
}

fn pow3(e: u32) -> u128 {
    3u128.pow(e)
}

fn inv_mod_u128(a: u128, m: u128) -> u128 {
    // Same xgcd as the u64 version; moduli here stay far below 2^127.
    if m <= u64::MAX as u128 && a <= u64::MAX as u128 {
        return inv_mod_u64(a as u64, m as u64).expect("coprime") as u128;
    }
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let qt = old_r / r;
        (old_r, r) = (r, old_r - qt * r);
        (old_s, s) = (s, old_s - qt * s);
    }
    assert_eq!(old_r.unsigned_abs(), 1);
    let inv = if old_r == -1 { -old_s } else { old_s };
    inv.rem_euclid(m as i128) as u128
}

/// Inverse of a nonzero residue mod irreducible P.
pub fn invert_mod(a: &Poly, p: &Poly) -> Result<Poly> {
    let a = a.rem(p)?;
    if a.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let (g, s, _) = a.xgcd(p);
    debug_assert!(g.is_one(), "modulus must be irreducible / coprime");
    s.rem(p)
}

// --- extension fields ---

/// F_{q^k} realized as F_q[t]/(m(t)) with m the first irreducible monic of
/// degree k in index order. Elements are reduced polynomials in t.
#[derive(Clone, Debug)]
pub struct ExtField {
    base: Fq,
    k: usize,
    modulus: Poly,
    order: u128,
}

impl ExtField {
    /// Builds F_{q^k}; errors if q^k exceeds `max_order` (enumeration guard).
    pub fn new(base: Fq, k: usize, max_order: u128) -> Result<Self> {
        assert!(k >= 1);
        let order = pow_u128_checked(base.q(), k as u32).ok_or(Error::OracleTooLarge {
            size: u128::MAX,
            limit: max_order,
        })?;
        if order > max_order {
            return Err(Error::OracleTooLarge { size: order, limit: max_order });
        }
        let modulus = (0..)
            .map(|idx| Poly::monic_by_index(base, k, idx))
            .find(is_irreducible)
            .expect("irreducibles of every degree exist");
        Ok(ExtField { base, k, modulus, order })
    }

    pub fn base(&self) -> Fq {
        self.base
    }

    pub fn order(&self) -> u128 {
        self.order
    }

    pub fn modulus(&self) -> &Poly {
        &self.modulus
    }

    /// Element with the given index in `[0, q^k)`.
    pub fn elem(&self, index: u128) -> Poly {
        residue_by_index(self.base, self.k, index)
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        a.mul_mod(b, &self.modulus).expect("modulus nonzero")
    }

    /// Evaluates a polynomial F over F_q at an extension element (Horner).
    pub fn eval_base_poly(&self, f: &Poly, at: &Poly) -> Poly {
        let mut acc = Poly::zero(self.base);
        for i in (0..f.coeffs().len()).rev() {
            acc = self.mul(&acc, at);
            acc = acc.add(&Poly::constant(self.base, f.coeff(i)));
        }
        acc
    }

    /// Whether a nonzero element is a cube in F_{q^k}.
    pub fn is_cube(&self, a: &Poly) -> bool {
        debug_assert!(!a.is_zero());
        if self.order % 3 == 2 {
            return true;
        }
        a.pow_mod((self.order - 1) / 3, &self.modulus)
            .expect("modulus nonzero")
            .is_one()
    }
}

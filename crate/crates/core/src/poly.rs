//! Dense univariate polynomial arithmetic over F_q.
//!
//! Coefficients are stored constant-first with no trailing zeros, so every
//! polynomial has exactly one representation and derived equality/hashing are
//! structural. The zero polynomial is the empty vector and has degree `None`.
//!
//! Binary operations require both operands to live in the same field; a
//! mismatch is a caller bug and panics via `assert!`. Public boundaries that
//! accept untrusted data (curve construction, config parsing) validate the
//! field once and return [`Error::MixedField`](crate::error::Error) there.

use crate::error::{Error, Result};
use crate::field::Fq;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly {
    field: Fq,
    coeffs: Vec<u64>,
}

impl Poly {
    // --- constructors ---

    pub fn zero(field: Fq) -> Self {
        Poly { field, coeffs: Vec::new() }
    }

    pub fn one(field: Fq) -> Self {
        Poly::constant(field, 1)
    }

    /// The monomial x.
    pub fn x(field: Fq) -> Self {
        Poly { field, coeffs: vec![0, 1] }
    }

    pub fn constant(field: Fq, c: u64) -> Self {
        let c = field.reduce_u64(c);
        if c == 0 {
            Poly::zero(field)
        } else {
            Poly { field, coeffs: vec![c] }
        }
    }

    /// c * x^k.
    pub fn monomial(field: Fq, c: u64, k: usize) -> Self {
        let c = field.reduce_u64(c);
        if c == 0 {
            return Poly::zero(field);
        }
        let mut coeffs = vec![0; k + 1];
        coeffs[k] = c;
        Poly { field, coeffs }
    }

    /// From constant-first coefficients; reduces mod q and trims.
    pub fn from_coeffs(field: Fq, mut coeffs: Vec<u64>) -> Self {
        for c in &mut coeffs {
            *c = field.reduce_u64(*c);
        }
        let mut p = Poly { field, coeffs };
        p.trim();
        p
    }

    /// From possibly negative coefficients, constant-first.
    pub fn from_signed(field: Fq, coeffs: &[i64]) -> Self {
        Poly::from_coeffs(field, coeffs.iter().map(|&c| field.reduce_i64(c)).collect())
    }

    /// The monic degree-`deg` polynomial whose lower coefficients are the
    /// base-q digits of `index` (constant term = least significant digit).
    /// Enumerating `index` over `[0, q^deg)` walks all monic polynomials of
    /// that degree exactly once.
    pub fn monic_by_index(field: Fq, deg: usize, index: u128) -> Self {
        let q = field.q() as u128;
        let mut coeffs = Vec::with_capacity(deg + 1);
        let mut rem = index;
        for _ in 0..deg {
            coeffs.push((rem % q) as u64);
            rem /= q;
        }
        debug_assert_eq!(rem, 0, "index out of range for degree");
        coeffs.push(1);
        Poly { field, coeffs }
    }

    /// Uniformly random monic polynomial of exact degree `deg`.
    pub fn random_monic<R: rand::Rng + ?Sized>(field: Fq, deg: usize, rng: &mut R) -> Self {
        let mut coeffs: Vec<u64> =
            (0..deg).map(|_| rng.gen_range(0..field.q())).collect();
        coeffs.push(1);
        Poly { field, coeffs }
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    // --- accessors ---

    #[inline]
    pub fn field(&self) -> Fq {
        self.field
    }

    /// Degree, or `None` for the zero polynomial.
    #[inline]
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Leading coefficient (0 for the zero polynomial).
    #[inline]
    pub fn leading(&self) -> u64 {
        *self.coeffs.last().unwrap_or(&0)
    }

    /// Coefficient of x^i (0 beyond the degree).
    #[inline]
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    fn check_field(&self, other: &Poly) {
        assert!(
            self.field == other.field,
            "mixed-field polynomial operands ({} vs {})",
            self.field.q(),
            other.field.q()
        );
    }

    // --- ring operations ---

    pub fn add(&self, other: &Poly) -> Poly {
        self.check_field(other);
        let f = self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(f.add(self.coeff(i), other.coeff(i)));
        }
        let mut p = Poly { field: f, coeffs };
        p.trim();
        p
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.check_field(other);
        let f = self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(f.sub(self.coeff(i), other.coeff(i)));
        }
        let mut p = Poly { field: f, coeffs };
        p.trim();
        p
    }

    pub fn neg(&self) -> Poly {
        let f = self.field;
        Poly {
            field: f,
            coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check_field(other);
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.field);
        }
        let q = self.field.q() as u128;
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut acc = vec![0u128; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let cell = &mut acc[i + j];
                *cell += a as u128 * b as u128;
                // Lazy reduction: keep partial sums below 2^127.
                if *cell >= 1 << 126 {
                    *cell %= q;
                }
            }
        }
        let coeffs = acc.into_iter().map(|c| (c % q) as u64).collect();
        // Leading coefficient is a product of nonzero elements: no trim needed,
        // but trim anyway to keep the invariant locally checkable.
        let mut p = Poly { field: self.field, coeffs };
        p.trim();
        p
    }

    pub fn scale(&self, c: u64) -> Poly {
        let f = self.field;
        let c = f.reduce_u64(c);
        if c == 0 {
            return Poly::zero(f);
        }
        Poly {
            field: f,
            coeffs: self.coeffs.iter().map(|&a| f.mul(a, c)).collect(),
        }
    }

    /// self * x^k.
    pub fn mul_xk(&self, k: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { field: self.field, coeffs }
    }

    /// Substitution x -> alpha * x.
    pub fn scale_arg(&self, alpha: u64) -> Poly {
        let f = self.field;
        let mut pow = 1u64;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let v = f.mul(c, pow);
                pow = f.mul(pow, f.reduce_u64(alpha));
                v
            })
            .collect();
        let mut p = Poly { field: f, coeffs };
        p.trim();
        p
    }

    /// x^n * self(1/x) for n >= deg(self): coefficient reversal padded to
    /// length n+1.
    pub fn reverse(&self, n: usize) -> Poly {
        assert!(self.degree().is_none_or(|d| d <= n));
        let mut coeffs = vec![0u64; n + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[n - i] = c;
        }
        let mut p = Poly { field: self.field, coeffs };
        p.trim();
        p
    }

    pub fn monic(&self) -> Poly {
        let l = self.leading();
        if l == 0 || l == 1 {
            return self.clone();
        }
        let inv = self.field.inv(l).expect("nonzero leading coefficient");
        self.scale(inv)
    }

    /// Euclidean division: self = q * div + r with deg r < deg div.
    pub fn divrem(&self, div: &Poly) -> Result<(Poly, Poly)> {
        self.check_field(div);
        if div.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = self.field;
        let dd = div.degree().unwrap();
        if self.coeffs.len() < div.coeffs.len() {
            return Ok((Poly::zero(f), self.clone()));
        }
        let lead_inv = f.inv(div.leading())?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u64; self.coeffs.len() - div.coeffs.len() + 1];
        for i in (dd..rem.len()).rev() {
            let c = rem[i];
            if c == 0 {
                continue;
            }
            let qc = f.mul(c, lead_inv);
            quot[i - dd] = qc;
            for (j, &dc) in div.coeffs.iter().enumerate() {
                rem[i - dd + j] = f.sub(rem[i - dd + j], f.mul(qc, dc));
            }
        }
        let mut qp = Poly { field: f, coeffs: quot };
        qp.trim();
        let mut rp = Poly { field: f, coeffs: rem };
        rp.trim();
        debug_assert!(rp.degree().is_none_or(|d| d < dd));
        Ok((qp, rp))
    }

    pub fn rem(&self, div: &Poly) -> Result<Poly> {
        Ok(self.divrem(div)?.1)
    }

    /// Division known to be exact; errors if a remainder appears.
    pub fn div_exact(&self, div: &Poly, context: &'static str) -> Result<Poly> {
        let (q, r) = self.divrem(div)?;
        if !r.is_zero() {
            return Err(Error::NonExactDivision { context });
        }
        Ok(q)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Poly) -> Poly {
        self.check_field(other);
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("b nonzero");
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended gcd: returns (g, s, t) with s*self + t*other = g, g monic.
    pub fn xgcd(&self, other: &Poly) -> (Poly, Poly, Poly) {
        self.check_field(other);
        let f = self.field;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (Poly::one(f), Poly::zero(f));
        let (mut t0, mut t1) = (Poly::zero(f), Poly::one(f));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1).expect("r1 nonzero");
            let s = s0.sub(&q.mul(&s1));
            let t = t0.sub(&q.mul(&t1));
            (r0, r1) = (r1, r);
            (s0, s1) = (s1, s);
            (t0, t1) = (t1, t);
        }
        // Normalize to a monic gcd.
        let l = r0.leading();
        if l > 1 {
            let inv = f.inv(l).expect("nonzero");
            r0 = r0.scale(inv);
            s0 = s0.scale(inv);
            t0 = t0.scale(inv);
        }
        debug_assert_eq!(s0.mul(self).add(&t0.mul(other)), r0);
        (r0, s0, t0)
    }

    pub fn derivative(&self) -> Poly {
        let f = self.field;
        if self.coeffs.len() <= 1 {
            return Poly::zero(f);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, &c)| f.mul(c, f.reduce_u64(i as u64 + 1)))
            .collect();
        let mut p = Poly { field: f, coeffs };
        p.trim();
        p
    }

    /// Nonzero and coprime to its derivative.
    pub fn is_squarefree(&self) -> bool {
        if self.is_zero() {
            return false;
        }
        if self.is_constant() {
            return true;
        }
        self.gcd(&self.derivative()).is_one()
    }

    pub fn eval(&self, x: u64) -> u64 {
        let f = self.field;
        let x = f.reduce_u64(x);
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = f.add(f.mul(acc, x), c);
        }
        acc
    }

    /// Small non-modular power.
    pub fn pow(&self, mut e: u32) -> Poly {
        let mut acc = Poly::one(self.field);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }

    pub fn mul_mod(&self, other: &Poly, modulus: &Poly) -> Result<Poly> {
        self.mul(other).rem(modulus)
    }

    /// self^exp mod modulus.
    pub fn pow_mod(&self, mut exp: u128, modulus: &Poly) -> Result<Poly> {
        let mut acc = Poly::one(self.field).rem(modulus)?;
        let mut b = self.rem(modulus)?;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_mod(&b, modulus)?;
            }
            b = b.mul_mod(&b, modulus)?;
            exp >>= 1;
        }
        Ok(acc)
    }

    // --- text form ---

    /// Comma-separated decimal coefficients, constant term first; the zero
    /// polynomial is "0".
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        self.coeffs
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses the `to_text` format. Out-of-range coefficients are reduced.
    pub fn parse(field: Fq, text: &str) -> Result<Poly> {
        let mut coeffs = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let v: u64 = part
                .parse()
                .map_err(|_| Error::Config(format!("bad polynomial coefficient {part:?}")))?;
            coeffs.push(v);
        }
        Ok(Poly::from_coeffs(field, coeffs))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Monic gcd of a whole slice (zero for an empty slice or all-zero input).
pub fn gcd_many(field: Fq, polys: &[&Poly]) -> Poly {
    let mut g = Poly::zero(field);
    for p in polys {
        g = g.gcd(p);
        if g.is_one() {
            break;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> Fq {
        Fq::new(7).unwrap()
    }

    #[test]
    fn construction_and_normalization() {
        let f = f7();
        let p = Poly::from_coeffs(f, vec![8, 14, 7]); // = 1 after reduction
        assert_eq!(p, Poly::one(f));
        assert!(Poly::from_coeffs(f, vec![0, 0]).is_zero());
        assert_eq!(Poly::from_signed(f, &[-1]), Poly::constant(f, 6));
    }

    #[test]
    fn divrem_roundtrip() {
        let f = f7();
        let a = Poly::from_coeffs(f, vec![3, 1, 4, 1, 5]);
        let b = Poly::from_coeffs(f, vec![2, 0, 3]);
        let (q, r) = a.divrem(&b).unwrap();
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree().unwrap() < b.degree().unwrap());
        assert!(a.divrem(&Poly::zero(f)).is_err());
    }

    #[test]
    fn xgcd_identity() {
        let f = f7();
        let a = Poly::from_coeffs(f, vec![1, 2, 1]); // (x+1)^2
        let b = Poly::from_coeffs(f, vec![6, 5, 1]); // (x+2)(x+3)
        let (g, s, t) = a.xgcd(&b);
        assert_eq!(s.mul(&a).add(&t.mul(&b)), g);
        assert!(g.is_one());
        let c = Poly::from_coeffs(f, vec![1, 1]); // x+1
        let (g2, _, _) = a.xgcd(&a.mul(&c));
        assert_eq!(g2, a.monic());
    }

    #[test]
    fn squarefree_detection() {
        let f = f7();
        let sf = Poly::from_coeffs(f, vec![1, 0, 0, 1]); // x^3+1 = (x+1)(x^2-x+1), squarefree mod 7
        assert!(sf.is_squarefree());
        let sq = Poly::from_coeffs(f, vec![1, 2, 1]);
        assert!(!sq.is_squarefree());
    }

    #[test]
    fn monic_enumeration_indexing() {
        let f = Fq::new(5).unwrap();
        // All 25 monic quadratics, no repeats.
        let mut seen = std::collections::HashSet::new();
        for idx in 0..25u128 {
            let p = Poly::monic_by_index(f, 2, idx);
            assert_eq!(p.degree(), Some(2));
            assert!(p.is_monic());
            assert!(seen.insert(p.to_text()));
        }
        assert_eq!(seen.len(), 25);
    }

    #[test]
    fn text_roundtrip() {
        let f = f7();
        let p = Poly::from_coeffs(f, vec![3, 0, 5, 1]);
        assert_eq!(p.to_text(), "3,0,5,1");
        assert_eq!(Poly::parse(f, &p.to_text()).unwrap(), p);
        assert_eq!(Poly::zero(f).to_text(), "0");
        assert_eq!(Poly::parse(f, "0").unwrap(), Poly::zero(f));
        assert!(Poly::parse(f, "1,,2").is_err());
    }

    #[test]
    fn scale_arg_and_reverse() {
        let f = f7();
        let p = Poly::from_coeffs(f, vec![2, 3, 1]); // x^2+3x+2
        let s = p.scale_arg(2); // 4x^2+6x+2
        assert_eq!(s, Poly::from_coeffs(f, vec![2, 6, 4]));
        let r = p.reverse(2); // 2x^2+3x+1
        assert_eq!(r, Poly::from_coeffs(f, vec![1, 3, 2]));
        let r4 = p.reverse(4);
        assert_eq!(r4, Poly::from_coeffs(f, vec![0, 0, 1, 3, 2]));
    }

    #[test]
    fn pow_mod_fermat() {
        // x^q = x mod P for irreducible degree-1 P; and Frobenius fixes F_q.
        let f = f7();
        let p = Poly::from_coeffs(f, vec![3, 1]);
        let x = Poly::x(f);
        assert_eq!(x.pow_mod(7, &p).unwrap(), x.rem(&p).unwrap());
    }
}

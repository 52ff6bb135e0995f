//! The purely cubic curve model y^3 = G H^2 and its basic invariants.
//!
//! K = F_q(x, y) with G, H monic, squarefree, coprime, and char F_q >= 5.
//! Writing F = G H^2 and n = deg F, the invariants carried here are:
//!
//! * genus: g = deg(GH) - 2 if 3 | n, else deg(GH) - 1;
//! * signature of the place at infinity, which controls the unit rank:
//!   totally ramified (3 does not divide n, rank 0), partially split
//!   (3 | n and q = 2 mod 3, rank 1), or totally split (3 | n and q = 1
//!   mod 3, rank 2; monic F forces the sign to be a cube, so the inert
//!   pattern cannot occur here);
//! * splitting of finite primes P: ramified iff P | GH; otherwise governed
//!   by whether F is a cube modulo P, which for q^deg(P) = 2 mod 3 always
//!   holds with a unique root (partial splitting, residue degrees 1 and 2);
//! * the local zeta data z1^n + z2^n of each finite prime, a 6-periodic
//!   integer sequence that feeds the Euler-product estimator;
//! * the truncation parameter lambda = (2g-1)/5, rounded to nearest except
//!   rounded down when g = 2 mod 5.
//!
//! `normalize` turns a model with non-monic G, H into an isomorphic monic
//! one. When 3 does not divide n, the substitution x -> s^a x with
//! a n = 2 mod 3 (s the leading coefficient of F) makes 1 + a n divisible
//! by 3, so the y-rescaling constant s^((1+an)/3) exists without any cube
//! root extraction. When 3 | n, dividing G and H by their signs works iff
//! sgn(F) is a cube in F_q; otherwise the model has an inert infinite place
//! and is rejected as unsupported.

use crate::error::{Error, Result};
use crate::field::Fq;
use crate::poly::Poly;
use crate::residue::pow_u128_checked;
use serde::{Deserialize, Serialize};

/// Splitting signature of the place at infinity.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Signature {
    /// One totally ramified infinite place; unit rank 0. ("(3,1)")
    TotallyRamified,
    /// Two infinite places of degrees 1 and 2; unit rank 1. ("(1,1;1,2)")
    PartiallySplit,
    /// Three degree-1 infinite places; unit rank 2. ("(1,1;1,1;1,1)")
    TotallySplit,
}

impl Signature {
    pub fn unit_rank(self) -> u32 {
        match self {
            Signature::TotallyRamified => 0,
            Signature::PartiallySplit => 1,
            Signature::TotallySplit => 2,
        }
    }

    /// Number of degree-one places at infinity (used by the exact oracle).
    pub fn degree_one_infinite_places(self) -> u64 {
        match self {
            Signature::TotallyRamified => 1,
            Signature::PartiallySplit => 1,
            Signature::TotallySplit => 3,
        }
    }

    /// The pair (x1, x2) entering the leading factor of the class-number
    /// approximation, log((q - x1)(q - x2)).
    pub fn x_pair(self) -> (i64, i64) {
        match self {
            Signature::TotallyRamified => (0, 0),
            Signature::PartiallySplit => (1, -1),
            Signature::TotallySplit => (1, 1),
        }
    }
}

/// Splitting type of a finite prime P of F_q[x] in the cubic extension.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Splitting {
    /// P | GH: one prime above, ramification index 3.
    Ramified,
    /// F is a cube mod P and the residue field contains the cube roots of
    /// unity: three primes of residue degree 1.
    Split,
    /// q^deg(P) = 2 mod 3: two primes, residue degrees 1 and 2.
    Partial,
    /// F is a non-cube mod P: one prime of residue degree 3.
    Inert,
}

/// A validated purely cubic curve y^3 = G H^2.
#[derive(Clone, Debug)]
pub struct Curve {
    field: Fq,
    g_part: Poly,
    h_part: Poly,
    f_full: Poly,
    gh: Poly,
    genus: usize,
    signature: Signature,
}

impl Curve {
    /// Validates the model and computes its invariants.
    pub fn new(field: Fq, g_part: Poly, h_part: Poly) -> Result<Self> {
        if g_part.field() != field || h_part.field() != field {
            return Err(Error::MixedField {
                left: field.q(),
                right: if g_part.field() != field {
                    g_part.field().q()
                } else {
                    h_part.field().q()
                },
            });
        }
        if g_part.is_zero() || h_part.is_zero() {
            return Err(Error::InvalidCurve("G and H must be nonzero".into()));
        }
        if !g_part.is_monic() || !h_part.is_monic() {
            return Err(Error::InvalidCurve(format!(
                "G and H must be monic (leading coefficients {} and {})",
                g_part.leading(),
                h_part.leading()
            )));
        }
        if !g_part.is_squarefree() {
            return Err(Error::InvalidCurve("G must be squarefree".into()));
        }
        if !h_part.is_squarefree() {
            return Err(Error::InvalidCurve("H must be squarefree".into()));
        }
        if !g_part.gcd(&h_part).is_one() {
            return Err(Error::InvalidCurve("G and H must be coprime".into()));
        }
        let gh = g_part.mul(&h_part);
        let dgh = gh.degree().unwrap();
        if dgh < 2 {
            return Err(Error::InvalidCurve(
                "deg(GH) must be at least 2 for a function field of positive genus".into(),
            ));
        }
        let f_full = g_part.mul(&h_part).mul(&h_part);
        let n = f_full.degree().unwrap();
        let signature = if !n.is_multiple_of(3) {
            Signature::TotallyRamified
        } else if field.q() % 3 == 2 {
            Signature::PartiallySplit
        } else {
            // Monic F: the sign 1 is a cube, so the infinite place splits.
            Signature::TotallySplit
        };
        let genus = if n.is_multiple_of(3) { dgh - 2 } else { dgh - 1 };
        if genus == 0 {
            return Err(Error::InvalidCurve("genus 0 model".into()));
        }
        Ok(Curve { field, g_part, h_part, f_full, gh, genus, signature })
    }

    // --- accessors ---

    pub fn field(&self) -> Fq {
        self.field
    }

    pub fn q(&self) -> u64 {
        self.field.q()
    }

    pub fn g_part(&self) -> &Poly {
        &self.g_part
    }

    pub fn h_part(&self) -> &Poly {
        &self.h_part
    }

    /// F = G H^2.
    pub fn f_full(&self) -> &Poly {
        &self.f_full
    }

    /// The ramification locus GH.
    pub fn gh(&self) -> &Poly {
        &self.gh
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    /// deg F.
    pub fn n_deg(&self) -> usize {
        self.f_full.degree().unwrap()
    }

    /// Signature the infinite place(s) would have over the constant-field
    /// extension F_{q^k}: only the residue of q^k mod 3 can change it.
    pub fn signature_over(&self, k: u32) -> Signature {
        if !self.n_deg().is_multiple_of(3) {
            return Signature::TotallyRamified;
        }
        let qk_mod3 = if self.field.q() % 3 == 1 || k.is_multiple_of(2) { 1 } else { 2 };
        if qk_mod3 == 2 {
            Signature::PartiallySplit
        } else {
            Signature::TotallySplit
        }
    }

    /// Truncation parameter for the Euler-product estimator: (2g-1)/5,
    /// rounded down when g = 2 mod 5 and to the nearest integer otherwise
    /// (no exact .5 ties are possible since 2(2g-1) is even and never
    /// = 5 mod 10).
    pub fn lambda(&self) -> usize {
        let t = 2 * self.genus as u64 - 1;
        if self.genus % 5 == 2 {
            (t / 5) as usize
        } else {
            ((2 * t + 5) / 10) as usize
        }
    }

    /// q^deg mod 3 (1 or 2), the quantity deciding whether a residue field
    /// of that degree contains the primitive cube roots of unity.
    pub fn residue_order_mod3(&self, deg: usize) -> u64 {
        if self.field.q() % 3 == 1 || deg.is_multiple_of(2) {
            1
        } else {
            2
        }
    }

    /// Splitting type of a monic irreducible P in the cubic extension.
    pub fn classify_prime(&self, p: &Poly) -> Result<Splitting> {
        debug_assert!(p.is_monic() && crate::residue::is_irreducible(p));
        if self.gh.rem(p)?.is_zero() {
            return Ok(Splitting::Ramified);
        }
        let d = p.degree().unwrap();
        if self.residue_order_mod3(d) == 2 {
            return Ok(Splitting::Partial);
        }
        let qd = pow_u128_checked(self.field.q(), d as u32).ok_or(Error::ScanTooLarge {
            degree: d,
            count: u128::MAX,
            limit: u128::MAX,
        })?;
        let chi = self.f_full.pow_mod((qd - 1) / 3, p)?;
        if chi.is_one() {
            Ok(Splitting::Split)
        } else {
            Ok(Splitting::Inert)
        }
    }

    /// z1^n + z2^n for the local zeta factor of P: 6-periodic in n, and
    /// zero whenever P ramifies regardless of the residue class of n.
    pub fn z_power_sum(&self, p: &Poly, n: u64) -> Result<i64> {
        assert!(n >= 1);
        Ok(match self.classify_prime(p)? {
            Splitting::Ramified => 0,
            Splitting::Partial => {
                if n % 2 == 1 {
                    0
                } else {
                    2
                }
            }
            Splitting::Split => 2,
            Splitting::Inert => {
                if n.is_multiple_of(3) {
                    2
                } else {
                    -1
                }
            }
        })
    }

    /// Structural admissibility for the benchmark families: monicity,
    /// squarefreeness and coprimality hold by construction; additionally
    /// requires 1 <= deg H <= deg G and, when 3 | deg F, that GH has no
    /// F_q-rational root. `require_genus4` additionally demands g >= 4
    /// (the regime the search parameter tables are calibrated for).
    pub fn family_admissible(&self, require_genus4: bool) -> bool {
        let dg = self.g_part.degree().unwrap();
        let dh = self.h_part.degree().unwrap();
        if dh < 1 || dh > dg {
            return false;
        }
        if require_genus4 && self.genus < 4 {
            return false;
        }
        if self.n_deg().is_multiple_of(3) {
            for c in 0..self.field.q() {
                if self.gh.eval(c) == 0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Result of converting a raw (possibly non-monic) model to a monic one.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub curve: Curve,
    /// The substitution x -> alpha * x' that was applied (1 if none).
    pub alpha: u64,
}

/// Converts y^3 = G H^2 with arbitrary leading coefficients into an
/// isomorphic monic model over the same field.
pub fn normalize(field: Fq, g_raw: &Poly, h_raw: &Poly) -> Result<Normalized> {
    if g_raw.is_zero() || h_raw.is_zero() {
        return Err(Error::InvalidCurve("G and H must be nonzero".into()));
    }
    let sg = g_raw.leading();
    let sh = h_raw.leading();
    // sgn F = sgn G * sgn(H)^2.
    let s = field.mul(sg, field.mul(sh, sh));
    let n = g_raw.degree().unwrap() + 2 * h_raw.degree().unwrap();
    if n.is_multiple_of(3) {
        if !field.is_cube(s) {
            return Err(Error::UnsupportedSignature(
                "sgn(F) is not a cube: the infinite place is inert (unit rank 0, \
                 no totally ramified model over this field)"
                    .into(),
            ));
        }
        let g_m = g_raw.scale(field.inv(sg)?);
        let h_m = h_raw.scale(field.inv(sh)?);
        return Ok(Normalized { curve: Curve::new(field, g_m, h_m)?, alpha: 1 });
    }
    // 3 does not divide n: substitute x = alpha x' with alpha = s^a and
    // a n = 2 mod 3, which makes s * alpha^n a cube automatically.
    let a = if n % 3 == 1 { 2u32 } else { 1 };
    let alpha = field.pow(s, a as u128);
    let g_sub = g_raw.scale_arg(alpha);
    let h_sub = h_raw.scale_arg(alpha);
    let g_m = g_sub.monic();
    let h_m = h_sub.monic();
    Ok(Normalized { curve: Curve::new(field, g_m, h_m)?, alpha })
}

/// Draws a random admissible curve with the given degree shape: G, H monic,
/// squarefree, coprime, of exact degrees (deg_g, deg_h), satisfying the
/// family constraints. Rejection sampling; degrees must admit a solution.
pub fn sample_family<R: rand::Rng + ?Sized>(
    field: Fq,
    deg_g: usize,
    deg_h: usize,
    rng: &mut R,
) -> Curve {
    loop {
        let g = Poly::random_monic(field, deg_g, rng);
        let h = if deg_h == 0 {
            Poly::one(field)
        } else {
            Poly::random_monic(field, deg_h, rng)
        };
        if !g.is_squarefree() || !h.is_squarefree() {
            continue;
        }
        if !g.gcd(&h).is_one() {
            continue;
        }
        let Ok(curve) = Curve::new(field, g, h) else { continue };
        if (curve.n_deg() % 3 == 0) && (0..field.q()).any(|c| curve.gh().eval(c) == 0) {
            continue;
        }
        return curve;
    }
}

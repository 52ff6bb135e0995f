//! Infrastructure of the principal ideal class in unit rank one.
//!
//! For signature (1, 1; 1, 2) the distinguished ideals equivalent to O_x
//! form a finite cycle.  Each one carries a distance delta, the accumulated
//! degree at infty_1 of the minima that produced it, and one full lap around
//! the cycle has total length 2 R_x, twice the regulator.  Arithmetic in the
//! cycle is done with absolute distances in Z, never reduced mod 2 R_x,
//! which is what lets a distance difference between two walks reveal a
//! multiple of the cycle length:
//!
//! * a baby step moves to the adjacent distinguished ideal by applying the
//!   element of the inverse with the least degree c0 >= 1 at infty_1 among
//!   those with negative degree at the quadratic place; the step length is
//!   always in [1, g + 2];
//! * a giant step multiplies two distinguished ideals and reduces; the
//!   result sits at the sum of the distances plus a reduction drop in
//!   [-2g, 0];
//! * below(n) returns the distinguished ideal with the largest distance at
//!   most n, by doubling (below(n/2) composed with itself) and finishing
//!   with baby steps.
//!
//! Searches thin the cycle to a pseudorandom subset of density about
//! 1/tau; membership is a function of the ideal alone so that independent
//! walks meeting at the same ideal agree on it.

use crate::curve::{Curve, Signature};
use crate::embed::{guard, reduce_distinguished, with_places, InverseBasis, Places, ReduceCtx, Step};
use crate::error::{Error, Result};
use crate::ideal::Ideal;
use num_bigint::{BigInt, Sign};

/// A distinguished ideal on the principal cycle with its absolute distance.
#[derive(Clone, Debug, PartialEq)]
pub struct InfraDivisor {
    pub ideal: Ideal,
    pub delta: BigInt,
}

impl InfraDivisor {
    pub fn is_identity(&self) -> bool {
        self.ideal.is_one()
    }

    /// Stable text form carrying both the ideal and the distance, used for
    /// logging and for trap records.
    pub fn key(&self) -> String {
        format!("{}|d={}", self.ideal.serialize(), self.delta)
    }
}

/// Walker over the principal cycle of one curve.  Owns the reduction
/// context so precision deepening is shared by all steps.
pub struct Infra<'a> {
    curve: &'a Curve,
    ctx: ReduceCtx,
    genus: i64,
}

impl<'a> Infra<'a> {
    pub fn new(curve: &'a Curve) -> Result<Self> {
        if curve.signature() != Signature::PartiallySplit {
            return Err(Error::UnsupportedSignature(
                "the infrastructure lives in unit rank one: the infinite place must split into a rational and a quadratic place".into(),
            ));
        }
        Ok(Infra {
            curve,
            ctx: ReduceCtx::new(curve)?,
            genus: curve.genus() as i64,
        })
    }

    pub fn curve(&self) -> &Curve {
        self.curve
    }

    pub fn identity(&self) -> InfraDivisor {
        InfraDivisor {
            ideal: Ideal::one(self.curve.field()),
            delta: BigInt::from(0),
        }
    }

    /// The adjacent distinguished ideal in the direction of growing
    /// distance.  The applied element is the canonical one in the corner
    /// box: least degree c0 >= 1 at infty_1 subject to negative degree at
    /// the quadratic place, then least degree there.
    pub fn baby_step(&mut self, d: &InfraDivisor) -> Result<InfraDivisor> {
        let cv = self.curve;
        let g = self.genus;
        let (next, e) = with_places(&mut self.ctx, cv, |places| {
            baby_attempt(&d.ideal, g, cv, places)
        })?;
        if !(1..=g + 2).contains(&e) {
            return Err(Error::GuardExceeded {
                where_: "baby step",
                detail: format!("step length {e} outside [1, {}]", g + 2),
            });
        }
        Ok(InfraDivisor {
            ideal: next,
            delta: &d.delta + e,
        })
    }

    /// Multiply and reduce.  The distance adds up to a reduction drop in
    /// [-2g, 0], so a giant step never overshoots the sum of its inputs.
    pub fn giant_step(&mut self, a: &InfraDivisor, b: &InfraDivisor) -> Result<InfraDivisor> {
        let prod = a.ideal.mul(&b.ideal, self.curve)?;
        let (ideal, drop) = reduce_distinguished(&prod, self.curve, &mut self.ctx)?;
        if !(-2 * self.genus..=0).contains(&drop) {
            return Err(Error::GuardExceeded {
                where_: "giant step",
                detail: format!("reduction drop {drop} outside [{}, 0]", -2 * self.genus),
            });
        }
        Ok(InfraDivisor {
            ideal,
            delta: &a.delta + &b.delta + drop,
        })
    }

    /// The distinguished ideal with the largest distance at most n.
    pub fn below(&mut self, n: &BigInt) -> Result<InfraDivisor> {
        if n.sign() == Sign::Minus {
            return Err(Error::Config(
                "infrastructure distances are nonnegative".into(),
            ));
        }
        if *n <= BigInt::from(3 * self.genus + 6) {
            let mut cur = self.identity();
            for _ in 0..(3 * self.genus + 16) {
                let next = self.baby_step(&cur)?;
                if &next.delta > n {
                    return Ok(cur);
                }
                cur = next;
            }
            return Err(Error::GuardExceeded {
                where_: "infrastructure walk",
                detail: "baby steps failed to pass the target distance".into(),
            });
        }
        let half: BigInt = n >> 1;
        let dp = self.below(&half)?;
        let mut cur = self.giant_step(&dp, &dp)?;
        debug_assert!(&cur.delta <= n);
        for _ in 0..(4 * self.genus + 8) {
            let next = self.baby_step(&cur)?;
            if &next.delta > n {
                return Ok(cur);
            }
            cur = next;
        }
        Err(Error::GuardExceeded {
            where_: "infrastructure walk",
            detail: "doubled divisor fell too far behind the target distance".into(),
        })
    }
}

/// Corner-box scan for the baby step element: minimal c0 >= 1 with
/// box(c0, -1) nonzero, then minimal c1 <= -1 keeping box(c0, c1) nonzero.
/// Stage one succeeds by c0 = g + 2 on any distinguished ideal.
fn baby_attempt(ideal: &Ideal, g: i64, curve: &Curve, places: &Places) -> Step<(Ideal, i64)> {
    let mut basis = InverseBasis::new(ideal, curve, places)?;
    let mut c0 = 1i64;
    while basis.box_dim_frac(c0, -1, places)? == 0 {
        c0 += 1;
        if c0 > 2 * g + 4 {
            return Err(guard(
                "baby step",
                "no forward element within the degree window",
            ));
        }
    }
    let mut c1 = -1i64;
    while basis.box_dim_frac(c0, c1 - 1, places)? > 0 {
        c1 -= 1;
        if c1 < -(3 * g + 12) {
            return Err(guard("baby step", "second coordinate ran away"));
        }
    }
    basis.apply_box(ideal, c0, c1, curve, places)
}

// --- cycle thinning ---

/// How membership in the thinned subset is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetRule {
    /// Hash of the serialized ideal against a threshold; density 1/tau for
    /// any real tau >= 1.
    Hash,
    /// Constant coefficient of the leading basis polynomial below q/tau;
    /// cheaper, but quantized to multiples of 1/q.
    LeadingConstant,
}

#[derive(Clone, Copy, Debug)]
pub struct SubsetParams {
    pub rule: SubsetRule,
    pub tau: f64,
}

/// Whether an ideal belongs to the thinned subset of its cycle.  Depends on
/// the ideal alone, never on the distance.
pub fn in_subset(ideal: &Ideal, params: &SubsetParams) -> Result<bool> {
    // rejects NaN along with anything below 1
    if !params.tau.is_finite() || params.tau < 1.0 {
        return Err(Error::Config(
            "the subset density parameter must be at least 1".into(),
        ));
    }
    match params.rule {
        SubsetRule::Hash => {
            let modulus = (params.tau * 65536.0).round() as u64;
            Ok(mix_key(&ideal.serialize()) % modulus < 65536)
        }
        SubsetRule::LeadingConstant => {
            let q = ideal.field().q();
            let bound = ((q as f64) / params.tau).floor().max(1.0) as u64;
            Ok(ideal.generator(0).u.coeff(0) < bound)
        }
    }
}

/// Average drop of a giant step, used when tuning jump lengths: the mean of
/// the reduction correction over random pairs of cycle points.
pub fn mean_giant_drop(genus: usize) -> i64 {
    let g = genus as i64;
    if g % 3 == 1 {
        -(g + 2) / 3
    } else {
        -(g / 3)
    }
}

// --- hashing ---

/// Final mixing stage of splitmix64; full avalanche on 64 bits.
pub(crate) fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// FNV-1a fold of a key string into 64 bits.
pub(crate) fn fold_key(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn mix_key(s: &str) -> u64 {
    mix64(fold_key(s))
}

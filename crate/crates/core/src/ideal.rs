//! Fractional ideal arithmetic in the maximal order O_x.
//!
//! O_x = F_q[x] + F_q[x] rho + F_q[x] omega with rho = y and omega = y^2 / H,
//! subject to the relations rho^2 = H omega, rho omega = GH, omega^2 = G rho.
//! A fractional ideal is a rank-3 F_q[x]-lattice inside K closed under
//! multiplication by rho and omega.  We store it as a column Hermite normal
//! form over F_q[x] together with a monic denominator:
//!
//!   a = (1/den) * span{ (a1, 0, 0), (a2, b2, 0), (a3, b3, c3) }
//!
//! in coordinates (1, rho, omega), with monic diagonal, off-diagonal entries
//! reduced modulo the diagonal of their row's pivot column, and
//! gcd(content, den) = 1.  This form is unique per fractional ideal, so
//! structural equality decides module equality and the serialization is a
//! faithful fingerprint.  The ideal norm is a1 b2 c3 / den^3.
//!
//! Products are computed as the normal form of the pairwise products of the
//! two bases (which span the product module over F_q[x], multiplication by
//! rho and omega included, since both factors are already O_x-modules).
//! Inverses go through the trace dual: a^{-1} equals the trace-dual lattice
//! of a multiplied by the different ideal, whose basis {GH, G rho, H omega}
//! is hard-coded; the trace pairing on (1, rho, omega) has Gram matrix
//! [[3, 0, 0], [0, 0, 3GH], [0, 3GH, 0]].

use crate::curve::{Curve, Splitting};
use crate::error::{Error, Result};
use crate::field::Fq;
use crate::poly::{gcd_many, Poly};
use crate::residue::cube_roots_mod;
use rand::Rng;

/// Attempts to find a usable random prime ideal before giving up.
const RANDOM_IDEAL_ATTEMPTS: u32 = 4096;

/// Largest degree tried when drawing random prime ideals.
const RANDOM_IDEAL_MAX_DEG: usize = 3;

// --- elements of the function field ------------------------------------------

/// An element u + v rho + w omega of K with polynomial coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    pub u: Poly,
    pub v: Poly,
    pub w: Poly,
}

impl Element {
    pub fn new(u: Poly, v: Poly, w: Poly) -> Self {
        Element { u, v, w }
    }

    pub fn zero(field: Fq) -> Self {
        Element {
            u: Poly::zero(field),
            v: Poly::zero(field),
            w: Poly::zero(field),
        }
    }

    pub fn one(field: Fq) -> Self {
        Element {
            u: Poly::one(field),
            v: Poly::zero(field),
            w: Poly::zero(field),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero() && self.w.is_zero()
    }

    pub fn coords(&self) -> [&Poly; 3] {
        [&self.u, &self.v, &self.w]
    }

    /// Product in O_x via the multiplication relations.
    pub fn mul(&self, other: &Element, curve: &Curve) -> Element {
        let g = curve.g_part();
        let h = curve.h_part();
        let gh = curve.gh();
        let (u1, v1, w1) = (&self.u, &self.v, &self.w);
        let (u2, v2, w2) = (&other.u, &other.v, &other.w);
        let cross = v1.mul(w2).add(&w1.mul(v2));
        Element {
            u: u1.mul(u2).add(&cross.mul(gh)),
            v: u1.mul(v2).add(&v1.mul(u2)).add(&w1.mul(w2).mul(g)),
            w: u1.mul(w2).add(&w1.mul(u2)).add(&v1.mul(v2).mul(h)),
        }
    }

    /// Field norm N(u + v rho + w omega) = u^3 + GH^2 v^3 + G^2 H w^3 - 3 GH uvw.
    pub fn norm(&self, curve: &Curve) -> Poly {
        let g = curve.g_part();
        let h = curve.h_part();
        let gh = curve.gh();
        let u3 = self.u.mul(&self.u).mul(&self.u);
        let v3 = self.v.mul(&self.v).mul(&self.v).mul(&g.mul(h).mul(h));
        let w3 = self.w.mul(&self.w).mul(&self.w).mul(&g.mul(g).mul(h));
        let mixed = self
            .u
            .mul(&self.v)
            .mul(&self.w)
            .mul(gh)
            .scale(curve.field().reduce_u64(3));
        u3.add(&v3).add(&w3).sub(&mixed)
    }
}

// --- the ideal type -----------------------------------------------------------

/// A fractional ideal of O_x in canonical column Hermite normal form.
///
/// `cols[j][i]` is the coefficient of the i-th basis element (1, rho, omega)
/// in the j-th generator; the matrix is upper triangular with monic diagonal
/// and reduced off-diagonal entries, and gcd(content, den) = 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ideal {
    cols: [[Poly; 3]; 3],
    den: Poly,
}

impl Ideal {
    /// The maximal order O_x itself.
    pub fn one(field: Fq) -> Self {
        let zero = || Poly::zero(field);
        let one = || Poly::one(field);
        Ideal {
            cols: [
                [one(), zero(), zero()],
                [zero(), one(), zero()],
                [zero(), zero(), one()],
            ],
            den: Poly::one(field),
        }
    }

    pub fn field(&self) -> Fq {
        self.den.field()
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one()
            && self.cols[0][0].is_one()
            && self.cols[1][1].is_one()
            && self.cols[2][2].is_one()
            && self.cols[1][0].is_zero()
            && self.cols[2][0].is_zero()
            && self.cols[2][1].is_zero()
    }

    /// The j-th generator as an element of K (numerator part only).
    pub fn generator(&self, j: usize) -> Element {
        Element {
            u: self.cols[j][0].clone(),
            v: self.cols[j][1].clone(),
            w: self.cols[j][2].clone(),
        }
    }

    /// Degree of the ideal norm a1 b2 c3 / den^3.
    pub fn norm_degree(&self) -> i64 {
        let num = self.cols[0][0].degree().unwrap() as i64
            + self.cols[1][1].degree().unwrap() as i64
            + self.cols[2][2].degree().unwrap() as i64;
        num - 3 * self.den.degree().unwrap() as i64
    }

    /// The norm as a reduced fraction (numerator, denominator), both monic.
    pub fn norm(&self) -> (Poly, Poly) {
        let num = self.cols[0][0].mul(&self.cols[1][1]).mul(&self.cols[2][2]);
        let den = self.den.mul(&self.den).mul(&self.den);
        let common = num.gcd(&den);
        (
            num.div_exact(&common, "norm numerator reduction").unwrap(),
            den.div_exact(&common, "norm denominator reduction").unwrap(),
        )
    }

    /// Canonical text encoding: q, the nine matrix entries in column-major
    /// order (structural zeros included), and the denominator, joined by '|'.
    pub fn serialize(&self) -> String {
        let mut out = self.field().q().to_string();
        for col in &self.cols {
            for entry in col {
                out.push('|');
                out.push_str(&entry.to_text());
            }
        }
        out.push('|');
        out.push_str(&self.den.to_text());
        out
    }

    /// Inverse of [`serialize`].
    pub fn parse(field: Fq, text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split('|').collect();
        if parts.len() != 11 {
            return Err(Error::Config(format!(
                "ideal encoding needs 11 fields, got {}",
                parts.len()
            )));
        }
        let q: u64 = parts[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad field size `{}`", parts[0])))?;
        if q != field.q() {
            return Err(Error::MixedField {
                left: field.q(),
                right: q,
            });
        }
        let p = |s: &str| Poly::parse(field, s);
        let ideal = Ideal {
            cols: [
                [p(parts[1])?, p(parts[2])?, p(parts[3])?],
                [p(parts[4])?, p(parts[5])?, p(parts[6])?],
                [p(parts[7])?, p(parts[8])?, p(parts[9])?],
            ],
            den: p(parts[10])?,
        };
        if !ideal.in_normal_form() {
            return Err(Error::Config("ideal encoding not in normal form".into()));
        }
        Ok(ideal)
    }

    /// Structural well-formedness of the stored representation.
    fn in_normal_form(&self) -> bool {
        let deg = |p: &Poly| p.degree().map_or(-1i64, |d| d as i64);
        let triangular = self.cols[0][1].is_zero()
            && self.cols[0][2].is_zero()
            && self.cols[1][2].is_zero();
        let monic = self.cols[0][0].is_monic()
            && self.cols[1][1].is_monic()
            && self.cols[2][2].is_monic()
            && self.den.is_monic();
        let reduced = deg(&self.cols[1][0]) < deg(&self.cols[0][0])
            && deg(&self.cols[2][0]) < deg(&self.cols[0][0])
            && deg(&self.cols[2][1]) < deg(&self.cols[1][1]);
        let mut all = vec![self.den.clone()];
        for col in &self.cols {
            all.extend(col.iter().cloned());
        }
        let refs: Vec<&Poly> = all.iter().collect();
        let primitive = gcd_many(self.field(), &refs).is_one();
        triangular && monic && reduced && primitive
    }

    /// Whether an element of K lies in this fractional ideal.
    pub fn contains(&self, elem: &Element) -> bool {
        self.span_contains(&[
            elem.u.mul(&self.den),
            elem.v.mul(&self.den),
            elem.w.mul(&self.den),
        ])
    }

    /// Whether a coordinate triple lies in the F_q[x]-span of the numerator
    /// columns.  Solves the triangular system by division, bottom row first.
    pub fn span_contains(&self, num: &[Poly; 3]) -> bool {
        let mut rem = num.clone();
        for j in (0..3).rev() {
            let pivot = &self.cols[j][j];
            let (quot, resid) = match rem[j].divrem(pivot) {
                Ok(pair) => pair,
                Err(_) => return false,
            };
            if !resid.is_zero() {
                return false;
            }
            for (r, c) in rem.iter_mut().zip(&self.cols[j]) {
                *r = r.sub(&quot.mul(c));
            }
        }
        rem.iter().all(Poly::is_zero)
    }

    /// Product ideal: normal form of the 9 pairwise generator products with
    /// multiplied denominators.  Both inputs are O_x-modules, so their
    /// pairwise products already span the product over F_q[x]; the rho- and
    /// omega-multiples required by the module property land in the same span.
    pub fn mul(&self, other: &Ideal, curve: &Curve) -> Result<Ideal> {
        if self.field() != other.field() {
            return Err(Error::MixedField {
                left: self.field().q(),
                right: other.field().q(),
            });
        }
        let mut cols = Vec::with_capacity(9);
        for i in 0..3 {
            let gi = self.generator(i);
            for j in 0..3 {
                let p = gi.mul(&other.generator(j), curve);
                cols.push([p.u, p.v, p.w]);
            }
        }
        Ideal::assemble(cols, self.den.mul(&other.den))
    }

    /// Product with the principal fractional ideal (elem / elem_den) O_x.
    /// The denominator must be monic so the result stays in normal form.
    pub fn mul_element(&self, elem: &Element, elem_den: &Poly, curve: &Curve) -> Result<Ideal> {
        debug_assert!(elem_den.is_monic());
        let mut cols = Vec::with_capacity(3);
        for j in 0..3 {
            let p = elem.mul(&self.generator(j), curve);
            cols.push([p.u, p.v, p.w]);
        }
        Ideal::assemble(cols, self.den.mul(elem_den))
    }

    /// The principal ideal generated by a single element.
    pub fn principal(elem: &Element, curve: &Curve) -> Result<Ideal> {
        Ideal::one(curve.field()).mul_element(elem, &Poly::one(curve.field()), curve)
    }

    /// Inverse ideal via the trace dual: a^{-1} = dual(a) * different, where
    /// dual(a) has basis den * (T B)^{-T} for the Gram matrix T of the trace
    /// form and the different is spanned by {GH, G rho, H omega}.
    pub fn inverse(&self, curve: &Curve) -> Result<Ideal> {
        let field = self.field();
        let three = Poly::constant(field, 3);
        let gh3 = curve.gh().scale(field.reduce_u64(3));
        let zero = Poly::zero(field);
        // T * B, with T = [[3,0,0],[0,0,3GH],[0,3GH,0]]: row 0 scales the
        // 1-coordinates by 3, rows 1 and 2 swap the rho/omega rows times 3GH.
        let tb: Vec<[Poly; 3]> = (0..3)
            .map(|j| {
                [
                    self.cols[j][0].mul(&three),
                    self.cols[j][2].mul(&gh3),
                    self.cols[j][1].mul(&gh3),
                ]
            })
            .collect();
        let det = det3(&tb);
        if det.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // Dual basis matrix: den * adj(TB)^T / det(TB).  Transposing the
        // adjugate puts the (i, j) cofactor at row i of column j.
        let mut dual_cols = Vec::with_capacity(3);
        for j in 0..3 {
            let mut col = [zero.clone(), zero.clone(), zero.clone()];
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = cofactor(&tb, i, j).mul(&self.den);
            }
            dual_cols.push(col);
        }
        // Multiply by the different's generators {GH, G rho, H omega}.
        let diff = [
            Element::new(curve.gh().clone(), zero.clone(), zero.clone()),
            Element::new(zero.clone(), curve.g_part().clone(), zero.clone()),
            Element::new(zero.clone(), zero.clone(), curve.h_part().clone()),
        ];
        let mut cols = Vec::with_capacity(9);
        for dc in &dual_cols {
            let e = Element::new(dc[0].clone(), dc[1].clone(), dc[2].clone());
            for d in &diff {
                let p = e.mul(d, curve);
                cols.push([p.u, p.v, p.w]);
            }
        }
        // Denominator: det(TB) up to its leading unit, which is absorbed by
        // scaling the numerators so that the stored denominator stays monic.
        let lead = det.leading();
        let inv_lead = field.inv(lead)?;
        let den = det.scale(inv_lead);
        for c in &mut cols {
            for e in c.iter_mut() {
                *e = e.scale(inv_lead);
            }
        }
        Ideal::assemble(cols, den)
    }

    /// Splits off the polynomial content of the numerator matrix: returns
    /// the primitive ideal and the extracted monic factor f, so that
    /// self = f * primitive (as fractional ideals).
    pub fn primitive(self) -> (Ideal, Poly) {
        let field = self.field();
        let refs: Vec<&Poly> = self.cols.iter().flatten().collect();
        let content = gcd_many(field, &refs);
        if content.is_one() {
            return (self, Poly::one(field));
        }
        let cols = self.cols.map(|col| {
            col.map(|e| {
                e.div_exact(&content, "ideal content extraction")
                    .expect("content divides every entry")
            })
        });
        (
            Ideal {
                cols,
                den: self.den,
            },
            content,
        )
    }

    /// Canonical form from a spanning set of integral column triples over a
    /// common denominator.
    fn assemble(cols: Vec<[Poly; 3]>, den: Poly) -> Result<Ideal> {
        let field = den.field();
        let mut active: Vec<[Poly; 3]> = cols.into_iter().filter(|c| !column_zero(c)).collect();
        let mut pivots: Vec<[Poly; 3]> = Vec::with_capacity(3);
        for row in (0..3).rev() {
            let mut pivot: Option<[Poly; 3]> = None;
            let mut rest = Vec::with_capacity(active.len());
            for col in active.drain(..) {
                if col[row].is_zero() {
                    rest.push(col);
                    continue;
                }
                pivot = Some(match pivot.take() {
                    None => col,
                    Some(p) => {
                        let (new_pivot, eliminated) = eliminate(p, col, row);
                        if !column_zero(&eliminated) {
                            rest.push(eliminated);
                        }
                        new_pivot
                    }
                });
            }
            let mut p = pivot.ok_or(Error::GuardExceeded {
                where_: "ideal normal form",
                detail: "generator span has rank below 3".into(),
            })?;
            let unit = field.inv(p[row].leading())?;
            for e in p.iter_mut() {
                *e = e.scale(unit);
            }
            pivots.push(p);
            active = rest;
        }
        debug_assert!(active.iter().all(column_zero));
        // pivots holds rows 2, 1, 0 in that order.
        let c1 = pivots.pop().unwrap();
        let mut c2 = pivots.pop().unwrap();
        let mut c3 = pivots.pop().unwrap();
        // Reduce off-diagonal entries: row 1 of c3 by c2, then row 0 by c1.
        let q32 = c3[1].divrem(&c2[1])?.0;
        c3 = column_sub_scaled(&c3, &c2, &q32);
        let q21 = c2[0].divrem(&c1[0])?.0;
        c2 = column_sub_scaled(&c2, &c1, &q21);
        let q31 = c3[0].divrem(&c1[0])?.0;
        c3 = column_sub_scaled(&c3, &c1, &q31);
        let mut ideal = Ideal {
            cols: [c1, c2, c3],
            den,
        };
        // Lowest terms: cancel the common factor of matrix content and den.
        let mut all: Vec<&Poly> = ideal.cols.iter().flatten().collect();
        all.push(&ideal.den);
        let common = gcd_many(field, &all);
        if !common.is_one() {
            ideal.cols = ideal.cols.map(|col| {
                col.map(|e| {
                    e.div_exact(&common, "ideal fraction reduction")
                        .expect("common factor divides every entry")
                })
            });
            ideal.den = ideal
                .den
                .div_exact(&common, "ideal denominator reduction")?;
        }
        debug_assert!(ideal.in_normal_form());
        Ok(ideal)
    }
}

fn column_zero(col: &[Poly; 3]) -> bool {
    col.iter().all(Poly::is_zero)
}

fn column_sub_scaled(col: &[Poly; 3], other: &[Poly; 3], factor: &Poly) -> [Poly; 3] {
    [
        col[0].sub(&factor.mul(&other[0])),
        col[1].sub(&factor.mul(&other[1])),
        col[2].sub(&factor.mul(&other[2])),
    ]
}

/// One Euclidean elimination step at `row`: returns (pivot', other') with
/// pivot'[row] = gcd of the two row entries and other'[row] = 0.  The column
/// operations are unimodular, so the spanned module is unchanged.
fn eliminate(pivot: [Poly; 3], other: [Poly; 3], row: usize) -> ([Poly; 3], [Poly; 3]) {
    let f = &pivot[row];
    let g = &other[row];
    let (d, s, t) = f.xgcd(g);
    let fd = f.div_exact(&d, "gcd cofactor").expect("gcd divides");
    let gd = g.div_exact(&d, "gcd cofactor").expect("gcd divides");
    let combine = |a: &Poly, b: &Poly, ca: &Poly, cb: &Poly| a.mul(ca).add(&b.mul(cb));
    let new_pivot = [
        combine(&pivot[0], &other[0], &s, &t),
        combine(&pivot[1], &other[1], &s, &t),
        combine(&pivot[2], &other[2], &s, &t),
    ];
    let neg_fd = fd.neg();
    let new_other = [
        combine(&pivot[0], &other[0], &gd, &neg_fd),
        combine(&pivot[1], &other[1], &gd, &neg_fd),
        combine(&pivot[2], &other[2], &gd, &neg_fd),
    ];
    debug_assert_eq!(new_pivot[row], d);
    debug_assert!(new_other[row].is_zero());
    (new_pivot, new_other)
}

/// Determinant of a 3x3 polynomial matrix given as columns.
fn det3(cols: &[[Poly; 3]]) -> Poly {
    let m = |i: usize, j: usize| &cols[j][i];
    let term = |a: &Poly, b: &Poly, c: &Poly, d: &Poly| a.mul(b).sub(&c.mul(d));
    let minor0 = term(m(1, 1), m(2, 2), m(1, 2), m(2, 1));
    let minor1 = term(m(1, 0), m(2, 2), m(1, 2), m(2, 0));
    let minor2 = term(m(1, 0), m(2, 1), m(1, 1), m(2, 0));
    m(0, 0)
        .mul(&minor0)
        .sub(&m(0, 1).mul(&minor1))
        .add(&m(0, 2).mul(&minor2))
}

/// Signed (i, j) cofactor of a 3x3 polynomial matrix given as columns.
fn cofactor(cols: &[[Poly; 3]], i: usize, j: usize) -> Poly {
    let rows = [(i + 1) % 3, (i + 2) % 3];
    let cs = [(j + 1) % 3, (j + 2) % 3];
    // Using cyclic complements keeps the sign positive: the permutation
    // (i, i+1, i+2) x (j, j+1, j+2) is even.
    let a = &cols[cs[0]][rows[0]];
    let b = &cols[cs[1]][rows[1]];
    let c = &cols[cs[1]][rows[0]];
    let d = &cols[cs[0]][rows[1]];
    a.mul(b).sub(&c.mul(d))
}

// --- prime ideals --------------------------------------------------------------

/// The prime ideal of O_x above a non-inert monic irreducible P, of norm P.
///
/// For split or partially split P this is <P, rho - r> with r a canonical
/// cube root of F mod P (the smallest in the polynomial ordering); for
/// ramified P both rho and omega vanish in the residue field, giving
/// <P, rho, omega>.
pub fn prime_ideal_above(curve: &Curve, p: &Poly) -> Result<Ideal> {
    let field = curve.field();
    let zero = || Poly::zero(field);
    let one = || Poly::one(field);
    match curve.classify_prime(p)? {
        Splitting::Inert => Err(Error::UnsupportedSignature(
            "inert primes have no degree-one prime above them".into(),
        )),
        Splitting::Ramified => Ideal::assemble(
            vec![
                [p.clone(), zero(), zero()],
                [zero(), one(), zero()],
                [zero(), zero(), one()],
            ],
            one(),
        ),
        Splitting::Split | Splitting::Partial => {
            let fbar = curve.f_full().rem(p)?;
            let roots = cube_roots_mod(&fbar, p)?;
            let r = roots
                .first()
                .ok_or_else(|| Error::GuardExceeded {
                    where_: "prime ideal construction",
                    detail: format!(
                        "classified as non-inert but no cube root exists mod {}",
                        p.to_text()
                    ),
                })?
                .clone();
            ideal_from_order_generators(curve, &[Element::new(p.clone(), zero(), zero()),
                Element::new(r.neg(), one(), zero())])
        }
    }
}

/// All primes above a split P (three of them), via the three cube roots.
pub fn primes_above_split(curve: &Curve, p: &Poly) -> Result<Vec<Ideal>> {
    let field = curve.field();
    let fbar = curve.f_full().rem(p)?;
    let roots = cube_roots_mod(&fbar, p)?;
    roots
        .into_iter()
        .map(|r| {
            ideal_from_order_generators(
                curve,
                &[
                    Element::new(p.clone(), Poly::zero(field), Poly::zero(field)),
                    Element::new(r.neg(), Poly::one(field), Poly::zero(field)),
                ],
            )
        })
        .collect()
}

/// The degree-two prime above a partially split P: the complement of
/// <P, rho - r> in <P>, generated by P and rho^2 + r rho + r^2 = (r^2, r, H).
pub fn partial_complement(curve: &Curve, p: &Poly) -> Result<Ideal> {
    let field = curve.field();
    let fbar = curve.f_full().rem(p)?;
    let roots = cube_roots_mod(&fbar, p)?;
    let r = roots.first().cloned().ok_or_else(|| Error::GuardExceeded {
        where_: "partial complement construction",
        detail: "no cube root found for a partially split prime".into(),
    })?;
    let r2 = r.mul(&r).rem(p)?;
    ideal_from_order_generators(
        curve,
        &[
            Element::new(p.clone(), Poly::zero(field), Poly::zero(field)),
            Element::new(r2, r, curve.h_part().clone()),
        ],
    )
}

/// Normal form of the O_x-ideal generated by the given elements: the F_q[x]
/// span of every generator times each of 1, rho, omega.
pub fn ideal_from_order_generators(curve: &Curve, gens: &[Element]) -> Result<Ideal> {
    let field = curve.field();
    let zero = || Poly::zero(field);
    let one = || Poly::one(field);
    let basis = [
        Element::new(one(), zero(), zero()),
        Element::new(zero(), one(), zero()),
        Element::new(zero(), zero(), one()),
    ];
    let mut cols = Vec::with_capacity(gens.len() * 3);
    for g in gens {
        for b in &basis {
            let p = g.mul(b, curve);
            cols.push([p.u, p.v, p.w]);
        }
    }
    Ideal::assemble(cols, one())
}

/// Draws random monic irreducibles of small degree until one is split or
/// partially split, and returns the prime ideal above it.  Deterministic for
/// a fixed RNG state.
pub fn random_prime_ideal<R: Rng + ?Sized>(curve: &Curve, rng: &mut R) -> Result<Ideal> {
    let field = curve.field();
    for _ in 0..RANDOM_IDEAL_ATTEMPTS {
        let deg = rng.gen_range(1..=RANDOM_IDEAL_MAX_DEG);
        let p = Poly::random_monic(field, deg, rng);
        if !crate::residue::is_irreducible(&p) {
            continue;
        }
        match curve.classify_prime(&p)? {
            Splitting::Split | Splitting::Partial => return prime_ideal_above(curve, &p),
            _ => continue,
        }
    }
    Err(Error::GuardExceeded {
        where_: "random prime ideal",
        detail: format!("no split prime found in {RANDOM_IDEAL_ATTEMPTS} draws"),
    })
}

// --- tests ----------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Curve;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn curve(q: u64, g: &[i64], h: &[i64]) -> Curve {
        let field = Fq::new(q).unwrap();
        Curve::new(
            field,
            Poly::from_signed(field, g),
            Poly::from_signed(field, h),
        )
        .unwrap()
    }

    /// Genus-3 test curve over F_7 with ramified primes in both G and H.
    fn c7() -> Curve {
        curve(7, &[3, 1, 0, 1], &[1, 1])
    }

    fn random_split_prime<R: Rng + ?Sized>(c: &Curve, deg: usize, rng: &mut R) -> Poly {
        loop {
            let p = Poly::random_monic(c.field(), deg, rng);
            if crate::residue::is_irreducible(&p)
                && matches!(
                    c.classify_prime(&p).unwrap(),
                    Splitting::Split | Splitting::Partial
                )
            {
                return p;
            }
        }
    }

    /// A stock of structurally varied ideals for the algebraic identities.
    fn sample_ideals(c: &Curve, seed: u64, count: usize) -> Vec<Ideal> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = vec![Ideal::one(c.field())];
        while out.len() < count {
            let a = random_prime_ideal(c, &mut rng).unwrap();
            let prev = out.last().unwrap();
            out.push(if out.len() % 3 == 0 {
                a.mul(prev, c).unwrap()
            } else {
                a
            });
        }
        out
    }

    #[test]
    fn identity_serializes_to_pinned_form() {
        let field = Fq::new(7).unwrap();
        let o = Ideal::one(field);
        assert_eq!(o.serialize(), "7|1|0|0|0|1|0|0|0|1|1");
        assert!(o.is_one());
        assert_eq!(Ideal::parse(field, &o.serialize()).unwrap(), o);
    }

    #[test]
    fn hnf_is_canonical_under_generator_shuffling() {
        let c = c7();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let p = random_split_prime(&c, 2, &mut rng);
        let base = prime_ideal_above(&c, &p).unwrap();
        let field = c.field();
        // Rebuild from shuffled, unit-scaled, and redundant generators.
        let fbar = c.f_full().rem(&p).unwrap();
        let r = cube_roots_mod(&fbar, &p).unwrap()[0].clone();
        let g1 = Element::new(p.clone(), Poly::zero(field), Poly::zero(field));
        let g2 = Element::new(r.neg(), Poly::one(field), Poly::zero(field));
        let sum = Element::new(
            p.add(&r.neg()),
            Poly::one(field),
            Poly::zero(field),
        );
        for gens in [
            vec![g2.clone(), g1.clone()],
            vec![g1.clone(), g2.clone(), sum.clone()],
            vec![
                sum,
                Element::new(g2.u.scale(3), g2.v.scale(3), g2.w.scale(3)),
                g1,
            ],
        ] {
            let rebuilt = ideal_from_order_generators(&c, &gens).unwrap();
            assert_eq!(rebuilt.serialize(), base.serialize());
        }
    }

    #[test]
    fn module_closure_under_rho_and_omega() {
        let c = c7();
        let field = c.field();
        let rho = Element::new(Poly::zero(field), Poly::one(field), Poly::zero(field));
        let omega = Element::new(Poly::zero(field), Poly::zero(field), Poly::one(field));
        for a in sample_ideals(&c, 23, 12) {
            for j in 0..3 {
                let gj = a.generator(j);
                assert!(a.span_contains(&[gj.u.clone(), gj.v.clone(), gj.w.clone()]));
                for m in [&rho, &omega] {
                    let prod = gj.mul(m, &c);
                    assert!(
                        a.span_contains(&[prod.u, prod.v, prod.w]),
                        "closure fails at column {j} of {}",
                        a.serialize()
                    );
                }
            }
        }
    }

    #[test]
    fn split_prime_decomposes_the_rational_prime() {
        let c = c7();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for deg in [1usize, 2] {
            let mut p = random_split_prime(&c, deg, &mut rng);
            while !matches!(c.classify_prime(&p).unwrap(), Splitting::Split) {
                p = random_split_prime(&c, deg, &mut rng);
            }
            let parts = primes_above_split(&c, &p).unwrap();
            assert_eq!(parts.len(), 3);
            let mut prod = parts[0].clone();
            for part in &parts[1..] {
                assert_eq!(part.norm(), (p.clone(), Poly::one(c.field())));
                prod = prod.mul(part, &c).unwrap();
            }
            let principal = Ideal::principal(
                &Element::new(p.clone(), Poly::zero(c.field()), Poly::zero(c.field())),
                &c,
            )
            .unwrap();
            assert_eq!(prod, principal);
        }
    }

    #[test]
    fn partial_prime_times_complement_is_the_rational_prime() {
        // q = 11 is 2 mod 3, so degree-1 primes split partially.
        let c = curve(11, &[1, 0, 1], &[7, 1, 1]);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let p = random_split_prime(&c, 1, &mut rng);
        assert!(matches!(c.classify_prime(&p).unwrap(), Splitting::Partial));
        let small = prime_ideal_above(&c, &p).unwrap();
        let big = partial_complement(&c, &p).unwrap();
        let (n_small, _) = small.norm();
        let (n_big, _) = big.norm();
        assert_eq!(n_small, p);
        assert_eq!(n_big, p.mul(&p));
        let prod = small.mul(&big, &c).unwrap();
        let principal = Ideal::principal(
            &Element::new(p, Poly::zero(c.field()), Poly::zero(c.field())),
            &c,
        )
        .unwrap();
        assert_eq!(prod, principal);
    }

    #[test]
    fn ramified_prime_cubes_to_the_rational_prime() {
        // On c7, G = x^3 + x + 3 has the root 5 (so x + 2 divides G) and
        // H = x + 1, exercising ramification on both sides of F = G H^2.
        let c = c7();
        let field = c.field();
        for p in [
            Poly::from_signed(field, &[2, 1]),
            Poly::from_signed(field, &[1, 1]),
        ] {
            assert!(matches!(c.classify_prime(&p).unwrap(), Splitting::Ramified));
            let prime = prime_ideal_above(&c, &p).unwrap();
            assert_eq!(prime.norm(), (p.clone(), Poly::one(field)));
            let cube = prime.mul(&prime, &c).unwrap().mul(&prime, &c).unwrap();
            let principal = Ideal::principal(
                &Element::new(p, Poly::zero(field), Poly::zero(field)),
                &c,
            )
            .unwrap();
            assert_eq!(cube, principal);
        }
    }

    #[test]
    fn norms_multiply() {
        let c = c7();
        let ideals = sample_ideals(&c, 41, 10);
        for (i, a) in ideals.iter().enumerate() {
            for b in &ideals[i..] {
                let prod = a.mul(b, &c).unwrap();
                let (pn, pd) = prod.norm();
                let (an, ad) = a.norm();
                let (bn, bd) = b.norm();
                assert_eq!(pn.mul(&ad).mul(&bd), an.mul(&bn).mul(&pd));
            }
        }
    }

    #[test]
    fn inverse_gives_exact_two_sided_identity() {
        let c = c7();
        let one = Ideal::one(c.field());
        for a in sample_ideals(&c, 57, 12) {
            let inv = a.inverse(&c).unwrap();
            assert_eq!(a.mul(&inv, &c).unwrap(), one, "a * a^-1 != O_x for {}", a.serialize());
            assert_eq!(inv.mul(&a, &c).unwrap(), one);
        }
        // Inert principal ideal: <P>^{-1} = (1/P) O_x.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let inert = loop {
            let p = Poly::random_monic(c.field(), 1, &mut rng);
            if crate::residue::is_irreducible(&p)
                && matches!(c.classify_prime(&p).unwrap(), Splitting::Inert)
            {
                break p;
            }
        };
        let principal = Ideal::principal(
            &Element::new(inert.clone(), Poly::zero(c.field()), Poly::zero(c.field())),
            &c,
        )
        .unwrap();
        let inv = principal.inverse(&c).unwrap();
        assert_eq!(inv.den(), &inert);
        assert_eq!(principal.mul(&inv, &c).unwrap(), one);
    }

    #[test]
    fn element_ideal_norm_matches_field_norm() {
        let c = c7();
        let mut rng = ChaCha12Rng::seed_from_u64(91);
        for _ in 0..20 {
            let e = Element::new(
                Poly::random_monic(c.field(), 2, &mut rng),
                Poly::random_monic(c.field(), 1, &mut rng),
                Poly::random_monic(c.field(), 1, &mut rng),
            );
            let (num, den) = Ideal::principal(&e, &c).unwrap().norm();
            assert!(den.is_one());
            assert_eq!(num, e.norm(&c).monic());
        }
    }

    #[test]
    fn product_span_matches_full_order_generator_span() {
        // The 9 pairwise products span the same module as the 27 generators
        // that also multiply each pairwise product by 1, rho, and omega.
        let c = c7();
        let field = c.field();
        let basis = [
            Element::one(field),
            Element::new(Poly::zero(field), Poly::one(field), Poly::zero(field)),
            Element::new(Poly::zero(field), Poly::zero(field), Poly::one(field)),
        ];
        let ideals = sample_ideals(&c, 77, 6);
        let mut rng = ChaCha12Rng::seed_from_u64(78);
        for _ in 0..6 {
            let a = &ideals[rng.gen_range(0..ideals.len())];
            let b = &ideals[rng.gen_range(0..ideals.len())];
            let quick = a.mul(b, &c).unwrap();
            let mut cols = Vec::with_capacity(27);
            for i in 0..3 {
                for j in 0..3 {
                    let p = a.generator(i).mul(&b.generator(j), &c);
                    for e in &basis {
                        let t = p.mul(e, &c);
                        cols.push([t.u, t.v, t.w]);
                    }
                }
            }
            let full = Ideal::assemble(cols, a.den.mul(&b.den)).unwrap();
            assert_eq!(quick, full);
        }
    }

    #[test]
    fn serialization_is_injective_on_samples() {
        let c = c7();
        let ideals = sample_ideals(&c, 101, 64);
        for (i, a) in ideals.iter().enumerate() {
            for b in &ideals[i + 1..] {
                if a != b {
                    assert_ne!(a.serialize(), b.serialize());
                }
            }
            assert_eq!(&Ideal::parse(c.field(), &a.serialize()).unwrap(), a);
        }
    }

    #[test]
    fn random_prime_ideal_is_reproducible() {
        let c = c7();
        let a = random_prime_ideal(&c, &mut ChaCha12Rng::seed_from_u64(2024)).unwrap();
        let b = random_prime_ideal(&c, &mut ChaCha12Rng::seed_from_u64(2024)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_integral());
    }
}

//! Prime-field arithmetic for the coefficient field F_q.
//!
//! The constant field of every curve here is F_q with q an odd prime and
//! characteristic at least 5 (the curve model needs both 2 and 3 invertible,
//! and cube-root behaviour differs fundamentally between q = 1 mod 3, where
//! F_q contains the cube roots of unity, and q = 2 mod 3, where cubing is a
//! bijection).
//!
//! Elements are bare `u64` residues in `[0, q)`. [`Fq`] is a copyable context
//! carrying the modulus; all products run through `u128`, so any prime below
//! 2^63 is safe without Montgomery machinery.

use crate::error::{Error, Result};

/// Prime-field context. Cheap to copy; every polynomial stores one.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Fq {
    q: u64,
}

impl Fq {
    /// Builds the field, rejecting moduli that are composite, even, below 5,
    /// or at least 2^63.
    pub fn new(q: u64) -> Result<Self> {
        if !(5..(1 << 63)).contains(&q) || !is_prime_u64(q) {
            return Err(Error::BadModulus(q));
        }
        Ok(Fq { q })
    }

    #[inline]
    pub fn q(self) -> u64 {
        self.q
    }

    /// Residue of an arbitrary signed integer.
    #[inline]
    pub fn reduce_i64(self, v: i64) -> u64 {
        // q < 2^63, so the cast is lossless.
        v.rem_euclid(self.q as i64) as u64
    }

    /// Residue of an arbitrary unsigned integer.
    #[inline]
    pub fn reduce_u64(self, v: u64) -> u64 {
        v % self.q
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.q && b < self.q);
        let s = a + b; // both < q < 2^63: no overflow
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.q && b < self.q);
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        debug_assert!(a < self.q);
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.q && b < self.q);
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    /// a^exp by square-and-multiply.
    pub fn pow(self, base: u64, mut exp: u128) -> u64 {
        debug_assert!(base < self.q);
        let mut acc: u64 = 1;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, (self.q - 2) as u128))
    }

    /// Legendre symbol (a/q) as +1, 0, or -1.
    pub fn legendre(self, a: u64) -> i32 {
        let a = self.reduce_u64(a);
        if a == 0 {
            return 0;
        }
        let s = self.pow(a, ((self.q - 1) / 2) as u128);
        if s == 1 {
            1
        } else {
            -1
        }
    }

    /// True when a is a nonzero cube. For q = 2 mod 3 every element is a
    /// cube; for q = 1 mod 3 cubes are index-3.
    pub fn is_cube(self, a: u64) -> bool {
        let a = self.reduce_u64(a);
        if a == 0 {
            return false;
        }
        if self.q % 3 == 2 {
            return true;
        }
        self.pow(a, ((self.q - 1) / 3) as u128) == 1
    }

    /// A primitive cube root of unity, if the field contains one
    /// (q = 1 mod 3). Deterministic: derived from the smallest non-cube.
    pub fn primitive_cube_root_of_unity(self) -> Option<u64> {
        if self.q % 3 != 1 {
            return None;
        }
        let e = ((self.q - 1) / 3) as u128;
        for a in 2..self.q {
            let z = self.pow(a, e);
            if z != 1 {
                return Some(z);
            }
        }
        unreachable!("a non-cube exists in F_q for q = 1 mod 3");
    }

    /// All cube roots of a, sorted ascending (0, 1, or 3 of them).
    pub fn cube_roots(self, a: u64) -> Vec<u64> {
        let a = self.reduce_u64(a);
        if a == 0 {
            return vec![0];
        }
        if self.q % 3 == 2 {
            // Cubing permutes F_q*; invert it with the exponent e = (2q-1)/3,
            // which satisfies 3e = 2(q-1) + 1.
            return vec![self.pow(a, ((2 * self.q - 1) / 3) as u128)];
        }
        if !self.is_cube(a) {
            return Vec::new();
        }
        let r = self.cube_root_amm(a);
        debug_assert_eq!(self.mul(self.mul(r, r), r), a);
        let w = self
            .primitive_cube_root_of_unity()
            .expect("q = 1 mod 3 here");
        let mut roots = vec![r, self.mul(r, w), self.mul(r, self.mul(w, w))];
        roots.sort_unstable();
        roots
    }

    /// One cube root of a known cube, q = 1 mod 3 (Adleman-Manders-Miller
    /// digit descent in the 3-Sylow subgroup).
    fn cube_root_amm(self, a: u64) -> u64 {
        // q - 1 = 3^s * t with 3 not dividing t; s >= 1 since q = 1 mod 3.
        let mut t = self.q - 1;
        let mut s = 0u32;
        while t.is_multiple_of(3) {
            t /= 3;
            s += 1;
        }
        // g generates the 3-Sylow subgroup: take any non-cube b, g = b^t.
        let g = {
            let e = ((self.q - 1) / 3) as u128;
            let mut b = 2;
            while self.pow(b, e) == 1 {
                b += 1;
            }
            self.pow(b, t as u128)
        };
        // Initial guess kills the prime-to-3 part: with 3m = 1 mod t, the
        // error x^3 / a = a^(3m-1) lies in the 3-Sylow subgroup, and because
        // a is a cube its order even divides 3^(s-1).
        let m = inv_mod_u64(3 % t, t).expect("3 invertible mod t");
        let mut x = self.pow(a, m as u128);
        let a_inv = self.inv(a).expect("a nonzero");
        let mut err = self.mul(self.mul(self.mul(x, x), x), a_inv);
        while err != 1 {
            // Order of err is 3^k with 1 <= k <= s-1.
            let mut k = 0u32;
            let mut e = err;
            while e != 1 {
                e = self.mul(self.mul(e, e), e);
                k += 1;
            }
            debug_assert!(k < s, "error term escaped the expected subgroup");
            // Multiply x by g^(j*3^(s-k-1)) so the top digit of err cancels.
            let gk = self.pow(g, 3u128.pow(s - k)); // order 3^k
            let step = self.pow(g, 3u128.pow(s - k - 1));
            let mut fixed = false;
            for j in 1..3u32 {
                let cand = self.mul(err, self.pow(gk, j as u128));
                let mut c = cand;
                for _ in 0..k.saturating_sub(1) {
                    c = self.mul(self.mul(c, c), c);
                }
                if c == 1 {
                    x = self.mul(x, self.pow(step, j as u128));
                    err = cand;
                    fixed = true;
                    break;
                }
            }
            debug_assert!(fixed, "one of the two digit corrections must work");
        }
        x
    }
}

// --- primality and modular inverse on raw u64 ---

/// Deterministic Miller-Rabin, exact for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    // This base set decides primality correctly for every n < 3.3 * 10^24.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Inverse of a modulo m (both arbitrary u64, m >= 2), if it exists.
pub fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let qt = old_r / r;
        (old_r, r) = (r, old_r - qt * r);
        (old_s, s) = (s, old_s - qt * s);
    }
    if old_r.unsigned_abs() != 1 {
        return None;
    }
    let mut inv = if old_r == -1 { -old_s } else { old_s };
    inv = inv.rem_euclid(m as i128);
    Some(inv as u64)
}

//! Quaternion scalars `r + i·i + j·j + k·k` with `i² = j² = k² = ijk = −1`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub r: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(r: f64, i: f64, j: f64, k: f64) -> Self {
        Quaternion { r, i, j, k }
    }

    /// Purely imaginary quaternion, the encoding of one RGB pixel.
    pub const fn pure(i: f64, j: f64, k: f64) -> Self {
        Quaternion { r: 0.0, i, j, k }
    }

    pub const fn real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.r, -self.i, -self.j, -self.k)
    }

    pub fn norm_sqr(self) -> f64 {
        self.r * self.r + self.i * self.i + self.j * self.j + self.k * self.k
    }

    /// Modulus `|a|`.
    pub fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(self) -> bool {
        self.r == 0.0 && self.i == 0.0 && self.j == 0.0 && self.k == 0.0
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.r * s, self.i * s, self.j * s, self.k * s)
    }

    /// Unit quaternion in the direction of `self`, or zero when every component is
    /// exactly zero. Denormal inputs are not special-cased.
    pub fn sign(self) -> Self {
        if self.is_zero() {
            Quaternion::ZERO
        } else {
            self.scale(1.0 / self.abs())
        }
    }

    /// Multiplicative inverse. Returns `None` for zero.
    pub fn inv(self) -> Option<Self> {
        let n = self.norm_sqr();
        (n != 0.0).then(|| self.conj().scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.i.is_finite() && self.j.is_finite() && self.k.is_finite()
    }
}

/// Hamilton product.
pub fn qmul(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion {
        r: a.r * b.r - a.i * b.i - a.j * b.j - a.k * b.k,
        i: a.r * b.i + a.i * b.r + a.j * b.k - a.k * b.j,
        j: a.r * b.j - a.i * b.k + a.j * b.r + a.k * b.i,
        k: a.r * b.k + a.i * b.j - a.j * b.i + a.k * b.r,
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        qmul(self, rhs)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: f64) -> Quaternion {
        self.scale(rhs)
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, rhs: f64) -> Quaternion {
        self.scale(1.0 / rhs)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.r + rhs.r, self.i + rhs.i, self.j + rhs.j, self.k + rhs.k)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.r - rhs.r, self.i - rhs.i, self.j - rhs.j, self.k - rhs.k)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.r, -self.i, -self.j, -self.k)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, rhs: Quaternion) {
        *self = *self + rhs;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, rhs: Quaternion) {
        *self = *self - rhs;
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:+}i {:+}j {:+}k", self.r, self.i, self.j, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Left-multiplication matrix of `a` acting on the coefficient vector of `b`.
    fn left_matrix(a: Quaternion) -> [[f64; 4]; 4] {
        [
            [a.r, -a.i, -a.j, -a.k],
            [a.i, a.r, -a.k, a.j],
            [a.j, a.k, a.r, -a.i],
            [a.k, -a.j, a.i, a.r],
        ]
    }

    fn via_table(a: Quaternion, b: Quaternion) -> Quaternion {
        let m = left_matrix(a);
        let v = [b.r, b.i, b.j, b.k];
        let o: Vec<f64> = m
            .iter()
            .map(|row| row.iter().zip(v.iter()).map(|(x, y)| x * y).sum())
            .collect();
        Quaternion::new(o[0], o[1], o[2], o[3])
    }

    #[test]
    fn defining_relations() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::I, -Quaternion::K);
        assert_eq!(Quaternion::I * Quaternion::I, Quaternion::real(-1.0));
        assert_eq!(Quaternion::J * Quaternion::J, Quaternion::real(-1.0));
        assert_eq!(Quaternion::K * Quaternion::K, Quaternion::real(-1.0));
        assert_eq!(
            Quaternion::I * Quaternion::J * Quaternion::K,
            Quaternion::real(-1.0)
        );
    }

    #[test]
    fn one_plus_i_times_one_plus_j() {
        let a = Quaternion::new(1.0, 1.0, 0.0, 0.0);
        let b = Quaternion::new(1.0, 0.0, 1.0, 0.0);
        let expected = via_table(a, b);
        assert_eq!(expected, Quaternion::new(1.0, 1.0, 1.0, 1.0));
        assert_eq!(a * b, expected);
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(Quaternion::ZERO.sign(), Quaternion::ZERO);
        assert_eq!(Quaternion::pure(0.0, 0.0, 2.0).sign(), Quaternion::K);
    }

    fn q() -> impl Strategy<Value = Quaternion> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
            .prop_map(|(r, i, j, k)| Quaternion::new(r, i, j, k))
    }

    proptest! {
        #[test]
        fn product_matches_table(a in q(), b in q()) {
            let p = a * b;
            let t = via_table(a, b);
            prop_assert!((p - t).abs() <= 1e-12 * (1.0 + t.abs()));
        }

        #[test]
        fn modulus_is_multiplicative(a in q(), b in q()) {
            let lhs = (a * b).abs();
            let rhs = a.abs() * b.abs();
            prop_assert!((lhs - rhs).abs() <= crate::tol::ALGEBRA * (1.0 + rhs));
        }

        #[test]
        fn associative(a in q(), b in q(), c in q()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            let scale = a.abs() * b.abs() * c.abs();
            prop_assert!((l - r).abs() <= crate::tol::ALGEBRA * (1.0 + scale));
        }

        #[test]
        fn conjugate_gives_modulus(a in q()) {
            let p = a * a.conj();
            prop_assert!(p.i.abs() + p.j.abs() + p.k.abs() <= 1e-12 * (1.0 + a.norm_sqr()));
            prop_assert!((p.r - a.norm_sqr()).abs() <= 1e-12 * (1.0 + a.norm_sqr()));
        }
    }
}

//! Exact arithmetic in prime fields GF(q) together with the square-class
//! structure of the multiplicative group.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest modulus accepted by [`FieldSpec::new`].
pub const DEFAULT_BOUND: u32 = 101;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("modulus {q} outside the supported range 2..={bound}")]
    OutOfRange { q: u32, bound: u32 },
    #[error("division by zero in GF({0})")]
    DivisionByZero(u32),
    #[error("no square classes in char 2")]
    Char2,
}

/// An element of a prime field, stored as its reduced representative.
///
/// Elements carry no reference to their field; every operation goes through
/// the [`FieldSpec`] that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareClass {
    Zero,
    Square,
    Nonsquare,
}

/// Product rule of the quotient F*/F*² ≅ Z/2, extended by zero.
impl std::ops::Mul for SquareClass {
    type Output = SquareClass;

    fn mul(self, other: SquareClass) -> SquareClass {
        use SquareClass::*;
        match (self, other) {
            (Zero, _) | (_, Zero) => Zero,
            (a, b) if a == b => Square,
            _ => Nonsquare,
        }
    }
}

/// A validated prime field GF(q) with precomputed inverse and square-class
/// tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    q: u32,
    inverses: Vec<u32>,
    classes: Vec<SquareClass>,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn new(q: u32) -> Result<Self, FieldError> {
        Self::with_bound(q, DEFAULT_BOUND)
    }

    pub fn with_bound(q: u32, bound: u32) -> Result<Self, FieldError> {
        if q < 2 || q > bound {
            return Err(FieldError::OutOfRange { q, bound });
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        let mut inverses = vec![0u32; q as usize];
        for a in 1..q {
            for b in 1..q {
                if (a * b) % q == 1 {
                    inverses[a as usize] = b;
                    break;
                }
            }
        }
        let mut classes = vec![SquareClass::Nonsquare; q as usize];
        classes[0] = SquareClass::Zero;
        for k in 1..q {
            classes[((k * k) % q) as usize] = SquareClass::Square;
        }
        Ok(FieldSpec { q, inverses, classes })
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn is_char2(&self) -> bool {
        self.q == 2
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn elem(&self, v: i64) -> Fe {
        Fe(v.rem_euclid(self.q as i64) as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> + Clone {
        (0..self.q).map(Fe)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Fe> + Clone {
        (1..self.q).map(Fe)
    }

    #[inline]
    pub fn contains(&self, a: Fe) -> bool {
        a.0 < self.q
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let s = a.0 + b.0;
        Fe(if s >= self.q { s - self.q } else { s })
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        Fe(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.q - b.0 })
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(if a.0 == 0 { 0 } else { self.q - a.0 })
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        Fe((a.0 * b.0) % self.q)
    }

    #[inline]
    pub fn inv(&self, a: Fe) -> Result<Fe, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero(self.q));
        }
        Ok(Fe(self.inverses[a.0 as usize]))
    }

    #[inline]
    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc = Fe::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    #[inline]
    pub fn square(&self, a: Fe) -> Fe {
        self.mul(a, a)
    }

    pub fn square_class(&self, a: Fe) -> Result<SquareClass, FieldError> {
        if self.is_char2() {
            return Err(FieldError::Char2);
        }
        Ok(self.classes[a.0 as usize])
    }

    /// Table lookup without the char-2 guard; in GF(2) every element is a
    /// square, which is what root counting needs.
    #[inline]
    pub(crate) fn class_unchecked(&self, a: Fe) -> SquareClass {
        self.classes[a.0 as usize]
    }

    /// Number of roots of `a x² + b x + c` with `a ≠ 0`, counted as points.
    pub(crate) fn quadratic_root_count(&self, a: Fe, b: Fe, c: Fe) -> usize {
        debug_assert!(!a.is_zero());
        if self.is_char2() {
            return self
                .elements()
                .filter(|&x| self.eval_quadratic(a, b, c, x).is_zero())
                .count();
        }
        let disc = self.sub(self.square(b), self.mul(Fe(4 % self.q), self.mul(a, c)));
        match self.class_unchecked(disc) {
            SquareClass::Zero => 1,
            SquareClass::Square => 2,
            SquareClass::Nonsquare => 0,
        }
    }

    #[inline]
    pub(crate) fn eval_quadratic(&self, a: Fe, b: Fe, c: Fe, x: Fe) -> Fe {
        self.add(self.mul(self.add(self.mul(a, x), b), x), c)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction() {
        assert_eq!(FieldSpec::new(5).unwrap().q(), 5);
        assert_eq!(FieldSpec::new(4), Err(FieldError::NotPrime(4)));
        assert!(FieldSpec::new(2).unwrap().is_char2());
        assert_eq!(FieldSpec::new(103), Err(FieldError::OutOfRange { q: 103, bound: 101 }));
        assert!(matches!(FieldSpec::new(1), Err(FieldError::OutOfRange { .. })));
        assert!(FieldSpec::with_bound(103, 200).is_ok());
    }

    #[test]
    fn arithmetic_examples() {
        let f5 = FieldSpec::new(5).unwrap();
        assert_eq!(f5.mul(Fe(2), Fe(3)), Fe(1));
        assert_eq!(f5.inv(Fe(4)), Ok(Fe(4)));
        assert_eq!(f5.inv(Fe(0)), Err(FieldError::DivisionByZero(5)));
        assert_eq!(f5.div(Fe(1), Fe(0)), Err(FieldError::DivisionByZero(5)));
        assert_eq!(f5.sub(Fe(1), Fe(3)), Fe(3));
        assert_eq!(f5.neg(Fe(0)), Fe(0));
        assert_eq!(f5.elem(-7), Fe(3));
        let f7 = FieldSpec::new(7).unwrap();
        assert_eq!(f7.pow(Fe(3), 2), Fe(2));
        assert_eq!(f7.pow(Fe(3), 6), Fe(1));
    }

    #[test]
    fn square_classes_gf5() {
        let f5 = FieldSpec::new(5).unwrap();
        // {k² : k ∈ GF(5)*} = {1, 4}
        let squares: Vec<u32> = f5.nonzero().map(|k| f5.square(k).0).collect();
        assert!(squares.contains(&4) && !squares.contains(&2));
        assert_eq!(f5.square_class(Fe(4)), Ok(SquareClass::Square));
        assert_eq!(f5.square_class(Fe(2)), Ok(SquareClass::Nonsquare));
        assert_eq!(f5.square_class(Fe(0)), Ok(SquareClass::Zero));
        let f2 = FieldSpec::new(2).unwrap();
        assert_eq!(f2.square_class(Fe(1)), Err(FieldError::Char2));
    }

    #[test]
    fn square_class_counts_exhaustive() {
        for q in (3..=DEFAULT_BOUND).filter(|&q| is_prime(q)) {
            let f = FieldSpec::new(q).unwrap();
            let squares = f
                .nonzero()
                .filter(|&a| f.square_class(a) == Ok(SquareClass::Square))
                .count();
            let nonsquares = f
                .nonzero()
                .filter(|&a| f.square_class(a) == Ok(SquareClass::Nonsquare))
                .count();
            assert_eq!(squares, (q as usize - 1) / 2, "q={q}");
            assert_eq!(nonsquares, (q as usize - 1) / 2, "q={q}");
        }
    }

    #[test]
    fn root_count_matches_enumeration() {
        for q in [2u32, 3, 5, 7] {
            let f = FieldSpec::new(q).unwrap();
            for a in f.nonzero() {
                for b in f.elements() {
                    for c in f.elements() {
                        let brute = f.elements().filter(|&x| f.eval_quadratic(a, b, c, x).is_zero()).count();
                        assert_eq!(f.quadratic_root_count(a, b, c), brute);
                    }
                }
            }
        }
    }

    fn field_and_pair() -> impl Strategy<Value = (u32, u32, u32)> {
        prop::sample::select(vec![3u32, 5, 7, 11, 13, 31, 101]).prop_flat_map(|q| (Just(q), 1..q, 1..q))
    }

    proptest! {
        #[test]
        fn inverse_law((q, a, _b) in field_and_pair()) {
            let f = FieldSpec::new(q).unwrap();
            let a = Fe(a);
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
        }

        #[test]
        fn square_class_is_a_homomorphism((q, a, b) in field_and_pair()) {
            let f = FieldSpec::new(q).unwrap();
            let (a, b) = (Fe(a), Fe(b));
            let lhs = f.square_class(f.mul(a, b)).unwrap();
            let rhs = f.square_class(a).unwrap() * f.square_class(b).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn fermat_matches_table((q, a, _b) in field_and_pair()) {
            let f = FieldSpec::new(q).unwrap();
            prop_assert_eq!(f.pow(Fe(a), q as u64 - 2), f.inv(Fe(a)).unwrap());
        }
    }
}

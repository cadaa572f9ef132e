//! Exact scalars: rationals and Gaussian rationals `re + im·i`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

/// An element of Q(i). Both parts are always in lowest terms (guaranteed by
/// `BigRational`), so structural equality is value equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        Self { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(Rational::from_integer(BigInt::from(n)))
    }

    pub fn from_frac(num: i64, den: i64) -> Self {
        Self::real(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn real(re: Rational) -> Self {
        Self { re, im: Rational::zero() }
    }

    pub fn imag(im: Rational) -> Self {
        Self { re: Rational::zero(), im }
    }

    pub fn i() -> Self {
        Self::imag(Rational::one())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_imaginary(&self) -> bool {
        self.re.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Multiplies by `i`.
    pub fn mul_i(&self) -> Self {
        Self { re: -self.im.clone(), im: self.re.clone() }
    }

    /// Multiplies by `-i`.
    pub fn mul_neg_i(&self) -> Self {
        Self { re: self.im.clone(), im: -self.re.clone() }
    }

    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(Self { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn scale_int(&self, k: i64) -> Self {
        let k = Rational::from_integer(BigInt::from(k));
        Self { re: &self.re * &k, im: &self.im * &k }
    }

    /// Least common multiple of the denominators of both parts.
    pub fn denom_lcm(&self) -> BigInt {
        use num_integer::Integer;
        self.re.denom().lcm(self.im.denom())
    }
}

impl Zero for GaussianRational {
    fn zero() -> Self {
        Self { re: Rational::zero(), im: Rational::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussianRational {
    fn one() -> Self {
        Self::real(Rational::one())
    }
}

impl From<Rational> for GaussianRational {
    fn from(r: Rational) -> Self {
        Self::real(r)
    }
}

impl From<i64> for GaussianRational {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        // real-by-real is by far the most common case
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussianRational::real(&self.re * &rhs.re);
        }
        if self.re.is_zero() && rhs.re.is_zero() {
            return GaussianRational::real(-(&self.im * &rhs.im));
        }
        GaussianRational { re: &self.re * &rhs.re - &self.im * &rhs.im, im: &self.re * &rhs.im + &self.im * &rhs.re }
    }
}

impl<'a> Div<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        let inv = rhs.inv().expect("division by zero in Q(i)");
        self * &inv
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<GaussianRational> for GaussianRational {
            type Output = GaussianRational;
            fn $m(self, rhs: GaussianRational) -> GaussianRational {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a GaussianRational> for GaussianRational {
            type Output = GaussianRational;
            fn $m(self, rhs: &GaussianRational) -> GaussianRational {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re, im: -self.im }
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, rhs: &GaussianRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussianRational> for GaussianRational {
    fn sub_assign(&mut self, rhs: &GaussianRational) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

pub(crate) fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// How a coefficient is printed in front of a monomial: a sign and the
/// magnitude text, where an empty magnitude means a unit coefficient.
pub(crate) struct SignedText {
    pub negative: bool,
    pub body: String,
}

impl GaussianRational {
    /// Splits the coefficient into sign and body following the canonical
    /// textual rendering: `a/b`, `a/b*i`, or `(a/b+c/d*i)` (the latter never
    /// carries an outer sign).
    pub(crate) fn signed_text(&self) -> SignedText {
        if self.is_real() || self.is_imaginary() {
            let (v, imag) = if self.is_real() { (&self.re, false) } else { (&self.im, true) };
            let negative = v.is_negative();
            let mag = v.abs();
            let body = match (mag.is_one(), imag) {
                (true, false) => String::new(),
                (true, true) => "i".to_string(),
                (false, false) => fmt_rational(&mag),
                (false, true) => format!("{}*i", fmt_rational(&mag)),
            };
            SignedText { negative, body }
        } else {
            let im_mag = self.im.abs();
            let im_txt = if im_mag.is_one() { "i".to_string() } else { format!("{}*i", fmt_rational(&im_mag)) };
            let sep = if self.im.is_negative() { '-' } else { '+' };
            SignedText { negative: false, body: format!("({}{}{})", fmt_rational(&self.re), sep, im_txt) }
        }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.signed_text();
        let body = if t.body.is_empty() { "1" } else { t.body.as_str() };
        if t.negative {
            write!(f, "-{body}")
        } else {
            write!(f, "{body}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn lowest_terms_and_positive_denominator() {
        let x = GaussianRational::new(q(4, -6), q(10, 4));
        assert_eq!(x.re, q(-2, 3));
        assert!(x.re.denom().is_positive());
        assert_eq!(x.im, q(5, 2));
    }

    #[test]
    fn field_inverse() {
        let x = GaussianRational::new(q(3, 2), q(-7, 5));
        let one = &x * &x.inv().unwrap();
        assert!(one.is_one());
        assert!(GaussianRational::zero().inv().is_none());
    }

    #[test]
    fn i_squared_is_minus_one() {
        let i = GaussianRational::i();
        assert_eq!(&i * &i, GaussianRational::from_int(-1));
        assert_eq!(i.mul_i(), GaussianRational::from_int(-1));
        assert_eq!(GaussianRational::from_int(2).mul_neg_i(), GaussianRational::imag(q(-2, 1)));
    }

    #[test]
    fn display_forms() {
        assert_eq!(GaussianRational::from_frac(-5, 2).to_string(), "-5/2");
        assert_eq!(GaussianRational::imag(q(3, 4)).to_string(), "3/4*i");
        assert_eq!(GaussianRational::i().to_string(), "i");
        assert_eq!(GaussianRational::new(q(1, 2), q(-1, 3)).to_string(), "(1/2-1/3*i)");
        assert_eq!(GaussianRational::new(q(1, 1), q(1, 1)).to_string(), "(1+i)");
    }
}

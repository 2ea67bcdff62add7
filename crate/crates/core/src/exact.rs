//! Exact arithmetic: rationals, an extended rational with `+inf`, square-root
//! valued quantities, power-of-two rounding and decimal rendering.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qu(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Nonnegative rational or `+inf`. Used for bandwidths (infinite links) and
/// for costs that may blow up on zero-bandwidth links.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    Fin(Q),
    Inf,
}

impl Ext {
    pub fn int(n: i64) -> Ext {
        Ext::Fin(q(n))
    }

    pub fn zero() -> Ext {
        Ext::Fin(Q::zero())
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Ext::Inf)
    }

    pub fn fin(&self) -> Option<&Q> {
        match self {
            Ext::Fin(x) => Some(x),
            Ext::Inf => None,
        }
    }

    /// `count / self`, with `x / inf = 0` and `x / 0 = inf` for `x > 0`.
    pub fn per(&self, count: &Q) -> Ext {
        match self {
            Ext::Inf => Ext::zero(),
            Ext::Fin(w) if w.is_zero() => {
                if count.is_zero() {
                    Ext::zero()
                } else {
                    Ext::Inf
                }
            }
            Ext::Fin(w) => Ext::Fin(count / w),
        }
    }

    pub fn add(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            _ => Ext::Inf,
        }
    }

    pub fn scale(&self, c: &Q) -> Ext {
        match self {
            Ext::Fin(a) => Ext::Fin(a * c),
            Ext::Inf if c.is_zero() => Ext::zero(),
            Ext::Inf => Ext::Inf,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::Fin(a) => a.to_f64().unwrap_or(f64::INFINITY),
            Ext::Inf => f64::INFINITY,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(x) => f.write_str(&fmt_sig(x, 12)),
            Ext::Inf => f.write_str("inf"),
        }
    }
}

/// A nonnegative real `sqrt(sq)` with rational square. Rational values are
/// embedded as their square, so comparisons never need a radical.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Surd {
    sq: Q,
}

impl Surd {
    pub fn zero() -> Surd {
        Surd { sq: Q::zero() }
    }

    pub fn rational(x: &Q) -> Surd {
        assert!(!x.is_negative(), "Surd values are nonnegative");
        Surd { sq: x * x }
    }

    pub fn sqrt_of(sq: Q) -> Surd {
        assert!(!sq.is_negative(), "Surd values are nonnegative");
        Surd { sq }
    }

    pub fn square(&self) -> &Q {
        &self.sq
    }

    pub fn is_zero(&self) -> bool {
        self.sq.is_zero()
    }

    /// The exact value when it is rational.
    pub fn as_rational(&self) -> Option<Q> {
        let n = exact_isqrt(self.sq.numer())?;
        let d = exact_isqrt(self.sq.denom())?;
        Some(Q::new(n, d))
    }

    pub fn scale(&self, c: &Q) -> Surd {
        Surd { sq: &self.sq * c * c }
    }

    pub fn mul(&self, other: &Surd) -> Surd {
        Surd { sq: &self.sq * &other.sq }
    }

    /// `self / other`, `None` when `other` is zero.
    pub fn div(&self, other: &Surd) -> Option<Surd> {
        if other.sq.is_zero() {
            None
        } else {
            Some(Surd { sq: &self.sq / &other.sq })
        }
    }

    pub fn cmp_q(&self, x: &Q) -> Ordering {
        if x.is_negative() {
            return Ordering::Greater;
        }
        self.sq.cmp(&(x * x))
    }

    pub fn to_f64(&self) -> f64 {
        self.sq.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    /// Rational approximation within `10^-digits` relative error.
    pub fn approx(&self, digits: u32) -> Q {
        if let Some(x) = self.as_rational() {
            return x;
        }
        let scale = BigInt::from(10u32).pow(digits);
        let scaled = (&self.sq * Q::from_integer(&scale * &scale)).floor().to_integer();
        Q::new(scaled.sqrt(), scale)
    }
}

impl Ord for Surd {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sq.cmp(&other.sq)
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_sig(&self.approx(40), 12))
    }
}

fn exact_isqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// Smallest `2^k` (`k >= 0`) with `2^k >= x`.
pub fn pow2_at_least(x: &Q) -> u64 {
    let mut d: u64 = 1;
    while qu(d) < *x {
        d = d.checked_mul(2).expect("power of two overflow");
    }
    d
}

/// Smallest `2^k` (`k >= 0`) with `2^k >= sqrt(x2)`, decided by comparing
/// `4^k` against `x2`.
pub fn pow2_at_least_sqrt(x2: &Q) -> u64 {
    let mut d: u64 = 1;
    while qu(d) * qu(d) < *x2 {
        d = d.checked_mul(2).expect("power of two overflow");
    }
    d
}

pub fn ceil_u64(x: &Q) -> u64 {
    x.ceil().to_integer().to_u64().expect("ceil out of range")
}

pub fn floor_u64(x: &Q) -> u64 {
    x.floor().to_integer().to_u64().expect("floor out of range")
}

fn round_half_even(x: &Q) -> BigInt {
    let (fl, rem) = x.numer().div_mod_floor(x.denom());
    let twice: BigInt = &rem * 2;
    match twice.cmp(x.denom()) {
        Ordering::Less => fl,
        Ordering::Greater => fl + 1,
        Ordering::Equal => {
            if fl.is_even() {
                fl
            } else {
                fl + 1
            }
        }
    }
}

fn pow10(e: i64) -> Q {
    let p = Q::from_integer(BigInt::from(10u32).pow(e.unsigned_abs() as u32));
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

/// Render `x` in fixed notation with `sig` significant digits, rounding half
/// to even, trailing zeros removed.
pub fn fmt_sig(x: &Q, sig: u32) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let a = x.abs();
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    while pow10(e) > a {
        e -= 1;
    }
    while pow10(e + 1) <= a {
        e += 1;
    }
    let mut scale = sig as i64 - 1 - e;
    let mut m = round_half_even(&(&a * pow10(scale)));
    if m == BigInt::from(10u32).pow(sig) {
        scale -= 1;
        m = round_half_even(&(&a * pow10(scale)));
    }
    let digits = m.to_string();
    let mut out = if scale <= 0 {
        let mut s = digits;
        s.extend(std::iter::repeat_n('0', (-scale) as usize));
        s
    } else {
        let scale = scale as usize;
        let padded =
            if digits.len() <= scale { format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits) } else { digits };
        let (int, frac) = padded.split_at(padded.len() - scale);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    };
    if neg {
        out.insert(0, '-');
    }
    out
}

/// Parse a nonnegative decimal such as `3`, `0.25` or `1e3` into an exact rational.
pub fn parse_decimal(s: &str) -> Option<Q> {
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    Some(Q::from_integer(digits) * pow10(exp - frac.len() as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_division_rules() {
        assert_eq!(Ext::Inf.per(&q(5)), Ext::zero());
        assert_eq!(Ext::zero().per(&q(5)), Ext::Inf);
        assert_eq!(Ext::zero().per(&q(0)), Ext::zero());
        assert_eq!(Ext::int(2).per(&q(6)), Ext::int(3));
        assert!(Ext::int(1_000_000) < Ext::Inf);
    }

    #[test]
    fn surd_ordering_and_rationality() {
        let a = Surd::sqrt_of(q(2));
        let b = Surd::rational(&qr(3, 2));
        assert!(a < b);
        assert_eq!(a.as_rational(), None);
        assert_eq!(b.as_rational(), Some(qr(3, 2)));
        assert_eq!(Surd::sqrt_of(q(32)).as_rational(), None);
        assert_eq!(Surd::sqrt_of(q(64)).as_rational(), Some(q(8)));
        assert_eq!(a.cmp_q(&qr(141, 100)), Ordering::Greater);
        assert_eq!(a.cmp_q(&qr(142, 100)), Ordering::Less);
    }

    #[test]
    fn pow2_rounding() {
        assert_eq!(pow2_at_least(&qr(1, 3)), 1);
        assert_eq!(pow2_at_least(&q(4)), 4);
        assert_eq!(pow2_at_least(&qr(41, 10)), 8);
        // (6/sqrt5)^2 = 36/5, 2*(6/sqrt5) -> 144/5
        assert_eq!(pow2_at_least_sqrt(&qr(36, 5)), 4);
        assert_eq!(pow2_at_least_sqrt(&qr(144, 5)), 8);
        assert_eq!(pow2_at_least_sqrt(&q(16)), 4);
        assert_eq!(pow2_at_least_sqrt(&q(17)), 8);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(&q(2), 12), "2");
        assert_eq!(fmt_sig(&qr(2, 3), 12), "0.666666666667");
        assert_eq!(fmt_sig(&qr(1, 8), 12), "0.125");
        assert_eq!(fmt_sig(&q(123456789012345), 12), "123456789012000");
        assert_eq!(fmt_sig(&qr(-5, 2), 12), "-2.5");
        assert_eq!(fmt_sig(&qr(1, 1000), 12), "0.001");
        // ties go to even
        assert_eq!(fmt_sig(&qr(25, 10), 1), "2");
        assert_eq!(fmt_sig(&qr(35, 10), 1), "4");
        assert_eq!(fmt_sig(&qr(985, 100), 2), "9.8");
        assert_eq!(fmt_sig(&qr(995, 100), 2), "10");
        assert_eq!(fmt_sig(&qr(9999, 1000), 2), "10");
        assert_eq!(Surd::sqrt_of(q(2)).to_string(), "1.41421356237");
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("0.25"), Some(qr(1, 4)));
        assert_eq!(parse_decimal("3"), Some(q(3)));
        assert_eq!(parse_decimal("1e3"), Some(q(1000)));
        assert_eq!(parse_decimal("2.5e-1"), Some(qr(1, 4)));
        assert_eq!(parse_decimal("x"), None);
        assert_eq!(parse_decimal("-1"), None);
    }
}

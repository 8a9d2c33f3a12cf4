//! Exact scalar arithmetic: arbitrary-precision rationals, the asymmetry
//! parameter `q`, q-integers, q-factorials, and integer binomials.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Unbounded exact integer.
pub type Int = BigInt;
/// Unbounded exact rational, always kept in lowest terms with a positive
/// denominator (maintained by `num_rational::Ratio`).
pub type Rational = num_rational::BigRational;

/// Rational from an integer.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(Int::from(n))
}

/// Rational `n/d`. Panics on `d = 0`; for internal use with literal arguments.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(Int::from(n), Int::from(d))
}

/// The asymmetry parameter of the exclusion process: an exact rational in
/// `[0, 1]`. The value 1 (symmetric process) is admitted so that the
/// uniform-distribution sanity check is runnable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QParam(Rational);

impl QParam {
    /// Wrap a rational, rejecting values outside `[0, 1]`.
    pub fn new(value: Rational) -> Result<Self> {
        if value < Rational::zero() || value > Rational::one() {
            return Err(Error::Domain(format!("q = {value} outside [0, 1]")));
        }
        Ok(QParam(value))
    }

    /// `q = n/d`.
    pub fn from_ratio(n: i64, d: i64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("q with zero denominator".to_string()));
        }
        Self::new(rat(n, d))
    }

    pub fn zero() -> Self {
        QParam(Rational::zero())
    }

    pub fn one() -> Self {
        QParam(Rational::one())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `q^k` as an exact rational.
    pub fn pow(&self, k: u32) -> Rational {
        if k == 0 {
            Rational::one()
        } else {
            self.0.pow(k as i32)
        }
    }

    /// Nearest f64, for the statistical (Gillespie) path only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for QParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for QParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QParam::new(parse_rational(s)?)
    }
}

/// Parse `"p/r"` or a bare integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<Int> {
        Int::from_str(t.trim()).map_err(|_| Error::Domain(format!("malformed rational \"{s}\"")))
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(Error::Domain(format!("zero denominator in \"{s}\"")));
            }
            Ok(Rational::new(num, den))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// Parse a rational that may also be written as a finite decimal ("0.3" means
/// exactly 3/10). Used only where the interfaces admit decimal q.
pub fn parse_rational_or_decimal(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Domain(format!("malformed decimal \"{s}\"")));
        }
        let negative = whole.starts_with('-');
        let whole_int = if whole.is_empty() || whole == "-" || whole == "+" {
            Int::zero()
        } else {
            Int::from_str(whole).map_err(|_| Error::Domain(format!("malformed decimal \"{s}\"")))?
        };
        let scale = Int::from(10u32).pow(frac.len() as u32);
        let frac_int = Int::from_str(frac).expect("digits only");
        let numer = whole_int.abs() * &scale + frac_int;
        let signed = if negative { -numer } else { numer };
        Ok(Rational::new(signed, scale))
    } else {
        parse_rational(s)
    }
}

/// The q-integer `[k]_q = 1 + q + ... + q^{k-1}`; zero when `k = 0`.
pub fn q_int(k: u64, q: &QParam) -> Rational {
    let mut acc = Rational::zero();
    let mut term = Rational::one();
    for _ in 0..k {
        acc += &term;
        term *= q.value();
    }
    acc
}

/// The q-factorial `[k]_q! = [1]_q [2]_q ... [k]_q`; one when `k = 0`.
pub fn q_factorial(k: u64, q: &QParam) -> Rational {
    let mut acc = Rational::one();
    for i in 1..=k {
        acc *= q_int(i, q);
    }
    acc
}

/// Exact binomial coefficient. Rejects arguments outside `0 <= k <= n`.
pub fn binom(n: i64, k: i64) -> Result<Int> {
    if n < 0 || k < 0 || k > n {
        return Err(Error::Domain(format!("binom({n}, {k}) out of range")));
    }
    Ok(binom_unchecked(n as u64, k as u64))
}

/// Exact multinomial coefficient `n! / (p_1! ... p_m!)`. The parts must be
/// nonnegative and sum to `n`.
pub fn multinom(n: i64, parts: &[i64]) -> Result<Int> {
    if n < 0 || parts.iter().any(|&p| p < 0) {
        return Err(Error::Domain(format!(
            "multinom({n}; {parts:?}) has negative arguments"
        )));
    }
    if parts.iter().sum::<i64>() != n {
        return Err(Error::Domain(format!(
            "multinom({n}; {parts:?}): parts do not sum to n"
        )));
    }
    let mut remaining = n;
    let mut acc = Int::one();
    for &p in parts {
        acc *= binom_unchecked(remaining as u64, p as u64);
        remaining -= p;
    }
    Ok(acc)
}

/// Binomial that is zero outside `0 <= k <= n`, for closed forms where an
/// out-of-range index means "no such configurations".
pub(crate) fn binom_or_zero(n: i64, k: i64) -> Int {
    if n < 0 || k < 0 || k > n {
        Int::zero()
    } else {
        binom_unchecked(n as u64, k as u64)
    }
}

fn binom_unchecked(n: u64, k: u64) -> Int {
    let k = k.min(n - k.min(n));
    let mut acc = Int::one();
    for i in 0..k {
        acc = acc * Int::from(n - i) / Int::from(i + 1);
    }
    acc
}

/// Format an exact rational as a decimal string with the given number of
/// significant digits (used for the optional decimal output columns; the
/// decimal never feeds back into computation).
pub fn decimal_string(x: &Rational, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let negative = x.is_negative();
    let ax = x.abs();
    // scale into [10^(digits-1), 10^digits) by a power of ten
    let mut exp10: i64 = 0;
    let ten = rat_int(10);
    let hi = ten.pow(digits as i32);
    let lo = ten.pow(digits as i32 - 1);
    let mut v = ax.clone();
    while v >= hi {
        v /= &ten;
        exp10 += 1;
    }
    while v < lo {
        v *= &ten;
        exp10 -= 1;
    }
    // round to nearest integer
    let scaled = (&v + rat(1, 2)).floor().to_integer();
    let mut mantissa = scaled.to_string();
    if mantissa.len() > digits {
        // rounding carried into an extra digit (e.g. 999.95 -> 1000)
        mantissa.truncate(digits);
        exp10 += 1;
    }
    let point = digits as i64 + exp10; // digits before the decimal point
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(mantissa.trim_end_matches('0'));
        if out.ends_with('.') {
            out.push('0');
        }
    } else if (point as usize) >= mantissa.len() {
        out.push_str(&mantissa);
        for _ in 0..(point as usize - mantissa.len()) {
            out.push('0');
        }
    } else {
        let (a, b) = mantissa.split_at(point as usize);
        out.push_str(a);
        let b = b.trim_end_matches('0');
        if !b.is_empty() {
            out.push('.');
            out.push_str(b);
        }
    }
    out
}

/// Sum of rationals (helper for the many places a `Vec` gets totalled).
pub fn rational_sum<'a, I: IntoIterator<Item = &'a Rational>>(iter: I) -> Rational {
    let mut acc = Rational::zero();
    for x in iter {
        acc += x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn q_int_examples() {
        let half = QParam::from_ratio(1, 2).unwrap();
        assert_eq!(q_int(0, &half), Rational::zero());
        assert_eq!(q_int(3, &half), rat(7, 4));
        let zero = QParam::zero();
        for k in 1..6 {
            assert_eq!(q_int(k, &zero), Rational::one());
        }
    }

    #[test]
    fn q_factorial_examples() {
        let half = QParam::from_ratio(1, 2).unwrap();
        assert_eq!(q_factorial(0, &half), Rational::one());
        assert_eq!(q_factorial(3, &half), rat(21, 8));
        let one = QParam::one();
        assert_eq!(q_factorial(4, &one), rat_int(24));
    }

    #[test]
    fn binom_and_multinom_examples() {
        assert_eq!(binom(4, 2).unwrap(), Int::from(6));
        assert_eq!(multinom(3, &[1, 2, 0]).unwrap(), Int::from(3));
        assert_eq!(multinom(5, &[2, 2, 1]).unwrap(), Int::from(30));
        assert!(binom(3, 4).is_err());
        assert!(binom(-1, 0).is_err());
        assert!(multinom(4, &[1, 2]).is_err());
        assert!(multinom(3, &[4, -1]).is_err());
    }

    #[test]
    fn qparam_range() {
        assert!(QParam::from_ratio(3, 2).is_err());
        assert!(QParam::from_ratio(-1, 2).is_err());
        assert!(QParam::from_ratio(2, 0).is_err());
        assert_eq!(QParam::one().value(), &Rational::one());
    }

    #[test]
    fn parse_and_display_round_trip() {
        assert_eq!(parse_rational("7/4").unwrap(), rat(7, 4));
        assert_eq!(parse_rational("6/8").unwrap().to_string(), "3/4");
        assert_eq!(parse_rational("0").unwrap().to_string(), "0");
        assert_eq!(parse_rational("-2/4").unwrap().to_string(), "-1/2");
        assert!(parse_rational("2/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert_eq!(parse_rational_or_decimal("0.3").unwrap(), rat(3, 10));
        assert_eq!(parse_rational_or_decimal("1.25").unwrap(), rat(5, 4));
        assert_eq!(parse_rational_or_decimal("-0.5").unwrap(), rat(-1, 2));
        assert!(parse_rational_or_decimal("0.3.1").is_err());
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(decimal_string(&rat(1, 4), 15), "0.25");
        assert_eq!(decimal_string(&rat(4, 27), 6), "0.148148");
        assert_eq!(decimal_string(&rat_int(120), 4), "120");
        assert_eq!(decimal_string(&rat(-1, 3), 3), "-0.333");
    }

    proptest! {
        // [k+1]_q = 1 + q [k]_q
        #[test]
        fn q_int_recurrence(k in 0u64..40, num in 0i64..=50, den in 1i64..=50) {
            prop_assume!(num <= den);
            let q = QParam::from_ratio(num, den).unwrap();
            prop_assert_eq!(
                q_int(k + 1, &q),
                Rational::one() + q.value() * q_int(k, &q)
            );
        }

        // 1 - 1/[t+1]_q = q [t]_q / [t+1]_q  (the step between W^B's two printed forms)
        #[test]
        fn q_int_complement_identity(t in 0u64..30, num in 0i64..=40, den in 1i64..=40) {
            prop_assume!(num <= den);
            let q = QParam::from_ratio(num, den).unwrap();
            let lhs = Rational::one() - q_int(t + 1, &q).recip();
            let rhs = q.value() * q_int(t, &q) / q_int(t + 1, &q);
            prop_assert_eq!(lhs, rhs);
        }

        // arithmetic stays canonical: recombining numerator/denominator is lossless
        #[test]
        fn canonical_lowest_terms(a in -100i64..100, b in 1i64..100, c in -100i64..100, d in 1i64..100) {
            let x = rat(a, b) + rat(c, d);
            let rebuilt = Rational::new(x.numer().clone(), x.denom().clone());
            prop_assert_eq!(&rebuilt, &x);
            prop_assert!(x.denom() > &Int::from(0));
            prop_assert!(num_integer::Integer::gcd(x.numer(), x.denom()).is_one() || x.numer().is_zero());
        }
    }
}

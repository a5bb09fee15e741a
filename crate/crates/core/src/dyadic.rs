//! Exact dyadic rationals `m * 2^-n` and precision-n approximations of
//! computable reals.
//!
//! `D_n` is the set of dyadics whose value times `2^n` is an integer. A
//! precision-n approximation `phi(n)` of a real `x` is an element of `D_n`
//! with `|phi(n) - x| <= 2^-n`. All ring operations on [`Dyadic`] are exact;
//! rounding happens only in [`Dyadic::round_to_precision`] and the
//! approximation routines, always to nearest with ties to an even mantissa.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicError {
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("square root of a negative number")]
    NegativeRadicand,
    #[error("cannot parse `{0}` as a dyadic rational")]
    Parse(String),
    #[error("`{0}` is not a dyadic rational")]
    NotDyadic(String),
}

/// `mantissa * 2^-exp` in canonical form: `exp == 0` or the mantissa is odd,
/// and zero is `0 * 2^0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exp: u64,
}

impl Dyadic {
    pub fn new(mantissa: impl Into<BigInt>, exp: u64) -> Dyadic {
        let mut d = Dyadic {
            mantissa: mantissa.into(),
            exp,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Dyadic {
        Dyadic {
            mantissa: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Dyadic {
        Dyadic::from_int(1)
    }

    pub fn from_int(v: impl Into<BigInt>) -> Dyadic {
        Dyadic::new(v, 0)
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0).min(self.exp);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exp -= tz;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    /// Smallest `n` with `self` in `D_n`.
    pub fn exponent(&self) -> u64 {
        self.exp
    }

    /// Membership in `D_n`.
    pub fn in_precision(&self, n: u64) -> bool {
        self.exp <= n
    }

    /// The integer `self * 2^n`, provided `self` lies in `D_n`.
    pub fn scaled_mantissa(&self, n: u64) -> Option<BigInt> {
        (self.exp <= n).then(|| &self.mantissa << (n - self.exp))
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exp: self.exp,
        }
    }

    /// `self * 2^-k`.
    pub fn shr(&self, k: u64) -> Dyadic {
        Dyadic::new(self.mantissa.clone(), self.exp + k)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u64) -> Dyadic {
        Dyadic::new(1, k)
    }

    /// Bit length of the mantissa.
    pub fn bits(&self) -> u64 {
        self.mantissa.bits()
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.mantissa.clone(), BigInt::one() << self.exp)
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits();
        if bits <= 1000 && self.exp <= 1000 {
            return self.mantissa.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(self.exp as i32));
        }
        let drop = bits.saturating_sub(64);
        let top = (&self.mantissa >> drop).to_f64().unwrap_or(f64::NAN);
        top * 2f64.powf(drop as f64 - self.exp as f64)
    }

    /// Nearest element of `D_n`, ties to an even mantissa.
    pub fn round_to_precision(&self, n: u64) -> Dyadic {
        if self.exp <= n {
            return self.clone();
        }
        let den = BigInt::one() << (self.exp - n);
        Dyadic::new(round_div_even(&self.mantissa, &den), n)
    }

    /// Exact decimal expansion.
    pub fn to_decimal_string(&self) -> String {
        if self.exp == 0 {
            return self.mantissa.to_string();
        }
        let digits = (self.mantissa.abs() * BigInt::from(5u32).pow(self.exp as u32)).to_string();
        let n = self.exp as usize;
        let padded = if digits.len() <= n {
            format!("{}{}", "0".repeat(n - digits.len() + 1), digits)
        } else {
            digits
        };
        let (int, frac) = padded.split_at(padded.len() - n);
        let sign = if self.is_negative() { "-" } else { "" };
        format!("{sign}{int}.{frac}")
    }

    /// Exact binary expansion, e.g. `0.0101`.
    pub fn to_binary_string(&self) -> String {
        let digits = self.mantissa.abs().to_str_radix(2);
        let n = self.exp as usize;
        let sign = if self.is_negative() { "-" } else { "" };
        if n == 0 {
            return format!("{sign}{digits}");
        }
        let padded = if digits.len() <= n {
            format!("{}{}", "0".repeat(n - digits.len() + 1), digits)
        } else {
            digits
        };
        let (int, frac) = padded.split_at(padded.len() - n);
        format!("{sign}{int}.{frac}")
    }
}

/// `round(num / den)` to nearest, ties to even; `den > 0`.
pub fn round_div_even(num: &BigInt, den: &BigInt) -> BigInt {
    debug_assert!(den.is_positive());
    let (q, r) = num.div_mod_floor(den);
    let twice: BigInt = r << 1u32;
    match twice.cmp(den) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1
            }
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        let a = &self.mantissa << (e - self.exp);
        let b = &other.mantissa << (e - other.exp);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        Dyadic::new(
            (&self.mantissa << (e - self.exp)) + (&rhs.mantissa << (e - rhs.exp)),
            e,
        )
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        Dyadic::new(
            (&self.mantissa << (e - self.exp)) - (&rhs.mantissa << (e - rhs.exp)),
            e,
        )
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        Dyadic::new(&self.mantissa * &rhs.mantissa, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -&self.mantissa,
            exp: self.exp,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl fmt::Display for Dyadic {
    /// `m/2^n`, or just `m` when `n == 0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "{}/2^{}", self.mantissa, self.exp)
        }
    }
}

impl FromStr for Dyadic {
    type Err = DyadicError;

    /// Accepts `m`, `m/2^n`, `m/d` with `d` a power of two, and terminating
    /// decimals such as `-0.375`.
    fn from_str(s: &str) -> Result<Dyadic, DyadicError> {
        let t = s.trim();
        let bad = || DyadicError::Parse(s.to_string());
        if let Some((m, d)) = t.split_once('/') {
            let m: BigInt = m.trim().parse().map_err(|_| bad())?;
            let d = d.trim();
            if let Some(n) = d.strip_prefix("2^") {
                let n: u64 = n.parse().map_err(|_| bad())?;
                return Ok(Dyadic::new(m, n));
            }
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(DyadicError::ZeroDenominator);
            }
            let r = BigRational::new(m, d);
            return Dyadic::try_from(&r);
        }
        if let Some((int, frac)) = t.split_once('.') {
            let neg = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if !frac.bytes().all(|b| b.is_ascii_digit())
                || !int_digits.bytes().all(|b| b.is_ascii_digit())
            {
                return Err(bad());
            }
            let all = format!("{int_digits}{frac}");
            let mag: BigInt = if all.is_empty() {
                return Err(bad());
            } else {
                all.parse().map_err(|_| bad())?
            };
            let r = BigRational::new(
                if neg { -mag } else { mag },
                BigInt::from(10u32).pow(frac.len() as u32),
            );
            return Dyadic::try_from(&r);
        }
        let m: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Dyadic::from_int(m))
    }
}

impl TryFrom<&BigRational> for Dyadic {
    type Error = DyadicError;

    fn try_from(r: &BigRational) -> Result<Dyadic, DyadicError> {
        let den = r.denom();
        let tz = den.trailing_zeros().unwrap_or(0);
        if (den >> tz) != BigInt::one() {
            return Err(DyadicError::NotDyadic(r.to_string()));
        }
        Ok(Dyadic::new(r.numer().clone(), tz))
    }
}

/// A complex number with dyadic parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ComplexDyadic {
    pub re: Dyadic,
    pub im: Dyadic,
}

impl ComplexDyadic {
    pub fn new(re: Dyadic, im: Dyadic) -> ComplexDyadic {
        ComplexDyadic { re, im }
    }

    pub fn zero() -> ComplexDyadic {
        ComplexDyadic::new(Dyadic::zero(), Dyadic::zero())
    }

    pub fn real(re: Dyadic) -> ComplexDyadic {
        ComplexDyadic::new(re, Dyadic::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> ComplexDyadic {
        ComplexDyadic::new(self.re.clone(), -&self.im)
    }

    /// `re^2 + im^2`, exact.
    pub fn norm_sqr(&self) -> Dyadic {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn in_precision(&self, n: u64) -> bool {
        self.re.in_precision(n) && self.im.in_precision(n)
    }
}

impl Add for &ComplexDyadic {
    type Output = ComplexDyadic;
    fn add(self, rhs: &ComplexDyadic) -> ComplexDyadic {
        ComplexDyadic::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &ComplexDyadic {
    type Output = ComplexDyadic;
    fn sub(self, rhs: &ComplexDyadic) -> ComplexDyadic {
        ComplexDyadic::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &ComplexDyadic {
    type Output = ComplexDyadic;
    fn mul(self, rhs: &ComplexDyadic) -> ComplexDyadic {
        if self.im.is_zero() && rhs.im.is_zero() {
            return ComplexDyadic::real(&self.re * &rhs.re);
        }
        ComplexDyadic::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl fmt::Display for ComplexDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "({},{})", self.re, self.im)
        }
    }
}

/// Precision-n approximation of `p/q`: nearest element of `D_n`, so the error
/// is at most `2^-(n+1)`.
pub fn approx_rational(p: &BigInt, q: &BigInt, n: u64) -> Result<Dyadic, DyadicError> {
    if q.is_zero() {
        return Err(DyadicError::ZeroDenominator);
    }
    let (p, q) = if q.is_negative() {
        (-p, -q)
    } else {
        (p.clone(), q.clone())
    };
    Ok(Dyadic::new(round_div_even(&(p << n), &q), n))
}

/// Guard bits used by the square-root routines.
const SQRT_GUARD: u64 = 2;

/// Precision-n approximation of `sqrt(p/q)` with error below
/// `2^-(n+1) + 2^-(n+2)`.
///
/// Computes `s = isqrt(floor(p/q * 4^(n+g)))`, so that `s / 2^(n+g)` is within
/// `2^-(n+g)` below the root, then rounds `s / 2^g` to nearest.
pub fn approx_sqrt_rational(p: &BigInt, q: &BigInt, n: u64) -> Result<Dyadic, DyadicError> {
    if q.is_zero() {
        return Err(DyadicError::ZeroDenominator);
    }
    let (p, q) = if q.is_negative() {
        (-p, -q)
    } else {
        (p.clone(), q.clone())
    };
    if p.is_negative() {
        return Err(DyadicError::NegativeRadicand);
    }
    let scaled = (p << (2 * (n + SQRT_GUARD))).div_floor(&q);
    let s = isqrt(scaled.magnitude());
    let m = round_div_even(&BigInt::from(s), &(BigInt::one() << SQRT_GUARD));
    Ok(Dyadic::new(m, n))
}

/// Precision-n approximation of `sqrt(d)`.
pub fn approx_sqrt(d: &Dyadic, n: u64) -> Result<Dyadic, DyadicError> {
    approx_sqrt_rational(d.mantissa(), &(BigInt::one() << d.exponent()), n)
}

/// `floor(sqrt(v))` by Newton iteration seeded from the root of the top half
/// of the bits, so only a couple of full-width divisions are needed.
pub fn isqrt(v: &BigUint) -> BigUint {
    let bits = v.bits();
    if bits <= 64 {
        let x = v.to_u64().expect("fits in 64 bits");
        return BigUint::from(isqrt_u64(x));
    }
    let shift = (bits / 4) * 2;
    let hi = isqrt(&(v >> shift));
    // (hi + 1) * 2^(shift/2) exceeds sqrt(v), so Newton descends monotonically.
    let mut x: BigUint = (hi + 1u32) << (shift / 2);
    loop {
        let y: BigUint = (&x + v / &x) >> 1u32;
        if y >= x {
            return x;
        }
        x = y;
    }
}

fn isqrt_u64(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while (r as u128) * (r as u128) > x as u128 {
        r -= 1;
    }
    while ((r + 1) as u128) * ((r + 1) as u128) <= x as u128 {
        r += 1;
    }
    r
}

/// A real number with a precision-n approximation procedure.
pub trait Approximable {
    fn approx(&self, n: u64) -> Dyadic;

    fn label(&self) -> String;
}

/// Exact real of the forms understood by experiment files and the CLI:
/// a rational `p/q` or a signed square root `±sqrt(p/q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealExpr {
    Rational(BigRational),
    Sqrt {
        negative: bool,
        radicand: BigRational,
    },
}

impl RealExpr {
    pub fn is_zero(&self) -> bool {
        match self {
            RealExpr::Rational(r) => r.is_zero(),
            RealExpr::Sqrt { radicand, .. } => radicand.is_zero(),
        }
    }

    /// The exact value when it is a dyadic rational.
    pub fn as_dyadic(&self) -> Option<Dyadic> {
        match self {
            RealExpr::Rational(r) => Dyadic::try_from(r).ok(),
            RealExpr::Sqrt { .. } => None,
        }
    }

    /// `x^2` when rational (always the case for these forms), with sign of x.
    pub fn signed_square(&self) -> (bool, BigRational) {
        match self {
            RealExpr::Rational(r) => (r.is_negative(), r * r),
            RealExpr::Sqrt { negative, radicand } => (*negative, radicand.clone()),
        }
    }
}

impl Approximable for RealExpr {
    fn approx(&self, n: u64) -> Dyadic {
        match self {
            RealExpr::Rational(r) => approx_rational(r.numer(), r.denom(), n)
                .expect("BigRational denominators are nonzero"),
            RealExpr::Sqrt { negative, radicand } => {
                let a = approx_sqrt_rational(radicand.numer(), radicand.denom(), n)
                    .expect("radicand checked non-negative at construction");
                if *negative {
                    -a
                } else {
                    a
                }
            }
        }
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealExpr::Rational(r) => write!(f, "{r}"),
            RealExpr::Sqrt { negative, radicand } => {
                write!(f, "{}sqrt({radicand})", if *negative { "-" } else { "" })
            }
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational, DyadicError> {
    let bad = || DyadicError::Parse(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(DyadicError::ZeroDenominator);
        }
        Ok(BigRational::new(p, q))
    } else if t.contains('.') {
        let d: Dyadic = t.parse()?;
        Ok(d.to_rational())
    } else {
        let p: BigInt = t.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(p))
    }
}

impl FromStr for RealExpr {
    type Err = DyadicError;

    /// `p`, `p/q`, `sqrt(p/q)`, `-sqrt(p)`, and so on.
    fn from_str(s: &str) -> Result<RealExpr, DyadicError> {
        let t = s.trim();
        let (negative, body) = match t.strip_prefix('-') {
            Some(rest) if rest.trim_start().starts_with("sqrt") => (true, rest.trim_start()),
            _ => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        if let Some(inner) = body.strip_prefix("sqrt") {
            let inner = inner
                .trim()
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| DyadicError::Parse(s.to_string()))?;
            let radicand = parse_rational(inner)?;
            if radicand.is_negative() {
                return Err(DyadicError::NegativeRadicand);
            }
            return Ok(RealExpr::Sqrt { negative, radicand });
        }
        Ok(RealExpr::Rational(parse_rational(t)?))
    }
}

//! Exact scalars: rationals extended by a single quadratic irrationality.
//!
//! Every quantity the toolkit reasons about is either rational or an element
//! `a + c*sqrt(d)` of a real quadratic field. Keeping the radicand explicit
//! lets every comparison bottom out in integer sign tests, so strip
//! membership, arc lengths, and measure arithmetic stay exact regardless of
//! how far a computation is pushed.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::{Integer, Roots};
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Integer backing for all exact arithmetic.
///
/// `i64` is enough for small experiments; the crate-level aliases use
/// `num_bigint::BigInt` so intermediate products never overflow.
pub trait ExactInt:
    Integer + Roots + Signed + ToPrimitive + Clone + Hash + fmt::Debug + fmt::Display + From<i64> + 'static
{
}

impl<T> ExactInt for T where
    T: Integer
        + Roots
        + Signed
        + ToPrimitive
        + Clone
        + Hash
        + fmt::Debug
        + fmt::Display
        + From<i64>
        + 'static
{
}

/// An element `rat + coeff * sqrt(rad)` of `Q` or a real quadratic field.
///
/// The representation is canonical: `rad` is zero exactly when the value is
/// rational, and otherwise square-free and at least 2 with `coeff` nonzero.
/// Canonicity makes structural equality coincide with numeric equality, so
/// `Eq` and `Hash` can be derived.
///
/// Addition and multiplication panic when the exact result would leave every
/// representable field (for example `sqrt(2) + sqrt(3)`). Comparisons never
/// panic: ordering across distinct radicands is decided by sign-tracked
/// squaring, which stays inside integer arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadExt<T: ExactInt> {
    rat: Ratio<T>,
    coeff: Ratio<T>,
    rad: T,
}

impl<T: ExactInt> QuadExt<T> {
    /// Builds `rat + coeff * sqrt(rad)`, normalising to canonical form.
    ///
    /// Square factors are pulled out of the radicand and perfect squares fold
    /// into the rational part. Panics if `rad` is negative.
    pub fn new(rat: Ratio<T>, coeff: Ratio<T>, rad: T) -> Self {
        assert!(!rad.is_negative(), "negative radicand {rad} has no real square root");
        if coeff.is_zero() || rad.is_zero() {
            return Self { rat, coeff: Ratio::zero(), rad: T::zero() };
        }
        let root = rad.sqrt();
        if root.clone() * root.clone() == rad {
            return Self {
                rat: rat + coeff * Ratio::from_integer(root),
                coeff: Ratio::zero(),
                rad: T::zero(),
            };
        }
        let (extracted, reduced) = extract_square_part(rad);
        let coeff = coeff * Ratio::from_integer(extracted);
        if reduced.is_one() {
            return Self { rat: rat + coeff, coeff: Ratio::zero(), rad: T::zero() };
        }
        Self { rat, coeff, rad: reduced }
    }

    pub fn from_ratio(rat: Ratio<T>) -> Self {
        Self { rat, coeff: Ratio::zero(), rad: T::zero() }
    }

    pub fn from_int(n: T) -> Self {
        Self::from_ratio(Ratio::from_integer(n))
    }

    pub fn from_i64(n: i64) -> Self {
        Self::from_int(T::from(n))
    }

    /// `p/q` as an exact scalar.
    pub fn from_fraction(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Self::from_ratio(Ratio::new(T::from(p), T::from(q)))
    }

    /// `sqrt(d)` for a nonnegative integer `d`.
    pub fn sqrt_of(d: i64) -> Self {
        Self::new(Ratio::zero(), Ratio::one(), T::from(d))
    }

    pub fn zero() -> Self {
        Self::from_ratio(Ratio::zero())
    }

    pub fn one() -> Self {
        Self::from_ratio(Ratio::one())
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero() && self.rat.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.coeff.is_zero()
    }

    /// The exact rational value, or `None` when the scalar is irrational.
    pub fn to_ratio(&self) -> Option<Ratio<T>> {
        if self.is_rational() {
            Some(self.rat.clone())
        } else {
            None
        }
    }

    pub fn rational_part(&self) -> &Ratio<T> {
        &self.rat
    }

    pub fn surd_coeff(&self) -> &Ratio<T> {
        &self.coeff
    }

    pub fn radicand(&self) -> &T {
        &self.rad
    }

    /// Sign of the value: -1, 0, or 1.
    pub fn signum(&self) -> i32 {
        sign_two_term(&self.rat, &self.coeff, &self.rad)
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Exact floor as an integer of the backing type.
    ///
    /// For an irrational `(A + C*sqrt(d))/D` the surd part lies strictly
    /// between consecutive integers `s` and `s+1` where `s = isqrt(C^2 d)`,
    /// so the floor reduces to one integer square root and a floored
    /// division.
    pub fn floor_int(&self) -> T {
        if self.coeff.is_zero() {
            return self.rat.floor().to_integer();
        }
        let denom = self.rat.denom().clone() * self.coeff.denom().clone();
        let a = self.rat.numer().clone() * self.coeff.denom().clone();
        let c = self.coeff.numer().clone() * self.rat.denom().clone();
        let s = (c.clone() * c.clone() * self.rad.clone()).sqrt();
        let below = if c.is_positive() { a + s } else { a - s - T::one() };
        below.div_floor(&denom)
    }

    pub fn ceil_int(&self) -> T {
        -(-self.clone()).floor_int()
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(&self) -> Self {
        self.clone() - Self::from_int(self.floor_int())
    }

    /// Nearest `f64`, for report columns and search heuristics only.
    pub fn to_f64(&self) -> f64 {
        let rad = self.rad.to_f64().unwrap_or(f64::INFINITY);
        ratio_to_f64(&self.rat) + ratio_to_f64(&self.coeff) * rad.sqrt()
    }

    /// Exact comparison, valid across distinct radicands.
    ///
    /// Rewrites `x ? y` as `z ? w` with `z` in a single quadratic field and
    /// `w` a pure surd, then squares both sides once their common sign is
    /// known. At most two squarings decide any case.
    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        if self.coeff.is_zero() || other.coeff.is_zero() || self.rad == other.rad {
            let rad = if self.coeff.is_zero() { other.rad.clone() } else { self.rad.clone() };
            let a = self.rat.clone() - other.rat.clone();
            let c = self.coeff.clone() - other.coeff.clone();
            return ordering_from_sign(sign_two_term(&a, &c, &rad));
        }
        let za = self.rat.clone() - other.rat.clone();
        let sz = sign_two_term(&za, &self.coeff, &self.rad);
        let sw = ratio_sign(&other.coeff);
        if sz != sw {
            return ordering_from_sign(sz - sw);
        }
        if sz == 0 {
            return Ordering::Equal;
        }
        // z and w share a strict sign; compare squares in the field of z.
        let z_sq_rat = za.clone() * za.clone()
            + self.coeff.clone() * self.coeff.clone() * Ratio::from_integer(self.rad.clone());
        let z_sq_coeff = Ratio::from_integer(T::from(2)) * za * self.coeff.clone();
        let w_sq = other.coeff.clone()
            * other.coeff.clone()
            * Ratio::from_integer(other.rad.clone());
        let squared = ordering_from_sign(sign_two_term(&(z_sq_rat - w_sq), &z_sq_coeff, &self.rad));
        if sz > 0 {
            squared
        } else {
            squared.reverse()
        }
    }

    pub fn cmp_ratio(&self, other: &Ratio<T>) -> Ordering {
        self.cmp_exact(&Self::from_ratio(other.clone()))
    }

    /// Scales by an integer without leaving the field.
    pub fn scale_int(&self, n: i64) -> Self {
        let r = Ratio::from_integer(T::from(n));
        Self::new(self.rat.clone() * r.clone(), self.coeff.clone() * r, self.rad.clone())
    }

    fn same_field(&self, other: &Self) -> bool {
        self.coeff.is_zero() || other.coeff.is_zero() || self.rad == other.rad
    }
}

fn extract_square_part<T: ExactInt>(mut d: T) -> (T, T) {
    let mut extracted = T::one();
    let mut f = T::from(2);
    while f.clone() * f.clone() <= d {
        let ff = f.clone() * f.clone();
        while (d.clone() % ff.clone()).is_zero() {
            d = d / ff.clone();
            extracted = extracted * f.clone();
        }
        f = f + T::one();
    }
    (extracted, d)
}

fn ratio_sign<T: ExactInt>(r: &Ratio<T>) -> i32 {
    if r.is_zero() {
        0
    } else if r.numer().is_positive() {
        1
    } else {
        -1
    }
}

/// Sign of `a + c*sqrt(d)` with `d` square-free (or the pair rational).
fn sign_two_term<T: ExactInt>(a: &Ratio<T>, c: &Ratio<T>, d: &T) -> i32 {
    if c.is_zero() || d.is_zero() {
        return ratio_sign(a);
    }
    let sa = ratio_sign(a);
    let sc = ratio_sign(c);
    if sa == 0 {
        return sc;
    }
    if sa == sc {
        return sa;
    }
    // Opposite signs: |a| vs |c|*sqrt(d) squares to a^2 vs c^2 d.
    let lhs = a.clone() * a.clone();
    let rhs = c.clone() * c.clone() * Ratio::from_integer(d.clone());
    match (lhs.cmp(&rhs), sa > 0) {
        (Ordering::Greater, true) | (Ordering::Less, false) => 1,
        (Ordering::Less, true) | (Ordering::Greater, false) => -1,
        (Ordering::Equal, _) => 0,
    }
}

fn ordering_from_sign(s: i32) -> Ordering {
    s.cmp(&0)
}

pub(crate) fn ratio_to_f64<T: ExactInt>(r: &Ratio<T>) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    let q = n / d;
    if q.is_finite() {
        q
    } else {
        // Magnitudes past f64 range: divide first, then convert.
        r.numer().div_floor(r.denom()).to_f64().unwrap_or(f64::INFINITY)
    }
}

impl<T: ExactInt> PartialOrd for QuadExt<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_exact(other))
    }
}

impl<T: ExactInt> Ord for QuadExt<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_exact(other)
    }
}

impl<T: ExactInt> Neg for QuadExt<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { rat: -self.rat, coeff: -self.coeff, rad: self.rad }
    }
}

impl<T: ExactInt> Add for QuadExt<T> {
    type Output = Self;
    fn add(self, other: Self) -> Self {
        assert!(
            self.same_field(&other),
            "sum of sqrt({}) and sqrt({}) terms leaves the quadratic field",
            self.rad,
            other.rad
        );
        let rad = if self.coeff.is_zero() { other.rad } else { self.rad };
        Self::new(self.rat + other.rat, self.coeff + other.coeff, rad)
    }
}

impl<T: ExactInt> Sub for QuadExt<T> {
    type Output = Self;
    fn sub(self, other: Self) -> Self {
        self + (-other)
    }
}

impl<T: ExactInt> Mul for QuadExt<T> {
    type Output = Self;
    fn mul(self, other: Self) -> Self {
        if self.coeff.is_zero() {
            let r = self.rat;
            return Self::new(other.rat * r.clone(), other.coeff * r, other.rad);
        }
        if other.coeff.is_zero() {
            let r = other.rat;
            return Self::new(self.rat * r.clone(), self.coeff * r, self.rad);
        }
        if self.rad == other.rad {
            let d = Ratio::from_integer(self.rad.clone());
            return Self::new(
                self.rat.clone() * other.rat.clone() + self.coeff.clone() * other.coeff.clone() * d,
                self.rat * other.coeff + self.coeff * other.rat,
                self.rad,
            );
        }
        if self.rat.is_zero() && other.rat.is_zero() {
            // Pure surds multiply across fields: c sqrt(d) * c' sqrt(d') = cc' sqrt(dd').
            return Self::new(Ratio::zero(), self.coeff * other.coeff, self.rad * other.rad);
        }
        panic!(
            "product of sqrt({}) and sqrt({}) terms leaves the quadratic field",
            self.rad, other.rad
        );
    }
}

impl<T: ExactInt> Div for QuadExt<T> {
    type Output = Self;
    fn div(self, other: Self) -> Self {
        assert!(!other.is_zero(), "division by zero scalar");
        if other.coeff.is_zero() {
            let r = other.rat.recip();
            return Self::new(self.rat * r.clone(), self.coeff * r, self.rad);
        }
        // Multiply by the conjugate; the norm a^2 - c^2 d is a nonzero rational.
        let norm = other.rat.clone() * other.rat.clone()
            - other.coeff.clone() * other.coeff.clone() * Ratio::from_integer(other.rad.clone());
        let conj = Self { rat: other.rat, coeff: -other.coeff, rad: other.rad };
        (self * conj) / Self::from_ratio(norm)
    }
}

impl<T: ExactInt> From<Ratio<T>> for QuadExt<T> {
    fn from(r: Ratio<T>) -> Self {
        Self::from_ratio(r)
    }
}

impl<T: ExactInt> fmt::Display for QuadExt<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_ratio<T: ExactInt>(f: &mut fmt::Formatter<'_>, r: &Ratio<T>) -> fmt::Result {
            if r.denom().is_one() {
                write!(f, "{}", r.numer())
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())
            }
        }
        fn write_surd<T: ExactInt>(f: &mut fmt::Formatter<'_>, c: &Ratio<T>, d: &T) -> fmt::Result {
            if c.is_one() {
                write!(f, "sqrt({d})")
            } else {
                write_ratio(f, c)?;
                write!(f, "*sqrt({d})")
            }
        }
        if self.coeff.is_zero() {
            return write_ratio(f, &self.rat);
        }
        if self.rat.is_zero() {
            if self.coeff.is_negative() {
                write!(f, "-")?;
            }
            return write_surd(f, &self.coeff.abs(), &self.rad);
        }
        write_ratio(f, &self.rat)?;
        write!(f, " {} ", if self.coeff.is_negative() { "-" } else { "+" })?;
        write_surd(f, &self.coeff.abs(), &self.rad)
    }
}

/// Error produced when a scalar string cannot be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseScalarError {
    input: String,
    reason: String,
}

impl fmt::Display for ParseScalarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot parse scalar {:?}: {}", self.input, self.reason)
    }
}

impl std::error::Error for ParseScalarError {}

impl<T: ExactInt> FromStr for QuadExt<T> {
    type Err = ParseScalarError;

    /// Accepts `p/q`, decimals like `0.1`, `sqrt(d)`, `r/s*sqrt(d)`, and a
    /// sum or difference of one rational and one surd term, e.g.
    /// `1/2 + 1/2*sqrt(5)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ParseScalarError { input: s.to_string(), reason: reason.to_string() };
        let mut rational = Ratio::<T>::zero();
        let mut surd: Option<(Ratio<T>, T)> = None;
        for (sign, term) in split_signed_terms(s).map_err(|r| err(&r))? {
            let term = term.trim();
            if term.is_empty() {
                return Err(err("empty term"));
            }
            if let Some(idx) = term.find("sqrt") {
                let (coeff_str, root_str) = term.split_at(idx);
                let coeff_str = coeff_str.trim().trim_end_matches('*').trim();
                let mut coeff = if coeff_str.is_empty() {
                    Ratio::one()
                } else {
                    parse_ratio::<T>(coeff_str).map_err(|r| err(&r))?
                };
                if sign < 0 {
                    coeff = -coeff;
                }
                let inner = root_str
                    .strip_prefix("sqrt")
                    .and_then(|r| r.trim().strip_prefix('('))
                    .and_then(|r| r.trim_end().strip_suffix(')'))
                    .ok_or_else(|| err("malformed sqrt(...)"))?;
                let d: T = parse_ratio::<T>(inner.trim())
                    .ok()
                    .filter(|r: &Ratio<T>| r.denom().is_one() && !r.numer().is_negative())
                    .map(|r| r.numer().clone())
                    .ok_or_else(|| err("radicand must be a nonnegative integer"))?;
                if surd.is_some() {
                    return Err(err("more than one sqrt term"));
                }
                surd = Some((coeff, d));
            } else {
                let mut r = parse_ratio::<T>(term).map_err(|reason| err(&reason))?;
                if sign < 0 {
                    r = -r;
                }
                rational = rational + r;
            }
        }
        Ok(match surd {
            Some((coeff, d)) => QuadExt::new(rational, coeff, d),
            None => QuadExt::from_ratio(rational),
        })
    }
}

/// Splits `a + b - c` into signed top-level terms.
fn split_signed_terms(s: &str) -> Result<impl Iterator<Item = (i32, String)>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty input".to_string());
    }
    let mut terms = Vec::new();
    let mut current = String::new();
    let mut sign = 1i32;
    let mut depth = 0i32;
    let mut seen_content = false;
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
                seen_content = true;
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced parentheses".to_string());
                }
                current.push(ch);
            }
            '+' | '-' if depth == 0 => {
                if seen_content && !current.trim().is_empty() {
                    terms.push((sign, std::mem::take(&mut current)));
                    sign = 1;
                } else if !seen_content && !current.trim().is_empty() {
                    return Err("unexpected sign".to_string());
                }
                if ch == '-' {
                    sign = -sign;
                }
            }
            _ => {
                current.push(ch);
                if !ch.is_whitespace() {
                    seen_content = true;
                }
            }
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".to_string());
    }
    if current.trim().is_empty() {
        return Err("trailing operator".to_string());
    }
    terms.push((sign, current));
    Ok(terms.into_iter())
}

fn parse_ratio<T: ExactInt>(s: &str) -> Result<Ratio<T>, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_int::<T>(num.trim())?;
        let d = parse_int::<T>(den.trim())?;
        if d.is_zero() {
            return Err("zero denominator".to_string());
        }
        return Ok(Ratio::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.trim_start().starts_with('-');
        let w = parse_int::<T>(whole.trim())?;
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad decimal {s:?}"));
        }
        let mut scale = T::one();
        for _ in 0..frac.len() {
            scale = scale * T::from(10);
        }
        let f = parse_int::<T>(frac)?;
        let signed_f = if neg { -f } else { f };
        return Ok(Ratio::new(w * scale.clone() + signed_f, scale));
    }
    Ok(Ratio::from_integer(parse_int::<T>(s)?))
}

fn parse_int<T: ExactInt>(s: &str) -> Result<T, String> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("bad integer {s:?}"));
    }
    let mut value = T::zero();
    for c in digits.chars() {
        value = value * T::from(10) + T::from((c as u8 - b'0') as i64);
    }
    Ok(if neg { -value } else { value })
}

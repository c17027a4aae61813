//! Exact scalars for the Toffoli / Hadamard / i-shift gate set.
//!
//! Every matrix entry of those gates lies in `{0, 1, i, 1/√2, -1/√2}`, and the
//! ring they generate is `Z[i][√2][1/2]`.  An [`ExactScalar`] stores an element
//! of that ring as `(x + y·√2) / 2^e` with `x`, `y` Gaussian integers.  The
//! representation is kept reduced: whenever `e > 0`, at least one of the four
//! integer components is odd, so equality of values is equality of fields.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Integer with a real and an imaginary part.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussianInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussianInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        Self {
            re: re.into(),
            im: im.into(),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        Self {
            re: -&self.im,
            im: self.re.clone(),
        }
    }

    /// `|z|^2 = re^2 + im^2`.
    pub fn norm_sqr(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self {
            re: &self.re * k,
            im: &self.im * k,
        }
    }

    pub fn shl(&self, bits: u32) -> Self {
        Self {
            re: &self.re << bits,
            im: &self.im << bits,
        }
    }

    fn shr(&self, bits: u32) -> Self {
        Self {
            re: &self.re >> bits,
            im: &self.im >> bits,
        }
    }

    /// Number of trailing zero bits shared by both parts (`None` for zero).
    fn trailing_zeros(&self) -> Option<u64> {
        match (self.re.trailing_zeros(), self.im.trailing_zeros()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn bits(&self) -> u64 {
        self.re.bits().max(self.im.bits())
    }
}

impl<'a> Add<&'a GaussianInt> for &'a GaussianInt {
    type Output = GaussianInt;
    fn add(self, o: &GaussianInt) -> GaussianInt {
        GaussianInt {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl<'a> Sub<&'a GaussianInt> for &'a GaussianInt {
    type Output = GaussianInt;
    fn sub(self, o: &GaussianInt) -> GaussianInt {
        GaussianInt {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl<'a> Mul<&'a GaussianInt> for &'a GaussianInt {
    type Output = GaussianInt;
    fn mul(self, o: &GaussianInt) -> GaussianInt {
        GaussianInt {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &GaussianInt {
    type Output = GaussianInt;
    fn neg(self) -> GaussianInt {
        GaussianInt {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

/// A floating approximation together with a rigorous absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approx {
    pub value: Complex64,
    pub error_bound: f64,
}

/// Exact element `(x + y·√2) / 2^e` of the ring generated by the gate entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ExactScalar {
    x: GaussianInt,
    y: GaussianInt,
    e: u32,
}

/// Fixed-point bits used internally by [`ExactScalar::approx`].
const APPROX_GUARD_BITS: u32 = 64;

/// Float output of [`ExactScalar::approx`] carries at most this many bits.
pub const MAX_APPROX_BITS: u32 = 50;

impl ExactScalar {
    /// Builds `(x + y√2)/2^e` and reduces it.
    pub fn new(x: GaussianInt, y: GaussianInt, e: u32) -> Self {
        let mut s = Self { x, y, e };
        s.canonicalize();
        s
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn i() -> Self {
        Self::new(GaussianInt::new(0, 1), GaussianInt::zero(), 0)
    }

    pub fn sqrt2() -> Self {
        Self::new(GaussianInt::zero(), GaussianInt::new(1, 0), 0)
    }

    /// `1/√2 = √2/2`.
    pub fn frac_1_sqrt2() -> Self {
        Self::new(GaussianInt::zero(), GaussianInt::new(1, 0), 1)
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self::new(GaussianInt::new(n, 0), GaussianInt::zero(), 0)
    }

    /// `num / 2^exp`.
    pub fn from_dyadic(num: impl Into<BigInt>, exp: u32) -> Self {
        Self::new(GaussianInt::new(num, 0), GaussianInt::zero(), exp)
    }

    /// Exact image of a rational whose denominator is a power of two.
    pub fn from_ratio(r: &BigRational) -> Option<Self> {
        let d = r.denom();
        let tz = d.trailing_zeros().unwrap_or(0);
        if (d >> tz) != BigInt::one() {
            return None;
        }
        Some(Self::from_dyadic(r.numer().clone(), tz as u32))
    }

    pub fn x(&self) -> &GaussianInt {
        &self.x
    }

    pub fn y(&self) -> &GaussianInt {
        &self.y
    }

    pub fn exponent(&self) -> u32 {
        self.e
    }

    fn canonicalize(&mut self) {
        if self.x.is_zero() && self.y.is_zero() {
            self.e = 0;
            return;
        }
        if self.e == 0 {
            return;
        }
        let tz = match (self.x.trailing_zeros(), self.y.trailing_zeros()) {
            (Some(a), Some(b)) => a.min(b),
            (a, b) => a.or(b).unwrap_or(0),
        };
        let shift = tz.min(self.e as u64) as u32;
        if shift > 0 {
            self.x = self.x.shr(shift);
            self.y = self.y.shr(shift);
            self.e -= shift;
        }
    }

    /// Idempotent reduction, exposed for property tests.
    pub fn canonical(&self) -> Self {
        Self::new(self.x.clone(), self.y.clone(), self.e)
    }

    pub fn is_canonical(&self) -> bool {
        if self.e == 0 {
            return true;
        }
        let all_even = [&self.x.re, &self.x.im, &self.y.re, &self.y.im]
            .iter()
            .all(|v| v.is_even());
        !all_even
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.x.im.is_zero() && self.y.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self {
            x: self.x.conj(),
            y: self.y.conj(),
            e: self.e,
        }
    }

    pub fn mul_i(&self) -> Self {
        Self {
            x: self.x.mul_i(),
            y: self.y.mul_i(),
            e: self.e,
        }
    }

    /// Multiplies by `1/√2`: `(x + y√2)/2^e · 1/√2 = (2y + x√2)/2^(e+1)`.
    pub fn mul_frac_1_sqrt2(&self) -> Self {
        Self::new(self.y.shl(1), self.x.clone(), self.e + 1)
    }

    /// `a · conj(a)`, a real element of the ring.
    pub fn norm_sqr(&self) -> Self {
        self * &self.conj()
    }

    pub fn real_part(&self) -> Self {
        Self::new(
            GaussianInt::new(self.x.re.clone(), 0),
            GaussianInt::new(self.y.re.clone(), 0),
            self.e,
        )
    }

    /// Sign of the real part, decided exactly.
    pub fn real_signum(&self) -> i32 {
        sign_of_a_plus_b_sqrt2(&self.x.re, &self.y.re)
    }

    /// Rational value when the element has no `√2` and no imaginary component.
    pub fn to_rational(&self) -> Option<BigRational> {
        if !self.y.is_zero() || !self.x.im.is_zero() {
            return None;
        }
        Some(BigRational::new(
            self.x.re.clone(),
            BigInt::one() << self.e,
        ))
    }

    /// Largest bit length among the integer components.
    pub fn bits(&self) -> u64 {
        self.x.bits().max(self.y.bits())
    }

    /// Floating approximation with a rigorous absolute error bound.
    ///
    /// The float output is limited to [`MAX_APPROX_BITS`] bits of relative
    /// precision; requests above that are served at that precision.
    pub fn approx(&self, precision_bits: u32) -> Approx {
        assert!(precision_bits >= 1, "precision_bits must be at least 1");
        if self.is_zero() {
            return Approx {
                value: Complex64::new(0.0, 0.0),
                error_bound: 0.0,
            };
        }
        let (re, re_err) = approx_component(&self.x.re, &self.y.re, self.e);
        let (im, im_err) = approx_component(&self.x.im, &self.y.im, self.e);
        Approx {
            value: Complex64::new(re, im),
            error_bound: re_err + im_err,
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        self.approx(MAX_APPROX_BITS).value
    }
}

fn sign_of_a_plus_b_sqrt2(a: &BigInt, b: &BigInt) -> i32 {
    let sa = a.signum().to_i32().unwrap_or(0);
    let sb = b.signum().to_i32().unwrap_or(0);
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    // opposite signs: compare a^2 with 2 b^2
    let a2 = a * a;
    let b2 = (b * b) << 1u32;
    match a2.cmp(&b2) {
        std::cmp::Ordering::Greater => sa,
        std::cmp::Ordering::Less => sb,
        std::cmp::Ordering::Equal => 0,
    }
}

/// Approximates `(a + b√2) / 2^e`; returns the value and its error bound.
fn approx_component(a: &BigInt, b: &BigInt, e: u32) -> (f64, f64) {
    if a.is_zero() && b.is_zero() {
        return (0.0, 0.0);
    }
    let f = APPROX_GUARD_BITS;
    let b2 = (b * b) << (2 * f + 1);
    let root = BigInt::from_biguint(Sign::Plus, b2.magnitude().sqrt());
    let root = if b.is_negative() { -root } else { root };
    // |t - (a + b√2) 2^f| < 1
    let t = (a << f) + root;
    let value = scale_pow2(t.to_f64().unwrap_or(f64::INFINITY), -((f + e) as i64));
    let truncation = scale_pow2(1.0, -((f + e) as i64));
    let rounding = value.abs() * f64::EPSILON;
    // the floor term also absorbs subnormal loss in the scaling
    (value, truncation + rounding + f64::MIN_POSITIVE)
}

fn scale_pow2(mut v: f64, mut exp: i64) -> f64 {
    while exp < -1000 {
        v *= 2f64.powi(-1000);
        exp += 1000;
    }
    while exp > 1000 {
        v *= 2f64.powi(1000);
        exp -= 1000;
    }
    v * 2f64.powi(exp as i32)
}

impl<'a> Add<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn add(self, o: &ExactScalar) -> ExactScalar {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.e.max(o.e);
        let (sx, sy) = (self.x.shl(e - self.e), self.y.shl(e - self.e));
        let (ox, oy) = (o.x.shl(e - o.e), o.y.shl(e - o.e));
        ExactScalar::new(&sx + &ox, &sy + &oy, e)
    }
}

impl<'a> Sub<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn sub(self, o: &ExactScalar) -> ExactScalar {
        self + &(-o)
    }
}

impl<'a> Mul<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn mul(self, o: &ExactScalar) -> ExactScalar {
        if self.is_zero() || o.is_zero() {
            return ExactScalar::zero();
        }
        // (x1 + y1√2)(x2 + y2√2) = (x1x2 + 2y1y2) + (x1y2 + y1x2)√2
        let yy = &self.y * &o.y;
        let x = &(&self.x * &o.x) + &yy.shl(1);
        let y = &(&self.x * &o.y) + &(&self.y * &o.x);
        ExactScalar::new(x, y, self.e + o.e)
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar {
            x: -&self.x,
            y: -&self.y,
            e: self.e,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, o: ExactScalar) -> ExactScalar {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{};{},{})/2^{}",
            self.x.re, self.x.im, self.y.re, self.y.im, self.e
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed exact scalar: {0}")]
pub struct ParseScalarError(String);

impl FromStr for ExactScalar {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseScalarError(s.to_string());
        let s = s.trim();
        let (body, exp) = s.split_once(")/2^").ok_or_else(err)?;
        let body = body.strip_prefix('(').ok_or_else(err)?;
        let (x, y) = body.split_once(';').ok_or_else(err)?;
        let pair = |p: &str| -> Result<GaussianInt, ParseScalarError> {
            let (re, im) = p.split_once(',').ok_or_else(err)?;
            Ok(GaussianInt::new(
                re.trim().parse::<BigInt>().map_err(|_| err())?,
                im.trim().parse::<BigInt>().map_err(|_| err())?,
            ))
        };
        let e: u32 = exp.trim().parse().map_err(|_| err())?;
        let v = ExactScalar {
            x: pair(x)?,
            y: pair(y)?,
            e,
        };
        if !v.is_canonical() {
            return Err(ParseScalarError(format!("{s} (not in reduced form)")));
        }
        Ok(v)
    }
}

//! Forward-mode dual numbers `a + b·ε` with `ε² = 0`.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

/// A value together with its directional derivative.
///
/// Comparison operators look at the value only, so control flow in generic
/// code follows the primal computation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dual<F = f64> {
    pub value: F,
    pub derivative: F,
}

impl<F: Float> Dual<F> {
    pub fn new(value: F, derivative: F) -> Self {
        Self { value, derivative }
    }

    /// A constant: zero tangent.
    pub fn constant(value: F) -> Self {
        Self::new(value, F::zero())
    }

    /// An independent variable: unit tangent.
    pub fn variable(value: F) -> Self {
        Self::new(value, F::one())
    }

    #[inline]
    fn chain(self, value: F, slope: F) -> Self {
        Self::new(value, self.derivative * slope)
    }
}

impl<F: Float> PartialEq for Dual<F> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<F: Float> PartialOrd for Dual<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl<F: Float + fmt::Display> fmt::Display for Dual<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.value, self.derivative)
    }
}

impl<F: Float> Add for Dual<F> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.derivative + rhs.derivative)
    }
}

impl<F: Float> Sub for Dual<F> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.derivative - rhs.derivative)
    }
}

impl<F: Float> Mul for Dual<F> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.value * rhs.value, self.value * rhs.derivative + rhs.value * self.derivative)
    }
}

impl<F: Float> Div for Dual<F> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = F::one() / rhs.value;
        Self::new(self.value * inv, (self.derivative * rhs.value - self.value * rhs.derivative) * inv * inv)
    }
}

impl<F: Float> Rem for Dual<F> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        // a mod b = a - b·trunc(a/b); trunc is locally constant.
        let q = (self.value / rhs.value).trunc();
        Self::new(self.value % rhs.value, self.derivative - rhs.derivative * q)
    }
}

impl<F: Float> Neg for Dual<F> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.derivative)
    }
}

impl<F: Float> AddAssign for Dual<F> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<F: Float> SubAssign for Dual<F> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<F: Float> MulAssign for Dual<F> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<F: Float> DivAssign for Dual<F> {
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl<F: Float> Zero for Dual<F> {
    fn zero() -> Self {
        Self::constant(F::zero())
    }
    fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}

impl<F: Float> One for Dual<F> {
    fn one() -> Self {
        Self::constant(F::one())
    }
}

impl<F: Float> Num for Dual<F> {
    type FromStrRadixErr = F::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        F::from_str_radix(s, radix).map(Self::constant)
    }
}

impl<F: Float> ToPrimitive for Dual<F> {
    fn to_i64(&self) -> Option<i64> {
        self.value.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.value.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.value.to_f64()
    }
    fn to_f32(&self) -> Option<f32> {
        self.value.to_f32()
    }
}

impl<F: Float> NumCast for Dual<F> {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        <F as NumCast>::from(n).map(Self::constant)
    }
}

impl<F: Float + FromPrimitive> FromPrimitive for Dual<F> {
    fn from_i64(n: i64) -> Option<Self> {
        F::from_i64(n).map(Self::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        F::from_u64(n).map(Self::constant)
    }
    fn from_f64(n: f64) -> Option<Self> {
        F::from_f64(n).map(Self::constant)
    }
}

macro_rules! dual_consts {
    ($($name:ident),* $(,)?) => {
        impl<F: Float + FloatConst> FloatConst for Dual<F> {
            $(
                fn $name() -> Self {
                    Self::constant(F::$name())
                }
            )*
        }
    };
}

dual_consts!(
    E,
    FRAC_1_PI,
    FRAC_1_SQRT_2,
    FRAC_2_PI,
    FRAC_2_SQRT_PI,
    FRAC_PI_2,
    FRAC_PI_3,
    FRAC_PI_4,
    FRAC_PI_6,
    FRAC_PI_8,
    LN_10,
    LN_2,
    LOG10_E,
    LOG2_E,
    PI,
    SQRT_2,
    TAU,
    LOG10_2,
    LOG2_10,
);

impl<F: Float> Float for Dual<F> {
    fn nan() -> Self {
        Self::constant(F::nan())
    }
    fn infinity() -> Self {
        Self::constant(F::infinity())
    }
    fn neg_infinity() -> Self {
        Self::constant(F::neg_infinity())
    }
    fn neg_zero() -> Self {
        Self::constant(F::neg_zero())
    }
    fn min_value() -> Self {
        Self::constant(F::min_value())
    }
    fn min_positive_value() -> Self {
        Self::constant(F::min_positive_value())
    }
    fn epsilon() -> Self {
        Self::constant(F::epsilon())
    }
    fn max_value() -> Self {
        Self::constant(F::max_value())
    }
    fn is_nan(self) -> bool {
        self.value.is_nan() || self.derivative.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.value.is_infinite() || self.derivative.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.value.is_finite() && self.derivative.is_finite()
    }
    fn is_normal(self) -> bool {
        self.value.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.value.classify()
    }
    fn floor(self) -> Self {
        Self::constant(self.value.floor())
    }
    fn ceil(self) -> Self {
        Self::constant(self.value.ceil())
    }
    fn round(self) -> Self {
        Self::constant(self.value.round())
    }
    fn trunc(self) -> Self {
        Self::constant(self.value.trunc())
    }
    fn fract(self) -> Self {
        Self::new(self.value.fract(), self.derivative)
    }
    fn abs(self) -> Self {
        let s = if self.value.is_zero() { F::zero() } else { self.value.signum() };
        self.chain(self.value.abs(), s)
    }
    fn signum(self) -> Self {
        Self::constant(self.value.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.value.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.value.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        let inv = self.value.recip();
        self.chain(inv, -inv * inv)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let n_f = F::from(n).unwrap();
        self.chain(self.value.powi(n), n_f * self.value.powi(n - 1))
    }
    fn powf(self, n: Self) -> Self {
        let v = self.value.powf(n.value);
        let d_base = if n.value.is_zero() { F::zero() } else { n.value * self.value.powf(n.value - F::one()) };
        let d_exp = if n.derivative.is_zero() { F::zero() } else { v * self.value.ln() };
        Self::new(v, self.derivative * d_base + n.derivative * d_exp)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let two = F::one() + F::one();
        self.chain(s, F::one() / (two * s))
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn exp2(self) -> Self {
        let e = self.value.exp2();
        self.chain(e, e * F::from(std::f64::consts::LN_2).unwrap())
    }
    fn ln(self) -> Self {
        self.chain(self.value.ln(), self.value.recip())
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.chain(self.value.log2(), (self.value * F::from(std::f64::consts::LN_2).unwrap()).recip())
    }
    fn log10(self) -> Self {
        self.chain(self.value.log10(), (self.value * F::from(std::f64::consts::LN_10).unwrap()).recip())
    }
    fn max(self, other: Self) -> Self {
        if self.value >= other.value || other.value.is_nan() {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self.value <= other.value || other.value.is_nan() {
            self
        } else {
            other
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self.value > other.value {
            self - other
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        let c = self.value.cbrt();
        let three = F::from(3.0).unwrap();
        self.chain(c, (three * c * c).recip())
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn tan(self) -> Self {
        let t = self.value.tan();
        self.chain(t, F::one() + t * t)
    }
    fn asin(self) -> Self {
        let v = self.value;
        self.chain(v.asin(), (F::one() - v * v).sqrt().recip())
    }
    fn acos(self) -> Self {
        let v = self.value;
        self.chain(v.acos(), -(F::one() - v * v).sqrt().recip())
    }
    fn atan(self) -> Self {
        let v = self.value;
        self.chain(v.atan(), (F::one() + v * v).recip())
    }
    fn atan2(self, other: Self) -> Self {
        let (y, x) = (self.value, other.value);
        let r2 = x * x + y * y;
        Self::new(y.atan2(x), (x * self.derivative - y * other.derivative) / r2)
    }
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.value.sin_cos();
        (self.chain(s, c), self.chain(c, -s))
    }
    fn exp_m1(self) -> Self {
        self.chain(self.value.exp_m1(), self.value.exp())
    }
    fn ln_1p(self) -> Self {
        self.chain(self.value.ln_1p(), (F::one() + self.value).recip())
    }
    fn sinh(self) -> Self {
        self.chain(self.value.sinh(), self.value.cosh())
    }
    fn cosh(self) -> Self {
        self.chain(self.value.cosh(), self.value.sinh())
    }
    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.chain(t, F::one() - t * t)
    }
    fn asinh(self) -> Self {
        let v = self.value;
        self.chain(v.asinh(), (v * v + F::one()).sqrt().recip())
    }
    fn acosh(self) -> Self {
        let v = self.value;
        self.chain(v.acosh(), (v * v - F::one()).sqrt().recip())
    }
    fn atanh(self) -> Self {
        let v = self.value;
        self.chain(v.atanh(), (F::one() - v * v).recip())
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.value.integer_decode()
    }
}

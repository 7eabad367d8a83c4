//! Float math shim so the crate builds without `std`.
//!
//! With `std` enabled the inherent `f64` methods are used and the trait below is an
//! empty marker. Without `std`, importing [`FloatMath`] supplies the same method names
//! backed by `libm`.

#[cfg(feature = "std")]
#[allow(dead_code)]
pub(crate) trait FloatMath {}

#[cfg(feature = "std")]
impl FloatMath for f64 {}

#[cfg(not(feature = "std"))]
pub(crate) trait FloatMath: Sized {
    fn exp(self) -> f64;
    fn ln(self) -> f64;
    fn sqrt(self) -> f64;
    fn abs(self) -> f64;
    fn powi(self, n: i32) -> f64;
    fn powf(self, p: f64) -> f64;
    fn exp_m1(self) -> f64;
    fn ln_1p(self) -> f64;
    fn floor(self) -> f64;
    fn ceil(self) -> f64;
    fn round(self) -> f64;
    fn log2(self) -> f64;
}

#[cfg(not(feature = "std"))]
impl FloatMath for f64 {
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    fn ln(self) -> f64 {
        libm::log(self)
    }
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    fn abs(self) -> f64 {
        libm::fabs(self)
    }
    fn powi(self, n: i32) -> f64 {
        libm::pow(self, n as f64)
    }
    fn powf(self, p: f64) -> f64 {
        libm::pow(self, p)
    }
    fn exp_m1(self) -> f64 {
        libm::expm1(self)
    }
    fn ln_1p(self) -> f64 {
        libm::log1p(self)
    }
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
    fn round(self) -> f64 {
        libm::round(self)
    }
    fn log2(self) -> f64 {
        libm::log2(self)
    }
}

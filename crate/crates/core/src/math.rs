//! Float functions for `no_std` builds.

#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// `1 - e^{-x}` without cancellation for small `x`.
#[inline(always)]
pub(crate) fn one_minus_exp_neg(x: f64) -> f64 {
    -libm::expm1(-x)
}

#[inline(always)]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline(always)]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `ln(1 + e^t)`.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 36.0 {
        t
    } else {
        libm::log1p(libm::exp(t))
    }
}

/// Inverse of [`softplus`] for `x > 0`.
#[inline]
pub(crate) fn softplus_inv(x: f64) -> f64 {
    if x > 36.0 {
        x
    } else {
        libm::log(libm::expm1(x))
    }
}

/// Derivative of [`softplus`].
#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-t))
}

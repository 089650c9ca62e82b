use num_complex::Complex64;

/// Scalars the rectangular power-balance polynomials can be evaluated over.
///
/// The equations have real coefficients; evaluating them over `Complex64`
/// yields the complexified system tracked by the homotopy enumerator.
pub trait PfScalar:
    nalgebra::Scalar
    + Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_re(x: f64) -> Self;
    fn zero() -> Self;
}

impl PfScalar for f64 {
    fn from_re(x: f64) -> Self {
        x
    }
    fn zero() -> Self {
        0.0
    }
}

impl PfScalar for Complex64 {
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn zero() -> Self {
        Complex64::ZERO
    }
}

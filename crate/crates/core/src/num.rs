//! Scalar abstraction shared by every numerical module.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the solver is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;
pub type RMat<T> = DMatrix<T>;
pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub fn ci<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

/// Principal square root: `Re ≥ 0`, and the cut along the negative real axis
/// maps to the positive imaginary axis (including a signed-zero imaginary part).
pub fn principal_sqrt<T: Real>(z: C<T>) -> C<T> {
    let zero = T::zero();
    if z.im == zero {
        return if z.re >= zero {
            cplx(z.re.sqrt(), zero)
        } else {
            cplx(zero, (-z.re).sqrt())
        };
    }
    let r = cabs(z);
    let half = T::lit(0.5);
    let re = ((r + z.re) * half).sqrt();
    let im = ((r - z.re) * half).sqrt();
    cplx(re, if z.im < zero { -im } else { im })
}

#[inline]
pub fn cexp<T: Real>(z: C<T>) -> C<T> {
    let m = z.re.exp();
    cplx(m * z.im.cos(), m * z.im.sin())
}

#[inline]
pub fn conj<T: Real>(z: C<T>) -> C<T> {
    cplx(z.re, -z.im)
}

/// Lifts a real matrix to a complex one.
pub fn complexify<T: Real>(m: &RMat<T>) -> CMat<T> {
    m.map(creal)
}

pub fn cdiag<T: Real>(d: &[C<T>]) -> CMat<T> {
    CMat::from_diagonal(&CVec::from_column_slice(d))
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

pub fn max_abs_real<T: Real>(m: &RMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// `‖a − b‖_max`.
pub fn max_diff<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max(cabs(*x - *y)))
}

/// `‖lhs − rhs‖_max / max(1, ‖terms‖_max)`: identity residual normalized by the
/// size of the quantities entering it.
pub fn scaled_residual<T: Real>(lhs: &CMat<T>, rhs: &CMat<T>, scale: T) -> T {
    if lhs.is_empty() {
        return T::zero();
    }
    max_diff(lhs, rhs) / scale.max(T::one())
}

/// Residual of `Σ terms = rhs`, normalized by `max(1, largest entry of any
/// term or of rhs)`.
pub fn identity_residual<T: Real>(terms: &[CMat<T>], rhs: &CMat<T>) -> f64 {
    if rhs.is_empty() {
        return 0.0;
    }
    let mut sum = CMat::zeros(rhs.nrows(), rhs.ncols());
    let mut scale = max_abs(rhs);
    for t in terms {
        sum += t;
        scale = scale.max(max_abs(t));
    }
    scaled_residual(&sum, rhs, scale).as_f64()
}

pub fn conj_mat<T: Real>(m: &CMat<T>) -> CMat<T> {
    m.map(conj)
}

/// Extracts the submatrix with the given row and column indices.
pub fn select<T: Real>(m: &CMat<T>, rows: &[usize], cols: &[usize]) -> CMat<T> {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_sqrt_branch() {
        let s = principal_sqrt(cplx(-4.0_f64, 0.0));
        assert_eq!(s, cplx(0.0, 2.0));
        let s = principal_sqrt(cplx(-4.0_f64, -0.0));
        assert_eq!(s, cplx(0.0, 2.0));
        let s = principal_sqrt(cplx(4.0_f64, 0.0));
        assert_eq!(s, cplx(2.0, 0.0));
        let s = principal_sqrt(cplx(-4.0_f64, -1e-12));
        assert!(s.im < 0.0 && (s.im + 2.0).abs() < 1e-12);
        let z = cplx(0.3_f64, -1.7);
        let s = principal_sqrt(z);
        assert!(s.re >= 0.0);
        assert!(cabs(s * s - z) < 1e-14);
    }

    #[test]
    fn cexp_matches_euler() {
        let z = cexp(cplx(0.0_f64, std::f64::consts::PI));
        assert!((z.re + 1.0).abs() < 1e-15 && z.im.abs() < 1e-15);
    }
}

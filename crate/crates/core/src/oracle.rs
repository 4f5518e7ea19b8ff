//! Exact solver for piecewise-constant media.
//!
//! Inside a constant layer with frame `f` (`V f = g f Λ`, `fᵀ g f = I`) and
//! local momenta `k = √(Λ − λ)`, every solution is
//! `u = f(e^{ikz}a + e^{−ikz}b)`. The right Jost families are carried from
//! `+L` to `−L` layer by layer through their right- and left-moving amplitudes,
//! with `u` and `g∂u` continuous at each interface. No stepping is involved,
//! so the result is accurate to round-off.

use crate::error::{Error, Result};
use crate::jost::{tail_jost, JostAtReference};
use crate::linalg::generalized_symmetric_eigen;
use crate::medium::{LayerKind, Medium};
use crate::num::{cabs, cexp, ci, complexify, creal, CMat, Real, C};
use crate::smatrix::{scattering_matrices, ScatteringSet};
use crate::spectral::{channel_momenta, ensure_off_thresholds, momentum, Sheet, SpectralPoint};
use crate::tolerances::Tolerances;
use crate::transition::TransitionSet;

/// Frame and local momenta of one constant layer.
#[derive(Clone, Debug)]
pub struct LayerEigenData<T: Real> {
    pub z_lo: T,
    pub z_hi: T,
    pub frame: CMat<T>,
    /// `g f`, used to rebuild `p = g f η`.
    pub g_frame: CMat<T>,
    /// `fᵀ g`, the inverse of `f`.
    pub frame_inverse: CMat<T>,
    pub eigenvalues: Vec<T>,
    pub momenta: Vec<C<T>>,
}

pub fn layer_eigen_data<T: Real>(medium: &Medium<T>, lambda: C<T>, tol: &Tolerances) -> Result<Vec<LayerEigenData<T>>> {
    medium
        .profile()
        .layers
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            let LayerKind::Constant(c) = &layer.kind else {
                return Err(Error::NotPiecewiseConstant { layer: l });
            };
            let eig = generalized_symmetric_eigen(&c.g, &c.v)
                .ok_or_else(|| Error::Invalid(format!("layer {l}: g is not positive-definite")))?;
            let near = T::lit(tol.threshold_abs(cabs(lambda).as_f64()));
            let mut momenta = Vec::with_capacity(eig.values.len());
            for (s, &lam_s) in eig.values.iter().enumerate() {
                if cabs(creal(lam_s) - lambda) <= near {
                    return Err(Error::LayerResonance {
                        layer: l,
                        channel: s,
                        lambda: lambda.re.as_f64(),
                    });
                }
                momenta.push(momentum(lam_s, lambda, Sheet::Principal));
            }
            Ok(LayerEigenData {
                z_lo: layer.z_lo,
                z_hi: layer.z_hi,
                frame: complexify(&eig.vectors),
                g_frame: complexify(&(&c.g * &eig.vectors)),
                frame_inverse: complexify(&(eig.vectors.transpose() * &c.g)),
                eigenvalues: eig.values,
                momenta,
            })
        })
        .collect()
}

/// Carries `(u, p)` columns from the top of a layer to its bottom.
fn across_layer<T: Real>(layer: &LayerEigenData<T>, u: &CMat<T>, p: &CMat<T>) -> (CMat<T>, CMat<T>) {
    let n = layer.momenta.len();
    let xi = &layer.frame_inverse * u;
    let eta = layer.frame.transpose() * p;
    let d = creal(layer.z_hi - layer.z_lo);
    let mut xi_lo = CMat::zeros(n, u.ncols());
    let mut eta_lo = CMat::zeros(n, u.ncols());
    let half = creal(T::lit(0.5));
    for s in 0..n {
        let ik = ci::<T>() * layer.momenta[s];
        let back = cexp(-ik * d);
        let fwd = cexp(ik * d);
        for j in 0..u.ncols() {
            // right- and left-moving amplitudes at the top of the layer
            let a = half * (xi[(s, j)] + eta[(s, j)] / ik);
            let b = half * (xi[(s, j)] - eta[(s, j)] / ik);
            let (a, b) = (a * back, b * fwd);
            xi_lo[(s, j)] = a + b;
            eta_lo[(s, j)] = ik * (a - b);
        }
    }
    (&layer.frame * xi_lo, &layer.g_frame * eta_lo)
}

/// Jost data of a piecewise-constant medium, with every family evaluated at
/// `z = −L` (the Wronskians do not depend on where they are taken).
pub fn exact_jost<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    tol: &Tolerances,
) -> Result<JostAtReference<T>> {
    ensure_off_thresholds(medium, point.lambda, tol)?;
    let layers = layer_eigen_data(medium, point.lambda, tol)?;
    let momenta = channel_momenta(medium, point);
    let n = medium.channels();
    let l = medium.half_width();
    let prof = medium.profile();
    let (rb, lb) = (medium.right(), medium.left());

    let mut right = CMat::zeros(2 * n, 2 * n);
    for (col, sign) in [(0, T::one()), (n, -T::one())] {
        let (mut u, mut p) = tail_jost(&prof.right_tail, &rb.frame, &momenta.right, sign, l);
        for layer in layers.iter().rev() {
            (u, p) = across_layer(layer, &u, &p);
        }
        right.view_mut((0, col), (n, n)).copy_from(&u);
        right.view_mut((n, col), (n, n)).copy_from(&p);
    }
    let mut left = CMat::zeros(2 * n, 2 * n);
    for (col, sign) in [(0, T::one()), (n, -T::one())] {
        let (u, p) = tail_jost(&prof.left_tail, &lb.frame, &momenta.left, sign, -l);
        left.view_mut((0, col), (n, n)).copy_from(&u);
        left.view_mut((n, col), (n, n)).copy_from(&p);
    }
    if !right.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::IntegratorStep { z: (-l).as_f64() });
    }
    Ok(JostAtReference {
        point: point.clone(),
        momenta,
        right,
        left,
    })
}

/// Transition and scattering matrices of a piecewise-constant medium.
pub fn transfer_matrix_solve<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    tol: &Tolerances,
) -> Result<(TransitionSet<T>, ScatteringSet<T>)> {
    let jost = exact_jost(medium, point, tol)?;
    let ts = TransitionSet::from_reference(&jost);
    let ss = scattering_matrices(medium, &ts, tol)?;
    Ok((ts, ss))
}

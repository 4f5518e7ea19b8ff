//! Semiclassical Jost solutions and the large-|λ| behaviour of `Φ̃₊` and
//! `det S̃`.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jost::{integrate_jost, interior_grid, Family, GridSpec};
use crate::linalg::generalized_symmetric_eigen;
use crate::medium::Medium;
use crate::num::{cabs, cexp, ci, complexify, creal, max_abs, max_diff, principal_sqrt, CMat, RMat, Real, C};
use crate::residual::Residuals;
use crate::smatrix::{determinant_residuals, scattering_matrices};
use crate::spectral::{channel_momenta, SpectralPoint};
use crate::tolerances::Tolerances;
use crate::transition::transition_at;

#[derive(Clone, Debug)]
pub struct WkbField<T: Real> {
    pub point: SpectralPoint<T>,
    /// Covers `[−L_z, L_z]`.
    pub grid: Vec<T>,
    /// Sign-continuous local frames, `fᵀ g f = I`.
    pub frames: Vec<RMat<T>>,
    pub thresholds: Vec<Vec<T>>,
    pub momenta: Vec<Vec<C<T>>>,
    pub phase_plus: Vec<Vec<C<T>>>,
    pub phase_minus: Vec<Vec<C<T>>>,
    /// Column signs aligning the continuous frame with each tail basis.
    pub sign_right: Vec<T>,
    pub sign_left: Vec<T>,
    /// Largest `|∂S/∂z − K|/|K|` by first differences at interval midpoints.
    pub phase_residual: f64,
    /// Largest `|K aᵀ g a − 1|` for the amplitude `a = f K^{−1/2}`.
    pub conservation_residual: f64,
    /// Largest eigenproblem residual over the nodes.
    pub eig_residual: f64,
}

struct Local<T: Real> {
    frame: RMat<T>,
    thresholds: Vec<T>,
    momenta: Vec<C<T>>,
    g: RMat<T>,
    eig_residual: f64,
}

fn local_at<T: Real>(medium: &Medium<T>, z: T, lambda: C<T>) -> Result<Local<T>> {
    let c = medium.profile().sample(z);
    let eig = generalized_symmetric_eigen(&c.g, &c.v)
        .ok_or_else(|| Error::Invalid(format!("g is not positive-definite at z = {z}")))?;
    let n = eig.values.len();
    let lam = RMat::from_fn(n, n, |i, j| if i == j { eig.values[i] } else { T::zero() });
    let r1 = &c.g * &eig.vectors * &lam - &c.v * &eig.vectors;
    let r2 = eig.vectors.transpose() * &c.g * &eig.vectors - RMat::identity(n, n);
    let eig_residual = r1.amax().max(r2.amax()).as_f64();
    Ok(Local {
        momenta: eig.values.iter().map(|&l| principal_sqrt(creal(l) - lambda)).collect(),
        thresholds: eig.values,
        frame: eig.vectors,
        g: c.g,
        eig_residual,
    })
}

fn align<T: Real>(prev: &RMat<T>, cur: &mut RMat<T>, g: &RMat<T>) {
    let gc = g * &*cur;
    for s in 0..cur.ncols() {
        if prev.column(s).dot(&gc.column(s)) < T::zero() {
            cur.column_mut(s).neg_mut();
        }
    }
}

fn column_signs<T: Real>(frame: &RMat<T>, basis: &RMat<T>, g: &RMat<T>) -> Vec<T> {
    let gb = g * basis;
    (0..frame.ncols())
        .map(|s| {
            if frame.column(s).dot(&gb.column(s)) < T::zero() {
                -T::one()
            } else {
                T::one()
            }
        })
        .collect()
}

/// WKB field on a given grid spanning `[−L_z, L_z]`.
pub fn wkb_on_grid<T: Real>(medium: &Medium<T>, point: &SpectralPoint<T>, grid: &[T]) -> Result<WkbField<T>> {
    let lambda = point.lambda;
    let n = medium.channels();
    let half = medium.half_width();
    let tails = channel_momenta(medium, point);

    let mut frames: Vec<RMat<T>> = Vec::with_capacity(grid.len());
    let mut thresholds = Vec::with_capacity(grid.len());
    let mut momenta = Vec::with_capacity(grid.len());
    let mut gs = Vec::with_capacity(grid.len());
    let mut eig_residual: f64 = 0.0;
    for &z in grid {
        let mut loc = local_at(medium, z, lambda)?;
        if let Some(prev) = frames.last() {
            align(prev, &mut loc.frame, &loc.g);
        }
        eig_residual = eig_residual.max(loc.eig_residual);
        frames.push(loc.frame);
        thresholds.push(loc.thresholds);
        momenta.push(loc.momenta);
        gs.push(loc.g);
    }

    // turning points: Λ_s(z) − λ must keep its sign along the grid
    if lambda.im == T::zero() {
        for s in 0..n {
            let sign0 = thresholds[0][s] > lambda.re;
            if let Some(k) = thresholds.iter().position(|t| (t[s] > lambda.re) != sign0) {
                return Err(Error::TurningPoint {
                    channel: s,
                    z: grid[k].as_f64(),
                });
            }
        }
    }

    // ∫ K from −L by Simpson on each interval with a midpoint evaluation
    let mut cumulative = vec![vec![creal(T::zero()); n]; grid.len()];
    let mut phase_residual: f64 = 0.0;
    for i in 0..grid.len() - 1 {
        let h = grid[i + 1] - grid[i];
        let mid = local_at(medium, (grid[i] + grid[i + 1]) * T::lit(0.5), lambda)?;
        for s in 0..n {
            let piece =
                (momenta[i][s] + mid.momenta[s] * creal(T::lit(4.0)) + momenta[i + 1][s]) * creal(h / T::lit(6.0));
            cumulative[i + 1][s] = cumulative[i][s] + piece;
            let slope = piece / creal(h);
            phase_residual = phase_residual.max((cabs(slope - mid.momenta[s]) / cabs(mid.momenta[s])).as_f64());
        }
    }
    let total = cumulative[grid.len() - 1].clone();
    let hl = creal(half);
    let phase_plus: Vec<Vec<C<T>>> = cumulative
        .iter()
        .map(|c| (0..n).map(|s| tails.right[s] * hl - (total[s] - c[s])).collect())
        .collect();
    let phase_minus: Vec<Vec<C<T>>> = cumulative
        .iter()
        .map(|c| (0..n).map(|s| c[s] - tails.left[s] * hl).collect())
        .collect();

    let mut conservation_residual: f64 = 0.0;
    for (k, f) in frames.iter().enumerate() {
        let gram = f.transpose() * &gs[k] * f;
        for s in 0..n {
            // K·(f/√K)ᵀ g (f/√K) = K/|K|·fᵀgf for real K
            let kk = momenta[k][s];
            if kk.im == T::zero() {
                conservation_residual = conservation_residual.max((gram[(s, s)] - T::one()).abs().as_f64());
            }
        }
    }

    let last = grid.len() - 1;
    let sign_right = column_signs(&frames[last], &medium.right().frame, &gs[last]);
    let sign_left = column_signs(&frames[0], &medium.left().frame, &gs[0]);
    Ok(WkbField {
        point: point.clone(),
        grid: grid.to_vec(),
        frames,
        thresholds,
        momenta,
        phase_plus,
        phase_minus,
        sign_right,
        sign_left,
        phase_residual,
        conservation_residual,
        eig_residual,
    })
}

/// WKB field on the integration grid of `spec`.
pub fn wkb_jost<T: Real>(medium: &Medium<T>, point: &SpectralPoint<T>, spec: &GridSpec) -> Result<WkbField<T>> {
    let grid = interior_grid(medium, point.lambda, spec);
    wkb_on_grid(medium, point, &grid)
}

impl<T: Real> WkbField<T> {
    /// `f K^{−1/2} e^{±iS}` at one node, with the tail sign of the family.
    pub fn family(&self, fam: Family, node: usize) -> CMat<T> {
        let n = self.momenta[node].len();
        let (phase, sign, dir) = match fam {
            Family::RightPlus => (&self.phase_plus, &self.sign_right, T::one()),
            Family::RightMinus => (&self.phase_plus, &self.sign_right, -T::one()),
            Family::LeftPlus => (&self.phase_minus, &self.sign_left, T::one()),
            Family::LeftMinus => (&self.phase_minus, &self.sign_left, -T::one()),
        };
        let f = complexify(&self.frames[node]);
        CMat::from_fn(n, n, |i, s| {
            let amp = creal(sign[s]) / principal_sqrt(self.momenta[node][s]);
            f[(i, s)] * amp * cexp(ci::<T>() * creal(dir) * phase[node][s])
        })
    }

    /// `S⁺_s − S⁻_s`, constant along `z`.
    pub fn phase_gap(&self) -> Vec<C<T>> {
        let k = 0;
        (0..self.momenta[k].len())
            .map(|s| self.phase_plus[k][s] - self.phase_minus[k][s])
            .collect()
    }

    /// Leading-order prediction `diag(σ e^{i(S⁺ − S⁻)})` for `Φ̃₊`.
    pub fn phi_tilde_prediction(&self) -> CMat<T> {
        let gap = self.phase_gap();
        let n = gap.len();
        CMat::from_fn(n, n, |i, j| {
            if i == j {
                creal(self.sign_left[i] * self.sign_right[i]) * cexp(ci::<T>() * gap[i])
            } else {
                creal(T::zero())
            }
        })
    }

    pub fn residuals(&self) -> Residuals {
        let mut r = Residuals::new();
        r.push("wkb.phase", self.phase_residual);
        r.push("wkb.conservation", self.conservation_residual);
        r.push("wkb.eigen", self.eig_residual);
        r
    }
}

/// Largest relative deviation of the WKB families from the integrated ones
/// (each exact family scaled by `K^{−1/2}` of its tail), over `[−L_z, L_z]`.
pub fn wkb_deviation<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<f64> {
    let field = integrate_jost(medium, point, spec, tol)?;
    let half = medium.half_width();
    let nodes: Vec<usize> = (0..field.grid.len())
        .filter(|&k| field.grid[k] >= -half && field.grid[k] <= half)
        .collect();
    let grid: Vec<T> = nodes.iter().map(|&k| field.grid[k]).collect();
    let wkb = wkb_on_grid(medium, point, &grid)?;
    let mut worst: f64 = 0.0;
    for fam in Family::ALL {
        let k = field.momenta.side(fam.side());
        let scale = CMat::from_fn(k.len(), k.len(), |i, j| {
            if i == j {
                creal(T::one()) / principal_sqrt(k[i])
            } else {
                creal(T::zero())
            }
        });
        let mut size = T::zero();
        let mut gap = T::zero();
        for (w, &node) in nodes.iter().enumerate() {
            let exact = field.u(fam, node) * &scale;
            gap = gap.max(max_diff(&exact, &wkb.family(fam, w)));
            size = size.max(max_abs(&exact));
        }
        worst = worst.max((gap / size).as_f64());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoteRecord {
    pub lambda: f64,
    pub abs_det_s_tilde_minus_1: f64,
    /// `‖Φ̃₊ − diag(σ e^{i(S⁺−S⁻)})‖_max`.
    pub phi_dev: f64,
    /// `det S = det Φ₋/det Φ₊ = det S̃`, worst of the three residuals.
    pub det_identity: f64,
    /// `||det S̃| − 1|`.
    pub det_modulus: f64,
}

/// `|det S̃ − 1|` and the WKB prediction error for `Φ̃₊` along a list of real
/// energies below every threshold.
pub fn dets_asymptote<T: Real>(medium: &Medium<T>, lambdas: &[f64], tol: &Tolerances) -> Result<Vec<AsymptoteRecord>> {
    let spec = GridSpec::from_tolerances(tol, medium.half_width().as_f64());
    lambdas
        .iter()
        .map(|&lambda| {
            let point = SpectralPoint::physical(T::lit(lambda), medium.channels());
            let wkb = wkb_jost(medium, &point, &spec)?;
            if wkb
                .momenta
                .iter()
                .flatten()
                .any(|k| k.im != T::zero() || k.re <= T::zero())
            {
                return Err(Error::TurningPoint { channel: 0, z: 0.0 });
            }
            let ts = transition_at(medium, &point, &spec, tol)?;
            let ss = scattering_matrices(medium, &ts, tol)?;
            let km = ts.momenta.left.iter().map(|&k| principal_sqrt(k)).collect::<Vec<_>>();
            let kp = ts.momenta.right.iter().map(|&k| principal_sqrt(k)).collect::<Vec<_>>();
            let n = km.len();
            let phi_tilde = CMat::from_fn(n, n, |i, j| km[i] * ts.phi_plus[(i, j)] / kp[j]);
            let d = ss.det_s_tilde();
            Ok(AsymptoteRecord {
                lambda,
                abs_det_s_tilde_minus_1: cabs(d - creal(T::one())).as_f64(),
                phi_dev: max_diff(&phi_tilde, &wkb.phi_tilde_prediction()).as_f64(),
                det_identity: determinant_residuals(&ss).max(),
                det_modulus: (cabs(d) - T::one()).abs().as_f64(),
            })
        })
        .collect()
}

pub fn write_asymptote_csv<W: Write>(records: &[AsymptoteRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "lambda,abs_det_S_tilde_minus_1,phi_dev")?;
    for r in records {
        writeln!(out, "{:?},{:?},{:?}", r.lambda, r.abs_det_s_tilde_minus_1, r.phi_dev)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn uniform_medium_is_exact() {
        let m = presets::uniform::<f64>(&[0.0, 1.0], 1.0).validated().unwrap();
        let tol = Tolerances::default();
        let spec = GridSpec::from_tolerances(&tol, 1.0);
        let p = SpectralPoint::physical(-3.0, 2);
        assert!(wkb_deviation(&m, &p, &spec, &tol).unwrap() < 1e-10);
        let rec = dets_asymptote(&m, &[-10.0, -100.0], &tol).unwrap();
        for r in rec {
            // the pipeline side carries RK4 error of order 1e-10
            assert!(r.abs_det_s_tilde_minus_1 < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn right_phase_at_the_right_end() {
        let m = presets::smooth_scalar::<f64>(41).validated().unwrap();
        let tol = Tolerances::default();
        let spec = GridSpec::from_tolerances(&tol, 1.0);
        let p = SpectralPoint::physical(-50.0, 1);
        let w = wkb_jost(&m, &p, &spec).unwrap();
        let last = w.grid.len() - 1;
        let k = channel_momenta(&m, &p).right[0];
        assert!(cabs(w.phase_plus[last][0] - k).abs() < 1e-14);
    }

    #[test]
    fn turning_point_is_rejected() {
        let m = presets::smooth_scalar::<f64>(41).validated().unwrap();
        let tol = Tolerances::default();
        let spec = GridSpec::from_tolerances(&tol, 1.0);
        // between the tail values the local threshold crosses λ
        let err = wkb_jost(&m, &SpectralPoint::physical(0.25, 1), &spec).unwrap_err();
        assert!(matches!(err, Error::TurningPoint { .. }));
    }
}

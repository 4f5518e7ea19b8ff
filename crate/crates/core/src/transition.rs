//! Transition matrices `Φ±`, `Ψ±` from Wronskians at `z = 0`, and checks of
//! their algebraic and analytic structure.

use std::io::{self, Write};

use crate::error::Result;
use crate::jost::{integrate_jost, jost_at_reference, Family, GridSpec, JostAtReference, JostField};
use crate::medium::{Medium, Side};
use crate::num::{cabs, cdiag, ci, conj_mat, creal, identity_residual, max_abs, max_diff, CMat, Real, C};
use crate::residual::Residuals;
use crate::spectral::{classify_channels, ChannelMomenta, SpectralPoint};
use crate::tolerances::Tolerances;

/// `F⁺₊ = F⁻₊Φ₊ + F⁻₋Ψ₊`, `F⁺₋ = F⁻₊Ψ₋ + F⁻₋Φ₋`.
#[derive(Clone, Debug)]
pub struct TransitionSet<T: Real> {
    pub point: SpectralPoint<T>,
    pub momenta: ChannelMomenta<T>,
    pub phi_plus: CMat<T>,
    pub phi_minus: CMat<T>,
    pub psi_plus: CMat<T>,
    pub psi_minus: CMat<T>,
    /// Largest relative mismatch of the basis expansion over the grid, when
    /// the set was built from a full field.
    pub expansion_residual: Option<f64>,
}

/// Divides row `s` by `c·(K⁻)_s`.
fn divide_rows<T: Real>(w: CMat<T>, k: &[C<T>], c: C<T>) -> CMat<T> {
    let mut m = w;
    for (s, &ks) in k.iter().enumerate() {
        let d = c * ks;
        for j in 0..m.ncols() {
            m[(s, j)] /= d;
        }
    }
    m
}

impl<T: Real> TransitionSet<T> {
    pub fn from_reference(r: &JostAtReference<T>) -> Self {
        Self::from_wronskians(r.point.clone(), r.momenta.clone(), |a, b| r.wronskian(a, b))
    }

    fn from_wronskians(
        point: SpectralPoint<T>,
        momenta: ChannelMomenta<T>,
        w: impl Fn(Family, Family) -> CMat<T>,
    ) -> Self {
        use Family::*;
        let two_i = creal(T::lit(2.0)) * ci::<T>();
        let k = &momenta.left;
        Self {
            phi_plus: divide_rows(w(LeftMinus, RightPlus), k, two_i),
            phi_minus: divide_rows(w(LeftPlus, RightMinus), k, -two_i),
            psi_plus: divide_rows(w(LeftPlus, RightPlus), k, -two_i),
            psi_minus: divide_rows(w(LeftMinus, RightMinus), k, two_i),
            point,
            momenta,
            expansion_residual: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.phi_plus.nrows()
    }

    pub fn k_minus(&self) -> CMat<T> {
        cdiag(&self.momenta.left)
    }

    pub fn k_plus(&self) -> CMat<T> {
        cdiag(&self.momenta.right)
    }

    /// Largest entry over the four matrices.
    pub fn scale(&self) -> T {
        max_abs(&self.phi_plus)
            .max(max_abs(&self.phi_minus))
            .max(max_abs(&self.psi_plus))
            .max(max_abs(&self.psi_minus))
    }

    pub fn matrices(&self) -> [(&'static str, &CMat<T>); 4] {
        [
            ("Phi+", &self.phi_plus),
            ("Phi-", &self.phi_minus),
            ("Psi+", &self.psi_plus),
            ("Psi-", &self.psi_minus),
        ]
    }

    /// Largest entrywise difference to another set.
    pub fn max_deviation(&self, other: &TransitionSet<T>) -> T {
        max_diff(&self.phi_plus, &other.phi_plus)
            .max(max_diff(&self.phi_minus, &other.phi_minus))
            .max(max_diff(&self.psi_plus, &other.psi_plus))
            .max(max_diff(&self.psi_minus, &other.psi_minus))
    }

    /// CSV rows `matrix, row, col, re, im` (header included).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "matrix,row,col,re,im")?;
        for (name, m) in self.matrices() {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    writeln!(
                        out,
                        "{name},{i},{j},{:?},{:?}",
                        m[(i, j)].re.as_f64(),
                        m[(i, j)].im.as_f64()
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Transition matrices from a full field, with the expansion residual
/// recorded.
pub fn transition_matrices<T: Real>(field: &JostField<T>) -> TransitionSet<T> {
    let mut ts = transition_at_node(field, field.ref_index);
    ts.expansion_residual = Some(expansion_residual(field, &ts));
    ts
}

/// Transition matrices from the Wronskians evaluated at an arbitrary node.
pub fn transition_at_node<T: Real>(field: &JostField<T>, node: usize) -> TransitionSet<T> {
    TransitionSet::from_wronskians(field.point.clone(), field.momenta.clone(), |a, b| {
        field.wronskian_at(node, a, b)
    })
}

/// Fast path: integrate to `z = 0` only.
pub fn transition_at<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<TransitionSet<T>> {
    Ok(TransitionSet::from_reference(&jost_at_reference(
        medium, point, spec, tol,
    )?))
}

/// `max_z ‖F⁺₊ − F⁻₊Φ₊ − F⁻₋Ψ₊‖` (and the `F⁺₋` partner) relative to the size
/// of the terms at that node.
pub fn expansion_residual<T: Real>(field: &JostField<T>, ts: &TransitionSet<T>) -> f64 {
    use Family::*;
    let mut worst = 0.0_f64;
    for node in 0..field.grid.len() {
        for (target, a, b) in [
            (RightPlus, &ts.phi_plus, &ts.psi_plus),
            (RightMinus, &ts.psi_minus, &ts.phi_minus),
        ] {
            for part in 0..2 {
                let pick = |f: Family| if part == 0 { field.u(f, node) } else { field.p(f, node) };
                let t1 = -(pick(LeftPlus) * a);
                let t2 = -(pick(LeftMinus) * b);
                worst = worst.max(identity_residual(
                    &[pick(target).clone(), t1, t2],
                    &CMat::zeros(field.channels(), field.channels()),
                ));
            }
        }
    }
    worst
}

/// The six bilinear relations between `Φ±`, `Ψ±`, `K±`.
pub fn bilinear_residuals<T: Real>(ts: &TransitionSet<T>) -> Residuals {
    let n = ts.channels();
    let km = ts.k_minus();
    let kp = ts.k_plus();
    let kp_inv = cdiag(
        &ts.momenta
            .right
            .iter()
            .map(|k| creal(T::one()) / *k)
            .collect::<Vec<_>>(),
    );
    let km_inv = cdiag(&ts.momenta.left.iter().map(|k| creal(T::one()) / *k).collect::<Vec<_>>());
    let (fp, fm, sp, sm) = (&ts.phi_plus, &ts.phi_minus, &ts.psi_plus, &ts.psi_minus);
    let zero = CMat::zeros(n, n);
    let mut r = Residuals::new();
    r.push(
        "bilinear.1",
        identity_residual(&[fp.transpose() * &km * sp, -(sp.transpose() * &km * fp)], &zero),
    );
    r.push(
        "bilinear.2",
        identity_residual(&[fp.transpose() * &km * fm, -(sp.transpose() * &km * sm)], &kp),
    );
    r.push(
        "bilinear.3",
        identity_residual(&[fm.transpose() * &km * sm, -(sm.transpose() * &km * fm)], &zero),
    );
    r.push(
        "bilinear.4",
        identity_residual(
            &[fp * &kp_inv * sm.transpose(), -(sm * &kp_inv * fp.transpose())],
            &zero,
        ),
    );
    r.push(
        "bilinear.5",
        identity_residual(
            &[fp * &kp_inv * fm.transpose(), -(sm * &kp_inv * sp.transpose())],
            &km_inv,
        ),
    );
    r.push(
        "bilinear.6",
        identity_residual(
            &[fm * &kp_inv * sp.transpose(), -(sp * &kp_inv * fm.transpose())],
            &zero,
        ),
    );
    r
}

/// Complex-conjugation relations at real λ, one maximum per entry class:
/// `open` (neither index on a cut), `left_cut`, `right_cut`, `both_cuts`.
pub fn conjugation_residuals<T: Real>(
    medium: &Medium<T>,
    ts: &TransitionSet<T>,
    tol: &Tolerances,
) -> Result<Residuals> {
    let lambda = ts.point.lambda.re;
    let cls = classify_channels(medium, lambda, tol)?;
    let n = ts.channels();
    let scale = T::one().max(ts.scale());
    let (fp, fm, sp, sm) = (&ts.phi_plus, &ts.phi_minus, &ts.psi_plus, &ts.psi_minus);
    let (cfp, cfm, csp, csm) = (conj_mat(fp), conj_mat(fm), conj_mat(sp), conj_mat(sm));
    let mut worst = [T::zero(); 4];
    for s in 0..n {
        for sp_ in 0..n {
            let lc = cls.is_closed(Side::Left, s);
            let rc = cls.is_closed(Side::Right, sp_);
            let e = |m: &CMat<T>| m[(s, sp_)];
            let (class, pairs): (usize, [(C<T>, C<T>); 4]) = match (lc, rc) {
                (false, false) => (
                    0,
                    [(e(&cfp), e(fm)), (e(&cfm), e(fp)), (e(&csp), e(sm)), (e(&csm), e(sp))],
                ),
                (true, false) => (
                    1,
                    [(e(&cfp), e(sm)), (e(&cfm), e(sp)), (e(&csp), e(fm)), (e(&csm), e(fp))],
                ),
                (false, true) => (
                    2,
                    [(e(&cfp), e(sp)), (e(&cfm), e(sm)), (e(&csp), e(fp)), (e(&csm), e(fm))],
                ),
                (true, true) => (
                    3,
                    [(e(&cfp), e(fp)), (e(&cfm), e(fm)), (e(&csp), e(sp)), (e(&csm), e(sm))],
                ),
            };
            for (a, b) in pairs {
                worst[class] = worst[class].max(cabs(a - b) / scale);
            }
        }
    }
    let mut r = Residuals::new();
    for (name, w) in [
        "conjugation.open",
        "conjugation.left_cut",
        "conjugation.right_cut",
        "conjugation.both_cuts",
    ]
    .iter()
    .zip(worst)
    {
        r.push(*name, w.as_f64());
    }
    Ok(r)
}

/// Recomputes the set with the sheet of one channel flipped and measures the
/// mismatch against the predicted swaps: a left flip of channel `s` exchanges
/// `Φ±` and `Ψ±` in row `s`; a right flip of channel `s'` sends `Φ±` to `Ψ∓`
/// in column `s'`. Every other entry must stay put.
pub fn monodromy_residual<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    channel: usize,
    side: Side,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<f64> {
    let base = transition_at(medium, point, spec, tol)?;
    let flipped = transition_at(medium, &point.with_flip(side, channel), spec, tol)?;
    Ok(monodromy_mismatch(&base, &flipped, channel, side))
}

pub fn monodromy_mismatch<T: Real>(
    base: &TransitionSet<T>,
    flipped: &TransitionSet<T>,
    channel: usize,
    side: Side,
) -> f64 {
    let n = base.channels();
    let scale = T::one().max(base.scale()).max(flipped.scale());
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            let swapped = match side {
                Side::Left => i == channel,
                Side::Right => j == channel,
            };
            let expect: [&CMat<T>; 4] = if !swapped {
                [&base.phi_plus, &base.phi_minus, &base.psi_plus, &base.psi_minus]
            } else {
                match side {
                    Side::Left => [&base.psi_plus, &base.psi_minus, &base.phi_plus, &base.phi_minus],
                    Side::Right => [&base.psi_minus, &base.psi_plus, &base.phi_minus, &base.phi_plus],
                }
            };
            let got = [
                &flipped.phi_plus,
                &flipped.phi_minus,
                &flipped.psi_plus,
                &flipped.psi_minus,
            ];
            for (e, g) in expect.iter().zip(got) {
                worst = worst.max(cabs(e[(i, j)] - g[(i, j)]) / scale);
            }
        }
    }
    worst.as_f64()
}

/// Integrates the full field and returns it with its transition set.
pub fn field_and_transition<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<(JostField<T>, TransitionSet<T>)> {
    let field = integrate_jost(medium, point, spec, tol)?;
    let ts = transition_matrices(&field);
    Ok((field, ts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::cplx;
    use crate::presets;

    fn spec(m: &Medium<f64>) -> GridSpec {
        GridSpec::from_tolerances(&Tolerances::default(), m.half_width())
    }

    #[test]
    fn uniform_medium_gives_identity() {
        let m = presets::uniform::<f64>(&[0.0, 1.5], 1.0).validated().unwrap();
        let tol = Tolerances::default();
        let ts = transition_at(&m, &SpectralPoint::physical(-0.4, 2), &spec(&m), &tol).unwrap();
        let id = CMat::<f64>::identity(2, 2);
        // interior is still stepped by RK4, so agreement is at truncation level
        assert!(max_diff(&ts.phi_plus, &id) < 1e-10);
        assert!(max_diff(&ts.phi_minus, &id) < 1e-10);
        assert!(max_abs(&ts.psi_plus) < 1e-10);
        assert!(max_abs(&ts.psi_minus) < 1e-10);
    }

    #[test]
    fn step_junction_matches_hand_matching() {
        // K⁻ = 1, K⁺ = 2 at λ = −1; continuity of u and u' at z = 0 gives
        // Φ₊ = (K⁻ + K⁺)/(2K⁻), Ψ₊ = (K⁻ − K⁺)/(2K⁻)
        let m = presets::step::<f64>(0.0, 3.0, 1.0).validated().unwrap();
        let tol = Tolerances::default();
        let (field, ts) = field_and_transition(&m, &SpectralPoint::physical(-1.0, 1), &spec(&m), &tol).unwrap();
        assert!(cabs(ts.phi_plus[(0, 0)] - cplx(1.5, 0.0)) < 1e-10);
        assert!(cabs(ts.psi_plus[(0, 0)] - cplx(-0.5, 0.0)) < 1e-10);
        assert!(ts.expansion_residual.unwrap() < 1e-8);
        assert!(field.wronskian_drift() < 1e-10);
    }

    #[test]
    fn monodromy_on_uniform_medium() {
        let m = presets::uniform::<f64>(&[0.0, 1.5], 1.0).validated().unwrap();
        let tol = Tolerances::default();
        let p = SpectralPoint::principal(cplx(0.7, 0.2), 2);
        for side in [Side::Left, Side::Right] {
            for ch in 0..2 {
                assert!(monodromy_residual(&m, &p, ch, side, &spec(&m), &tol).unwrap() < 1e-12);
            }
        }
    }
}

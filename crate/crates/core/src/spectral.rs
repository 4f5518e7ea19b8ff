//! Channel momenta `K± = sheet · √(Λ± − λ)` and the open/closed split.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{AsymptoticBasis, Medium, Side};
use crate::num::{cabs, cplx, creal, principal_sqrt, Real, C};
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sheet {
    Principal,
    Flipped,
}

impl Sheet {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Sheet::Principal => T::one(),
            Sheet::Flipped => -T::one(),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sheet::Principal => Sheet::Flipped,
            Sheet::Flipped => Sheet::Principal,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPoint<T: Real> {
    pub lambda: C<T>,
    pub sheet_left: Vec<Sheet>,
    pub sheet_right: Vec<Sheet>,
}

impl<T: Real> SpectralPoint<T> {
    /// Principal sheet on every channel.
    pub fn principal(lambda: C<T>, channels: usize) -> Self {
        Self {
            lambda,
            sheet_left: vec![Sheet::Principal; channels],
            sheet_right: vec![Sheet::Principal; channels],
        }
    }

    /// Real λ on the principal sheet.
    pub fn physical(lambda: T, channels: usize) -> Self {
        Self::principal(creal(lambda), channels)
    }

    pub fn is_physical(&self) -> bool {
        self.lambda.im == T::zero()
            && self
                .sheet_left
                .iter()
                .chain(self.sheet_right.iter())
                .all(|&s| s == Sheet::Principal)
    }

    pub fn with_flip(&self, side: Side, channel: usize) -> Self {
        let mut p = self.clone();
        let sheets = match side {
            Side::Left => &mut p.sheet_left,
            Side::Right => &mut p.sheet_right,
        };
        sheets[channel] = sheets[channel].flip();
        p
    }

    pub fn sheets(&self, side: Side) -> &[Sheet] {
        match side {
            Side::Left => &self.sheet_left,
            Side::Right => &self.sheet_right,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMomenta<T: Real> {
    pub left: Vec<C<T>>,
    pub right: Vec<C<T>>,
}

impl<T: Real> ChannelMomenta<T> {
    pub fn side(&self, side: Side) -> &[C<T>] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

fn side_momenta<T: Real>(basis: &AsymptoticBasis<T>, lambda: C<T>, sheets: &[Sheet]) -> Vec<C<T>> {
    basis
        .thresholds
        .iter()
        .zip(sheets)
        .map(|(&th, sheet)| principal_sqrt(creal(th) - lambda) * creal(sheet.sign::<T>()))
        .collect()
}

pub fn channel_momenta<T: Real>(medium: &Medium<T>, point: &SpectralPoint<T>) -> ChannelMomenta<T> {
    ChannelMomenta {
        left: side_momenta(medium.left(), point.lambda, &point.sheet_left),
        right: side_momenta(medium.right(), point.lambda, &point.sheet_right),
    }
}

/// Rejects λ within `threshold·(1+|λ|)` of any threshold.
pub fn ensure_off_thresholds<T: Real>(medium: &Medium<T>, lambda: C<T>, tol: &Tolerances) -> Result<()> {
    let abs_tol = tol.threshold_abs(cabs(lambda).as_f64());
    for side in [Side::Left, Side::Right] {
        for (channel, &th) in medium.basis(side).thresholds.iter().enumerate() {
            if cabs(creal(th) - lambda).as_f64() <= abs_tol {
                return Err(Error::AtThreshold {
                    side,
                    channel,
                    lambda: lambda.re.as_f64(),
                    threshold: th.as_f64(),
                    tol: abs_tol,
                });
            }
        }
    }
    Ok(())
}

/// Open/closed split at real λ. Index lists follow ascending-Λ order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelClassification<T: Real> {
    pub open_left: Vec<usize>,
    pub closed_left: Vec<usize>,
    pub open_right: Vec<usize>,
    pub closed_right: Vec<usize>,
    /// `(K₋)_o`, positive.
    pub kappa_open_left: Vec<T>,
    /// `(K₋)_c = i·kappa`, kappa positive.
    pub kappa_closed_left: Vec<T>,
    pub kappa_open_right: Vec<T>,
    pub kappa_closed_right: Vec<T>,
}

impl<T: Real> ChannelClassification<T> {
    pub fn l_open(&self) -> usize {
        self.open_left.len()
    }
    pub fn l_closed(&self) -> usize {
        self.closed_left.len()
    }
    pub fn r_open(&self) -> usize {
        self.open_right.len()
    }
    pub fn r_closed(&self) -> usize {
        self.closed_right.len()
    }

    pub fn all_open(&self) -> bool {
        self.closed_left.is_empty() && self.closed_right.is_empty()
    }

    pub fn all_closed(&self) -> bool {
        self.open_left.is_empty() && self.open_right.is_empty()
    }

    pub fn open(&self, side: Side) -> &[usize] {
        match side {
            Side::Left => &self.open_left,
            Side::Right => &self.open_right,
        }
    }

    pub fn closed(&self, side: Side) -> &[usize] {
        match side {
            Side::Left => &self.closed_left,
            Side::Right => &self.closed_right,
        }
    }

    pub fn is_closed(&self, side: Side, channel: usize) -> bool {
        self.closed(side).contains(&channel)
    }
}

fn split_side<T: Real>(
    basis: &AsymptoticBasis<T>,
    lambda: T,
    abs_tol: f64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<T>, Vec<T>)> {
    let (mut open, mut closed, mut ko, mut kc) = (vec![], vec![], vec![], vec![]);
    for (s, &th) in basis.thresholds.iter().enumerate() {
        let d = (th - lambda).as_f64();
        if d.abs() <= abs_tol {
            return Err(Error::AtThreshold {
                side: basis.side,
                channel: s,
                lambda: lambda.as_f64(),
                threshold: th.as_f64(),
                tol: abs_tol,
            });
        }
        if d > 0.0 {
            open.push(s);
            ko.push((th - lambda).sqrt());
        } else {
            closed.push(s);
            kc.push((lambda - th).sqrt());
        }
    }
    Ok((open, closed, ko, kc))
}

pub fn classify_channels<T: Real>(medium: &Medium<T>, lambda: T, tol: &Tolerances) -> Result<ChannelClassification<T>> {
    let abs_tol = tol.threshold_abs(lambda.as_f64().abs());
    let (open_left, closed_left, kappa_open_left, kappa_closed_left) = split_side(medium.left(), lambda, abs_tol)?;
    let (open_right, closed_right, kappa_open_right, kappa_closed_right) = split_side(medium.right(), lambda, abs_tol)?;
    Ok(ChannelClassification {
        open_left,
        closed_left,
        open_right,
        closed_right,
        kappa_open_left,
        kappa_closed_left,
        kappa_open_right,
        kappa_closed_right,
    })
}

/// `√λ`-style helper used by callers that need `K` for an explicit threshold.
pub fn momentum<T: Real>(threshold: T, lambda: C<T>, sheet: Sheet) -> C<T> {
    principal_sqrt(creal(threshold) - lambda) * cplx(sheet.sign::<T>(), T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn momenta_on_both_sheets() {
        let k = momentum(4.0_f64, creal(0.0), Sheet::Principal);
        assert_eq!(k, cplx(2.0, 0.0));
        let k = momentum(0.0_f64, creal(4.0), Sheet::Principal);
        assert_eq!(k, cplx(0.0, 2.0));
        let k = momentum(0.0_f64, creal(4.0), Sheet::Flipped);
        assert_eq!(k, cplx(-0.0, -2.0));
    }

    #[test]
    fn classification_examples() {
        let tol = Tolerances::default();
        let m = presets::diagonal_tails(&[1.0, 3.0], &[2.0, 5.0]).validated().unwrap();
        let c = classify_channels(&m, 0.0, &tol).unwrap();
        assert!(c.all_open());
        assert_eq!((c.l_open(), c.r_open()), (2, 2));

        let c = classify_channels(&m, 2.5, &tol).unwrap();
        assert_eq!(c.open_left, vec![1]);
        assert_eq!(c.closed_left, vec![0]);
        assert_eq!(c.open_right, vec![1]);
        assert_eq!(c.closed_right, vec![0]);

        let m1 = presets::diagonal_tails(&[1.0], &[2.0]).validated().unwrap();
        assert!(matches!(
            classify_channels(&m1, 1.0, &tol),
            Err(Error::AtThreshold {
                side: Side::Left,
                channel: 0,
                ..
            })
        ));
    }

    #[test]
    fn sheet_flip_negates_single_entry() {
        let m = presets::diagonal_tails(&[1.0, 3.0], &[2.0, 5.0]).validated().unwrap();
        let p = SpectralPoint::principal(cplx(0.7, 0.2), 2);
        let k = channel_momenta(&m, &p);
        let kf = channel_momenta(&m, &p.with_flip(Side::Right, 1));
        assert_eq!(k.left, kf.left);
        assert_eq!(k.right[0], kf.right[0]);
        assert_eq!(k.right[1], -kf.right[1]);
    }
}

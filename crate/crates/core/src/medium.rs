//! Matrix medium `(g(z), V(z))`: layered interior, constant tails, and the
//! tail eigenproblem that fixes the channel basis at each infinity.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, generalized_symmetric_eigen, min_eigenvalue};
use crate::num::{max_abs_real, RMat, Real};
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Coefficient pair at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients<T: Real> {
    pub g: RMat<T>,
    pub v: RMat<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleNode<T: Real> {
    pub z: T,
    pub g: RMat<T>,
    pub v: RMat<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerKind<T: Real> {
    Constant(Coefficients<T>),
    /// Entrywise piecewise-linear interpolation between nodes.
    Sampled(Vec<SampleNode<T>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T: Real> {
    pub z_lo: T,
    pub z_hi: T,
    pub kind: LayerKind<T>,
}

impl<T: Real> Layer<T> {
    pub fn constant(z_lo: T, z_hi: T, g: RMat<T>, v: RMat<T>) -> Self {
        Self {
            z_lo,
            z_hi,
            kind: LayerKind::Constant(Coefficients { g, v }),
        }
    }

    /// Extent is taken from the first and last node.
    pub fn sampled(nodes: Vec<SampleNode<T>>) -> Self {
        let z_lo = nodes.first().map_or(T::zero(), |n| n.z);
        let z_hi = nodes.last().map_or(T::zero(), |n| n.z);
        Self {
            z_lo,
            z_hi,
            kind: LayerKind::Sampled(nodes),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, LayerKind::Constant(_))
    }

    /// Coefficients at `z`, clamped to the layer extent.
    pub fn coefficients_at(&self, z: T) -> Coefficients<T> {
        match &self.kind {
            LayerKind::Constant(c) => c.clone(),
            LayerKind::Sampled(nodes) => {
                let z = z.max(self.z_lo).min(self.z_hi);
                // last node with node.z <= z
                let k = nodes
                    .partition_point(|n| n.z <= z)
                    .saturating_sub(1)
                    .min(nodes.len().saturating_sub(2));
                let (a, b) = (&nodes[k], &nodes[k + 1]);
                let t = (z - a.z) / (b.z - a.z);
                let s = T::one() - t;
                Coefficients {
                    g: &a.g * s + &b.g * t,
                    v: &a.v * s + &b.v * t,
                }
            }
        }
    }

    /// Interior positions where the coefficients have kinks.
    pub fn interior_nodes(&self) -> Vec<T> {
        match &self.kind {
            LayerKind::Constant(_) => Vec::new(),
            LayerKind::Sampled(nodes) => {
                let n = nodes.len();
                if n <= 2 {
                    Vec::new()
                } else {
                    nodes[1..n - 1].iter().map(|n| n.z).collect()
                }
            }
        }
    }

    fn matrices(&self) -> Vec<(&RMat<T>, &RMat<T>)> {
        match &self.kind {
            LayerKind::Constant(c) => vec![(&c.g, &c.v)],
            LayerKind::Sampled(nodes) => nodes.iter().map(|n| (&n.g, &n.v)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MediumProfile<T: Real> {
    pub channels: usize,
    pub half_width: T,
    /// Ordered, contiguous, covering `[−L_z, L_z]`.
    pub layers: Vec<Layer<T>>,
    pub left_tail: Coefficients<T>,
    pub right_tail: Coefficients<T>,
}

impl<T: Real> MediumProfile<T> {
    /// Tail matrices for `|z| > L_z`; otherwise the layer containing `z`, the
    /// layer with the larger index winning on shared boundaries.
    pub fn sample(&self, z: T) -> Coefficients<T> {
        if z > self.half_width {
            return self.right_tail.clone();
        }
        if z < -self.half_width {
            return self.left_tail.clone();
        }
        let idx = self.layers.iter().rposition(|l| l.z_lo <= z).unwrap_or(0);
        self.layers[idx].coefficients_at(z)
    }

    /// [`Medium::new`] with default tolerances.
    pub fn validated(self) -> Result<Medium<T>> {
        Medium::new(self, &Tolerances::default())
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.layers.iter().all(Layer::is_constant)
    }

    pub fn tail(&self, side: Side) -> &Coefficients<T> {
        match side {
            Side::Left => &self.left_tail,
            Side::Right => &self.right_tail,
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> MediumProfile<U> {
        let m = |a: &RMat<T>| a.map(|x| U::lit(x.as_f64()));
        let c = |c: &Coefficients<T>| Coefficients { g: m(&c.g), v: m(&c.v) };
        MediumProfile {
            channels: self.channels,
            half_width: U::lit(self.half_width.as_f64()),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    z_lo: U::lit(l.z_lo.as_f64()),
                    z_hi: U::lit(l.z_hi.as_f64()),
                    kind: match &l.kind {
                        LayerKind::Constant(k) => LayerKind::Constant(c(k)),
                        LayerKind::Sampled(nodes) => LayerKind::Sampled(
                            nodes
                                .iter()
                                .map(|n| SampleNode {
                                    z: U::lit(n.z.as_f64()),
                                    g: m(&n.g),
                                    v: m(&n.v),
                                })
                                .collect(),
                        ),
                    },
                })
                .collect(),
            left_tail: c(&self.left_tail),
            right_tail: c(&self.right_tail),
        }
    }
}

/// Free-function form of [`MediumProfile::sample`].
pub fn sample_medium<T: Real>(profile: &MediumProfile<T>, z: T) -> (RMat<T>, RMat<T>) {
    let c = profile.sample(z);
    (c.g, c.v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `None` for profile-wide and tail checks.
    pub layer: Option<usize>,
    pub passed: bool,
    /// Asymmetry, smallest eigenvalue, or coverage gap depending on the check.
    pub margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, layer: Option<usize>, passed: bool, margin: f64, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            layer,
            passed,
            margin,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.failures() {
            match c.layer {
                Some(l) => writeln!(f, "  [FAIL] {} (layer {}): {}", c.name, l, c.detail)?,
                None => writeln!(f, "  [FAIL] {}: {}", c.name, c.detail)?,
            }
        }
        Ok(())
    }
}

fn check_pair<T: Real>(
    report: &mut ValidationReport,
    layer: Option<usize>,
    label: &str,
    n: usize,
    g: &RMat<T>,
    v: &RMat<T>,
    tol: &Tolerances,
) {
    let shape_ok = g.shape() == (n, n) && v.shape() == (n, n);
    report.push(
        "shape",
        layer,
        shape_ok,
        0.0,
        format!("{label}: g is {:?}, v is {:?}, expected {n}x{n}", g.shape(), v.shape()),
    );
    if !shape_ok {
        return;
    }
    let finite = g.iter().chain(v.iter()).all(|x| x.as_f64().is_finite());
    report.push("finite", layer, finite, 0.0, format!("{label}: non-finite entry"));
    if !finite {
        return;
    }
    let ga = asymmetry(g).as_f64();
    report.push(
        "g_symmetric",
        layer,
        ga <= tol.sym,
        ga,
        format!("{label}: g asymmetry {ga:e} > {:e}", tol.sym),
    );
    let va = asymmetry(v).as_f64();
    report.push(
        "v_symmetric",
        layer,
        va <= tol.sym,
        va,
        format!("{label}: v asymmetry {va:e} > {:e}", tol.sym),
    );
    let lmin = min_eigenvalue(g).as_f64();
    report.push(
        "g_definite",
        layer,
        lmin > 0.0,
        lmin,
        format!("{label}: smallest eigenvalue of g is {lmin}"),
    );
}

/// Runs every structural check; a profile failing any of them is rejected by
/// [`Medium::new`].
pub fn validate_profile<T: Real>(profile: &MediumProfile<T>, tol: &Tolerances) -> ValidationReport {
    let mut r = ValidationReport::default();
    let n = profile.channels;
    r.push("channels", None, n >= 1, n as f64, format!("channel count {n} < 1"));
    let lz = profile.half_width.as_f64();
    r.push(
        "half_width",
        None,
        lz.is_finite() && lz > 0.0,
        lz,
        format!("half width {lz} must be finite and positive"),
    );
    if n == 0 {
        return r;
    }

    check_pair(
        &mut r,
        None,
        "left tail",
        n,
        &profile.left_tail.g,
        &profile.left_tail.v,
        tol,
    );
    check_pair(
        &mut r,
        None,
        "right tail",
        n,
        &profile.right_tail.g,
        &profile.right_tail.v,
        tol,
    );

    r.push(
        "layers_present",
        None,
        !profile.layers.is_empty(),
        profile.layers.len() as f64,
        "no interior layers".into(),
    );

    for (i, layer) in profile.layers.iter().enumerate() {
        let (lo, hi) = (layer.z_lo.as_f64(), layer.z_hi.as_f64());
        r.push(
            "extent",
            Some(i),
            lo < hi,
            hi - lo,
            format!("z_lo = {lo} must be below z_hi = {hi}"),
        );
        if let LayerKind::Sampled(nodes) = &layer.kind {
            let increasing = nodes.len() >= 2 && nodes.windows(2).all(|w| w[0].z < w[1].z);
            r.push(
                "sampled_nodes",
                Some(i),
                increasing,
                nodes.len() as f64,
                "sampled layer needs at least two strictly increasing nodes".into(),
            );
        }
        for (k, (g, v)) in layer.matrices().into_iter().enumerate() {
            let label = match layer.kind {
                LayerKind::Constant(_) => "constant".to_string(),
                LayerKind::Sampled(_) => format!("node {k}"),
            };
            check_pair(&mut r, Some(i), &label, n, g, v, tol);
        }
    }

    if let (Some(first), Some(last)) = (profile.layers.first(), profile.layers.last()) {
        let gap = (first.z_lo.as_f64() + lz).abs();
        r.push(
            "coverage",
            Some(0),
            first.z_lo == -profile.half_width,
            gap,
            format!("first layer starts at {} instead of {}", first.z_lo, -lz),
        );
        let gap = (last.z_hi.as_f64() - lz).abs();
        r.push(
            "coverage",
            Some(profile.layers.len() - 1),
            last.z_hi == profile.half_width,
            gap,
            format!("last layer ends at {} instead of {lz}", last.z_hi),
        );
        for (i, w) in profile.layers.windows(2).enumerate() {
            let gap = (w[1].z_lo - w[0].z_hi).as_f64();
            r.push(
                "coverage",
                Some(i + 1),
                w[1].z_lo == w[0].z_hi,
                gap,
                format!(
                    "layer {} starts at {} but layer {} ends at {}",
                    i + 1,
                    w[1].z_lo,
                    i,
                    w[0].z_hi
                ),
            );
        }
    }
    r
}

/// Channel basis at one infinity: `g f diag(Λ) = V f`, `fᵀ g f = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticBasis<T: Real> {
    pub side: Side,
    /// Ascending.
    pub thresholds: Vec<T>,
    pub frame: RMat<T>,
}

impl<T: Real> AsymptoticBasis<T> {
    /// `(‖g f Λ − V f‖_max, ‖fᵀ g f − I‖_max)`.
    pub fn residuals(&self, tail: &Coefficients<T>) -> (T, T) {
        let n = self.thresholds.len();
        let lam = RMat::from_diagonal(&nalgebra::DVector::from_column_slice(&self.thresholds));
        let eig = &tail.g * &self.frame * &lam - &tail.v * &self.frame;
        let norm = self.frame.transpose() * &tail.g * &self.frame - RMat::identity(n, n);
        (max_abs_real(&eig), max_abs_real(&norm))
    }

    pub fn min_gap(&self) -> Option<T> {
        self.thresholds.windows(2).map(|w| w[1] - w[0]).reduce(|a, b| a.min(b))
    }
}

pub fn diagonalize_tail<T: Real>(side: Side, tail: &Coefficients<T>, gap_factor: f64) -> Result<AsymptoticBasis<T>> {
    let eig = generalized_symmetric_eigen(&tail.g, &tail.v)
        .ok_or_else(|| Error::Invalid(format!("{side} tail g is not positive-definite")))?;
    let basis = AsymptoticBasis {
        side,
        thresholds: eig.values,
        frame: eig.vectors,
    };
    let scale = basis.thresholds.iter().fold(1.0_f64, |a, x| a.max(x.as_f64().abs()));
    let tol = gap_factor * scale;
    if let Some(gap) = basis.min_gap() {
        if gap.as_f64() <= tol {
            return Err(Error::DegenerateThresholds {
                side,
                gap: gap.as_f64(),
                tol,
            });
        }
    }
    Ok(basis)
}

/// Both tail bases, ordered by ascending threshold with the largest-entry-positive
/// sign convention.
pub fn diagonalize_ends<T: Real>(
    profile: &MediumProfile<T>,
    gap_factor: f64,
) -> Result<(AsymptoticBasis<T>, AsymptoticBasis<T>)> {
    Ok((
        diagonalize_tail(Side::Left, &profile.left_tail, gap_factor)?,
        diagonalize_tail(Side::Right, &profile.right_tail, gap_factor)?,
    ))
}

/// A validated profile together with its tail bases. Every downstream
/// operation takes this type.
#[derive(Clone, Debug)]
pub struct Medium<T: Real> {
    profile: MediumProfile<T>,
    left: AsymptoticBasis<T>,
    right: AsymptoticBasis<T>,
}

impl<T: Real> Medium<T> {
    pub fn new(profile: MediumProfile<T>, tol: &Tolerances) -> Result<Self> {
        let report = validate_profile(&profile, tol);
        if !report.passed() {
            return Err(Error::InvalidProfile(report));
        }
        let (left, right) = diagonalize_ends(&profile, tol.gap)?;
        Ok(Self { profile, left, right })
    }

    pub fn profile(&self) -> &MediumProfile<T> {
        &self.profile
    }

    pub fn channels(&self) -> usize {
        self.profile.channels
    }

    pub fn half_width(&self) -> T {
        self.profile.half_width
    }

    pub fn basis(&self, side: Side) -> &AsymptoticBasis<T> {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn left(&self) -> &AsymptoticBasis<T> {
        &self.left
    }

    pub fn right(&self) -> &AsymptoticBasis<T> {
        &self.right
    }

    /// All thresholds from both sides, ascending.
    pub fn all_thresholds(&self) -> Vec<T> {
        let mut t: Vec<T> = self
            .left
            .thresholds
            .iter()
            .chain(self.right.thresholds.iter())
            .copied()
            .collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> RMat<f64> {
        let n = rows.len();
        RMat::from_fn(n, rows[0].len(), |i, j| rows[i][j])
    }

    fn scalar_well() -> MediumProfile<f64> {
        let one = m(&[&[1.0]]);
        MediumProfile {
            channels: 1,
            half_width: 1.0,
            layers: vec![Layer::constant(-1.0, 1.0, one.clone(), m(&[&[10.0]]))],
            left_tail: Coefficients {
                g: one.clone(),
                v: m(&[&[0.0]]),
            },
            right_tail: Coefficients {
                g: one,
                v: m(&[&[0.0]]),
            },
        }
    }

    #[test]
    fn scalar_profile_passes() {
        let r = validate_profile(&scalar_well(), &Tolerances::default());
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn indefinite_layer_flagged() {
        let g = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let id = RMat::identity(2, 2);
        let p = MediumProfile {
            channels: 2,
            half_width: 1.0,
            layers: vec![Layer::constant(-1.0, 1.0, g, RMat::zeros(2, 2))],
            left_tail: Coefficients {
                g: id.clone(),
                v: m(&[&[0.0, 0.0], &[0.0, 1.0]]),
            },
            right_tail: Coefficients {
                g: id,
                v: m(&[&[0.0, 0.0], &[0.0, 1.0]]),
            },
        };
        let r = validate_profile(&p, &Tolerances::default());
        let bad: Vec<_> = r.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].name, "g_definite");
        assert_eq!(bad[0].layer, Some(0));
        assert!((bad[0].margin + 1.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_gap_flagged() {
        let mut p = scalar_well();
        let (g, v) = (m(&[&[1.0]]), m(&[&[10.0]]));
        p.layers = vec![
            Layer::constant(-1.0, 0.0, g.clone(), v.clone()),
            Layer::constant(0.1, 1.0, g, v),
        ];
        let r = validate_profile(&p, &Tolerances::default());
        let bad: Vec<_> = r.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].name, "coverage");
        assert_eq!(bad[0].layer, Some(1));
        assert!(matches!(
            Medium::new(p, &Tolerances::default()),
            Err(Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn asymmetric_v_flagged() {
        let mut p = scalar_well();
        p.channels = 2;
        let id = RMat::identity(2, 2);
        let v = m(&[&[0.0, 1.0], &[1.5, 2.0]]);
        p.left_tail = Coefficients {
            g: id.clone(),
            v: v.clone(),
        };
        p.right_tail = Coefficients {
            g: id.clone(),
            v: m(&[&[0.0, 0.0], &[0.0, 1.0]]),
        };
        p.layers = vec![Layer::constant(-1.0, 1.0, id, m(&[&[0.0, 0.0], &[0.0, 1.0]]))];
        let r = validate_profile(&p, &Tolerances::default());
        let bad: Vec<_> = r.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].name, "v_symmetric");
        assert_eq!(bad[0].layer, None);
    }

    #[test]
    fn diagonal_tail() {
        let tail = Coefficients {
            g: RMat::identity(2, 2),
            v: m(&[&[1.0, 0.0], &[0.0, 4.0]]),
        };
        let b = diagonalize_tail(Side::Right, &tail, 1e-9).unwrap();
        assert_eq!(b.thresholds, vec![1.0, 4.0]);
        assert_eq!(b.frame, RMat::identity(2, 2));
    }

    #[test]
    fn coupled_tail() {
        let tail = Coefficients {
            g: RMat::identity(2, 2),
            v: m(&[&[2.0, 1.0], &[1.0, 2.0]]),
        };
        let b = diagonalize_tail(Side::Right, &tail, 1e-9).unwrap();
        assert!((b.thresholds[0] - 1.0).abs() < 1e-14 && (b.thresholds[1] - 3.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = m(&[&[s, s], &[-s, s]]);
        assert!((&b.frame - expect).abs().max() < 1e-14);
    }

    #[test]
    fn degenerate_tail_rejected() {
        let tail = Coefficients {
            g: m(&[&[4.0, 0.0], &[0.0, 1.0]]),
            v: m(&[&[4.0, 0.0], &[0.0, 1.0]]),
        };
        assert!(matches!(
            diagonalize_tail(Side::Right, &tail, 1e-9),
            Err(Error::DegenerateThresholds { side: Side::Right, .. })
        ));
    }

    #[test]
    fn generic_over_f32() {
        let tail = Coefficients::<f32> {
            g: RMat::identity(2, 2),
            v: RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
        };
        let b = diagonalize_tail(Side::Left, &tail, 1e-6).unwrap();
        assert!((b.thresholds[0] - 1.0).abs() < 1e-5);
        assert!((b.thresholds[1] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn sampling_tails_and_interpolation() {
        let one = m(&[&[1.0]]);
        let p = MediumProfile {
            channels: 1,
            half_width: 1.0,
            layers: vec![
                Layer::constant(-1.0, 0.0, one.clone(), m(&[&[7.0]])),
                Layer::sampled(vec![
                    SampleNode {
                        z: 0.0,
                        g: one.clone(),
                        v: m(&[&[0.0]]),
                    },
                    SampleNode {
                        z: 1.0,
                        g: one.clone(),
                        v: m(&[&[2.0]]),
                    },
                ]),
            ],
            left_tail: Coefficients {
                g: one.clone(),
                v: m(&[&[-1.0]]),
            },
            right_tail: Coefficients {
                g: one,
                v: m(&[&[3.0]]),
            },
        };
        assert_eq!(sample_medium(&p, 6.0).1[(0, 0)], 3.0);
        assert_eq!(sample_medium(&p, -6.0).1[(0, 0)], -1.0);
        assert_eq!(sample_medium(&p, 0.5).1[(0, 0)], 1.0);
        // boundary belongs to the right-hand layer
        assert_eq!(sample_medium(&p, 0.0).1[(0, 0)], 0.0);
        assert_eq!(sample_medium(&p, -0.5).1[(0, 0)], 7.0);
    }
}

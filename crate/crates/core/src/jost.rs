//! Jost solutions: exact plane waves in the tails, fixed-step RK4 across the
//! interior on the first-order system `u' = g⁻¹ p`, `p' = −(V − λ g) u`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::linalg::spd_solve;
use crate::medium::{Coefficients, LayerKind, Medium, Side};
use crate::num::{cabs, cexp, ci, complexify, creal, max_abs, max_diff, CMat, RMat, Real, C};
use crate::spectral::{channel_momenta, ensure_off_thresholds, ChannelMomenta, SpectralPoint};
use crate::tolerances::Tolerances;

/// Step and padding controls for [`integrate_jost`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Largest step, absolute.
    pub h_max: f64,
    /// Largest `|K_local|·h` per step.
    pub phase_step: f64,
    /// Output padding beyond `±L_z`, absolute.
    pub pad: f64,
}

impl GridSpec {
    pub fn from_tolerances(tol: &Tolerances, half_width: f64) -> Self {
        Self {
            h_max: tol.h_max * 2.0 * half_width,
            phase_step: tol.phase_step,
            pad: tol.pad * half_width,
        }
    }

    /// Same grid with every step divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            h_max: self.h_max / factor,
            phase_step: self.phase_step / factor,
            pad: self.pad,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `F⁺₊`
    RightPlus,
    /// `F⁺₋`
    RightMinus,
    /// `F⁻₊`
    LeftPlus,
    /// `F⁻₋`
    LeftMinus,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::RightPlus,
        Family::RightMinus,
        Family::LeftPlus,
        Family::LeftMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::RightPlus => "F+_+",
            Family::RightMinus => "F+_-",
            Family::LeftPlus => "F-_+",
            Family::LeftMinus => "F-_-",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn side(self) -> Side {
        match self {
            Family::RightPlus | Family::RightMinus => Side::Right,
            Family::LeftPlus | Family::LeftMinus => Side::Left,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Family::RightPlus | Family::LeftPlus => 1.0,
            Family::RightMinus | Family::LeftMinus => -1.0,
        }
    }
}

/// `w = u₁ᵀ p₂ − p₁ᵀ u₂` (plain transpose, no conjugation).
pub fn wronskian<T: Real>(u1: &CMat<T>, p1: &CMat<T>, u2: &CMat<T>, p2: &CMat<T>) -> CMat<T> {
    u1.transpose() * p2 - p1.transpose() * u2
}

/// Exact tail data `(f e^{±iKz}, g f (±iK) e^{±iKz})` of one family at `z`.
pub fn tail_jost<T: Real>(tail: &Coefficients<T>, frame: &RMat<T>, k: &[C<T>], sign: T, z: T) -> (CMat<T>, CMat<T>) {
    let n = k.len();
    let f = complexify(frame);
    let gf = complexify(&(&tail.g * frame));
    let mut u = CMat::zeros(n, n);
    let mut p = CMat::zeros(n, n);
    for s in 0..n {
        let phase = cexp(ci::<T>() * k[s] * creal(sign * z));
        let dp = ci::<T>() * k[s] * creal(sign) * phase;
        for i in 0..n {
            u[(i, s)] = f[(i, s)] * phase;
            p[(i, s)] = gf[(i, s)] * dp;
        }
    }
    (u, p)
}

/// Generator `[[0, g⁻¹], [−(V − λg), 0]]` of the first-order system.
fn generator<T: Real>(c: &Coefficients<T>, lambda: C<T>) -> CMat<T> {
    let n = c.g.nrows();
    let ginv = spd_solve(&c.g, &RMat::identity(n, n)).expect("validated g is positive-definite");
    let mut a = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            a[(i, n + j)] = creal(ginv[(i, j)]);
            a[(n + i, j)] = -(creal(c.v[(i, j)]) - lambda * creal(c.g[(i, j)]));
        }
    }
    a
}

/// RK4 step matrix for `y' = A(z) y` over `[z, z + h]`.
fn rk4_step<T: Real>(a1: &CMat<T>, a2: &CMat<T>, a3: &CMat<T>, h: T) -> CMat<T> {
    let m = a1.nrows();
    let id = CMat::identity(m, m);
    let hh = creal(h);
    let half = creal(h * T::lit(0.5));
    let k1 = a1.clone();
    let k2 = a2 * (&id + &k1 * half);
    let k3 = a2 * (&id + &k2 * half);
    let k4 = a3 * (&id + &k3 * hh);
    id + (k1 + k2 * creal(T::lit(2.0)) + k3 * creal(T::lit(2.0)) + k4) * (hh / creal(T::lit(6.0)))
}

/// Uniformly stepped interval between two breakpoints.
#[derive(Clone, Debug)]
struct Segment<T: Real> {
    z0: T,
    z1: T,
    steps: usize,
    /// `Some` when the coefficients are constant on the segment.
    constant: Option<Coefficients<T>>,
}

impl<T: Real> Segment<T> {
    fn h(&self) -> T {
        (self.z1 - self.z0) / T::lit(self.steps as f64)
    }

    fn node(&self, k: usize) -> T {
        if k == self.steps {
            self.z1
        } else {
            self.z0 + self.h() * T::lit(k as f64)
        }
    }
}

/// Largest local wavenumber `√ρ(g⁻¹(V − λ g))` of a coefficient pair.
fn local_wavenumber<T: Real>(c: &Coefficients<T>, lambda: C<T>) -> f64 {
    let n = c.g.nrows();
    let ginv = spd_solve(&c.g, &RMat::identity(n, n)).expect("validated g is positive-definite");
    let m = complexify(&(&ginv * &c.v)) - CMat::identity(n, n) * lambda;
    // spectral radius bounded by the max row sum; good enough for step control
    let rho = (0..n)
        .map(|i| (0..n).map(|j| cabs(m[(i, j)]).as_f64()).sum::<f64>())
        .fold(0.0, f64::max);
    rho.sqrt()
}

fn build_segments<T: Real>(medium: &Medium<T>, lambda: C<T>, spec: &GridSpec) -> Vec<Segment<T>> {
    let profile = medium.profile();
    let half = profile.half_width;
    let mut cuts: Vec<T> = vec![-half, half];
    for layer in &profile.layers {
        cuts.push(layer.z_lo);
        cuts.push(layer.z_hi);
        cuts.extend(layer.interior_nodes());
    }
    if -half < T::zero() && T::zero() < half {
        cuts.push(T::zero());
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    cuts.dedup();

    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (z0, z1) = (w[0], w[1]);
            let mid = (z0 + z1) * T::lit(0.5);
            let layer = profile
                .layers
                .iter()
                .rposition(|l| l.z_lo <= mid)
                .map(|i| &profile.layers[i])
                .expect("validated coverage");
            let constant = match &layer.kind {
                LayerKind::Constant(c) => Some(c.clone()),
                LayerKind::Sampled(_) => None,
            };
            let kmax = [z0, mid, z1]
                .iter()
                .map(|&z| local_wavenumber(&layer.coefficients_at(z), lambda))
                .fold(0.0, f64::max);
            let mut h = spec.h_max;
            if kmax > 0.0 && spec.phase_step > 0.0 {
                h = h.min(spec.phase_step / kmax);
            }
            let len = (z1 - z0).as_f64();
            let steps = ((len / h).ceil() as usize).max(1);
            Segment {
                z0,
                z1,
                steps,
                constant,
            }
        })
        .collect()
}

/// Integration nodes on `[−L_z, L_z]`, breakpoints included.
pub fn interior_grid<T: Real>(medium: &Medium<T>, lambda: C<T>, spec: &GridSpec) -> Vec<T> {
    let segs = build_segments(medium, lambda, spec);
    let mut out = vec![segs[0].z0];
    for seg in &segs {
        out.extend((1..=seg.steps).map(|k| seg.node(k)));
    }
    out
}

/// Step matrices along one segment, walking forwards (`reverse = false`, from
/// `z0` to `z1`) or backwards.
struct SegmentStepper<'a, T: Real> {
    seg: &'a Segment<T>,
    medium: &'a Medium<T>,
    lambda: C<T>,
    reverse: bool,
    fixed: Option<CMat<T>>,
}

impl<'a, T: Real> SegmentStepper<'a, T> {
    fn new(seg: &'a Segment<T>, medium: &'a Medium<T>, lambda: C<T>, reverse: bool) -> Self {
        let fixed = seg.constant.as_ref().map(|c| {
            let a = generator(c, lambda);
            let h = if reverse { -seg.h() } else { seg.h() };
            rk4_step(&a, &a, &a, h)
        });
        Self {
            seg,
            medium,
            lambda,
            reverse,
            fixed,
        }
    }

    /// Step matrix for step number `k` (counted in walking direction).
    fn step(&self, k: usize) -> CMat<T> {
        if let Some(m) = &self.fixed {
            return m.clone();
        }
        let n = self.seg.steps;
        let (za, zb) = if self.reverse {
            (self.seg.node(n - k), self.seg.node(n - k - 1))
        } else {
            (self.seg.node(k), self.seg.node(k + 1))
        };
        let layer_at = |z: T| {
            // stay inside this segment's layer so kinks are never straddled
            let mid = (self.seg.z0 + self.seg.z1) * T::lit(0.5);
            let p = self.medium.profile();
            let idx = p.layers.iter().rposition(|l| l.z_lo <= mid).unwrap_or(0);
            p.layers[idx].coefficients_at(z)
        };
        let a1 = generator(&layer_at(za), self.lambda);
        let a2 = generator(&layer_at((za + zb) * T::lit(0.5)), self.lambda);
        let a3 = generator(&layer_at(zb), self.lambda);
        rk4_step(&a1, &a2, &a3, zb - za)
    }

    /// Product of all step matrices of the segment.
    fn total(&self) -> CMat<T> {
        if let Some(m) = &self.fixed {
            return matrix_power(m, self.seg.steps);
        }
        let mut acc = CMat::identity(self.seg_dim(), self.seg_dim());
        for k in 0..self.seg.steps {
            acc = self.step(k) * acc;
        }
        acc
    }

    fn seg_dim(&self) -> usize {
        2 * self.medium.channels()
    }
}

fn matrix_power<T: Real>(m: &CMat<T>, mut e: usize) -> CMat<T> {
    let mut result = CMat::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &base * &result;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

fn stack<T: Real>(u: &CMat<T>, p: &CMat<T>) -> CMat<T> {
    let n = u.nrows();
    let mut y = CMat::zeros(2 * n, u.ncols());
    y.view_mut((0, 0), (n, u.ncols())).copy_from(u);
    y.view_mut((n, 0), (n, u.ncols())).copy_from(p);
    y
}

fn unstack<T: Real>(y: &CMat<T>, n: usize, col0: usize) -> (CMat<T>, CMat<T>) {
    (
        y.view((0, col0), (n, n)).into_owned(),
        y.view((n, col0), (n, n)).into_owned(),
    )
}

/// Seeds `[F₊ F₋]` stacked as a `2N × 2N` state at the given side's edge.
fn seed_state<T: Real>(medium: &Medium<T>, momenta: &ChannelMomenta<T>, side: Side) -> CMat<T> {
    let half = medium.half_width();
    let (z, k) = match side {
        Side::Right => (half, &momenta.right),
        Side::Left => (-half, &momenta.left),
    };
    let tail = medium.profile().tail(side);
    let frame = &medium.basis(side).frame;
    let (up, pp) = tail_jost(tail, frame, k, T::one(), z);
    let (um, pm) = tail_jost(tail, frame, k, -T::one(), z);
    let n = medium.channels();
    let mut y = CMat::zeros(2 * n, 2 * n);
    y.view_mut((0, 0), (2 * n, n)).copy_from(&stack(&up, &pp));
    y.view_mut((0, n), (2 * n, n)).copy_from(&stack(&um, &pm));
    y
}

/// Jost data at `z = 0` only, without storing the grid.
#[derive(Clone, Debug)]
pub struct JostAtReference<T: Real> {
    pub point: SpectralPoint<T>,
    pub momenta: ChannelMomenta<T>,
    /// `[u; p]` of `[F⁺₊ F⁺₋]`.
    pub right: CMat<T>,
    /// `[u; p]` of `[F⁻₊ F⁻₋]`.
    pub left: CMat<T>,
}

impl<T: Real> JostAtReference<T> {
    pub fn family(&self, fam: Family) -> (CMat<T>, CMat<T>) {
        let n = self.momenta.left.len();
        match fam {
            Family::RightPlus => unstack(&self.right, n, 0),
            Family::RightMinus => unstack(&self.right, n, n),
            Family::LeftPlus => unstack(&self.left, n, 0),
            Family::LeftMinus => unstack(&self.left, n, n),
        }
    }

    pub fn wronskian(&self, a: Family, b: Family) -> CMat<T> {
        let (u1, p1) = self.family(a);
        let (u2, p2) = self.family(b);
        wronskian(&u1, &p1, &u2, &p2)
    }
}

/// Propagates the four families to `z = 0` (constant segments are raised to
/// a power instead of being stepped one by one).
pub fn jost_at_reference<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<JostAtReference<T>> {
    ensure_off_thresholds(medium, point.lambda, tol)?;
    let momenta = channel_momenta(medium, point);
    let segs = build_segments(medium, point.lambda, spec);
    let mut right = seed_state(medium, &momenta, Side::Right);
    let mut left = seed_state(medium, &momenta, Side::Left);
    for seg in segs.iter().rev().filter(|s| s.z0 >= T::zero()) {
        right = SegmentStepper::new(seg, medium, point.lambda, true).total() * right;
    }
    for seg in segs.iter().filter(|s| s.z1 <= T::zero()) {
        left = SegmentStepper::new(seg, medium, point.lambda, false).total() * left;
    }
    check_finite(&right, T::zero())?;
    check_finite(&left, T::zero())?;
    Ok(JostAtReference {
        point: point.clone(),
        momenta,
        right,
        left,
    })
}

fn check_finite<T: Real>(m: &CMat<T>, z: T) -> Result<()> {
    if m.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::IntegratorStep { z: z.as_f64() })
    }
}

/// The four Jost families and their conjugate momenta `p = g ∂u` on a grid.
#[derive(Clone, Debug)]
pub struct JostField<T: Real> {
    pub point: SpectralPoint<T>,
    pub momenta: ChannelMomenta<T>,
    /// Strictly increasing, spans `[−L_z − pad, L_z + pad]`, contains every
    /// layer boundary and `z = 0`.
    pub grid: Vec<T>,
    /// Index of `z = 0` in `grid`.
    pub ref_index: usize,
    u: [Vec<CMat<T>>; 4],
    p: [Vec<CMat<T>>; 4],
}

impl<T: Real> JostField<T> {
    pub fn channels(&self) -> usize {
        self.momenta.left.len()
    }

    pub fn u(&self, fam: Family, node: usize) -> &CMat<T> {
        &self.u[fam.index()][node]
    }

    pub fn p(&self, fam: Family, node: usize) -> &CMat<T> {
        &self.p[fam.index()][node]
    }

    pub fn wronskian_at(&self, node: usize, a: Family, b: Family) -> CMat<T> {
        wronskian(self.u(a, node), self.p(a, node), self.u(b, node), self.p(b, node))
    }

    /// `max_z ‖w(z) − w(0)‖_max / (1 + ‖w(0)‖_max)` over the four cross pairings.
    pub fn wronskian_drift(&self) -> T {
        use Family::*;
        let pairs = [
            (LeftMinus, RightPlus),
            (LeftPlus, RightPlus),
            (LeftPlus, RightMinus),
            (LeftMinus, RightMinus),
        ];
        let mut worst = T::zero();
        for (a, b) in pairs {
            let w0 = self.wronskian_at(self.ref_index, a, b);
            let scale = T::one() + max_abs(&w0);
            for node in 0..self.grid.len() {
                worst = worst.max(max_diff(&self.wronskian_at(node, a, b), &w0) / scale);
            }
        }
        worst
    }

    /// Largest deviation from `w[F±₊, F±₋] = −2iK±`, `w[F±_a, F±_a] = 0` over
    /// every node, relative to `max(1, |K|)`.
    pub fn basic_wronskian_residual(&self) -> T {
        let n = self.channels();
        let mut worst = T::zero();
        for (plus, minus, k) in [
            (Family::RightPlus, Family::RightMinus, &self.momenta.right),
            (Family::LeftPlus, Family::LeftMinus, &self.momenta.left),
        ] {
            let expected = CMat::from_fn(n, n, |i, j| {
                if i == j {
                    -creal(T::lit(2.0)) * ci::<T>() * k[i]
                } else {
                    creal(T::zero())
                }
            });
            let zero = CMat::zeros(n, n);
            let scale = T::one().max(max_abs(&expected));
            for node in 0..self.grid.len() {
                let cross = self.wronskian_at(node, plus, minus);
                worst = worst.max(max_diff(&cross, &expected) / scale);
                for fam in [plus, minus] {
                    worst = worst.max(max_diff(&self.wronskian_at(node, fam, fam), &zero) / scale);
                }
            }
        }
        worst
    }

    /// Reference-point data in the same form as [`jost_at_reference`].
    pub fn at_reference(&self) -> JostAtReference<T> {
        let i = self.ref_index;
        let state = |a: Family, b: Family| {
            let n = self.channels();
            let mut y = CMat::zeros(2 * n, 2 * n);
            y.view_mut((0, 0), (2 * n, n))
                .copy_from(&stack(self.u(a, i), self.p(a, i)));
            y.view_mut((0, n), (2 * n, n))
                .copy_from(&stack(self.u(b, i), self.p(b, i)));
            y
        };
        JostAtReference {
            point: self.point.clone(),
            momenta: self.momenta.clone(),
            right: state(Family::RightPlus, Family::RightMinus),
            left: state(Family::LeftPlus, Family::LeftMinus),
        }
    }

    /// CSV with columns `z, family, column, component, re_u, im_u, re_p, im_p`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "z,family,column,component,re_u,im_u,re_p,im_p")?;
        let n = self.channels();
        for (node, z) in self.grid.iter().enumerate() {
            for fam in Family::ALL {
                let (u, p) = (self.u(fam, node), self.p(fam, node));
                for col in 0..n {
                    for comp in 0..n {
                        let (a, b) = (u[(comp, col)], p[(comp, col)]);
                        writeln!(
                            out,
                            "{:?},{},{},{},{:?},{:?},{:?},{:?}",
                            z.as_f64(),
                            fam.label(),
                            col,
                            comp,
                            a.re.as_f64(),
                            a.im.as_f64(),
                            b.re.as_f64(),
                            b.im.as_f64()
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Integrates all four Jost families on the grid described by `spec`.
pub fn integrate_jost<T: Real>(
    medium: &Medium<T>,
    point: &SpectralPoint<T>,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<JostField<T>> {
    ensure_off_thresholds(medium, point.lambda, tol)?;
    let n = medium.channels();
    let half = medium.half_width();
    let momenta = channel_momenta(medium, point);
    let segs = build_segments(medium, point.lambda, spec);

    // interior nodes
    let mut interior: Vec<T> = vec![segs[0].z0];
    for seg in &segs {
        for k in 1..=seg.steps {
            interior.push(seg.node(k));
        }
    }
    let pad_nodes = |h: T| -> Vec<T> {
        if spec.pad <= 0.0 {
            return Vec::new();
        }
        let pad = T::lit(spec.pad);
        let count = ((spec.pad / h.as_f64()).ceil() as usize).max(1);
        (1..=count).map(|k| pad * T::lit(k as f64 / count as f64)).collect()
    };
    let left_pad: Vec<T> = pad_nodes(segs[0].h()).into_iter().rev().map(|d| -half - d).collect();
    let right_pad: Vec<T> = pad_nodes(segs[segs.len() - 1].h())
        .into_iter()
        .map(|d| half + d)
        .collect();
    let offset = left_pad.len();
    let grid: Vec<T> = left_pad
        .iter()
        .chain(interior.iter())
        .chain(right_pad.iter())
        .copied()
        .collect();
    let last_interior = offset + interior.len() - 1;
    let ref_index = grid.iter().position(|&z| z == T::zero()).expect("zero is a breakpoint");

    let total = grid.len();
    let empty = || vec![CMat::<T>::zeros(n, n); total];
    let mut u: [Vec<CMat<T>>; 4] = [empty(), empty(), empty(), empty()];
    let mut p: [Vec<CMat<T>>; 4] = [empty(), empty(), empty(), empty()];

    // analytic tails
    for fam in Family::ALL {
        let side = fam.side();
        let tail = medium.profile().tail(side);
        let frame = &medium.basis(side).frame;
        let k = momenta.side(side);
        let sign = T::lit(fam.sign());
        let range: Box<dyn Iterator<Item = usize>> = match side {
            Side::Right => Box::new(last_interior..total),
            Side::Left => Box::new(0..=offset),
        };
        for node in range {
            let (uu, pp) = tail_jost(tail, frame, k, sign, grid[node]);
            u[fam.index()][node] = uu;
            p[fam.index()][node] = pp;
        }
    }

    // right families walk leftwards from L_z
    let mut state = seed_state(medium, &momenta, Side::Right);
    let mut node = last_interior;
    for seg in segs.iter().rev() {
        let stepper = SegmentStepper::new(seg, medium, point.lambda, true);
        for k in 0..seg.steps {
            state = stepper.step(k) * state;
            node -= 1;
            store(&mut u, &mut p, &state, n, node, Family::RightPlus, Family::RightMinus);
        }
        check_finite(&state, seg.z0)?;
    }
    // left-tail nodes of the right families are continued analytically from
    // the state reached at −L_z
    fill_free_tail(
        &mut u,
        &mut p,
        medium,
        point.lambda,
        &grid,
        offset,
        &state,
        Side::Left,
        n,
    );

    let mut state = seed_state(medium, &momenta, Side::Left);
    let mut node = offset;
    for seg in &segs {
        let stepper = SegmentStepper::new(seg, medium, point.lambda, false);
        for k in 0..seg.steps {
            state = stepper.step(k) * state;
            node += 1;
            store(&mut u, &mut p, &state, n, node, Family::LeftPlus, Family::LeftMinus);
        }
        check_finite(&state, seg.z1)?;
    }
    fill_free_tail(
        &mut u,
        &mut p,
        medium,
        point.lambda,
        &grid,
        last_interior,
        &state,
        Side::Right,
        n,
    );

    Ok(JostField {
        point: point.clone(),
        momenta,
        grid,
        ref_index,
        u,
        p,
    })
}

fn store<T: Real>(
    u: &mut [Vec<CMat<T>>; 4],
    p: &mut [Vec<CMat<T>>; 4],
    state: &CMat<T>,
    n: usize,
    node: usize,
    a: Family,
    b: Family,
) {
    let (ua, pa) = unstack(state, n, 0);
    let (ub, pb) = unstack(state, n, n);
    u[a.index()][node] = ua;
    p[a.index()][node] = pa;
    u[b.index()][node] = ub;
    p[b.index()][node] = pb;
}

/// Continues a state known at the edge of the tail on `side` through the
/// constant tail using the exact constant-coefficient propagator.
#[allow(clippy::too_many_arguments)]
fn fill_free_tail<T: Real>(
    u: &mut [Vec<CMat<T>>; 4],
    p: &mut [Vec<CMat<T>>; 4],
    medium: &Medium<T>,
    lambda: C<T>,
    grid: &[T],
    edge: usize,
    state: &CMat<T>,
    side: Side,
    n: usize,
) {
    let basis = medium.basis(side);
    let tail = medium.profile().tail(side);
    let (a, b) = match side {
        Side::Left => (Family::RightPlus, Family::RightMinus),
        Side::Right => (Family::LeftPlus, Family::LeftMinus),
    };
    let nodes: Vec<usize> = match side {
        Side::Left => (0..edge).collect(),
        Side::Right => (edge + 1..grid.len()).collect(),
    };
    for node in nodes {
        let d = grid[node] - grid[edge];
        let prop = constant_propagator(tail, &basis.frame, &basis.thresholds, lambda, d);
        let y = &prop * state;
        store(u, p, &y, n, node, a, b);
    }
}

/// Exact transfer of `(u, p)` across a constant medium of width `d`:
/// in channel coordinates `ξ = fᵀ g u`, `η = fᵀ p`,
/// `ξ(d) = cos(kd) ξ + sin(kd)/k η`, `η(d) = −k sin(kd) ξ + cos(kd) η`, with
/// `k² = Λ − λ`.
pub fn constant_propagator<T: Real>(
    c: &Coefficients<T>,
    frame: &RMat<T>,
    thresholds: &[T],
    lambda: C<T>,
    d: T,
) -> CMat<T> {
    let n = thresholds.len();
    let f = complexify(frame);
    let gf = complexify(&(&c.g * frame));
    let mut cos_d = CMat::zeros(n, n);
    let mut sinc = CMat::zeros(n, n);
    let mut ksin = CMat::zeros(n, n);
    for s in 0..n {
        let k2 = creal(thresholds[s]) - lambda;
        let (co, sk, ks) = trig_entries(k2, d);
        cos_d[(s, s)] = co;
        sinc[(s, s)] = sk;
        ksin[(s, s)] = ks;
    }
    // u = f ξ, p = g f η
    let to_xi = gf.transpose();
    let to_eta = f.transpose();
    let mut m = CMat::zeros(2 * n, 2 * n);
    let uu = &f * &cos_d * &to_xi;
    let up = &f * &sinc * &to_eta;
    let pu = -(&gf * &ksin * &to_xi);
    let pp = &gf * &cos_d * &to_eta;
    m.view_mut((0, 0), (n, n)).copy_from(&uu);
    m.view_mut((0, n), (n, n)).copy_from(&up);
    m.view_mut((n, 0), (n, n)).copy_from(&pu);
    m.view_mut((n, n), (n, n)).copy_from(&pp);
    m
}

/// `(cos(kd), sin(kd)/k, k sin(kd))` as entire functions of `k²`.
pub fn trig_entries<T: Real>(k2: C<T>, d: T) -> (C<T>, C<T>, C<T>) {
    let k = crate::num::principal_sqrt(k2);
    let dd = creal(d);
    if cabs(k * dd).as_f64() < 1e-4 {
        // short series keeps sin(kd)/k well defined at k → 0
        let x = k2 * dd * dd;
        let co = creal(T::one()) - x / creal(T::lit(2.0)) + x * x / creal(T::lit(24.0));
        let sk = dd * (creal(T::one()) - x / creal(T::lit(6.0)) + x * x / creal(T::lit(120.0)));
        let ks = k2 * dd * (creal(T::one()) - x / creal(T::lit(6.0)) + x * x / creal(T::lit(120.0)));
        return (co, sk, ks);
    }
    let arg = k * dd;
    let e_p = cexp(ci::<T>() * arg);
    let e_m = cexp(-ci::<T>() * arg);
    let two = creal(T::lit(2.0));
    let co = (e_p + e_m) / two;
    let si = (e_p - e_m) / (two * ci::<T>());
    (co, si / k, k * si)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::cplx;
    use crate::presets;

    fn spec_for(m: &Medium<f64>) -> GridSpec {
        GridSpec::from_tolerances(&Tolerances::default(), m.half_width())
    }

    #[test]
    fn uniform_medium_is_a_plane_wave() {
        let m = presets::uniform::<f64>(&[2.0], 1.0).validated().unwrap();
        let point = SpectralPoint::physical(0.5, 1);
        let field = integrate_jost(&m, &point, &spec_for(&m), &Tolerances::default()).unwrap();
        let k = 1.5_f64.sqrt();
        for (node, &z) in field.grid.iter().enumerate() {
            let expect = cexp(cplx(0.0, k * z));
            assert!(cabs(field.u(Family::RightPlus, node)[(0, 0)] - expect) < 1e-12);
            assert!(cabs(field.u(Family::LeftPlus, node)[(0, 0)] - expect) < 1e-12);
        }
        assert!(field.wronskian_drift() < 1e-12);
    }

    #[test]
    fn symplectic_unit_pairing() {
        let id = CMat::<f64>::identity(2, 2);
        let zero = CMat::<f64>::zeros(2, 2);
        assert_eq!(wronskian(&id, &zero, &zero, &id), id);
    }

    #[test]
    fn reference_fast_path_matches_field() {
        let m = presets::random_piecewise_constant::<f64>(3, 2, 4).validated().unwrap();
        let tol = Tolerances::default();
        let point = SpectralPoint::physical(-0.7, 2);
        let field = integrate_jost(&m, &point, &spec_for(&m), &tol).unwrap();
        let fast = jost_at_reference(&m, &point, &spec_for(&m), &tol).unwrap();
        let slow = field.at_reference();
        let scale = 1.0 + max_abs(&slow.right).max(max_abs(&slow.left));
        assert!(max_diff(&fast.right, &slow.right) / scale < 1e-12);
        assert!(max_diff(&fast.left, &slow.left) / scale < 1e-12);
    }

    #[test]
    fn constant_propagator_is_exact() {
        let m = presets::uniform::<f64>(&[1.0, 3.0], 1.0).validated().unwrap();
        let b = m.right();
        let tail = &m.profile().right_tail;
        let lambda = cplx(2.0, 0.3);
        let k: Vec<C<f64>> = b
            .thresholds
            .iter()
            .map(|&t| crate::num::principal_sqrt(creal(t) - lambda))
            .collect();
        let (u0, p0) = tail_jost(tail, &b.frame, &k, 1.0, 0.2);
        let (u1, p1) = tail_jost(tail, &b.frame, &k, 1.0, 0.9);
        let prop = constant_propagator(tail, &b.frame, &b.thresholds, lambda, 0.7);
        let y = prop * stack(&u0, &p0);
        assert!(max_diff(&y, &stack(&u1, &p1)) < 1e-13);
    }
}

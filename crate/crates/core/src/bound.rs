//! Bound states: real zeros of `det Φ₊(λ)`, their null vectors, wavefunctions
//! and the structural checks on them.
//!
//! Zeros are located through `D(λ) = det w[F⁻₋, F⁺₊] = det(2iK⁻Φ₊)`, which is
//! real when every channel is closed.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::Result;
use crate::jost::{
    constant_propagator, integrate_jost, jost_at_reference, tail_jost, wronskian, Family, GridSpec, JostAtReference,
    JostField,
};
use crate::linalg::{det, normalize_phase, singular_triplets, vec_norm};
use crate::medium::{Medium, Side};
use crate::num::{cabs, creal, CMat, CVec, Real, C};
use crate::residual::Residuals;
use crate::spectral::{classify_channels, SpectralPoint};
use crate::tolerances::Tolerances;
use crate::transition::TransitionSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundFlag {
    /// `Φ₊` loses more than one rank; every null pair is returned.
    Multiple,
    /// Within ten threshold tolerances of a threshold.
    NearThreshold,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanWarning {
    /// Two roots fell into one scan cell; both were recovered from the
    /// minimum of `|D|` but the scan density is marginal there.
    ScanTooCoarse { lo: f64, hi: f64 },
    /// A minimum of `|D|` that failed acceptance.
    Rejected { lambda: f64, abs_d: f64, reason: String },
}

/// Fitted exponential decay of the wavefunction beyond one end.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub side: String,
    pub fitted: f64,
    /// Smallest `κ` among closed channels carrying weight on that side.
    pub expected: f64,
}

impl DecayFit {
    pub fn relative_error(&self) -> f64 {
        (self.fitted - self.expected).abs() / self.expected
    }
}

/// Samples of `F⁺₊v`, one re/im array pair per component.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Wavefunction {
    pub z: Vec<f64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundState {
    pub lambda: f64,
    /// Right null vector of `Φ₊` (indexed by right channels), unit norm with
    /// its first significant entry real positive.
    pub v: Vec<[f64; 2]>,
    /// Left null vector, `wᵀΦ₊ = 0` (indexed by left channels).
    pub w: Vec<[f64; 2]>,
    /// Further null pairs when the rank drop exceeds one.
    pub extra_null_pairs: Vec<(Vec<[f64; 2]>, Vec<[f64; 2]>)>,
    /// `|det Φ₊|` at `lambda`.
    pub det_phi_plus: f64,
    /// Smallest singular value of `w[F⁻₋, F⁺₊]` at `z = 0` relative to
    /// `(‖u₁‖ + ‖p₁‖)(‖u₂‖ + ‖p₂‖)` of the two families.
    pub det_residual: f64,
    /// `‖Φ₊v‖`, `‖wᵀΦ₊‖`, on the same scale as `det_residual` (divided by
    /// `2 min|K⁻|`).
    pub null_residuals: [f64; 2],
    /// `‖v_o‖`, `‖w_o‖`.
    pub open_component_norms: [f64; 2],
    /// `‖v_c‖`, `‖w_c‖`.
    pub closed_component_norms: [f64; 2],
    /// `min_c ‖Ψ₊v − c K⁻⁻¹w‖ / ‖Ψ₊v‖`.
    pub psi_relation: f64,
    pub decay: Vec<DecayFit>,
    pub flags: Vec<BoundFlag>,
    pub wavefunction: Wavefunction,
}

fn to_pairs<T: Real>(v: &[C<T>]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()
}

fn from_pairs<T: Real>(v: &[[f64; 2]]) -> Vec<C<T>> {
    v.iter().map(|p| C::new(T::lit(p[0]), T::lit(p[1]))).collect()
}

/// Scan controls. `per_unit` is the number of scan nodes per unit of λ.
#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub per_unit: f64,
    /// Minimum node count regardless of the interval length.
    pub min_nodes: usize,
    /// Half-width (in nodes) of the window whose median `|D|` sets the
    /// acceptance level of a minimum.
    pub median_window: usize,
    /// Whether accepted states carry a sampled wavefunction.
    pub wavefunctions: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            per_unit: 2000.0,
            min_nodes: 200,
            median_window: 20,
            wavefunctions: true,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ScanReport {
    pub states: Vec<BoundState>,
    pub warnings: Vec<ScanWarning>,
    /// `(λ, D(λ))` at every scan node.
    pub trace: Vec<(f64, [f64; 2])>,
    /// Sub-intervals skipped because every channel is open there.
    pub skipped_open: Vec<(f64, f64)>,
}

impl ScanReport {
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "lambda,re_D,im_D,abs_D")?;
        for (l, d) in &self.trace {
            writeln!(out, "{l:?},{:?},{:?},{:?}", d[0], d[1], d[0].hypot(d[1]))?;
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.lambda).collect()
    }
}

struct Evaluator<'a, T: Real> {
    medium: &'a Medium<T>,
    spec: GridSpec,
    tol: &'a Tolerances,
}

impl<T: Real> Evaluator<'_, T> {
    fn jost(&self, lambda: f64) -> Result<JostAtReference<T>> {
        let p = SpectralPoint::physical(T::lit(lambda), self.medium.channels());
        jost_at_reference(self.medium, &p, &self.spec, self.tol)
    }

    fn d(&self, lambda: f64) -> Result<C<T>> {
        Ok(det(&self.jost(lambda)?.wronskian(Family::LeftMinus, Family::RightPlus)))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    AllOpen,
    AllClosed,
    Mixed,
}

fn kind_at<T: Real>(medium: &Medium<T>, lambda: f64) -> Kind {
    let th = medium.all_thresholds();
    if th.iter().all(|t| lambda < t.as_f64()) {
        Kind::AllOpen
    } else if th.iter().all(|t| lambda > t.as_f64()) {
        Kind::AllClosed
    } else {
        Kind::Mixed
    }
}

/// Finds bound states with `λ ∈ [lo, hi]`, sorted by λ.
pub fn bound_state_scan<T: Real>(
    medium: &Medium<T>,
    lo: f64,
    hi: f64,
    tol: &Tolerances,
    opts: &ScanOptions,
) -> Result<ScanReport> {
    let ev = Evaluator {
        medium,
        spec: GridSpec::from_tolerances(tol, medium.half_width().as_f64()),
        tol,
    };
    let mut report = ScanReport::default();
    let count = ((opts.per_unit * (hi - lo)).ceil() as usize).max(opts.min_nodes) + 1;
    let thresholds: Vec<f64> = medium.all_thresholds().iter().map(|t| t.as_f64()).collect();

    // cut [lo, hi] at the thresholds
    let mut edges = vec![lo];
    edges.extend(thresholds.iter().copied().filter(|&t| t > lo && t < hi));
    edges.push(hi);
    edges.dedup();

    let mut candidates: Vec<f64> = Vec::new();
    for piece in edges.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let kind = kind_at(medium, 0.5 * (a + b));
        if kind == Kind::AllOpen {
            report.skipped_open.push((a, b));
            continue;
        }
        let nodes: Vec<f64> = (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .filter(|&x| x >= a && x <= b)
            .filter(|&x| thresholds.iter().all(|&t| (x - t).abs() > tol.threshold_abs(x.abs())))
            .collect();
        if nodes.len() < 3 {
            continue;
        }
        let values: Vec<C<T>> = nodes.iter().map(|&x| ev.d(x)).collect::<Result<_>>()?;
        report.trace.extend(
            nodes
                .iter()
                .zip(&values)
                .map(|(&x, d)| (x, [d.re.as_f64(), d.im.as_f64()])),
        );
        let abs: Vec<f64> = values.iter().map(|d| cabs(*d).as_f64()).collect();
        match kind {
            Kind::AllClosed => {
                let re: Vec<f64> = values.iter().map(|d| d.re.as_f64()).collect();
                for i in 0..nodes.len() - 1 {
                    if re[i] == 0.0 {
                        candidates.push(nodes[i]);
                    } else if re[i] * re[i + 1] < 0.0 {
                        candidates.push(bisect(&ev, nodes[i], nodes[i + 1], re[i], tol.refine)?);
                    }
                }
                // a dip without a sign change can hide two roots in one cell
                for i in 1..nodes.len() - 1 {
                    if abs[i] < abs[i - 1] && abs[i] < abs[i + 1] && re[i - 1] * re[i + 1] > 0.0 {
                        let (xm, dm) = golden(&ev, nodes[i - 1], nodes[i + 1], tol.refine)?;
                        if dm.re.as_f64() * re[i] < 0.0 {
                            report.warnings.push(ScanWarning::ScanTooCoarse {
                                lo: nodes[i - 1],
                                hi: nodes[i + 1],
                            });
                            candidates.push(bisect(&ev, nodes[i - 1], xm, re[i - 1], tol.refine)?);
                            candidates.push(bisect(&ev, xm, nodes[i + 1], dm.re.as_f64(), tol.refine)?);
                        }
                    }
                }
            }
            Kind::Mixed => {
                for i in 1..nodes.len() - 1 {
                    if !(abs[i] < abs[i - 1] && abs[i] <= abs[i + 1]) {
                        continue;
                    }
                    let (xm, dm) = golden(&ev, nodes[i - 1], nodes[i + 1], tol.refine)?;
                    let lo_w = i.saturating_sub(opts.median_window);
                    let hi_w = (i + opts.median_window + 1).min(nodes.len());
                    let level = tol.det_accept * median(&abs[lo_w..hi_w]);
                    let abs_d = cabs(dm).as_f64();
                    if abs_d <= level {
                        candidates.push(xm);
                    } else {
                        report.warnings.push(ScanWarning::Rejected {
                            lambda: xm,
                            abs_d,
                            reason: format!("|D| above {level:e}"),
                        });
                    }
                }
            }
            Kind::AllOpen => unreachable!(),
        }
    }

    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup_by(|a, b| (*a - *b).abs() < 10.0 * tol.refine.max(f64::EPSILON * a.abs()));
    for lambda in candidates {
        let state = build_state(medium, lambda, tol, opts.wavefunctions)?;
        let kind = kind_at(medium, lambda);
        debug_assert!(kind != Kind::AllOpen);
        if kind == Kind::Mixed {
            let ok = state.null_residuals.iter().all(|&r| r <= tol.null)
                && state.open_component_norms.iter().all(|&r| r <= tol.null)
                && state.psi_relation <= tol.null;
            if !ok {
                report.warnings.push(ScanWarning::Rejected {
                    lambda,
                    abs_d: state.det_phi_plus,
                    reason: "null-vector invariants fail".into(),
                });
                continue;
            }
        }
        report.states.push(state);
    }
    Ok(report)
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v[v.len() / 2]
}

fn bisect<T: Real>(ev: &Evaluator<T>, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<f64> {
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = ev.d(m)?.re.as_f64();
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Minimum of `|D|` on `[a, b]` by golden-section search.
fn golden<T: Real>(ev: &Evaluator<T>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, C<T>)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = ev.d(x1)?;
    let mut f2 = ev.d(x2)?;
    while b - a > tol && x1 < x2 {
        if cabs(f1) < cabs(f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = ev.d(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = ev.d(x2)?;
        }
    }
    Ok(if cabs(f1) < cabs(f2) { (x1, f1) } else { (x2, f2) })
}

/// Null pairs `(v, w)` of `Φ₊` whose singular value is within `rel` of zero
/// (relative to the largest); always at least the smallest one.
fn null_pairs<T: Real>(phi: &CMat<T>, rel: f64) -> Vec<(Vec<C<T>>, Vec<C<T>>)> {
    let trip = singular_triplets(phi);
    let smax = trip.last().map_or(T::zero(), |t| t.0);
    let mut out = Vec::new();
    for (k, (s, left, right)) in trip.into_iter().enumerate() {
        if k > 0 && s.as_f64() > rel * smax.as_f64() {
            break;
        }
        let mut v = right;
        // wᵀΦ₊ = 0 makes w̄ a left singular vector
        let mut w: Vec<C<T>> = left.iter().map(|z| z.conj()).collect();
        normalize_phase(&mut v, T::lit(1e-6));
        normalize_phase(&mut w, T::lit(1e-6));
        out.push((v, w));
    }
    out
}

fn sub_norm<T: Real>(v: &[C<T>], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| v[i].norm_sqr().as_f64()).sum::<f64>().sqrt()
}

/// Everything about one state that needs only Jost data at `z = 0`.
struct Local {
    det_phi_plus: f64,
    det_residual: f64,
    null_residuals: [f64; 2],
    open: [f64; 2],
    closed: [f64; 2],
    psi_relation: f64,
}

fn local_checks<T: Real>(
    medium: &Medium<T>,
    jost: &JostAtReference<T>,
    v: &[C<T>],
    w: &[C<T>],
    tol: &Tolerances,
) -> Result<Local> {
    let ts = TransitionSet::from_reference(jost);
    let phi = &ts.phi_plus;
    let vv = CVec::from_column_slice(v);
    let wv = CVec::from_column_slice(w);
    let (u1, p1) = jost.family(Family::LeftMinus);
    let (u2, p2) = jost.family(Family::RightPlus);
    // size of the factors entering the Wronskian; the two products can both
    // vanish at a symmetry point, the factors cannot
    let scale = ((u1.norm() + p1.norm()) * (u2.norm() + p2.norm()))
        .as_f64()
        .max(f64::MIN_POSITIVE);
    let k_min = jost
        .momenta
        .left
        .iter()
        .map(|k| cabs(*k).as_f64())
        .fold(f64::INFINITY, f64::min);
    let phi_scale = scale / (2.0 * k_min);
    let wr = wronskian(&u1, &p1, &u2, &p2);
    let sigma_min = singular_triplets(&wr).first().map_or(0.0, |t| t.0.as_f64());
    let cls = classify_channels(medium, jost.point.lambda.re, tol)?;

    // Ψ₊v against K⁻⁻¹w, up to one complex factor
    let pv = &ts.psi_plus * &vv;
    let kw = CVec::from_fn(w.len(), |i, _| w[i] / jost.momenta.left[i]);
    let kw2 = kw.norm_squared().as_f64();
    let psi_relation = if kw2 == 0.0 {
        f64::INFINITY
    } else {
        let c = kw.dotc(&pv) / creal(T::lit(kw2));
        (&pv - &kw * c).norm().as_f64() / pv.norm().as_f64().max(f64::MIN_POSITIVE)
    };
    Ok(Local {
        det_phi_plus: cabs(det(phi)).as_f64(),
        det_residual: sigma_min / scale,
        null_residuals: [
            (phi * &vv).norm().as_f64() / phi_scale,
            (phi.transpose() * &wv).norm().as_f64() / phi_scale,
        ],
        open: [sub_norm(v, &cls.open_right), sub_norm(w, &cls.open_left)],
        closed: [sub_norm(v, &cls.closed_right), sub_norm(w, &cls.closed_left)],
        psi_relation,
    })
}

fn build_state<T: Real>(medium: &Medium<T>, lambda: f64, tol: &Tolerances, wavefunctions: bool) -> Result<BoundState> {
    let spec = GridSpec::from_tolerances(tol, medium.half_width().as_f64());
    let point = SpectralPoint::physical(T::lit(lambda), medium.channels());
    let jost = jost_at_reference(medium, &point, &spec, tol)?;
    let ts = TransitionSet::from_reference(&jost);
    let pairs = null_pairs(&ts.phi_plus, tol.null);
    let (v, w) = pairs[0].clone();
    let local = local_checks(medium, &jost, &v, &w, tol)?;

    let mut flags = Vec::new();
    if pairs.len() > 1 {
        flags.push(BoundFlag::Multiple);
    }
    let near = 10.0 * tol.threshold_abs(lambda.abs());
    if medium
        .all_thresholds()
        .iter()
        .any(|t| (t.as_f64() - lambda).abs() <= near)
    {
        flags.push(BoundFlag::NearThreshold);
    }
    let field = integrate_jost(medium, &point, &spec, tol)?;
    let decay = decay_fits(medium, &jost, &field, &v, tol)?;
    let wavefunction = if wavefunctions {
        sample_wavefunction(&field, &v)
    } else {
        Wavefunction::default()
    };
    Ok(BoundState {
        lambda,
        v: to_pairs(&v),
        w: to_pairs(&w),
        extra_null_pairs: pairs[1..].iter().map(|(a, b)| (to_pairs(a), to_pairs(b))).collect(),
        det_phi_plus: local.det_phi_plus,
        det_residual: local.det_residual,
        null_residuals: local.null_residuals,
        open_component_norms: local.open,
        closed_component_norms: local.closed,
        psi_relation: local.psi_relation,
        decay,
        flags,
        wavefunction,
    })
}

fn sample_wavefunction<T: Real>(field: &JostField<T>, v: &[C<T>]) -> Wavefunction {
    let n = field.channels();
    let vv = CVec::from_column_slice(v);
    let mut wf = Wavefunction {
        z: field.grid.iter().map(|z| z.as_f64()).collect(),
        re: vec![Vec::with_capacity(field.grid.len()); n],
        im: vec![Vec::with_capacity(field.grid.len()); n],
    };
    for node in 0..field.grid.len() {
        let u = field.u(Family::RightPlus, node) * &vv;
        for i in 0..n {
            wf.re[i].push(u[i].re.as_f64());
            wf.im[i].push(u[i].im.as_f64());
        }
    }
    wf
}

/// Log-linear fit of `|u(z)|` over `[L + 2/κ, L + 6/κ]` on each side. The
/// right tail is exact by construction; on the left the integrated state at
/// `−L` is carried outward with the exact constant-tail propagator, so any
/// growing component left over from an inaccurate root shows up in the slope.
fn decay_fits<T: Real>(
    medium: &Medium<T>,
    jost: &JostAtReference<T>,
    field: &JostField<T>,
    v: &[C<T>],
    tol: &Tolerances,
) -> Result<Vec<DecayFit>> {
    let ts = TransitionSet::from_reference(jost);
    let vv = CVec::from_column_slice(v);
    // on the left the state is F⁻₋ c with c = Ψ₊v
    let c_left: Vec<C<T>> = (&ts.psi_plus * &vv).iter().copied().collect();
    let prof = medium.profile();
    let half = medium.half_width();
    let l = half.as_f64();
    let n = medium.channels();
    let edge = field.grid.iter().position(|&z| z == -half).expect("−L is a grid node");
    let edge_u = field.u(Family::RightPlus, edge) * &vv;
    let edge_p = field.p(Family::RightPlus, edge) * &vv;
    let y0 = CVec::from_fn(2 * n, |i, _| if i < n { edge_u[i] } else { edge_p[i - n] });
    let cls = classify_channels(medium, jost.point.lambda.re, tol)?;
    let mut out = Vec::new();
    for (side, coeff) in [(Side::Right, v.to_vec()), (Side::Left, c_left)] {
        let basis = medium.basis(side);
        let k = jost.momenta.side(side);
        let total = vec_norm(&coeff).as_f64();
        let kappa_min = cls
            .closed(side)
            .iter()
            .filter(|&&s| cabs(coeff[s]).as_f64() > 1e-6 * total)
            .map(|&s| k[s].im.abs().as_f64())
            .fold(f64::INFINITY, f64::min);
        if !kappa_min.is_finite() {
            continue;
        }
        let cv = CVec::from_column_slice(&coeff);
        let (z0, z1) = (l + 2.0 / kappa_min, l + 6.0 / kappa_min);
        let pts = 41;
        let mut xs = Vec::with_capacity(pts);
        let mut ys = Vec::with_capacity(pts);
        for j in 0..pts {
            let d = z0 + (z1 - z0) * j as f64 / (pts - 1) as f64;
            let amp = match side {
                Side::Right => {
                    let (u, _) = tail_jost(&prof.right_tail, &basis.frame, k, T::one(), T::lit(d));
                    (u * &cv).norm().as_f64()
                }
                Side::Left => {
                    let prop = constant_propagator(
                        &prof.left_tail,
                        &basis.frame,
                        &basis.thresholds,
                        jost.point.lambda,
                        T::lit(l - d),
                    );
                    (&prop * &y0).rows(0, n).norm().as_f64()
                }
            };
            xs.push(d);
            ys.push(amp.ln());
        }
        let slope = linear_slope(&xs, &ys);
        out.push(DecayFit {
            side: side.to_string(),
            fitted: -slope,
            expected: kappa_min,
        });
    }
    Ok(out)
}

fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Recomputes every invariant of a state from its stored `λ`, `v`, `w`, plus
/// the grid identity `F⁺₊v = F⁻₋K⁻⁻¹(K⁻Ψ₊v)` and the pointwise residual of the
/// equation itself.
pub fn verify_bound_state<T: Real>(bs: &BoundState, medium: &Medium<T>, tol: &Tolerances) -> Result<Residuals> {
    let spec = GridSpec::from_tolerances(tol, medium.half_width().as_f64());
    let point = SpectralPoint::physical(T::lit(bs.lambda), medium.channels());
    let jost = jost_at_reference(medium, &point, &spec, tol)?;
    let v: Vec<C<T>> = from_pairs(&bs.v);
    let w: Vec<C<T>> = from_pairs(&bs.w);
    let local = local_checks(medium, &jost, &v, &w, tol)?;
    let mut r = Residuals::new();
    r.push("bound.det", local.det_residual);
    r.push("bound.null_right", local.null_residuals[0]);
    r.push("bound.null_left", local.null_residuals[1]);
    r.push("bound.open_right", local.open[0]);
    r.push("bound.open_left", local.open[1]);
    r.push("bound.psi_relation", local.psi_relation);

    let field = integrate_jost(medium, &point, &spec, tol)?;
    let ts = TransitionSet::from_reference(&jost);
    let vv = CVec::from_column_slice(&v);
    let c = &ts.psi_plus * &vv;
    let mut gap: f64 = 0.0;
    let mut size: f64 = 1.0;
    let mut u_nodes = Vec::with_capacity(field.grid.len());
    let mut p_nodes = Vec::with_capacity(field.grid.len());
    for node in 0..field.grid.len() {
        let a = field.u(Family::RightPlus, node) * &vv;
        let b = field.u(Family::LeftMinus, node) * &c;
        gap = gap.max((&a - &b).amax_norm());
        size = size.max(a.amax_norm());
        u_nodes.push(a);
        p_nodes.push(field.p(Family::RightPlus, node) * &vv);
    }
    r.push("bound.expansion", gap / size);
    r.push(
        "bound.ode",
        ode_residual(medium, &field.grid, &u_nodes, &p_nodes, point.lambda),
    );
    for fit in decay_fits(medium, &jost, &field, &v, tol)? {
        r.push(format!("bound.decay_{}", fit.side), fit.relative_error());
    }
    Ok(r)
}

trait AmaxNorm {
    fn amax_norm(&self) -> f64;
}

impl<T: Real> AmaxNorm for CVec<T> {
    fn amax_norm(&self) -> f64 {
        self.iter().fold(0.0, |a, z| a.max(cabs(*z).as_f64()))
    }
}

/// Five-point finite-difference residual of `p' + (V − λg)u = 0` and of
/// `g u' − p = 0`, on stencils lying inside one smooth, uniformly spaced
/// stretch of the grid.
fn ode_residual<T: Real>(medium: &Medium<T>, grid: &[T], u: &[CVec<T>], p: &[CVec<T>], lambda: C<T>) -> f64 {
    let prof = medium.profile();
    let mut kinks: Vec<f64> = vec![-prof.half_width.as_f64(), prof.half_width.as_f64()];
    for layer in &prof.layers {
        kinks.push(layer.z_lo.as_f64());
        kinks.push(layer.z_hi.as_f64());
        kinks.extend(layer.interior_nodes().iter().map(|z| z.as_f64()));
    }
    let z: Vec<f64> = grid.iter().map(|x| x.as_f64()).collect();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 2..z.len().saturating_sub(2) {
        let h = z[i + 1] - z[i];
        let uniform = (-2..2).all(|k: i64| {
            let j = (i as i64 + k) as usize;
            ((z[j + 1] - z[j]) - h).abs() <= 1e-9 * h
        });
        if !uniform {
            continue;
        }
        let (lo, hi) = (z[i - 2], z[i + 2]);
        if kinks.iter().any(|&k| k > lo - 1e-12 && k < hi + 1e-12) {
            continue;
        }
        let d = |f: &[CVec<T>]| -> CVec<T> {
            let c = creal(T::lit(1.0 / (12.0 * h)));
            (&f[i - 2] - &f[i - 1] * creal(T::lit(8.0)) + &f[i + 1] * creal(T::lit(8.0)) - &f[i + 2]) * c
        };
        let coef = prof.sample(grid[i]);
        let gc = crate::num::complexify(&coef.g);
        let vm = crate::num::complexify(&coef.v) - &gc * lambda;
        let force = &vm * &u[i];
        let r1 = d(p) + &force;
        let r2 = &gc * d(u) - &p[i];
        worst = worst.max(r1.amax_norm()).max(r2.amax_norm());
        scale = scale.max(force.amax_norm()).max(p[i].amax_norm());
    }
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn uniform_medium_has_no_states() {
        let m = presets::uniform::<f64>(&[0.0], 1.0).validated().unwrap();
        let tol = Tolerances::default();
        let rep = bound_state_scan(&m, -2.0, 5.0, &tol, &ScanOptions::default()).unwrap();
        assert!(rep.states.is_empty());
        assert_eq!(rep.skipped_open.len(), 1);
    }

    #[test]
    fn shallow_well_binds_once() {
        let m = presets::square_well::<f64>(1.0).validated().unwrap();
        let tol = Tolerances::default();
        let rep = bound_state_scan(&m, 1e-4, 1.0, &tol, &ScanOptions::default()).unwrap();
        assert_eq!(rep.states.len(), 1, "{:?}", rep.lambdas());
        let r = verify_bound_state(&rep.states[0], &m, &tol).unwrap();
        assert!(r.max() < 1e-6, "{r:?}");
    }
}

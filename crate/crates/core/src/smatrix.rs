//! Transmission and reflection matrices, the S-matrix, its `K^{1/2}`-dressed
//! form, open/closed block views, and the identity checks built on them.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det, inverse, pseudo_inverse};
use crate::medium::{Medium, Side};
use crate::num::{
    cabs, cdiag, ci, conj_mat, creal, identity_residual, max_abs, max_diff, principal_sqrt, select, CMat, Real, C,
};
use crate::residual::Residuals;
use crate::spectral::{classify_channels, ChannelClassification, ChannelMomenta, SpectralPoint};
use crate::tolerances::Tolerances;
use crate::transition::TransitionSet;

/// Open/closed view of one matrix. Rows and columns each follow the split of
/// the side they are indexed by.
#[derive(Clone, Debug)]
pub struct Blocks<T: Real> {
    pub oo: CMat<T>,
    pub oc: CMat<T>,
    pub co: CMat<T>,
    pub cc: CMat<T>,
}

impl<T: Real> Blocks<T> {
    fn of(m: &CMat<T>, cls: &ChannelClassification<T>, rows: Side, cols: Side) -> Self {
        let (ro, rc) = (cls.open(rows), cls.closed(rows));
        let (co, cc) = (cls.open(cols), cls.closed(cols));
        Self {
            oo: select(m, ro, co),
            oc: select(m, ro, cc),
            co: select(m, rc, co),
            cc: select(m, rc, cc),
        }
    }

    fn get(&self, a: Part, b: Part) -> &CMat<T> {
        match (a, b) {
            (Part::Open, Part::Open) => &self.oo,
            (Part::Open, Part::Closed) => &self.oc,
            (Part::Closed, Part::Open) => &self.co,
            (Part::Closed, Part::Closed) => &self.cc,
        }
    }

    fn conj(&self) -> Self {
        Self {
            oo: conj_mat(&self.oo),
            oc: conj_mat(&self.oc),
            co: conj_mat(&self.co),
            cc: conj_mat(&self.cc),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Open,
    Closed,
}

impl Part {
    fn label(self) -> &'static str {
        match self {
            Part::Open => "o",
            Part::Closed => "c",
        }
    }
}

/// Block views of `t₁`, `t₂`, `r₁`, `r₂`.
#[derive(Clone, Debug)]
pub struct BlockSet<T: Real> {
    pub t1: Blocks<T>,
    pub t2: Blocks<T>,
    pub r1: Blocks<T>,
    pub r2: Blocks<T>,
}

/// Pseudo-inverse projector on the open subspace of one side.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectorReport {
    /// Side whose open subspace `L` acts on: left when `l_o ≥ r_o`.
    pub side: String,
    pub rank: usize,
    pub expected_rank: usize,
    pub rank_t1_oo: usize,
    pub rank_t2_oo: usize,
    pub hermitian: f64,
    pub idempotent: f64,
    pub off_diagonal: f64,
    /// `‖L − (projector built from the other transmission matrix)*‖`.
    pub partner_mismatch: f64,
    /// `‖t t^∨ − 1‖` on the smaller open subspace, for both transmissions.
    pub right_inverse: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Projector<T: Real> {
    pub l: CMat<T>,
    pub report: ProjectorReport,
}

#[derive(Clone, Debug)]
pub struct ScatteringSet<T: Real> {
    pub point: SpectralPoint<T>,
    pub momenta: ChannelMomenta<T>,
    pub t1: CMat<T>,
    pub t2: CMat<T>,
    pub r1: CMat<T>,
    pub r2: CMat<T>,
    /// `[[t₁, r₂], [r₁, t₂]]`.
    pub s: CMat<T>,
    pub t1_tilde: CMat<T>,
    pub t2_tilde: CMat<T>,
    pub r1_tilde: CMat<T>,
    pub r2_tilde: CMat<T>,
    pub s_tilde: CMat<T>,
    pub det_phi_plus: C<T>,
    pub det_phi_minus: C<T>,
    pub det_phi_tilde_plus: C<T>,
    pub det_phi_tilde_minus: C<T>,
    /// Present for real λ on the physical sheet.
    pub classification: Option<ChannelClassification<T>>,
    pub blocks: Option<BlockSet<T>>,
    /// Present when both sides have at least one open channel.
    pub projector: Option<Projector<T>>,
}

fn assemble<T: Real>(t1: &CMat<T>, r2: &CMat<T>, r1: &CMat<T>, t2: &CMat<T>) -> CMat<T> {
    let n = t1.nrows();
    let mut s = CMat::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(t1);
    s.view_mut((0, n), (n, n)).copy_from(r2);
    s.view_mut((n, 0), (n, n)).copy_from(r1);
    s.view_mut((n, n), (n, n)).copy_from(t2);
    s
}

/// `(t₁, r₁, t₂, r₂)` from `Φ±`, `Ψ±`; `None` when `Φ₊` is singular.
fn amplitudes<T: Real>(
    phi_p: &CMat<T>,
    phi_m: &CMat<T>,
    psi_p: &CMat<T>,
    psi_m: &CMat<T>,
) -> Option<(CMat<T>, CMat<T>, CMat<T>, CMat<T>)> {
    let t1 = inverse(phi_p)?;
    let r1 = psi_p * &t1;
    let t2 = phi_m - psi_p * &t1 * psi_m;
    let r2 = -(&t1 * psi_m);
    Some((t1, r1, t2, r2))
}

fn sqrt_diag<T: Real>(k: &[C<T>], inverse: bool) -> CMat<T> {
    cdiag(
        &k.iter()
            .map(|&x| {
                let r = principal_sqrt(x);
                if inverse {
                    creal(T::one()) / r
                } else {
                    r
                }
            })
            .collect::<Vec<_>>(),
    )
}

/// Assembles every scattering quantity from a transition set.
pub fn scattering_matrices<T: Real>(
    medium: &Medium<T>,
    ts: &TransitionSet<T>,
    tol: &Tolerances,
) -> Result<ScatteringSet<T>> {
    let n = ts.channels();
    let det_p = det(&ts.phi_plus);
    let norm = T::one().max(max_abs(&ts.phi_plus)).as_f64();
    let det_tol = tol.singularity * norm.powi(n as i32);
    if cabs(det_p).as_f64() < det_tol {
        return Err(Error::SingularPhiPlus {
            lambda: ts.point.lambda.re.as_f64(),
            det: cabs(det_p).as_f64(),
            tol: det_tol,
        });
    }
    let (t1, r1, t2, r2) =
        amplitudes(&ts.phi_plus, &ts.phi_minus, &ts.psi_plus, &ts.psi_minus).ok_or(Error::SingularPhiPlus {
            lambda: ts.point.lambda.re.as_f64(),
            det: cabs(det_p).as_f64(),
            tol: det_tol,
        })?;

    let km_half = sqrt_diag(&ts.momenta.left, false);
    let kp_half_inv = sqrt_diag(&ts.momenta.right, true);
    let dress = |m: &CMat<T>| &km_half * m * &kp_half_inv;
    let (fpt, fmt, spt, smt) = (
        dress(&ts.phi_plus),
        dress(&ts.phi_minus),
        dress(&ts.psi_plus),
        dress(&ts.psi_minus),
    );
    let (t1t, r1t, t2t, r2t) = amplitudes(&fpt, &fmt, &spt, &smt).ok_or(Error::SingularPhiPlus {
        lambda: ts.point.lambda.re.as_f64(),
        det: cabs(det_p).as_f64(),
        tol: det_tol,
    })?;

    let classification = if ts.point.is_physical() {
        Some(classify_channels(medium, ts.point.lambda.re, tol)?)
    } else {
        None
    };
    let blocks = classification.as_ref().map(|cls| BlockSet {
        t1: Blocks::of(&t1, cls, Side::Right, Side::Left),
        t2: Blocks::of(&t2, cls, Side::Left, Side::Right),
        r1: Blocks::of(&r1, cls, Side::Left, Side::Left),
        r2: Blocks::of(&r2, cls, Side::Right, Side::Right),
    });
    let projector = match (&classification, &blocks) {
        (Some(cls), Some(b)) if cls.l_open() > 0 && cls.r_open() > 0 => Some(build_projector(cls, b, tol)),
        _ => None,
    };

    Ok(ScatteringSet {
        point: ts.point.clone(),
        momenta: ts.momenta.clone(),
        s: assemble(&t1, &r2, &r1, &t2),
        s_tilde: assemble(&t1t, &r2t, &r1t, &t2t),
        t1,
        t2,
        r1,
        r2,
        t1_tilde: t1t,
        t2_tilde: t2t,
        r1_tilde: r1t,
        r2_tilde: r2t,
        det_phi_plus: det_p,
        det_phi_minus: det(&ts.phi_minus),
        det_phi_tilde_plus: det(&fpt),
        det_phi_tilde_minus: det(&fmt),
        classification,
        blocks,
        projector,
    })
}

fn build_projector<T: Real>(cls: &ChannelClassification<T>, b: &BlockSet<T>, tol: &Tolerances) -> Projector<T> {
    let rank_tol = T::lit(tol.rank);
    let (p1, rank1) = pseudo_inverse(&b.t1.oo, rank_tol);
    let (p2, rank2) = pseudo_inverse(&b.t2.oo, rank_tol);
    let left = cls.l_open() >= cls.r_open();
    // the larger open subspace carries the projector; the other product is
    // the identity on the smaller one
    let (l, partner, right_inv, side) = if left {
        let l = &p1 * &b.t1.oo;
        let partner = conj_mat(&(&b.t2.oo * &p2));
        let k = cls.r_open();
        let id = CMat::identity(k, k);
        let ri = max_diff(&(&b.t1.oo * &p1), &id).max(max_diff(&(&p2 * &b.t2.oo), &id));
        (l, partner, ri, Side::Left)
    } else {
        let l = &p2 * &b.t2.oo;
        let partner = conj_mat(&(&b.t1.oo * &p1));
        let k = cls.l_open();
        let id = CMat::identity(k, k);
        let ri = max_diff(&(&b.t2.oo * &p2), &id).max(max_diff(&(&p1 * &b.t1.oo), &id));
        (l, partner, ri, Side::Right)
    };
    let dim = l.nrows();
    let mut off = T::zero();
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                off = off.max(cabs(l[(i, j)]));
            }
        }
    }
    let expected = cls.l_open().min(cls.r_open());
    let rank = if left { rank1 } else { rank2 };
    let warning = (rank1 < expected || rank2 < expected)
        .then(|| format!("open transmission block rank {rank1}/{rank2} below the maximal value {expected}"));
    let report = ProjectorReport {
        side: side.to_string(),
        rank,
        expected_rank: expected,
        rank_t1_oo: rank1,
        rank_t2_oo: rank2,
        hermitian: max_diff(&l.adjoint(), &l).as_f64(),
        idempotent: max_diff(&(&l * &l), &l).as_f64(),
        off_diagonal: off.as_f64(),
        partner_mismatch: max_diff(&l, &partner).as_f64(),
        right_inverse: right_inv.as_f64(),
        warning,
    };
    Projector { l, report }
}

fn rdiag<T: Real>(v: &[T]) -> CMat<T> {
    cdiag(&v.iter().map(|&x| creal(x)).collect::<Vec<_>>())
}

impl<T: Real> ScatteringSet<T> {
    pub fn channels(&self) -> usize {
        self.t1.nrows()
    }

    pub fn det_s(&self) -> C<T> {
        det(&self.s)
    }

    pub fn det_s_tilde(&self) -> C<T> {
        det(&self.s_tilde)
    }

    /// `K` restricted to one part of one side, as `κ^o` or `iκ^c`.
    fn k_block(&self, side: Side, part: Part) -> CMat<T> {
        let cls = self.classification.as_ref().expect("real λ");
        match (side, part) {
            (Side::Left, Part::Open) => rdiag(&cls.kappa_open_left),
            (Side::Left, Part::Closed) => rdiag(&cls.kappa_closed_left) * ci::<T>(),
            (Side::Right, Part::Open) => rdiag(&cls.kappa_open_right),
            (Side::Right, Part::Closed) => rdiag(&cls.kappa_closed_right) * ci::<T>(),
        }
    }

    /// Largest entry over `t`, `r` (used to normalize residuals).
    pub fn scale(&self) -> T {
        max_abs(&self.s)
    }

    /// CSV rows `lambda, block, row, col, re, im` for `t₁, r₁, t₂, r₂` and
    /// their dressed forms.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let lambda = self.point.lambda.re.as_f64();
        for (name, m) in [
            ("t1", &self.t1),
            ("r1", &self.r1),
            ("t2", &self.t2),
            ("r2", &self.r2),
            ("t1_tilde", &self.t1_tilde),
            ("r1_tilde", &self.r1_tilde),
            ("t2_tilde", &self.t2_tilde),
            ("r2_tilde", &self.r2_tilde),
        ] {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    writeln!(
                        out,
                        "{lambda:?},{name},{i},{j},{:?},{:?}",
                        m[(i, j)].re.as_f64(),
                        m[(i, j)].im.as_f64()
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Largest entrywise difference of `t`, `r` to another set.
    pub fn max_deviation(&self, other: &ScatteringSet<T>) -> T {
        max_diff(&self.s, &other.s)
    }
}

/// Symmetry relations: `K⁻t₂ = t₁ᵀK⁺`, `K⁻r₁ = r₁ᵀK⁻`, `K⁺r₂ = r₂ᵀK⁺`, the
/// `2N` form `[[0,K⁻],[K⁺,0]] S = Sᵀ [[0,K⁺],[K⁻,0]]`, and (for real λ) the
/// twelve open/closed block forms with their `i` factors.
pub fn symmetry_residuals<T: Real>(ss: &ScatteringSet<T>) -> Residuals {
    let n = ss.channels();
    let km = cdiag(&ss.momenta.left);
    let kp = cdiag(&ss.momenta.right);
    let mut r = Residuals::new();
    r.push(
        "symmetry.t",
        identity_residual(&[&km * &ss.t2, -(ss.t1.transpose() * &kp)], &CMat::zeros(n, n)),
    );
    r.push(
        "symmetry.r1",
        identity_residual(&[&km * &ss.r1, -(ss.r1.transpose() * &km)], &CMat::zeros(n, n)),
    );
    r.push(
        "symmetry.r2",
        identity_residual(&[&kp * &ss.r2, -(ss.r2.transpose() * &kp)], &CMat::zeros(n, n)),
    );

    let zero = CMat::zeros(n, n);
    let j1 = assemble(&zero, &km, &kp, &zero);
    let j2 = assemble(&zero, &kp, &km, &zero);
    r.push(
        "symmetry.s_matrix",
        identity_residual(&[&j1 * &ss.s, -(ss.s.transpose() * &j2)], &CMat::zeros(2 * n, 2 * n)),
    );

    if let Some(b) = &ss.blocks {
        let parts = [Part::Open, Part::Closed];
        for a in parts {
            for c in parts {
                let tag = format!("{}{}", a.label(), c.label());
                // K⁻_a t₂_ac = (t₁_ca)ᵀ K⁺_c
                let lhs = ss.k_block(Side::Left, a) * b.t2.get(a, c);
                let rhs = b.t1.get(c, a).transpose() * ss.k_block(Side::Right, c);
                r.push(format!("symmetry.block.t.{tag}"), block_residual(&lhs, &rhs));
                let lhs = ss.k_block(Side::Left, a) * b.r1.get(a, c);
                let rhs = b.r1.get(c, a).transpose() * ss.k_block(Side::Left, c);
                r.push(format!("symmetry.block.r1.{tag}"), block_residual(&lhs, &rhs));
                let lhs = ss.k_block(Side::Right, a) * b.r2.get(a, c);
                let rhs = b.r2.get(c, a).transpose() * ss.k_block(Side::Right, c);
                r.push(format!("symmetry.block.r2.{tag}"), block_residual(&lhs, &rhs));
            }
        }
    }
    r
}

fn block_residual<T: Real>(lhs: &CMat<T>, rhs: &CMat<T>) -> f64 {
    identity_residual(std::slice::from_ref(lhs), rhs)
}

/// Unitarity checks at real λ.
#[derive(Clone, Debug, Serialize)]
pub struct UnitarityReport {
    pub all_open: bool,
    /// Identities that must hold (small residuals).
    pub residuals: Residuals,
    /// `‖S̃†S̃ − 1‖_max` of the complete dressed matrix. Small when every
    /// channel is open, of order one otherwise.
    pub full_tilde: f64,
}

pub fn unitarity_residuals<T: Real>(ss: &ScatteringSet<T>) -> Result<UnitarityReport> {
    let n = ss.channels();
    let cls = ss
        .classification
        .as_ref()
        .ok_or_else(|| Error::Invalid("unitarity needs real λ on the physical sheet".into()))?;
    let id2 = CMat::identity(2 * n, 2 * n);
    let full_tilde = max_diff(&(ss.s_tilde.adjoint() * &ss.s_tilde), &id2).as_f64();
    let mut r = Residuals::new();
    if cls.all_open() {
        let km = cdiag(&ss.momenta.left);
        let kp = cdiag(&ss.momenta.right);
        let zero = CMat::zeros(n, n);
        let w_in = assemble(&kp, &zero, &zero, &km);
        let w_out = assemble(&km, &zero, &zero, &kp);
        r.push(
            "unitarity.k_weighted",
            identity_residual(&[ss.s.adjoint() * &w_in * &ss.s], &w_out),
        );
        r.push(
            "unitarity.tilde",
            identity_residual(&[ss.s_tilde.adjoint() * &ss.s_tilde], &id2),
        );
        return Ok(UnitarityReport {
            all_open: true,
            residuals: r,
            full_tilde,
        });
    }
    let b = ss.blocks.as_ref().expect("blocks exist for real λ");
    if cls.l_open() == 0 || cls.r_open() == 0 {
        // no open subspace on one side: nothing to check beyond the report
        return Ok(UnitarityReport {
            all_open: false,
            residuals: r,
            full_tilde,
        });
    }
    let proj = ss
        .projector
        .as_ref()
        .expect("projector exists when both sides are open");
    let kml = rdiag(&cls.kappa_open_left);
    let kpr = rdiag(&cls.kappa_open_right);
    // with fewer open channels on the left the roles of the two sides swap
    let (t1, r1, t2, r2, km, kp) = if cls.l_open() >= cls.r_open() {
        (&b.t1.oo, &b.r1.oo, &b.t2.oo, &b.r2.oo, &kml, &kpr)
    } else {
        (&b.t2.oo, &b.r2.oo, &b.t1.oo, &b.r1.oo, &kpr, &kml)
    };
    let l = &proj.l;
    let (lo, ro) = (t1.ncols(), t1.nrows());
    r.push(
        "open.cross_projected",
        identity_residual(
            &[t2.adjoint() * km * r1 * l, r2.adjoint() * kp * t1],
            &CMat::zeros(ro, lo),
        ),
    );
    r.push(
        "open.incoming_projected",
        identity_residual(&[t1.adjoint() * kp * t1, r1.adjoint() * km * r1 * l], &(km * l)),
    );
    r.push(
        "open.cross",
        identity_residual(&[r1.adjoint() * km * t2, t1.adjoint() * kp * r2], &CMat::zeros(lo, ro)),
    );
    r.push(
        "open.outgoing",
        identity_residual(&[t2.adjoint() * km * t2, r2.adjoint() * kp * r2], kp),
    );
    r.push(
        "open.incoming",
        identity_residual(&[t1.adjoint() * kp * t1, r1.adjoint() * km * r1], km),
    );
    r.push(
        "open.conjugate",
        identity_residual(&[conj_mat(t2) * t1, conj_mat(r1) * r1], &CMat::identity(lo, lo)),
    );
    Ok(UnitarityReport {
        all_open: false,
        residuals: r,
        full_tilde,
    })
}

/// Relations between closed and open blocks, with the partner set obtained by
/// exchanging the roles of the two sides.
pub fn closed_open_residuals<T: Real>(ss: &ScatteringSet<T>) -> Result<Residuals> {
    let cls = ss
        .classification
        .as_ref()
        .ok_or_else(|| Error::Invalid("closed/open relations need real λ on the physical sheet".into()))?;
    if cls.l_open() == 0 || cls.r_open() == 0 || cls.all_open() {
        return Err(Error::DegenerateSplit {
            l_open: cls.l_open(),
            r_open: cls.r_open(),
            l_closed: cls.l_closed(),
            r_closed: cls.r_closed(),
        });
    }
    let b = ss.blocks.as_ref().expect("blocks exist for real λ");
    let mut r = Residuals::new();
    closed_open_set(&mut r, "closed_open", &b.t1, &b.r1, &b.t2, &b.r2);
    closed_open_set(&mut r, "closed_open.mirrored", &b.t2, &b.r2, &b.t1, &b.r1);
    Ok(r)
}

fn closed_open_set<T: Real>(
    r: &mut Residuals,
    prefix: &str,
    t1: &Blocks<T>,
    r1: &Blocks<T>,
    t2: &Blocks<T>,
    r2: &Blocks<T>,
) {
    let (t1s, r1s, t2s, r2s) = (t1.conj(), r1.conj(), t2.conj(), r2.conj());
    r.push(
        format!("{prefix}.t_cc"),
        identity_residual(&[t1s.cc.clone(), -(&r2.co * &t1s.oc), -(&t1.co * &r1s.oc)], &t1.cc),
    );
    r.push(
        format!("{prefix}.r_cc"),
        identity_residual(&[r1s.cc.clone(), -(&t2.co * &t1s.oc), -(&r1.co * &r1s.oc)], &r1.cc),
    );
    r.push(
        format!("{prefix}.t_co"),
        identity_residual(&[&t1s.co * &r1.oo, &r2s.co * &t1.oo], &t1.co),
    );
    r.push(
        format!("{prefix}.r_co"),
        identity_residual(&[&t2s.co * &t1.oo, &r1s.co * &r1.oo], &r1.co),
    );
    r.push(
        format!("{prefix}.t_oc"),
        identity_residual(&[-(&r2.oo * &t1s.oc), -(&t1.oo * &r1s.oc)], &t1.oc),
    );
    r.push(
        format!("{prefix}.r_oc"),
        identity_residual(&[-(&t2.oo * &t1s.oc), -(&r1.oo * &r1s.oc)], &r1.oc),
    );
}

/// `det S = det Φ₋ / det Φ₊ = det S̃`, relative to `max(1, |det S|)`.
pub fn determinant_residuals<T: Real>(ss: &ScatteringSet<T>) -> Residuals {
    let ds = ss.det_s();
    let ratio = ss.det_phi_minus / ss.det_phi_plus;
    let ratio_tilde = ss.det_phi_tilde_minus / ss.det_phi_tilde_plus;
    let scale = T::one().max(cabs(ds));
    let mut r = Residuals::new();
    r.push("det.phi_ratio", (cabs(ds - ratio) / scale).as_f64());
    r.push("det.tilde", (cabs(ds - ss.det_s_tilde()) / scale).as_f64());
    r.push("det.tilde_phi_ratio", (cabs(ds - ratio_tilde) / scale).as_f64());
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jost::GridSpec;
    use crate::num::cplx;
    use crate::presets;
    use crate::transition::transition_at;

    fn scatter(m: &Medium<f64>, lambda: f64) -> ScatteringSet<f64> {
        let tol = Tolerances::default();
        let spec = GridSpec::from_tolerances(&tol, m.half_width());
        let ts = transition_at(m, &SpectralPoint::physical(lambda, m.channels()), &spec, &tol).unwrap();
        scattering_matrices(m, &ts, &tol).unwrap()
    }

    #[test]
    fn uniform_medium_is_transparent() {
        let m = presets::uniform::<f64>(&[0.0, 2.0], 1.0).validated().unwrap();
        let ss = scatter(&m, -1.0);
        assert!(max_diff(&ss.s, &CMat::identity(4, 4)) < 1e-10);
    }

    #[test]
    fn barrier_matches_closed_form() {
        // tails V = 1, layer V = 0 on [−1, 1], λ = 0.5: k = κ = √0.5
        let m = presets::square_layer::<f64>(1.0, 0.0, 1.0).validated().unwrap();
        let ss = scatter(&m, 0.5);
        let k = 0.5_f64.sqrt();
        let expect = 1.0 / (1.0 + ((k * k + k * k) / (2.0 * k * k)).powi(2) * (2.0 * k).sinh().powi(2));
        let got = ss.t1_tilde[(0, 0)].norm_sqr();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn step_reflection() {
        let m = presets::step::<f64>(0.0, 3.0, 1.0).validated().unwrap();
        let ss = scatter(&m, -1.0);
        assert!(cabs(ss.r1_tilde[(0, 0)] - cplx(-1.0 / 3.0, 0.0)) < 1e-9);
    }

    #[test]
    fn all_open_is_degenerate_for_closed_open_relations() {
        let m = presets::uniform::<f64>(&[0.0, 2.0], 1.0).validated().unwrap();
        let ss = scatter(&m, -1.0);
        assert!(matches!(closed_open_residuals(&ss), Err(Error::DegenerateSplit { .. })));
    }
}

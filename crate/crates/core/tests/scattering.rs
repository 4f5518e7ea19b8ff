use jostline::jost::GridSpec;
use jostline::num::{cdiag, cplx, max_diff};
use jostline::presets;
use jostline::smatrix::{
    closed_open_residuals, determinant_residuals, scattering_matrices, symmetry_residuals, unitarity_residuals,
    ScatteringSet,
};
use jostline::transition::{bilinear_residuals, transition_at};
use jostline::{CMat, Error, Medium, Point, Tolerances};

fn scatter(m: &Medium<f64>, lambda: f64) -> ScatteringSet<f64> {
    let tol = Tolerances::default();
    let spec = GridSpec::from_tolerances(&tol, m.half_width());
    let ts = transition_at(m, &Point::physical(lambda, m.channels()), &spec, &tol).unwrap();
    scattering_matrices(m, &ts, &tol).unwrap()
}

/// Midpoints between consecutive distinct thresholds plus one point on
/// either side of all of them.
fn probe_energies(m: &Medium<f64>) -> Vec<f64> {
    let mut t = m.all_thresholds();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let mut out = vec![t[0] - 0.7, t[t.len() - 1] + 0.9];
    out.extend(t.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out
}

#[test]
fn random_media_satisfy_every_identity() {
    let mut worst = std::collections::BTreeMap::<String, f64>::new();
    let mut mixed = 0;
    for seed in 0..12 {
        let m = presets::random_piecewise_constant::<f64>(seed, 1 + (seed as usize % 3) + 1, 4)
            .validated()
            .unwrap();
        for lambda in probe_energies(&m) {
            let ss = scatter(&m, lambda);
            let mut all = symmetry_residuals(&ss);
            all.extend(determinant_residuals(&ss));
            let tol = Tolerances::default();
            let spec = GridSpec::from_tolerances(&tol, m.half_width());
            let ts = transition_at(&m, &Point::physical(lambda, m.channels()), &spec, &tol).unwrap();
            all.extend(bilinear_residuals(&ts));
            all.extend(unitarity_residuals(&ss).unwrap().residuals);
            match closed_open_residuals(&ss) {
                Ok(r) => {
                    mixed += 1;
                    all.extend(r);
                }
                Err(Error::DegenerateSplit { .. }) => {}
                Err(e) => panic!("{e}"),
            }
            for r in all.iter() {
                let w = worst.entry(r.name.clone()).or_insert(0.0);
                *w = w.max(r.value);
            }
        }
    }
    for (name, v) in &worst {
        println!("{name:32} {v:.2e}");
    }
    assert!(mixed > 5, "only {mixed} mixed points");
    for (name, v) in &worst {
        assert!(*v < 1e-8, "{name}: {v:e}");
    }
}

#[test]
fn all_open_unitarity_holds_for_dressed_matrix() {
    let m = presets::random_piecewise_constant::<f64>(3, 3, 5).validated().unwrap();
    // open channels have λ below their threshold
    let bottom = m.all_thresholds().into_iter().fold(f64::MAX, f64::min);
    let ss = scatter(&m, bottom - 2.0);
    let rep = unitarity_residuals(&ss).unwrap();
    assert!(rep.all_open);
    assert!(rep.residuals.max() < 1e-9, "{:?}", rep.residuals);
    assert!(rep.full_tilde < 1e-9);
}

#[test]
fn dressed_matrix_is_not_unitary_with_closed_channels() {
    let m = presets::decoupled_wells::<f64>([0.0, 2.0], [-1.0, -1.0])
        .validated()
        .unwrap();
    let ss = scatter(&m, 1.0);
    let rep = unitarity_residuals(&ss).unwrap();
    assert!(!rep.all_open);
    assert!(rep.residuals.max() < 1e-9, "{:?}", rep.residuals);
    assert!(rep.full_tilde > 1e-3, "{}", rep.full_tilde);
}

#[test]
fn unweighted_outgoing_relation_fails_unless_momenta_are_one() {
    // the outgoing open relation carries κ⁺ on its right-hand side; the bare
    // identity holds only when the open right momenta are all one
    let m = presets::random_piecewise_constant::<f64>(5, 2, 3).validated().unwrap();
    let mut t = m.all_thresholds();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ss = scatter(&m, 0.5 * (t[1] + t[2]));
    let cls = ss.classification.as_ref().unwrap();
    assert!(cls.l_open() > 0 && cls.r_open() > 0);
    let b = ss.blocks.as_ref().unwrap();
    let km = cdiag(&cls.kappa_open_left.iter().map(|&x| cplx(x, 0.0)).collect::<Vec<_>>());
    let kp = cdiag(&cls.kappa_open_right.iter().map(|&x| cplx(x, 0.0)).collect::<Vec<_>>());
    let lhs = b.t2.oo.adjoint() * &km * &b.t2.oo + b.r2.oo.adjoint() * &kp * &b.r2.oo;
    let weighted = max_diff(&lhs, &kp);
    let bare = max_diff(&lhs, &CMat::identity(cls.r_open(), cls.r_open()));
    assert!(weighted < 1e-9);
    assert!(bare > 1e-3);
}

use jostline::jost::GridSpec;
use jostline::medium::{Layer, LayerKind};
use jostline::oracle::transfer_matrix_solve;
use jostline::presets::{self, sample_energies, Region};
use jostline::smatrix::{
    determinant_residuals, scattering_matrices, symmetry_residuals, unitarity_residuals, ScatteringSet,
};
use jostline::transition::{bilinear_residuals, transition_at, TransitionSet};
use jostline::{Error, Medium, Point, Tolerances};

fn relative_gap(
    a: &TransitionSet<f64>,
    b: &TransitionSet<f64>,
    sa: &ScatteringSet<f64>,
    sb: &ScatteringSet<f64>,
) -> f64 {
    let ts = a.max_deviation(b) / a.scale().max(1.0);
    let ss = sa.max_deviation(sb) / sa.scale().max(1.0);
    ts.max(ss)
}

fn pipeline(
    m: &Medium<f64>,
    lambda: f64,
    spec: &GridSpec,
) -> jostline::Result<(TransitionSet<f64>, ScatteringSet<f64>)> {
    let tol = Tolerances::default();
    let ts = transition_at(m, &Point::physical(lambda, m.channels()), spec, &tol)?;
    let ss = scattering_matrices(m, &ts, &tol)?;
    Ok((ts, ss))
}

#[test]
fn oracle_output_satisfies_identities_at_round_off() {
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    for seed in 0..30 {
        let m = presets::random_piecewise_constant::<f64>(seed, 1 + seed as usize % 4, 6)
            .validated()
            .unwrap();
        for lambda in sample_energies(&m, Region::Any, 6, seed, 1e-3) {
            let (ts, ss) = match transfer_matrix_solve(&m, &Point::physical(lambda, m.channels()), &tol) {
                Ok(x) => x,
                Err(Error::SingularPhiPlus { .. } | Error::LayerResonance { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let mut r = bilinear_residuals(&ts);
            r.extend(symmetry_residuals(&ss));
            r.extend(determinant_residuals(&ss));
            r.extend(unitarity_residuals(&ss).unwrap().residuals);
            worst = worst.max(r.max());
        }
    }
    println!("worst oracle identity residual {worst:.2e}");
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn pipeline_agrees_with_oracle() {
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for seed in 0..50 {
        let m = presets::random_piecewise_constant::<f64>(100 + seed, 1 + seed as usize % 4, 6)
            .validated()
            .unwrap();
        let spec = GridSpec::from_tolerances(&tol, m.half_width());
        for lambda in sample_energies(&m, Region::Any, 4, seed, 1e-3) {
            let Ok((to, so)) = transfer_matrix_solve(&m, &Point::physical(lambda, m.channels()), &tol) else {
                continue;
            };
            let (tp, sp) = pipeline(&m, lambda, &spec).unwrap();
            worst = worst.max(relative_gap(&to, &tp, &so, &sp));
            cases += 1;
        }
    }
    println!("{cases} cases, worst pipeline/oracle gap {worst:.2e}");
    assert!(cases >= 180);
    assert!(worst <= 1e-8, "{worst:e}");
}

#[test]
fn splitting_a_layer_changes_nothing() {
    let tol = Tolerances::default();
    for seed in 0..10 {
        let m = presets::random_piecewise_constant::<f64>(200 + seed, 1 + seed as usize % 3, 4)
            .validated()
            .unwrap();
        let mut split = m.profile().clone();
        let first = split.layers.remove(0);
        let LayerKind::Constant(c) = &first.kind else {
            unreachable!()
        };
        let mid = 0.5 * (first.z_lo + first.z_hi);
        split
            .layers
            .insert(0, Layer::constant(mid, first.z_hi, c.g.clone(), c.v.clone()));
        split
            .layers
            .insert(0, Layer::constant(first.z_lo, mid, c.g.clone(), c.v.clone()));
        let s = split.validated().unwrap();
        for lambda in sample_energies(&m, Region::Any, 3, seed, 1e-3) {
            let p = Point::physical(lambda, m.channels());
            let (Ok((ta, sa)), Ok((tb, sb))) =
                (transfer_matrix_solve(&m, &p, &tol), transfer_matrix_solve(&s, &p, &tol))
            else {
                continue;
            };
            let gap = relative_gap(&ta, &tb, &sa, &sb);
            assert!(gap <= 1e-12, "seed {seed} λ {lambda}: {gap:e}");
        }
    }
}

#[test]
fn step_halving_shows_fourth_order() {
    // at the default step the pipeline already sits at round-off, so the
    // order is measured on a coarse grid
    let tol = Tolerances::default();
    let m = presets::random_piecewise_constant::<f64>(7, 2, 4).validated().unwrap();
    let coarse = GridSpec {
        h_max: 0.1,
        phase_step: 0.4,
        pad: 0.5,
    };
    for lambda in sample_energies(&m, Region::Any, 3, 7, 1e-2) {
        let Ok((to, so)) = transfer_matrix_solve(&m, &Point::physical(lambda, 2), &tol) else {
            continue;
        };
        let (t1, s1) = pipeline(&m, lambda, &coarse).unwrap();
        let (t2, s2) = pipeline(&m, lambda, &coarse.refined(2.0)).unwrap();
        let e1 = relative_gap(&to, &t1, &so, &s1);
        let e2 = relative_gap(&to, &t2, &so, &s2);
        println!("λ {lambda:.3}: {e1:.2e} -> {e2:.2e} ratio {:.1}", e1 / e2);
        assert!(e1 / e2 >= 12.0, "ratio {}", e1 / e2);
    }
}

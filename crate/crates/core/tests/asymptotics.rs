use jostline::asymptotics::{dets_asymptote, wkb_deviation, wkb_jost};
use jostline::jost::GridSpec;
use jostline::presets;
use jostline::{Point, Tolerances};

#[test]
fn det_s_tilde_tends_to_one() {
    let tol = Tolerances::default();
    let m = presets::smooth_two_channel::<f64>(81).validated().unwrap();
    let rec = dets_asymptote(&m, &[-1e2, -1e3, -1e4], &tol).unwrap();
    for r in &rec {
        println!("{r:?}");
        assert!(r.det_identity <= 1e-8);
        assert!(r.det_modulus <= 1e-8);
    }
    assert!(rec[0].abs_det_s_tilde_minus_1 > rec[1].abs_det_s_tilde_minus_1);
    assert!(rec[1].abs_det_s_tilde_minus_1 > rec[2].abs_det_s_tilde_minus_1);
    assert!(rec[2].abs_det_s_tilde_minus_1 <= 1e-2);
    assert!(rec[0].phi_dev > rec[1].phi_dev && rec[1].phi_dev > rec[2].phi_dev);
}

#[test]
fn wkb_error_scales_like_inverse_root() {
    let tol = Tolerances::default();
    let spec = GridSpec::from_tolerances(&tol, 1.0);
    for m in [
        presets::smooth_scalar::<f64>(81).validated().unwrap(),
        presets::smooth_two_channel::<f64>(81).validated().unwrap(),
    ] {
        let ladder = [-1e2, -1e3, -1e4];
        let dev: Vec<f64> = ladder
            .iter()
            .map(|&l| wkb_deviation(&m, &Point::physical(l, m.channels()), &spec, &tol).unwrap())
            .collect();
        println!("{dev:?}");
        for (d, l) in dev.iter().zip(ladder) {
            // scaled deviation stays within a factor two of the first rung
            let scaled = d * f64::sqrt(-l);
            let first = dev[0] * 10.0;
            assert!(scaled / first < 2.0 && first / scaled < 2.0, "{dev:?}");
        }
        assert!(dev[0] <= 3.0 / 10.0);
    }
}

#[test]
fn phases_and_frames_are_consistent() {
    let tol = Tolerances::default();
    let spec = GridSpec::from_tolerances(&tol, 1.0);
    let m = presets::smooth_two_channel::<f64>(81).validated().unwrap();
    let w = wkb_jost(&m, &Point::physical(-400.0, 2), &spec).unwrap();
    let r = w.residuals();
    println!("{r:?}");
    assert!(r.get("wkb.eigen").unwrap() <= tol.eig);
    assert!(r.get("wkb.conservation").unwrap() <= tol.eig);
    assert!(r.get("wkb.phase").unwrap() <= 1e-6);
}

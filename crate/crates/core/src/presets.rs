//! Ready-made media: closed-form test cases and seeded random families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::medium::{Coefficients, Layer, Medium, MediumProfile, SampleNode, Side};
use crate::num::{RMat, Real};

fn scalar<T: Real>(x: f64) -> RMat<T> {
    RMat::from_element(1, 1, T::lit(x))
}

fn diag<T: Real>(d: &[f64]) -> RMat<T> {
    RMat::from_fn(d.len(), d.len(), |i, j| if i == j { T::lit(d[i]) } else { T::zero() })
}

/// `g = I`, `V = diag(thresholds)` everywhere.
pub fn uniform<T: Real>(thresholds: &[f64], half_width: f64) -> MediumProfile<T> {
    let n = thresholds.len();
    let c = Coefficients {
        g: RMat::identity(n, n),
        v: diag(thresholds),
    };
    MediumProfile {
        channels: n,
        half_width: T::lit(half_width),
        layers: vec![Layer::constant(
            T::lit(-half_width),
            T::lit(half_width),
            c.g.clone(),
            c.v.clone(),
        )],
        left_tail: c.clone(),
        right_tail: c,
    }
}

/// Uniform interior equal to the right tail, with distinct diagonal tails.
pub fn diagonal_tails<T: Real>(left: &[f64], right: &[f64]) -> MediumProfile<T> {
    let n = left.len();
    assert_eq!(n, right.len());
    MediumProfile {
        channels: n,
        half_width: T::one(),
        layers: vec![Layer::constant(-T::one(), T::one(), RMat::identity(n, n), diag(right))],
        left_tail: Coefficients {
            g: RMat::identity(n, n),
            v: diag(left),
        },
        right_tail: Coefficients {
            g: RMat::identity(n, n),
            v: diag(right),
        },
    }
}

/// Scalar rectangular layer: `g = 1`, tails `V = v_tail`, `V = v_layer` on
/// `[−half_width, half_width]`.
pub fn square_layer<T: Real>(v_tail: f64, v_layer: f64, half_width: f64) -> MediumProfile<T> {
    let one = scalar::<T>(1.0);
    MediumProfile {
        channels: 1,
        half_width: T::lit(half_width),
        layers: vec![Layer::constant(
            T::lit(-half_width),
            T::lit(half_width),
            one.clone(),
            scalar(v_layer),
        )],
        left_tail: Coefficients {
            g: one.clone(),
            v: scalar(v_tail),
        },
        right_tail: Coefficients {
            g: one,
            v: scalar(v_tail),
        },
    }
}

/// Scalar well of depth `v0` on `[−1, 1]` (tails `V = 0`).
pub fn square_well<T: Real>(v0: f64) -> MediumProfile<T> {
    square_layer(0.0, v0, 1.0)
}

/// Scalar step: `V = v_left` for `z < 0`, `V = v_right` for `z > 0`.
pub fn step<T: Real>(v_left: f64, v_right: f64, half_width: f64) -> MediumProfile<T> {
    let one = scalar::<T>(1.0);
    MediumProfile {
        channels: 1,
        half_width: T::lit(half_width),
        layers: vec![
            Layer::constant(T::lit(-half_width), T::zero(), one.clone(), scalar(v_left)),
            Layer::constant(T::zero(), T::lit(half_width), one.clone(), scalar(v_right)),
        ],
        left_tail: Coefficients {
            g: one.clone(),
            v: scalar(v_left),
        },
        right_tail: Coefficients {
            g: one,
            v: scalar(v_right),
        },
    }
}

/// Two uncoupled scalar wells: channel `s` has tail value `tails[s]` and
/// layer value `depths[s]` on `[−1, 1]`.
pub fn decoupled_wells<T: Real>(tails: [f64; 2], depths: [f64; 2]) -> MediumProfile<T> {
    let id = RMat::identity(2, 2);
    MediumProfile {
        channels: 2,
        half_width: T::one(),
        layers: vec![Layer::constant(-T::one(), T::one(), id.clone(), diag(&depths))],
        left_tail: Coefficients {
            g: id.clone(),
            v: diag(&tails),
        },
        right_tail: Coefficients { g: id, v: diag(&tails) },
    }
}

#[allow(clippy::needless_range_loop)]
fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, diag_scale: f64, off_scale: f64) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = rng.random_range(-diag_scale..diag_scale);
        for j in 0..i {
            let x = rng.random_range(-off_scale..off_scale);
            m[i][j] = x;
            m[j][i] = x;
        }
    }
    m
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    // B Bᵀ / n + 0.6 I keeps the spectrum inside roughly [0.6, 1.6]
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-0.8..0.8)).collect())
        .collect();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum();
            g[i][j] = s / n as f64 + if i == j { 0.6 } else { 0.0 };
        }
    }
    g
}

fn to_mat<T: Real>(m: &[Vec<f64>]) -> RMat<T> {
    RMat::from_fn(m.len(), m.len(), |i, j| T::lit(m[i][j]))
}

fn random_tail<T: Real>(rng: &mut ChaCha8Rng, n: usize, min_gap: f64) -> Coefficients<T> {
    loop {
        let g = to_mat::<f64>(&random_spd(rng, n));
        let v = to_mat::<f64>(&random_symmetric(rng, n, 3.0, 1.0));
        let eig = crate::linalg::generalized_symmetric_eigen(&g, &v).expect("spd");
        if eig.values.windows(2).all(|w| w[1] - w[0] > min_gap) {
            return Coefficients {
                g: g.map(T::lit),
                v: v.map(T::lit),
            };
        }
    }
}

/// Seeded random piecewise-constant medium with `channels` channels and
/// between one and `max_layers` interior layers on `[−1, 1]`.
///
/// Entries are kept moderate (thresholds roughly within `[−5, 5]`) so that
/// local momenta stay at desk scale.
pub fn random_piecewise_constant<T: Real>(seed: u64, channels: usize, max_layers: usize) -> MediumProfile<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = channels;
    let left_tail = random_tail(&mut rng, n, 0.4);
    let right_tail = random_tail(&mut rng, n, 0.4);
    let layer_count = rng.random_range(1..=max_layers.max(1));
    let mut cuts: Vec<f64> = (0..layer_count - 1).map(|_| rng.random_range(-0.9..0.9)).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut edges = vec![-1.0];
    edges.extend(cuts);
    edges.push(1.0);
    let layers = edges
        .windows(2)
        .map(|w| {
            let g = to_mat(&random_spd(&mut rng, n));
            let v = to_mat(&random_symmetric(&mut rng, n, 3.0, 1.0));
            Layer::constant(T::lit(w[0]), T::lit(w[1]), g, v)
        })
        .collect();
    MediumProfile {
        channels: n,
        half_width: T::one(),
        layers,
        left_tail,
        right_tail,
    }
}

/// Scalar smooth bump sampled on `nodes` points: `g = 1 + a·bump`,
/// `V` ramps between the tail values with a bump on top.
pub fn smooth_scalar<T: Real>(nodes: usize) -> MediumProfile<T> {
    smooth_profile(nodes, &[(0.0, 0.5)], 0.3)
}

/// Smooth two-channel medium with a fixed (z-independent) channel rotation:
/// `g = a(z) I`, `V = a(z) R diag(v₁(z), v₂(z)) Rᵀ`, where `a` is a smooth
/// bump and each `v_s` ramps from its left to its right tail value.
pub fn smooth_two_channel<T: Real>(nodes: usize) -> MediumProfile<T> {
    smooth_profile(nodes, &[(0.0, 0.5), (2.0, 3.0)], 0.3)
}

fn smooth_profile<T: Real>(nodes: usize, tails: &[(f64, f64)], bump: f64) -> MediumProfile<T> {
    let n = tails.len();
    let (c, s) = (0.6_f64.cos(), 0.6_f64.sin());
    let rot = |d: &[f64]| -> Vec<Vec<f64>> {
        if n == 1 {
            return vec![vec![d[0]]];
        }
        // R diag(d) Rᵀ with R the rotation by 0.6 rad
        vec![
            vec![c * c * d[0] + s * s * d[1], c * s * (d[0] - d[1])],
            vec![c * s * (d[0] - d[1]), s * s * d[0] + c * c * d[1]],
        ]
    };
    let half = 1.0;
    let amp = |z: f64| 1.0 + bump * (std::f64::consts::FRAC_PI_2 * z / half).cos().powi(2);
    let ramp = |z: f64, (l, r): (f64, f64)| {
        let t = 0.5 * (1.0 + (std::f64::consts::FRAC_PI_2 * z / half).sin());
        l + (r - l) * t + 0.4 * (std::f64::consts::PI * z / half).cos().powi(2) * ((l + r) * 0.5 + 1.0) * 0.2
    };
    let coeffs = |z: f64| {
        let a = amp(z);
        let d: Vec<f64> = tails.iter().map(|&t| ramp(z, t)).collect();
        let v = rot(&d);
        let g: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { a } else { 0.0 }).collect())
            .collect();
        let v: Vec<Vec<f64>> = v.iter().map(|row| row.iter().map(|x| a * x).collect()).collect();
        (to_mat::<T>(&g), to_mat::<T>(&v))
    };
    let count = nodes.max(2);
    let samples = (0..count)
        .map(|k| {
            let z = if k + 1 == count {
                half
            } else {
                -half + 2.0 * half * k as f64 / (count - 1) as f64
            };
            let (g, v) = coeffs(z);
            SampleNode { z: T::lit(z), g, v }
        })
        .collect();
    let (gl, vl) = coeffs(-half);
    let (gr, vr) = coeffs(half);
    MediumProfile {
        channels: n,
        half_width: T::lit(half),
        layers: vec![Layer::sampled(samples)],
        left_tail: Coefficients { g: gl, v: vl },
        right_tail: Coefficients { g: gr, v: vr },
    }
}

/// Which kind of real energy [`sample_energies`] draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// Below every threshold.
    AllOpen,
    /// Both sides have at least one open and at least one closed channel.
    Mixed,
    /// Between the lowest and the highest threshold of either side.
    Partial,
    /// Above every threshold.
    AllClosed,
    /// Anywhere within three units of the threshold range.
    Any,
}

/// Energy interval of a region, `None` when it is empty.
pub fn region_interval<T: Real>(medium: &Medium<T>, region: Region) -> Option<(f64, f64)> {
    let range = |side: Side| {
        let t = &medium.basis(side).thresholds;
        (t[0].as_f64(), t[t.len() - 1].as_f64())
    };
    let (l_min, l_max) = range(Side::Left);
    let (r_min, r_max) = range(Side::Right);
    let (lo, hi) = match region {
        Region::AllOpen => (l_min.min(r_min) - 5.0, l_min.min(r_min)),
        Region::Mixed => (l_min.max(r_min), l_max.min(r_max)),
        Region::Partial => (l_min.min(r_min), l_max.max(r_max)),
        Region::AllClosed => (l_max.max(r_max), l_max.max(r_max) + 5.0),
        Region::Any => (l_min.min(r_min) - 3.0, l_max.max(r_max) + 3.0),
    };
    (hi > lo).then_some((lo, hi))
}

/// `count` seeded energies in a region, each at least `margin` away from
/// every threshold (and from the interval ends).
pub fn sample_energies<T: Real>(medium: &Medium<T>, region: Region, count: usize, seed: u64, margin: f64) -> Vec<f64> {
    let Some((lo, hi)) = region_interval(medium, region) else {
        return Vec::new();
    };
    let thresholds: Vec<f64> = medium.all_thresholds().iter().map(|t| t.as_f64()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1000 * count {
        tries += 1;
        let x = rng.random_range(lo..hi);
        if x - lo < margin || hi - x < margin || thresholds.iter().any(|t| (t - x).abs() < margin) {
            continue;
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::validate_profile;
    use crate::tolerances::Tolerances;

    #[test]
    fn presets_validate() {
        let tol = Tolerances::default();
        for p in [
            uniform::<f64>(&[0.0, 1.0], 1.0),
            square_well(10.0),
            step(0.0, 3.0, 1.0),
            decoupled_wells([0.0, 2.0], [6.0, 9.0]),
            smooth_scalar(41),
            smooth_two_channel(41),
        ] {
            let r = validate_profile(&p, &tol);
            assert!(r.passed(), "{r}");
        }
        for seed in 0..20 {
            let p = random_piecewise_constant::<f64>(seed, 1 + (seed as usize % 4), 6);
            assert!(validate_profile(&p, &tol).passed());
            assert!(p.layers.len() <= 6);
        }
    }

    #[test]
    fn random_is_deterministic() {
        let a = random_piecewise_constant::<f64>(7, 3, 6);
        let b = random_piecewise_constant::<f64>(7, 3, 6);
        assert_eq!(a, b);
    }
}

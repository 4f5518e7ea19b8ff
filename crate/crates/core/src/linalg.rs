//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, SymmetricEigen, SVD};

use crate::num::{cabs, CMat, RMat, Real, C};

/// Solution of the symmetric-definite problem `V f = Λ g f` with `fᵀ g f = I`.
#[derive(Clone, Debug)]
pub struct GeneralizedEigen<T: Real> {
    /// Ascending.
    pub values: Vec<T>,
    /// Column `s` is the eigenvector for `values[s]`.
    pub vectors: RMat<T>,
}

/// Reduces `V f = Λ g f` through the Cholesky factor of `g`, sorts ascending and
/// fixes each column's sign so that its largest-magnitude entry is positive.
///
/// Returns `None` when `g` is not positive-definite.
pub fn generalized_symmetric_eigen<T: Real>(g: &RMat<T>, v: &RMat<T>) -> Option<GeneralizedEigen<T>> {
    let n = g.nrows();
    let chol = Cholesky::new(g.clone())?;
    let l = chol.l();
    // A = L⁻¹ V L⁻ᵀ
    let x = l.solve_lower_triangular(v)?;
    let a = l.solve_lower_triangular(&x.transpose())?;
    let a = (&a + a.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(a);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let q = RMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let mut f = l.tr_solve_lower_triangular(&q)?;
    for j in 0..n {
        fix_column_sign(&mut f, j);
    }
    Some(GeneralizedEigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: f,
    })
}

/// Largest-magnitude entry positive; ties go to the first such entry.
pub fn fix_column_sign<T: Real>(f: &mut RMat<T>, j: usize) {
    let mut best = 0;
    let mut best_abs = T::zero();
    for i in 0..f.nrows() {
        let a = f[(i, j)].abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if f[(best, j)] < T::zero() {
        for i in 0..f.nrows() {
            f[(i, j)] = -f[(i, j)];
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Real>(m: &RMat<T>) -> T {
    let sym = (m + m.transpose()) * T::lit(0.5);
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap_or(T::lit(f64::MAX)), |a, &b| a.min(b))
}

/// `max |a_ij − a_ji|`.
pub fn asymmetry<T: Real>(m: &RMat<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `g⁻¹ x` through a Cholesky solve.
pub fn spd_solve<T: Real>(g: &RMat<T>, x: &RMat<T>) -> Option<RMat<T>> {
    Cholesky::new(g.clone()).map(|c| c.solve(x))
}

pub fn det<T: Real>(m: &CMat<T>) -> C<T> {
    if m.is_empty() {
        return C::new(T::one(), T::zero());
    }
    m.clone().lu().determinant()
}

pub fn inverse<T: Real>(m: &CMat<T>) -> Option<CMat<T>> {
    m.clone().try_inverse()
}

/// Moore–Penrose pseudo-inverse with singular values below `rel_tol·σ_max`
/// treated as zero. Returns the pseudo-inverse and the numerical rank.
pub fn pseudo_inverse<T: Real>(m: &CMat<T>, rel_tol: T) -> (CMat<T>, usize) {
    if m.is_empty() {
        return (CMat::zeros(m.ncols(), m.nrows()), 0);
    }
    let svd = SVD::new(m.clone(), true, true);
    let sigma_max = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let eps = rel_tol * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let pinv = svd
        .pseudo_inverse(eps)
        .unwrap_or_else(|_| CMat::zeros(m.ncols(), m.nrows()));
    (pinv, rank)
}

/// Singular triplets sorted by ascending singular value:
/// `(σ, left vector u, right vector v)` with `m v = σ u`.
pub fn singular_triplets<T: Real>(m: &CMat<T>) -> Vec<(T, Vec<C<T>>, Vec<C<T>>)> {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let mut out: Vec<_> = (0..svd.singular_values.len())
        .map(|k| {
            let left = u.column(k).iter().copied().collect();
            let right = v_t.row(k).iter().map(|z| z.conj()).collect();
            (svd.singular_values[k], left, right)
        })
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    out
}

pub fn vec_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Normalizes to unit 2-norm and rotates the phase so the first entry above
/// `rel_floor·max|v|` is real positive.
pub fn normalize_phase<T: Real>(v: &mut [C<T>], rel_floor: T) {
    let norm = vec_norm(v);
    if norm == T::zero() {
        return;
    }
    let biggest = v.iter().fold(T::zero(), |a, z| a.max(cabs(*z)));
    if let Some(anchor) = v.iter().copied().find(|z| cabs(*z) > rel_floor * biggest) {
        let phase = anchor.conj() / C::new(cabs(anchor), T::zero());
        for z in v.iter_mut() {
            *z = *z * phase / C::new(norm, T::zero());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{cplx, max_diff};

    #[test]
    fn eigen_of_coupled_pair() {
        let g = RMat::<f64>::identity(2, 2);
        let v = RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = generalized_symmetric_eigen(&g, &v).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // largest-magnitude tie resolved by first entry
        assert!((e.vectors[(0, 0)] - s).abs() < 1e-14);
        assert!((e.vectors[(1, 0)] + s).abs() < 1e-14);
        assert!((e.vectors[(0, 1)] - s).abs() < 1e-14);
        assert!((e.vectors[(1, 1)] - s).abs() < 1e-14);
    }

    #[test]
    fn indefinite_g_rejected() {
        let g = RMat::from_row_slice(2, 2, &[1.0_f64, 2.0, 2.0, 1.0]);
        assert!(generalized_symmetric_eigen(&g, &g).is_none());
        assert!((min_eigenvalue(&g) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_of_rank_one() {
        let m = CMat::<f64>::from_row_slice(1, 2, &[cplx(1.0, 0.0), cplx(0.0, 1.0)]);
        let (p, rank) = pseudo_inverse(&m, 1e-10);
        assert_eq!(rank, 1);
        let prod = &m * &p;
        assert!(max_diff(&prod, &CMat::identity(1, 1)) < 1e-14);
        let proj = &p * &m;
        assert!(max_diff(&(&proj * &proj), &proj) < 1e-14);
    }

    #[test]
    fn singular_triplets_annihilate() {
        let m = CMat::<f64>::from_row_slice(2, 2, &[cplx(1.0, 1.0), cplx(2.0, 2.0), cplx(0.5, 0.0), cplx(1.0, 0.0)]);
        let (s, u, v) = singular_triplets(&m).remove(0);
        assert!(s < 1e-14);
        let mv = &m * nalgebra::DVector::from_vec(v);
        assert!(mv.iter().all(|z| cabs(*z) < 1e-14));
        let ut = nalgebra::DVector::from_vec(u.iter().map(|z| z.conj()).collect()).transpose();
        assert!((ut * &m).iter().all(|z| cabs(*z) < 1e-14));
    }
}

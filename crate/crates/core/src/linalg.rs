//! Dense linear-algebra helpers: spectral norms, orthonormalization,
//! sorted symmetric eigendecompositions, and orthogonal perturbations.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

/// Singular values sorted descending.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
pub fn symmetric_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Modified Gram-Schmidt. Returns an orthonormal basis of the span of the
/// given columns, dropping directions with residual norm below `tol`.
pub fn orthonormalize(columns: &[DVector<f64>], tol: f64) -> DMatrix<f64> {
    let dim = columns.first().map(|c| c.len()).unwrap_or(0);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for col in columns {
        let mut v = col.clone();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        // second pass for numerical orthogonality
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let n = v.norm();
        if n > tol {
            basis.push(v / n);
        }
    }
    let mut out = DMatrix::zeros(dim, basis.len());
    for (k, b) in basis.iter().enumerate() {
        out.set_column(k, b);
    }
    out
}

/// Random special-orthogonal matrix close to the identity:
/// Cayley transform (I − A)(I + A)⁻¹ of a random antisymmetric A with
/// entries of magnitude `scale`. ‖Q − I‖ = O(scale).
pub fn random_orthogonal_perturbation<R: Rng>(
    n: usize,
    scale: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(-scale..scale);
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    let id = DMatrix::identity(n, n);
    let num = &id - &a;
    let den = &id + &a;
    num * den.try_inverse().expect("I + A invertible for small A")
}

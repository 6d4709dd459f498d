//! Small dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `aᴴ b`
pub fn hermitian_dot(a: &CVector, b: &CVector) -> C64 {
    a.iter()
        .zip(b.iter())
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

/// `|aᴴ b|²`
pub fn gain(a: &CVector, b: &CVector) -> f64 {
    hermitian_dot(a, b).norm_sqr()
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `h hᴴ`
pub fn outer(h: &CVector) -> CMatrix {
    h * h.adjoint()
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Real trace of `A B` for Hermitian arguments.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dot_is_conjugate_linear_in_first_argument() {
        let a = CVector::from_vec(vec![C64::new(0.0, 1.0), C64::new(2.0, 0.0)]);
        let b = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 3.0)]);
        let d = hermitian_dot(&a, &b);
        assert_relative_eq!(d.re, 0.0);
        assert_relative_eq!(d.im, -1.0 + 6.0);
        assert_relative_eq!(gain(&a, &b), 25.0);
        assert_relative_eq!(norm_sqr(&a), 5.0);
    }

    #[test]
    fn eigen_sorted_descending() {
        let h = CVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(0.0, -2.0)]);
        let (vals, vecs) = hermitian_eigen(&outer(&h));
        assert_relative_eq!(vals[0], 6.0, epsilon = 1e-12);
        assert!(vals[1].abs() < 1e-12);
        let v = vecs.column(0).into_owned();
        assert_relative_eq!(gain(&v, &h), 6.0, epsilon = 1e-12);
        assert_eq!(hermitian_defect(&outer(&h)), 0.0);
    }
}

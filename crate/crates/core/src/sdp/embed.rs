use nalgebra::DMatrix;

use crate::linalg::{CMatrix, C64};

/// `A = R + iI  ↦  [[R, -I], [I, R]]`.
///
/// For Hermitian `A`, `B`: `Tr(E(A)E(B)) = 2·Tr(AB)` and the spectrum of
/// `E(A)` is that of `A` with every eigenvalue repeated.
pub fn real_embedding(a: &CMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = a[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Hermitian matrix whose embedding is the average of `y` and its rotation
/// `J y Jᵀ`; preserves trace inner products against embedded data and maps
/// PSD to PSD.
pub fn complex_from_embedding(y: &DMatrix<f64>) -> CMatrix {
    let n = y.nrows() / 2;
    CMatrix::from_fn(n, n, |r, c| {
        let re = 0.5 * (y[(r, c)] + y[(r + n, c + n)]);
        let im = 0.5 * (y[(r + n, c)] - y[(r, c + n)]);
        C64::new(re, im)
    })
}

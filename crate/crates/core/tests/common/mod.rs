//! Independent dense references built from bit strings, shared by integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// `(n+1) x (n+1)` projection of `-sin X - cos Z + cos H_sp` onto the symmetric subspace,
/// assembled by summing matrix elements over all `2^n` bit strings.
pub fn dense_symmetric_hamiltonian(n: usize, s: f64, surplus: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let norm = (s * s + (1.0 - s) * (1.0 - s)).sqrt();
    let (sin, cos) = ((1.0 - s) / norm, s / norm);
    let mut counts = vec![0f64; n + 1];
    let mut sums = DMatrix::<f64>::zeros(n + 1, n + 1);
    for z in 0u32..(1u32 << n) {
        let k = z.count_ones() as usize;
        counts[k] += 1.0;
        let zdiag = n as f64 / 2.0 - k as f64;
        sums[(k, k)] += -cos * zdiag + cos * surplus(k);
        for bit in 0..n {
            let z2 = z ^ (1 << bit);
            let k2 = z2.count_ones() as usize;
            sums[(k, k2)] += -sin * 0.5;
        }
    }
    DMatrix::from_fn(n + 1, n + 1, |i, j| sums[(i, j)] / (counts[i] * counts[j]).sqrt())
}

/// Ascending eigenvalues and matching eigenvectors (columns).
pub fn dense_eigen(m: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

/// Dense matrix of a tridiagonal operator.
pub fn dense_of(diag: &[f64], offdiag: &[f64]) -> DMatrix<f64> {
    let m = diag.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            offdiag[i]
        } else if j + 1 == i {
            offdiag[j]
        } else {
            0.0
        }
    })
}

//! Exact diagonalization inside a particle-number sector.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::encoding::EncodingScheme;
use crate::error::{Error, Result};
use crate::pauli::{PauliSum, DEFAULT_DENSE_LIMIT};

pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Normalized ground state in the full `2^n` computational basis.
    pub ground_vector: Vec<Complex64>,
    /// Electron count of the sector, or `None` when the whole space was used.
    pub n_electrons: Option<usize>,
    /// Computational basis states spanning the sector.
    pub sector_basis: Vec<usize>,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Basis states whose encoded occupation sums to `n_electrons`. The mapped
/// number operator is diagonal for every supported encoding.
pub fn sector_basis(scheme: &EncodingScheme, n_electrons: Option<usize>) -> Result<Vec<usize>> {
    let n_qubits = scheme.n_qubits();
    check_dense_size(n_qubits)?;
    let dim = 1usize << n_qubits;
    let Some(n_e) = n_electrons else {
        return Ok((0..dim).collect());
    };
    let number = scheme.number_operator()?;
    let actions: Vec<_> = number
        .iter()
        .map(|(s, c)| (s.basis_action(), c))
        .collect();
    if actions.iter().any(|(a, _)| !a.is_diagonal()) {
        return Err(Error::Encoding("mapped number operator is not diagonal".into()));
    }
    let basis: Vec<usize> = (0..dim)
        .filter(|&b| {
            let n: f64 = actions.iter().map(|(a, c)| (a.apply(b).1 * c).re).sum();
            (n - n_e as f64).abs() < 1e-8
        })
        .collect();
    if basis.is_empty() {
        return Err(Error::EmptySector(n_e));
    }
    Ok(basis)
}

fn check_dense_size(n_qubits: usize) -> Result<()> {
    if n_qubits > DEFAULT_DENSE_LIMIT {
        return Err(Error::SizeLimit {
            what: "dense diagonalization",
            n_qubits,
            limit: DEFAULT_DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Matrix of `h` restricted to the span of `basis`.
pub fn sector_matrix(h: &PauliSum, basis: &[usize]) -> DMatrix<Complex64> {
    let index: HashMap<usize, usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let dim = basis.len();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (string, coefficient) in h.iter() {
        let action = string.basis_action();
        for (col, &b) in basis.iter().enumerate() {
            let (target, amplitude) = action.apply(b);
            if let Some(&row) = index.get(&target) {
                m[(row, col)] += coefficient * amplitude;
            }
        }
    }
    m
}

pub fn fci_ground_energy(
    h: &PauliSum,
    n_electrons: Option<usize>,
    scheme: &EncodingScheme,
) -> Result<SpectrumResult> {
    fci_lowest(h, n_electrons, scheme, 1)
}

/// Lowest `k` eigenvalues of `h` in the requested sector.
pub fn fci_lowest(
    h: &PauliSum,
    n_electrons: Option<usize>,
    scheme: &EncodingScheme,
    k: usize,
) -> Result<SpectrumResult> {
    if h.n_qubits() != scheme.n_qubits() {
        return Err(Error::QubitMismatch {
            left: h.n_qubits(),
            right: scheme.n_qubits(),
        });
    }
    check_dense_size(h.n_qubits())?;
    let imaginary = h.max_imaginary();
    if imaginary > HERMITICITY_TOLERANCE {
        return Err(Error::NonHermitian(imaginary));
    }
    let basis = sector_basis(scheme, n_electrons)?;
    let eigen = SymmetricEigen::new(sector_matrix(h, &basis));
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().take(k.max(1)).map(|&i| eigen.eigenvalues[i]).collect();
    if let Some(i) = eigenvalues.iter().position(|e| !e.is_finite()) {
        return Err(Error::NonFinite(i));
    }

    let column = eigen.eigenvectors.column(order[0]);
    let mut ground_vector = vec![Complex64::new(0.0, 0.0); 1 << h.n_qubits()];
    for (i, &b) in basis.iter().enumerate() {
        ground_vector[b] = column[i];
    }
    let norm = ground_vector.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    ground_vector.iter_mut().for_each(|c| *c /= norm);

    Ok(SpectrumResult {
        eigenvalues,
        ground_vector,
        n_electrons,
        sector_basis: basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::EncodingKind;
    use crate::pauli::{Pauli, PauliString};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_z_full_space() {
        let scheme = EncodingScheme::new(EncodingKind::JordanWigner, 1).unwrap();
        let h = PauliSum::from_terms(1, [(c(1.0), PauliString::single(0, Pauli::Z))]).unwrap();
        let r = fci_ground_energy(&h, None, &scheme).unwrap();
        assert!((r.ground_energy() + 1.0).abs() < 1e-14);
        assert!((r.ground_vector[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sector_restriction_changes_the_answer() {
        // Z0 + Z1 under JW: full-space ground is -2 (both occupied), one
        // electron gives 0.
        let scheme = EncodingScheme::new(EncodingKind::JordanWigner, 2).unwrap();
        let h = PauliSum::from_terms(
            2,
            [
                (c(1.0), PauliString::single(0, Pauli::Z)),
                (c(1.0), PauliString::single(1, Pauli::Z)),
            ],
        )
        .unwrap();
        assert!((fci_ground_energy(&h, None, &scheme).unwrap().ground_energy() + 2.0).abs() < 1e-12);
        let one = fci_ground_energy(&h, Some(1), &scheme).unwrap();
        assert!(one.ground_energy().abs() < 1e-12);
        assert_eq!(one.sector_basis, vec![1, 2]);
    }

    #[test]
    fn sector_sizes_are_binomial_for_every_encoding() {
        for kind in EncodingKind::ALL {
            let scheme = EncodingScheme::new(kind, 6).unwrap();
            for (n_e, size) in [(0, 1), (1, 6), (2, 15), (3, 20), (6, 1)] {
                assert_eq!(sector_basis(&scheme, Some(n_e)).unwrap().len(), size, "{kind:?} {n_e}");
            }
        }
    }

    #[test]
    fn errors() {
        let scheme = EncodingScheme::new(EncodingKind::JordanWigner, 2).unwrap();
        assert!(matches!(sector_basis(&scheme, Some(3)), Err(Error::EmptySector(3))));
        let h = PauliSum::from_terms(2, [(Complex64::new(0.0, 1.0), PauliString::single(0, Pauli::Z))]).unwrap();
        assert!(matches!(fci_ground_energy(&h, None, &scheme), Err(Error::NonHermitian(_))));
        let big = EncodingScheme::new(EncodingKind::JordanWigner, 15).unwrap();
        assert!(matches!(sector_basis(&big, None), Err(Error::SizeLimit { .. })));
        let wrong = PauliSum::zero(3);
        assert!(matches!(fci_ground_energy(&wrong, None, &scheme), Err(Error::QubitMismatch { .. })));
    }
}

//! Fermion-to-qubit encodings.
//!
//! Each encoding is a lower-triangular binary matrix `B` with unit diagonal:
//! qubit `q` stores `sum_j B[q][j] n_j (mod 2)`. Jordan-Wigner is the identity,
//! parity the all-ones lower triangle, and Bravyi-Kitaev the Fenwick-tree
//! matrix (qubit `j` stores the occupations of modes `j - lowbit(j+1) + 1 ..= j`),
//! which is well defined for any mode count.
//!
//! From `B` and its inverse every mode gets three qubit sets:
//!
//! * update set `U(j)`: qubits other than `j` that change when `n_j` flips;
//! * parity set `P(j)`: qubits whose sum is the parity of modes `0..j`;
//! * flip set `F(j)`: qubits other than `j` whose sum with qubit `j` is `n_j`.
//!
//! and the ladder images are
//!
//! ```text
//! a_j^dagger = 1/2 X_U (X_j Z_P - i Y_j Z_R)
//! a_j        = 1/2 X_U (X_j Z_P + i Y_j Z_R),      R = P xor F
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{FermionOperator, LadderOp};
use crate::pauli::{Pauli, PauliString, PauliSum, DEFAULT_DROP_TOLERANCE};

/// Encoding matrices are stored as `u64` rows.
pub const MAX_MODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingKind {
    #[serde(rename = "jw")]
    JordanWigner,
    #[serde(rename = "parity")]
    Parity,
    #[serde(rename = "bk")]
    BravyiKitaev,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 3] = [
        EncodingKind::JordanWigner,
        EncodingKind::Parity,
        EncodingKind::BravyiKitaev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::JordanWigner => "jw",
            EncodingKind::Parity => "parity",
            EncodingKind::BravyiKitaev => "bk",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncodingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "jw" | "jordan_wigner" | "jordan-wigner" => Ok(EncodingKind::JordanWigner),
            "parity" => Ok(EncodingKind::Parity),
            "bk" | "bravyi_kitaev" | "bravyi-kitaev" => Ok(EncodingKind::BravyiKitaev),
            other => Err(format!("unknown encoding `{other}` (expected jw, parity or bk)")),
        }
    }
}

/// Qubit sets that determine the image of mode `j`'s ladder operators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeSets {
    pub update: BTreeSet<usize>,
    pub parity: BTreeSet<usize>,
    pub flip: BTreeSet<usize>,
}

impl ModeSets {
    pub fn remainder(&self) -> BTreeSet<usize> {
        self.parity.symmetric_difference(&self.flip).copied().collect()
    }
}

/// Per-mode index sets of an encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSets {
    pub modes: Vec<ModeSets>,
}

impl IndexSets {
    pub fn mode(&self, j: usize) -> &ModeSets {
        &self.modes[j]
    }
}

/// Bravyi-Kitaev update, parity and flip sets for `n_modes` modes.
pub fn build_bk_sets(n_modes: usize) -> Result<IndexSets> {
    index_sets(EncodingKind::BravyiKitaev, n_modes)
}

pub fn index_sets(kind: EncodingKind, n_modes: usize) -> Result<IndexSets> {
    let scheme = EncodingScheme::new(kind, n_modes)?;
    Ok(scheme.sets)
}

/// An encoding bound to a register size. Qubit count equals mode count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingScheme {
    kind: EncodingKind,
    n_modes: usize,
    matrix: Vec<u64>,
    sets: IndexSets,
}

impl EncodingScheme {
    pub fn new(kind: EncodingKind, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Encoding("an encoding needs at least one mode".into()));
        }
        if n_modes > MAX_MODES {
            return Err(Error::Encoding(format!(
                "{n_modes} modes exceeds the supported maximum of {MAX_MODES}"
            )));
        }
        let matrix = encoding_matrix(kind, n_modes);
        let inverse = invert_unit_lower(&matrix);
        let modes = (0..n_modes)
            .map(|j| {
                let update = (0..n_modes)
                    .filter(|&q| q != j && bit(matrix[q], j))
                    .collect();
                let parity = (0..n_modes)
                    .filter(|&q| (0..j).filter(|&k| bit(inverse[k], q)).count() % 2 == 1)
                    .collect();
                let flip = (0..n_modes)
                    .filter(|&q| q != j && bit(inverse[j], q))
                    .collect();
                ModeSets {
                    update,
                    parity,
                    flip,
                }
            })
            .collect();
        Ok(EncodingScheme {
            kind,
            n_modes,
            matrix,
            sets: IndexSets { modes },
        })
    }

    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_qubits(&self) -> usize {
        self.n_modes
    }

    pub fn index_sets(&self) -> &IndexSets {
        &self.sets
    }

    /// Row `q` of the encoding matrix as a bit mask over modes.
    pub fn matrix_row(&self, q: usize) -> u64 {
        self.matrix[q]
    }

    /// Qubit bit pattern storing the given occupation pattern (bit `j` = `n_j`).
    pub fn encode_occupations(&self, occupations: usize) -> usize {
        (0..self.n_modes).fold(0, |acc, q| {
            let parity = (self.matrix[q] & occupations as u64).count_ones() % 2;
            acc | ((parity as usize) << q)
        })
    }

    /// Image of a single ladder operator.
    pub fn ladder_image(&self, op: LadderOp) -> Result<PauliSum> {
        let terms = self.ladder_terms(op)?;
        PauliSum::from_terms(self.n_modes, terms.into_iter().map(|(p, c)| (c, p)))
    }

    fn ladder_terms(&self, op: LadderOp) -> Result<[(PauliString, Complex64); 2]> {
        let j = op.mode;
        if j >= self.n_modes {
            return Err(Error::ModeOutOfRange {
                index: j,
                n_modes: self.n_modes,
            });
        }
        let sets = &self.sets.modes[j];
        let x_part = sets
            .update
            .iter()
            .map(|&q| (q, Pauli::X))
            .chain(std::iter::once((j, Pauli::X)))
            .chain(sets.parity.iter().map(|&q| (q, Pauli::Z)));
        let y_part = sets
            .update
            .iter()
            .map(|&q| (q, Pauli::X))
            .chain(std::iter::once((j, Pauli::Y)))
            .chain(sets.remainder().into_iter().map(|q| (q, Pauli::Z)));
        let y_sign = if op.dagger { -0.5 } else { 0.5 };
        Ok([
            (PauliString::from_factors(x_part)?, Complex64::new(0.5, 0.0)),
            (PauliString::from_factors(y_part)?, Complex64::new(0.0, y_sign)),
        ])
    }

    /// Maps a fermionic operator to a simplified Pauli sum.
    pub fn map_operator(&self, f: &FermionOperator) -> Result<PauliSum> {
        if f.n_modes() != self.n_modes {
            return Err(Error::ModeMismatch {
                operator: f.n_modes(),
                encoding: self.n_modes,
            });
        }
        let mut images = std::collections::HashMap::new();
        let mut out = PauliSum::zero(self.n_modes);
        for (ops, coefficient) in f.iter() {
            let mut acc = vec![(PauliString::identity(), coefficient)];
            for &op in ops {
                if let std::collections::hash_map::Entry::Vacant(slot) = images.entry(op) {
                    slot.insert(self.ladder_terms(op)?);
                }
                let image = &images[&op];
                let mut next = Vec::with_capacity(acc.len() * 2);
                for (p, c) in &acc {
                    for (q, d) in image {
                        let (phase, r) = p.product(q);
                        next.push((r, c * d * phase.to_complex()));
                    }
                }
                acc = next;
            }
            for (p, c) in acc {
                out.add_term(c, p)?;
            }
        }
        Ok(out.simplify_with_tolerance(DEFAULT_DROP_TOLERANCE))
    }

    /// Image of the total number operator `sum_j a_j^dagger a_j`.
    pub fn number_operator(&self) -> Result<PauliSum> {
        let mut f = FermionOperator::zero(self.n_modes);
        for j in 0..self.n_modes {
            f.add_term(
                Complex64::new(1.0, 0.0),
                vec![LadderOp::create(j), LadderOp::annihilate(j)],
            )?;
        }
        self.map_operator(&f)
    }
}

pub fn map_operator(f: &FermionOperator, scheme: &EncodingScheme) -> Result<PauliSum> {
    scheme.map_operator(f)
}

fn bit(row: u64, col: usize) -> bool {
    (row >> col) & 1 == 1
}

fn encoding_matrix(kind: EncodingKind, n: usize) -> Vec<u64> {
    (0..n)
        .map(|q| match kind {
            EncodingKind::JordanWigner => 1u64 << q,
            EncodingKind::Parity => low_mask(q + 1),
            EncodingKind::BravyiKitaev => {
                // Fenwick node q+1 covers (q+1 - lowbit(q+1), q+1] in 1-based indices.
                let i = q + 1;
                let lowbit = i & i.wrapping_neg();
                low_mask(i) & !low_mask(i - lowbit)
            }
        })
        .collect()
}

fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Inverse over GF(2) of a lower-triangular matrix with unit diagonal.
fn invert_unit_lower(matrix: &[u64]) -> Vec<u64> {
    let n = matrix.len();
    let mut inverse: Vec<u64> = vec![0; n];
    for i in 0..n {
        // row i of B^{-1}: e_i + sum_{k<i} B[i][k] * row k of B^{-1}
        let mut row = 1u64 << i;
        for (k, inv_k) in inverse.iter().enumerate().take(i) {
            if bit(matrix[i], k) {
                row ^= inv_k;
            }
        }
        inverse[i] = row;
    }
    inverse
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::parse_ladder_ops;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ops(n: usize, text: &str) -> FermionOperator {
        FermionOperator::from_term(n, c(1.0, 0.0), parse_ladder_ops(text).unwrap()).unwrap()
    }

    #[test]
    fn bk_sets_for_four_modes() {
        let sets = build_bk_sets(4).unwrap();
        assert_eq!(sets.mode(0).update, set(&[1, 3]));
        assert!(sets.mode(0).parity.is_empty());
        assert!(sets.mode(0).flip.is_empty());
        assert_eq!(sets.mode(3).parity, set(&[1, 2]));
        assert_eq!(sets.mode(3).flip, set(&[1, 2]));
        assert!(sets.mode(3).update.is_empty());
    }

    #[test]
    fn single_mode_sets_are_empty() {
        for kind in EncodingKind::ALL {
            let sets = index_sets(kind, 1).unwrap();
            assert_eq!(sets.mode(0), &ModeSets::default());
        }
    }

    #[test]
    fn jw_creation_image() {
        let jw = EncodingScheme::new(EncodingKind::JordanWigner, 1).unwrap();
        let image = jw.map_operator(&ops(1, "0^")).unwrap();
        let expected = PauliSum::from_terms(
            1,
            [(c(0.5, 0.0), "X0".parse().unwrap()), (c(0.0, -0.5), "Y0".parse().unwrap())],
        )
        .unwrap();
        assert_eq!(image, expected);
        let bk = EncodingScheme::new(EncodingKind::BravyiKitaev, 1).unwrap();
        assert_eq!(bk.map_operator(&ops(1, "0^")).unwrap(), expected);
    }

    #[test]
    fn jw_number_operator() {
        let jw = EncodingScheme::new(EncodingKind::JordanWigner, 2).unwrap();
        let n0 = jw.map_operator(&ops(2, "0^ 0")).unwrap();
        let expected = PauliSum::from_terms(
            2,
            [(c(0.5, 0.0), PauliString::identity()), (c(-0.5, 0.0), "Z0".parse().unwrap())],
        )
        .unwrap();
        assert_eq!(n0, expected);
    }

    #[test]
    fn parity_sets() {
        let sets = index_sets(EncodingKind::Parity, 4).unwrap();
        assert_eq!(sets.mode(2).update, set(&[3]));
        assert_eq!(sets.mode(2).parity, set(&[1]));
        assert_eq!(sets.mode(2).flip, set(&[1]));
        assert!(sets.mode(2).remainder().is_empty());
    }

    #[test]
    fn occupation_encoding() {
        let bk = EncodingScheme::new(EncodingKind::BravyiKitaev, 4).unwrap();
        // modes 0,1 occupied: q0 = n0, q1 = n0+n1, q2 = n2, q3 = n0+..+n3
        assert_eq!(bk.encode_occupations(0b0011), 0b0001);
        let parity = EncodingScheme::new(EncodingKind::Parity, 4).unwrap();
        assert_eq!(parity.encode_occupations(0b0101), 0b0011);
        let jw = EncodingScheme::new(EncodingKind::JordanWigner, 4).unwrap();
        assert_eq!(jw.encode_occupations(0b0101), 0b0101);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let jw = EncodingScheme::new(EncodingKind::JordanWigner, 2).unwrap();
        assert!(matches!(jw.map_operator(&ops(3, "2^")), Err(Error::ModeMismatch { .. })));
        assert!(EncodingScheme::new(EncodingKind::Parity, 0).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("BK".parse::<EncodingKind>().unwrap(), EncodingKind::BravyiKitaev);
        assert!("ternary".parse::<EncodingKind>().is_err());
    }
}

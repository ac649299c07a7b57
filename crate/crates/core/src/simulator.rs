//! Dense state-vector and density-matrix simulation.
//!
//! Qubit `q` is bit `q` of a basis index. Rotations are `exp(-i theta P / 2)`.
//! Noise channels are applied exactly as Kraus maps after each gate.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ansatz::{Gate, GateProgram};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};

pub const STATEVECTOR_LIMIT: usize = 20;
pub const DENSITY_MATRIX_LIMIT: usize = 10;
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// SplitMix64 finalizer; maps `(base, index)` to a well-mixed stream seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_size(what: &'static str, n_qubits: usize, limit: usize) -> Result<()> {
    if n_qubits > limit {
        return Err(Error::SizeLimit { what, n_qubits, limit });
    }
    Ok(())
}

fn check_program(program: &GateProgram) -> Result<()> {
    for gate in &program.gates {
        let top = match gate {
            Gate::X(q) => Some(*q),
            Gate::Rotation { generator, .. } => generator.max_qubit(),
        };
        if let Some(q) = top.filter(|&q| q >= program.n_qubits) {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: program.n_qubits,
            });
        }
    }
    Ok(())
}

/// Applies a `2^k x 2^k` operator on `qubits` (bit `i` of the local index is
/// `qubits[i]`) to every column of `target`, or to every row from the right
/// as `target * op^dagger` when `adjoint_right` is set.
fn apply_local(target: &mut DMatrix<Complex64>, op: &DMatrix<Complex64>, qubits: &[usize], adjoint_right: bool) {
    let d = 1usize << qubits.len();
    let mask: usize = qubits.iter().map(|q| 1 << q).sum();
    let offsets: Vec<usize> = (0..d)
        .map(|s| qubits.iter().enumerate().filter(|(i, _)| s >> i & 1 == 1).map(|(_, q)| 1 << q).sum())
        .collect();
    let (dim, others) = if adjoint_right {
        (target.ncols(), target.nrows())
    } else {
        (target.nrows(), target.ncols())
    };
    let mut buf = vec![ZERO; d];
    for base in (0..dim).filter(|b| b & mask == 0) {
        for other in 0..others {
            for (s, slot) in buf.iter_mut().enumerate() {
                *slot = (0..d)
                    .map(|t| {
                        if adjoint_right {
                            target[(other, base + offsets[t])] * op[(s, t)].conj()
                        } else {
                            op[(s, t)] * target[(base + offsets[t], other)]
                        }
                    })
                    .sum();
            }
            for (s, &v) in buf.iter().enumerate() {
                if adjoint_right {
                    target[(other, base + offsets[s])] = v;
                } else {
                    target[(base + offsets[s], other)] = v;
                }
            }
        }
    }
}

/// Unitary taking the eigenbasis of `pauli` to the computational basis.
fn basis_change(pauli: Pauli) -> DMatrix<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match pauli {
        Pauli::Z => DMatrix::identity(2, 2),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[ONE * h, ONE * h, ONE * h, -ONE * h]),
        // H S^dagger
        Pauli::Y => DMatrix::from_row_slice(
            2,
            2,
            &[ONE * h, Complex64::new(0.0, -h), ONE * h, Complex64::new(0.0, h)],
        ),
    }
}

/// `P|b> = phase[b] |target[b]>` over a `dim`-dimensional register.
fn pauli_permutation(string: &PauliString, dim: usize) -> (Vec<usize>, Vec<Complex64>) {
    let action = string.basis_action();
    (0..dim).map(|b| action.apply(b)).unzip()
}

/// `P rho P` for a Pauli string `P`.
fn conjugate_by_pauli(rho: &DMatrix<Complex64>, string: &PauliString) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let (target, phase) = pauli_permutation(string, dim);
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            out[(target[i], target[j])] = phase[i] * rho[(i, j)] * phase[j].conj();
        }
    }
    out
}

/// Common interface of pure and mixed states for expectation values and
/// sampling.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;

    /// `<P>` for a single Pauli string.
    fn pauli_expectation(&self, string: &PauliString) -> Complex64;

    /// Outcome distribution after rotating each listed qubit into the
    /// eigenbasis of its Pauli.
    fn measurement_probabilities(&self, bases: &[(usize, Pauli)]) -> Vec<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size("state vector", n_qubits, STATEVECTOR_LIMIT)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = amplitudes.len().trailing_zeros() as usize;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::InvalidRequest(format!(
                "{} amplitudes is not a power of two",
                amplitudes.len()
            )));
        }
        let state = StateVector { n_qubits, amplitudes };
        if (state.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidRequest(format!("state norm {} is not 1", state.norm())));
        }
        Ok(state)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_x(&mut self, qubit: usize) {
        let bit = 1 << qubit;
        for b in (0..self.amplitudes.len()).filter(|b| b & bit == 0) {
            self.amplitudes.swap(b, b | bit);
        }
    }

    pub fn apply_rotation(&mut self, angle: f64, generator: &PauliString) {
        let (s, c) = (angle / 2.0).sin_cos();
        let action = generator.basis_action();
        let mut out: Vec<Complex64> = self.amplitudes.iter().map(|a| a * c).collect();
        let minus_i_sin = Complex64::new(0.0, -s);
        for (b, &amp) in self.amplitudes.iter().enumerate() {
            let (target, phase) = action.apply(b);
            out[target] += minus_i_sin * phase * amp;
        }
        self.amplitudes = out;
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        check_size("density matrix", self.n_qubits, DENSITY_MATRIX_LIMIT)?;
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        Ok(DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: &v * v.adjoint(),
        })
    }
}

impl QuantumState for StateVector {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn pauli_expectation(&self, string: &PauliString) -> Complex64 {
        let action = string.basis_action();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(b, &amp)| {
                let (target, phase) = action.apply(b);
                self.amplitudes[target].conj() * phase * amp
            })
            .sum()
    }

    fn measurement_probabilities(&self, bases: &[(usize, Pauli)]) -> Vec<f64> {
        let mut column = DMatrix::from_column_slice(self.amplitudes.len(), 1, &self.amplitudes);
        for &(q, p) in bases.iter().filter(|(_, p)| *p != Pauli::Z) {
            apply_local(&mut column, &basis_change(p), &[q], false);
        }
        column.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        StateVector::zero(n_qubits)?.to_density_matrix()
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_size("density matrix", n_qubits, DENSITY_MATRIX_LIMIT)?;
        let dim = 1 << n_qubits;
        Ok(DensityMatrix {
            n_qubits,
            matrix: DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0),
        })
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n_qubits = matrix.nrows().trailing_zeros() as usize;
        if !matrix.is_square() || matrix.nrows() != 1 << n_qubits {
            return Err(Error::InvalidRequest("density matrix must be 2^n x 2^n".into()));
        }
        check_size("density matrix", n_qubits, DENSITY_MATRIX_LIMIT)?;
        Ok(DensityMatrix { n_qubits, matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn apply_unitary_local(&mut self, u: &DMatrix<Complex64>, qubits: &[usize]) {
        apply_local(&mut self.matrix, u, qubits, false);
        apply_local(&mut self.matrix, u, qubits, true);
    }

    pub fn apply_x(&mut self, qubit: usize) {
        self.matrix = conjugate_by_pauli(&self.matrix, &PauliString::single(qubit, Pauli::X));
    }

    /// `U rho U^dagger` with `U = c - i s P`, using
    /// `(P rho)[i, j] = ph(t(i)) rho[t(i), j]` for `P|b> = ph(b)|t(b)>`.
    pub fn apply_rotation(&mut self, angle: f64, generator: &PauliString) {
        let (s, c) = (angle / 2.0).sin_cos();
        let (target, phase) = pauli_permutation(generator, self.matrix.nrows());
        let rho = &self.matrix;
        let dim = rho.nrows();
        let ics = Complex64::new(0.0, c * s);
        self.matrix = DMatrix::from_fn(dim, dim, |i, j| {
            let (ti, tj) = (target[i], target[j]);
            let p_rho = phase[ti] * rho[(ti, j)];
            let rho_p = rho[(i, tj)] * phase[j];
            let p_rho_p = phase[ti] * rho[(ti, tj)] * phase[j];
            rho[(i, j)] * (c * c) + ics * (rho_p - p_rho) + p_rho_p * (s * s)
        });
    }

    fn check_channel_target(&self, channel: &Channel, qubits: &[usize]) -> Result<()> {
        channel.validate()?;
        if qubits.len() != channel.arity() {
            return Err(Error::Noise(format!(
                "{} acts on {} qubits, got {}",
                channel.name(),
                channel.arity(),
                qubits.len()
            )));
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::Noise(format!("{} on a repeated qubit", channel.name())));
        }
        Ok(())
    }

    /// Applies a channel through its Pauli mixture or, for amplitude
    /// damping, its closed form.
    pub fn apply_channel(&mut self, channel: &Channel, qubits: &[usize]) -> Result<()> {
        self.check_channel_target(channel, qubits)?;
        if channel.channel == ChannelKind::AmplitudeDamping {
            let gamma = channel.rate;
            let bit = 1usize << qubits[0];
            let keep = (1.0 - gamma).sqrt();
            let rho = &self.matrix;
            let dim = rho.nrows();
            self.matrix = DMatrix::from_fn(dim, dim, |i, j| {
                let f = |b: usize| if b & bit == 0 { 1.0 } else { keep };
                let mut v = rho[(i, j)] * (f(i) * f(j));
                if i & bit == 0 && j & bit == 0 {
                    v += rho[(i | bit, j | bit)] * gamma;
                }
                v
            });
            return Ok(());
        }
        let mut out = DMatrix::<Complex64>::zeros(self.matrix.nrows(), self.matrix.ncols());
        for (string, weight) in channel.pauli_mixture(qubits) {
            if weight == 0.0 {
                continue;
            }
            if string.is_identity() {
                out += &self.matrix * Complex64::new(weight, 0.0);
            } else {
                out += conjugate_by_pauli(&self.matrix, &string) * Complex64::new(weight, 0.0);
            }
        }
        self.matrix = out;
        Ok(())
    }

    /// Reference path: `sum_k K rho K^dagger` over the channel's Kraus set.
    pub fn apply_kraus(&mut self, channel: &Channel, qubits: &[usize]) -> Result<()> {
        self.check_channel_target(channel, qubits)?;
        let mut out = DMatrix::<Complex64>::zeros(self.matrix.nrows(), self.matrix.ncols());
        for k in channel.kraus() {
            let mut term = self.matrix.clone();
            apply_local(&mut term, &k, qubits, false);
            apply_local(&mut term, &k, qubits, true);
            out += term;
        }
        self.matrix = out;
        Ok(())
    }

    /// Smallest eigenvalue, for positivity checks.
    pub fn min_eigenvalue(&self) -> f64 {
        let hermitian = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        nalgebra::SymmetricEigen::new(hermitian)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl QuantumState for DensityMatrix {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn pauli_expectation(&self, string: &PauliString) -> Complex64 {
        // Tr(rho P) = sum_b rho[b, t(b)] phase(b)
        let action = string.basis_action();
        (0..self.matrix.nrows())
            .map(|b| {
                let (t, phase) = action.apply(b);
                self.matrix[(b, t)] * phase
            })
            .sum()
    }

    fn measurement_probabilities(&self, bases: &[(usize, Pauli)]) -> Vec<f64> {
        let mut rotated = self.clone();
        for &(q, p) in bases.iter().filter(|(_, p)| *p != Pauli::Z) {
            rotated.apply_unitary_local(&basis_change(p), &[q]);
        }
        rotated.matrix.diagonal().iter().map(|z| z.re.max(0.0)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    BitFlip,
    Dephasing,
    #[serde(rename = "depolarizing_1q")]
    Depolarizing1q,
    #[serde(rename = "depolarizing_2q")]
    Depolarizing2q,
    AmplitudeDamping,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub channel: ChannelKind,
    pub rate: f64,
}

impl Channel {
    pub fn new(channel: ChannelKind, rate: f64) -> Result<Self> {
        let c = Channel { channel, rate };
        c.validate()?;
        Ok(c)
    }

    pub fn name(&self) -> &'static str {
        match self.channel {
            ChannelKind::BitFlip => "bit_flip",
            ChannelKind::Dephasing => "dephasing",
            ChannelKind::Depolarizing1q => "depolarizing_1q",
            ChannelKind::Depolarizing2q => "depolarizing_2q",
            ChannelKind::AmplitudeDamping => "amplitude_damping",
        }
    }

    pub fn arity(&self) -> usize {
        if self.channel == ChannelKind::Depolarizing2q { 2 } else { 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::Noise(format!(
                "{} rate {} outside [0, 1]",
                self.name(),
                self.rate
            )));
        }
        Ok(())
    }

    pub fn kraus(&self) -> Vec<DMatrix<Complex64>> {
        let p = self.rate;
        let pauli = |x: Option<Pauli>| match x {
            None => DMatrix::<Complex64>::identity(2, 2),
            Some(x) => {
                let m = x.matrix();
                DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
            }
        };
        let scaled = |m: DMatrix<Complex64>, w: f64| m * Complex64::new(w.sqrt(), 0.0);
        match self.channel {
            ChannelKind::BitFlip => vec![scaled(pauli(None), 1.0 - p), scaled(pauli(Some(Pauli::X)), p)],
            ChannelKind::Dephasing => vec![scaled(pauli(None), 1.0 - p), scaled(pauli(Some(Pauli::Z)), p)],
            ChannelKind::Depolarizing1q => {
                let mut ks = vec![scaled(pauli(None), 1.0 - 0.75 * p)];
                ks.extend(Pauli::ALL.map(|x| scaled(pauli(Some(x)), p / 4.0)));
                ks
            }
            ChannelKind::Depolarizing2q => {
                let single = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];
                let mut ks = Vec::with_capacity(16);
                for &b in &single {
                    for &a in &single {
                        // Local index bit 0 is the first qubit: kron(second, first).
                        let m = pauli(b).kronecker(&pauli(a));
                        let w = if a.is_none() && b.is_none() { 1.0 - 15.0 * p / 16.0 } else { p / 16.0 };
                        ks.push(scaled(m, w));
                    }
                }
                ks
            }
            ChannelKind::AmplitudeDamping => vec![
                DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE * (1.0 - p).sqrt()]),
                DMatrix::from_row_slice(2, 2, &[ZERO, ONE * p.sqrt(), ZERO, ZERO]),
            ],
        }
    }

    /// Weights of the Pauli strings whose conjugations make up the channel.
    /// Amplitude damping is not a Pauli channel and yields an empty list.
    pub fn pauli_mixture(&self, qubits: &[usize]) -> Vec<(PauliString, f64)> {
        let p = self.rate;
        let on = |q: usize, x: Pauli| PauliString::single(q, x);
        match self.channel {
            ChannelKind::BitFlip => vec![(PauliString::identity(), 1.0 - p), (on(qubits[0], Pauli::X), p)],
            ChannelKind::Dephasing => vec![(PauliString::identity(), 1.0 - p), (on(qubits[0], Pauli::Z), p)],
            ChannelKind::Depolarizing1q => {
                let mut mix = vec![(PauliString::identity(), 1.0 - 0.75 * p)];
                mix.extend(Pauli::ALL.map(|x| (on(qubits[0], x), p / 4.0)));
                mix
            }
            ChannelKind::Depolarizing2q => {
                let single = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];
                let mut mix = Vec::with_capacity(16);
                for a in single {
                    for b in single {
                        let factors = [(qubits[0], a), (qubits[1], b)]
                            .into_iter()
                            .filter_map(|(q, x)| x.map(|x| (q, x)));
                        let string = PauliString::from_factors(factors).expect("distinct qubits");
                        let w = if string.is_identity() { 1.0 - 15.0 * p / 16.0 } else { p / 16.0 };
                        mix.push((string, w));
                    }
                }
                mix
            }
            ChannelKind::AmplitudeDamping => Vec::new(),
        }
    }

    /// Largest entry of `sum K^dagger K - I`.
    pub fn completeness_error(&self) -> f64 {
        let ks = self.kraus();
        let d = ks[0].nrows();
        let sum = ks.iter().fold(DMatrix::<Complex64>::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        (sum - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Channels attached to each gate class. One-qubit channels act on every
/// qubit the gate touches; `depolarizing_2q` acts on consecutive pairs of a
/// multi-qubit rotation's support (the CNOT ladder of its usual
/// decomposition).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub state_prep: Vec<Channel>,
    #[serde(default)]
    pub single_qubit_rotation: Vec<Channel>,
    #[serde(default)]
    pub multi_qubit_rotation: Vec<Channel>,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        NoiseSpec::default()
    }

    /// Bit flip on state preparation; 1q depolarizing, dephasing and damping
    /// at 1e-3; 2q depolarizing at 1e-2.
    pub fn default_rates() -> Self {
        let ch = |channel, rate| Channel { channel, rate };
        NoiseSpec {
            seed: 0,
            state_prep: vec![ch(ChannelKind::BitFlip, 1e-3)],
            single_qubit_rotation: vec![
                ch(ChannelKind::Depolarizing1q, 1e-3),
                ch(ChannelKind::AmplitudeDamping, 1e-3),
            ],
            multi_qubit_rotation: vec![
                ch(ChannelKind::Depolarizing2q, 1e-2),
                ch(ChannelKind::Dephasing, 1e-3),
                ch(ChannelKind::AmplitudeDamping, 1e-3),
            ],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: NoiseSpec = toml::from_str(text).map_err(|e| Error::Config(format!("noise spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("noise spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for c in self.state_prep.iter().chain(&self.single_qubit_rotation) {
            c.validate()?;
            if c.arity() != 1 {
                return Err(Error::Noise(format!(
                    "{} cannot follow a single-qubit gate",
                    c.name()
                )));
            }
        }
        for c in &self.multi_qubit_rotation {
            c.validate()?;
        }
        Ok(())
    }

    /// Every rate scaled by `factor` (clamped to 1).
    pub fn scaled(&self, factor: f64) -> NoiseSpec {
        let scale = |cs: &[Channel]| {
            cs.iter()
                .map(|c| Channel { channel: c.channel, rate: (c.rate * factor).min(1.0) })
                .collect()
        };
        NoiseSpec {
            seed: self.seed,
            state_prep: scale(&self.state_prep),
            single_qubit_rotation: scale(&self.single_qubit_rotation),
            multi_qubit_rotation: scale(&self.multi_qubit_rotation),
        }
    }

    fn apply_after(&self, rho: &mut DensityMatrix, channels: &[Channel], support: &[usize]) -> Result<()> {
        for c in channels {
            if c.arity() == 1 {
                for &q in support {
                    rho.apply_channel(c, &[q])?;
                }
            } else {
                for pair in support.windows(2) {
                    rho.apply_channel(c, pair)?;
                }
            }
        }
        Ok(())
    }
}

pub fn run_statevector(program: &GateProgram) -> Result<StateVector> {
    check_program(program)?;
    let mut state = StateVector::zero(program.n_qubits)?;
    for gate in &program.gates {
        match gate {
            Gate::X(q) => state.apply_x(*q),
            Gate::Rotation { angle, generator } => state.apply_rotation(*angle, generator),
        }
    }
    Ok(state)
}

pub fn run_noisy(program: &GateProgram, noise: &NoiseSpec) -> Result<DensityMatrix> {
    check_program(program)?;
    noise.validate()?;
    let mut rho = DensityMatrix::zero(program.n_qubits)?;
    for gate in &program.gates {
        match gate {
            Gate::X(q) => {
                rho.apply_x(*q);
                noise.apply_after(&mut rho, &noise.state_prep, &[*q])?;
            }
            Gate::Rotation { angle, generator } => {
                rho.apply_rotation(*angle, generator);
                let support: Vec<usize> = generator.support().collect();
                let channels = if support.len() > 1 {
                    &noise.multi_qubit_rotation
                } else {
                    &noise.single_qubit_rotation
                };
                noise.apply_after(&mut rho, channels, &support)?;
            }
        }
    }
    Ok(rho)
}

fn check_observable(state_qubits: usize, h: &PauliSum) -> Result<()> {
    if h.n_qubits() != state_qubits {
        return Err(Error::QubitMismatch {
            left: state_qubits,
            right: h.n_qubits(),
        });
    }
    let imaginary = h.max_imaginary();
    if imaginary > IMAGINARY_TOLERANCE {
        return Err(Error::NonHermitian(imaginary));
    }
    Ok(())
}

pub fn expectation_exact<S: QuantumState + ?Sized>(state: &S, h: &PauliSum) -> Result<f64> {
    check_observable(state.n_qubits(), h)?;
    let value: Complex64 = h.iter().map(|(s, c)| c * state.pauli_expectation(s)).sum();
    if value.im.abs() > IMAGINARY_TOLERANCE * (1.0 + value.re.abs()) {
        return Err(Error::NonHermitian(value.im.abs()));
    }
    Ok(value.re)
}

/// Terms sharing a measurement basis.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementGroup {
    pub basis: Vec<(usize, Pauli)>,
    pub terms: Vec<(PauliString, f64)>,
}

/// Greedy qubit-wise-commuting grouping in canonical term order. The
/// identity term is left out.
pub fn group_qubitwise(h: &PauliSum) -> Vec<MeasurementGroup> {
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    for (string, c) in h.iter().filter(|(s, _)| !s.is_identity()) {
        let fits = |g: &MeasurementGroup| {
            string.factors().iter().all(|&(q, p)| {
                g.basis.iter().find(|(bq, _)| *bq == q).is_none_or(|&(_, bp)| bp == p)
            })
        };
        match groups.iter_mut().find(|g| fits(g)) {
            Some(g) => {
                for &(q, p) in string.factors() {
                    if !g.basis.iter().any(|(bq, _)| *bq == q) {
                        g.basis.push((q, p));
                    }
                }
                g.basis.sort_by_key(|(q, _)| *q);
                g.terms.push((string.clone(), c.re));
            }
            None => groups.push(MeasurementGroup {
                basis: string.factors().to_vec(),
                terms: vec![(string.clone(), c.re)],
            }),
        }
    }
    groups
}

/// Multinomial sample of `shots` outcomes as sequential binomials.
fn sample_counts(probabilities: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probabilities.len()];
    let mut remaining = shots;
    let mut mass: f64 = probabilities.iter().sum();
    for (i, &p) in probabilities.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probabilities.len() || mass <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Shot-based estimate: every measurement group gets `shots` samples. The
/// standard error combines the per-group sample variances.
pub fn expectation_sampled<S: QuantumState + ?Sized>(
    state: &S,
    h: &PauliSum,
    shots: u64,
    seed: u64,
) -> Result<SampledEstimate> {
    check_observable(state.n_qubits(), h)?;
    if shots == 0 {
        return Err(Error::InvalidRequest("shots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = h.identity_coefficient().re;
    let mut variance = 0.0;
    for group in group_qubitwise(h) {
        let probabilities = state.measurement_probabilities(&group.basis);
        let counts = sample_counts(&probabilities, shots, &mut rng);
        let masks: Vec<(usize, f64)> = group
            .terms
            .iter()
            .map(|(s, c)| (s.support().map(|q| 1usize << q).sum(), *c))
            .collect();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for (outcome, &n) in counts.iter().enumerate().filter(|(_, &n)| n > 0) {
            let value: f64 = masks
                .iter()
                .map(|&(mask, c)| if (outcome & mask).count_ones() % 2 == 0 { c } else { -c })
                .sum();
            sum += n as f64 * value;
            sum_sq += n as f64 * value * value;
        }
        let n = shots as f64;
        let group_mean = sum / n;
        mean += group_mean;
        if shots > 1 {
            let sample_var = ((sum_sq - n * group_mean * group_mean) / (n - 1.0)).max(0.0);
            variance += sample_var / n;
        }
    }
    Ok(SampledEstimate {
        mean,
        stderr: variance.sqrt(),
    })
}

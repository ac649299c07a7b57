//! UCCSD and k-UpCCGSD circuits as lists of Pauli rotations.
//!
//! Every excitation contributes an anti-Hermitian generator `G = T - T^dagger`.
//! Its qubit image is `sum_k i a_k P_k` with real `a_k`, and `exp(theta G)` is
//! realized as one rotation `exp(-i phi P_k / 2)` per string with
//! `phi = -2 a_k theta`. The strings of a single excitation commute, so this is
//! exact per excitation; only the product over excitations is Trotterized.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodingScheme;
use crate::error::{Error, Result};
use crate::fermion::{spin_of, spin_orbital, FermionOperator, LadderOp, Spin};
use crate::pauli::PauliString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationKind {
    Single,
    Double,
    PairedDouble,
    GeneralizedSingle,
}

/// One fermionic excitation `T`. For singles `modes = [from, to]`; for
/// doubles `modes = [i, j, a, b]` and `T = a+_b a_j a+_a a_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationTerm {
    pub kind: ExcitationKind,
    pub modes: Vec<usize>,
    pub parameter_id: usize,
}

impl ExcitationTerm {
    pub fn operator(&self, n_modes: usize) -> Result<FermionOperator> {
        let one = Complex64::new(1.0, 0.0);
        let ops = match self.modes.as_slice() {
            &[i, a] => vec![LadderOp::create(a), LadderOp::annihilate(i)],
            &[i, j, a, b] => vec![
                LadderOp::create(b),
                LadderOp::annihilate(j),
                LadderOp::create(a),
                LadderOp::annihilate(i),
            ],
            other => {
                return Err(Error::Ansatz(format!("excitation with {} modes", other.len())))
            }
        };
        FermionOperator::from_term(n_modes, one, ops)
    }

    /// `T - T^dagger`, normal ordered.
    pub fn generator(&self, n_modes: usize) -> Result<FermionOperator> {
        let t = self.operator(n_modes)?;
        Ok(t.sub(&t.hermitian_conjugate())?.normal_order())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationGate {
    pub generator: PauliString,
    pub parameter_id: usize,
    /// Rotation angle is `multiplier * theta[parameter_id]`.
    pub multiplier: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzCircuit {
    pub n_qubits: usize,
    pub n_electrons: usize,
    /// Encoded reference state; bit `q` set means an X gate on qubit `q`.
    pub reference_state: usize,
    pub excitations: Vec<ExcitationTerm>,
    pub gates: Vec<RotationGate>,
    pub n_parameters: usize,
}

impl AnsatzCircuit {
    pub fn reference_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_qubits).filter(|q| self.reference_state >> q & 1 == 1)
    }

    /// Gate count of the compiled program, reference preparation included.
    pub fn gate_count(&self) -> usize {
        self.reference_state.count_ones() as usize + self.gates.len()
    }
}

fn check_electrons(n_modes: usize, n_electrons: usize) -> Result<()> {
    if !n_modes.is_multiple_of(2) {
        return Err(Error::Ansatz(format!("{n_modes} spin orbitals is not an even count")));
    }
    if !n_electrons.is_multiple_of(2) {
        return Err(Error::Ansatz(format!(
            "{n_electrons} electrons; a closed-shell reference needs an even count"
        )));
    }
    if n_electrons > n_modes {
        return Err(Error::Ansatz(format!(
            "{n_electrons} electrons do not fit in {n_modes} spin orbitals"
        )));
    }
    Ok(())
}

fn compile(
    scheme: &EncodingScheme,
    n_electrons: usize,
    excitations: Vec<ExcitationTerm>,
    n_parameters: usize,
) -> Result<AnsatzCircuit> {
    let n_modes = scheme.n_modes();
    let mut gates = Vec::new();
    for ex in &excitations {
        let image = scheme.map_operator(&ex.generator(n_modes)?)?;
        for (string, c) in image.iter() {
            if c.re.abs() > 1e-10 {
                return Err(Error::Ansatz(format!(
                    "generator image has real coefficient {} on {string}",
                    c.re
                )));
            }
            gates.push(RotationGate {
                generator: string.clone(),
                parameter_id: ex.parameter_id,
                multiplier: -2.0 * c.im,
            });
        }
    }
    let occupations = if n_electrons == 0 { 0 } else { (1usize << n_electrons) - 1 };
    Ok(AnsatzCircuit {
        n_qubits: scheme.n_qubits(),
        n_electrons,
        reference_state: scheme.encode_occupations(occupations),
        excitations,
        gates,
        n_parameters,
    })
}

/// Spin-conserving singles and `S_z`-conserving doubles from the
/// closed-shell reference. With `spin_symmetrize`, the alpha and beta singles
/// between the same spatial pair share a parameter.
pub fn build_uccsd(
    n_modes: usize,
    n_electrons: usize,
    scheme: &EncodingScheme,
    spin_symmetrize: bool,
) -> Result<AnsatzCircuit> {
    check_electrons(n_modes, n_electrons)?;
    if scheme.n_modes() != n_modes {
        return Err(Error::ModeMismatch {
            operator: n_modes,
            encoding: scheme.n_modes(),
        });
    }
    let occupied: Vec<usize> = (0..n_electrons).collect();
    let virtual_: Vec<usize> = (n_electrons..n_modes).collect();
    let mut excitations = Vec::new();
    let mut n_parameters = 0;

    let mut shared: Vec<((usize, usize), usize)> = Vec::new();
    for &i in &occupied {
        for &a in &virtual_ {
            if spin_of(i) != spin_of(a) {
                continue;
            }
            let key = (i / 2, a / 2);
            let parameter_id = match shared.iter().find(|(k, _)| spin_symmetrize && *k == key) {
                Some(&(_, id)) => id,
                None => {
                    shared.push((key, n_parameters));
                    n_parameters += 1;
                    n_parameters - 1
                }
            };
            excitations.push(ExcitationTerm {
                kind: ExcitationKind::Single,
                modes: vec![i, a],
                parameter_id,
            });
        }
    }

    let sz = |m: usize| if spin_of(m) == Spin::Alpha { 1 } else { -1 };
    for (x, &i) in occupied.iter().enumerate() {
        for &j in &occupied[x + 1..] {
            for (y, &a) in virtual_.iter().enumerate() {
                for &b in &virtual_[y + 1..] {
                    if sz(i) + sz(j) != sz(a) + sz(b) {
                        continue;
                    }
                    excitations.push(ExcitationTerm {
                        kind: ExcitationKind::Double,
                        modes: vec![i, j, a, b],
                        parameter_id: n_parameters,
                    });
                    n_parameters += 1;
                }
            }
        }
    }
    compile(scheme, n_electrons, excitations, n_parameters)
}

/// `k` layers of generalized singles and paired doubles, each layer with its
/// own parameter block.
pub fn build_kupccgsd(
    n_modes: usize,
    n_electrons: usize,
    k: usize,
    scheme: &EncodingScheme,
) -> Result<AnsatzCircuit> {
    if k == 0 {
        return Err(Error::Ansatz("k-UpCCGSD needs at least one layer".into()));
    }
    check_electrons(n_modes, n_electrons)?;
    if scheme.n_modes() != n_modes {
        return Err(Error::ModeMismatch {
            operator: n_modes,
            encoding: scheme.n_modes(),
        });
    }
    let n_spatial = n_modes / 2;
    let mut excitations = Vec::new();
    let mut n_parameters = 0;
    for _ in 0..k {
        for p in 0..n_spatial {
            for q in p + 1..n_spatial {
                for spin in [Spin::Alpha, Spin::Beta] {
                    excitations.push(ExcitationTerm {
                        kind: ExcitationKind::GeneralizedSingle,
                        modes: vec![spin_orbital(p, spin), spin_orbital(q, spin)],
                        parameter_id: n_parameters,
                    });
                }
                n_parameters += 1;
            }
        }
        for m in 0..n_spatial {
            for n in m + 1..n_spatial {
                // a+_{n,b} a_{m,b} a+_{n,a} a_{m,a} moves the pair m -> n.
                excitations.push(ExcitationTerm {
                    kind: ExcitationKind::PairedDouble,
                    modes: vec![
                        spin_orbital(m, Spin::Alpha),
                        spin_orbital(m, Spin::Beta),
                        spin_orbital(n, Spin::Alpha),
                        spin_orbital(n, Spin::Beta),
                    ],
                    parameter_id: n_parameters,
                });
                n_parameters += 1;
            }
        }
    }
    compile(scheme, n_electrons, excitations, n_parameters)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    X(usize),
    /// `exp(-i angle P / 2)`.
    Rotation { angle: f64, generator: PauliString },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateProgram {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

pub fn bind_and_compile(circuit: &AnsatzCircuit, params: &[f64]) -> Result<GateProgram> {
    if params.len() != circuit.n_parameters {
        return Err(Error::ParameterLength {
            expected: circuit.n_parameters,
            got: params.len(),
        });
    }
    let mut gates: Vec<Gate> = circuit.reference_qubits().map(Gate::X).collect();
    gates.extend(circuit.gates.iter().map(|g| Gate::Rotation {
        angle: g.multiplier * params[g.parameter_id],
        generator: g.generator.clone(),
    }));
    Ok(GateProgram {
        n_qubits: circuit.n_qubits,
        gates,
    })
}

impl fmt::Display for GateProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# n_qubits {}", self.n_qubits)?;
        for gate in &self.gates {
            match gate {
                Gate::X(q) => writeln!(f, "X {q}")?,
                Gate::Rotation { angle, generator } => writeln!(f, "ROT {angle:?} {generator}")?,
            }
        }
        Ok(())
    }
}

impl GateProgram {
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str, source: &Path) -> Result<GateProgram> {
        let err = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut n_qubits = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let words: Vec<&str> = rest.split_whitespace().collect();
                if let ["n_qubits", n] = words.as_slice() {
                    n_qubits = Some(n.parse().map_err(|_| err(line_no, format!("bad qubit count `{n}`")))?);
                }
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["X", q] => gates.push(Gate::X(
                    q.parse().map_err(|_| err(line_no, format!("bad qubit `{q}`")))?,
                )),
                ["ROT", angle, rest @ ..] if !rest.is_empty() => {
                    let angle: f64 = angle
                        .parse()
                        .map_err(|_| err(line_no, format!("bad angle `{angle}`")))?;
                    let generator: PauliString = rest
                        .join(" ")
                        .parse()
                        .map_err(|e: String| err(line_no, e))?;
                    gates.push(Gate::Rotation { angle, generator });
                }
                _ => return Err(err(line_no, format!("unrecognized gate `{line}`"))),
            }
        }
        let needed = gates
            .iter()
            .filter_map(|g| match g {
                Gate::X(q) => Some(q + 1),
                Gate::Rotation { generator, .. } => generator.max_qubit().map(|q| q + 1),
            })
            .max()
            .unwrap_or(0);
        let n_qubits = n_qubits.unwrap_or(needed);
        if needed > n_qubits {
            return Err(Error::QubitOutOfRange {
                index: needed - 1,
                n_qubits,
            });
        }
        Ok(GateProgram { n_qubits, gates })
    }
}

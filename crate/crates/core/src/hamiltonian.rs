//! Electronic Hamiltonians from FCIDUMP-style integral files.
//!
//! # Integral file grammar
//!
//! ```text
//! &FCI NORB=<n>,NELEC=<n>,MS2=<n>,ORBSYM=<list>,ISYM=<n>,
//! &END                                   (or a lone `/`)
//! <value> i j k l                        two-electron (ij|kl), chemists' notation
//! <value> i j 0 0                        one-electron h_ij
//! <value> i 0 0 0                        orbital energy, ignored
//! <value> 0 0 0 0                        core energy (nuclear repulsion + frozen core)
//! ```
//!
//! Indices are 1-based in the file and 0-based everywhere else. Only one
//! representative of each symmetry-equivalent element needs to be present;
//! the rest are filled in, and two listed values that disagree by more than
//! `1e-10` are an error. Header keys other than the five above are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::encoding::{EncodingKind, EncodingScheme};
use crate::error::{Error, Result};
use crate::fermion::{spin_orbital, FermionOperator, LadderOp, Spin};
use crate::pauli::PauliSum;

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// One- and two-electron integrals over real spatial orbitals, in hartree.
#[derive(Clone, Debug, PartialEq)]
pub struct MolecularIntegrals {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i64,
    /// Nuclear repulsion plus any frozen-core constant.
    pub e_core: f64,
    h1: Vec<f64>,
    h2: Vec<f64>,
    pub point_label: String,
}

impl MolecularIntegrals {
    /// Builds integrals from dense tensors (`h1` is `n*n`, `h2` is `n^4` in
    /// chemists' order) and checks their permutational symmetry.
    pub fn new(
        n_spatial: usize,
        n_electrons: usize,
        e_core: f64,
        h1: Vec<f64>,
        h2: Vec<f64>,
        point_label: impl Into<String>,
    ) -> Result<Self> {
        let n = n_spatial;
        if h1.len() != n * n || h2.len() != n * n * n * n {
            return Err(Error::InvalidRequest(format!(
                "integral tensors have {} and {} elements, expected {} and {}",
                h1.len(),
                h2.len(),
                n * n,
                n * n * n * n
            )));
        }
        let ints = MolecularIntegrals {
            n_spatial,
            n_electrons,
            ms2: 0,
            e_core,
            h1,
            h2,
            point_label: point_label.into(),
        };
        ints.validate_symmetry()?;
        Ok(ints)
    }

    #[inline]
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.n_spatial + q]
    }

    /// Chemists' `(pq|rs)`.
    #[inline]
    pub fn h2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.h2[((p * n + q) * n + r) * n + s]
    }

    pub fn validate_symmetry(&self) -> Result<()> {
        let n = self.n_spatial;
        for p in 0..n {
            for q in 0..n {
                if (self.h1(p, q) - self.h1(q, p)).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::Symmetry(format!(
                        "h1[{p}][{q}] = {} but h1[{q}][{p}] = {}",
                        self.h1(p, q),
                        self.h1(q, p)
                    )));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h2(p, q, r, s);
                        for (a, b, c, d) in eightfold(p, q, r, s) {
                            if (self.h2(a, b, c, d) - v).abs() > SYMMETRY_TOLERANCE {
                                return Err(Error::Symmetry(format!(
                                    "({p}{q}|{r}{s}) = {v} but ({a}{b}|{c}{d}) = {}",
                                    self.h2(a, b, c, d)
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Energy of the closed-shell determinant occupying the lowest
    /// `n_electrons / 2` spatial orbitals.
    pub fn closed_shell_energy(&self) -> f64 {
        let occ: Vec<usize> = (0..self.n_electrons / 2).collect();
        self.e_core + frozen_core_energy(self, &occ)
    }
}

fn eightfold(p: usize, q: usize, r: usize, s: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]
}

const KNOWN_HEADER_KEYS: [&str; 5] = ["NORB", "NELEC", "MS2", "ORBSYM", "ISYM"];

pub fn load_integrals(path: impl AsRef<Path>) -> Result<MolecularIntegrals> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_integrals(&text, path, &label)
}

/// Parses integral-file text; `source` is only used in error messages.
pub fn parse_integrals(text: &str, source: &Path, label: &str) -> Result<MolecularIntegrals> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let lines: Vec<&str> = text.lines().collect();
    let first = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| err(1, "empty integral file".into()))?;
    if !lines[first].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(err(first + 1, "expected `&FCI` header".into()));
    }

    // Header runs until `&END` or `/`.
    let mut header = String::new();
    let mut body_start = None;
    for (idx, line) in lines.iter().enumerate().skip(first) {
        let upper = line.trim().to_ascii_uppercase();
        let content = if idx == first {
            upper.trim_start_matches("&FCI").to_string()
        } else {
            upper.clone()
        };
        if let Some(pos) = content.find("&END").or_else(|| content.find('/')) {
            header.push_str(&content[..pos]);
            header.push(',');
            body_start = Some(idx + 1);
            break;
        }
        header.push_str(&content);
        header.push(',');
    }
    let body_start = body_start.ok_or_else(|| err(first + 1, "header is not terminated by &END".into()))?;

    let mut values: BTreeMap<String, Vec<i64>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for token in header.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (key, value) = match token.split_once('=') {
            Some((k, v)) => {
                let k = k.trim().to_string();
                if !KNOWN_HEADER_KEYS.contains(&k.as_str()) {
                    return Err(err(first + 1, format!("unknown header key `{k}`")));
                }
                current = Some(k.clone());
                (k, v.trim())
            }
            None => match &current {
                Some(k) => (k.clone(), token),
                None => return Err(err(first + 1, format!("unexpected header token `{token}`"))),
            },
        };
        let v: i64 = value
            .parse()
            .map_err(|_| err(first + 1, format!("bad value `{value}` for {key}")))?;
        values.entry(key).or_default().push(v);
    }
    let scalar = |key: &str| -> Result<Option<i64>> {
        match values.get(key).map(Vec::as_slice) {
            None => Ok(None),
            Some([v]) => Ok(Some(*v)),
            Some(_) => Err(err(first + 1, format!("{key} must be a single value"))),
        }
    };
    let norb = scalar("NORB")?.ok_or_else(|| err(first + 1, "missing NORB".into()))?;
    let nelec = scalar("NELEC")?.ok_or_else(|| err(first + 1, "missing NELEC".into()))?;
    let ms2 = scalar("MS2")?.unwrap_or(0);
    if norb < 0 || nelec < 0 {
        return Err(err(first + 1, "NORB and NELEC must be non-negative".into()));
    }
    let (n, n_electrons) = (norb as usize, nelec as usize);
    if n_electrons > 2 * n {
        return Err(err(first + 1, format!("NELEC={nelec} exceeds 2*NORB={}", 2 * n)));
    }
    if ms2.unsigned_abs() as usize > n_electrons || (n_electrons as i64 - ms2) % 2 != 0 {
        return Err(err(first + 1, format!("MS2={ms2} is inconsistent with NELEC={nelec}")));
    }
    if let Some(orbsym) = values.get("ORBSYM") {
        if orbsym.len() != n {
            return Err(err(
                first + 1,
                format!("ORBSYM lists {} orbitals but NORB={n}", orbsym.len()),
            ));
        }
    }

    let mut h1: Vec<Option<f64>> = vec![None; n * n];
    let mut h2: Vec<Option<f64>> = vec![None; n * n * n * n];
    let mut e_core = 0.0;
    for (idx, raw) in lines.iter().enumerate().skip(body_start) {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 5 {
            return Err(err(line_no, format!("expected `value i j k l`, got {} fields", words.len())));
        }
        let value: f64 = words[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|_| err(line_no, format!("bad value `{}`", words[0])))?;
        let mut idx4 = [0usize; 4];
        for (slot, w) in idx4.iter_mut().zip(&words[1..]) {
            *slot = w
                .parse()
                .map_err(|_| err(line_no, format!("bad index `{w}`")))?;
            if *slot > n {
                return Err(err(line_no, format!("index {slot} exceeds NORB={n}")));
            }
        }
        let [i, j, k, l] = idx4;
        match (i, j, k, l) {
            (0, 0, 0, 0) => e_core = value,
            (_, 0, 0, 0) => {}
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let (p, q) = (i - 1, j - 1);
                for (a, b) in [(p, q), (q, p)] {
                    store(&mut h1[a * n + b], value).map_err(|old| {
                        Error::Symmetry(format!(
                            "line {line_no}: h1[{a}][{b}] = {old} conflicts with {value}"
                        ))
                    })?;
                }
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                for (a, b, c, d) in eightfold(i - 1, j - 1, k - 1, l - 1) {
                    store(&mut h2[((a * n + b) * n + c) * n + d], value).map_err(|old| {
                        Error::Symmetry(format!(
                            "line {line_no}: ({a}{b}|{c}{d}) = {old} conflicts with {value}"
                        ))
                    })?;
                }
            }
            _ => return Err(err(line_no, format!("malformed index pattern {i} {j} {k} {l}"))),
        }
    }

    let mut ints = MolecularIntegrals::new(
        n,
        n_electrons,
        e_core,
        h1.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        h2.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        label,
    )?;
    ints.ms2 = ms2;
    Ok(ints)
}

fn store(slot: &mut Option<f64>, value: f64) -> std::result::Result<(), f64> {
    match *slot {
        Some(old) if (old - value).abs() > SYMMETRY_TOLERANCE => Err(old),
        _ => {
            *slot = Some(value);
            Ok(())
        }
    }
}

/// Which spatial orbitals stay explicit and which are frozen as a doubly
/// occupied mean-field core.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize, serde::Serialize)]
pub struct ActiveSpaceSpec {
    pub active_indices: Vec<usize>,
    #[serde(default)]
    pub frozen_occupied_indices: Vec<usize>,
    pub n_active_electrons: usize,
}

impl ActiveSpaceSpec {
    /// Every orbital active, nothing frozen.
    pub fn full(ints: &MolecularIntegrals) -> Self {
        ActiveSpaceSpec {
            active_indices: (0..ints.n_spatial).collect(),
            frozen_occupied_indices: Vec::new(),
            n_active_electrons: ints.n_electrons,
        }
    }

    pub fn n_active_spatial(&self) -> usize {
        self.active_indices.len()
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.active_indices.len()
    }

    pub fn validate(&self, ints: &MolecularIntegrals) -> Result<()> {
        let n = ints.n_spatial;
        let all = self.active_indices.iter().chain(&self.frozen_occupied_indices);
        if let Some(&bad) = all.clone().find(|&&i| i >= n) {
            return Err(Error::ActiveSpace(format!(
                "orbital index {bad} out of range for {n} spatial orbitals"
            )));
        }
        let mut seen = vec![false; n];
        for &i in all {
            if seen[i] {
                return Err(Error::ActiveSpace(format!(
                    "orbital {i} listed twice or in both the active and frozen sets"
                )));
            }
            seen[i] = true;
        }
        if self.n_active_electrons > 2 * self.active_indices.len() {
            return Err(Error::ActiveSpace(format!(
                "{} electrons do not fit in {} active orbitals",
                self.n_active_electrons,
                self.active_indices.len()
            )));
        }
        let expected = ints
            .n_electrons
            .checked_sub(2 * self.frozen_occupied_indices.len())
            .ok_or_else(|| {
                Error::ActiveSpace(format!(
                    "{} frozen orbitals need more than the {} electrons available",
                    self.frozen_occupied_indices.len(),
                    ints.n_electrons
                ))
            })?;
        if expected != self.n_active_electrons {
            return Err(Error::ActiveSpace(format!(
                "{} active electrons requested but {} remain after freezing",
                self.n_active_electrons, expected
            )));
        }
        Ok(())
    }
}

fn frozen_core_energy(ints: &MolecularIntegrals, frozen: &[usize]) -> f64 {
    let mut e = 0.0;
    for &i in frozen {
        e += 2.0 * ints.h1(i, i);
        for &j in frozen {
            e += 2.0 * ints.h2(i, i, j, j) - ints.h2(i, j, j, i);
        }
    }
    e
}

/// Restricts the integrals to the active orbitals. Frozen orbitals enter as
/// a mean-field potential on the one-body terms and a constant in `e_core`.
pub fn reduce_to_active_space(
    ints: &MolecularIntegrals,
    spec: &ActiveSpaceSpec,
) -> Result<MolecularIntegrals> {
    spec.validate(ints)?;
    let act = &spec.active_indices;
    let frozen = &spec.frozen_occupied_indices;
    let m = act.len();
    let mut h1 = vec![0.0; m * m];
    for (a, &p) in act.iter().enumerate() {
        for (b, &q) in act.iter().enumerate() {
            let mean_field: f64 = frozen
                .iter()
                .map(|&i| 2.0 * ints.h2(p, q, i, i) - ints.h2(p, i, i, q))
                .sum();
            h1[a * m + b] = ints.h1(p, q) + mean_field;
        }
    }
    let mut h2 = vec![0.0; m * m * m * m];
    for (a, &p) in act.iter().enumerate() {
        for (b, &q) in act.iter().enumerate() {
            for (c, &r) in act.iter().enumerate() {
                for (d, &s) in act.iter().enumerate() {
                    h2[((a * m + b) * m + c) * m + d] = ints.h2(p, q, r, s);
                }
            }
        }
    }
    let mut reduced = MolecularIntegrals::new(
        m,
        spec.n_active_electrons,
        ints.e_core + frozen_core_energy(ints, frozen),
        h1,
        h2,
        ints.point_label.clone(),
    )?;
    reduced.ms2 = ints.ms2;
    Ok(reduced)
}

/// Spin-orbital Hamiltonian
/// `E_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_{p s} a+_{r t} a_{s t} a_{q s}`
/// over interleaved spin orbitals, normal ordered.
pub fn build_fermionic_hamiltonian(ints: &MolecularIntegrals) -> Result<FermionOperator> {
    let n = ints.n_spatial;
    let n_modes = 2 * n;
    let re = |x: f64| Complex64::new(x, 0.0);
    let mut f = FermionOperator::identity(n_modes, re(ints.e_core));
    let spins = [Spin::Alpha, Spin::Beta];
    for p in 0..n {
        for q in 0..n {
            let v = ints.h1(p, q);
            if v == 0.0 {
                continue;
            }
            for spin in spins {
                f.add_term(
                    re(v),
                    vec![
                        LadderOp::create(spin_orbital(p, spin)),
                        LadderOp::annihilate(spin_orbital(q, spin)),
                    ],
                )?;
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = ints.h2(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for sigma in spins {
                        for tau in spins {
                            let (ps, qs) = (spin_orbital(p, sigma), spin_orbital(q, sigma));
                            let (rt, st) = (spin_orbital(r, tau), spin_orbital(s, tau));
                            if ps == rt || qs == st {
                                continue;
                            }
                            f.add_term(
                                re(0.5 * v),
                                vec![
                                    LadderOp::create(ps),
                                    LadderOp::create(rt),
                                    LadderOp::annihilate(st),
                                    LadderOp::annihilate(qs),
                                ],
                            )?;
                        }
                    }
                }
            }
        }
    }
    Ok(f.normal_order())
}

/// Active-space reduction, spin-orbital expansion and qubit mapping in one go.
/// The result acts on `2 * spec.n_active_spatial()` qubits.
pub fn build_qubit_hamiltonian(
    ints: &MolecularIntegrals,
    spec: &ActiveSpaceSpec,
    kind: EncodingKind,
) -> Result<PauliSum> {
    let reduced = reduce_to_active_space(ints, spec)?;
    let fermionic = build_fermionic_hamiltonian(&reduced)?;
    let scheme = EncodingScheme::new(kind, fermionic.n_modes())?;
    scheme.map_operator(&fermionic)
}

/// Reference data written next to a fixture (`<stem>.meta`).
#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct FixtureMetadata {
    pub point_label: Option<String>,
    pub hf_energy: f64,
    pub fci_energy: Option<f64>,
    pub nuclear_repulsion: Option<f64>,
    pub orbital_energies: Vec<f64>,
    pub active_indices: Vec<usize>,
    #[serde(default)]
    pub frozen_occupied_indices: Vec<usize>,
    pub casci_energy: Option<f64>,
}

impl FixtureMetadata {
    pub fn sidecar_path(integral_path: &Path) -> PathBuf {
        integral_path.with_extension("meta")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Active space implied by the sidecar for integrals with `n_electrons`.
    pub fn active_space(&self, n_electrons: usize) -> ActiveSpaceSpec {
        ActiveSpaceSpec {
            active_indices: self.active_indices.clone(),
            frozen_occupied_indices: self.frozen_occupied_indices.clone(),
            n_active_electrons: n_electrons.saturating_sub(2 * self.frozen_occupied_indices.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<MolecularIntegrals> {
        parse_integrals(text, Path::new("test.int"), "test")
    }

    #[test]
    fn minimal_one_orbital_file() {
        let ints = parse(" &FCI NORB=1,NELEC=2,MS2=0,\n &END\n -1.0 1 1 0 0\n 0.5 0 0 0 0\n").unwrap();
        assert_eq!(ints.n_spatial, 1);
        assert_eq!(ints.h1(0, 0), -1.0);
        assert_eq!(ints.e_core, 0.5);
        assert_eq!(ints.h2(0, 0, 0, 0), 0.0);
    }

    #[test]
    fn one_body_asymmetry_is_rejected() {
        let text = "&FCI NORB=2,NELEC=2,\n&END\n0.1 1 2 0 0\n0.3 2 1 0 0\n";
        assert!(matches!(parse(text), Err(Error::Symmetry(_))));
        let ok = "&FCI NORB=2,NELEC=2,\n&END\n0.1 1 2 0 0\n0.1 2 1 0 0\n";
        assert!(parse(ok).is_ok());
    }

    #[test]
    fn two_body_expansion_fills_all_images() {
        let ints = parse("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.25 2 1 1 1\n").unwrap();
        for (a, b, c, d) in eightfold(1, 0, 0, 0) {
            assert_eq!(ints.h2(a, b, c, d), 0.25);
        }
        assert_eq!(ints.h2(1, 1, 0, 0), 0.0);
    }

    #[test]
    fn header_errors() {
        let unknown = parse("&FCI NORB=1,NELEC=2,FOO=3,\n&END\n");
        assert!(unknown.unwrap_err().to_string().contains("unknown header key `FOO`"));
        assert!(parse("&FCI NORB=1,NELEC=4,\n&END\n").is_err());
        assert!(parse("&FCI NORB=2,NELEC=2,ORBSYM=1,\n&END\n").is_err());
        assert!(parse("&FCI NORB=2,NELEC=2,MS2=1,\n&END\n").is_err());
        assert!(parse("&FCI NORB=1,NELEC=2,\n").is_err());
        assert!(parse("NORB=1\n").is_err());
    }

    #[test]
    fn body_errors_carry_line_numbers() {
        let err = parse("&FCI NORB=1,NELEC=2,\n&END\n1.0 1 1 0 0\nabc 1 1 0 0\n").unwrap_err();
        assert!(err.to_string().starts_with("test.int:4:"), "{err}");
        let err = parse("&FCI NORB=1,NELEC=2,\n&END\n1.0 2 1 0 0\n").unwrap_err();
        assert!(err.to_string().starts_with("test.int:3:"), "{err}");
        let err = parse("&FCI NORB=2,NELEC=2,\n&END\n1.0 1 0 1 0\n").unwrap_err();
        assert!(err.to_string().contains("malformed"), "{err}");
    }

    #[test]
    fn multi_line_header_with_orbsym() {
        let text = " &FCI NORB=   2,NELEC= 2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n 0.5 1 1 1 1\n";
        let ints = parse(text).unwrap();
        assert_eq!(ints.n_spatial, 2);
        assert_eq!(ints.h2(0, 0, 0, 0), 0.5);
    }

    #[test]
    fn h1_only_single_orbital_hamiltonian() {
        let ints = parse("&FCI NORB=1,NELEC=2,\n&END\n-1.5 1 1 0 0\n0.25 0 0 0 0\n").unwrap();
        let f = build_fermionic_hamiltonian(&ints).unwrap();
        let mut expected = FermionOperator::identity(2, Complex64::new(0.25, 0.0));
        for m in 0..2 {
            expected
                .add_term(
                    Complex64::new(-1.5, 0.0),
                    vec![LadderOp::create(m), LadderOp::annihilate(m)],
                )
                .unwrap();
        }
        assert_eq!(f, expected);
    }

    fn two_orbital() -> MolecularIntegrals {
        let text = "&FCI NORB=2,NELEC=2,\n&END\n\
                    0.67 1 1 1 1\n0.66 1 1 2 2\n0.18 2 1 2 1\n0.70 2 2 2 2\n\
                    0.05 2 1 1 1\n-1.25 1 1 0 0\n0.02 2 1 0 0\n-0.47 2 2 0 0\n0.7 0 0 0 0\n";
        parse(text).unwrap()
    }

    #[test]
    fn active_space_without_freezing_is_a_restriction() {
        let ints = two_orbital();
        let spec = ActiveSpaceSpec {
            active_indices: vec![1],
            frozen_occupied_indices: vec![],
            n_active_electrons: 2,
        };
        let reduced = reduce_to_active_space(&ints, &spec).unwrap();
        assert_eq!(reduced.n_spatial, 1);
        assert_eq!(reduced.h1(0, 0), ints.h1(1, 1));
        assert_eq!(reduced.h2(0, 0, 0, 0), ints.h2(1, 1, 1, 1));
        assert_eq!(reduced.e_core, ints.e_core);
    }

    #[test]
    fn freezing_one_orbital_matches_hand_expansion() {
        let ints = two_orbital();
        let spec = ActiveSpaceSpec {
            active_indices: vec![1],
            frozen_occupied_indices: vec![0],
            n_active_electrons: 0,
        };
        let reduced = reduce_to_active_space(&ints, &spec).unwrap();
        // h'_11 = h_11 + 2(11|00) - (10|01);  e' = e + 2 h_00 + 2(00|00) - (00|00)
        let h11 = -0.47 + 2.0 * 0.66 - 0.18;
        let e = 0.7 + 2.0 * -1.25 + 0.67;
        assert!((reduced.h1(0, 0) - h11).abs() < 1e-14);
        assert!((reduced.e_core - e).abs() < 1e-14);
        assert_eq!(reduced.n_electrons, 0);
    }

    #[test]
    fn active_space_validation() {
        let ints = two_orbital();
        let overlap = ActiveSpaceSpec {
            active_indices: vec![0, 1],
            frozen_occupied_indices: vec![0],
            n_active_electrons: 0,
        };
        assert!(matches!(reduce_to_active_space(&ints, &overlap), Err(Error::ActiveSpace(_))));
        let out_of_range = ActiveSpaceSpec {
            active_indices: vec![2],
            frozen_occupied_indices: vec![],
            n_active_electrons: 2,
        };
        assert!(matches!(
            reduce_to_active_space(&ints, &out_of_range),
            Err(Error::ActiveSpace(_))
        ));
        let wrong_count = ActiveSpaceSpec {
            active_indices: vec![1],
            frozen_occupied_indices: vec![0],
            n_active_electrons: 2,
        };
        assert!(reduce_to_active_space(&ints, &wrong_count).is_err());
    }

    #[test]
    fn single_active_orbital_has_few_strings() {
        let ints = two_orbital();
        let spec = ActiveSpaceSpec {
            active_indices: vec![0],
            frozen_occupied_indices: vec![],
            n_active_electrons: 2,
        };
        let h = build_qubit_hamiltonian(&ints, &spec, EncodingKind::JordanWigner).unwrap();
        assert_eq!(h.n_qubits(), 2);
        assert!(h.len() <= 4, "{h}");
    }
}

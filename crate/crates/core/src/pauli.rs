//! Sparse Pauli-string algebra.
//!
//! A [`PauliString`] stores only its non-identity factors, sorted by qubit
//! index. Products track their phase as an exact power of `i` ([`Phase`]) and
//! fold it into the complex coefficient only when a [`PauliTerm`] or
//! [`PauliSum`] is formed. Sums are keyed by the canonical factor sequence, so
//! iteration order (and therefore serialization and gate order downstream) is
//! lexicographic on `(index, axis)`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are removed by [`PauliSum::simplify`].
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-12;

/// Largest register expanded by [`PauliSum::to_dense_matrix`].
pub const DEFAULT_DENSE_LIMIT: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Single-qubit product `self * other` as a phase and the surviving factor
    /// (`None` for identity).
    pub fn product(self, other: Pauli) -> (Phase, Option<Pauli>) {
        use Pauli::*;
        match (self, other) {
            (a, b) if a == b => (Phase::ONE, None),
            (X, Y) => (Phase::I, Some(Z)),
            (Y, X) => (Phase::MINUS_I, Some(Z)),
            (Y, Z) => (Phase::I, Some(X)),
            (Z, Y) => (Phase::MINUS_I, Some(X)),
            (Z, X) => (Phase::I, Some(Y)),
            (X, Z) => (Phase::MINUS_I, Some(Y)),
            _ => unreachable!(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2x2 matrix in the computational basis.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// A power of `i`, stored modulo 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(power: i64) -> Self {
        Phase(power.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Non-identity factors of a tensor product of Paulis, ascending by qubit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliString(Vec<(usize, Pauli)>);

impl PauliString {
    pub fn identity() -> Self {
        PauliString(Vec::new())
    }

    pub fn single(qubit: usize, pauli: Pauli) -> Self {
        PauliString(vec![(qubit, pauli)])
    }

    /// Builds a string from factors in any order. Repeated qubits are rejected.
    pub fn from_factors(factors: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_unstable();
        if let Some(w) = factors.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidRequest(format!(
                "qubit {} appears twice in a Pauli string",
                w[0].0
            )));
        }
        Ok(PauliString(factors))
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(q, _)| q)
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.0.last().map(|&(q, _)| q)
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        self.0
            .binary_search_by_key(&qubit, |&(q, _)| q)
            .ok()
            .map(|i| self.0[i].1)
    }

    /// Operator product `self * other` with the phase kept exact.
    pub fn product(&self, other: &PauliString) -> (Phase, PauliString) {
        let mut phase = Phase::ONE;
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(qa, pa)), Some(&&(qb, pb))) => {
                    if qa < qb {
                        out.push((qa, pa));
                        a.next();
                    } else if qb < qa {
                        out.push((qb, pb));
                        b.next();
                    } else {
                        let (ph, p) = pa.product(pb);
                        phase = phase * ph;
                        if let Some(p) = p {
                            out.push((qa, p));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some(&&f), None) => {
                    out.push(f);
                    a.next();
                }
                (None, Some(&&f)) => {
                    out.push(f);
                    b.next();
                }
                (None, None) => break,
            }
        }
        (phase, PauliString(out))
    }

    /// True when the two strings commute as operators.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut anti = 0usize;
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (qa, pa) = self.0[i];
            let (qb, pb) = other.0[j];
            if qa < qb {
                i += 1;
            } else if qb < qa {
                j += 1;
            } else {
                if pa != pb {
                    anti += 1;
                }
                i += 1;
                j += 1;
            }
        }
        anti.is_multiple_of(2)
    }

    /// True when every shared qubit carries the same Pauli.
    pub fn qubitwise_commutes_with(&self, other: &PauliString) -> bool {
        self.0
            .iter()
            .all(|&(q, p)| other.get(q).is_none_or(|o| o == p))
    }

    /// Bit masks describing the action on computational basis states.
    pub fn basis_action(&self) -> BasisAction {
        let mut x_mask = 0usize;
        let mut z_mask = 0usize;
        let mut n_y = 0i64;
        for &(q, p) in &self.0 {
            match p {
                Pauli::X => x_mask |= 1 << q,
                Pauli::Y => {
                    x_mask |= 1 << q;
                    z_mask |= 1 << q;
                    n_y += 1;
                }
                Pauli::Z => z_mask |= 1 << q,
            }
        }
        BasisAction {
            x_mask,
            z_mask,
            y_phase: Phase::from_power(n_y),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("I");
        }
        for (k, &(q, p)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", p.symbol(), q)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = String;

    /// Parses whitespace-separated factors such as `X0 Z2`, or `I`.
    fn from_str(s: &str) -> Result<Self, String> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        if tokens.is_empty() || tokens == ["I"] {
            return Ok(PauliString::identity());
        }
        let mut factors = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let mut chars = tok.chars();
            let pauli = match chars.next() {
                Some('X') => Pauli::X,
                Some('Y') => Pauli::Y,
                Some('Z') => Pauli::Z,
                _ => return Err(format!("bad Pauli factor `{tok}`")),
            };
            let index: usize = chars
                .as_str()
                .parse()
                .map_err(|_| format!("bad qubit index in `{tok}`"))?;
            factors.push((index, pauli));
        }
        PauliString::from_factors(factors).map_err(|e| e.to_string())
    }
}

/// `P|b> = phase(b) |b ^ x_mask>` with `phase(b) = i^{#Y} (-1)^{popcount(b & z_mask)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisAction {
    pub x_mask: usize,
    pub z_mask: usize,
    pub y_phase: Phase,
}

impl BasisAction {
    #[inline]
    pub fn apply(&self, basis: usize) -> (usize, Complex64) {
        let sign = if (basis & self.z_mask).count_ones() % 2 == 1 {
            Phase::MINUS_ONE
        } else {
            Phase::ONE
        };
        (basis ^ self.x_mask, (self.y_phase * sign).to_complex())
    }

    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }
}

/// A Pauli string on a fixed register with a complex coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    n_qubits: usize,
    string: PauliString,
    coefficient: Complex64,
}

impl PauliTerm {
    pub fn new(n_qubits: usize, string: PauliString, coefficient: Complex64) -> Result<Self> {
        if let Some(q) = string.max_qubit() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        Ok(PauliTerm {
            n_qubits,
            string,
            coefficient,
        })
    }

    pub fn identity(n_qubits: usize, coefficient: Complex64) -> Self {
        PauliTerm {
            n_qubits,
            string: PauliString::identity(),
            coefficient,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn string(&self) -> &PauliString {
        &self.string
    }

    pub fn coefficient(&self) -> Complex64 {
        self.coefficient
    }

    pub fn multiply(&self, other: &PauliTerm) -> Result<PauliTerm> {
        check_qubits(self.n_qubits, other.n_qubits)?;
        let (phase, string) = self.string.product(&other.string);
        Ok(PauliTerm {
            n_qubits: self.n_qubits,
            string,
            coefficient: self.coefficient * other.coefficient * phase.to_complex(),
        })
    }

    pub fn adjoint(&self) -> PauliTerm {
        PauliTerm {
            coefficient: self.coefficient.conj(),
            ..self.clone()
        }
    }
}

fn check_qubits(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::QubitMismatch { left, right });
    }
    Ok(())
}

/// A weighted sum of Pauli strings over a shared register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coefficient: Complex64) -> Self {
        let mut s = PauliSum::zero(n_qubits);
        s.terms.insert(PauliString::identity(), coefficient);
        s
    }

    pub fn from_term(term: PauliTerm) -> Self {
        let mut s = PauliSum::zero(term.n_qubits);
        s.terms.insert(term.string, term.coefficient);
        s
    }

    /// Builds a sum from `(coefficient, string)` pairs, merging duplicates and
    /// dropping negligible results.
    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (Complex64, PauliString)>,
    ) -> Result<Self> {
        let mut s = PauliSum::zero(n_qubits);
        for (c, p) in terms {
            s.add_term(c, p)?;
        }
        Ok(s.simplify())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, Complex64)> + '_ {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms.iter().map(|(p, &c)| PauliTerm {
            n_qubits: self.n_qubits,
            string: p.clone(),
            coefficient: c,
        })
    }

    pub fn coefficient(&self, string: &PauliString) -> Complex64 {
        self.terms.get(string).copied().unwrap_or_default()
    }

    pub fn identity_coefficient(&self) -> Complex64 {
        self.coefficient(&PauliString::identity())
    }

    /// Accumulates `coefficient * string` without simplifying.
    pub fn add_term(&mut self, coefficient: Complex64, string: PauliString) -> Result<()> {
        if let Some(q) = string.max_qubit() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        *self.terms.entry(string).or_default() += coefficient;
        Ok(())
    }

    pub fn simplify(&self) -> PauliSum {
        self.simplify_with_tolerance(DEFAULT_DROP_TOLERANCE)
    }

    pub fn simplify_with_tolerance(&self, tolerance: f64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() >= tolerance)
                .map(|(p, &c)| (p.clone(), c))
                .collect(),
        }
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        check_qubits(self.n_qubits, other.n_qubits)?;
        let mut out = self.clone();
        for (p, &c) in &other.terms {
            *out.terms.entry(p.clone()).or_default() += c;
        }
        Ok(out.simplify())
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, &c)| (p.clone(), c * factor)).collect(),
        }
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        check_qubits(self.n_qubits, other.n_qubits)?;
        let mut out = PauliSum::zero(self.n_qubits);
        for (pa, &ca) in &self.terms {
            for (pb, &cb) in &other.terms {
                let (phase, p) = pa.product(pb);
                *out.terms.entry(p).or_default() += ca * cb * phase.to_complex();
            }
        }
        Ok(out.simplify())
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        check_qubits(self.n_qubits, other.n_qubits)?;
        let mut out = PauliSum::zero(self.n_qubits);
        for (pa, &ca) in &self.terms {
            for (pb, &cb) in &other.terms {
                if pa.commutes_with(pb) {
                    continue;
                }
                // anticommuting strings: ab - ba = 2ab
                let (phase, p) = pa.product(pb);
                *out.terms.entry(p).or_default() += 2.0 * ca * cb * phase.to_complex();
            }
        }
        Ok(out.simplify())
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, &c)| (p.clone(), c.conj())).collect(),
        }
    }

    /// Largest imaginary part among the coefficients; zero for Hermitian sums.
    pub fn max_imaginary(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(PauliString::weight).max().unwrap_or(0)
    }

    pub fn to_dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_matrix_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_matrix_with_limit(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > limit {
            return Err(Error::SizeLimit {
                what: "dense matrix",
                n_qubits: self.n_qubits,
                limit,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (p, &c) in &self.terms {
            let action = p.basis_action();
            for b in 0..dim {
                let (row, phase) = action.apply(b);
                m[(row, b)] += c * phase;
            }
        }
        Ok(m)
    }

    /// Text form: `# n_qubits <n>` header, then one `<re> <im> <factors>` line
    /// per term in canonical order.
    pub fn to_text(&self) -> String {
        let mut out = format!("# n_qubits {}\n", self.n_qubits);
        for (p, c) in &self.terms {
            out.push_str(&format!("{:?} {:?} {}\n", c.re, c.im, p));
        }
        out
    }

    /// Parses [`PauliSum::to_text`] output. Without a header the register size
    /// is inferred from the largest qubit index.
    pub fn from_text(text: &str, source: &Path) -> Result<PauliSum> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut n_qubits: Option<usize> = None;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if words.next() == Some("n_qubits") {
                    let n = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| parse_err(line_no, "bad n_qubits header".into()))?;
                    n_qubits = Some(n);
                }
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.len() < 3 {
                return Err(parse_err(
                    line_no,
                    "expected `<re> <im> <pauli string>`".into(),
                ));
            }
            let re: f64 = words[0]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad real part `{}`", words[0])))?;
            let im: f64 = words[1]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad imaginary part `{}`", words[1])))?;
            let string: PauliString = words[2..]
                .join(" ")
                .parse()
                .map_err(|m| parse_err(line_no, m))?;
            entries.push((line_no, Complex64::new(re, im), string));
        }
        let n_qubits = n_qubits.unwrap_or_else(|| {
            entries
                .iter()
                .filter_map(|(_, _, p)| p.max_qubit())
                .max()
                .map_or(1, |q| q + 1)
        });
        let mut sum = PauliSum::zero(n_qubits);
        for (line_no, c, p) in entries {
            sum.add_term(c, p).map_err(|e| parse_err(line_no, e.to_string()))?;
        }
        Ok(sum)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

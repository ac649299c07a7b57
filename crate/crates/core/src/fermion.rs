//! Fermionic ladder-operator algebra.
//!
//! Spin orbitals are interleaved: spatial orbital `m` owns spin orbitals `2m`
//! (alpha) and `2m + 1` (beta). Every module that builds fermionic operators
//! goes through [`spin_orbital`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Merge tolerance applied by [`FermionOperator::normal_order`].
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    Alpha,
    Beta,
}

/// Interleaved spin-orbital index of `(spatial, spin)`.
pub fn spin_orbital(spatial: usize, spin: Spin) -> usize {
    match spin {
        Spin::Alpha => 2 * spatial,
        Spin::Beta => 2 * spatial + 1,
    }
}

pub fn spin_of(mode: usize) -> Spin {
    if mode.is_multiple_of(2) {
        Spin::Alpha
    } else {
        Spin::Beta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        LadderOp { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        LadderOp { mode, dagger: false }
    }

    pub fn adjoint(self) -> Self {
        LadderOp {
            mode: self.mode,
            dagger: !self.dagger,
        }
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "{}^", self.mode)
        } else {
            write!(f, "{}", self.mode)
        }
    }
}

/// Parses a product like `3^ 1 2^ 0`. An empty string or `I` is the identity.
pub fn parse_ladder_ops(text: &str) -> std::result::Result<Vec<LadderOp>, String> {
    let text = text.trim();
    if text.is_empty() || text == "I" {
        return Ok(Vec::new());
    }
    text.split_whitespace()
        .map(|tok| {
            let (digits, dagger) = match tok.strip_suffix('^') {
                Some(d) => (d, true),
                None => (tok, false),
            };
            digits
                .parse()
                .map(|mode| LadderOp { mode, dagger })
                .map_err(|_| format!("bad ladder operator `{tok}`"))
        })
        .collect()
}

/// A linear combination of ladder-operator products on `n_modes` modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionOperator {
    n_modes: usize,
    terms: BTreeMap<Vec<LadderOp>, Complex64>,
}

impl FermionOperator {
    pub fn zero(n_modes: usize) -> Self {
        FermionOperator {
            n_modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_modes: usize, coefficient: Complex64) -> Self {
        let mut f = FermionOperator::zero(n_modes);
        f.terms.insert(Vec::new(), coefficient);
        f
    }

    pub fn from_term(n_modes: usize, coefficient: Complex64, ops: Vec<LadderOp>) -> Result<Self> {
        let mut f = FermionOperator::zero(n_modes);
        f.add_term(coefficient, ops)?;
        Ok(f)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[LadderOp], Complex64)> + '_ {
        self.terms.iter().map(|(ops, &c)| (ops.as_slice(), c))
    }

    pub fn coefficient(&self, ops: &[LadderOp]) -> Complex64 {
        self.terms.get(ops).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, coefficient: Complex64, ops: Vec<LadderOp>) -> Result<()> {
        if let Some(op) = ops.iter().find(|op| op.mode >= self.n_modes) {
            return Err(Error::ModeOutOfRange {
                index: op.mode,
                n_modes: self.n_modes,
            });
        }
        *self.terms.entry(ops).or_default() += coefficient;
        Ok(())
    }

    fn check_modes(&self, other: &FermionOperator) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::ModeMismatch {
                operator: other.n_modes,
                encoding: self.n_modes,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &FermionOperator) -> Result<FermionOperator> {
        self.check_modes(other)?;
        let mut out = self.clone();
        for (ops, &c) in &other.terms {
            *out.terms.entry(ops.clone()).or_default() += c;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FermionOperator) -> Result<FermionOperator> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> FermionOperator {
        FermionOperator {
            n_modes: self.n_modes,
            terms: self.terms.iter().map(|(o, &c)| (o.clone(), c * factor)).collect(),
        }
    }

    /// Operator product `self * other` (sequences concatenated, not reordered).
    pub fn mul(&self, other: &FermionOperator) -> Result<FermionOperator> {
        self.check_modes(other)?;
        let mut out = FermionOperator::zero(self.n_modes);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                let mut ops = a.clone();
                ops.extend_from_slice(b);
                *out.terms.entry(ops).or_default() += ca * cb;
            }
        }
        Ok(out)
    }

    pub fn hermitian_conjugate(&self) -> FermionOperator {
        FermionOperator {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|(ops, &c)| (ops.iter().rev().map(|op| op.adjoint()).collect(), c.conj()))
                .collect(),
        }
    }

    /// Rewrites every product with creation operators left of annihilation
    /// operators, each group in descending mode order, using
    /// `{a_p, a_q^dagger} = delta_pq`. Products with a repeated operator vanish.
    pub fn normal_order(&self) -> FermionOperator {
        let mut out: BTreeMap<Vec<LadderOp>, Complex64> = BTreeMap::new();
        for (ops, &c) in &self.terms {
            normal_order_term(ops.clone(), c, &mut out);
        }
        out.retain(|_, c| c.norm() >= MERGE_TOLERANCE);
        FermionOperator {
            n_modes: self.n_modes,
            terms: out,
        }
    }

    /// True when every term is already in normal-ordered canonical form.
    pub fn is_normal_ordered(&self) -> bool {
        self.terms.keys().all(|ops| {
            ops.windows(2).all(|w| {
                let (l, r) = (w[0], w[1]);
                (l.dagger && !r.dagger) || (l.dagger == r.dagger && l.mode > r.mode)
            })
        })
    }

    /// Parses the text form written by [`FermionOperator::to_text`]: an optional
    /// `# n_modes <n>` header, then `<re> <im> <ops>` lines where ops look like
    /// `2^ 0` and `I` is the identity.
    pub fn from_text(text: &str, source: &Path) -> Result<FermionOperator> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut n_modes = None;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if words.next() == Some("n_modes") {
                    n_modes = Some(
                        words
                            .next()
                            .and_then(|w| w.parse().ok())
                            .ok_or_else(|| parse_err(line_no, "bad n_modes header".into()))?,
                    );
                }
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.len() < 2 {
                return Err(parse_err(line_no, "expected `<re> <im> <ops>`".into()));
            }
            let re: f64 = words[0]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad real part `{}`", words[0])))?;
            let im: f64 = words[1]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad imaginary part `{}`", words[1])))?;
            let ops = parse_ladder_ops(&words[2..].join(" ")).map_err(|m| parse_err(line_no, m))?;
            entries.push((line_no, Complex64::new(re, im), ops));
        }
        let n_modes = n_modes.unwrap_or_else(|| {
            entries
                .iter()
                .flat_map(|(_, _, ops)| ops.iter().map(|o| o.mode + 1))
                .max()
                .unwrap_or(1)
        });
        let mut f = FermionOperator::zero(n_modes);
        for (line_no, c, ops) in entries {
            f.add_term(c, ops).map_err(|e| parse_err(line_no, e.to_string()))?;
        }
        Ok(f)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# n_modes {}\n", self.n_modes);
        for (ops, c) in &self.terms {
            out.push_str(&format!("{:?} {:?} {}\n", c.re, c.im, ops_text(ops)));
        }
        out
    }
}

fn ops_text(ops: &[LadderOp]) -> String {
    if ops.is_empty() {
        return "I".into();
    }
    ops.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn normal_order_term(
    ops: Vec<LadderOp>,
    coefficient: Complex64,
    out: &mut BTreeMap<Vec<LadderOp>, Complex64>,
) {
    let mut pending = vec![(ops, coefficient)];
    'terms: while let Some((mut ops, mut c)) = pending.pop() {
        for i in 1..ops.len() {
            for j in (1..=i).rev() {
                let (left, right) = (ops[j - 1], ops[j]);
                if right.dagger && !left.dagger {
                    ops.swap(j - 1, j);
                    c = -c;
                    if right.mode == left.mode {
                        // a_p a_p^dagger = 1 - a_p^dagger a_p
                        let mut contracted = ops[..j - 1].to_vec();
                        contracted.extend_from_slice(&ops[j + 1..]);
                        pending.push((contracted, -c));
                    }
                } else if right.dagger == left.dagger {
                    if right.mode == left.mode {
                        continue 'terms;
                    }
                    if right.mode > left.mode {
                        ops.swap(j - 1, j);
                        c = -c;
                    }
                }
            }
        }
        *out.entry(ops).or_default() += c;
    }
}

impl fmt::Display for FermionOperator {
    /// Debug-style listing, one `(coeff) [p^ q]` per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ops, c) in &self.terms {
            let body = ops.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
            writeln!(f, "({}{:+}j) [{}]", c.re, c.im, body)?;
        }
        Ok(())
    }
}

//! Spin observables: sparse Pauli strings, weighted sums of them, and the
//! measurement plumbing that turns an observable into measured kernels.
//!
//! Text form accepted by [`PauliObservable::from_str`]:
//!
//! ```text
//! obs    := term (("+" | "-") term)*
//! term   := [coeff WS] factor (WS factor)* | [coeff WS] "I"
//! coeff  := FLOAT | "(" FLOAT "," FLOAT ")"
//! factor := ("X" | "Y" | "Z") UINT
//! ```
//!
//! Repeated qubits inside one product (`X0 Y0`) are multiplied out.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};
use core::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::dense::DenseMatrix;
use crate::kernel::{Kernel, KernelError};
use crate::lex::{fmt_f64, Cursor};
use crate::mitigation::QuasiDistribution;
use crate::simulator::ShotCounts;

/// Coefficients at or below this modulus are dropped by simplification.
pub const DEFAULT_PRUNE_TOLERANCE: f64 = 1e-12;

/// Largest register expanded by [`PauliObservable::to_dense_matrix`].
pub const MAX_DENSE_QUBITS: usize = 12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("empty observable string")]
    Empty,
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("non-finite coefficient {0}")]
    NonFinite(Complex64),
    #[error("dense expansion of {qubits} qubits exceeds the limit of {MAX_DENSE_QUBITS}")]
    DimensionOverflow { qubits: usize },
    #[error("observable acts on {needed} qubits but only {available} are available")]
    TooFewQubits { needed: usize, available: usize },
    #[error("no measurement outcomes to average")]
    EmptyCounts,
    #[error("bitstring {bitstring:?} does not cover qubit {qubit}")]
    UncoveredQubit { bitstring: String, qubit: usize },
    #[error("bitstring {0:?} contains characters other than 0 and 1")]
    InvalidBitstring(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    /// Product `self * rhs` as `(phase, op)`.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: PauliOp) -> (Complex64, PauliOp) {
        use PauliOp::*;
        match (self, rhs) {
            (I, p) | (p, I) => (ONE, p),
            (X, X) | (Y, Y) | (Z, Z) => (ONE, I),
            (X, Y) => (IM, Z),
            (Y, X) => (-IM, Z),
            (Y, Z) => (IM, X),
            (Z, Y) => (-IM, X),
            (Z, X) => (IM, Y),
            (X, Z) => (-IM, Y),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    /// Action on a computational basis bit: `op |bit> = phase |bit'>`.
    fn on_bit(self, bit: bool) -> (bool, Complex64) {
        match self {
            PauliOp::I => (bit, ONE),
            PauliOp::X => (!bit, ONE),
            PauliOp::Y => (!bit, if bit { -IM } else { IM }),
            PauliOp::Z => (bit, if bit { -ONE } else { ONE }),
        }
    }
}

/// Tensor product of Pauli operators, stored sparsely by qubit index.
///
/// Only non-identity factors are kept and they are sorted by qubit. The empty
/// string is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<(usize, PauliOp)>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, op: PauliOp) -> Self {
        if op == PauliOp::I {
            Self::identity()
        } else {
            Self {
                ops: vec![(qubit, op)],
            }
        }
    }

    /// Multiplies factors left to right, returning the accumulated phase.
    pub fn from_factors<I>(factors: I) -> (Complex64, Self)
    where
        I: IntoIterator<Item = (usize, PauliOp)>,
    {
        let mut phase = ONE;
        let mut acc: BTreeMap<usize, PauliOp> = BTreeMap::new();
        for (q, op) in factors {
            let cur = acc.get(&q).copied().unwrap_or(PauliOp::I);
            let (ph, prod) = cur.mul(op);
            phase *= ph;
            if prod == PauliOp::I {
                acc.remove(&q);
            } else {
                acc.insert(q, prod);
            }
        }
        (
            phase,
            Self {
                ops: acc.into_iter().collect(),
            },
        )
    }

    pub fn get(&self, qubit: usize) -> PauliOp {
        match self.ops.binary_search_by_key(&qubit, |&(q, _)| q) {
            Ok(i) => self.ops[i].1,
            Err(_) => PauliOp::I,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, PauliOp)> + '_ {
        self.ops.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.ops.iter().map(|&(q, _)| q)
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    /// One past the largest qubit index, or 0 for the identity.
    pub fn num_qubits(&self) -> usize {
        self.ops.last().map_or(0, |&(q, _)| q + 1)
    }

    /// `self * other` as `(phase, string)`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let mut phase = ONE;
        let mut ops = Vec::with_capacity(self.ops.len() + other.ops.len());
        let (mut i, mut j) = (0, 0);
        while i < self.ops.len() || j < other.ops.len() {
            let a = self.ops.get(i).copied();
            let b = other.ops.get(j).copied();
            match (a, b) {
                (Some((qa, pa)), Some((qb, pb))) if qa == qb => {
                    let (ph, p) = pa.mul(pb);
                    phase *= ph;
                    if p != PauliOp::I {
                        ops.push((qa, p));
                    }
                    i += 1;
                    j += 1;
                }
                (Some((qa, pa)), Some((qb, _))) if qa < qb => {
                    ops.push((qa, pa));
                    i += 1;
                }
                (Some(_), Some((qb, pb))) => {
                    ops.push((qb, pb));
                    j += 1;
                }
                (Some(x), None) => {
                    ops.push(x);
                    i += 1;
                }
                (None, Some(y)) => {
                    ops.push(y);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        (phase, PauliString { ops })
    }

    /// On every shared qubit the factors are equal or one of them is I.
    pub fn qubit_wise_commutes(&self, other: &PauliString) -> bool {
        self.ops.iter().all(|&(q, p)| {
            let o = other.get(q);
            o == PauliOp::I || o == p
        })
    }

    /// Ordinary operator commutation: an even number of anticommuting sites.
    pub fn commutes(&self, other: &PauliString) -> bool {
        let anti = self
            .ops
            .iter()
            .filter(|&&(q, p)| {
                let o = other.get(q);
                o != PauliOp::I && o != p
            })
            .count();
        anti % 2 == 0
    }

    /// `P |basis> = phase |basis'>` with qubit `k` stored in bit `k`.
    pub(crate) fn apply_to_basis(&self, basis: usize) -> (usize, Complex64) {
        let mut out = basis;
        let mut phase = ONE;
        for &(q, op) in &self.ops {
            let bit = (basis >> q) & 1 == 1;
            let (nb, ph) = op.on_bit(bit);
            if nb != bit {
                out ^= 1 << q;
            }
            phase *= ph;
        }
        (out, phase)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.support().cmp(other.support()).then_with(|| {
            self.ops
                .iter()
                .map(|p| p.1)
                .cmp(other.ops.iter().map(|p| p.1))
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return f.write_str("I");
        }
        for (i, (q, op)) in self.ops.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", op.symbol(), q)?;
        }
        Ok(())
    }
}

/// A coefficient times a Pauli string.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coefficient: Complex64,
    string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: Complex64, string: PauliString) -> Result<Self, PauliError> {
        if !coefficient.re.is_finite() || !coefficient.im.is_finite() {
            return Err(PauliError::NonFinite(coefficient));
        }
        Ok(Self {
            coefficient,
            string,
        })
    }

    pub fn coefficient(&self) -> Complex64 {
        self.coefficient
    }

    pub fn string(&self) -> &PauliString {
        &self.string
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient != ONE {
            write!(
                f,
                "({},{}) ",
                fmt_f64(self.coefficient.re),
                fmt_f64(self.coefficient.im)
            )?;
        }
        write!(f, "{}", self.string)
    }
}

/// Measured kernels produced by [`PauliObservable::observe`].
#[derive(Clone, Debug)]
pub struct MeasuredTerms {
    /// Sum of identity-term coefficients; added analytically.
    pub identity_offset: Complex64,
    /// One measured kernel per non-identity term, in term order.
    pub circuits: Vec<(PauliTerm, Kernel)>,
}

/// Weighted sum of Pauli strings.
///
/// Values returned by parsing and by the algebraic operations are
/// simplified: one term per distinct string, sorted canonically, with
/// negligible coefficients removed. [`PauliObservable::from_terms`] keeps
/// its input as given.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliObservable {
    terms: Vec<PauliTerm>,
}

impl PauliObservable {
    /// The zero observable.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity(coefficient: Complex64) -> Self {
        Self::from_terms([PauliTerm {
            coefficient,
            string: PauliString::identity(),
        }])
        .simplify(DEFAULT_PRUNE_TOLERANCE)
    }

    pub fn from_term(term: PauliTerm) -> Self {
        Self { terms: vec![term] }
    }

    /// Wraps terms without merging or pruning.
    pub fn from_terms<I: IntoIterator<Item = PauliTerm>>(terms: I) -> Self {
        Self {
            terms: terms.into_iter().collect(),
        }
    }

    /// `Z0 Z1 ... Z(n-1)`: a computational-basis measurement of every qubit.
    pub fn computational_basis(num_qubits: usize) -> Self {
        let (_, string) = PauliString::from_factors((0..num_qubits).map(|q| (q, PauliOp::Z)));
        Self::from_term(PauliTerm {
            coefficient: ONE,
            string,
        })
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.string.num_qubits())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient of `string`, summed over duplicates.
    pub fn coefficient(&self, string: &PauliString) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| &t.string == string)
            .map(|t| t.coefficient)
            .sum()
    }

    /// Merges like terms, drops terms with `|c| <= tol`, sorts canonically.
    pub fn simplify(&self, tol: f64) -> Self {
        let mut merged: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for t in &self.terms {
            *merged
                .entry(t.string.clone())
                .or_insert(Complex64::new(0.0, 0.0)) += t.coefficient;
        }
        Self {
            terms: merged
                .into_iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(string, coefficient)| PauliTerm {
                    coefficient,
                    string,
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        }
        .simplify(DEFAULT_PRUNE_TOLERANCE)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm {
                    coefficient: t.coefficient * c,
                    string: t.string.clone(),
                })
                .collect(),
        }
        .simplify(DEFAULT_PRUNE_TOLERANCE)
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let (phase, string) = a.string.mul(&b.string);
                terms.push(PauliTerm {
                    coefficient: a.coefficient * b.coefficient * phase,
                    string,
                });
            }
        }
        Self { terms }.simplify(DEFAULT_PRUNE_TOLERANCE)
    }

    /// Every coefficient is real to within `tol`. Pauli strings are Hermitian,
    /// so for a simplified observable this is exactly Hermiticity.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.simplify(0.0)
            .terms
            .iter()
            .all(|t| t.coefficient.im.abs() <= tol)
    }

    /// Dense `2^n x 2^n` matrix with qubit `k` as bit `k` of the basis index.
    pub fn to_dense_matrix(&self, num_qubits: usize) -> Result<DenseMatrix, PauliError> {
        if num_qubits > MAX_DENSE_QUBITS {
            return Err(PauliError::DimensionOverflow { qubits: num_qubits });
        }
        let needed = self.num_qubits();
        if needed > num_qubits {
            return Err(PauliError::TooFewQubits {
                needed,
                available: num_qubits,
            });
        }
        let dim = 1usize << num_qubits;
        let mut m = DenseMatrix::zeros(dim);
        for t in &self.terms {
            for col in 0..dim {
                let (row, phase) = t.string.apply_to_basis(col);
                m[(row, col)] += t.coefficient * phase;
            }
        }
        Ok(m)
    }

    /// `O |psi>` for a statevector over `amps.len().ilog2()` qubits.
    ///
    /// The caller guarantees the register covers [`Self::num_qubits`].
    pub fn apply(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for t in &self.terms {
            for (basis, amp) in amps.iter().enumerate() {
                if *amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (row, phase) = t.string.apply_to_basis(basis);
                out[row] += t.coefficient * phase * amp;
            }
        }
        out
    }

    /// One measured kernel per non-identity term; identity terms become the
    /// returned offset.
    ///
    /// X factors get an H basis change and Y factors get Sdg then H before
    /// the measurement.
    pub fn observe(&self, kernel: &Kernel) -> Result<MeasuredTerms, PauliError> {
        if kernel.is_measured() {
            return Err(KernelError::AlreadyMeasured.into());
        }
        let needed = self.num_qubits();
        if needed > kernel.num_qubits() {
            return Err(PauliError::TooFewQubits {
                needed,
                available: kernel.num_qubits(),
            });
        }
        let mut identity_offset = Complex64::new(0.0, 0.0);
        let mut circuits = Vec::new();
        for t in &self.terms {
            if t.string.is_identity() {
                identity_offset += t.coefficient;
            } else {
                circuits.push((t.clone(), kernel.append_measurement_basis(&t.string)?));
            }
        }
        Ok(MeasuredTerms {
            identity_offset,
            circuits,
        })
    }

    /// Greedy partition into qubit-wise commuting groups, visiting terms in
    /// their current order.
    pub fn group_commuting(&self) -> Vec<PauliObservable> {
        let mut groups: Vec<Vec<PauliTerm>> = Vec::new();
        for t in &self.terms {
            let slot = groups
                .iter_mut()
                .find(|g| g.iter().all(|m| m.string.qubit_wise_commutes(&t.string)));
            match slot {
                Some(g) => g.push(t.clone()),
                None => groups.push(vec![t.clone()]),
            }
        }
        groups
            .into_iter()
            .map(PauliObservable::from_terms)
            .collect()
    }

    fn sorted_terms(&self) -> Vec<&PauliTerm> {
        let mut v: Vec<&PauliTerm> = self.terms.iter().collect();
        v.sort_by(|a, b| a.string.cmp(&b.string));
        v
    }
}

impl fmt::Display for PauliObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("(0,0) I");
        }
        for (i, t) in self.sorted_terms().into_iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliObservable {
    type Err = PauliError;

    fn from_str(text: &str) -> Result<Self, PauliError> {
        parse_pauli(text)
    }
}

/// Parses the observable grammar and returns the simplified result.
pub fn parse_pauli(text: &str) -> Result<PauliObservable, PauliError> {
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    if cur.is_eof() {
        return Err(PauliError::Empty);
    }
    let syntax = |cur: &Cursor<'_>, message: &str| PauliError::Syntax {
        pos: cur.pos(),
        message: message.into(),
    };

    let mut terms = Vec::new();
    let mut sign = 1.0;
    loop {
        cur.skip_ws();
        let mut coefficient = ONE;
        match cur.peek() {
            Some(b'(') => {
                cur.bump();
                cur.skip_ws();
                let re = cur
                    .number()
                    .ok_or_else(|| syntax(&cur, "expected real part"))?;
                cur.skip_ws();
                if !cur.eat(b',') {
                    return Err(syntax(&cur, "expected ',' in complex coefficient"));
                }
                cur.skip_ws();
                let im = cur
                    .number()
                    .ok_or_else(|| syntax(&cur, "expected imaginary part"))?;
                cur.skip_ws();
                if !cur.eat(b')') {
                    return Err(syntax(&cur, "expected ')' after complex coefficient"));
                }
                coefficient = Complex64::new(re.value, im.value);
            }
            Some(b'+') | Some(b'-') | Some(b'.') | Some(b'0'..=b'9') => {
                if let Some(n) = cur.number() {
                    coefficient = Complex64::new(n.value, 0.0);
                } else if cur.peek() == Some(b'-') {
                    // bare sign in front of a factor, e.g. "-X0"
                    cur.bump();
                    sign = -sign;
                } else if cur.peek() == Some(b'+') {
                    cur.bump();
                } else {
                    return Err(syntax(&cur, "malformed number"));
                }
            }
            _ => {}
        }

        let mut factors = Vec::new();
        let mut saw_factor = false;
        loop {
            cur.skip_ws();
            let op = match cur.peek() {
                Some(b'X') => PauliOp::X,
                Some(b'Y') => PauliOp::Y,
                Some(b'Z') => PauliOp::Z,
                Some(b'I') => PauliOp::I,
                _ => break,
            };
            cur.bump();
            let qubit = cur.uint();
            if op != PauliOp::I {
                let q = qubit.ok_or_else(|| syntax(&cur, "expected qubit index"))?;
                factors.push((q, op));
            }
            saw_factor = true;
        }
        if !saw_factor {
            return Err(if cur.is_eof() {
                syntax(&cur, "expected a Pauli factor or I, found end of input")
            } else {
                PauliError::Syntax {
                    pos: cur.pos(),
                    message: alloc::format!(
                        "expected a Pauli factor or I, found {:?}",
                        cur.excerpt()
                    ),
                }
            });
        }
        let (phase, string) = PauliString::from_factors(factors);
        terms.push(PauliTerm::new(coefficient * phase * sign, string)?);

        cur.skip_ws();
        match cur.peek() {
            None => break,
            Some(b'+') => sign = 1.0,
            Some(b'-') => sign = -1.0,
            Some(_) => {
                return Err(PauliError::Syntax {
                    pos: cur.pos(),
                    message: alloc::format!("expected '+' or '-', found {:?}", cur.excerpt()),
                })
            }
        }
        cur.bump();
    }
    Ok(PauliObservable::from_terms(terms).simplify(DEFAULT_PRUNE_TOLERANCE))
}

/// Position of each qubit of `string` inside bitstrings of length `len`.
///
/// Bitstrings as long as the term's weight are read positionally (the layout
/// produced by measuring exactly the term's support in ascending order);
/// longer bitstrings are indexed by qubit number.
fn bit_positions(string: &PauliString, bitstring: &str) -> Result<Vec<usize>, PauliError> {
    let len = bitstring.len();
    if len == string.weight() {
        return Ok((0..len).collect());
    }
    string
        .support()
        .map(|q| {
            if q < len {
                Ok(q)
            } else {
                Err(PauliError::UncoveredQubit {
                    bitstring: bitstring.to_string(),
                    qubit: q,
                })
            }
        })
        .collect()
}

fn parity_expectation<'a, I>(term: &PauliTerm, outcomes: I) -> Result<f64, PauliError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut total = 0.0;
    let mut signed = 0.0;
    let mut seen = false;
    for (bits, weight) in outcomes {
        seen = true;
        let bytes = bits.as_bytes();
        let mut odd = false;
        for p in bit_positions(&term.string, bits)? {
            match bytes[p] {
                b'0' => {}
                b'1' => odd = !odd,
                _ => return Err(PauliError::InvalidBitstring(bits.to_string())),
            }
        }
        total += weight;
        signed += if odd { -weight } else { weight };
    }
    if !seen || total == 0.0 {
        return Err(PauliError::EmptyCounts);
    }
    Ok(term.coefficient.re * signed / total)
}

/// `Re(c) * sum_b n_b (-1)^parity(b) / sum_b n_b` over the term's qubits.
pub fn expectation_from_counts(term: &PauliTerm, counts: &ShotCounts) -> Result<f64, PauliError> {
    parity_expectation(term, counts.iter().map(|(b, &n)| (b.as_str(), n as f64)))
}

/// Same estimator over a (possibly negative) quasi-probability distribution.
pub fn expectation_from_distribution(
    term: &PauliTerm,
    dist: &QuasiDistribution,
) -> Result<f64, PauliError> {
    parity_expectation(term, dist.iter().map(|(b, &p)| (b.as_str(), p)))
}

impl Add for &PauliObservable {
    type Output = PauliObservable;
    fn add(self, rhs: &PauliObservable) -> PauliObservable {
        PauliObservable::add(self, rhs)
    }
}

impl Sub for &PauliObservable {
    type Output = PauliObservable;
    fn sub(self, rhs: &PauliObservable) -> PauliObservable {
        PauliObservable::add(self, &rhs.scale(-ONE))
    }
}

impl Mul for &PauliObservable {
    type Output = PauliObservable;
    fn mul(self, rhs: &PauliObservable) -> PauliObservable {
        self.multiply(rhs)
    }
}

impl Mul<Complex64> for &PauliObservable {
    type Output = PauliObservable;
    fn mul(self, rhs: Complex64) -> PauliObservable {
        self.scale(rhs)
    }
}

impl Neg for &PauliObservable {
    type Output = PauliObservable;
    fn neg(self) -> PauliObservable {
        self.scale(-ONE)
    }
}

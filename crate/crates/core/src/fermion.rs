//! Second-quantized fermionic observables and the Jordan-Wigner map.
//!
//! Mode `j` maps to qubit `j`; occupied is `|1>`. Under the map
//! `c†_j = (X_j - iY_j)/2 · Z_{j-1}···Z_0` and
//! `c_j  = (X_j + iY_j)/2 · Z_{j-1}···Z_0`.
//!
//! Text form: a sum of terms, each an optional coefficient followed by
//! ladder factors, `<site>^` for creation and `<site>` for annihilation:
//! `1.5 0^ 1^ 1 0 + (0,1) 2^ 0`. A bare integer is always a site, so a
//! coefficient needs a decimal point, an exponent, or the `(re,im)` form.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::dense::DenseMatrix;
use crate::lex::{fmt_f64, Cursor};
use crate::pauli::{PauliObservable, PauliOp, PauliString, PauliTerm, DEFAULT_PRUNE_TOLERANCE};

/// Largest mode count [`FermionObservable::to_dense`] will expand.
pub const MAX_DENSE_MODES: usize = 10;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const HALF: Complex64 = Complex64::new(0.5, 0.0);
const HALF_I: Complex64 = Complex64::new(0.0, 0.5);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FermionError {
    #[error("empty fermion string")]
    Empty,
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("non-finite coefficient {0}")]
    NonFinite(Complex64),
    #[error("dense expansion of {modes} modes exceeds the limit of {MAX_DENSE_MODES}")]
    DimensionOverflow { modes: usize },
    #[error("observable acts on {needed} modes but only {available} requested")]
    TooFewModes { needed: usize, available: usize },
}

/// Creation (`dagger`) or annihilation operator on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LadderOp {
    pub site: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn creation(site: usize) -> Self {
        Self { site, dagger: true }
    }

    pub fn annihilation(site: usize) -> Self {
        Self {
            site,
            dagger: false,
        }
    }

    pub fn adjoint(self) -> Self {
        Self {
            dagger: !self.dagger,
            ..self
        }
    }

    // Normal-order rank: creations first, then by site.
    fn rank(self) -> (bool, usize) {
        (!self.dagger, self.site)
    }

    fn to_pauli(self) -> PauliObservable {
        let string = |op| {
            let (_, s) = PauliString::from_factors(
                core::iter::once((self.site, op)).chain((0..self.site).map(|q| (q, PauliOp::Z))),
            );
            s
        };
        let y = if self.dagger { -HALF_I } else { HALF_I };
        PauliObservable::from_terms([
            PauliTerm::new(HALF, string(PauliOp::X)).expect("finite"),
            PauliTerm::new(y, string(PauliOp::Y)).expect("finite"),
        ])
    }

    /// Dense matrix on `n_modes` modes, built from its action on basis
    /// states: `c†_j|n> = (-1)^{popcount(n & (2^j - 1))} |n + 2^j>` when mode
    /// `j` is empty, otherwise zero; `c_j` is the transpose.
    fn to_dense(self, n_modes: usize) -> DenseMatrix {
        let dim = 1usize << n_modes;
        let bit = 1usize << self.site;
        let mut m = DenseMatrix::zeros(dim);
        for n in 0..dim {
            if n & bit != 0 {
                continue;
            }
            let sign = if (n & (bit - 1)).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            let (row, col) = if self.dagger {
                (n | bit, n)
            } else {
                (n, n | bit)
            };
            m[(row, col)] = Complex64::new(sign, 0.0);
        }
        m
    }
}

impl Ord for LadderOp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for LadderOp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "{}^", self.site)
        } else {
            write!(f, "{}", self.site)
        }
    }
}

/// Coefficient times an ordered product of ladder operators.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    coefficient: Complex64,
    ops: Vec<LadderOp>,
}

impl FermionTerm {
    pub fn new(coefficient: Complex64, ops: Vec<LadderOp>) -> Result<Self, FermionError> {
        if !(coefficient.re.is_finite() && coefficient.im.is_finite()) {
            return Err(FermionError::NonFinite(coefficient));
        }
        Ok(Self { coefficient, ops })
    }

    pub fn coefficient(&self) -> Complex64 {
        self.coefficient
    }

    pub fn ops(&self) -> &[LadderOp] {
        &self.ops
    }

    /// Reversed product of adjoints with a conjugated coefficient.
    pub fn adjoint(&self) -> Self {
        Self {
            coefficient: self.coefficient.conj(),
            ops: self.ops.iter().rev().map(|o| o.adjoint()).collect(),
        }
    }

    fn is_normal_ordered(&self) -> bool {
        self.ops.windows(2).all(|w| w[0] < w[1])
    }
}

impl fmt::Display for FermionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{})",
            fmt_f64(self.coefficient.re),
            fmt_f64(self.coefficient.im)
        )?;
        for op in &self.ops {
            write!(f, " {op}")?;
        }
        Ok(())
    }
}

/// Sum of fermion terms, kept in the order given.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FermionObservable {
    terms: Vec<FermionTerm>,
}

impl FermionObservable {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = FermionTerm>>(terms: I) -> Self {
        Self {
            terms: terms.into_iter().collect(),
        }
    }

    pub fn terms(&self) -> &[FermionTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// One more than the highest mode index referenced.
    pub fn num_modes(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| &t.ops)
            .map(|o| o.site + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|t| FermionTerm {
            coefficient: t.coefficient * c,
            ops: t.ops.clone(),
        }))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_terms(self.terms.iter().map(FermionTerm::adjoint))
    }

    /// Canonical form: creations before annihilations, sites ascending in
    /// each block, identical op sequences merged and zero terms dropped.
    ///
    /// Every adjacent swap flips the sign; swapping `c_i c†_i` also emits
    /// the contraction `δ_ii = 1`. A repeated ladder operator kills the term.
    pub fn normal_order(&self) -> Self {
        let mut merged: BTreeMap<Vec<LadderOp>, Complex64> = BTreeMap::new();
        let mut work: Vec<FermionTerm> = self.terms.clone();
        while let Some(mut t) = work.pop() {
            if t.ops.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            let Some(i) = t.ops.windows(2).position(|w| w[0] > w[1]) else {
                *merged.entry(t.ops).or_default() += t.coefficient;
                continue;
            };
            let (a, b) = (t.ops[i], t.ops[i + 1]);
            if a.site == b.site && !a.dagger && b.dagger {
                let mut contracted = t.ops.clone();
                contracted.drain(i..i + 2);
                work.push(FermionTerm {
                    coefficient: t.coefficient,
                    ops: contracted,
                });
            }
            t.ops.swap(i, i + 1);
            t.coefficient = -t.coefficient;
            work.push(t);
        }
        Self::from_terms(
            merged
                .into_iter()
                .filter(|(_, c)| c.norm() > DEFAULT_PRUNE_TOLERANCE)
                .map(|(ops, coefficient)| FermionTerm { coefficient, ops }),
        )
    }

    /// True when every term is already in canonical order.
    pub fn is_normal_ordered(&self) -> bool {
        self.terms.iter().all(FermionTerm::is_normal_ordered)
    }

    /// Jordan-Wigner image, simplified.
    pub fn jordan_wigner(&self) -> PauliObservable {
        let mut out = PauliObservable::zero();
        for t in &self.terms {
            let mut product = PauliObservable::identity(t.coefficient);
            for op in &t.ops {
                product = product.multiply(&op.to_pauli());
            }
            out = out.add(&product);
        }
        out.simplify(DEFAULT_PRUNE_TOLERANCE)
    }

    /// Literal dense matrix on `n_modes` modes, as a product of ladder
    /// matrices. Intended as a test oracle.
    pub fn to_dense(&self, n_modes: usize) -> Result<DenseMatrix, FermionError> {
        if n_modes > MAX_DENSE_MODES {
            return Err(FermionError::DimensionOverflow { modes: n_modes });
        }
        let needed = self.num_modes();
        if needed > n_modes {
            return Err(FermionError::TooFewModes {
                needed,
                available: n_modes,
            });
        }
        let dim = 1usize << n_modes;
        let mut total = DenseMatrix::zeros(dim);
        for t in &self.terms {
            let mut m = DenseMatrix::identity(dim).scale(t.coefficient);
            for op in &t.ops {
                m = &m * &op.to_dense(n_modes);
            }
            total = &total + &m;
        }
        Ok(total)
    }
}

/// Free-function form of [`FermionObservable::to_dense`].
pub fn fermion_to_dense(
    obs: &FermionObservable,
    n_modes: usize,
) -> Result<DenseMatrix, FermionError> {
    obs.to_dense(n_modes)
}

/// Free-function form of [`FermionObservable::jordan_wigner`].
pub fn jordan_wigner(obs: &FermionObservable) -> PauliObservable {
    obs.jordan_wigner()
}

/// Prints the normal-ordered canonical form.
impl fmt::Display for FermionObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let canonical = self.normal_order();
        if canonical.is_empty() {
            return f.write_str("(0,0)");
        }
        for (i, t) in canonical.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for FermionObservable {
    type Err = FermionError;

    fn from_str(text: &str) -> Result<Self, FermionError> {
        parse_fermion(text)
    }
}

fn syntax(cur: &Cursor<'_>, message: impl Into<String>) -> FermionError {
    FermionError::Syntax {
        pos: cur.pos(),
        message: message.into(),
    }
}

/// True when the cursor sits on a real literal (fraction or exponent).
fn at_real(cur: &Cursor<'_>) -> bool {
    cur.clone().number().is_some_and(|n| n.is_real)
}

/// Parses the fermion grammar, keeping terms and factor order as written.
pub fn parse_fermion(text: &str) -> Result<FermionObservable, FermionError> {
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    if cur.is_eof() {
        return Err(FermionError::Empty);
    }
    let mut terms = Vec::new();
    let mut sign = 1.0;
    if cur.peek() == Some(b'-') && !at_real(&cur) {
        cur.bump();
        sign = -1.0;
    } else if cur.peek() == Some(b'+') && !at_real(&cur) {
        cur.bump();
    }
    loop {
        cur.skip_ws();
        let mut coefficient = ONE;
        let mut saw_anything = false;
        if cur.eat(b'(') {
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
            saw_anything = true;
        } else if at_real(&cur) {
            let n = cur.number().expect("checked by at_real");
            coefficient = Complex64::new(n.value, 0.0);
            saw_anything = true;
        }

        let mut ops = Vec::new();
        loop {
            cur.skip_ws();
            if !matches!(cur.peek(), Some(b'0'..=b'9')) {
                break;
            }
            if at_real(&cur) {
                return Err(syntax(
                    &cur,
                    "coefficient must precede the ladder operators",
                ));
            }
            let site = cur
                .uint()
                .ok_or_else(|| syntax(&cur, "mode index too large"))?;
            let dagger = cur.eat(b'^');
            ops.push(LadderOp { site, dagger });
            saw_anything = true;
        }
        if !saw_anything {
            return Err(if cur.is_eof() {
                syntax(&cur, "expected a term, found end of input")
            } else {
                syntax(
                    &cur,
                    alloc::format!("expected a term, found {:?}", cur.excerpt()),
                )
            });
        }
        terms.push(FermionTerm::new(coefficient * sign, ops)?);

        cur.skip_ws();
        match cur.peek() {
            None => break,
            Some(b'+') => sign = 1.0,
            Some(b'-') => sign = -1.0,
            Some(_) => {
                return Err(syntax(
                    &cur,
                    alloc::format!("expected '+' or '-', found {:?}", cur.excerpt()),
                ))
            }
        }
        cur.bump();
    }
    Ok(FermionObservable::from_terms(terms))
}

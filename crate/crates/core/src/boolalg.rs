//! Boolean and GF(2) matrix/vector algebra.
//!
//! Matrices are square, dense, and word-packed: one row is a run of `u64`
//! words, so the elementwise operators and the Boolean product work a word at
//! a time. Over GF(2) the same bit patterns are reused: `xor` is addition,
//! `and` is multiplication, and complement is addition of the all-ones
//! matrix. All values are immutable after construction; operations return
//! fresh values and are safe to share across threads.
//!
//! Dimension mismatches are programming errors and panic. Data-dependent
//! failures (the scalar product's definedness condition) return `Result`.

use std::fmt;
use thiserror::Error;

const WORD_BITS: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

/// Mask selecting the valid bits of the last word of an `n`-bit row.
fn tail_mask(n: usize) -> u64 {
    let rem = n % WORD_BITS;
    if rem == 0 {
        u64::MAX
    } else {
        (1u64 << rem) - 1
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScalarProductError {
    /// The definedness condition `(L1 + K1)(1 + L2 + K2) = 0` fails.
    #[error("scalar product undefined: left support meets the right gap at {count} positions")]
    Undefined { count: usize },
}

/// Dense square bit matrix with word-packed rows.
///
/// Unused tail bits of each row are kept zero, so derived equality and
/// hashing are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    n: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(n: usize) -> Self {
        BoolMatrix {
            n,
            stride: words_for(n),
            bits: vec![0; n * words_for(n)],
        }
    }

    pub fn ones(n: usize) -> Self {
        let mut m = BoolMatrix {
            n,
            stride: words_for(n),
            bits: vec![u64::MAX; n * words_for(n)],
        };
        m.mask_tails();
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BoolMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from explicit 0/1 rows. Panics unless the rows form a square.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut m = BoolMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), n, "row {i} has length {} != {n}", row.len());
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b != 0);
            }
        }
        m
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        let w = self.bits[i * self.stride + j / WORD_BITS];
        (w >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        assert!(i < self.n && j < self.n, "({i},{j}) out of range for n={}", self.n);
        let w = &mut self.bits[i * self.stride + j / WORD_BITS];
        let bit = 1u64 << (j % WORD_BITS);
        if v {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    fn mask_tails(&mut self) {
        if self.n == 0 {
            return;
        }
        let mask = tail_mask(self.n);
        for i in 0..self.n {
            self.bits[i * self.stride + self.stride - 1] &= mask;
        }
    }

    fn zip(&self, other: &BoolMatrix, f: impl Fn(u64, u64) -> u64) -> BoolMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch: {} vs {}", self.n, other.n);
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let mut m = BoolMatrix {
            n: self.n,
            stride: self.stride,
            bits,
        };
        m.mask_tails();
        m
    }

    pub fn and(&self, other: &BoolMatrix) -> BoolMatrix {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BoolMatrix) -> BoolMatrix {
        self.zip(other, |a, b| a | b)
    }

    /// Elementwise addition over GF(2).
    pub fn xor(&self, other: &BoolMatrix) -> BoolMatrix {
        self.zip(other, |a, b| a ^ b)
    }

    pub fn not(&self) -> BoolMatrix {
        let mut m = BoolMatrix {
            n: self.n,
            stride: self.stride,
            bits: self.bits.iter().map(|&a| !a).collect(),
        };
        m.mask_tails();
        m
    }

    /// Boolean matrix product: or over and, `(a.b)[i][j] = OR_k a[i][k] AND b[k][j]`.
    pub fn bool_product(&self, other: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch: {} vs {}", self.n, other.n);
        let mut out = BoolMatrix::zeros(self.n);
        for i in 0..self.n {
            let orow = i * out.stride;
            for k in 0..self.n {
                if self.get(i, k) {
                    let brow = k * other.stride;
                    for w in 0..self.stride {
                        out.bits[orow + w] |= other.bits[brow + w];
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> BoolMatrix {
        let mut out = BoolMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.set(j, i, true);
                }
            }
        }
        out
    }

    /// Boolean matrix-vector product, used by the compatibility check.
    pub fn matvec(&self, v: &BoolVector) -> BoolVector {
        assert_eq!(self.n, v.dim(), "dimension mismatch: {} vs {}", self.n, v.dim());
        let mut out = BoolVector::zeros(self.n);
        for i in 0..self.n {
            let row = &self.bits[i * self.stride..(i + 1) * self.stride];
            let hit = row.iter().zip(&v.bits).any(|(&a, &b)| a & b != 0);
            if hit {
                out.set(i, true);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positions of the set bits in row-major order.
    pub fn ones_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            for j in 0..self.n {
                write!(f, "{}", self.get(i, j) as u8)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Bit vector companion to [`BoolMatrix`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolVector {
    n: usize,
    bits: Vec<u64>,
}

impl BoolVector {
    pub fn zeros(n: usize) -> Self {
        BoolVector {
            n,
            bits: vec![0; words_for(n)],
        }
    }

    pub fn ones(n: usize) -> Self {
        let mut v = BoolVector {
            n,
            bits: vec![u64::MAX; words_for(n)],
        };
        v.mask_tail();
        v
    }

    pub fn from_bits<B: AsRef<[u8]>>(bits: B) -> Self {
        let bits = bits.as_ref();
        let mut v = BoolVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b != 0);
        }
        v
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i) as u8).collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        (self.bits[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.n, "{i} out of range for n={}", self.n);
        let bit = 1u64 << (i % WORD_BITS);
        if v {
            self.bits[i / WORD_BITS] |= bit;
        } else {
            self.bits[i / WORD_BITS] &= !bit;
        }
    }

    fn mask_tail(&mut self) {
        if self.n > 0 {
            let last = self.bits.len() - 1;
            self.bits[last] &= tail_mask(self.n);
        }
    }

    fn zip(&self, other: &BoolVector, f: impl Fn(u64, u64) -> u64) -> BoolVector {
        assert_eq!(self.n, other.n, "dimension mismatch: {} vs {}", self.n, other.n);
        let mut v = BoolVector {
            n: self.n,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        };
        v.mask_tail();
        v
    }

    pub fn and(&self, other: &BoolVector) -> BoolVector {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BoolVector) -> BoolVector {
        self.zip(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &BoolVector) -> BoolVector {
        self.zip(other, |a, b| a ^ b)
    }

    pub fn not(&self) -> BoolVector {
        let mut v = BoolVector {
            n: self.n,
            bits: self.bits.iter().map(|&a| !a).collect(),
        };
        v.mask_tail();
        v
    }

    /// The 1-norm: or of all components. Empty vectors give 0.
    pub fn any(&self) -> bool {
        self.bits.iter().any(|&w| w != 0)
    }

    pub fn is_zero(&self) -> bool {
        !self.any()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Debug for BoolVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolVector(")?;
        for i in 0..self.n {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
    }
}

/// Tensor (Kronecker) product of two vectors: `result[i][j] = u[i] AND v[j]`.
pub fn kronecker(u: &BoolVector, v: &BoolVector) -> BoolMatrix {
    assert_eq!(u.dim(), v.dim(), "dimension mismatch: {} vs {}", u.dim(), v.dim());
    let n = u.dim();
    let mut out = BoolMatrix::zeros(n);
    for i in 0..n {
        if u.get(i) {
            let row = i * out.stride;
            for (w, &b) in v.bits.iter().enumerate() {
                out.bits[row + w] = b;
            }
        }
    }
    out
}

/// A permutation of `{0..n-1}` together with its matrix action.
///
/// The associated permutation matrix has a 1 at `(i, map[i])`; conjugating a
/// matrix moves the entry at `(map[i], map[j])` to `(i, j)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    /// Panics unless `map` is a bijection on `{0..n-1}`.
    pub fn new(map: Vec<usize>) -> Self {
        let n = map.len();
        let mut seen = vec![false; n];
        for &x in &map {
            assert!(x < n && !seen[x], "not a bijection: {map:?}");
            seen[x] = true;
        }
        Permutation { map }
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &x)| i == x)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { map: inv }
    }

    /// Composition `self . other`, i.e. `(self.compose(other)).apply(i) = self.apply(other.apply(i))`.
    ///
    /// Actions nest as `a.act(b.act(x)) = b.compose(a).act(x)`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.dim(), other.dim());
        Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    /// The permutation matrix: single 1 per row and column.
    pub fn to_matrix(&self) -> BoolMatrix {
        let mut m = BoolMatrix::zeros(self.map.len());
        for (i, &j) in self.map.iter().enumerate() {
            m.set(i, j, true);
        }
        m
    }

    /// Conjugation action on a matrix: `sigma . m = sigma (.) m (.) sigma^t`.
    pub fn act_matrix(&self, m: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.dim(), m.dim(), "dimension mismatch: {} vs {}", self.dim(), m.dim());
        let mut out = BoolMatrix::zeros(m.dim());
        for i in 0..m.dim() {
            let si = self.map[i];
            for j in 0..m.dim() {
                if m.get(si, self.map[j]) {
                    out.set(i, j, true);
                }
            }
        }
        out
    }

    pub fn act_vector(&self, v: &BoolVector) -> BoolVector {
        assert_eq!(self.dim(), v.dim(), "dimension mismatch: {} vs {}", self.dim(), v.dim());
        let mut out = BoolVector::zeros(v.dim());
        for i in 0..v.dim() {
            if v.get(self.map[i]) {
                out.set(i, true);
            }
        }
        out
    }

    /// Action on a Boolean complex matrix: both parts conjugated, diagonal
    /// labels carried along.
    pub fn act_complex(&self, m: &ComplexBoolMatrix) -> ComplexBoolMatrix {
        ComplexBoolMatrix {
            real: self.act_matrix(&m.real),
            imag: self.act_matrix(&m.imag),
            labels: m
                .labels
                .as_ref()
                .map(|ls| (0..ls.len()).map(|i| ls[self.map[i]].clone()).collect()),
        }
    }

    /// True when the permutation only moves indices within equal labels.
    pub fn preserves_labels<T: PartialEq>(&self, labels: &[T]) -> bool {
        assert_eq!(labels.len(), self.dim());
        self.map.iter().enumerate().all(|(i, &x)| labels[i] == labels[x])
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.map)
    }
}

/// Pair of disjoint bit matrices treated as `real + i*imag`.
///
/// The certainty part lists edges that are present, the nihil part edges that
/// must be absent. Checked constructors enforce the disjointness membership
/// condition; diagnostic values (for example coherence results, which may
/// flag both kinds of conflict at one position) use [`ComplexBoolMatrix::from_parts`].
#[derive(Clone, PartialEq, Eq)]
pub struct ComplexBoolMatrix {
    pub real: BoolMatrix,
    pub imag: BoolMatrix,
    pub labels: Option<Vec<String>>,
}

impl ComplexBoolMatrix {
    /// Checked constructor: requires `real AND imag = 0`.
    pub fn new(real: BoolMatrix, imag: BoolMatrix) -> Result<Self, DisjointnessError> {
        assert_eq!(real.dim(), imag.dim(), "dimension mismatch");
        let overlap = real.and(&imag).count_ones();
        if overlap != 0 {
            return Err(DisjointnessError { overlap });
        }
        Ok(ComplexBoolMatrix {
            real,
            imag,
            labels: None,
        })
    }

    /// Unchecked constructor for diagnostic values.
    pub fn from_parts(real: BoolMatrix, imag: BoolMatrix) -> Self {
        assert_eq!(real.dim(), imag.dim(), "dimension mismatch");
        ComplexBoolMatrix {
            real,
            imag,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.real.dim());
        self.labels = Some(labels);
        self
    }

    pub fn dim(&self) -> usize {
        self.real.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.real.is_zero() && self.imag.is_zero()
    }

    pub fn is_disjoint(&self) -> bool {
        self.real.and(&self.imag).is_zero()
    }

    /// Scalar product `<self, other>`.
    ///
    /// Defined only when `(L1 + K1)(1 + L2 + K2) = 0` elementwise over GF(2);
    /// expanding `(L1 + iK1)(1 + K2 + i(1 + L2))` gives the result parts
    /// `alpha = L1 nK2 + K1 nL2` and `beta = L1 nL2 + K1 nK2`, which are
    /// disjoint whenever the condition holds.
    pub fn scalar_product(
        &self,
        other: &ComplexBoolMatrix,
    ) -> Result<ComplexBoolMatrix, ScalarProductError> {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let support = self.real.xor(&self.imag);
        let gap = other.real.xor(&other.imag).not();
        let bad = support.and(&gap);
        if !bad.is_zero() {
            return Err(ScalarProductError::Undefined {
                count: bad.count_ones(),
            });
        }
        let n_real2 = other.real.not();
        let n_imag2 = other.imag.not();
        let alpha = self.real.and(&n_imag2).xor(&self.imag.and(&n_real2));
        let beta = self.real.and(&n_real2).xor(&self.imag.and(&n_imag2));
        Ok(ComplexBoolMatrix {
            real: alpha,
            imag: beta,
            labels: self.labels.clone(),
        })
    }
}

impl fmt::Debug for ComplexBoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexBoolMatrix(real: {:?}, imag: {:?})", self.real, self.imag)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("real and imaginary parts overlap at {overlap} positions")]
pub struct DisjointnessError {
    pub overlap: usize,
}

/// Which formulation of the range operators to evaluate.
///
/// Both compute the same function; `BooleanPrimed` uses or/and directly while
/// `Gf2` goes through the `1 + prod(1 + prod ...)` form. Their agreement is a
/// tested property, not an assumption.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeKind {
    BooleanPrimed,
    Gf2,
}

/// Descending range operator: or over `y` of the and over `x in [t0, y]` of
/// `f(x, y)`. Empty ranges (`t0 > t1`) give the zero matrix.
pub fn range_nabla(
    kind: RangeKind,
    dim: usize,
    t0: isize,
    t1: isize,
    mut f: impl FnMut(isize, isize) -> BoolMatrix,
) -> BoolMatrix {
    match kind {
        RangeKind::BooleanPrimed => {
            let mut acc = BoolMatrix::zeros(dim);
            for y in t0..=t1 {
                let mut inner = BoolMatrix::ones(dim);
                for x in t0..=y {
                    inner = inner.and(&f(x, y));
                }
                acc = acc.or(&inner);
            }
            acc
        }
        RangeKind::Gf2 => {
            let one = BoolMatrix::ones(dim);
            let mut acc = one.clone();
            for y in t0..=t1 {
                let mut inner = one.clone();
                for x in t0..=y {
                    inner = inner.and(&f(x, y));
                }
                acc = acc.and(&one.xor(&inner));
            }
            one.xor(&acc)
        }
    }
}

/// Ascending range operator: or over `y` of the and over `x in [y, t1]` of
/// `f(x, y)`. Empty ranges give the zero matrix.
pub fn range_delta(
    kind: RangeKind,
    dim: usize,
    t0: isize,
    t1: isize,
    mut f: impl FnMut(isize, isize) -> BoolMatrix,
) -> BoolMatrix {
    match kind {
        RangeKind::BooleanPrimed => {
            let mut acc = BoolMatrix::zeros(dim);
            for y in t0..=t1 {
                let mut inner = BoolMatrix::ones(dim);
                for x in y..=t1 {
                    inner = inner.and(&f(x, y));
                }
                acc = acc.or(&inner);
            }
            acc
        }
        RangeKind::Gf2 => {
            let one = BoolMatrix::ones(dim);
            let mut acc = one.clone();
            for y in t0..=t1 {
                let mut inner = one.clone();
                for x in y..=t1 {
                    inner = inner.and(&f(x, y));
                }
                acc = acc.and(&one.xor(&inner));
            }
            one.xor(&acc)
        }
    }
}

/// Deterministic 64-bit generator (splitmix64). Used for every seeded
/// strategy so runs are bit-reproducible across platforms.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform-enough draw below `n` (n > 0). Modulo bias is irrelevant here;
    /// what matters is that the stream is fixed.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    pub fn bool_with(&mut self, num: u64, den: u64) -> bool {
        self.next_u64() % den < num
    }
}

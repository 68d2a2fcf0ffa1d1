use std::fmt;
use std::ops::Index;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{ArithError, Rat};

/// Dense vector of exact rationals.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatVector(Vec<Rat>);

impl RatVector {
    pub fn new(entries: Vec<Rat>) -> Self {
        RatVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        RatVector(vec![Rat::zero(); dim])
    }

    pub fn from_ints(entries: &[i64]) -> Self {
        RatVector(entries.iter().map(|&n| Rat::from_int(n)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rat> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Rat] {
        &self.0
    }

    pub fn set(&mut self, i: usize, value: Rat) {
        self.0[i] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Rat::is_zero)
    }

    /// Coordinatewise dot product (no inner-product matrix involved).
    pub fn dot(&self, other: &RatVector) -> Rat {
        assert_eq!(self.dim(), other.dim(), "dot of mismatched dimensions");
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &RatVector) -> RatVector {
        assert_eq!(self.dim(), other.dim(), "sum of mismatched dimensions");
        RatVector(self.iter().zip(other.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RatVector) -> RatVector {
        assert_eq!(self.dim(), other.dim(), "difference of mismatched dimensions");
        RatVector(self.iter().zip(other.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: &Rat) -> RatVector {
        RatVector(self.iter().map(|a| a * c).collect())
    }

    pub fn neg(&self) -> RatVector {
        RatVector(self.iter().map(|a| -a).collect())
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.iter().map(Rat::to_f64).collect()
    }
}

impl Index<usize> for RatVector {
    type Output = Rat;
    fn index(&self, i: usize) -> &Rat {
        &self.0[i]
    }
}

impl fmt::Debug for RatVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    /// Builds a matrix from rows, which must all have the same length.
    pub fn from_rows(rows: Vec<RatVector>) -> Result<Self, ArithError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, RatVector::dim);
        for r in &rows {
            if r.dim() != ncols {
                return Err(ArithError::RaggedRows {
                    expected: ncols,
                    found: r.dim(),
                });
            }
        }
        let data = rows.into_iter().flat_map(|r| r.0).collect();
        Ok(RatMatrix { nrows, ncols, data })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        RatMatrix::from_rows(rows.iter().map(|r| RatVector::from_ints(r)).collect())
            .expect("integer literal rows are rectangular")
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        RatMatrix { nrows, ncols, data }
    }

    pub fn identity(n: usize) -> Self {
        RatMatrix::from_fn(n, n, |i, j| if i == j { Rat::one() } else { Rat::zero() })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rat) {
        self.data[i * self.ncols + j] = value;
    }

    pub fn row(&self, i: usize) -> RatVector {
        RatVector(self.data[i * self.ncols..(i + 1) * self.ncols].to_vec())
    }

    pub fn col(&self, j: usize) -> RatVector {
        RatVector((0..self.nrows).map(|i| self.get(i, j).clone()).collect())
    }

    pub fn rows(&self) -> Vec<RatVector> {
        (0..self.nrows).map(|i| self.row(i)).collect()
    }

    pub fn transpose(&self) -> RatMatrix {
        RatMatrix::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i).clone())
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols
            && (0..self.nrows)
                .all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul_vec(&self, v: &RatVector) -> RatVector {
        assert_eq!(self.ncols, v.dim(), "matrix-vector dimension mismatch");
        RatVector(
            (0..self.nrows)
                .map(|i| (0..self.ncols).map(|j| self.get(i, j) * &v[j]).sum())
                .collect(),
        )
    }

    pub fn mul_mat(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.ncols, other.nrows, "matrix-matrix dimension mismatch");
        RatMatrix::from_fn(self.nrows, other.ncols, |i, j| {
            (0..self.ncols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    /// Copy of `self` with column `j` replaced by `v`.
    pub fn replace_col(&self, j: usize, v: &RatVector) -> RatMatrix {
        assert_eq!(self.nrows, v.dim(), "replacement column has wrong length");
        let mut out = self.clone();
        for i in 0..self.nrows {
            out.set(i, j, v[i].clone());
        }
        out
    }

    /// Copy of `self` with row `i` and column `j` removed.
    pub fn minor(&self, i: usize, j: usize) -> RatMatrix {
        RatMatrix::from_fn(self.nrows - 1, self.ncols - 1, |r, c| {
            let rr = if r < i { r } else { r + 1 };
            let cc = if c < j { c } else { c + 1 };
            self.get(rr, cc).clone()
        })
    }

    /// Signed cofactor `(-1)^{i+j} det(minor(i, j))`.
    pub fn cofactor(&self, i: usize, j: usize) -> Result<Rat, ArithError> {
        let d = self.minor(i, j).det()?;
        Ok(if (i + j).is_multiple_of(2) { d } else { -d })
    }

    /// Exact determinant by Bareiss fraction-free elimination. Denominators
    /// are cleared per row first, so all intermediate divisions are exact
    /// integer divisions. The empty matrix has determinant 1.
    pub fn det(&self) -> Result<Rat, ArithError> {
        if self.nrows != self.ncols {
            return Err(ArithError::NonSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        let n = self.nrows;
        if n == 0 {
            return Ok(Rat::one());
        }

        // Scale each row to integers, remembering the combined scale factor.
        let mut scale = BigInt::one();
        let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut row_lcm = BigInt::one();
            for j in 0..n {
                row_lcm = row_lcm.lcm(self.get(i, j).denom());
            }
            let row = (0..n)
                .map(|j| {
                    let e = self.get(i, j);
                    e.numer() * (&row_lcm / e.denom())
                })
                .collect();
            scale *= &row_lcm;
            m.push(row);
        }

        let mut sign_flip = false;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                    Some(r) => {
                        m.swap(k, r);
                        sign_flip = !sign_flip;
                    }
                    None => return Ok(Rat::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = t / &prev;
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }

        let mut d = m[n - 1][n - 1].clone();
        if sign_flip {
            d = -d;
        }
        Rat::new(d, scale)
    }

    /// Solves `self * x = rhs` for square nonsingular `self` by Cramer's
    /// rule: `x_j = det(self with column j replaced by rhs) / det(self)`,
    /// which is exactly the quotient the volume formulas consume.
    pub fn solve(&self, rhs: &RatVector) -> Result<RatVector, ArithError> {
        if self.nrows != self.ncols {
            return Err(ArithError::NonSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        if rhs.dim() != self.nrows {
            return Err(ArithError::RaggedRows {
                expected: self.nrows,
                found: rhs.dim(),
            });
        }
        let d = self.det()?;
        if d.is_zero() {
            return Err(ArithError::Singular);
        }
        let xs = (0..self.ncols)
            .map(|j| Ok(self.replace_col(j, rhs).det()? / &d))
            .collect::<Result<Vec<_>, ArithError>>()?;
        Ok(RatVector(xs))
    }

    /// Rank via exact Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m: Vec<RatVector> = self.rows();
        let mut rank = 0;
        let mut col = 0;
        while rank < self.nrows && col < self.ncols {
            let pivot = (rank..self.nrows).find(|&r| !m[r][col].is_zero());
            let Some(p) = pivot else {
                col += 1;
                continue;
            };
            m.swap(rank, p);
            for i in rank + 1..self.nrows {
                if m[i][col].is_zero() {
                    continue;
                }
                let factor = &m[i][col] / &m[rank][col];
                m[i] = m[i].sub(&m[rank].scale(&factor));
            }
            rank += 1;
            col += 1;
        }
        rank
    }

    /// Sylvester's criterion: symmetric with all leading principal minors
    /// strictly positive.
    pub fn is_positive_definite(&self) -> Result<bool, ArithError> {
        if self.nrows != self.ncols {
            return Err(ArithError::NonSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        if !self.is_symmetric() {
            return Ok(false);
        }
        for k in 1..=self.nrows {
            let leading = RatMatrix::from_fn(k, k, |i, j| self.get(i, j).clone());
            if !leading.det()?.is_positive() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows).map(|i| self.row(i).to_f64_vec()).collect()
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.nrows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Whether `v` lies in the linear span of `vectors`, by exact rank comparison.
pub fn span_contains(vectors: &[RatVector], v: &RatVector) -> bool {
    if vectors.is_empty() {
        return v.is_zero();
    }
    let base = RatMatrix::from_rows(vectors.to_vec()).expect("spanning set is rectangular");
    let mut extended = vectors.to_vec();
    extended.push(v.clone());
    let ext = RatMatrix::from_rows(extended).expect("extended set is rectangular");
    base.rank() == ext.rank()
}

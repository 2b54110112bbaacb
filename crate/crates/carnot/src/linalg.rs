//! Exact dense linear algebra over [`Scalar`].
//!
//! Gaussian elimination with first-nonzero pivoting; no numeric rank
//! decisions anywhere in this module.

use crate::scalar::Scalar;

pub type SVec = Vec<Scalar>;

/// Dense row-major matrix of exact scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct SMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Scalar>,
}

impl SMat {
    pub fn zero(rows: usize, cols: usize) -> SMat {
        SMat {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> SMat {
        let mut m = SMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<SVec>) -> SMat {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        assert!(rows.iter().all(|row| row.len() == c));
        SMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> SMat {
        let mut m = SMat::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(entries: &[Scalar]) -> SMat {
        let n = entries.len();
        let mut m = SMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i].clone();
        }
        m
    }

    pub fn row(&self, i: usize) -> SVec {
        (0..self.cols).map(|j| self[(i, j)].clone()).collect()
    }

    pub fn col(&self, j: usize) -> SVec {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> SMat {
        SMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn add(&self, other: &SMat) -> SMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &other[(i, j)])
    }

    pub fn sub(&self, other: &SMat) -> SMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &other[(i, j)])
    }

    pub fn scale(&self, s: &Scalar) -> SMat {
        SMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * s)
    }

    pub fn mul(&self, other: &SMat) -> SMat {
        assert_eq!(self.cols, other.rows);
        SMat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Scalar::zero();
            for k in 0..self.cols {
                if !self[(i, k)].is_zero() && !other[(k, j)].is_zero() {
                    acc = acc + &self[(i, k)] * &other[(k, j)];
                }
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> SVec {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Scalar::zero();
                for k in 0..self.cols {
                    if !self[(i, k)].is_zero() && !v[k].is_zero() {
                        acc = acc + &self[(i, k)] * &v[k];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Submatrix on the given row and column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SMat {
        SMat::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows[i], cols[j])].clone()
        })
    }

    /// Row echelon reduction in place; returns the rank and pivot columns.
    fn row_reduce(&mut self) -> (usize, Vec<usize>) {
        let mut pivots = Vec::new();
        let mut lead = 0usize;
        for col in 0..self.cols {
            if lead >= self.rows {
                break;
            }
            let Some(piv) = (lead..self.rows).find(|&r| !self[(r, col)].is_zero()) else {
                continue;
            };
            for j in 0..self.cols {
                let tmp = self[(piv, j)].clone();
                self[(piv, j)] = self[(lead, j)].clone();
                self[(lead, j)] = tmp;
            }
            let inv = self[(lead, col)].inv().unwrap();
            for j in 0..self.cols {
                self[(lead, j)] = &self[(lead, j)] * &inv;
            }
            for r in 0..self.rows {
                if r != lead && !self[(r, col)].is_zero() {
                    let factor = self[(r, col)].clone();
                    for j in 0..self.cols {
                        self[(r, j)] = &self[(r, j)] - &(&factor * &self[(lead, j)]);
                    }
                }
            }
            pivots.push(col);
            lead += 1;
        }
        (pivots.len(), pivots)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().0
    }

    pub fn det(&self) -> Scalar {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Scalar::one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Scalar::zero();
            };
            if piv != col {
                for j in 0..n {
                    let tmp = m[(piv, j)].clone();
                    m[(piv, j)] = m[(col, j)].clone();
                    m[(col, j)] = tmp;
                }
                det = -det;
            }
            det = &det * &m[(col, col)];
            let inv = m[(col, col)].inv().unwrap();
            for r in col + 1..n {
                if !m[(r, col)].is_zero() {
                    let factor = &m[(r, col)] * &inv;
                    for j in col..n {
                        m[(r, j)] = &m[(r, j)] - &(&factor * &m[(col, j)]);
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<SMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = SMat::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        });
        let (rank, pivots) = aug.row_reduce();
        if rank < n || pivots.iter().take(n).ne((0..n).collect::<Vec<_>>().iter()) {
            return None;
        }
        Some(SMat::from_fn(n, n, |i, j| aug[(i, j + n)].clone()))
    }

    /// Solve `A x = b`; `None` when inconsistent. Free variables are set to 0.
    pub fn solve(&self, b: &[Scalar]) -> Option<SVec> {
        assert_eq!(self.rows, b.len());
        let mut aug = SMat::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                b[i].clone()
            }
        });
        let (_, pivots) = aug.row_reduce();
        if pivots.contains(&self.cols) {
            return None; // pivot in the augmented column
        }
        let mut x = vec![Scalar::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Exact basis of the right nullspace.
    pub fn nullspace(&self) -> Vec<SVec> {
        let mut m = self.clone();
        let (_, pivots) = m.row_reduce();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::new();
        for &f in &free {
            let mut v = vec![Scalar::zero(); self.cols];
            v[f] = Scalar::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(r, f)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Characteristic polynomial coefficients, low to high degree, monic of
    /// degree n (Faddeev–LeVerrier; exact over the field).
    pub fn char_poly(&self) -> SVec {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut coeffs = vec![Scalar::zero(); n + 1];
        coeffs[n] = Scalar::one();
        let mut m = SMat::identity(n);
        for k in 1..=n {
            m = self.mul(&m);
            let tr = (0..n).fold(Scalar::zero(), |acc, i| acc + m[(i, i)].clone());
            let c = -(&tr / &Scalar::from_int(k as i64));
            coeffs[n - k] = c.clone();
            for i in 0..n {
                m[(i, i)] = &m[(i, i)] + &c;
            }
        }
        coeffs
    }

    /// Symmetric positive definiteness by exact LDLᵀ: all pivots positive.
    pub fn is_positive_definite(&self) -> bool {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        // require symmetry
        for i in 0..n {
            for j in 0..i {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        let mut m = self.clone();
        for k in 0..n {
            if m[(k, k)].sign() <= 0 {
                return false;
            }
            let inv = m[(k, k)].inv().unwrap();
            for i in k + 1..n {
                if !m[(i, k)].is_zero() {
                    let factor = &m[(i, k)] * &inv;
                    for j in k..n {
                        m[(i, j)] = &m[(i, j)] - &(&factor * &m[(k, j)]);
                    }
                }
            }
        }
        true
    }

    /// Principal numeric embedding of the whole matrix.
    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_f64())
    }
}

impl std::ops::Index<(usize, usize)> for SMat {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

/// Rank of the span of a set of vectors.
pub fn span_rank(vectors: &[SVec]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    SMat::from_rows(vectors.to_vec()).rank()
}

/// Does `v` lie in the span of `vectors`?
pub fn in_span(vectors: &[SVec], v: &[Scalar]) -> bool {
    let r0 = span_rank(vectors);
    let mut all = vectors.to_vec();
    all.push(v.to_vec());
    span_rank(&all) == r0
}

pub fn vec_add(x: &[Scalar], y: &[Scalar]) -> SVec {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn vec_sub(x: &[Scalar], y: &[Scalar]) -> SVec {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn vec_scale(x: &[Scalar], s: &Scalar) -> SVec {
    x.iter().map(|a| a * s).collect()
}

pub fn vec_is_zero(x: &[Scalar]) -> bool {
    x.iter().all(|a| a.is_zero())
}

use crate::error::{Error, Result};

/// Square banded matrix with in-place LU factorization (no pivoting).
///
/// Entries outside `lower` sub-diagonals and `upper` super-diagonals are
/// structurally zero.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
    factorized: bool,
}

impl BandedMatrix {
    pub fn new(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
            factorized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(
            j + self.lower >= i && i + self.upper >= j,
            "({i},{j}) outside band"
        );
        (i + self.upper - j) * self.n + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// Doolittle factorization in place: unit lower factor below the diagonal.
    pub fn factorize(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular { row: k });
            }
            let i_max = (k + self.lower).min(n - 1);
            let j_max = (k + self.upper).min(n - 1);
            for i in (k + 1)..=i_max {
                let lik = self.get(i, k);
                if lik == 0.0 {
                    continue;
                }
                let lik = lik / pivot;
                self.set(i, k, lik);
                for j in (k + 1)..=j_max {
                    let v = self.get(i, j) - lik * self.get(k, j);
                    self.set(i, j, v);
                }
            }
        }
        self.factorized = true;
        Ok(())
    }

    /// Solves `A x = b` for every column of `b` (row-major, `cols` columns).
    pub fn solve(&self, b: &mut [f64], cols: usize) {
        assert!(self.factorized, "solve before factorize");
        let n = self.n;
        assert_eq!(b.len(), n * cols);
        for j in 0..n {
            let i_max = (j + self.lower).min(n - 1);
            for i in (j + 1)..=i_max {
                let l = self.get(i, j);
                if l != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= l * b[j * cols + c];
                    }
                }
            }
        }
        for j in (0..n).rev() {
            let d = self.get(j, j);
            for c in 0..cols {
                b[j * cols + c] /= d;
            }
            let i_min = j.saturating_sub(self.upper);
            for i in i_min..j {
                let u = self.get(i, j);
                if u != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= u * b[j * cols + c];
                    }
                }
            }
        }
    }

    /// Solves `Aᵀ x = b` using the same factors.
    pub fn solve_transposed(&self, b: &mut [f64], cols: usize) {
        assert!(self.factorized, "solve before factorize");
        let n = self.n;
        assert_eq!(b.len(), n * cols);
        // Uᵀ y = b
        for j in 0..n {
            let d = self.get(j, j);
            for c in 0..cols {
                b[j * cols + c] /= d;
            }
            let i_max = (j + self.upper).min(n - 1);
            for i in (j + 1)..=i_max {
                let u = self.get(j, i);
                if u != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= u * b[j * cols + c];
                    }
                }
            }
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let i_min = j.saturating_sub(self.lower);
            for i in i_min..j {
                let l = self.get(j, i);
                if l != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= l * b[j * cols + c];
                    }
                }
            }
        }
    }
}

//! Dense p×p linear algebra for the calibration normal equations. The
//! systems are tiny (p is the number of auxiliary columns), so a partially
//! pivoted LU is all that is needed.

use crate::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

/// LU factorization with partial pivoting, PA = LU.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

/// Elimination broke down: no usable pivot for this column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub column: usize,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self, Singular> {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tiny = scale * T::epsilon() * T::count(n.max(1));
        for col in 0..n {
            let (pivot_row, pivot) = (col..n)
                .map(|r| (r, lu.get(r, col).abs()))
                .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > tiny) {
                return Err(Singular { column: col });
            }
            if pivot_row != col {
                perm.swap(pivot_row, col);
                for j in 0..n {
                    let tmp = lu.get(col, j);
                    lu.set(col, j, lu.get(pivot_row, j));
                    lu.set(pivot_row, j, tmp);
                }
            }
            let d = lu.get(col, col);
            for r in col + 1..n {
                let f = lu.get(r, col) / d;
                lu.set(r, col, f);
                for j in col + 1..n {
                    lu.set(r, j, lu.get(r, j) - f * lu.get(col, j));
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu.get(i, j) * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu.get(i, j) * x[j];
            }
            x[i] = x[i] / self.lu.get(i, i);
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lu.n;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

/// Symmetric diagonal equilibration: returns D^{-1/2} A D^{-1/2} and the
/// scaling factors, or the index of a zero diagonal entry.
pub fn equilibrate<T: Real>(a: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>), usize> {
    let n = a.n;
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let d = a.get(i, i);
        if !(d > T::zero()) {
            return Err(i);
        }
        s.push(T::one() / d.sqrt());
    }
    let mut out = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, a.get(i, j) * s[i] * s[j]);
        }
    }
    Ok((out, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_inverts() {
        let a = Matrix {
            n: 3,
            data: vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0],
        };
        let lu = Lu::factor(&a).unwrap();
        let x = lu.solve(&[5.0, 2.0, 6.0]);
        let back: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a.get(i, j) * x[j]).sum())
            .collect();
        for (b, want) in back.iter().zip([5.0, 2.0, 6.0]) {
            assert!((b - want).abs() < 1e-12);
        }
        let inv = lu.inverse();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a.get(i, k) * inv.get(k, j)).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reports_dependent_column() {
        let a = Matrix {
            n: 2,
            data: vec![1.0, 2.0, 2.0, 4.0],
        };
        assert_eq!(Lu::factor(&a).unwrap_err(), Singular { column: 1 });
    }
}

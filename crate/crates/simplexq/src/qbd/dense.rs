//! Minimal dense real matrices for the level-phase solver: multiplication,
//! LU factorization with partial pivoting, inverses, and a power-iteration
//! spectral radius. Sizes here are tiny (4–9), so simplicity beats cleverness.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.concat() }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in multiply");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        out
    }

    pub fn scale(&self, c: f64) -> Mat {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= c;
        }
        out
    }

    /// Writes `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn place(&mut self, block: &Mat, r0: usize, c0: usize) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// LU factorization with partial pivoting: returns the packed factors,
    /// the row permutation, and the permutation sign.
    fn lu(&self) -> Result<(Mat, Vec<usize>, f64)> {
        assert_eq!(self.rows, self.cols, "LU needs a square matrix");
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let (pivot_row, pivot_val) = (col..n)
                .map(|r| (r, lu[(r, col)].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty column");
            if pivot_val < 1e-300 {
                return Err(Error::Numeric(format!(
                    "singular matrix in LU factorization (pivot {pivot_val:.3e} at column {col})"
                )));
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.data.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
                sign = -sign;
            }
            let d = lu[(col, col)];
            for r in col + 1..n {
                let f = lu[(r, col)] / d;
                lu[(r, col)] = f;
                for j in col + 1..n {
                    lu[(r, j)] -= f * lu[(col, j)];
                }
            }
        }
        Ok((lu, perm, sign))
    }

    /// Solves `self * x = b` for each column of `b`.
    pub fn solve(&self, b: &Mat) -> Result<Mat> {
        assert_eq!(self.rows, b.rows, "dimension mismatch in solve");
        let n = self.rows;
        let (lu, perm, _) = self.lu()?;
        let mut x = Mat::zeros(n, b.cols);
        for c in 0..b.cols {
            // forward substitution on the permuted right-hand side
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut s = b[(perm[i], c)];
                for j in 0..i {
                    s -= lu[(i, j)] * y[j];
                }
                y[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in i + 1..n {
                    s -= lu[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = s / lu[(i, i)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Mat> {
        self.solve(&Mat::identity(self.rows))
    }

    #[cfg(test)]
    pub fn determinant(&self) -> f64 {
        match self.lu() {
            Err(_) => 0.0,
            Ok((lu, _, sign)) => (0..self.rows).map(|i| lu[(i, i)]).product::<f64>() * sign,
        }
    }

    /// Spectral radius by power iteration; exact enough for stability
    /// detection on the small nonnegative rate matrices used here.
    pub fn spectral_radius(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if self.max_abs() == 0.0 {
            return 0.0;
        }
        let mut v = vec![1.0; n];
        let mut est = 0.0f64;
        for _ in 0..2000 {
            let w = self.mul_vec(&v);
            let norm = w.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            if norm == 0.0 || !norm.is_finite() {
                return norm;
            }
            let next = norm;
            v = w.into_iter().map(|x| x / norm).collect();
            if (next - est).abs() < 1e-12 * next.max(1.0) {
                return next;
            }
            est = next;
        }
        est
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_known_system() {
        let a = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let b = Mat::from_rows(&[&[5.0], &[10.0]]);
        let x = a.solve(&b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((x[(1, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let a = Mat::from_rows(&[&[4.0, 7.0, 2.0], &[0.5, 3.0, 1.0], &[0.0, 2.0, 5.0]]);
        let inv = a.inverse().unwrap();
        let prod = a.mul(&inv);
        assert!(prod.max_abs_diff(&Mat::identity(3)) < 1e-12);
    }

    #[test]
    fn singular_rejected() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(a.solve(&Mat::identity(2)).is_err());
        assert_eq!(a.determinant(), 0.0);
    }

    #[test]
    fn determinant_with_pivoting() {
        let a = Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!((a.determinant() + 1.0).abs() < 1e-15);
        let b = Mat::from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 0.5]]);
        assert!((b.determinant() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_of_known_matrix() {
        // eigenvalues of [[0.5, 0.1], [0.2, 0.3]]: (0.8 ± sqrt(0.12)) / 2
        let m = Mat::from_rows(&[&[0.5, 0.1], &[0.2, 0.3]]);
        let expect = (0.8 + 0.12f64.sqrt()) / 2.0;
        assert!((m.spectral_radius() - expect).abs() < 1e-9, "{}", m.spectral_radius());
        assert_eq!(Mat::zeros(3, 3).spectral_radius(), 0.0);
    }

    #[test]
    fn place_and_mul() {
        let mut big = Mat::zeros(3, 3);
        big.place(&Mat::identity(2), 1, 1);
        assert_eq!(big[(1, 1)], 1.0);
        assert_eq!(big[(2, 2)], 1.0);
        assert_eq!(big[(0, 0)], 0.0);
        let v = big.mul_vec(&[1.0, 2.0, 3.0]);
        assert_eq!(v, vec![0.0, 2.0, 3.0]);
    }
}

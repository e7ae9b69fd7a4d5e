//! Dense complex least squares by Householder QR with column pivoting.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Dense complex matrix stored column-major: entry `(i, j)` is `data[j * rows + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    actual: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    /// Builds from row-major nested rows (convenient for literals).
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::LengthMismatch {
                    expected: c,
                    actual: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&ComplexMatrix]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let mut data = Vec::new();
        let mut cols = 0;
        for b in blocks {
            if b.rows != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    actual: b.rows,
                });
            }
            data.extend_from_slice(&b.data);
            cols += b.cols;
        }
        Ok(Self { rows, cols, data })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (j, &c) in v.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.column(j)) {
                *o += a * c;
            }
        }
        Ok(out)
    }

    /// `self^H v`
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                actual: v.len(),
            });
        }
        Ok((0..self.cols)
            .map(|j| self.column(j).iter().zip(v).map(|(a, b)| a.conj() * b).sum())
            .collect())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.rows + i]
    }
}

/// Minimizer of `||a theta - y||`.
pub fn ls_solve(a: &ComplexMatrix, y: &[Complex64]) -> Result<Vec<Complex64>> {
    ls_solve_ridge(a, y, 0.0)
}

/// Minimizer of `||a theta - y||^2 + ridge ||theta||^2`.
pub fn ls_solve_ridge(a: &ComplexMatrix, y: &[Complex64], ridge: f64) -> Result<Vec<Complex64>> {
    if y.len() != a.rows {
        return Err(Error::LengthMismatch {
            expected: a.rows,
            actual: y.len(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(invalid("ridge", "must be finite and >= 0"));
    }
    if a.cols == 0 {
        return Ok(Vec::new());
    }
    let (mut m, mut rhs) = if ridge > 0.0 {
        let extra = ComplexMatrix::identity(a.cols);
        let mut aug = ComplexMatrix::zeros(a.rows + a.cols, a.cols);
        let s = ridge.sqrt();
        for j in 0..a.cols {
            aug.column_mut(j)[..a.rows].copy_from_slice(a.column(j));
            for i in 0..a.cols {
                aug[(a.rows + i, j)] = extra[(i, j)] * s;
            }
        }
        let mut r = y.to_vec();
        r.resize(a.rows + a.cols, Complex64::new(0.0, 0.0));
        (aug, r)
    } else {
        (a.clone(), y.to_vec())
    };
    if m.rows < m.cols {
        return Err(invalid("a", format!("need rows >= cols, got {}x{}", m.rows, m.cols)));
    }
    if m.data.iter().chain(rhs.iter()).any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(invalid("a", "entries must be finite"));
    }

    let (rows, cols) = (m.rows, m.cols);
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut diag = vec![Complex64::new(0.0, 0.0); cols];
    let mut rank = cols;
    let mut r00 = 0.0;
    let tol_scale = rows.max(cols) as f64 * f64::EPSILON;

    for k in 0..cols {
        // pivot on the largest remaining column norm
        let norms: Vec<f64> = (k..cols)
            .map(|j| m.column(j)[k..].iter().map(|v| v.norm_sqr()).sum::<f64>())
            .collect();
        let (best, &best_norm) = norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let p = k + best;
        if p != k {
            let (lo, hi) = m.data.split_at_mut(p * rows);
            lo[k * rows..(k + 1) * rows].swap_with_slice(&mut hi[..rows]);
            perm.swap(k, p);
        }
        let norm = best_norm.sqrt();
        if k == 0 {
            r00 = norm;
        }
        if norm <= tol_scale * r00 || norm == 0.0 {
            rank = k;
            break;
        }

        let col = &m.column(k)[k..];
        let x0 = col[0];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = col.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        diag[k] = alpha;
        if vnorm2 > 0.0 {
            let apply = |target: &mut [Complex64]| {
                let dot: Complex64 = v.iter().zip(target.iter()).map(|(a, b)| a.conj() * b).sum();
                let f = dot * (2.0 / vnorm2);
                for (t, a) in target.iter_mut().zip(&v) {
                    *t -= a * f;
                }
            };
            for j in k + 1..cols {
                apply(&mut m.column_mut(j)[k..]);
            }
            apply(&mut rhs[k..]);
        }
        let c = m.column_mut(k);
        c[k] = alpha;
        for z in &mut c[k + 1..] {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }

    // back substitution on the pivoted triangle
    let mut z = vec![Complex64::new(0.0, 0.0); cols];
    for i in (0..cols).rev() {
        let mut s = rhs[i];
        for j in i + 1..cols {
            s -= m[(i, j)] * z[j];
        }
        z[i] = s / diag[i];
    }
    let mut theta = vec![Complex64::new(0.0, 0.0); cols];
    for (k, &p) in perm.iter().enumerate() {
        theta[p] = z[k];
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::stream_rng;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = stream_rng(seed, 77);
        let cols_v: Vec<Vec<Complex64>> = (0..cols)
            .map(|_| {
                (0..rows)
                    .map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect()
            })
            .collect();
        ComplexMatrix::from_columns(rows, &cols_v).unwrap()
    }

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = stream_rng(seed, 78);
        (0..n)
            .map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect()
    }

    /// `(A^H A)^{-1} A^H y` by Gaussian elimination with partial pivoting.
    #[allow(clippy::needless_range_loop)]
    fn normal_equations(a: &ComplexMatrix, y: &[Complex64]) -> Vec<Complex64> {
        let n = a.cols();
        let mut g = vec![vec![c(0.0, 0.0); n + 1]; n];
        let rhs = a.adjoint_mul_vec(y).unwrap();
        for i in 0..n {
            for j in 0..n {
                g[i][j] = a.column(i).iter().zip(a.column(j)).map(|(p, q)| p.conj() * q).sum();
            }
            g[i][n] = rhs[i];
        }
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| g[i][k].norm().total_cmp(&g[j][k].norm())).unwrap();
            g.swap(k, p);
            for i in k + 1..n {
                let f = g[i][k] / g[k][k];
                for j in k..=n {
                    let v = g[k][j];
                    g[i][j] -= f * v;
                }
            }
        }
        let mut x = vec![c(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = g[i][n];
            for j in i + 1..n {
                s -= g[i][j] * x[j];
            }
            x[i] = s / g[i][i];
        }
        x
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum();
        let den: f64 = b.iter().map(|q| q.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn identity_system() {
        let y = random_vec(6, 1);
        let t = ls_solve(&ComplexMatrix::identity(6), &y).unwrap();
        assert!(rel_err(&t, &y) < 1e-15);
    }

    #[test]
    fn ones_column_is_the_mean() {
        let a = ComplexMatrix::from_columns(5, &[vec![c(1.0, 0.0); 5]]).unwrap();
        let t = ls_solve(&a, &[c(2.5, -1.0); 5]).unwrap();
        assert!((t[0] - c(2.5, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn construct_and_recover() {
        let a = random_matrix(200, 8, 3);
        let theta = random_vec(8, 4);
        let y = a.mul_vec(&theta).unwrap();
        let t = ls_solve(&a, &y).unwrap();
        assert!(rel_err(&t, &theta) < 1e-10);
    }

    #[test]
    fn residual_is_orthogonal() {
        let a = random_matrix(300, 12, 5);
        let y = random_vec(300, 6);
        let t = ls_solve(&a, &y).unwrap();
        let fit = a.mul_vec(&t).unwrap();
        let r: Vec<Complex64> = y.iter().zip(&fit).map(|(p, q)| p - q).collect();
        let g = a.adjoint_mul_vec(&r).unwrap();
        let scale: f64 = a.adjoint_mul_vec(&y).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let gn: f64 = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(gn / scale < 1e-8);
    }

    #[test]
    fn rank_deficiency_carries_rank() {
        let x = random_vec(50, 7);
        let a = ComplexMatrix::from_columns(50, &[x.clone(), random_vec(50, 8), x]).unwrap();
        match ls_solve(&a, &random_vec(50, 9)) {
            Err(Error::RankDeficient { rank, cols }) => {
                assert_eq!(rank, 2);
                assert_eq!(cols, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ridge_shrinks_and_regularizes() {
        let x = random_vec(50, 7);
        let a = ComplexMatrix::from_columns(50, &[x.clone(), x]).unwrap();
        let t = ls_solve_ridge(&a, &random_vec(50, 1), 1e-3).unwrap();
        assert!((t[0] - t[1]).norm() < 1e-9);
        let b = random_matrix(40, 3, 2);
        let y = random_vec(40, 3);
        let n0: f64 = ls_solve(&b, &y).unwrap().iter().map(|v| v.norm_sqr()).sum();
        let n1: f64 = ls_solve_ridge(&b, &y, 10.0).unwrap().iter().map(|v| v.norm_sqr()).sum();
        assert!(n1 < n0);
    }

    #[test]
    fn shape_errors() {
        let a = random_matrix(3, 5, 1);
        assert!(ls_solve(&a, &random_vec(3, 1)).is_err());
        assert!(matches!(
            ls_solve(&random_matrix(5, 2, 1), &random_vec(4, 1)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn agrees_with_normal_equations(seed in 0u64..1000, rows in 20usize..80, cols in 1usize..8) {
            let a = random_matrix(rows, cols, seed);
            let y = random_vec(rows, seed + 1);
            let qr = ls_solve(&a, &y).unwrap();
            let ne = normal_equations(&a, &y);
            prop_assert!(rel_err(&qr, &ne) < 1e-6);
        }

        #[test]
        fn row_permutation_invariant(seed in 0u64..1000, shift in 1usize..40) {
            let a = random_matrix(40, 5, seed);
            let y = random_vec(40, seed + 2);
            let idx: Vec<usize> = (0..40).map(|i| (i * 7 + shift) % 40).collect();
            let cols: Vec<Vec<Complex64>> = (0..5).map(|j| idx.iter().map(|&i| a[(i, j)]).collect()).collect();
            let ap = ComplexMatrix::from_columns(40, &cols).unwrap();
            let yp: Vec<Complex64> = idx.iter().map(|&i| y[i]).collect();
            let t0 = ls_solve(&a, &y).unwrap();
            let t1 = ls_solve(&ap, &yp).unwrap();
            prop_assert!(rel_err(&t1, &t0) < 1e-10);
        }
    }
}

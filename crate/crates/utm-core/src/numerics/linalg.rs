//! Small dense LU and a tridiagonal solver with low-rank row corrections.

use num_complex::Complex64 as C64;

/// LU factorisation with partial pivoting of a dense row-major matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<C64>,
    piv: Vec<usize>,
    pub singular: bool,
}

impl DenseLu {
    pub fn new(mut a: Vec<C64>, n: usize) -> Self {
        assert_eq!(a.len(), n * n);
        let mut piv: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for col in 0..n {
            let mut p = col;
            let mut best = a[col * n + col].norm();
            for r in (col + 1)..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != col {
                for c in 0..n {
                    a.swap(col * n + c, p * n + c);
                }
                piv.swap(col, p);
            }
            let d = a[col * n + col];
            for r in (col + 1)..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                for c in (col + 1)..n {
                    let v = a[col * n + c];
                    a[r * n + c] -= f * v;
                }
            }
        }
        DenseLu { n, lu: a, piv, singular }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.piv.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in (r + 1)..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }
}

/// Tridiagonal LU with partial pivoting (the LAPACK `gttrf` scheme).
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swapped: Vec<bool>,
    pub singular: bool,
}

impl TridiagLu {
    /// `sub[i]` is A[i+1][i], `diag[i]` is A[i][i], `sup[i]` is A[i][i+1].
    pub fn new(sub: &[C64], diag: &[C64], sup: &[C64]) -> Self {
        let n = diag.len();
        assert!(n >= 1 && sub.len() + 1 == n && sup.len() + 1 == n);
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    continue;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let singular = d.iter().any(|v| v.norm() == 0.0);
        TridiagLu { dl, d, du, du2, swapped, singular }
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
                let t = b[i];
                b[i + 1] -= self.dl[i] * t;
            } else {
                let t = b[i];
                b[i + 1] -= self.dl[i] * t;
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// A = T + Σ_r e_{rows[r]} v_rᵀ with T tridiagonal and sparse vectors v_r,
/// solved through the Woodbury identity.
#[derive(Debug, Clone)]
pub struct BorderedTridiag {
    t: TridiagLu,
    rows: Vec<usize>,
    v: Vec<Vec<(usize, C64)>>,
    z: Vec<Vec<C64>>,
    cap: DenseLu,
}

impl BorderedTridiag {
    pub fn new(
        sub: &[C64],
        diag: &[C64],
        sup: &[C64],
        corrections: Vec<(usize, Vec<(usize, C64)>)>,
    ) -> Self {
        let n = diag.len();
        let t = TridiagLu::new(sub, diag, sup);
        let r = corrections.len();
        let rows: Vec<usize> = corrections.iter().map(|c| c.0).collect();
        let v: Vec<Vec<(usize, C64)>> = corrections.into_iter().map(|c| c.1).collect();
        let mut z = Vec::with_capacity(r);
        for &row in &rows {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[row] = C64::new(1.0, 0.0);
            t.solve_in_place(&mut e);
            z.push(e);
        }
        let mut cap = vec![C64::new(0.0, 0.0); r * r];
        for i in 0..r {
            for j in 0..r {
                let mut s = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                for &(col, val) in &v[i] {
                    s += val * z[j][col];
                }
                cap[i * r + j] = s;
            }
        }
        let cap = DenseLu::new(cap, r);
        BorderedTridiag { t, rows, v, z, cap }
    }

    pub fn is_singular(&self) -> bool {
        self.t.singular || self.cap.singular
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut y = b.to_vec();
        self.t.solve_in_place(&mut y);
        let r = self.rows.len();
        if r == 0 {
            return y;
        }
        let vy: Vec<C64> = self
            .v
            .iter()
            .map(|vi| vi.iter().map(|&(c, val)| val * y[c]).sum())
            .collect();
        let w = self.cap.solve(&vy);
        for (j, zj) in self.z.iter().enumerate() {
            for (yi, zi) in y.iter_mut().zip(zj) {
                *yi -= w[j] * zi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dense_lu_solves() {
        let a = vec![c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0), c(1.0, -1.0), c(3.0, 0.0), c(0.0, 2.0), c(4.0, 0.0), c(0.0, 0.0), c(1.0, 1.0)];
        let x = vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.25, -3.0)];
        let b: Vec<C64> = (0..3).map(|r| (0..3).map(|k| a[r * 3 + k] * x[k]).sum()).collect();
        let sol = DenseLu::new(a, 3).solve(&b);
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).norm() < 1e-13);
        }
    }

    #[test]
    fn bordered_matches_dense() {
        let n = 9;
        let sub: Vec<C64> = (0..n - 1).map(|i| c(1.0 + i as f64 * 0.1, 0.3)).collect();
        let diag: Vec<C64> = (0..n).map(|i| c(0.01 * i as f64, -0.2)).collect();
        let sup: Vec<C64> = (0..n - 1).map(|i| c(-0.7, 0.05 * i as f64)).collect();
        let corr = vec![(0, vec![(5, c(1.0, 1.0)), (8, c(-2.0, 0.0))]), (8, vec![(0, c(0.5, 0.0)), (1, c(0.0, 3.0))])];
        let mut dense = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            dense[i * n + i] = diag[i];
            if i + 1 < n {
                dense[(i + 1) * n + i] = sub[i];
                dense[i * n + i + 1] = sup[i];
            }
        }
        for (row, v) in &corr {
            for &(col, val) in v {
                dense[row * n + col] += val;
            }
        }
        let b: Vec<C64> = (0..n).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let x1 = DenseLu::new(dense, n).solve(&b);
        let x2 = BorderedTridiag::new(&sub, &diag, &sup, corr).solve(&b);
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).norm() < 1e-11 * (1.0 + a.norm()));
        }
    }
}

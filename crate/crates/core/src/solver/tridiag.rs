//! Prefactored tridiagonal and cyclic tridiagonal solves.

/// LU factorization of a tridiagonal matrix with sub-diagonal `a`,
/// diagonal `b` and super-diagonal `c` (Thomas algorithm, no pivoting).
#[derive(Debug, Clone)]
pub struct Tridiag {
    a: Vec<f64>,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Tridiag {
    /// `a[0]` and `c[n-1]` are ignored.
    pub fn new(a: &[f64], b: &[f64], c: &[f64]) -> Self {
        let n = b.len();
        assert!(n >= 1 && a.len() == n && c.len() == n);
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        inv[0] = 1.0 / b[0];
        cp[0] = c[0] * inv[0];
        for i in 1..n {
            let d = b[i] - a[i] * cp[i - 1];
            inv[i] = 1.0 / d;
            cp[i] = c[i] * inv[i];
        }
        Self { a: a.to_vec(), cp, inv }
    }

    /// Constant-coefficient matrix of size `n`.
    pub fn constant(n: usize, sub: f64, diag: f64, sup: f64) -> Self {
        Self::new(&vec![sub; n], &vec![diag; n], &vec![sup; n])
    }

    pub fn len(&self) -> usize {
        self.inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv.is_empty()
    }

    /// Solves in place.
    pub fn solve(&self, d: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(d.len(), n);
        d[0] *= self.inv[0];
        for i in 1..n {
            d[i] = (d[i] - self.a[i] * d[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.cp[i] * d[i + 1];
        }
    }

    /// Solves a strided system `d[off + k*stride]`, `k < n`.
    pub fn solve_strided(&self, d: &mut [f64], off: usize, stride: usize) {
        let n = self.len();
        d[off] *= self.inv[0];
        for i in 1..n {
            let (p, q) = (off + (i - 1) * stride, off + i * stride);
            d[q] = (d[q] - self.a[i] * d[p]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            let (p, q) = (off + i * stride, off + (i + 1) * stride);
            d[p] -= self.cp[i] * d[q];
        }
    }
}

/// Cyclic tridiagonal matrix with diagonal `diag` and both off-diagonals
/// (including the corner entries) equal to `off`, solved by the
/// Sherman-Morrison correction.
#[derive(Debug, Clone)]
pub struct CyclicTridiag {
    base: Tridiag,
    z: Vec<f64>,
    gamma: f64,
    off: f64,
    fact: f64,
}

impl CyclicTridiag {
    pub fn new(n: usize, diag: f64, off: f64) -> Self {
        Self::with_diagonal(&vec![diag; n], off)
    }

    pub fn with_diagonal(diag: &[f64], off: f64) -> Self {
        let n = diag.len();
        assert!(n >= 3);
        let gamma = -diag[0];
        let mut b = diag.to_vec();
        b[0] = diag[0] - gamma;
        b[n - 1] = diag[n - 1] - off * off / gamma;
        let base = Tridiag::new(&vec![off; n], &b, &vec![off; n]);
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = off;
        base.solve(&mut z);
        let fact_den = 1.0 + z[0] + off * z[n - 1] / gamma;
        Self {
            base,
            z,
            gamma,
            off,
            fact: 1.0 / fact_den,
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn solve_strided(&self, d: &mut [f64], off: usize, stride: usize) {
        let n = self.len();
        self.base.solve_strided(d, off, stride);
        let last = off + (n - 1) * stride;
        let s = (d[off] + self.off * d[last] / self.gamma) * self.fact;
        for (k, zk) in self.z.iter().enumerate() {
            d[off + k * stride] -= s * zk;
        }
    }

    pub fn solve(&self, d: &mut [f64]) {
        self.solve_strided(d, 0, 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(a: &[f64], b: &[f64], c: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = b[i] * x[i];
                if i > 0 {
                    s += a[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += c[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn thomas_solves_general_system() {
        let n = 9;
        let a: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| -0.7 + 0.02 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut d = apply(&a, &b, &c, &x);
        Tridiag::new(&a, &b, &c).solve(&mut d);
        for (u, v) in d.iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn strided_matches_contiguous() {
        let t = Tridiag::constant(6, -1.0, 3.0, -1.0);
        let mut a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut b = vec![0.0; 18];
        for (k, v) in a.iter().enumerate() {
            b[1 + 3 * k] = *v;
        }
        t.solve(&mut a);
        t.solve_strided(&mut b, 1, 3);
        for k in 0..6 {
            assert_eq!(a[k], b[1 + 3 * k]);
        }
    }

    #[test]
    fn cyclic_solves_periodic_system() {
        let n = 12;
        let (diag, off) = (1.8, -0.4);
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (0.7 * i as f64).cos()).collect();
        let mut d: Vec<f64> = (0..n)
            .map(|i| diag * x[i] + off * (x[(i + n - 1) % n] + x[(i + 1) % n]))
            .collect();
        CyclicTridiag::new(n, diag, off).solve(&mut d);
        for (u, v) in d.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13, "{u} {v}");
        }
    }

    #[test]
    fn cyclic_with_variable_diagonal() {
        let n = 17;
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + (i as f64).sin()).collect();
        let off = -0.6;
        let x: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let mut d: Vec<f64> = (0..n)
            .map(|i| diag[i] * x[i] + off * (x[(i + n - 1) % n] + x[(i + 1) % n]))
            .collect();
        CyclicTridiag::with_diagonal(&diag, off).solve(&mut d);
        for (u, v) in d.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13, "{u} {v}");
        }
    }
}

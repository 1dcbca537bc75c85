//! Dense complex matrices at configurable precision: products, Cholesky,
//! triangular inversion and a Hermitian Jacobi eigensolver.

use rug::Float;

use crate::mp::{fma_into, pow2, Cx, Real};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    prec: u32,
    data: Vec<Cx>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        CMat {
            rows,
            cols,
            prec,
            data: vec![Cx::zero(prec); rows * cols],
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = CMat::zeros(n, n, prec);
        for i in 0..n {
            m.set(i, i, Cx::one(prec));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, prec: u32, mut f: impl FnMut(usize, usize) -> Cx) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat {
            rows,
            cols,
            prec,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn get(&self, i: usize, j: usize) -> &Cx {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Cx {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Cx) {
        self.data[i * self.cols + j] = v;
    }

    /// Leading `rows x cols` block.
    pub fn block(&self, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, self.prec, |i, j| self.get(i, j).clone())
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, self.prec, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols, self.prec);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    fma_into(&mut out.data[i * other.cols + j], a, b);
                }
            }
        }
        out
    }

    /// `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> Real {
        let mut worst = Float::new(self.prec);
        for i in 0..self.rows {
            for j in i..self.cols.min(self.rows) {
                let d = (self.get(i, j) - &self.get(j, i).conj()).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// `(A + A^*) / 2`.
    pub fn hermitian_part(&self) -> CMat {
        let half = Float::with_val(self.prec, 0.5);
        CMat::from_fn(self.rows, self.cols, self.prec, |i, j| {
            (self.get(i, j) + &self.get(j, i).conj()).scale(&half)
        })
    }

    pub fn frobenius(&self) -> Real {
        let mut s = Float::new(self.prec);
        for v in &self.data {
            s += v.norm_sqr();
        }
        s.sqrt()
    }
}

/// Lower Cholesky factor `L` with `A = L L^*`.
///
/// Fails with the index of the first pivot `a_jj - sum |l_jk|^2` that falls
/// below `pivot_floor`.
pub fn cholesky(a: &CMat, pivot_floor: &Real) -> Result<(CMat, Vec<Real>), usize> {
    let n = a.rows();
    let prec = a.prec();
    let mut l = CMat::zeros(n, n, prec);
    let mut pivots = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = Float::with_val(prec, &a.get(j, j).re);
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if d < *pivot_floor || d <= 0 {
            return Err(j);
        }
        let ljj = Float::with_val(prec, d.sqrt_ref());
        let inv = Float::with_val(prec, 1) / &ljj;
        pivots.push(d);
        l.set(j, j, Cx::from_real(ljj));
        for i in (j + 1)..n {
            let mut s = a.get(i, j).clone();
            for k in 0..j {
                s -= &l.get(i, k).mul_conj(l.get(j, k));
            }
            l.set(i, j, s.scale(&inv));
        }
    }
    Ok((l, pivots))
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub fn lower_inverse(l: &CMat) -> CMat {
    let n = l.rows();
    let prec = l.prec();
    let mut c = CMat::zeros(n, n, prec);
    for i in 0..n {
        let inv = l.get(i, i).recip();
        c.set(i, i, inv.clone());
        for j in 0..i {
            let mut s = Cx::zero(prec);
            for k in j..i {
                fma_into(&mut s, l.get(i, k), c.get(k, j));
            }
            c.set(i, j, -(&s * &inv));
        }
    }
    c
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unit eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<Real>,
    pub vectors: CMat,
}

/// Cyclic complex Jacobi method.
///
/// A pair is considered decoupled once
/// `|a_pq| <= eps * max(sqrt(|a_pp a_qq|), eps * ||A||_F)`, which keeps small
/// eigenvalues of graded positive definite matrices relatively accurate.
pub fn hermitian_eigen(a: &CMat) -> HermitianEigen {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigen-decomposition needs a square matrix");
    let prec = a.prec();
    let mut m = a.hermitian_part();
    for i in 0..n {
        let re = m.get(i, i).re.clone();
        m.set(i, i, Cx::from_real(re));
    }
    let mut v = CMat::identity(n, prec);
    let eps = pow2(prec, 10 - prec as i32);
    let fro = m.frobenius();
    let abs_floor = Float::with_val(prec, &eps * &fro);
    let one = Float::with_val(prec, 1);

    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q).clone();
                let r = apq.abs();
                if r.is_zero() {
                    continue;
                }
                let scale = Float::with_val(prec, &m.get(p, p).re * &m.get(q, q).re).abs().sqrt();
                let scale = if scale > abs_floor { scale } else { abs_floor.clone() };
                if r <= Float::with_val(prec, &eps * &scale) {
                    continue;
                }
                rotated = true;
                let app = m.get(p, p).re.clone();
                let aqq = m.get(q, q).re.clone();
                let tau = Float::with_val(prec, &aqq - &app) / Float::with_val(prec, &r * 2u32);
                let root = (Float::with_val(prec, tau.square_ref()) + 1u32).sqrt();
                let mut t = Float::with_val(prec, &one / (Float::with_val(prec, tau.abs_ref()) + &root));
                if tau.is_sign_negative() {
                    t = -t;
                }
                let c = Float::with_val(prec, &one / (Float::with_val(prec, t.square_ref()) + 1u32).sqrt());
                let s = Float::with_val(prec, &t * &c);
                let e = apq.scale(&(Float::with_val(prec, &one / &r)));
                let se = e.scale(&s);
                let se_conj = se.conj();
                // A <- A G, V <- V G with G = [[c, s e], [-s conj(e), c]]
                for i in 0..n {
                    let aip = m.get(i, p).clone();
                    let aiq = m.get(i, q).clone();
                    let new_p = &aip.scale(&c) - &(&aiq * &se_conj);
                    let new_q = &(&aip * &se) + &aiq.scale(&c);
                    m.set(i, p, new_p);
                    m.set(i, q, new_q);
                    let vip = v.get(i, p).clone();
                    let viq = v.get(i, q).clone();
                    let new_p = &vip.scale(&c) - &(&viq * &se_conj);
                    let new_q = &(&vip * &se) + &viq.scale(&c);
                    v.set(i, p, new_p);
                    v.set(i, q, new_q);
                }
                // A <- G^* A
                for j in 0..n {
                    let apj = m.get(p, j).clone();
                    let aqj = m.get(q, j).clone();
                    let new_p = &apj.scale(&c) - &(&aqj * &se);
                    let new_q = &(&apj * &se_conj) + &aqj.scale(&c);
                    m.set(p, j, new_p);
                    m.set(q, j, new_q);
                }
                m.set(p, q, Cx::zero(prec));
                m.set(q, p, Cx::zero(prec));
                let dp = m.get(p, p).re.clone();
                let dq = m.get(q, q).re.clone();
                m.set(p, p, Cx::from_real(dp));
                m.set(q, q, Cx::from_real(dq));
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(i, i)
            .re
            .partial_cmp(&m.get(j, j).re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m.get(i, i).re.clone()).collect();
    let vectors = CMat::from_fn(n, n, prec, |i, j| v.get(i, order[j]).clone());
    HermitianEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp::real;

    const P: u32 = 192;

    fn sample_hermitian(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n, P);
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    Cx::from_f64(P, 2.0 + i as f64, 0.0)
                } else {
                    Cx::from_f64(P, 0.3 / (1 + i + j) as f64, 0.1 * (i as f64 - j as f64))
                };
                m.set(j, i, v.conj());
                m.set(i, j, v);
            }
        }
        m
    }

    fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                worst = worst.max((a.get(i, j) - b.get(i, j)).abs().to_f64());
            }
        }
        worst
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = sample_hermitian(6);
        let (l, pivots) = cholesky(&a, &real(P, 1e-30)).unwrap();
        assert_eq!(pivots.len(), 6);
        let back = l.mul(&l.adjoint());
        assert!(max_abs_diff(&a, &back) < 1e-50);
        let c = lower_inverse(&l);
        let id = c.mul(&l);
        assert!(max_abs_diff(&id, &CMat::identity(6, P)) < 1e-50);
    }

    #[test]
    fn cholesky_reports_singular_pivot() {
        let mut a = CMat::identity(3, P);
        a.set(2, 2, Cx::zero(P));
        assert_eq!(cholesky(&a, &real(P, 1e-20)).unwrap_err(), 2);
    }

    #[test]
    fn jacobi_diagonalises() {
        let a = sample_hermitian(7);
        let eig = hermitian_eigen(&a);
        let v = &eig.vectors;
        let d = CMat::from_fn(7, 7, P, |i, j| {
            if i == j {
                Cx::from_real(eig.values[i].clone())
            } else {
                Cx::zero(P)
            }
        });
        let back = v.mul(&d).mul(&v.adjoint());
        assert!(max_abs_diff(&a, &back) < 1e-45);
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let vtv = v.adjoint().mul(v);
        assert!(max_abs_diff(&vtv, &CMat::identity(7, P)) < 1e-45);
    }

    #[test]
    fn jacobi_resolves_graded_spectrum() {
        // diag(1, 1e-30) rotated by a fixed unitary
        let n = 2;
        let c = real(P, 0.6);
        let s = real(P, 0.8);
        let u = CMat::from_fn(n, n, P, |i, j| match (i, j) {
            (0, 0) => Cx::from_real(c.clone()),
            (0, 1) => Cx::new(real(P, 0.0), s.clone()),
            (1, 0) => Cx::new(real(P, 0.0), s.clone()),
            _ => Cx::from_real(c.clone()),
        });
        let d = CMat::from_fn(n, n, P, |i, j| match (i, j) {
            (0, 0) => Cx::one(P),
            (1, 1) => Cx::from_f64(P, 1e-30, 0.0),
            _ => Cx::zero(P),
        });
        let a = u.mul(&d).mul(&u.adjoint());
        let eig = hermitian_eigen(&a);
        let small = eig.values[0].to_f64();
        assert!((small - 1e-30).abs() < 1e-40, "{small:e}");
    }
}

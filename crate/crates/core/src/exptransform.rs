//! Exponential transform of the cloud moments, the quadrature-domain rank
//! test on its coefficient matrix, and the Padé-type reconstruction of the
//! boundary polynomial `|P(z)|² = Σ c_mn z^m z̄^n`.
//!
//! With `u = 1/w`, `v = 1/z̄`:
//! `F(w, z) = exp(-(1/π) Σ a_kl u^(k+1) v^(l+1)) = 1 - Σ b_mn u^(m+1) v^(n+1)`.

use num_complex::Complex64;
use rug::Float;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat};
use crate::mp::{pi, real_int, Cx, Real};

/// `b[m][n]` for `0 <= m, n <= d`.
#[derive(Clone, Debug)]
pub struct ExpTransformTable {
    b: CMat,
}

impl ExpTransformTable {
    pub fn from_matrix(b: CMat) -> Result<Self> {
        if b.rows() != b.cols() || b.rows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "b-table must be square and nonempty, got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        Ok(ExpTransformTable { b })
    }

    pub fn d(&self) -> usize {
        self.b.rows() - 1
    }

    pub fn get(&self, m: usize, n: usize) -> &Cx {
        self.b.get(m, n)
    }

    pub fn matrix(&self) -> &CMat {
        &self.b
    }

    pub fn hermitian_defect(&self) -> Real {
        self.b.hermitian_defect()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Real {
        hermitian_eigen(&self.b).values.swap_remove(0)
    }
}

fn check_a(a: &CMat, d: usize) -> Result<()> {
    if a.rows() <= d || a.cols() <= d {
        return Err(Error::DegreeTooHigh {
            required: d,
            available: a.rows().min(a.cols()).saturating_sub(1),
        });
    }
    Ok(())
}

/// Exponentiates the formal series by the recurrence
/// `i E_ij = Σ_{k,l} k X_kl E_{i-k, j-l}` for `E = exp(X)`, truncated at
/// bidegree `(d+1, d+1)`.
pub fn series_to_b(a: &CMat, d: usize) -> Result<ExpTransformTable> {
    check_a(a, d)?;
    let prec = a.prec();
    let size = d + 2;
    let inv_pi = Float::with_val(prec, 1) / pi(prec);
    // x[i][j]: coefficient of u^i v^j in -(1/π) Σ a_kl u^(k+1) v^(l+1)
    let x = CMat::from_fn(size, size, prec, |i, j| {
        if i == 0 || j == 0 {
            Cx::zero(prec)
        } else {
            -a.get(i - 1, j - 1).scale(&inv_pi)
        }
    });
    let mut e = CMat::zeros(size, size, prec);
    e.set(0, 0, Cx::one(prec));
    for i in 1..size {
        for j in 0..size {
            let mut acc = Cx::zero(prec);
            for k in 1..=i {
                for l in 1..=j {
                    let xk = x.get(k, l);
                    if xk.is_zero() {
                        continue;
                    }
                    let term = &xk.scale(&real_int(prec, k as i64)) * e.get(i - k, j - l);
                    acc += &term;
                }
            }
            let inv_i = Float::with_val(prec, 1) / real_int(prec, i as i64);
            e.set(i, j, acc.scale(&inv_i));
        }
    }
    ExpTransformTable::from_matrix(CMat::from_fn(d + 1, d + 1, prec, |m, n| -e.get(m + 1, n + 1)))
}

#[derive(Clone, Debug)]
pub struct RankTest {
    pub determinant: Real,
    /// Nonincreasing.
    pub singular_values: Vec<Real>,
    pub numerical_rank: usize,
    pub is_quadrature: bool,
}

/// Determinant and singular values of the `(d+1) x (d+1)` block; the table
/// is of quadrature type when `σ_min <= tol · σ_max`.
pub fn qd_rank_test(b: &ExpTransformTable, tol: f64) -> RankTest {
    let eig = hermitian_eigen(b.matrix());
    let prec = b.matrix().prec();
    let mut det = Float::with_val(prec, 1);
    for v in &eig.values {
        det *= v;
    }
    let mut sv: Vec<Real> = eig.values.iter().map(|v| Float::with_val(prec, v.abs_ref())).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    let top = sv[0].clone();
    let thresh = Float::with_val(prec, &top * tol);
    let numerical_rank = if top.is_zero() {
        0
    } else {
        sv.iter().filter(|s| **s > thresh).count()
    };
    let is_quadrature = sv[sv.len() - 1] <= thresh;
    RankTest {
        determinant: det,
        singular_values: sv,
        numerical_rank,
        is_quadrature,
    }
}

/// Quadrature-domain data recovered from a b-table.
#[derive(Clone, Debug)]
pub struct ReconstructedDomain {
    /// Ascending coefficients of the monic polynomial `P`.
    pub p: Vec<Cx>,
    /// `c[m][n]`, `0 <= m, n <= d-1`.
    pub q: CMat,
}

impl ReconstructedDomain {
    pub fn d(&self) -> usize {
        self.p.len() - 1
    }

    pub fn eval_p(&self, z: &Cx) -> Cx {
        let mut acc = Cx::zero(z.prec());
        for c in self.p.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    /// `Σ c_mn z^m z̄^n`.
    pub fn eval_q(&self, z: &Cx) -> Cx {
        let prec = z.prec();
        let d = self.d();
        let mut zp = vec![Cx::one(prec)];
        for k in 1..d.max(1) {
            let next = &zp[k - 1] * z;
            zp.push(next);
        }
        let mut acc = Cx::zero(prec);
        for m in 0..d {
            for n in 0..d {
                let t = &(self.q.get(m, n) * &zp[m]) * &zp[n].conj();
                acc += &t;
            }
        }
        acc
    }
}

/// Monic `P` with `Σ_m p_m b_mn = 0` for all `n`, taken from the eigenvector
/// of the smallest eigenvalue of `b`, and `Q` as the polynomial part of
/// `P(w) conj(P(z)) Σ b_mn w^(-m-1) z̄^(-n-1)`.
pub fn pade_reconstruct(b: &ExpTransformTable, d: usize, tol: f64) -> Result<ReconstructedDomain> {
    if d == 0 || d > b.d() {
        return Err(Error::InvalidArgument(format!(
            "reconstruction order must be in 1..={}, got {d}",
            b.d()
        )));
    }
    let prec = b.matrix().prec();
    let block = b.matrix().block(d + 1, d + 1);
    let eig = hermitian_eigen(&block);
    let top = eig
        .values
        .iter()
        .map(|v| Float::with_val(prec, v.abs_ref()))
        .fold(Float::new(prec), |m, v| if v > m { v } else { m });
    if top.is_zero() {
        return Err(Error::IllConditionedNullSpace {
            reason: "b-table vanishes".into(),
        });
    }
    let abs: Vec<Real> = eig.values.iter().map(|v| Float::with_val(prec, v.abs_ref())).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    order.sort_by(|&i, &j| abs[i].partial_cmp(&abs[j]).unwrap_or(std::cmp::Ordering::Equal));
    let smallest = Float::with_val(prec, &abs[order[0]] / &top);
    if smallest > tol {
        return Err(Error::RankTestFailed {
            ratio: smallest.to_f64(),
        });
    }
    let second = Float::with_val(prec, &abs[order[1]] / &top);
    if second <= tol {
        return Err(Error::IllConditionedNullSpace {
            reason: format!("null space has dimension > 1 (second singular ratio {:e})", second.to_f64()),
        });
    }
    // b is Hermitian, so b^T p = 0 iff b conj(p) = 0
    let col = order[0];
    let y: Vec<Cx> = (0..=d).map(|i| eig.vectors.get(i, col).conj()).collect();
    let lead = y[d].clone();
    let lead_abs = lead.abs().to_f64();
    if lead_abs <= tol.sqrt() {
        return Err(Error::IllConditionedNullSpace {
            reason: format!("null vector has negligible leading coefficient {lead_abs:e}"),
        });
    }
    let inv = lead.recip();
    let mut p: Vec<Cx> = y.iter().map(|c| c * &inv).collect();
    p[d] = Cx::one(prec);

    let q = CMat::from_fn(d, d, prec, |m, n| {
        let mut acc = Cx::zero(prec);
        for i in (m + 1)..=d {
            for k in (n + 1)..=d {
                let t = &p[i].mul_conj(&p[k]) * block.get(i - m - 1, k - n - 1);
                acc += &t;
            }
        }
        acc
    });
    // Q is Hermitian in exact arithmetic
    Ok(ReconstructedDomain {
        p,
        q: q.hermitian_part(),
    })
}

/// Value of the truncated transform and whether the evaluation point lies
/// inside the radius where the series is trusted.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub outside_domain_of_validity: bool,
}

/// `F(w, z) = exp(-(1/π) Σ_{k,l<=d} a_kl w^(-k-1) z̄^(-l-1))`.
pub fn eval_series(a: &CMat, z: Complex64, w: Complex64, radius: f64) -> Result<SeriesValue> {
    if z == Complex64::new(0.0, 0.0) || w == Complex64::new(0.0, 0.0) {
        return Err(Error::DegenerateEvaluation);
    }
    let prec = a.prec();
    let u = Cx::from_c64(prec, w).recip();
    let v = Cx::from_c64(prec, z).conj().recip();
    let mut up = vec![u.clone()];
    for k in 1..a.rows() {
        let next = &up[k - 1] * &u;
        up.push(next);
    }
    let mut vp = vec![v.clone()];
    for l in 1..a.cols() {
        let next = &vp[l - 1] * &v;
        vp.push(next);
    }
    let mut s = Cx::zero(prec);
    for (k, uk) in up.iter().enumerate() {
        for (l, vl) in vp.iter().enumerate() {
            let t = &(a.get(k, l) * uk) * vl;
            s += &t;
        }
    }
    let inv_pi = Float::with_val(prec, -1) / pi(prec);
    Ok(SeriesValue {
        value: s.scale(&inv_pi).exp().to_c64(),
        outside_domain_of_validity: z.norm() <= radius || w.norm() <= radius,
    })
}

/// `|P(z)|² - Re Σ c_mn z^m z̄^n`: negative inside, positive outside.
pub fn boundary_residual(domain: &ReconstructedDomain, z: Complex64) -> f64 {
    let prec = domain.q.prec();
    let zc = Cx::from_c64(prec, z);
    let lhs = domain.eval_p(&zc).norm_sqr();
    let rhs = domain.eval_q(&zc).re;
    Float::with_val(prec, &lhs - &rhs).to_f64()
}

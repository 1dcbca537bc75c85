//! Hessenberg matrix of multiplication by `z` in the orthonormal polynomial
//! basis, and the commutator quantities derived from it: the `s_j` column/row
//! defects, area estimates, far-corner tails, truncated self-commutators and
//! Hankel singular numbers.
//!
//! Sums over the full projection onto `P²(μ)` are cut at an explicit row
//! index `K_cut`; for banded matrices the cut is inactive once it passes the
//! band.

use rug::Float;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat};
use crate::moments::ComplexMomentTable;
use crate::mp::{pi, Cx, Real};
use crate::orthopoly::OrthonormalBasis;

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// `h[k][j] = <z p_j, p_k>` for `0 <= j, k <= n_max`.
#[derive(Clone, Debug)]
pub struct HessenbergMatrix {
    h: CMat,
    band_defect: Real,
}

impl HessenbergMatrix {
    pub fn n_max(&self) -> usize {
        self.h.rows() - 1
    }

    pub fn prec(&self) -> u32 {
        self.h.prec()
    }

    /// `h_{kj} = <z p_j, p_k>`.
    pub fn entry(&self, k: usize, j: usize) -> &Cx {
        self.h.get(k, j)
    }

    /// Largest computed `|h_kj|` with `k > j + 1`; those entries are stored
    /// as exact zeros.
    pub fn band_defect(&self) -> &Real {
        &self.band_defect
    }

    pub fn matrix(&self) -> &CMat {
        &self.h
    }

    fn require(&self, index: usize) -> Result<()> {
        if index > self.n_max() {
            Err(Error::InsufficientColumns {
                required: index + 1,
                available: self.n_max() + 1,
            })
        } else {
            Ok(())
        }
    }
}

/// `h_kj = Σ_{r,s} C[j][r] conj(C[k][s]) m[r+1][s]`.
pub fn build(table: &ComplexMomentTable, basis: &OrthonormalBasis, n_max: usize) -> Result<HessenbergMatrix> {
    table.require_degree(n_max + 1)?;
    if n_max > basis.degree() {
        return Err(Error::DegreeTooHigh {
            required: n_max,
            available: basis.degree(),
        });
    }
    let prec = basis.prec();
    let t = table.with_prec(prec);
    let c = basis.coeff_matrix().block(n_max + 1, n_max + 1);
    let shifted = CMat::from_fn(n_max + 1, n_max + 1, prec, |r, s| t.get(r + 1, s).clone());
    // x[j][k] = h_kj
    let x = c.mul(&shifted).mul(&c.adjoint());
    let mut defect = Float::new(prec);
    let h = CMat::from_fn(n_max + 1, n_max + 1, prec, |k, j| {
        let v = x.get(j, k);
        if k > j + 1 {
            let a = v.abs();
            if a > defect {
                defect = a;
            }
            Cx::zero(prec)
        } else {
            v.clone()
        }
    });
    Ok(HessenbergMatrix { h, band_defect: defect })
}

/// `s_j^(K) = Σ_{k<=j+1} |h_kj|² - Σ_{j-1<=k<=K} |h_jk|²` for `j = 0..=n`.
pub fn s_sequence(h: &HessenbergMatrix, n: usize, k_cut: usize) -> Result<Vec<Real>> {
    h.require(n + 1)?;
    h.require(k_cut)?;
    let prec = h.prec();
    Ok((0..=n)
        .map(|j| {
            let mut s = Float::new(prec);
            for k in 0..=(j + 1) {
                s += h.entry(k, j).norm_sqr();
            }
            for k in j.saturating_sub(1)..=k_cut {
                s -= h.entry(j, k).norm_sqr();
            }
            s
        })
        .collect())
}

/// Weight of the last row entries kept by the cut, `Σ_{j<=n} |h_{j,K}|²`; it
/// bounds how much one more column could still lower the `s_j`.
pub fn cutoff_diagnostic(h: &HessenbergMatrix, n: usize, k_cut: usize) -> Result<Real> {
    h.require(n)?;
    h.require(k_cut)?;
    let mut s = Float::new(h.prec());
    for j in 0..=n {
        s += h.entry(j, k_cut).norm_sqr();
    }
    Ok(s)
}

/// `π Σ_{j<=n} s_j^(K)`, the area of the cloud seen through degree `n`.
pub fn area_estimate(h: &HessenbergMatrix, n: usize, k_cut: usize) -> Result<Real> {
    let s = s_sequence(h, n, k_cut)?;
    let mut total = Float::new(h.prec());
    for v in &s {
        total += v;
    }
    Ok(total * pi(h.prec()))
}

/// `Σ_{j<=n} Σ_{N<k<=K} |h_jk|²`.
pub fn far_corner_tail(h: &HessenbergMatrix, n: usize, big_n: usize, k_cut: usize) -> Result<Real> {
    if big_n <= n {
        return Err(Error::InvalidArgument(format!("far-corner tail needs N > n, got N={big_n}, n={n}")));
    }
    if k_cut < big_n {
        return Err(Error::InvalidArgument(format!("cutoff {k_cut} is below N={big_n}")));
    }
    h.require(k_cut)?;
    let mut s = Float::new(h.prec());
    for j in 0..=n {
        for k in (big_n + 1)..=k_cut {
            s += h.entry(j, k).norm_sqr();
        }
    }
    Ok(s)
}

/// Compression of `[S^*, S]` to the first `n + 1` orthonormal polynomials:
/// entry `(j, k) = <z p_k, z p_j> - Σ_{l<=K} conj(h_kl) h_jl`.
pub fn selfcommutator(
    table: &ComplexMomentTable,
    basis: &OrthonormalBasis,
    h: &HessenbergMatrix,
    n: usize,
    k_cut: usize,
) -> Result<CMat> {
    table.require_degree(n + 1)?;
    h.require(k_cut)?;
    if k_cut < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {k_cut} must reach the subdiagonal (n + 1 = {})",
            n + 1
        )));
    }
    let prec = basis.prec();
    let t = table.with_prec(prec);
    let c = basis.coeff_matrix().block(n + 1, n + 1);
    let shifted = CMat::from_fn(n + 1, n + 1, prec, |r, s| t.get(r + 1, s + 1).clone());
    // g[k][j] = <z p_k, z p_j>
    let g = c.mul(&shifted).mul(&c.adjoint());
    let rows = CMat::from_fn(n + 1, k_cut + 1, prec, |j, l| h.entry(j, l).clone());
    // (rows rows^*)[j][k] = Σ_l h_jl conj(h_kl)
    let ss = rows.mul(&rows.adjoint());
    Ok(CMat::from_fn(n + 1, n + 1, prec, |j, k| g.get(k, j) - ss.get(j, k)))
}

/// Singular numbers `κ_j = sqrt(max(λ_j, 0))` of the Hankel operator, from
/// the eigenvalues `λ_j` of a self-commutator, in nonincreasing order.
pub fn hankel_singular_values(selfcomm: &CMat) -> Vec<Real> {
    let eig = hermitian_eigen(selfcomm);
    let mut out: Vec<Real> = eig
        .values
        .into_iter()
        .rev()
        .map(|v| if v > 0 { v.sqrt() } else { Float::new(selfcomm.prec()) })
        .collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Eigenvalues of the self-commutator in ascending order (may dip slightly
/// below zero through rounding).
pub fn selfcommutator_eigenvalues(selfcomm: &CMat) -> Vec<Real> {
    hermitian_eigen(selfcomm).values
}

/// Number of `κ_j > rank_tol · κ_0`.
pub fn numerical_rank(kappas: &[Real], rank_tol: f64) -> usize {
    let Some(top) = kappas.first() else {
        return 0;
    };
    if top.is_zero() {
        return 0;
    }
    let thresh = Float::with_val(top.prec(), top * rank_tol);
    kappas.iter().filter(|k| **k > thresh).count()
}

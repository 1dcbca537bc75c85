//! Orthonormal polynomials of a moment table, Christoffel–Darboux kernels
//! and Christoffel functions.

use num_complex::Complex64;
use rug::Float;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, lower_inverse, CMat};
use crate::moments::{ComplexMomentTable, PrecisionPolicy};
use crate::mp::{fma_into, Cx, Real};

/// `p_j(z) = Σ_{k<=j} coeff[j][k] z^k` with `coeff[j][j] = γ_j > 0`.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    coeff: CMat,
    pivots: Vec<Real>,
}

impl OrthonormalBasis {
    /// Highest polynomial degree available.
    pub fn degree(&self) -> usize {
        self.coeff.rows() - 1
    }

    pub fn prec(&self) -> u32 {
        self.coeff.prec()
    }

    pub fn coeff(&self, j: usize, k: usize) -> &Cx {
        self.coeff.get(j, k)
    }

    pub fn coeff_matrix(&self) -> &CMat {
        &self.coeff
    }

    /// Leading coefficient `γ_j`.
    pub fn gamma(&self, j: usize) -> Real {
        self.coeff.get(j, j).re.clone()
    }

    /// Cholesky pivots `1/γ_j² = dist(z^j, C_{j-1}[z])²`.
    pub fn pivots(&self) -> &[Real] {
        &self.pivots
    }

    fn require(&self, n: usize) -> Result<()> {
        if n > self.degree() {
            Err(Error::DegreeTooHigh {
                required: n,
                available: self.degree(),
            })
        } else {
            Ok(())
        }
    }

    /// `[p_0(z), ..., p_n(z)]`.
    pub fn eval_all(&self, n: usize, z: &Cx) -> Result<Vec<Cx>> {
        self.require(n)?;
        let prec = self.prec();
        let mut pw = Vec::with_capacity(n + 1);
        pw.push(Cx::one(prec));
        for k in 1..=n {
            let next = &pw[k - 1] * z;
            pw.push(next);
        }
        Ok((0..=n)
            .map(|j| {
                let mut acc = Cx::zero(prec);
                for (k, zk) in pw.iter().enumerate().take(j + 1) {
                    fma_into(&mut acc, self.coeff.get(j, k), zk);
                }
                acc
            })
            .collect())
    }

    pub fn eval(&self, j: usize, z: &Cx) -> Result<Cx> {
        Ok(self.eval_all(j, z)?.pop().expect("nonempty"))
    }

    /// `max |<p_j, p_k> - δ_jk|` recomputed from the moments.
    pub fn gram_residual(&self, table: &ComplexMomentTable) -> Result<Real> {
        let n = self.degree();
        table.require_degree(n)?;
        let g = self.coeff.mul(&table.with_prec(self.prec()).gram(n)).mul(&self.coeff.adjoint());
        let mut worst = Float::new(self.prec());
        for j in 0..=n {
            for k in 0..=n {
                let mut v = g.get(j, k).clone();
                if j == k {
                    v.re -= 1u32;
                }
                let a = v.abs();
                if a > worst {
                    worst = a;
                }
            }
        }
        Ok(worst)
    }
}

/// Orthonormalises `1, z, ..., z^n_max` against the moment Gram matrix by
/// Cholesky factorisation `G = L L^*`; the coefficient matrix is `L^{-1}`.
pub fn orthonormalize(
    table: &ComplexMomentTable,
    n_max: usize,
    policy: &PrecisionPolicy,
) -> Result<OrthonormalBasis> {
    table.require_degree(n_max)?;
    let t = table.with_prec(policy.bits());
    let mass = t.mass();
    if mass <= 0 {
        return Err(Error::NumericallySingular { at_degree: 0 });
    }
    let floor = policy.pivot_floor(&mass);
    let (l, pivots) = cholesky(&t.gram(n_max), &floor).map_err(|j| Error::NumericallySingular { at_degree: j })?;
    Ok(OrthonormalBasis {
        coeff: lower_inverse(&l),
        pivots,
    })
}

/// `K_n(z, w) = Σ_{j<=n} p_j(z) conj(p_j(w))`.
pub fn cd_kernel(basis: &OrthonormalBasis, n: usize, z: Complex64, w: Complex64) -> Result<Cx> {
    let prec = basis.prec();
    let pz = basis.eval_all(n, &Cx::from_c64(prec, z))?;
    let pw = basis.eval_all(n, &Cx::from_c64(prec, w))?;
    let mut acc = Cx::zero(prec);
    for (a, b) in pz.iter().zip(&pw) {
        acc += &a.mul_conj(b);
    }
    Ok(acc)
}

/// `Λ_n(z) = 1 / K_n(z, z)`.
pub fn christoffel(basis: &OrthonormalBasis, n: usize, z: Complex64) -> Result<Real> {
    let prec = basis.prec();
    let pz = basis.eval_all(n, &Cx::from_c64(prec, z))?;
    let mut k = Float::new(prec);
    for p in &pz {
        k += p.norm_sqr();
    }
    if k.is_zero() {
        return Err(Error::DegenerateEvaluation);
    }
    Ok(Float::with_val(prec, 1) / k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{moments_of, MeasureSpec};
    use std::f64::consts::PI;

    const P: u32 = 256;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis(spec: &MeasureSpec, n: usize) -> (ComplexMomentTable, OrthonormalBasis) {
        let t = moments_of(spec, n, P).unwrap();
        let b = orthonormalize(&t, n, &PrecisionPolicy::default()).unwrap();
        (t, b)
    }

    #[test]
    fn circle_basis_is_monomial() {
        let (_, b) = basis(&MeasureSpec::UnitCircle, 5);
        for j in 0..=5 {
            for k in 0..=j {
                let e = if j == k { 1.0 } else { 0.0 };
                assert_eq!(b.coeff(j, k).to_c64(), c(e, 0.0));
            }
        }
    }

    #[test]
    fn disk_leading_coefficients() {
        let (t, b) = basis(&MeasureSpec::disk(c(0.0, 0.0), 1.0), 10);
        for k in 0..=10 {
            let expect = ((k as f64 + 1.0) / PI).sqrt();
            assert!((b.gamma(k).to_f64() - expect).abs() < 1e-14);
            // diagonal table: 1/γ_k² equals ‖z^k‖²
            let inv = Float::with_val(P, 1) / Float::with_val(P, b.gamma(k).square_ref());
            let diff = Float::with_val(P, &inv - &t.get(k, k).re).abs();
            assert!(diff < crate::mp::pow2(P, -240));
        }
    }

    #[test]
    fn ellipse_basis_is_scaled_chebyshev_u() {
        let rho: f64 = 4.0;
        let n = 8;
        let (t, b) = basis(&MeasureSpec::EllipseJoukowski { rho }, n);
        // U_0 = 1, U_1 = 2z, U_{j+1} = 2z U_j - U_{j-1}
        let mut u: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 2.0]];
        for j in 1..n {
            let mut next = vec![0.0; j + 2];
            for (k, &a) in u[j].iter().enumerate() {
                next[k + 1] += 2.0 * a;
            }
            for (k, &a) in u[j - 1].iter().enumerate() {
                next[k] -= a;
            }
            u.push(next);
        }
        for j in 0..=n {
            let jf = j as f64;
            let scale = 2.0 * ((jf + 1.0) / PI).sqrt() / (rho.powf(jf + 1.0) - rho.powf(-jf - 1.0)).sqrt();
            for k in 0..=j {
                let expect = scale * u[j][k];
                let got = b.coeff(j, k).to_c64();
                assert!((got - c(expect, 0.0)).norm() < 1e-12 * (1.0 + expect.abs()), "{j} {k}");
            }
        }
        assert!(b.gram_residual(&t).unwrap() < crate::mp::pow2(P, -64));
    }

    #[test]
    fn kernel_values() {
        let (_, b) = basis(&MeasureSpec::UnitCircle, 4);
        assert_eq!(cd_kernel(&b, 2, c(0.0, 0.0), c(0.0, 0.0)).unwrap().to_c64(), c(1.0, 0.0));
        let (_, b) = basis(&MeasureSpec::disk(c(0.0, 0.0), 1.0), 6);
        for n in 0..=6 {
            let k = cd_kernel(&b, n, c(0.0, 0.0), c(0.0, 0.0)).unwrap().to_c64();
            assert!((k - c(1.0 / PI, 0.0)).norm() < 1e-15);
            assert!((christoffel(&b, n, c(0.0, 0.0)).unwrap().to_f64() - PI).abs() < 1e-14);
        }
        let z = c(0.3, -0.2);
        let w = c(-0.5, 0.7);
        let kzw = cd_kernel(&b, 5, z, w).unwrap();
        let kwz = cd_kernel(&b, 5, w, z).unwrap();
        assert_eq!(kzw, kwz.conj());
    }

    #[test]
    fn kernel_reproduces_p1() {
        // <p_1, K_n(·, w)> = p_1(w), inner product expanded over the moments
        let spec = MeasureSpec::sum(vec![
            (MeasureSpec::EllipseJoukowski { rho: 3.0 }, 1.0),
            (MeasureSpec::atoms(&[(c(2.0, 1.0), 0.5)]), 1.0),
        ]);
        let (t, b) = basis(&spec, 5);
        let w = Cx::from_f64(P, 0.4, -0.3);
        let n = 4;
        let pw = b.eval_all(n, &w).unwrap();
        // K_n(ζ, w) = Σ_a coeffs[a] ζ^a
        let mut kcoef = vec![Cx::zero(P); n + 1];
        for (j, pj) in pw.iter().enumerate() {
            let cj = pj.conj();
            for (a, slot) in kcoef.iter_mut().enumerate().take(j + 1) {
                fma_into(slot, b.coeff(j, a), &cj);
            }
        }
        let mut ip = Cx::zero(P);
        for a in 0..=1 {
            for (bb, kc) in kcoef.iter().enumerate() {
                let term = &b.coeff(1, a).mul_conj(kc) * t.get(a, bb);
                ip += &term;
            }
        }
        let diff = (&ip - &pw[1]).abs();
        assert!(diff < crate::mp::pow2(P, -200));
    }

    #[test]
    fn christoffel_ratio_outside_disk() {
        let (_, b) = basis(&MeasureSpec::disk(c(0.0, 0.0), 1.0), 40);
        let z = c(1.5, 0.0);
        let mut prev = christoffel(&b, 12, z).unwrap();
        for n in 13..=40 {
            let cur = christoffel(&b, n, z).unwrap();
            assert!(cur <= prev);
            let ratio = Float::with_val(P, &cur / &prev).to_f64();
            assert!((ratio / (4.0 / 9.0) - 1.0).abs() < 0.1, "n={n} ratio={ratio}");
            prev = cur;
        }
    }

    #[test]
    fn singular_gram_is_reported() {
        let t = moments_of(&MeasureSpec::atoms(&[(c(2.0, 0.0), 1.0), (c(2.0, 1.0), 1.0)]), 3, P).unwrap();
        let err = orthonormalize(&t, 3, &PrecisionPolicy::default()).unwrap_err();
        assert_eq!(err, Error::NumericallySingular { at_degree: 2 });
        assert!(orthonormalize(&t, 1, &PrecisionPolicy::default()).is_ok());
        assert!(matches!(
            orthonormalize(&t, 4, &PrecisionPolicy::default()),
            Err(Error::DegreeTooHigh { .. })
        ));
    }

    #[test]
    fn christoffel_beyond_basis_degree() {
        let (_, b) = basis(&MeasureSpec::UnitCircle, 2);
        assert!(matches!(christoffel(&b, 3, c(0.0, 0.0)), Err(Error::DegreeTooHigh { .. })));
    }
}

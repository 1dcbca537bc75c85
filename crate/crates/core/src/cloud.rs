//! Moments of the cloud: trace estimates `Tr P_n M (I - P_N) M_R` expanded
//! over the moment table, the cloud moments `c_pq`, their a-posteriori error
//! bound, and the kernel approximants `L`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hessenberg::{s_sequence, HessenbergMatrix};
use crate::linalg::CMat;
use crate::moments::ComplexMomentTable;
use crate::mp::{pi, real_int, Cx, Real};
use crate::orthopoly::{cd_kernel, OrthonormalBasis};

/// `R(z, z̄) = Σ r_pq z^p z̄^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariatePolynomial {
    prec: u32,
    terms: BTreeMap<(usize, usize), Cx>,
}

impl BivariatePolynomial {
    pub fn zero(prec: u32) -> Self {
        BivariatePolynomial {
            prec,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(p: usize, q: usize, coeff: Cx) -> Self {
        let mut r = BivariatePolynomial::zero(coeff.prec());
        r.add_term(p, q, &coeff);
        r
    }

    pub fn from_terms(prec: u32, terms: &[(usize, usize, Complex64)]) -> Self {
        let mut r = BivariatePolynomial::zero(prec);
        for &(p, q, c) in terms {
            r.add_term(p, q, &Cx::from_c64(prec, c));
        }
        r
    }

    /// `z^p z̄^(q+1) / (q+1)`, whose `∂/∂z̄` is `z^p z̄^q`.
    pub fn cloud_symbol(prec: u32, p: usize, q: usize) -> Self {
        let c = Cx::from_real(Float::with_val(prec, 1) / real_int(prec, q as i64 + 1));
        BivariatePolynomial::monomial(p, q + 1, c)
    }

    pub fn add_term(&mut self, p: usize, q: usize, coeff: &Cx) {
        let slot = self.terms.entry((p, q)).or_insert_with(|| Cx::zero(self.prec));
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&(p, q));
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeff(&self, p: usize, q: usize) -> Option<&Cx> {
        self.terms.get(&(p, q))
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &Cx)> {
        self.terms.iter().map(|(&(p, q), c)| (p, q, c))
    }

    pub fn deg_z(&self) -> usize {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn deg_zbar(&self) -> usize {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn is_analytic(&self) -> bool {
        self.terms.keys().all(|k| k.1 == 0)
    }

    pub fn dbar_derivative(&self) -> Self {
        let mut out = BivariatePolynomial::zero(self.prec);
        for (&(p, q), c) in &self.terms {
            if q > 0 {
                out.add_term(p, q - 1, &c.scale(&real_int(self.prec, q as i64)));
            }
        }
        out
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(p, q), c)| c.to_c64() * z.powu(p as u32) * z.conj().powu(q as u32))
            .sum()
    }

    /// Coefficients of `R_j(w)` in `R = Σ_j R_j(w) w̄^j`, indexed `[j][p]`.
    fn analytic_parts(&self) -> Vec<Vec<Complex64>> {
        let mut parts = vec![vec![Complex64::new(0.0, 0.0); self.deg_z() + 1]; self.deg_zbar() + 1];
        for (&(p, q), c) in &self.terms {
            parts[q][p] += c.to_c64();
        }
        parts
    }
}

/// Estimate of `c_pq = (1/π) ∫_Σ z^p z̄^q dA` at truncation orders `(n, N)`.
#[derive(Clone, Debug, Serialize)]
pub struct CloudMomentEstimate {
    pub p: usize,
    pub q: usize,
    #[serde(skip)]
    pub value: Cx,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub error_bound: Option<f64>,
}

impl CloudMomentEstimate {
    pub fn value_c64(&self) -> Complex64 {
        self.value.to_c64()
    }
}

/// `[j][k] = <z^p z̄^q p_j, p_k>` for `j < rows`, `k < cols`.
fn symbol_inner_products(
    t: &ComplexMomentTable,
    basis: &OrthonormalBasis,
    p: usize,
    q: usize,
    rows: usize,
    cols: usize,
) -> CMat {
    let prec = basis.prec();
    let c = basis.coeff_matrix();
    let m = CMat::from_fn(rows, cols, prec, |a, b| t.get(p + a, q + b).clone());
    c.block(rows, rows).mul(&m).mul(&c.block(cols, cols).adjoint())
}

fn degree_check(table: &ComplexMomentTable, required: usize) -> Result<()> {
    if table.degree() < required {
        Err(Error::DegreeTooHigh {
            required,
            available: table.degree(),
        })
    } else {
        Ok(())
    }
}

/// Moment degree needed by `trace_estimate` for a symbol of bidegree
/// `(dz, dzb)`.
pub fn required_degree(dz: usize, dzb: usize, n: usize, big_n: usize) -> usize {
    (n + 1 + dz).max(big_n + dzb).max(big_n + 1)
}

/// `Σ_{j<=n} [<z R p_j, p_j> - Σ_{k<=N} <R p_j, p_k> h_jk]`, every inner
/// product expanded over the moment table.
pub fn trace_estimate(
    table: &ComplexMomentTable,
    basis: &OrthonormalBasis,
    h: &HessenbergMatrix,
    r: &BivariatePolynomial,
    n: usize,
    big_n: usize,
) -> Result<Cx> {
    if big_n < n {
        return Err(Error::InvalidArgument(format!("N={big_n} must be at least n={n}")));
    }
    degree_check(table, required_degree(r.deg_z(), r.deg_zbar(), n, big_n))?;
    if basis.degree() < big_n {
        return Err(Error::DegreeTooHigh {
            required: big_n,
            available: basis.degree(),
        });
    }
    if h.n_max() < big_n {
        return Err(Error::InsufficientColumns {
            required: big_n + 1,
            available: h.n_max() + 1,
        });
    }
    let prec = basis.prec();
    let t = table.with_prec(prec);
    let mut total = Cx::zero(prec);
    for (p, q, coeff) in r.terms() {
        let zr = symbol_inner_products(&t, basis, p + 1, q, n + 1, n + 1);
        let rr = symbol_inner_products(&t, basis, p, q, n + 1, big_n + 1);
        let mut term = Cx::zero(prec);
        for j in 0..=n {
            term += zr.get(j, j);
            for k in 0..=big_n {
                let hjk = h.entry(j, k);
                if !hjk.is_zero() {
                    term -= &(rr.get(j, k) * hjk);
                }
            }
        }
        total += &(coeff * &term);
    }
    Ok(total)
}

/// `c_pq` through the symbol `R = z^p z̄^(q+1)/(q+1)`.
///
/// The traces for `(p, q)` and `(q, p)` converge to conjugate limits but
/// differ at finite `(n, N)`; the returned value is the average
/// `(t_pq + conj(t_qp)) / 2`, so `c_qp = conj(c_pq)` holds exactly.
pub fn cloud_moment(
    table: &ComplexMomentTable,
    basis: &OrthonormalBasis,
    h: &HessenbergMatrix,
    p: usize,
    q: usize,
    n: usize,
    big_n: usize,
) -> Result<CloudMomentEstimate> {
    let prec = basis.prec();
    let m = p.max(q);
    degree_check(table, required_degree(m, m + 1, n, big_n))?;
    let forward = trace_estimate(table, basis, h, &BivariatePolynomial::cloud_symbol(prec, p, q), n, big_n)?;
    let value = if p == q {
        Cx::from_real(forward.re)
    } else {
        let back = trace_estimate(table, basis, h, &BivariatePolynomial::cloud_symbol(prec, q, p), n, big_n)?;
        let half = Float::with_val(prec, 0.5);
        (&forward + &back.conj()).scale(&half)
    };
    Ok(CloudMomentEstimate {
        p,
        q,
        value,
        n,
        big_n,
        error_bound: None,
    })
}

/// Estimates of `c_pq` for `0 <= p, q <= dmax`, indexed `[p][q]`.
pub fn cloud_moment_table(
    table: &ComplexMomentTable,
    basis: &OrthonormalBasis,
    h: &HessenbergMatrix,
    dmax: usize,
    n: usize,
    big_n: usize,
) -> Result<Vec<Vec<CloudMomentEstimate>>> {
    (0..=dmax)
        .map(|p| (0..=dmax).map(|q| cloud_moment(table, basis, h, p, q, n, big_n)).collect())
        .collect()
}

/// How the tail `Σ_{j>n} s_j` is estimated in `error_bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailModel {
    /// `area_estimate(K_cut)/π - Σ_{j<=n} s_j` with the largest available
    /// partial total; a computable surrogate that can undershoot.
    Surrogate,
    /// A known cloud area; the tail becomes `area/π - Σ_{j<=n} s_j`.
    KnownArea(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorBound {
    pub bound: f64,
    pub sup_r_tilde: f64,
    pub tail: f64,
    pub far_corner: f64,
}

/// `R̃(z̄; w, w̄) = Σ_j (Σ_{i<j} z̄^i w̄^(j-1-i)) R_j(w)`.
fn r_tilde(parts: &[Vec<Complex64>], z: Complex64, w: Complex64) -> Complex64 {
    let a = z.conj();
    let b = w.conj();
    let mut g = Complex64::new(0.0, 0.0);
    let mut bj = Complex64::new(1.0, 0.0);
    let mut out = Complex64::new(0.0, 0.0);
    for part in parts.iter().skip(1) {
        g = a * g + bj;
        bj *= b;
        let rj = part.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c);
        out += g * rj;
    }
    out
}

/// `sqrt((hull_area/π) · sup |R̃|² · (tail + far corner))`.
///
/// The sup norm is taken over all ordered pairs of `support_points`, so it
/// can only underestimate the true sup over the support.
#[allow(clippy::too_many_arguments)]
pub fn error_bound(
    h: &HessenbergMatrix,
    r: &BivariatePolynomial,
    n: usize,
    big_n: usize,
    support_points: &[Complex64],
    hull_area_bound: f64,
    k_cut: usize,
    tail_model: TailModel,
) -> Result<ErrorBound> {
    if support_points.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if hull_area_bound <= 0.0 || !hull_area_bound.is_finite() {
        return Err(Error::InvalidArgument(format!("hull area bound must be positive, got {hull_area_bound}")));
    }
    if k_cut < big_n || big_n < n {
        return Err(Error::InvalidArgument(format!("need n <= N <= K_cut, got n={n}, N={big_n}, K_cut={k_cut}")));
    }
    let prec = h.prec();
    let s = s_sequence(h, n, k_cut)?;
    let mut partial = Float::new(prec);
    for v in &s {
        partial += v;
    }
    let tail = match tail_model {
        TailModel::Surrogate => {
            let top = h.n_max().saturating_sub(1).max(n);
            let mut total = Float::new(prec);
            for v in &s_sequence(h, top, k_cut)? {
                total += v;
            }
            Float::with_val(prec, &total - &partial)
        }
        TailModel::KnownArea(area) => Float::with_val(prec, area) / pi(prec) - &partial,
    };
    let tail = if tail < 0 { 0.0 } else { tail.to_f64() };
    let mut far = Float::new(prec);
    for j in 0..=n {
        for k in (big_n + 1)..=k_cut {
            far += h.entry(j, k).norm_sqr();
        }
    }
    let far = far.to_f64();

    let parts = r.analytic_parts();
    let mut sup = 0.0f64;
    if !r.is_analytic() {
        for &z in support_points {
            for &w in support_points {
                sup = sup.max(r_tilde(&parts, z, w).norm());
            }
        }
    }
    let bound = ((hull_area_bound / std::f64::consts::PI) * sup * sup * (tail + far)).sqrt();
    Ok(ErrorBound {
        bound,
        sup_r_tilde: sup,
        tail,
        far_corner: far,
    })
}

/// `z̄ K_{n+1}(z, w) - w̄ K_n(z, w)`.
pub fn weak_kernel(basis: &OrthonormalBasis, n: usize, z: Complex64, w: Complex64) -> Result<Cx> {
    let prec = basis.prec();
    let k1 = cd_kernel(basis, n + 1, z, w)?;
    let k0 = cd_kernel(basis, n, z, w)?;
    let zb = Cx::from_c64(prec, z.conj());
    let wb = Cx::from_c64(prec, w.conj());
    Ok(&(&zb * &k1) - &(&wb * &k0))
}

/// `[j][k] = h_jk = <z p_k, p_j>` for `j <= n`, `k <= N`.
fn hessenberg_rows(t: &ComplexMomentTable, basis: &OrthonormalBasis, n: usize, big_n: usize) -> CMat {
    // <z p_k, p_j> = <z^1 z̄^0 p_k, p_j>
    let x = symbol_inner_products(t, basis, 1, 0, big_n + 1, n + 1);
    CMat::from_fn(n + 1, big_n + 1, basis.prec(), |j, k| x.get(k, j).clone())
}

fn kernel_prereq(table: &ComplexMomentTable, basis: &OrthonormalBasis, n: usize, big_n: usize) -> Result<()> {
    degree_check(table, (big_n + 1).max(n + 1))?;
    if basis.degree() < big_n.max(n) {
        return Err(Error::DegreeTooHigh {
            required: big_n.max(n),
            available: basis.degree(),
        });
    }
    Ok(())
}

/// `L_{N,n}(z, w) = ∫ K_N(z, ζ) (z̄ - ζ̄) K_n(ζ, w) dμ(ζ)`
/// `= z̄ K_{min(n,N)}(z, w) - Σ_{j<=n, k<=N} p_k(z) conj(h_jk) conj(p_j(w))`.
pub fn kernel_l_estimate(
    table: &ComplexMomentTable,
    basis: &OrthonormalBasis,
    n: usize,
    big_n: usize,
    z: Complex64,
    w: Complex64,
) -> Result<Cx> {
    kernel_prereq(table, basis, n, big_n)?;
    let prec = basis.prec();
    let t = table.with_prec(prec);
    let hr = hessenberg_rows(&t, basis, n, big_n);
    let pz = basis.eval_all(big_n, &Cx::from_c64(prec, z))?;
    let pw = basis.eval_all(n, &Cx::from_c64(prec, w))?;
    let mut out = Cx::zero(prec);
    let zb = Cx::from_c64(prec, z.conj());
    for j in 0..=n.min(big_n) {
        out += &(&zb * &pz[j].mul_conj(&pw[j]));
    }
    for (j, pwj) in pw.iter().enumerate() {
        let mut inner = Cx::zero(prec);
        for (k, pzk) in pz.iter().enumerate() {
            inner += &pzk.mul_conj(hr.get(j, k));
        }
        out -= &inner.mul_conj(pwj);
    }
    Ok(out)
}

/// `‖L_{N,n}‖²` in `L²(μ ⊗ μ)`: the sum over `j <= n` of
/// `‖z̄ p_j - P_N(z̄ p_j)‖²` (or `‖P_N(z̄ p_j)‖²` when `j > N`).
pub fn kernel_l_norm_sq(table: &ComplexMomentTable, basis: &OrthonormalBasis, n: usize, big_n: usize) -> Result<Real> {
    kernel_prereq(table, basis, n, big_n)?;
    let prec = basis.prec();
    let t = table.with_prec(prec);
    let hr = hessenberg_rows(&t, basis, n, big_n);
    let zz = symbol_inner_products(&t, basis, 1, 1, n + 1, n + 1);
    let mut total = Float::new(prec);
    for j in 0..=n {
        let mut proj = Float::new(prec);
        for k in 0..=big_n {
            proj += hr.get(j, k).norm_sqr();
        }
        if j <= big_n {
            total += &zz.get(j, j).re;
            total -= &proj;
        } else {
            total += &proj;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessenberg::{area_estimate, build};
    use crate::measure::{moments_of, MeasureSpec};
    use crate::moments::PrecisionPolicy;
    use crate::mp::pow2;
    use crate::orthopoly::orthonormalize;

    const P: u32 = 256;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct Fixture {
        t: ComplexMomentTable,
        b: OrthonormalBasis,
        h: HessenbergMatrix,
    }

    fn fixture(spec: &MeasureSpec, degree: usize) -> Fixture {
        let t = moments_of(spec, degree, P).unwrap();
        let b = orthonormalize(&t, degree - 1, &PrecisionPolicy::default()).unwrap();
        let h = build(&t, &b, degree - 1).unwrap();
        Fixture { t, b, h }
    }

    fn unit_disk() -> MeasureSpec {
        MeasureSpec::disk(c(0.0, 0.0), 1.0)
    }

    #[test]
    fn polynomial_algebra() {
        let r = BivariatePolynomial::from_terms(P, &[(2, 3, c(1.0, 1.0)), (0, 1, c(2.0, 0.0)), (4, 0, c(1.0, 0.0))]);
        assert_eq!((r.deg_z(), r.deg_zbar()), (4, 3));
        assert!(!r.is_analytic());
        let d = r.dbar_derivative();
        assert_eq!(d.coeff(2, 2).unwrap().to_c64(), c(3.0, 3.0));
        assert_eq!(d.coeff(0, 0).unwrap().to_c64(), c(2.0, 0.0));
        assert!(d.coeff(4, 0).is_none());
        let s = BivariatePolynomial::cloud_symbol(P, 1, 2);
        assert_eq!(s.dbar_derivative(), BivariatePolynomial::from_terms(P, &[(1, 2, c(1.0, 0.0))]));
        let z = c(0.3, -1.2);
        let expect = c(1.0, 1.0) * z * z * z.conj().powu(3) + 2.0 * z.conj() + z.powu(4);
        assert!((r.eval(z) - expect).norm() < 1e-14);
        let mut zero = BivariatePolynomial::monomial(1, 1, Cx::one(P));
        zero.add_term(1, 1, &-Cx::one(P));
        assert_eq!(zero.terms().count(), 0);
    }

    #[test]
    fn disk_trace_is_weighted_shift_closed_form() {
        let f = fixture(&unit_disk(), 22);
        let r = BivariatePolynomial::from_terms(P, &[(0, 1, c(1.0, 0.0))]);
        for n in [0usize, 3, 8] {
            for big_n in [n + 1, 20] {
                let v = trace_estimate(&f.t, &f.b, &f.h, &r, n, big_n).unwrap();
                let e = (n as f64 + 1.0) / (n as f64 + 2.0);
                assert!((v.to_c64() - c(e, 0.0)).norm() < 1e-30, "n={n} N={big_n}");
            }
        }
        let est = cloud_moment(&f.t, &f.b, &f.h, 0, 0, 8, 20).unwrap();
        assert!((est.value_c64() - c(0.9, 0.0)).norm() < 1e-30);
    }

    #[test]
    fn circle_first_step_is_exact() {
        let f = fixture(&MeasureSpec::UnitCircle, 6);
        let est = cloud_moment(&f.t, &f.b, &f.h, 0, 0, 0, 1).unwrap();
        assert_eq!(est.value_c64(), c(1.0, 0.0));
        let area = area_estimate(&f.h, 0, 5).unwrap();
        assert!((Float::with_val(P, &area - &pi(P)).abs()) < pow2(P, -240));
    }

    #[test]
    fn analytic_symbols_are_annihilated() {
        let specs = [
            unit_disk(),
            MeasureSpec::EllipseJoukowski { rho: 3.0 },
            MeasureSpec::CirclePushforward {
                poly: vec![c(1.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)],
            },
            MeasureSpec::sum(vec![(unit_disk(), 1.0), (MeasureSpec::atoms(&[(c(2.0, 1.0), 0.5)]), 1.0)]),
        ];
        for spec in &specs {
            let f = fixture(spec, 16);
            for d in 0..=3 {
                let r = BivariatePolynomial::from_terms(P, &[(d, 0, c(0.7, -0.2))]);
                let v = trace_estimate(&f.t, &f.b, &f.h, &r, 5, 5 + d.max(1)).unwrap();
                assert!(v.abs() < pow2(P, -100), "{spec:?} d={d}: {v}");
            }
        }
    }

    #[test]
    fn atoms_have_empty_cloud() {
        let f = fixture(&MeasureSpec::atoms(&[(c(2.0, 0.0), 1.0), (c(2.0, 1.0), 1.0)]), 2);
        for (n, big_n) in [(0, 0), (0, 1)] {
            let est = cloud_moment(&f.t, &f.b, &f.h, 0, 0, n, big_n);
            match est {
                Ok(e) if big_n == 1 => assert!(e.value.abs() < pow2(P, -200)),
                Ok(_) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn cloud_moments_are_hermitian() {
        let spec = MeasureSpec::sum(vec![
            (MeasureSpec::EllipseJoukowski { rho: 3.0 }, 1.0),
            (MeasureSpec::atoms(&[(c(2.0, 1.0), 0.5)]), 1.0),
        ]);
        let f = fixture(&spec, 24);
        let grid = cloud_moment_table(&f.t, &f.b, &f.h, 2, 8, 20).unwrap();
        for p in 0..=2 {
            assert_eq!(grid[p][p].value.im, 0);
            for q in 0..=2 {
                assert_eq!(grid[p][q].value, grid[q][p].value.conj());
            }
        }
    }

    #[test]
    fn degree_requirement_is_reported() {
        let f = fixture(&unit_disk(), 10);
        let r = BivariatePolynomial::cloud_symbol(P, 2, 2);
        let err = trace_estimate(&f.t, &f.b, &f.h, &r, 4, 9).unwrap_err();
        assert_eq!(
            err,
            Error::DegreeTooHigh {
                required: 12,
                available: 10
            }
        );
    }

    #[test]
    fn error_bound_on_the_disk() {
        let f = fixture(&unit_disk(), 40);
        let r = BivariatePolynomial::from_terms(P, &[(0, 1, c(1.0, 0.0))]);
        let pts = crate::measure::support_samples(&unit_disk(), 64);
        let eb = error_bound(&f.h, &r, 8, 20, &pts, std::f64::consts::PI, 39, TailModel::KnownArea(std::f64::consts::PI))
            .unwrap();
        assert!((eb.sup_r_tilde - 1.0).abs() < 1e-15);
        assert!((eb.tail - 0.1).abs() < 1e-15);
        assert_eq!(eb.far_corner, 0.0);
        assert!((eb.bound - 0.1f64.sqrt()).abs() < 1e-15);
        // the surrogate sees only the tail up to the last full column
        let sur = error_bound(&f.h, &r, 8, 20, &pts, std::f64::consts::PI, 39, TailModel::Surrogate).unwrap();
        assert!((sur.tail - (0.1 - 1.0 / 40.0)).abs() < 1e-15);
        let analytic = BivariatePolynomial::from_terms(P, &[(3, 0, c(1.0, 0.0))]);
        let eb = error_bound(&f.h, &analytic, 8, 20, &pts, 4.0, 39, TailModel::Surrogate).unwrap();
        assert_eq!(eb.bound, 0.0);
        assert_eq!(
            error_bound(&f.h, &r, 8, 20, &[], 1.0, 39, TailModel::Surrogate).unwrap_err(),
            Error::EmptySampleSet
        );
    }

    #[test]
    fn r_tilde_on_diagonal_is_the_polynomial_limit() {
        // R = w̄³: R̃(z̄; w, w̄) = z̄² + z̄w̄ + w̄², diagonal value 3 w̄²
        let parts = vec![vec![c(0.0, 0.0)], vec![c(0.0, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]];
        let w = c(0.4, 0.9);
        assert!((r_tilde(&parts, w, w) - 3.0 * w.conj() * w.conj()).norm() < 1e-15);
    }

    #[test]
    fn weak_kernel_on_the_circle() {
        let f = fixture(&MeasureSpec::UnitCircle, 6);
        // K_n(z, w) = Σ_{j<=n} (z w̄)^j
        let v = weak_kernel(&f.b, 1, c(2.0, 0.0), c(3.0, 0.0)).unwrap().to_c64();
        assert_eq!(v, c(2.0 * 43.0 - 3.0 * 7.0, 0.0));
        let z = c(0.3, 0.4);
        let d = weak_kernel(&f.b, 3, z, z).unwrap().to_c64();
        let p4 = f.b.eval(4, &Cx::from_c64(P, z)).unwrap().norm_sqr().to_f64();
        assert!((d - z.conj() * p4).norm() < 1e-15);
    }

    #[test]
    fn kernel_l_matches_weak_kernel_on_the_disk() {
        let f = fixture(&unit_disk(), 14);
        let grid: Vec<f64> = (0..5).map(|i| -0.8 + 0.4 * i as f64).collect();
        for &x in &grid {
            for &y in &grid {
                let z = c(x, y);
                let w = c(y, -x * 0.5);
                let a = weak_kernel(&f.b, 5, z, w).unwrap();
                let b = kernel_l_estimate(&f.t, &f.b, 6, 10, z, w).unwrap();
                assert!((&a - &b).abs() < pow2(P, -200));
            }
        }
        assert_eq!(
            kernel_l_estimate(&f.t, &f.b, 0, 0, c(0.0, 0.0), c(0.0, 0.0)).unwrap().to_c64(),
            c(0.0, 0.0)
        );
        let f = fixture(&MeasureSpec::UnitCircle, 4);
        let z = c(0.5, -0.25);
        assert_eq!(kernel_l_estimate(&f.t, &f.b, 0, 0, z, c(3.0, 1.0)).unwrap().to_c64(), z.conj());
    }

    #[test]
    fn kernel_norm_is_sum_of_s() {
        for spec in [MeasureSpec::EllipseJoukowski { rho: 2.5 }, unit_disk()] {
            let f = fixture(&spec, 14);
            for (n, big_n) in [(3usize, 7usize), (5, 12), (4, 4)] {
                let s = s_sequence(&f.h, n, big_n).unwrap();
                let mut sum = Float::new(P);
                for v in &s {
                    sum += v;
                }
                let norm = kernel_l_norm_sq(&f.t, &f.b, n, big_n).unwrap();
                assert!(Float::with_val(P, &norm - &sum).abs() < pow2(P, -200));
            }
        }
    }
}

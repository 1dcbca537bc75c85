//! Closed-form moment generators for the reference measures and for weighted
//! point data.

use std::f64::consts::PI;

use num_complex::Complex64;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{combine, ComplexMomentTable, MassUnit};
use crate::mp::{pi, Cx, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialNode {
    pub r: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: Complex64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    pub measure: MeasureSpec,
    pub weight: f64,
}

/// A measure with exactly computable moments.
///
/// JSON form is internally tagged by `"kind"`, complex numbers are `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    /// Area measure on `{|z - center| < radius}`.
    Disk { center: Complex64, radius: f64 },
    /// Area measure on the centred ellipse with semi-axes
    /// `(sqrt(rho) ± 1/sqrt(rho)) / 2` (foci at ±1).
    EllipseJoukowski { rho: f64 },
    /// Normalised arc length `dθ / 2π` on the unit circle.
    UnitCircle,
    /// Rotation-invariant measure with mass `weight` spread uniformly on each
    /// circle `|z| = r`.
    RadialDiscrete { nodes: Vec<RadialNode> },
    Atoms { atoms: Vec<Atom> },
    /// Push-forward of `dθ / 2π` under `z ↦ poly(z)`; coefficients in
    /// ascending order.
    CirclePushforward { poly: Vec<Complex64> },
    Sum { parts: Vec<WeightedMeasure> },
}

impl MeasureSpec {
    pub fn disk(center: Complex64, radius: f64) -> Self {
        MeasureSpec::Disk { center, radius }
    }

    pub fn atoms(points: &[(Complex64, f64)]) -> Self {
        MeasureSpec::Atoms {
            atoms: points.iter().map(|&(z, weight)| Atom { z, weight }).collect(),
        }
    }

    pub fn sum(parts: Vec<(MeasureSpec, f64)>) -> Self {
        MeasureSpec::Sum {
            parts: parts
                .into_iter()
                .map(|(measure, weight)| WeightedMeasure { measure, weight })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMeasure(m));
        match self {
            MeasureSpec::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || !center.is_finite() {
                    return bad(format!("disk needs a finite center and positive radius, got {radius}"));
                }
            }
            MeasureSpec::EllipseJoukowski { rho } => {
                if !(rho.is_finite() && *rho > 1.0) {
                    return bad(format!("ellipse parameter rho must exceed 1, got {rho}"));
                }
            }
            MeasureSpec::UnitCircle => {}
            MeasureSpec::RadialDiscrete { nodes } => {
                if nodes.is_empty() {
                    return bad("radial measure has no nodes".into());
                }
                for n in nodes {
                    if !(0.0..=1.0).contains(&n.r) || !(n.weight.is_finite() && n.weight > 0.0) {
                        return bad(format!("radial node r={} weight={} out of range", n.r, n.weight));
                    }
                }
            }
            MeasureSpec::Atoms { atoms } => {
                if atoms.is_empty() {
                    return bad("atomic measure has no atoms".into());
                }
                for a in atoms {
                    if !a.z.is_finite() || !(a.weight.is_finite() && a.weight > 0.0) {
                        return bad(format!("atom {} with weight {} is invalid", a.z, a.weight));
                    }
                }
            }
            MeasureSpec::CirclePushforward { poly } => {
                if poly.iter().any(|c| !c.is_finite()) {
                    return bad("push-forward polynomial has non-finite coefficients".into());
                }
                if poly.iter().skip(1).all(|c| *c == Complex64::new(0.0, 0.0)) {
                    return bad("push-forward polynomial must have degree at least 1".into());
                }
            }
            MeasureSpec::Sum { parts } => {
                if parts.is_empty() {
                    return bad("sum has no parts".into());
                }
                for p in parts {
                    if !(p.weight.is_finite() && p.weight >= 0.0) {
                        return bad(format!("sum weight {} must be nonnegative", p.weight));
                    }
                    p.measure.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Largest degree whose moment table is expected to be positive definite
    /// at 256-bit precision.
    pub fn advertised_max_degree(&self) -> usize {
        match self {
            MeasureSpec::Atoms { atoms } => {
                let mut pts: Vec<Complex64> = Vec::new();
                for a in atoms {
                    if !pts.contains(&a.z) {
                        pts.push(a.z);
                    }
                }
                pts.len().saturating_sub(1)
            }
            MeasureSpec::RadialDiscrete { nodes } if nodes.iter().all(|n| n.r == 0.0) => 0,
            MeasureSpec::Sum { parts } => parts
                .iter()
                .filter(|p| p.weight > 0.0)
                .map(|p| p.measure.advertised_max_degree())
                .max()
                .unwrap_or(0),
            _ => 48,
        }
    }

    fn mass_unit(&self) -> MassUnit {
        match self {
            MeasureSpec::Disk { .. } | MeasureSpec::EllipseJoukowski { .. } => MassUnit::Lebesgue,
            MeasureSpec::UnitCircle | MeasureSpec::CirclePushforward { .. } => MassUnit::Probability,
            _ => MassUnit::Raw,
        }
    }
}

/// Moments `m[j][k]`, `0 <= j, k <= degree`, computed in closed form at
/// `prec` bits.
pub fn moments_of(spec: &MeasureSpec, degree: usize, prec: u32) -> Result<ComplexMomentTable> {
    spec.validate()?;
    let table = match spec {
        MeasureSpec::Disk { center, radius } => disk_moments(*center, *radius, degree, prec),
        MeasureSpec::EllipseJoukowski { rho } => ellipse_moments(*rho, degree, prec),
        MeasureSpec::UnitCircle => ComplexMomentTable::from_fn(degree, prec, MassUnit::Probability, |j, k| {
            if j == k {
                Cx::one(prec)
            } else {
                Cx::zero(prec)
            }
        }),
        MeasureSpec::RadialDiscrete { nodes } => {
            let diag: Vec<Real> = (0..=degree)
                .map(|j| {
                    let mut s = Float::new(prec);
                    for n in nodes {
                        let r2 = Float::with_val(prec, n.r) * n.r;
                        let pw = pow_real(&r2, j);
                        s += Float::with_val(prec, n.weight) * pw;
                    }
                    s
                })
                .collect();
            ComplexMomentTable::from_fn(degree, prec, MassUnit::Raw, |j, k| {
                if j == k {
                    Cx::from_real(diag[j].clone())
                } else {
                    Cx::zero(prec)
                }
            })
        }
        MeasureSpec::Atoms { atoms } => atom_moments(atoms, degree, prec),
        MeasureSpec::CirclePushforward { poly } => pushforward_moments(poly, degree, prec),
        MeasureSpec::Sum { parts } => {
            let tables = parts
                .iter()
                .map(|p| Ok((moments_of(&p.measure, degree, prec)?, p.weight)))
                .collect::<Result<Vec<_>>>()?;
            combine(&tables)?
        }
    };
    Ok(table.with_mass_unit(spec.mass_unit()))
}

fn pow_real(x: &Real, n: usize) -> Real {
    let mut acc = Float::with_val(x.prec(), 1);
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Rows `0..=n` of Pascal's triangle, exact while entries fit the precision.
fn binomials(n: usize, prec: u32) -> Vec<Vec<Real>> {
    let mut rows: Vec<Vec<Real>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = Vec::with_capacity(i + 1);
        for k in 0..=i {
            if k == 0 || k == i {
                row.push(Float::with_val(prec, 1));
            } else {
                let prev = &rows[i - 1];
                row.push(Float::with_val(prec, &prev[k - 1] + &prev[k]));
            }
        }
        rows.push(row);
    }
    rows
}

fn powers(z: &Cx, n: usize) -> Vec<Cx> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(Cx::one(z.prec()));
    for i in 1..=n {
        let next = &out[i - 1] * z;
        out.push(next);
    }
    out
}

/// `m[j][k] = Σ_s C(j,s) C(k,s) c^(j-s) conj(c)^(k-s) π R^(2s+2) / (s+1)`.
fn disk_moments(center: Complex64, radius: f64, degree: usize, prec: u32) -> ComplexMomentTable {
    let binom = binomials(degree, prec);
    let c = Cx::from_c64(prec, center);
    let cp = powers(&c, degree);
    let cbp: Vec<Cx> = cp.iter().map(Cx::conj).collect();
    let r2 = Float::with_val(prec, radius) * radius;
    let pi = pi(prec);
    // π R^(2s+2) / (s+1)
    let radial: Vec<Real> = (0..=degree)
        .map(|s| {
            let v = pow_real(&r2, s + 1) * &pi;
            v / (s as u32 + 1)
        })
        .collect();
    ComplexMomentTable::from_fn(degree, prec, MassUnit::Lebesgue, |j, k| {
        let mut acc = Cx::zero(prec);
        for s in 0..=j.min(k) {
            let w = Float::with_val(prec, &binom[j][s] * &binom[k][s]) * &radial[s];
            let term = (&cp[j - s] * &cbp[k - s]).scale(&w);
            acc += &term;
        }
        acc
    })
}

/// Image of the unit disk under `u ↦ A u + B conj(u)` with
/// `A = sqrt(rho)/2`, `B = 1/(2 sqrt(rho))`; Jacobian `A² - B²`.
fn ellipse_moments(rho: f64, degree: usize, prec: u32) -> ComplexMomentTable {
    let binom = binomials(degree, prec);
    let sr = Float::with_val(prec, rho).sqrt();
    let a = Float::with_val(prec, &sr / 2u32);
    let b = Float::with_val(prec, 1) / (sr * 2u32);
    let jac = Float::with_val(prec, a.square_ref()) - Float::with_val(prec, b.square_ref());
    let pa: Vec<Real> = (0..=2 * degree).map(|i| pow_real(&a, i)).collect();
    let pb: Vec<Real> = (0..=2 * degree).map(|i| pow_real(&b, i)).collect();
    let pi = pi(prec);
    ComplexMomentTable::from_fn(degree, prec, MassUnit::Lebesgue, |j, k| {
        if (j + k) % 2 == 1 {
            return Cx::zero(prec);
        }
        // z^j = Σ_s C(j,s) A^s B^(j-s) u^s ū^(j-s),
        // conj(z)^k = Σ_t C(k,t) A^t B^(k-t) ū^t u^(k-t);
        // only u^p ū^p survives: s + k - t = j - s + t.
        let mut acc = Float::new(prec);
        for s in 0..=j {
            let twice_t = 2 * s + k;
            if twice_t < j {
                continue;
            }
            let t = (twice_t - j) / 2;
            if t > k {
                continue;
            }
            let p = s + k - t;
            let term = Float::with_val(prec, &binom[j][s] * &binom[k][t]) * &pa[s + t] * &pb[j - s + k - t];
            acc += term / (p as u32 + 1);
        }
        Cx::from_real(acc * &pi * &jac)
    })
}

fn atom_moments(atoms: &[Atom], degree: usize, prec: u32) -> ComplexMomentTable {
    let pw: Vec<(Vec<Cx>, Real)> = atoms
        .iter()
        .map(|a| (powers(&Cx::from_c64(prec, a.z), degree), Float::with_val(prec, a.weight)))
        .collect();
    ComplexMomentTable::from_fn(degree, prec, MassUnit::Raw, |j, k| {
        let mut acc = Cx::zero(prec);
        for (p, w) in &pw {
            acc += &p[j].mul_conj(&p[k]).scale(w);
        }
        acc
    })
}

fn poly_mul(a: &[Cx], b: &[Cx], prec: u32) -> Vec<Cx> {
    let mut out = vec![Cx::zero(prec); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            crate::mp::fma_into(&mut out[i + j], x, y);
        }
    }
    out
}

/// `m[j][k] = (1/2π) ∫ r^j conj(r)^k dθ = Σ_i [r^j]_i conj([r^k]_i)` by
/// Parseval on the coefficient sequences.
fn pushforward_moments(poly: &[Complex64], degree: usize, prec: u32) -> ComplexMomentTable {
    let mut r: Vec<Cx> = poly.iter().map(|&c| Cx::from_c64(prec, c)).collect();
    while r.len() > 1 && r.last().is_some_and(Cx::is_zero) {
        r.pop();
    }
    let mut pw: Vec<Vec<Cx>> = vec![vec![Cx::one(prec)]];
    for j in 1..=degree {
        let next = poly_mul(&pw[j - 1], &r, prec);
        pw.push(next);
    }
    ComplexMomentTable::from_fn(degree, prec, MassUnit::Probability, |j, k| {
        let mut acc = Cx::zero(prec);
        for (x, y) in pw[j].iter().zip(&pw[k]) {
            acc += &x.mul_conj(y);
        }
        acc
    })
}

/// Deterministic quasi-uniform points of the support, including its
/// extreme-modulus parts (boundary rings of planar pieces).
pub fn support_samples(spec: &MeasureSpec, count: usize) -> Vec<Complex64> {
    let count = count.max(1);
    match spec {
        MeasureSpec::Disk { center, radius } => planar_samples(count, |u| center + u * radius),
        MeasureSpec::EllipseJoukowski { rho } => {
            let a = rho.sqrt() / 2.0;
            let b = 1.0 / (2.0 * rho.sqrt());
            planar_samples(count, |u| u * a + u.conj() * b)
        }
        MeasureSpec::UnitCircle => circle(count, 1.0),
        MeasureSpec::RadialDiscrete { nodes } => {
            let per = (count / nodes.len()).max(1);
            let mut out = Vec::new();
            for n in nodes {
                if n.r == 0.0 {
                    out.push(Complex64::new(0.0, 0.0));
                } else {
                    out.extend(circle(per, n.r));
                }
            }
            out
        }
        MeasureSpec::Atoms { atoms } => atoms.iter().map(|a| a.z).collect(),
        MeasureSpec::CirclePushforward { poly } => circle(count, 1.0)
            .into_iter()
            .map(|z| poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c))
            .collect(),
        MeasureSpec::Sum { parts } => {
            let per = (count / parts.len()).max(1);
            parts
                .iter()
                .flat_map(|p| support_samples(&p.measure, per))
                .collect()
        }
    }
}

fn circle(count: usize, radius: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / count as f64))
        .collect()
}

/// Half the points on the unit circle, the rest on a sunflower spiral inside,
/// then mapped by `map`.
fn planar_samples(count: usize, map: impl Fn(Complex64) -> Complex64) -> Vec<Complex64> {
    let boundary = count.div_ceil(2);
    let interior = count - boundary;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut pts = circle(boundary, 1.0);
    pts.extend((0..interior).map(|i| {
        let r = ((i as f64 + 0.5) / interior as f64).sqrt();
        Complex64::from_polar(r, golden * i as f64)
    }));
    pts.into_iter().map(map).collect()
}

/// Area of the convex hull of `points` (monotone chain).
pub fn convex_hull_area(points: &[Complex64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|z| (z.re, z.im)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut twice = 0.0;
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        twice += a.0 * b.1 - a.1 * b.0;
    }
    twice.abs() / 2.0
}

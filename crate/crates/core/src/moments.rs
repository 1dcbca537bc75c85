//! Complex moment tables `m[j][k] = ∫ z^j conj(z)^k dμ`, their validation,
//! weighted combination and the JSON file format.

use std::fmt::Write as _;

use num_complex::Complex64;
use rug::Float;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, hermitian_eigen, CMat};
use crate::mp::{pow2, Cx, Real};

pub const DEFAULT_BITS: u32 = 256;

/// Arithmetic precision and the tolerances derived from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionPolicy {
    pub significand_bits: u32,
    /// Relative to the total mass `m[0][0]`.
    pub psd_tol: f64,
    pub band_tol: f64,
}

impl PrecisionPolicy {
    pub fn new(significand_bits: u32) -> Result<Self> {
        if significand_bits < 53 {
            return Err(Error::InvalidArgument(format!(
                "precision must be at least 53 bits, got {significand_bits}"
            )));
        }
        let half = -(significand_bits as i32) / 2;
        let quarter = -(significand_bits as i32) / 4;
        Ok(PrecisionPolicy {
            significand_bits,
            psd_tol: 2f64.powi(half),
            band_tol: 2f64.powi(quarter),
        })
    }

    pub fn bits(&self) -> u32 {
        self.significand_bits
    }

    /// Cholesky pivots below `2^(-bits/2) * mass` count as singular.
    pub fn pivot_floor(&self, mass: &Real) -> Real {
        let floor = pow2(self.significand_bits, -(self.significand_bits as i32) / 2);
        floor * mass
    }

    /// Residual allowed in `<p_j, p_k> = δ_jk`.
    pub fn gram_tol(&self) -> f64 {
        2f64.powi(-(self.significand_bits as i32) / 4)
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy::new(DEFAULT_BITS).expect("default precision is valid")
    }
}

/// Normalisation convention recorded alongside the moments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MassUnit {
    Lebesgue,
    Probability,
    #[default]
    Raw,
}

/// Moments `m[j][k]`, `0 <= j, k <= degree`, stored at a fixed precision.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMomentTable {
    degree: usize,
    prec: u32,
    mass_unit: MassUnit,
    entries: Vec<Cx>,
}

impl ComplexMomentTable {
    pub fn from_fn(
        degree: usize,
        prec: u32,
        mass_unit: MassUnit,
        mut f: impl FnMut(usize, usize) -> Cx,
    ) -> Self {
        let n = degree + 1;
        let mut entries = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                entries.push(f(j, k).with_prec(prec));
            }
        }
        ComplexMomentTable {
            degree,
            prec,
            mass_unit,
            entries,
        }
    }

    /// Builds a table from explicit rows; rows must form a square array.
    pub fn from_rows(rows: Vec<Vec<Cx>>, prec: u32, mass_unit: MassUnit) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("moment table has no rows".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
        }
        let entries = rows.into_iter().flatten().map(|z| z.with_prec(prec)).collect();
        Ok(ComplexMomentTable {
            degree: n - 1,
            prec,
            mass_unit,
            entries,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn mass_unit(&self) -> MassUnit {
        self.mass_unit
    }

    pub fn with_mass_unit(mut self, unit: MassUnit) -> Self {
        self.mass_unit = unit;
        self
    }

    pub fn get(&self, j: usize, k: usize) -> &Cx {
        &self.entries[j * (self.degree + 1) + k]
    }

    pub fn set(&mut self, j: usize, k: usize, value: Cx) {
        let n = self.degree + 1;
        self.entries[j * n + k] = value.with_prec(self.prec);
    }

    pub fn mass(&self) -> Real {
        self.get(0, 0).re.clone()
    }

    /// Fails fast when an operation needs moments beyond the table.
    pub fn require_degree(&self, required: usize) -> Result<()> {
        if required > self.degree {
            Err(Error::DegreeTooHigh {
                required,
                available: self.degree,
            })
        } else {
            Ok(())
        }
    }

    /// Gram matrix of `1, z, ..., z^n`.
    pub fn gram(&self, n: usize) -> CMat {
        CMat::from_fn(n + 1, n + 1, self.prec, |j, k| self.get(j, k).clone())
    }

    /// Same moments re-rounded to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        ComplexMomentTable {
            degree: self.degree,
            prec,
            mass_unit: self.mass_unit,
            entries: self.entries.iter().map(|z| z.with_prec(prec)).collect(),
        }
    }

    /// Leading block up to `degree`.
    pub fn truncated(&self, degree: usize) -> Result<Self> {
        self.require_degree(degree)?;
        Ok(ComplexMomentTable::from_fn(degree, self.prec, self.mass_unit, |j, k| {
            self.get(j, k).clone()
        }))
    }

    pub fn to_c64_rows(&self) -> Vec<Vec<Complex64>> {
        (0..=self.degree)
            .map(|j| (0..=self.degree).map(|k| self.get(j, k).to_c64()).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub degree: usize,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub condition_estimate: f64,
    /// Largest `D'` whose leading Gram block passes the Cholesky pivot test.
    pub max_pd_degree: Option<usize>,
}

/// Checks Hermitian symmetry and positivity of the moment Gram matrix at the
/// policy precision.
pub fn validate(table: &ComplexMomentTable, policy: &PrecisionPolicy) -> Result<ValidationReport> {
    let prec = policy.bits();
    let gram = table.with_prec(prec).gram(table.degree());
    let mass = Float::with_val(prec, &gram.get(0, 0).re);
    if mass <= 0 {
        return Err(Error::NotPsd {
            min_eigenvalue: mass.to_f64(),
        });
    }
    let tol = Float::with_val(prec, policy.psd_tol) * &mass;

    let defect = gram.hermitian_defect();
    if defect > tol {
        return Err(Error::NonHermitian {
            defect: defect.to_f64(),
        });
    }

    let eig = hermitian_eigen(&gram);
    let min = eig.values.first().cloned().unwrap_or_else(|| Float::new(prec));
    let max = eig.values.last().cloned().unwrap_or_else(|| Float::new(prec));
    if min < Float::with_val(prec, -&tol) {
        return Err(Error::NotPsd {
            min_eigenvalue: min.to_f64(),
        });
    }

    let floor = policy.pivot_floor(&mass);
    let max_pd_degree = match cholesky(&gram, &floor) {
        Ok(_) => Some(table.degree()),
        Err(0) => None,
        Err(j) => Some(j - 1),
    };
    let condition_estimate = if min > 0 {
        Float::with_val(prec, &max / &min).to_f64()
    } else {
        f64::INFINITY
    };
    Ok(ValidationReport {
        degree: table.degree(),
        hermitian_defect: defect.to_f64(),
        min_eigenvalue: min.to_f64(),
        max_eigenvalue: max.to_f64(),
        condition_estimate,
        max_pd_degree,
    })
}

/// Entrywise weighted sum of moment tables (moments of `Σ w_i μ_i`).
pub fn combine(tables: &[(ComplexMomentTable, f64)]) -> Result<ComplexMomentTable> {
    let (first, _) = tables
        .first()
        .ok_or_else(|| Error::InvalidArgument("combine needs at least one table".into()))?;
    let degree = first.degree();
    let prec = tables.iter().map(|(t, _)| t.prec()).max().unwrap_or(first.prec());
    for (t, w) in tables {
        if t.degree() != degree {
            return Err(Error::DegreeMismatch {
                left: degree,
                right: t.degree(),
            });
        }
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "combination weights must be finite and nonnegative, got {w}"
            )));
        }
    }
    let weights: Vec<Real> = tables.iter().map(|(_, w)| Float::with_val(prec, *w)).collect();
    let unit = if tables.iter().all(|(t, _)| t.mass_unit() == first.mass_unit()) {
        first.mass_unit()
    } else {
        MassUnit::Raw
    };
    Ok(ComplexMomentTable::from_fn(degree, prec, unit, |j, k| {
        let mut acc = Cx::zero(prec);
        for ((t, _), w) in tables.iter().zip(&weights) {
            acc += &t.get(j, k).scale(w);
        }
        acc
    }))
}

/// How floating-point values are written to JSON.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FloatFormat {
    /// Shortest round-trip decimal of the 64-bit rounding.
    #[default]
    Decimal,
    /// Full-precision radix-16 string (`mantissa@exponent`, exponent in hex
    /// digits).
    Hex,
}

/// JSON value for a real number under the given format.
pub fn real_to_json(x: &Real, format: FloatFormat) -> Value {
    match format {
        FloatFormat::Decimal => json_f64(x.to_f64()),
        FloatFormat::Hex if x.is_zero() => Value::String("0".into()),
        FloatFormat::Hex => Value::String(x.to_string_radix(16, None)),
    }
}

/// Shortest round-trip decimal; `-0.0` is written as `0.0`.
pub fn json_f64(x: f64) -> Value {
    let x = if x == 0.0 { 0.0 } else { x };
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn cx_to_json(z: &Cx, format: FloatFormat) -> Value {
    Value::Array(vec![real_to_json(&z.re, format), real_to_json(&z.im, format)])
}

fn parse_real(v: &Value, prec: u32, path: &str) -> Result<Real> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| Float::with_val(prec, x)).ok_or_else(|| {
            field_error(path, "number out of range")
        }),
        Value::String(s) => Float::parse_radix(s, 16)
            .map(|p| Float::with_val(prec, p))
            .map_err(|e| field_error(path, &format!("bad hex float {s:?}: {e}"))),
        _ => Err(field_error(path, "expected a number or hex string")),
    }
}

fn field_error(path: &str, message: &str) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message: format!("{path}: {message}"),
    }
}

pub fn parse_cx(v: &Value, prec: u32, path: &str) -> Result<Cx> {
    match v {
        Value::Array(parts) if parts.len() == 2 => Ok(Cx::new(
            parse_real(&parts[0], prec, &format!("{path}[0]"))?,
            parse_real(&parts[1], prec, &format!("{path}[1]"))?,
        )),
        _ => Err(field_error(path, "expected [re, im]")),
    }
}

#[derive(Deserialize)]
struct TableFile {
    degree: usize,
    #[serde(default)]
    mass_unit: MassUnit,
    entries: Vec<Vec<Value>>,
}

/// Serialises a table: one JSON object, one matrix row per line.
pub fn save(table: &ComplexMomentTable, format: FloatFormat) -> Vec<u8> {
    let unit = serde_json::to_string(&table.mass_unit()).expect("enum serialises");
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{{\"degree\":{},\"mass_unit\":{},\"entries\":[",
        table.degree(),
        unit
    );
    for j in 0..=table.degree() {
        let row: Vec<Value> = (0..=table.degree())
            .map(|k| cx_to_json(table.get(j, k), format))
            .collect();
        out.push_str(&Value::Array(row).to_string());
        if j < table.degree() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]}\n");
    out.into_bytes()
}

/// Parses a moment table file at `prec` bits.
pub fn load(bytes: &[u8], prec: u32) -> Result<ComplexMomentTable> {
    let file: TableFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = file.degree + 1;
    if file.entries.len() != n {
        return Err(field_error(
            "entries",
            &format!("expected {n} rows for degree {}, found {}", file.degree, file.entries.len()),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    for (j, row) in file.entries.iter().enumerate() {
        if row.len() != n {
            return Err(field_error(
                &format!("entries[{j}]"),
                &format!("expected {n} columns, found {}", row.len()),
            ));
        }
        let parsed = row
            .iter()
            .enumerate()
            .map(|(k, v)| parse_cx(v, prec, &format!("entries[{j}][{k}]")))
            .collect::<Result<Vec<_>>>()?;
        rows.push(parsed);
    }
    ComplexMomentTable::from_rows(rows, prec, file.mass_unit)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn identity_table(d: usize) -> ComplexMomentTable {
        ComplexMomentTable::from_fn(d, P, MassUnit::Probability, |j, k| {
            if j == k {
                Cx::one(P)
            } else {
                Cx::zero(P)
            }
        })
    }

    #[test]
    fn identity_table_is_valid() {
        let report = validate(&identity_table(3), &PrecisionPolicy::default()).unwrap();
        assert_eq!(report.min_eigenvalue, 1.0);
        assert_eq!(report.max_pd_degree, Some(3));
        assert_eq!(report.hermitian_defect, 0.0);
    }

    #[test]
    fn unmirrored_perturbation_is_non_hermitian() {
        let mut t = identity_table(3);
        t.set(1, 0, Cx::from_f64(P, 0.1, 0.0));
        let err = validate(&t, &PrecisionPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::NonHermitian { defect } if (defect - 0.1).abs() < 1e-15));
    }

    #[test]
    fn indefinite_table_is_rejected() {
        let mut t = identity_table(2);
        t.set(0, 1, Cx::from_f64(P, 2.0, 0.0));
        t.set(1, 0, Cx::from_f64(P, 2.0, 0.0));
        assert!(matches!(
            validate(&t, &PrecisionPolicy::default()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn singular_gram_reports_pd_degree() {
        // single atom at z = 2: rank one Gram matrix
        let t = ComplexMomentTable::from_fn(3, P, MassUnit::Raw, |j, k| {
            Cx::from_f64(P, 2f64.powi((j + k) as i32), 0.0)
        });
        let report = validate(&t, &PrecisionPolicy::default()).unwrap();
        assert_eq!(report.max_pd_degree, Some(0));
    }

    #[test]
    fn combine_is_linear() {
        let t = identity_table(2);
        let doubled = combine(&[(t.clone(), 1.0), (t.clone(), 1.0)]).unwrap();
        assert_eq!(doubled.get(1, 1).to_c64(), Complex64::new(2.0, 0.0));
        assert_eq!(combine(&[(t.clone(), 1.0)]).unwrap(), t);
        let other = identity_table(3);
        assert_eq!(
            combine(&[(t.clone(), 1.0), (other, 1.0)]).unwrap_err(),
            Error::DegreeMismatch { left: 2, right: 3 }
        );
        assert!(combine(&[(t, -1.0)]).is_err());
        assert!(combine(&[]).is_err());
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let bytes = save(&identity_table(2), FloatFormat::Decimal);
        let cut = &bytes[..bytes.len() / 2];
        match load(cut, P) {
            Err(Error::Parse { line, .. }) => assert!(line >= 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_name_the_field() {
        let text = br#"{"degree":1,"mass_unit":"raw","entries":[[[1,0],[0,0]],[[0,0]]]}"#;
        match load(text, P) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("entries[1]"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn hex_format_is_lossless() {
        let t = ComplexMomentTable::from_fn(2, P, MassUnit::Raw, |j, k| {
            let third = crate::mp::ratio(P, 1, 3 + j as i64 + k as i64);
            Cx::new(third.clone(), third)
        });
        let bytes = save(&t, FloatFormat::Hex);
        assert_eq!(load(&bytes, P).unwrap(), t);
        let dec = load(&save(&t, FloatFormat::Decimal), P).unwrap();
        assert_ne!(dec, t);
    }

    #[test]
    fn policy_defaults() {
        let p = PrecisionPolicy::default();
        assert_eq!(p.psd_tol, 2f64.powi(-128));
        assert!(PrecisionPolicy::new(32).is_err());
    }
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use cloudmoments::cloud::{self, BivariatePolynomial, TailModel};
use cloudmoments::exptransform::{self, ExpTransformTable};
use cloudmoments::hessenberg;
use cloudmoments::linalg::CMat;
use cloudmoments::measure::{self, MeasureSpec};
use cloudmoments::moments::{self, cx_to_json, real_to_json, DEFAULT_BITS};
use cloudmoments::mp::{pi, Cx};
use cloudmoments::orthopoly;
use cloudmoments::{ComplexMomentTable, Error, FloatFormat, PrecisionPolicy};

const SAMPLE_COUNT: usize = 64;

#[derive(Parser)]
#[command(name = "cloudmoments", version, about = "Cloud moments of planar measures from their complex moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Significand bits (default: $CLOUDMOMENTS_PREC or 256).
    #[arg(long, global = true)]
    prec: Option<u32>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write full-precision hexadecimal floats instead of 64-bit decimals.
    #[arg(long = "hex-floats", global = true)]
    hex_floats: bool,
}

#[derive(Args)]
struct Source {
    /// Measure description (JSON); moments are generated as needed.
    #[arg(long, conflicts_with = "moments", required_unless_present = "moments")]
    measure: Option<PathBuf>,
    /// Moment table file.
    #[arg(long)]
    moments: Option<PathBuf>,
    /// Moment degree to generate from --measure (default: the smallest that
    /// the command needs).
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Args)]
struct Grid {
    /// Plot window `xmin,xmax,ymin,ymax`.
    #[arg(long = "box", default_value = "-2,2,-2,2", value_parser = parse_box, allow_hyphen_values = true)]
    window: [f64; 4],
    /// Points per axis.
    #[arg(long, default_value_t = 41)]
    steps: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a moment table from a measure description.
    GenMoments {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        degree: usize,
    },
    /// Check Hermitian symmetry and positivity of a moment table.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Orthonormal polynomial coefficients and leading coefficients.
    Orthopoly {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: usize,
    },
    /// Hessenberg matrix, s_j, area estimates and Hankel singular numbers.
    Hessenberg {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        nmax: usize,
        /// Row cutoff (default: nmax).
        #[arg(long)]
        kcut: Option<usize>,
        /// Size of the s_j sequence and self-commutator (default: nmax - 1).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Cloud moments c_pq and a_pq = π c_pq for 0 <= p, q <= dmax.
    CloudMoments {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        dmax: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "N")]
        big_n: usize,
        /// Row cutoff for the error bound (default: table degree - 1).
        #[arg(long)]
        kcut: Option<usize>,
    },
    /// Error bound for the estimate of c_pq.
    ErrorBound {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        q: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "N")]
        big_n: usize,
        #[arg(long)]
        kcut: Option<usize>,
        /// Known cloud area; replaces the computable tail surrogate.
        #[arg(long)]
        area: Option<f64>,
    },
    /// Quadrature-domain test and boundary polynomial from cloud moments.
    Reconstruct {
        #[arg(long = "cloud-moments")]
        cloud_moments: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// CSV of the Christoffel–Darboux kernel K_n(z, z) on a grid.
    KernelGrid {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        grid: Grid,
    },
    /// CSV of the reconstructed boundary residual |P|² - Q on a grid.
    BoundaryGrid {
        #[arg(long = "cloud-moments")]
        cloud_moments: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        grid: Grid,
    },
}

fn parse_box(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok([x0, x1, y0, y1]),
        _ => Err("expected xmin,xmax,ymin,ymax with xmin < xmax and ymin < ymax".into()),
    }
}

enum Failure {
    Lib(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

struct Ctx {
    prec: u32,
    policy: PrecisionPolicy,
    format: FloatFormat,
}

fn read(path: &Path) -> Res<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn load_measure(path: &Path) -> Res<MeasureSpec> {
    let spec: MeasureSpec = serde_json::from_slice(&read(path)?).map_err(parse_error)?;
    spec.validate()?;
    Ok(spec)
}

impl Source {
    fn table(&self, ctx: &Ctx, needed: usize) -> Res<(ComplexMomentTable, Option<MeasureSpec>)> {
        if let Some(path) = &self.measure {
            let spec = load_measure(path)?;
            let degree = self.degree.unwrap_or(needed);
            Ok((measure::moments_of(&spec, degree, ctx.prec)?, Some(spec)))
        } else {
            let path = self.moments.as_ref().expect("clap enforces a source");
            Ok((moments::load(&read(path)?, ctx.prec)?, None))
        }
    }
}

fn cmat_json(m: &CMat, format: FloatFormat) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| cx_to_json(m.get(i, j), format)).collect()))
            .collect(),
    )
}

fn basis_for(table: &ComplexMomentTable, ctx: &Ctx, n: usize) -> Res<orthopoly::OrthonormalBasis> {
    Ok(orthopoly::orthonormalize(table, n, &ctx.policy)?)
}

fn run(cli: Cli, ctx: &Ctx) -> Res<Vec<u8>> {
    let fmt = ctx.format;
    let value = match cli.command {
        Command::GenMoments { measure: path, degree } => {
            let spec = load_measure(&path)?;
            return Ok(moments::save(&measure::moments_of(&spec, degree, ctx.prec)?, fmt));
        }
        Command::Validate { source } => {
            let (table, _) = source.table(ctx, source.degree.unwrap_or(0))?;
            let r = moments::validate(&table, &ctx.policy)?;
            serde_json::to_value(&r).expect("report serialises")
        }
        Command::Orthopoly { source, n } => {
            let (table, _) = source.table(ctx, n)?;
            let basis = basis_for(&table, ctx, n)?;
            json!({
                "n": n,
                "coefficients": cmat_json(basis.coeff_matrix(), fmt),
                "gamma": (0..=n).map(|j| real_to_json(&basis.gamma(j), fmt)).collect::<Vec<_>>(),
                "gram_residual": real_to_json(&basis.gram_residual(&table)?, fmt),
            })
        }
        Command::Hessenberg { source, nmax, kcut, n } => {
            let (table, _) = source.table(ctx, nmax + 1)?;
            let basis = basis_for(&table, ctx, nmax)?;
            let h = hessenberg::build(&table, &basis, nmax)?;
            let kcut = kcut.unwrap_or(nmax);
            let n = n.unwrap_or(nmax.saturating_sub(1));
            let s = hessenberg::s_sequence(&h, n, kcut)?;
            let mut areas = Vec::new();
            let mut acc = cloudmoments::mp::real(ctx.prec, 0.0);
            for v in &s {
                acc += v;
                areas.push(real_to_json(&(acc.clone() * pi(ctx.prec)), fmt));
            }
            let sc = hessenberg::selfcommutator(&table, &basis, &h, n, kcut)?;
            let kappa = hessenberg::hankel_singular_values(&sc);
            json!({
                "nmax": nmax,
                "kcut": kcut,
                "n": n,
                "H": cmat_json(h.matrix(), fmt),
                "band_defect": real_to_json(h.band_defect(), fmt),
                "s": s.iter().map(|v| real_to_json(v, fmt)).collect::<Vec<_>>(),
                "area": areas,
                "cutoff_diagnostic": real_to_json(&hessenberg::cutoff_diagnostic(&h, n, kcut)?, fmt),
                "kappa": kappa.iter().map(|v| real_to_json(v, fmt)).collect::<Vec<_>>(),
                "rank": hessenberg::numerical_rank(&kappa, hessenberg::DEFAULT_RANK_TOL),
            })
        }
        Command::CloudMoments {
            source,
            dmax,
            n,
            big_n,
            kcut,
        } => {
            let needed = cloud::required_degree(dmax, dmax + 1, n, big_n).max(kcut.map_or(0, |k| k + 1));
            let (table, spec) = source.table(ctx, needed)?;
            let nmax = table.degree().saturating_sub(1).max(big_n);
            let basis = basis_for(&table, ctx, nmax)?;
            let h = hessenberg::build(&table, &basis, nmax)?;
            let grid = cloud::cloud_moment_table(&table, &basis, &h, dmax, n, big_n)?;
            let kcut = kcut.unwrap_or(nmax);
            let bounds = match &spec {
                Some(spec) => {
                    let pts = measure::support_samples(spec, SAMPLE_COUNT);
                    let hull = measure::convex_hull_area(&pts);
                    let mut rows = Vec::new();
                    for p in 0..=dmax {
                        let mut row = Vec::new();
                        for q in 0..=dmax {
                            let r = BivariatePolynomial::cloud_symbol(ctx.prec, p, q);
                            let b = if hull > 0.0 {
                                Some(cloud::error_bound(&h, &r, n, big_n, &pts, hull, kcut, TailModel::Surrogate)?.bound)
                            } else {
                                None
                            };
                            row.push(b.map_or(Value::Null, moments::json_f64));
                        }
                        rows.push(Value::Array(row));
                    }
                    Value::Array(rows)
                }
                None => Value::Null,
            };
            let pi = pi(ctx.prec);
            let c: Vec<Value> = grid
                .iter()
                .map(|row| Value::Array(row.iter().map(|e| cx_to_json(&e.value, fmt)).collect()))
                .collect();
            let a: Vec<Value> = grid
                .iter()
                .map(|row| Value::Array(row.iter().map(|e| cx_to_json(&e.value.scale(&pi), fmt)).collect()))
                .collect();
            json!({
                "dmax": dmax,
                "n": n,
                "N": big_n,
                "kcut": kcut,
                "c": c,
                "a": a,
                "error_bounds": bounds,
            })
        }
        Command::ErrorBound {
            measure: path,
            degree,
            p,
            q,
            n,
            big_n,
            kcut,
            area,
        } => {
            let spec = load_measure(&path)?;
            let needed = cloud::required_degree(p, q + 1, n, big_n).max(kcut.map_or(0, |k| k + 1));
            let table = measure::moments_of(&spec, degree.unwrap_or(needed), ctx.prec)?;
            let nmax = table.degree().saturating_sub(1).max(big_n);
            let basis = basis_for(&table, ctx, nmax)?;
            let h = hessenberg::build(&table, &basis, nmax)?;
            let kcut = kcut.unwrap_or(nmax);
            let pts = measure::support_samples(&spec, SAMPLE_COUNT);
            let hull = measure::convex_hull_area(&pts);
            let r = BivariatePolynomial::cloud_symbol(ctx.prec, p, q);
            let model = area.map_or(TailModel::Surrogate, TailModel::KnownArea);
            let eb = cloud::error_bound(&h, &r, n, big_n, &pts, hull, kcut, model)?;
            let est = cloud::cloud_moment(&table, &basis, &h, p, q, n, big_n)?;
            json!({
                "p": p,
                "q": q,
                "n": n,
                "N": big_n,
                "kcut": kcut,
                "value": cx_to_json(&est.value, fmt),
                "bound": moments::json_f64(eb.bound),
                "sup_r_tilde": moments::json_f64(eb.sup_r_tilde),
                "tail": moments::json_f64(eb.tail),
                "tail_model": if area.is_some() { "known_area" } else { "surrogate" },
                "far_corner": moments::json_f64(eb.far_corner),
                "hull_area": moments::json_f64(hull),
            })
        }
        Command::Reconstruct { cloud_moments, d, tol } => {
            let b = b_table(&cloud_moments, d, ctx)?;
            let test = exptransform::qd_rank_test(&b, tol);
            let dom = exptransform::pade_reconstruct(&b, d, tol)?;
            json!({
                "d": d,
                "P": dom.p.iter().map(|c| cx_to_json(c, fmt)).collect::<Vec<_>>(),
                "Q": cmat_json(&dom.q, fmt),
                "b": cmat_json(b.matrix(), fmt),
                "det_b": real_to_json(&test.determinant, fmt),
                "singular_values": test.singular_values.iter().map(|v| real_to_json(v, fmt)).collect::<Vec<_>>(),
                "rank": test.numerical_rank,
            })
        }
        Command::KernelGrid { source, n, grid } => {
            let (table, _) = source.table(ctx, n)?;
            let basis = basis_for(&table, ctx, n)?;
            return csv_grid(&grid, "kernel", |z| {
                Ok(orthopoly::cd_kernel(&basis, n, z, z)?.re.to_f64())
            });
        }
        Command::BoundaryGrid {
            cloud_moments,
            d,
            tol,
            grid,
        } => {
            let b = b_table(&cloud_moments, d, ctx)?;
            let dom = exptransform::pade_reconstruct(&b, d, tol)?;
            return csv_grid(&grid, "residual", |z| Ok(exptransform::boundary_residual(&dom, z)));
        }
    };
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values serialise");
    text.push('\n');
    Ok(text.into_bytes())
}

/// Reads the `"a"` table written by `cloud-moments` and exponentiates it.
fn b_table(path: &Path, d: usize, ctx: &Ctx) -> Res<ExpTransformTable> {
    let doc: Value = serde_json::from_slice(&read(path)?).map_err(parse_error)?;
    let rows = doc
        .get("a")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse {
            line: 0,
            column: 0,
            message: "a: expected an array of rows".into(),
        })?;
    let mut entries: Vec<Vec<Cx>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| Error::Parse {
            line: 0,
            column: 0,
            message: format!("a[{i}]: expected an array"),
        })?;
        entries.push(
            row.iter()
                .enumerate()
                .map(|(j, v)| moments::parse_cx(v, ctx.prec, &format!("a[{i}][{j}]")))
                .collect::<cloudmoments::Result<_>>()?,
        );
    }
    let size = entries.len();
    if entries.iter().any(|r| r.len() != size) {
        return Err(Error::Parse {
            line: 0,
            column: 0,
            message: "a: table must be square".into(),
        }
        .into());
    }
    if size <= d {
        return Err(Error::DegreeTooHigh {
            required: d,
            available: size.saturating_sub(1),
        }
        .into());
    }
    let a = CMat::from_fn(size, size, ctx.prec, |i, j| entries[i][j].clone());
    Ok(exptransform::series_to_b(&a, d)?)
}

fn csv_grid(grid: &Grid, column: &str, mut f: impl FnMut(Complex64) -> Res<f64>) -> Res<Vec<u8>> {
    let [x0, x1, y0, y1] = grid.window;
    let steps = grid.steps.max(2);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(PathBuf::from("<csv>"), e.into());
    w.write_record(["x", "y", column]).map_err(io)?;
    for iy in 0..steps {
        let y = y0 + (y1 - y0) * iy as f64 / (steps - 1) as f64;
        for ix in 0..steps {
            let x = x0 + (x1 - x0) * ix as f64 / (steps - 1) as f64;
            let v = f(Complex64::new(x, y))?;
            w.write_record([x.to_string(), y.to_string(), v.to_string()]).map_err(io)?;
        }
    }
    w.into_inner().map_err(|e| Failure::Io(PathBuf::from("<csv>"), e.into_error()))
}

fn precision(flag: Option<u32>) -> Res<u32> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match std::env::var("CLOUDMOMENTS_PREC") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("CLOUDMOMENTS_PREC is not an integer: {s:?}")).into()),
        Err(_) => Ok(DEFAULT_BITS),
    }
}

fn report(f: Failure) -> ExitCode {
    let (kind, message, code) = match &f {
        Failure::Lib(e) => (e.kind(), e.to_string(), if e.is_numerical() { 3 } else { 2 }),
        Failure::Io(path, e) => ("Io", format!("{}: {e}", path.display()), 2),
    };
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match precision(cli.prec).and_then(|bits| {
        Ok(Ctx {
            prec: bits,
            policy: PrecisionPolicy::new(bits)?,
            format: if cli.hex_floats { FloatFormat::Hex } else { FloatFormat::Decimal },
        })
    }) {
        Ok(c) => c,
        Err(f) => return report(f),
    };
    let out = cli.out.clone();
    let bytes = match run(cli, &ctx) {
        Ok(b) => b,
        Err(f) => return report(f),
    };
    let written = match &out {
        Some(path) => fs::write(path, &bytes).map_err(|e| Failure::Io(path.clone(), e)),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::Io(PathBuf::from("<stdout>"), e)),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

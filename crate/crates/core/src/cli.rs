//! Command-line front end: CSV tables, JSON reports and SVG figures.
//!
//! Exit codes: 0 when every check passed (or a search finished), 1 for a
//! verified violation, 2 for usage errors, 3 for numerical failures.

use crate::body::{parse as parse_body, SupportBody};
use crate::cylinder::{open_grid, partition, perimeter_s, phi_k, ps_cylinder, radius_of_measure};
use crate::error::{Error, Result};
use crate::gaussmoments::{mc_measure, measure, measure_quadrature, MultiPoly, SphereRule};
use crate::specfun;
use crate::torsion::{talenti_1d, torsion_halfspace, Source};
use crate::transform::Transform;
use crate::verify::{self, BlMode, Family, Verdict};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Settings shared by every subcommand.
///
/// | key | default |
/// |---|---|
/// | `n` | 2 |
/// | `tol` | 1e-11 |
/// | `max_panels` | 20000 |
/// | `mc_directions` | 200000 |
/// | `mc_samples` | 1000000 |
/// | `seed` | 20240917 |
/// | `fail_tol` | 1e-6 |
/// | `out_dir` | `.` |
/// | `body` | none (repeatable) |
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub tol: f64,
    pub max_panels: usize,
    pub mc_directions: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub fail_tol: f64,
    pub out_dir: PathBuf,
    pub bodies: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let r = SphereRule::default();
        Self {
            n: 2,
            tol: r.tol,
            max_panels: r.max_panels,
            mc_directions: r.mc_directions,
            mc_samples: 1_000_000,
            seed: r.seed,
            fail_tol: r.fail_tol,
            out_dir: PathBuf::from("."),
            bodies: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn rule(&self) -> SphereRule {
        SphereRule {
            tol: self.tol,
            max_panels: self.max_panels,
            mc_directions: self.mc_directions,
            seed: self.seed,
            fail_tol: self.fail_tol,
        }
    }

    /// `key = value` lines; floats use the shortest round-tripping form.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "tol = {:?}", self.tol);
        let _ = writeln!(s, "max_panels = {}", self.max_panels);
        let _ = writeln!(s, "mc_directions = {}", self.mc_directions);
        let _ = writeln!(s, "mc_samples = {}", self.mc_samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "fail_tol = {:?}", self.fail_tol);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        for b in &self.bodies {
            let _ = writeln!(s, "body = {b}");
        }
        s
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("config line {}: expected `key = value`", no + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            let bad =
                |what: &str| Error::Parse(format!("config line {}: bad {what} `{v}`", no + 1));
            match k {
                "n" => c.n = v.parse().map_err(|_| bad("dimension"))?,
                "tol" => c.tol = v.parse().map_err(|_| bad("tolerance"))?,
                "max_panels" => c.max_panels = v.parse().map_err(|_| bad("panel count"))?,
                "mc_directions" => {
                    c.mc_directions = v.parse().map_err(|_| bad("direction count"))?
                }
                "mc_samples" => c.mc_samples = v.parse().map_err(|_| bad("sample count"))?,
                "seed" => c.seed = v.parse().map_err(|_| bad("seed"))?,
                "fail_tol" => c.fail_tol = v.parse().map_err(|_| bad("tolerance"))?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                "body" => c.bodies.push(v.to_string()),
                _ => {
                    return Err(Error::Parse(format!(
                        "config line {}: unknown key `{k}`",
                        no + 1
                    )))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.fail_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_panels == 0 || self.mc_directions == 0 || self.mc_samples == 0 {
            return Err(Error::InvalidParameter("sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gaussconvex",
    version,
    about = "Gaussian measures of convex bodies and concavity checks"
)]
struct Cli {
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_panels: Option<usize>,
    #[arg(long, global = true)]
    mc_directions: Option<usize>,
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Body in the one-line grammar; repeatable.
    #[arg(long = "body", global = true)]
    bodies: Vec<String>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one special function.
    Specfun(SpecfunArgs),
    /// CSV of `a,k,R,s,phi,ps` on an open a-grid.
    CylinderTable(GridArgs),
    /// CSV of the phi/s minimizers per grid point, or of the crossings.
    Partition(PartitionArgs),
    /// Gaussian measure of a body.
    Measure(MeasureArgs),
    /// Torsional rigidity of a body or a half-space.
    Torsion(TorsionArgs),
    /// Run a named check and write a JSON report.
    Verify(VerifyArgs),
    /// SVG line chart of the cylinder functions.
    Plot(PlotArgs),
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output file, relative to out_dir; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpecfunArgs {
    /// g, c, j, j-inv, psi, phi, psi-inv, phi-inv, eta
    #[arg(long = "fn")]
    func: String,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 99)]
    grid: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    #[arg(long, default_value_t = 99)]
    grid: usize,
    /// Emit `kind,i,j,a` crossing rows instead.
    #[arg(long)]
    crossings: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    /// auto, quadrature or mc
    #[arg(long, default_value = "auto")]
    method: String,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct TorsionArgs {
    #[arg(long, default_value = "const:c=1")]
    source: String,
    /// Half-space of this measure instead of a body.
    #[arg(long)]
    halfspace: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// ehrhard, concavity, max-power, gauss-main, cor-t1, minkowski-first,
    /// brascamp-lieb, propgauss, moments, halfspace-alpha, s-inequality,
    /// saint-venant, log-concavity, talenti, counterexample
    #[arg(long)]
    check: String,
    /// psi_inv, phi_inv, power:p=.., conjecture_F:c0=.., weak_F:c0=.., bad_func
    #[arg(long, default_value = "psi_inv")]
    transform: String,
    /// Number of interior t-grid points.
    #[arg(long, default_value_t = 33)]
    grid: usize,
    /// intervals, strip-ball or balls
    #[arg(long, default_value = "balls")]
    family: String,
    /// Sizes per family axis.
    #[arg(long, default_value_t = 8)]
    sizes: usize,
    /// Polynomial such as `x1^2+2*x2^2`, or `half-norm`.
    #[arg(long)]
    poly: Option<String>,
    /// gaussian or even-half
    #[arg(long, default_value = "gaussian")]
    mode: String,
    /// Measure for halfspace-alpha.
    #[arg(long)]
    a: Option<f64>,
    /// Interval `w1,w2` meaning `[-w1, w2]` for talenti; `inf` allowed.
    #[arg(long)]
    interval: Option<String>,
    /// Talenti source: one, bump or logistic.
    #[arg(long, default_value = "one")]
    profile: String,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// phi12, s12, phi-s or phi-diff
    #[arg(long, default_value = "phi12")]
    figure: String,
    #[arg(long, default_value_t = 197)]
    grid: usize,
    #[command(flatten)]
    out: OutArg,
}

/// Outcome of a command apart from its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Violation,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(Status::Pass) => 0,
        Ok(Status::Violation) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericalFailure { .. } | Error::Unsupported(_) => 3,
        Error::Domain(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::Parse(_) => 2,
    }
}

fn config_of(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::InvalidParameter(format!("cannot read config {}: {e}", p.display()))
            })?;
            RunConfig::from_kv(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = cli.n {
        c.n = v;
    }
    if let Some(v) = cli.tol {
        c.tol = v;
    }
    if let Some(v) = cli.max_panels {
        c.max_panels = v;
    }
    if let Some(v) = cli.mc_directions {
        c.mc_directions = v;
    }
    if let Some(v) = cli.mc_samples {
        c.mc_samples = v;
    }
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    if let Some(v) = &cli.out_dir {
        c.out_dir = v.clone();
    }
    if !cli.bodies.is_empty() {
        c.bodies = cli.bodies.clone();
    }
    c.validate()?;
    Ok(c)
}

fn emit(cfg: &RunConfig, out: &OutArg, text: &str) -> Result<()> {
    match &out.out {
        Some(p) => {
            let path: PathBuf = if p.is_absolute() {
                p.clone()
            } else {
                cfg.out_dir.join(p)
            };
            write_file(&path, text)
        }
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| Error::InvalidParameter(format!("cannot write output: {e}")))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| {
                Error::InvalidParameter(format!("cannot create {}: {e}", dir.display()))
            })?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}

fn envelope(cfg: &RunConfig, mut body: Value) -> String {
    if let Value::Object(m) = &mut body {
        m.insert(
            "config".into(),
            serde_json::to_value(cfg).expect("config serializes"),
        );
        m.insert("version".into(), Value::String(VERSION.into()));
    }
    let mut s = serde_json::to_string_pretty(&body).expect("report serializes");
    s.push('\n');
    s
}

fn execute(cli: Cli) -> Result<Status> {
    let cfg = config_of(&cli)?;
    match &cli.cmd {
        Command::Specfun(a) => cmd_specfun(&cfg, a),
        Command::CylinderTable(a) => cmd_cylinder_table(&cfg, a),
        Command::Partition(a) => cmd_partition(&cfg, a),
        Command::Measure(a) => cmd_measure(&cfg, a),
        Command::Torsion(a) => cmd_torsion(&cfg, a),
        Command::Verify(a) => cmd_verify(&cfg, a),
        Command::Plot(a) => cmd_plot(&cfg, a),
        Command::Config => {
            print!("{}", cfg.to_kv());
            Ok(Status::Pass)
        }
    }
}

fn cmd_specfun(cfg: &RunConfig, a: &SpecfunArgs) -> Result<Status> {
    let p = || {
        a.p.ok_or_else(|| Error::InvalidParameter(format!("`{}` needs --p", a.func)))
    };
    let x = a.x;
    let value = match a.func.as_str() {
        "g" => specfun::g(p()?, x)?,
        "c" => specfun::c(x)?,
        "j" => specfun::j_lower(p()?, x)?,
        "j-inv" => specfun::j_inverse(p()?, x)?,
        "psi" => specfun::psi(x),
        "phi" => specfun::phi(x)?,
        "psi-inv" => specfun::psi_inv(x)?,
        "phi-inv" => specfun::phi_inv(x)?,
        "eta" => specfun::eta(x)?,
        other => return Err(Error::Parse(format!("unknown function `{other}`"))),
    };
    let body = json!({"function": a.func, "p": a.p, "x": x, "value": value});
    emit(cfg, &a.out, &envelope(cfg, body))?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct CylinderRow {
    a: f64,
    k: usize,
    #[serde(rename = "R")]
    r: f64,
    s: f64,
    phi: f64,
    ps: f64,
}

fn csv_text<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Rows ordered by `a`, then `k = 1..n`.
pub fn cylinder_table(n: usize, m: usize) -> Result<String> {
    let mut rows = Vec::with_capacity(n * m);
    for a in open_grid(m) {
        for k in 1..=n {
            rows.push(CylinderRow {
                a,
                k,
                r: radius_of_measure(k, a)?,
                s: perimeter_s(k, a)?,
                phi: phi_k(k, a)?,
                ps: ps_cylinder(k, a)?,
            });
        }
    }
    csv_text(&rows)
}

fn cmd_cylinder_table(cfg: &RunConfig, a: &GridArgs) -> Result<Status> {
    emit(cfg, &a.out, &cylinder_table(cfg.n, a.grid)?)?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct CrossingRow {
    kind: &'static str,
    i: usize,
    j: usize,
    a: f64,
}

fn cmd_partition(cfg: &RunConfig, a: &PartitionArgs) -> Result<Status> {
    let t = partition(cfg.n, &open_grid(a.grid))?;
    let text = if a.crossings {
        let rows: Vec<CrossingRow> = t
            .phi_crossings
            .iter()
            .map(|c| ("phi", c))
            .chain(t.s_crossings.iter().map(|c| ("s", c)))
            .map(|(kind, c)| CrossingRow {
                kind,
                i: c.i,
                j: c.j,
                a: c.a,
            })
            .collect();
        csv_text(&rows)?
    } else {
        csv_text(&t.rows)?
    };
    emit(cfg, &a.out, &text)?;
    Ok(Status::Pass)
}

fn bodies(cfg: &RunConfig, need: usize) -> Result<Vec<SupportBody>> {
    if cfg.bodies.len() < need {
        return Err(Error::InvalidParameter(format!(
            "this command needs {need} --body argument(s), got {}",
            cfg.bodies.len()
        )));
    }
    cfg.bodies.iter().map(|s| parse_body(s, cfg.n)).collect()
}

fn cmd_measure(cfg: &RunConfig, a: &MeasureArgs) -> Result<Status> {
    let ks = bodies(cfg, 1)?;
    let rule = cfg.rule();
    let mut out = Vec::new();
    for k in &ks {
        let e = match a.method.as_str() {
            "auto" => measure(k, &rule)?,
            "quadrature" => measure_quadrature(k, &rule)?,
            "mc" => mc_measure(k, cfg.mc_samples, cfg.seed)?,
            other => return Err(Error::Parse(format!("unknown method `{other}`"))),
        };
        out.push(json!({"body": k.label(), "measure": e}));
    }
    emit(cfg, &a.out, &envelope(cfg, json!({ "results": out })))?;
    Ok(Status::Pass)
}

fn cmd_torsion(cfg: &RunConfig, a: &TorsionArgs) -> Result<Status> {
    let body = match a.halfspace {
        Some(m) => json!({"halfspace_measure": m, "torsion": torsion_halfspace(m)?}),
        None => {
            let src: Source = a.source.parse()?;
            let k = bodies(cfg, 1)?.remove(0);
            let t = match (k.round_params(), &src) {
                (Some((kk, r)), _)
                    if k.is_symmetric() && !matches!(src, Source::Touch(j) if j != kk) =>
                {
                    crate::torsion::torsion_radial(kk, r, k.dim(), &src)?
                }
                _ => crate::torsion::torsion_gauge_lower(&k, &src, &cfg.rule())?,
            };
            json!({"body": k.label(), "torsion": t})
        }
    };
    emit(cfg, &a.out, &envelope(cfg, body))?;
    Ok(Status::Pass)
}

/// Parses `psi_inv`, `phi_inv`, `power:p=..`, `conjecture_F:c0=..`,
/// `weak_F:c0=..` and `bad_func` (the last three use `n`).
pub fn parse_transform(s: &str, n: usize) -> Result<Transform> {
    let (name, params) = s.split_once(':').unwrap_or((s, ""));
    let param = |key: &str, default: Option<f64>| -> Result<f64> {
        for kv in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{s}`")))?;
            if k.trim() == key {
                return v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{v}`")));
            }
        }
        default.ok_or_else(|| Error::Parse(format!("`{name}` needs `{key}=`")))
    };
    match name.trim() {
        "psi_inv" => Ok(Transform::psi_inv()),
        "phi_inv" => Ok(Transform::phi_inv()),
        "power" => Ok(Transform::power(param("p", None)?)),
        "log" => Ok(Transform::power(0.0)),
        "conjecture_F" => Transform::conjecture(n, param("c0", Some(0.5))?),
        "weak_F" => Transform::weak(n, param("c0", Some(0.5))?),
        "bad_func" => Transform::bad_func(n),
        other => Err(Error::Parse(format!("unknown transform `{other}`"))),
    }
}

/// Parses sums of monomials such as `x1^2 + 2*x2^2 - 0.5*x1*x2`; the name
/// `half-norm` stands for `|x|^2 / 2`.
pub fn parse_poly(s: &str, n: usize) -> Result<MultiPoly> {
    let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if text == "half-norm" {
        return Ok(MultiPoly::half_norm_sq(n));
    }
    if text.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    // Split into signed terms; a sign right after an exponent marker belongs
    // to the number.
    let bytes = text.as_bytes();
    let mut terms = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        let c = bytes[i];
        let after_exp = (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')
            && i >= 2
            && bytes[i - 2].is_ascii_digit();
        if (c == b'+' || c == b'-') && !after_exp {
            terms.push(&text[start..i]);
            start = i;
        }
    }
    terms.push(&text[start..]);
    let mut p = MultiPoly::zero(n);
    for term in terms {
        let (sign, body) = match term.as_bytes().first() {
            Some(b'-') => (-1.0, &term[1..]),
            Some(b'+') => (1.0, &term[1..]),
            _ => (1.0, term),
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("dangling sign in `{s}`")));
        }
        let mut coef = sign;
        let mut exps = vec![0u32; n];
        for factor in body.split('*') {
            if let Some(var) = factor.strip_prefix('x') {
                let (idx, pow) = match var.split_once('^') {
                    Some((i, e)) => (
                        i,
                        e.parse::<u32>()
                            .map_err(|_| Error::Parse(format!("bad exponent in `{factor}`")))?,
                    ),
                    None => (var, 1),
                };
                let i: usize = idx
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad variable `{factor}`")))?;
                if i == 0 || i > n {
                    return Err(Error::Parse(format!("variable x{i} outside 1..{n}")));
                }
                exps[i - 1] += pow;
            } else {
                coef *= factor
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad factor `{factor}`")))?;
            }
        }
        p = p.add(&MultiPoly::monomial(n, &exps, coef));
    }
    Ok(p)
}

type Profile = Box<dyn Fn(f64) -> f64 + Sync>;

fn talenti_profile(name: &str) -> Result<(Profile, String)> {
    let f: Profile = match name {
        "one" => Box::new(|_| 1.0),
        "bump" => Box::new(|x: f64| (-(x - 0.3) * (x - 0.3)).exp()),
        "logistic" => Box::new(|x: f64| 0.5 + 1.0 / (1.0 + (x + 2.0).exp())),
        other => {
            return Err(Error::Parse(format!(
                "unknown profile `{other}` (one, bump, logistic)"
            )))
        }
    };
    Ok((f, name.to_string()))
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::ConcaveWithinTol => "pass",
        Verdict::Violation => "violation",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// `lhs <= rhs` up to `budget`.
fn le_report(check: &str, lhs: f64, rhs: f64, budget: f64, details: Value) -> (Value, Status) {
    let margin = rhs - lhs;
    let ok = margin >= -budget;
    let v = json!({
        "check": check, "lhs": lhs, "rhs": rhs, "margin": margin, "budget": budget,
        "verdict": if ok { "pass" } else { "violation" }, "details": details,
    });
    (v, if ok { Status::Pass } else { Status::Violation })
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report serializes")
}

fn dilate_power(k: &SupportBody, grid: &[f64], rule: &SphereRule) -> Result<verify::PowerReport> {
    verify::max_power(k, &k.scale(1.1)?, grid, rule)
}

fn cmd_verify(cfg: &RunConfig, a: &VerifyArgs) -> Result<Status> {
    let rule = cfg.rule();
    let n = cfg.n;
    let grid = verify::t_grid(a.grid);
    let (report, status) = match a.check.as_str() {
        "ehrhard" | "concavity" => {
            let tr = if a.check == "ehrhard" {
                Transform::psi_inv()
            } else {
                parse_transform(&a.transform, n)?
            };
            let ks = bodies(cfg, 2)?;
            let r = verify::concavity_check(&tr, &ks[0], &ks[1], &grid, &rule)?;
            let v = json!({
                "check": a.check, "lhs": r.max_second_difference, "rhs": r.budget,
                "margin": r.budget - r.max_second_difference, "verdict": verdict_str(r.verdict),
                "details": to_value(&r),
            });
            (
                v,
                if r.verdict == Verdict::Violation {
                    Status::Violation
                } else {
                    Status::Pass
                },
            )
        }
        "max-power" => {
            let ks = bodies(cfg, 2)?;
            let r = verify::max_power(&ks[0], &ks[1], &grid, &rule)?;
            let target = 1.0 / n as f64;
            let symmetric = ks[0].is_symmetric() && ks[1].is_symmetric();
            let margin = r.power - target;
            let verdict = if margin >= -r.bracket {
                "pass"
            } else if symmetric {
                "violation"
            } else {
                "inconclusive"
            };
            let v = json!({
                "check": a.check, "lhs": r.power, "rhs": target, "margin": margin,
                "verdict": verdict, "details": to_value(&r),
            });
            (
                v,
                if verdict == "violation" {
                    Status::Violation
                } else {
                    Status::Pass
                },
            )
        }
        "gauss-main" => {
            let k = bodies(cfg, 1)?.remove(0);
            let r = verify::gauss_main_bound(&k, &rule)?;
            let p = dilate_power(&k, &grid, &rule)?;
            le_report(
                &a.check,
                r.bound,
                p.power,
                r.err + p.bracket,
                json!({"bound": to_value(&r), "path_power": to_value(&p)}),
            )
        }
        "cor-t1" => {
            let k = bodies(cfg, 1)?.remove(0);
            let r = verify::cor_t1_bound(&k, &rule)?;
            let p = dilate_power(&k, &grid, &rule)?;
            le_report(
                &a.check,
                r.value,
                p.power,
                r.err + p.bracket,
                json!({"bound": to_value(&r), "path_power": to_value(&p)}),
            )
        }
        "minkowski-first" => {
            let ks = bodies(cfg, 2)?;
            let r = verify::minkowski_first_check(&ks[0], &ks[1], &rule)?;
            le_report(
                &a.check,
                r.rhs_sharp,
                r.gamma_one.value,
                r.budget,
                to_value(&r),
            )
        }
        "brascamp-lieb" => {
            let k = bodies(cfg, 1)?.remove(0);
            let f = parse_poly(a.poly.as_deref().unwrap_or("x1"), k.dim())?;
            let mode = match a.mode.as_str() {
                "gaussian" => BlMode::Gaussian,
                "even-half" => BlMode::GaussianEvenHalf,
                other => return Err(Error::Parse(format!("unknown mode `{other}`"))),
            };
            let r = verify::brascamp_lieb_check(&k, &f, mode, &rule)?;
            let c = if mode == BlMode::Gaussian { 1.0 } else { 0.5 };
            le_report(
                &a.check,
                r.variance.value,
                c * r.grad_sq.value,
                r.budget,
                to_value(&r),
            )
        }
        "propgauss" => {
            let k = bodies(cfg, 1)?.remove(0);
            let u = parse_poly(a.poly.as_deref().unwrap_or("half-norm"), k.dim())?;
            let r = verify::propgauss_check(&k, &u, &rule)?;
            le_report(&a.check, r.rhs, r.lhs.value, r.budget, to_value(&r))
        }
        "moments" => {
            let k = bodies(cfg, 1)?.remove(0);
            let mut theta = vec![0.0; k.dim()];
            theta[0] = 1.0;
            let r = verify::moment_inequality_suite(&k, &theta, &rule)?;
            let margins = [
                r.cfm_margin,
                Some(r.second_moment_margin),
                Some(r.directional_margin),
                r.alpha_margin,
                r.beta_margin,
                (!k.is_symmetric()).then_some(r.eta_margin),
            ];
            let worst = margins
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min);
            le_report(&a.check, -worst, 0.0, r.budget.max(1e-8), to_value(&r))
        }
        "halfspace-alpha" => {
            let m =
                a.a.ok_or_else(|| Error::InvalidParameter("halfspace-alpha needs --a".into()))?;
            let r = verify::halfspace_alpha(m)?;
            let margin = r.alpha - r.quoted;
            let ok = margin.abs() <= 1e-8;
            let v = json!({
                "check": a.check, "lhs": r.alpha, "rhs": r.quoted, "margin": margin,
                "verdict": if ok { "pass" } else { "violation" }, "details": to_value(&r),
            });
            (v, if ok { Status::Pass } else { Status::Violation })
        }
        "s-inequality" => {
            let k = bodies(cfg, 1)?.remove(0);
            let r = verify::s_inequality_check(&k, &rule)?;
            let (i, worst) = r
                .margins
                .iter()
                .zip(&r.budgets)
                .map(|(m, b)| m + b)
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
                );
            le_report(
                &a.check,
                0.0,
                r.margins[i],
                r.budgets[i],
                json!({"worst_scale": r.scales[i], "slack_with_budget": worst, "report": to_value(&r)}),
            )
        }
        "saint-venant" => {
            let k = bodies(cfg, 1)?.remove(0);
            let r = verify::saint_venant_check(&k, &rule)?;
            le_report(
                &a.check,
                r.torsion.value,
                r.halfspace.value,
                r.budget,
                to_value(&r),
            )
        }
        "log-concavity" => {
            let ks = bodies(cfg, 2)?;
            let m = verify::log_concavity_margin(&ks[0], &ks[1], &rule)?;
            le_report(&a.check, 0.0, m.value, m.err, to_value(&m))
        }
        "talenti" => {
            let iv = a
                .interval
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("talenti needs --interval w1,w2".into()))?;
            let (w1, w2) = iv
                .split_once(',')
                .ok_or_else(|| Error::Parse("interval must be `w1,w2`".into()))?;
            let num = |v: &str| -> Result<f64> {
                match v.trim() {
                    "inf" => Ok(f64::INFINITY),
                    t => t
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad number `{t}`"))),
                }
            };
            let (f, label) = talenti_profile(&a.profile)?;
            let r = talenti_1d(num(w1)?, num(w2)?, &*f, &label)?;
            le_report(&a.check, r.max_excess, 0.0, 1e-8, to_value(&r))
        }
        "counterexample" => {
            let tr = parse_transform(&a.transform, n)?;
            let family: Family = a.family.parse()?;
            let r = verify::counterexample_search(
                &tr,
                family,
                &verify::size_grid(a.sizes),
                &grid,
                &rule,
            )?;
            let v = json!({
                "check": a.check, "lhs": r.first_witness.as_ref().map(|w| w.magnitude), "rhs": verify::VIOLATION_FACTOR,
                "margin": r.first_witness.as_ref().map(|w| w.magnitude - verify::VIOLATION_FACTOR),
                "verdict": if r.witnesses > 0 { "witness_found" } else { "none_found" },
                "details": to_value(&r),
            });
            (v, Status::Pass)
        }
        other => return Err(Error::Parse(format!("unknown check `{other}`"))),
    };
    emit(cfg, &a.out, &envelope(cfg, report))?;
    Ok(status)
}

/// One labelled curve of a figure.
pub struct Series {
    pub label: String,
    pub ys: Vec<f64>,
}

/// Abscissas and curves of a named figure over `a in [0.01, 0.99]`.
pub fn figure_data(figure: &str, n: usize, m: usize) -> Result<(Vec<f64>, Vec<Series>)> {
    if m < 2 {
        return Err(Error::InvalidParameter(
            "a plot needs at least 2 points".into(),
        ));
    }
    let xs: Vec<f64> = (0..m)
        .map(|i| 0.01 + 0.98 * i as f64 / (m - 1) as f64)
        .collect();
    let curve = |label: String, f: &dyn Fn(f64) -> Result<f64>| -> Result<Series> {
        Ok(Series {
            label,
            ys: xs.iter().map(|&a| f(a)).collect::<Result<_>>()?,
        })
    };
    let mut out = Vec::new();
    match figure {
        "phi12" | "s12" | "phi-s" => {
            if figure != "s12" {
                for k in 1..=n {
                    out.push(curve(format!("phi_{k}"), &|a| phi_k(k, a))?);
                }
            }
            if figure != "phi12" {
                for k in 1..=n {
                    out.push(curve(format!("s_{k}"), &|a| perimeter_s(k, a))?);
                }
            }
        }
        "phi-diff" => {
            if n < 2 {
                return Err(Error::InvalidParameter("phi-diff needs n >= 2".into()));
            }
            out.push(curve("phi_1 - phi_2".into(), &|a| {
                Ok(phi_k(1, a)? - phi_k(2, a)?)
            })?);
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown figure `{other}` (phi12, s12, phi-s, phi-diff)"
            )))
        }
    }
    Ok((xs, out))
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Self-contained SVG 1.1 line chart. Each curve is a `polyline` with class
/// `curve` and its label in a `title` child.
pub fn svg_chart(title: &str, xs: &[f64], series: &[Series]) -> String {
    let (w, h) = (720.0, 440.0);
    let (l, r, t, b) = (70.0, 150.0, 40.0, 50.0);
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let finite = series
        .iter()
        .flat_map(|s| s.ys.iter())
        .copied()
        .filter(|y| y.is_finite());
    let (mut y0, mut y1) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
        (lo.min(y), hi.max(y))
    });
    if !(y0 < y1) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| t + (y1 - y) / (y1 - y0) * (h - t - b);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        (l + w - r) / 2.0,
        xml_escape(title)
    );
    let (bx, by) = (h - b, l);
    let _ = writeln!(
        s,
        r#"<line x1="{l}" y1="{bx}" x2="{}" y2="{bx}" stroke="black"/>"#,
        w - r
    );
    let _ = writeln!(
        s,
        r#"<line x1="{by}" y1="{t}" x2="{by}" y2="{bx}" stroke="black"/>"#
    );
    for i in 0..=5 {
        let xv = x0 + (x1 - x0) * i as f64 / 5.0;
        let yv = y0 + (y1 - y0) * i as f64 / 5.0;
        let (xp, yp) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{bx}" x2="{xp:.2}" y2="{}" stroke="black"/>"#,
            bx + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{xv:.2}</text>"#,
            bx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{yp:.2}" x2="{by}" y2="{yp:.2}" stroke="black"/>"#,
            by - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            by - 8.0,
            yp + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">a</text>"#,
        (l + w - r) / 2.0,
        h - 10.0
    );
    if y0 < 0.0 && y1 > 0.0 {
        let z = py(0.0);
        let _ = writeln!(
            s,
            r#"<line x1="{l}" y1="{z:.3}" x2="{}" y2="{z:.3}" stroke="gray" stroke-dasharray="4 3"/>"#,
            w - r
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(&ser.ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| format!("{:.3},{:.3}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            xml_escape(&ser.label)
        );
        let ly = t + 20.0 * i as f64 + 10.0;
        let lx = w - r + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            xml_escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn cmd_plot(cfg: &RunConfig, a: &PlotArgs) -> Result<Status> {
    let (xs, series) = figure_data(&a.figure, cfg.n, a.grid)?;
    let title = match a.figure.as_str() {
        "phi12" => format!("phi_k, n = {}", cfg.n),
        "s12" => format!("s_k, n = {}", cfg.n),
        "phi-s" => format!("phi_k and s_k, n = {}", cfg.n),
        _ => "phi_1 - phi_2".to_string(),
    };
    emit(cfg, &a.out, &svg_chart(&title, &xs, &series))?;
    Ok(Status::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let c = RunConfig {
            n: 3,
            tol: 1e-9 / 3.0,
            max_panels: 123,
            mc_directions: 77,
            mc_samples: 5,
            seed: u64::MAX,
            fail_tol: 0.1 + 0.2,
            out_dir: PathBuf::from("out/dir"),
            bodies: vec![
                "interp:lambda=0.5;ball:R=1|strip:w=2".into(),
                "box:a=1/2/3".into(),
            ],
        };
        assert_eq!(RunConfig::from_kv(&c.to_kv()).unwrap(), c);
        assert_eq!(
            RunConfig::from_kv(&RunConfig::default().to_kv()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn config_comments_and_errors() {
        let c = RunConfig::from_kv("# header\n n = 4  # trailing\n\nseed=7\n").unwrap();
        assert_eq!((c.n, c.seed), (4, 7));
        assert!(RunConfig::from_kv("colour = red").is_err());
        assert!(RunConfig::from_kv("n 3").is_err());
        assert!(RunConfig::from_kv("n = 0").is_err());
    }

    #[test]
    fn polynomial_grammar() {
        let p = parse_poly("x1^2 + 2*x2^2 - 0.5*x1*x2 + 1e-1", 2).unwrap();
        let x = [0.7, -1.3];
        let want = 0.49 + 2.0 * 1.69 + 0.5 * 0.7 * 1.3 + 0.1;
        assert!((p.eval(&x) - want).abs() < 1e-14);
        assert!(parse_poly("x3", 2).is_err());
        assert!(parse_poly("x1 +", 2).is_err());
        let h = parse_poly("half-norm", 3).unwrap();
        assert!((h.eval(&[1.0, 2.0, 2.0]) - 4.5).abs() < 1e-15);
    }

    #[test]
    fn transform_names() {
        assert_eq!(parse_transform("psi_inv", 2).unwrap().id(), "psi_inv");
        assert_eq!(
            parse_transform("power:p=0.5", 2).unwrap().id(),
            "power(0.5)"
        );
        assert!(parse_transform("power", 2).is_err());
        assert!(parse_transform("nope", 2).is_err());
    }

    #[test]
    fn table_shape() {
        let t = cylinder_table(2, 9).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a,k,R,s,phi,ps");
        assert_eq!(lines.len(), 19);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(
            exit_code(&Error::NumericalFailure {
                what: "q".into(),
                achieved: 1.0
            }),
            3
        );
    }
}

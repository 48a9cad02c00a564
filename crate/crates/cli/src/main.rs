use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use algcover::continuation::{TrackOpts, AGREEMENT_TOL};
use algcover::funcfield::{self, CombineOp, ReconstructOpts};
use algcover::galois;
use algcover::job::JobSpec;
use algcover::monodromy::{self, Monodromy, MonodromyOpts};
use algcover::permgroup::DEFAULT_GROUP_ORDER_CAP;
use algcover::verify::{self, BatteryOpts};
use algcover::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

mod cache;
mod report;

const EXIT_PARSE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_FLOAT_ONLY: u8 = 4;
const EXIT_CHECK: u8 = 5;

/// Monodromy, Galois closures and subgroup lattices of plane algebraic curves.
#[derive(Parser)]
#[command(name = "algcover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Branch locus, loop basis and monodromy.
    Analyze { spec: PathBuf },
    /// Galois closure and the full subgroup/cover correspondence.
    Lattice { spec: PathBuf },
    /// Minimal polynomial of a sum or product of two algebraic functions.
    Combine {
        spec1: PathBuf,
        spec2: PathBuf,
        #[arg(long, value_parser = ["add", "mul"])]
        op: String,
        /// Starting sheets `i,j` (1-based) at the shared base point.
        #[arg(long)]
        start: Option<String>,
    },
    /// Runs the full check battery.
    Verify { spec: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Flags {
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Residual tolerance for path tracking.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_group_order: Option<usize>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Suppress progress and timing on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

/// Effective settings after applying flags over the spec file.
pub struct Settings {
    pub track: TrackOpts,
    pub base: Option<Complex64>,
    pub cap: usize,
    pub seed: u64,
}

impl Settings {
    fn new(job: &JobSpec, flags: &Flags) -> Result<Settings, Failure> {
        let mut track = TrackOpts::default();
        if let Some(t) = flags.tol.or(job.tol) {
            track.tol_res = t;
        }
        track.validate().map_err(Failure::Core)?;
        let cap = flags.max_group_order.or(job.cap).unwrap_or(DEFAULT_GROUP_ORDER_CAP);
        if cap == 0 {
            return Err(Failure::Usage("--max-group-order must be positive".into()));
        }
        Ok(Settings {
            track,
            base: job.base,
            cap,
            seed: flags.seed.or(job.seed).unwrap_or(0),
        })
    }

    fn job_echo(&self, spec: &Path, job: &JobSpec) -> Value {
        json!({
            "spec": spec.display().to_string(),
            "poly": job.poly.to_string(),
            "input": job.poly_text,
            "base": self.base.map_or(json!("auto"), report::complex),
            "tol": report::num(self.track.tol_res),
            "tolerances": {
                "residual": report::num(self.track.tol_res),
                "sep_fraction": report::num(self.track.sep_fraction),
                "h_init": report::num(self.track.h_init),
                "h_min": report::num(self.track.h_min),
                "max_steps": self.track.max_steps,
                "agreement": report::num(AGREEMENT_TOL),
                "validation": report::num(ReconstructOpts::default().validation_tol),
                "denominator_cap": ReconstructOpts::default().den_cap,
            },
            "seed": self.seed,
            "max_group_order": self.cap,
        })
    }

    fn reconstruct(&self) -> ReconstructOpts {
        ReconstructOpts {
            seed: self.seed,
            ..ReconstructOpts::default()
        }
    }
}

enum Failure {
    NotFound(PathBuf),
    Io(PathBuf, std::io::Error),
    Usage(String),
    Core(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::NotFound(_) | Failure::Io(..) | Failure::Usage(_) => EXIT_PARSE,
            Failure::Core(Error::Parse { .. } | Error::Malformed(_)) => EXIT_PARSE,
            Failure::Core(Error::GroupTooLarge { .. }) => EXIT_CAP,
            Failure::Core(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::NotFound(p) => write!(f, "file not found: {}", p.display()),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// A finished command: the document, its text rendering and the exit code.
struct Outcome {
    doc: Value,
    text: String,
    code: u8,
}

struct Ctx<'a> {
    flags: &'a Flags,
    started: Instant,
}

impl Ctx<'_> {
    fn note(&self, msg: &str) {
        if !self.flags.quiet {
            eprintln!("[{:>8.3}s] {msg}", self.started.elapsed().as_secs_f64());
        }
    }
}

fn read_spec(path: &Path) -> Result<JobSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Failure::NotFound(path.to_path_buf()),
        _ => Failure::Io(path.to_path_buf(), e),
    })?;
    JobSpec::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Tracks the loop basis, or rebuilds the result from the cache.
fn acquire(ctx: &Ctx, job: &JobSpec, s: &Settings) -> Result<(Monodromy, Value), Failure> {
    let key = cache::key(&job.poly, s);
    let canonical = job.poly.to_string();
    if let Some(dir) = &ctx.flags.cache_dir {
        if let Some(block) = cache::load(dir, &key) {
            let rebuilt = report::parse_block(&block).and_then(|st| {
                if st.poly != canonical {
                    return Err(Error::Malformed("cache entry is for another polynomial".into()));
                }
                monodromy::monodromy_from_parts(&job.poly, st.locus, st.base_point, st.sigmas, s.cap)
            });
            match rebuilt {
                Ok(m) if report::monodromy_block(&m) == block => {
                    ctx.note(&format!("monodromy loaded from cache {key}"));
                    return Ok((m, block));
                }
                _ => ctx.note("stale cache entry; recomputing"),
            }
        }
    }
    let opts = MonodromyOpts {
        track: s.track,
        base_point: s.base,
        group_order_cap: s.cap,
    };
    let m = monodromy::monodromy_rep(&job.poly, &opts)?;
    ctx.note(&format!("monodromy: {} loops tracked", m.sigmas.len()));
    let block = report::monodromy_block(&m);
    if let Some(dir) = &ctx.flags.cache_dir {
        if let Err(e) = cache::store(dir, &key, &block) {
            ctx.note(&format!("cache write failed: {e}"));
        }
    }
    Ok((m, block))
}

fn analyze(ctx: &Ctx, spec: &Path) -> Result<Outcome, Failure> {
    let job = read_spec(spec)?;
    let s = Settings::new(&job, ctx.flags)?;
    let (_, block) = acquire(ctx, &job, &s)?;
    let mut text = String::new();
    report::monodromy_text(&block, &mut text);
    let doc = report::document("analyze", s.job_echo(spec, &job), vec![("monodromy", block)], true);
    Ok(Outcome { doc, text, code: 0 })
}

fn lattice(ctx: &Ctx, spec: &Path) -> Result<Outcome, Failure> {
    let job = read_spec(spec)?;
    let s = Settings::new(&job, ctx.flags)?;
    let (m, block) = acquire(ctx, &job, &s)?;
    m.group(s.cap)?;
    if !m.is_transitive() {
        return Err(Error::NotTransitive {
            orbit_sizes: m.orbits.iter().map(Vec::len).collect(),
        }
        .into());
    }
    let closure = galois::galois_closure(&m, s.cap)?;
    ctx.note(&format!("closure of order {}", closure.order()));
    let r = galois::correspondence_report(&closure)?;
    let mut text = String::new();
    report::monodromy_text(&block, &mut text);
    text.push_str(&format!("closure order: {}\n", closure.order()));
    report::correspondence_text(&r, &mut text);
    let doc = report::document(
        "lattice",
        s.job_echo(spec, &job),
        vec![
            ("monodromy", block),
            ("closure", report::closure_block(&closure)),
            ("correspondence", report::correspondence_block(&r)),
        ],
        r.pass,
    );
    Ok(Outcome {
        doc,
        text,
        code: if r.pass { 0 } else { EXIT_CHECK },
    })
}

fn verify_cmd(ctx: &Ctx, spec: &Path) -> Result<Outcome, Failure> {
    let job = read_spec(spec)?;
    let s = Settings::new(&job, ctx.flags)?;
    let (m, block) = acquire(ctx, &job, &s)?;
    let opts = BatteryOpts {
        track: s.track,
        reconstruct: s.reconstruct(),
        perturbations: 20,
        seed: s.seed,
        cap: s.cap,
    };
    let checks = verify::run_all(&m, &opts);
    let pass = checks.iter().all(|c| c.pass);
    if let Some(first) = checks.iter().find(|c| !c.pass) {
        eprintln!(
            "error: check {} failed: {}",
            first.name,
            first.detail.as_deref().unwrap_or("no witness")
        );
    }
    let mut text = String::new();
    report::checks_text(&checks, &mut text);
    let doc = report::document(
        "verify",
        s.job_echo(spec, &job),
        vec![("monodromy", block), ("checks", report::checks_block(&checks))],
        pass,
    );
    Ok(Outcome {
        doc,
        text,
        code: if pass { 0 } else { EXIT_CHECK },
    })
}

fn parse_start(s: Option<&str>) -> Result<(usize, usize), Failure> {
    let Some(s) = s else { return Ok((0, 0)) };
    let bad = || Failure::Usage(format!("--start expects `i,j` with 1-based sheets, got {s:?}"));
    let (i, j) = s.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

fn combine_cmd(ctx: &Ctx, spec1: &Path, spec2: &Path, op: &str, start: Option<&str>) -> Result<Outcome, Failure> {
    let job1 = read_spec(spec1)?;
    let job2 = read_spec(spec2)?;
    let op: CombineOp = op.parse()?;
    let start = parse_start(start)?;
    let s = Settings::new(&job1, ctx.flags)?;
    let c = funcfield::combine(&job1.poly, &job2.poly, op, start, &s.track, &s.reconstruct())?;
    ctx.note("combined branches reconstructed");
    let r = &c.reconstruction;
    let exact = r.exact.as_ref().map(|p| p.to_string_in("t"));
    let floats: Vec<Value> = r
        .float_coeffs
        .iter()
        .map(|f| {
            json!({
                "numer": f.numer.iter().map(|&z| report::complex(z)).collect::<Vec<_>>(),
                "denom": f.denom.iter().map(|&z| report::complex(z)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let orbit: Vec<[usize; 2]> = c.orbit.iter().map(|&(i, j)| [i + 1, j + 1]).collect();
    let orbit_perms: Vec<String> = c.orbit_perms.iter().map(ToString::to_string).collect();
    let result = json!({
        "exact": exact.is_some(),
        "poly": exact,
        "degree": r.degree,
        "held_out_residual": report::num(r.held_out_residual),
        "failure": r.failure,
        "float_coefficients": if exact.is_some() { Value::Null } else { Value::Array(floats) },
        "base_point": report::complex(c.base_point),
        "branch_points": c.locus.iter().map(|&z| report::complex(z)).collect::<Vec<_>>(),
        "orbit": orbit,
        "orbit_monodromy": orbit_perms,
    });
    let mut text = String::new();
    match &exact {
        Some(p) => text.push_str(&format!("minimal polynomial: {p}\n")),
        None => text.push_str(&format!(
            "FLOAT ONLY, not certified: {}\n",
            r.failure.as_deref().unwrap_or("rationalization failed")
        )),
    }
    text.push_str(&format!("degree: {}\n", r.degree));
    text.push_str(&format!("held-out residual: {:e}\n", r.held_out_residual));
    let pairs: Vec<String> = orbit.iter().map(|[i, j]| format!("({i},{j})")).collect();
    text.push_str(&format!("orbit: {}\n", pairs.join(" ")));
    for (k, p) in orbit_perms.iter().enumerate() {
        text.push_str(&format!("  loop {}: {p}\n", k + 1));
    }
    let echo = json!({
        "specs": [s.job_echo(spec1, &job1), Settings::new(&job2, ctx.flags)?.job_echo(spec2, &job2)],
        "op": op,
        "start": [start.0 + 1, start.1 + 1],
    });
    let pass = r.is_exact();
    let doc = report::document("combine", echo, vec![("result", result)], pass);
    Ok(Outcome {
        doc,
        text,
        code: if pass { 0 } else { EXIT_FLOAT_ONLY },
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        flags: &cli.flags,
        started: Instant::now(),
    };
    let outcome = match &cli.command {
        Command::Analyze { spec } => analyze(&ctx, spec),
        Command::Lattice { spec } => lattice(&ctx, spec),
        Command::Verify { spec } => verify_cmd(&ctx, spec),
        Command::Combine {
            spec1,
            spec2,
            op,
            start,
        } => combine_cmd(&ctx, spec1, spec2, op, start.as_deref()),
    };
    match outcome {
        Ok(o) => {
            match cli.flags.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&o.doc).expect("document is serializable")),
                Format::Text => print!("{}", o.text),
            }
            ctx.note("done");
            ExitCode::from(o.code)
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

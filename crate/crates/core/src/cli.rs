//! The `trl` command line.
//!
//! Exit codes: 0 success, 1 usage / I/O / parse errors, 2 verification
//! failure, 3 budget exceeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::graphgen::{
    format_edge_list, read_edge_list, report_json, verify_edge_disjoint, verify_triples, write_edge_list,
    write_file, write_report, VerifyLevel,
};
use crate::lattice::Budget;
use crate::pipeline::{sweep, sweep_csv, Kind, PipelineConfig, PipelineOutput, RunOptions, SweepRow};
use crate::probability::{
    box_sum_probability, c_new, c_old, dot_pdf, eta_to_delta, exact_sphere_closure, lower_bound_integral,
    mc_ball_closure, mc_sphere_closure, optimize_dim, theory_curves, Curve,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "trl", version, about = "Build and verify graphs in which every edge lies in exactly one triangle")]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a construction and write its graph and report.
    Build(BuildArgs),
    /// Re-verify an edge-list file.
    Verify(VerifyArgs),
    /// Evaluate closure probabilities, densities and integrals.
    Prob(ProbArgs),
    /// Tabulate the theory curves and their optimal dimensions.
    Curves(CurvesArgs),
    /// Run a construction over a grid of parameters.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Edgelist,
}

/// Accepts plain integers and integral scientific notation such as `1e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("'{s}' is not a nonnegative integer")),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad {what} '{p}'")))
        .collect()
}

#[derive(Debug, Args)]
pub struct RunFlags {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo samples.
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub samples: u64,
    #[arg(long, default_value_t = 64)]
    pub shift_trials: usize,
    #[arg(long, value_enum, default_value_t = VerifyLevel::Full)]
    pub verify: VerifyLevel,
    /// Cap on |X| * |Y| pair scans.
    #[arg(long, value_parser = parse_count)]
    pub budget_pairs: Option<u64>,
    /// Cap on lattice points scanned per enumerated ball.
    #[arg(long, value_parser = parse_count)]
    pub budget_points: Option<u64>,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        let mut budget = Budget::default();
        if let Some(p) = self.budget_pairs {
            budget.pairs = p as u128;
        }
        if let Some(p) = self.budget_points {
            budget.points = p as u128;
        }
        RunOptions {
            verify: self.verify,
            budget,
            mc_samples: self.samples,
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Part size bound (ball, abstract).
    #[arg(long, value_parser = parse_count)]
    pub n: Option<u64>,
    /// Box side parameter, even.
    #[arg(long)]
    pub m: Option<u64>,
    #[command(flatten)]
    pub run: RunFlags,
    /// Edge-list output; the report goes to `<out>.report.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("quantity").required(true).args(["ball", "sphere", "exact", "chain", "box_m", "pdf"])))]
pub struct ProbArgs {
    /// Monte-Carlo P(x + y in B) for x, y uniform in the unit ball.
    #[arg(long)]
    pub ball: bool,
    /// Monte-Carlo P(<u, v> <= -1/2) for u, v uniform on the sphere.
    #[arg(long)]
    pub sphere: bool,
    /// P(<u, v> <= -1/2) by quadrature.
    #[arg(long)]
    pub exact: bool,
    /// The integral of (1 - r^2)^{D/2} over [-1, -1/2] and its lower bounds.
    #[arg(long)]
    pub chain: bool,
    /// Exact P(a + b in {-m..m}) for a, b uniform in {-m..m}.
    #[arg(long = "box", value_name = "M")]
    pub box_m: Option<u64>,
    /// Density of <u, v> at the given point.
    #[arg(long, value_name = "R", allow_hyphen_values = true)]
    pub pdf: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, value_parser = parse_count)]
    pub n: u64,
    /// Epsilons for the delta bound, comma separated.
    #[arg(long, default_value = "0.01,0.001,0.0001")]
    pub epsilon: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Dimensions, comma separated (ignored by abstract).
    #[arg(long, default_value = "1")]
    pub dims: String,
    /// Box parameters M, comma separated.
    #[arg(long)]
    pub ms: Option<String>,
    /// Sizes n, comma separated.
    #[arg(long)]
    pub ns: Option<String>,
    #[command(flatten)]
    pub run: RunFlags,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// A failure with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
    detail: Option<String>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Verification(_) | Error::Inconsistent(_) => EXIT_VERIFY,
            Error::Budget { .. } => EXIT_BUDGET,
            _ => EXIT_USAGE,
        };
        let detail = match &e {
            Error::Verification(w) => Some(json!({ "verified": false, "witness": w }).to_string()),
            _ => None,
        };
        Failure {
            code,
            message: e.to_string(),
            detail,
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
        detail: None,
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    usage(format!("write failed: {e}"))
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{text}");
                EXIT_OK
            } else {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            };
        }
    };
    // buffered so the pool never touches the caller's writer
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(usage("--threads must be >= 1")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &mut buf)),
            Err(e) => Err(usage(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli.command, &mut buf),
    };
    if let Err(e) = out.write_all(&buf).and_then(|_| out.flush()) {
        let _ = writeln!(err, "error: write failed: {e}");
        return EXIT_USAGE;
    }
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            if let Some(d) = &f.detail {
                let _ = writeln!(out, "{d}");
            }
            let _ = writeln!(err, "error: {}", f.message);
            if f.code == EXIT_USAGE {
                let _ = writeln!(err, "see 'trl --help' for usage");
            }
            f.code
        }
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Build(a) => cmd_build(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Prob(a) => cmd_prob(a, out),
        Command::Curves(a) => cmd_curves(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn build_config(a: &BuildArgs) -> Result<PipelineConfig, Failure> {
    let (dim, size) = match a.kind {
        Kind::Box => (
            a.dim.ok_or_else(|| usage("build box needs --dim"))?,
            a.m.ok_or_else(|| usage("build box needs --m"))?,
        ),
        Kind::Ball => (
            a.dim.ok_or_else(|| usage("build ball needs --dim"))?,
            a.n.ok_or_else(|| usage("build ball needs --n"))?,
        ),
        Kind::Abstract => (1, a.n.ok_or_else(|| usage("build abstract needs --n"))?),
    };
    Ok(PipelineConfig {
        kind: a.kind,
        dim,
        size,
        seed: a.run.seed,
        shift_trials: a.run.shift_trials,
        options: a.run.options(),
    })
}

fn cmd_build(a: &BuildArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = build_config(a)?;
    let result: PipelineOutput = cfg.run()?;
    let triples = &result.triples.triples;
    if let Some(path) = &a.out {
        write_edge_list(&result.graph, triples, path)?;
        write_report(&result.report, &with_suffix(path, ".report.json"))?;
    }
    let text = match a.format {
        Format::Json => report_json(&result.report),
        Format::Edgelist => format_edge_list(&result.graph, triples),
        Format::Csv => sweep_csv(&[SweepRow {
            kind: cfg.kind,
            dim: result.report.params.dim,
            n: Some(result.report.params.n),
            m: result.report.params.m,
            seed: cfg.seed,
            report: Some(result.report.clone()),
            error: None,
        }]),
    };
    out.write_all(text.as_bytes()).map_err(io_failure)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let (g, triples) = read_edge_list(&a.path)
        .map_err(|e| usage(format!("{}: {e}", a.path.display())))?;
    verify_edge_disjoint(&g).map_err(Error::from)?;
    verify_triples(&g, &triples)?;
    writeln!(
        out,
        "{}",
        json!({
            "verified": true,
            "order": g.padded_order(),
            "edges": crate::graphgen::EdgeList::edges(&g).len(),
            "triangles": triples.len(),
        })
    )
    .map_err(io_failure)
}

fn cmd_prob(a: &ProbArgs, out: &mut dyn Write) -> CmdResult {
    let d = a.dim;
    let value = if a.ball {
        json!({ "quantity": "ball-closure", "dim": d, "seed": a.seed, "estimate": mc_ball_closure(d, a.samples, a.seed)? })
    } else if a.sphere {
        json!({ "quantity": "sphere-closure", "dim": d, "seed": a.seed, "estimate": mc_sphere_closure(d, a.samples, a.seed)? })
    } else if a.exact {
        json!({ "quantity": "sphere-closure", "dim": d, "estimate": exact_sphere_closure(d)? })
    } else if a.chain {
        json!({ "quantity": "lower-bound-integral", "dim": d, "chain": lower_bound_integral(d)? })
    } else if let Some(m) = a.box_m {
        let p = box_sum_probability(m);
        json!({
            "quantity": "box-sum",
            "m": m,
            "num": p.numer(),
            "den": p.denom(),
            "value": *p.numer() as f64 / *p.denom() as f64,
        })
    } else if let Some(r) = a.pdf {
        if d < 2 {
            return Err(usage("--pdf needs --dim >= 2"));
        }
        json!({ "quantity": "dot-pdf", "dim": d, "r": r, "value": dot_pdf(d, r) })
    } else {
        return Err(usage("choose one of --ball, --sphere, --exact, --chain, --box, --pdf"));
    };
    let text = match a.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&value).expect("json")),
        Format::Csv => flat_csv(&value),
        Format::Edgelist => return Err(usage("prob supports --format json or csv")),
    };
    out.write_all(text.as_bytes()).map_err(io_failure)
}

// Two-line CSV of the scalar leaves of a JSON object, keys joined with '.'.
fn flat_csv(v: &serde_json::Value) -> String {
    fn walk(prefix: &str, v: &serde_json::Value, keys: &mut Vec<String>, vals: &mut Vec<String>) {
        match v {
            serde_json::Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, keys, vals);
                }
            }
            serde_json::Value::String(s) => {
                keys.push(prefix.into());
                vals.push(s.clone());
            }
            other => {
                keys.push(prefix.into());
                vals.push(other.to_string());
            }
        }
    }
    let (mut keys, mut vals) = (Vec::new(), Vec::new());
    walk("", v, &mut keys, &mut vals);
    format!("{}\n{}\n", keys.join(","), vals.join(","))
}

fn cmd_curves(a: &CurvesArgs, out: &mut dyn Write) -> CmdResult {
    let n = a.n as f64;
    let optima = Curve::ALL
        .iter()
        .map(|&c| optimize_dim(n, c))
        .collect::<Result<Vec<_>, _>>()?;
    let grid_max = optima[0].grid_max;
    let eps: Vec<f64> = parse_list(&a.epsilon, "epsilon").map_err(usage)?;
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("D,behrend,green,new,optimum_for\n");
            for d in 1..=grid_max {
                let t = theory_curves(d, n);
                let best: Vec<&str> = optima.iter().filter(|o| o.d_best == d).map(|o| o.curve.name()).collect();
                s.push_str(&format!("{d},{},{},{},{}\n", t.behrend, t.green, t.new, best.join(";")));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = (1..=grid_max)
                .map(|d| {
                    let t = theory_curves(d, n);
                    json!({ "D": d, "behrend": t.behrend, "green": t.green, "new": t.new })
                })
                .collect();
            let mut deltas = Vec::new();
            for &e in &eps {
                for c in Curve::ALL {
                    let b = eta_to_delta(|m| c.eta(m), e);
                    deltas.push(match b {
                        Ok(b) => json!({ "curve": c, "bound": b }),
                        Err(err) => json!({ "curve": c, "epsilon": e, "error": err.to_string() }),
                    });
                }
            }
            let v = json!({
                "n": a.n,
                "note": "exponential factors only; poly(D) factors dropped",
                "rows": rows,
                "optima": optima,
                "c_new": c_new(),
                "c_old": c_old(),
                "delta": deltas,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Edgelist => return Err(usage("curves supports --format csv or json")),
    };
    emit(&text, a.out.as_deref(), out)
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    match path {
        Some(p) => Ok(write_file(p, text.as_bytes())?),
        None => out.write_all(text.as_bytes()).map_err(io_failure),
    }
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CmdResult {
    let dims: Vec<usize> = parse_list(&a.dims, "dimension").map_err(usage)?;
    let sizes_arg = match a.kind {
        Kind::Box => a.ms.as_ref().ok_or_else(|| usage("sweep --kind box needs --ms"))?,
        _ => a.ns.as_ref().ok_or_else(|| usage("sweep needs --ns"))?,
    };
    let sizes: Vec<u64> = sizes_arg
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_count(p.trim()))
        .collect::<Result<_, _>>()
        .map_err(usage)?;
    let rows = sweep(a.kind, &dims, &sizes, a.run.seed, a.run.shift_trials, &a.run.options())?;
    let text = match a.format {
        Format::Csv => sweep_csv(&rows),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&rows).expect("json")),
        Format::Edgelist => return Err(usage("sweep supports --format csv or json")),
    };
    emit(&text, a.out.as_deref(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("trl").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn counts_parse() {
        assert_eq!(parse_count("1000000"), Ok(1_000_000));
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert!(parse_count("2.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
        assert_eq!(run_str(&["build", "box", "--dim", "1", "--m", "3"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["build", "box", "--dim", "1"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["build", "box", "--dim", "2", "--m", "4", "--budget-pairs", "10"]).0, EXIT_BUDGET);
        let (code, out, _) = run_str(&["build", "box", "--dim", "1", "--m", "2"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["counts"]["a0"], 7);
    }

    #[test]
    fn prob_modes() {
        let (code, out, _) = run_str(&["prob", "--box", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"num\": 7"));
        let (code, out, _) = run_str(&["prob", "--pdf", "-0.3", "--dim", "3", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.lines().nth(1).unwrap().contains("0.5"));
        assert_eq!(run_str(&["prob", "--dim", "3"]).0, EXIT_USAGE);
    }
}

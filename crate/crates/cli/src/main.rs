use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fwv::futaki::{futaki, k_semistable_torus, TestConfiguration};
use fwv::germs::{compare_local_global, VolumeMethod};
use fwv::minimize::{minimize_w, Status, DEFAULT_MAX_ITER, DEFAULT_TOL};
use fwv::okounkov::growth_and_body;
use fwv::weights::{dh_joint_m, dh_m, from_polytope_levels, Convention, FibrationData, ReebVector, Truncation};
use fwv::wvol::{grad_w, hess_w, w_exact, w_lattice, w_lattice_toric, w_monte_carlo, DEFAULT_BUDGET};
use nalgebra::SymmetricEigen;
use serde_json::{json, Value};

mod check;
mod input;
mod output;
mod svg;

use input::{check_finite, load, Input, Loaded};
use output::{rounded, to_value, CliResult, Failure};

/// Weighted volumes, Duistermaat-Heckman measures and Futaki invariants of toric Fano fibrations.
///
/// Results are JSON on stdout with floats at 12 significant digits. Errors are
/// JSON `{"error": code, "detail": ...}` on stderr with exit codes 2
/// (validation), 3 (divergence at the Reeb-cone boundary), 4 (non-convergence)
/// and 5 (failed invariant check). FWV_THREADS caps internal parallelism.
#[derive(Parser, Debug)]
#[command(name = "fwv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weighted volume W(ξ) by exact integration, lattice sums or Monte Carlo.
    Wvol(WvolArgs),
    /// Gradient of W at ξ.
    Grad(PointArgs),
    /// Hessian of W at ξ with its spectrum.
    Hess(PointArgs),
    /// Damped Newton minimization of W over the Reeb cone.
    Minimize(MinimizeArgs),
    /// Futaki invariant Fut_ξ(η) of a product or special test configuration.
    Futaki(FutakiArgs),
    /// Torus-direction semistability verdict at ξ.
    Stability(StabilityArgs),
    /// Discrete Duistermaat-Heckman measure DH_m (or the joint measure with --eta).
    Dhm(DhmArgs),
    /// Normalized volume A(ξ)ⁿ·vol(ξ) of a toric germ valuation.
    Nvol(GermArgs),
    /// Weighted volume e^{A(ξ)}·vol(ξ) of a toric germ valuation.
    Wgerm(GermArgs),
    /// Compare the minimal weighted volumes of a germ and a fibration.
    Compare(CompareArgs),
    /// Semigroup growth sequence and Okounkov body.
    Okounkov(OkounkovArgs),
    /// Run the invariant battery on an input.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Exact,
    Lattice,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    WeightCentered,
    ValuationShifted,
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s:?} is not a finite number"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{s:?} must be positive"))
    }
}

#[derive(Args, Debug)]
struct InputArg {
    /// Input JSON: fibration, weight table, germ or semigroup (see /schemas).
    #[arg(long, short)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    input: InputArg,
    /// Reeb vector, comma separated; defaults to the input's "xi" or the Reeb-cone center.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_parser = finite)]
    xi: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct WvolArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_enum, default_value = "exact")]
    method: MethodArg,
    /// Level for the lattice method.
    #[arg(long, default_value_t = 200)]
    m: u32,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncation budget T along ξ for unbounded polyhedra.
    #[arg(long, value_parser = positive)]
    truncation: Option<f64>,
}

#[derive(Args, Debug)]
struct MinimizeArgs {
    #[command(flatten)]
    input: InputArg,
    /// Starting Reeb vector, comma separated; defaults to the Reeb-cone center.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_parser = finite)]
    start: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_TOL, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Omit the iteration trace from the report.
    #[arg(long)]
    no_trace: bool,
}

#[derive(Args, Debug)]
struct FutakiArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_parser = finite, required = true)]
    eta: Vec<f64>,
    /// Central fiber of a special test configuration (fibration JSON); product configuration when absent.
    #[arg(long)]
    central_fiber: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = 1e-8, value_parser = finite)]
    tol: f64,
}

#[derive(Args, Debug)]
struct DhmArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    m: u32,
    /// Second direction for the joint measure DH_m(ξ, η).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_parser = finite)]
    eta: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "weight-centered")]
    convention: ConventionArg,
    /// Shift A for the valuation-shifted convention.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true, value_parser = finite)]
    shift: f64,
    /// Truncation budget T along ξ; required for unbounded polyhedra.
    #[arg(long, value_parser = positive)]
    truncation: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write an SVG histogram of the (one-dimensional) measure.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GermArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Volume by lattice counting at level --m instead of the exact polytope formula.
    #[arg(long)]
    lattice: bool,
    #[arg(long, default_value_t = 200)]
    m: u32,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArg,
    /// Germ JSON at a torus-fixed point.
    #[arg(long)]
    germ: PathBuf,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
}

#[derive(Args, Debug)]
struct OkounkovArgs {
    #[command(flatten)]
    input: InputArg,
    /// Largest level of the growth sequence.
    #[arg(long, default_value_t = 100)]
    m: u32,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Emit {
    Json(Value),
    Text(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        return fail(f);
    }
    match run(cli.command) {
        Ok(Emit::Json(v)) => write_stdout(&format!("{}\n", pretty(v))),
        Ok(Emit::Text(s)) => write_stdout(&s),
        Err(f) => fail(f),
    }
}

fn pretty(v: Value) -> String {
    serde_json::to_string_pretty(&rounded(v)).expect("JSON values serialize")
}

/// A closed pipe on stdout is a normal end for a filter such as `head`.
fn write_stdout(s: &str) -> ExitCode {
    let mut out = std::io::stdout().lock();
    match out.write_all(s.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => fail(Failure::io(format!("stdout: {e}"))),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&rounded(f.payload())).expect("JSON values serialize"));
    ExitCode::from(f.exit as u8)
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FWV_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| Failure::validation(format!("FWV_THREADS={raw:?} is not a positive integer")))?;
    if n == 0 {
        return Err(Failure::validation("FWV_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::validation(format!("thread pool: {e}")))
}

fn reeb_at(f: &FibrationData, given: &Option<Vec<f64>>, loaded: &Loaded) -> CliResult<ReebVector> {
    match given.as_ref().or(loaded.xi.as_ref()) {
        Some(x) => {
            if x.len() != f.rank() {
                return Err(Failure::validation(format!("ξ has length {}, expected {}", x.len(), f.rank())));
            }
            Ok(f.reeb(x.clone())?)
        }
        None => Ok(f.default_reeb()),
    }
}

fn interior_reeb(f: &FibrationData, given: &Option<Vec<f64>>, loaded: &Loaded) -> CliResult<ReebVector> {
    let xi = reeb_at(f, given, loaded)?;
    xi.require_interior()?;
    Ok(xi)
}

fn run(cmd: Command) -> CliResult<Emit> {
    match cmd {
        Command::Wvol(a) => wvol(a),
        Command::Grad(a) => {
            let l = load(&a.input.input)?;
            let f = l.fibration()?;
            let xi = interior_reeb(&f, &a.xi, &l)?;
            Ok(Emit::Json(json!({ "xi": xi.coords, "grad": grad_w(&f, &xi)? })))
        }
        Command::Hess(a) => {
            let l = load(&a.input.input)?;
            let f = l.fibration()?;
            let xi = interior_reeb(&f, &a.xi, &l)?;
            let h = hess_w(&f, &xi)?;
            let mut eig: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
            eig.sort_by(f64::total_cmp);
            let rows: Vec<Vec<f64>> = h.row_iter().map(|r| r.iter().copied().collect()).collect();
            Ok(Emit::Json(json!({ "xi": xi.coords, "hess": rows, "eigenvalues": eig })))
        }
        Command::Minimize(a) => minimize(a),
        Command::Futaki(a) => {
            let l = load(&a.point.input.input)?;
            let f = l.fibration()?;
            check_finite("eta", &a.eta)?;
            let tc = match &a.central_fiber {
                None => TestConfiguration::product(&f, a.eta.clone())?,
                Some(p) => {
                    let c = load(p)?.fibration()?;
                    TestConfiguration::special(c, a.eta.clone())?
                }
            };
            let xi = reeb_at(&tc.central_fiber, &a.point.xi, &l)?;
            let v = futaki(&tc, &xi)?;
            Ok(Emit::Json(json!({ "xi": xi.coords, "eta": a.eta, "kind": to_value(&tc.kind), "futaki": v })))
        }
        Command::Stability(a) => {
            let l = load(&a.point.input.input)?;
            let f = l.fibration()?;
            let xi = interior_reeb(&f, &a.point.xi, &l)?;
            let v = k_semistable_torus(&f, &xi, a.tol)?;
            let mut out = to_value(&v);
            out["xi"] = json!(xi.coords);
            Ok(Emit::Json(out))
        }
        Command::Dhm(a) => dhm(a),
        Command::Nvol(a) => germ_cmd(a, false),
        Command::Wgerm(a) => germ_cmd(a, true),
        Command::Compare(a) => {
            let f = load(&a.input.input)?.fibration()?;
            let lg = load(&a.germ)?;
            let g = lg.germ()?;
            let c = compare_local_global(&f, g, a.tol)?;
            let mut out = to_value(&c);
            out["fibration"] = json!(f.label());
            out["germ"] = json!(g.label());
            Ok(Emit::Json(out))
        }
        Command::Okounkov(a) => {
            let l = load(&a.input.input)?;
            let g = growth_and_body(l.semigroup()?, a.m)?;
            match a.format {
                Format::Csv => Ok(Emit::Text(g.to_csv())),
                Format::Json => Ok(Emit::Json(json!({
                    "growth": to_value(&g.sequence),
                    "body": to_value(&g.body.to_json()),
                    "body_volume": g.body_volume_string(),
                    "body_volume_f64": g.body_volume,
                    "fitted_c": g.fitted_c,
                    "conditions": to_value(&g.conditions),
                }))),
            }
        }
        Command::Check(a) => run_check(a),
    }
}

fn wvol(a: WvolArgs) -> CliResult<Emit> {
    let l = load(&a.point.input.input)?;
    if let Input::Table(t) = &l.input {
        let xs = a.point.xi.clone().or(l.xi.clone()).ok_or_else(|| Failure::validation("--xi is required for weight tables"))?;
        if !matches!(a.method, MethodArg::Lattice) {
            return Err(Failure::validation("weight tables only support --method lattice"));
        }
        let xi = match t.reeb_cone() {
            Some(c) => ReebVector::new(xs, c)?,
            None => ReebVector::unconstrained(xs),
        };
        let r = w_lattice(t, &xi, a.m, 0.0)?;
        let mut out = to_value(&r);
        out["xi"] = json!(xi.coords);
        return Ok(Emit::Json(out));
    }
    let f = l.fibration()?;
    let xi = interior_reeb(&f, &a.point.xi, &l)?;
    let r = match a.method {
        MethodArg::Exact => w_exact(&f, &xi)?,
        MethodArg::Lattice => w_lattice_toric(&f, &xi, a.m, a.truncation)?,
        MethodArg::MonteCarlo => w_monte_carlo(&f, &xi, a.samples, a.seed, a.truncation.unwrap_or(DEFAULT_BUDGET))?,
    };
    let mut out = to_value(&r);
    out["xi"] = json!(xi.coords);
    Ok(Emit::Json(out))
}

fn minimize(a: MinimizeArgs) -> CliResult<Emit> {
    let l = load(&a.input.input)?;
    let f = l.fibration()?;
    let start = reeb_at(&f, &a.start, &l)?;
    if a.max_iter == 0 {
        return Err(Failure::validation("--max-iter must be positive"));
    }
    let r = minimize_w(&f, &start, a.tol, a.max_iter)?;
    let mut report = json!({
        "label": f.label(),
        "xi_star": r.xi_star.coords,
        "w_star": r.w_star,
        "grad_norm": r.grad_norm,
        "hess_min_eig": r.hess_min_eig,
        "hess_spectrum": r.hess_spectrum,
        "iterations": r.iterations,
        "status": to_value(&r.status),
        "semistable": r.semistable,
        "tolerance": a.tol,
    });
    if !a.no_trace {
        report["trace"] = to_value(&r.trace);
    }
    match r.status {
        Status::Converged => Ok(Emit::Json(report)),
        Status::DivergedToBoundary => Err(Failure { code: "diverged-to-boundary", exit: 3, detail: rounded(report) }),
        Status::MaxIterations => Err(Failure { code: "not-converged", exit: 4, detail: rounded(report) }),
    }
}

fn dhm(a: DhmArgs) -> CliResult<Emit> {
    if a.m == 0 {
        return Err(Failure::validation("--m must be at least 1"));
    }
    let l = load(&a.point.input.input)?;
    let (table, xi) = match &l.input {
        Input::Table(t) => {
            let xs = a.point.xi.clone().or(l.xi.clone()).unwrap_or_else(|| vec![0.0; t.rank()]);
            if xs.len() != t.rank() {
                return Err(Failure::validation(format!("ξ has length {}, expected {}", xs.len(), t.rank())));
            }
            let xi = match t.reeb_cone() {
                Some(c) => ReebVector::new(xs, c)?,
                None => ReebVector::unconstrained(xs),
            };
            (t.clone(), xi)
        }
        _ => {
            let f = l.fibration()?;
            let xi = reeb_at(&f, &a.point.xi, &l)?;
            let trunc = match (f.is_bounded(), a.truncation) {
                (true, _) => None,
                (false, Some(b)) => {
                    xi.require_interior()?;
                    Some(Truncation { xi_ref: xi.coords.clone(), budget: b })
                }
                (false, None) => return Err(Failure::validation("unbounded polyhedron: pass --truncation T")),
            };
            (from_polytope_levels(&f, &[a.m], trunc)?, xi)
        }
    };
    let convention = match a.convention {
        ConventionArg::WeightCentered => Convention::WeightCentered,
        ConventionArg::ValuationShifted => Convention::ValuationShifted,
    };
    let truncation = table.truncation().map(|t| t.budget);
    if let Some(eta) = &a.eta {
        if eta.len() != table.rank() {
            return Err(Failure::validation("η has the wrong length"));
        }
        let mu = dh_joint_m(&table, &xi, &ReebVector::unconstrained(eta.clone()), a.m)?;
        if a.svg.is_some() {
            return Err(Failure::validation("--svg draws one-dimensional measures only"));
        }
        return Ok(match a.format {
            Format::Csv => Emit::Text(mu.to_csv()),
            Format::Json => Emit::Json(json!({
                "m": a.m, "xi": xi.coords, "eta": eta, "truncation": truncation,
                "total_mass": mu.total_mass(),
                "atoms": mu.atoms.iter().map(|&(x, y, w)| vec![x, y, w]).collect::<Vec<_>>(),
            })),
        });
    }
    let mu = dh_m(&table, &xi, a.m, convention, a.shift)?;
    if let Some(path) = &a.svg {
        let title = format!("DH_{} at xi = {:?}", a.m, xi.coords);
        std::fs::write(path, svg::histogram(&mu, &title)).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    Ok(match a.format {
        Format::Csv => Emit::Text(mu.to_csv()),
        Format::Json => Emit::Json(json!({
            "m": a.m, "xi": xi.coords, "convention": to_value(&convention), "truncation": truncation,
            "total_mass": mu.total_mass(),
            "atoms": mu.atoms.iter().map(|&(x, w)| vec![x, w]).collect::<Vec<_>>(),
        })),
    })
}

fn germ_cmd(a: GermArgs, weighted: bool) -> CliResult<Emit> {
    let l = load(&a.point.input.input)?;
    let g = l.germ()?;
    let xs = match a.point.xi.clone().or(l.xi.clone()) {
        Some(x) => x,
        None => g.to_fibration()?.default_reeb().coords,
    };
    let xi = g.valuation(xs)?;
    let method = if a.lattice { VolumeMethod::Lattice } else { VolumeMethod::Polytope };
    let vol = g.vol_valuation(&xi, method, a.m)?;
    let big_a = g.log_discrepancy(&xi)?;
    let mut out = json!({
        "label": g.label(),
        "xi": xi.coords,
        "log_discrepancy": big_a,
        "vol": vol,
        "method": if a.lattice { "lattice" } else { "polytope" },
        "gorenstein_index": g.gorenstein_index(),
    });
    if a.lattice {
        out["m"] = json!(a.m);
    }
    if weighted {
        out["w"] = json!(big_a.exp() * vol);
    } else {
        out["nvol"] = json!(big_a.powi(g.rank() as i32) * vol);
    }
    Ok(Emit::Json(out))
}

fn run_check(a: CheckArgs) -> CliResult<Emit> {
    let l = load(&a.point.input.input)?;
    let (items, xi) = match &l.input {
        Input::Table(t) => {
            let xs = a.point.xi.clone().or(l.xi.clone()).unwrap_or_else(|| vec![0.0; t.rank()]);
            if xs.len() != t.rank() {
                return Err(Failure::validation(format!("ξ has length {}, expected {}", xs.len(), t.rank())));
            }
            let xi = match t.reeb_cone() {
                Some(c) => ReebVector::new(xs, c)?,
                None => ReebVector::unconstrained(xs),
            };
            (check::table_battery(t, &xi)?, xi)
        }
        Input::Semigroup(_) => return Err(Failure::validation("check runs on fibrations, germs and weight tables")),
        _ => {
            let f = l.fibration()?;
            let xi = reeb_at(&f, &a.point.xi, &l)?;
            (check::fibration_battery(&f, &xi, a.samples, a.seed)?, xi)
        }
    };
    let report = json!({
        "input": l.input.kind(),
        "xi": xi.coords,
        "checks": to_value(&items),
        "passed": items.iter().all(|c| c.pass),
    });
    match items.iter().find(|c| !c.pass) {
        None => Ok(Emit::Json(report)),
        Some(first) => {
            let _ = write_stdout(&format!("{}\n", pretty(report)));
            Err(Failure { code: "check-failed", exit: 5, detail: json!({ "first_failure": first.name, "detail": first.detail }) })
        }
    }
}

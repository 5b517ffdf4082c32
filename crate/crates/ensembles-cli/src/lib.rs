//! Command-line front end for the `ensembles` library.
//!
//! Every subcommand reads its parameters from flags and, optionally, from a
//! `key = value` config file (`--config`); flags win over the file. Tables
//! are written as CSV with 17 significant digits, experiment reports as
//! `key=value` lines. Output depends only on the parameters and `--seed`;
//! the wall-clock runtime goes to stderr.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 usage or parameter error,
//! 3 accuracy or convergence failure.

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, Command};
use thiserror::Error;

mod commands;
pub mod params;

use params::Params;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "ENSEMBLES_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] ensembles::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ensembles::Error as E;
        match self {
            CliError::Library(E::Accuracy(_) | E::Convergence(_) | E::WindowOverflow(_)) => 3,
            CliError::Io(_) => 3,
            _ => 2,
        }
    }
}

/// What a command produced: the text to write and whether its checks passed.
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

impl Outcome {
    pub fn table(text: String) -> Self {
        Outcome { text, pass: true }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Value,
    Switch,
}

use Kind::{Switch, Value};

type ArgTable = &'static [(&'static str, Kind, &'static str)];

const ENSEMBLE_ARGS: ArgTable = &[
    ("ensemble", Value, "DH+, DH-, DL+, DL-, DJ+ or DJ-"),
    ("rho", Value, "cut point ρ"),
    ("beta", Value, "Laguerre parameter β (DL)"),
    ("a", Value, "Jacobi parameter a (DJ)"),
    ("b", Value, "Jacobi parameter b (DJ)"),
];

const COMMANDS: &[(&str, &str, ArgTable)] = &[
    ("kernel", "Kernel of a discrete ensemble on {0..size−1} as CSV", &[
        ("size", Value, "window size [10]"),
        ("form", Value, "window, integrable or quadrature [window]"),
    ]),
    ("gap", "Gap probabilities P(no particle in {0..N−1})", &[
        ("N", Value, "window length(s): list or lo:hi"),
        ("check", Switch, "also evaluate the dual continuous ensemble"),
    ]),
    ("sample", "Exact samples of a discrete ensemble, one configuration per line", &[
        ("window", Value, "kernel window size"),
        ("count", Value, "number of samples [1]"),
        ("seed", Value, "master seed"),
    ]),
    ("simulate-asep", "ASEP heights from step initial data", &[
        ("q", Value, "left jump rate"),
        ("t", Value, "time"),
        ("x", Value, "query sites: list or lo:hi [0]"),
        ("replicas", Value, "number of runs [1000]"),
        ("seed", Value, "master seed"),
    ]),
    ("simulate-6v", "Stochastic six-vertex heights h(M,N)", &[
        ("q", Value, "q in (0,1)"),
        ("u", Value, "spectral parameter"),
        ("mode", Value, "inv-sqrt-q or neg-sqrt-q [inv-sqrt-q]"),
        ("points", Value, "query points M:N, comma separated"),
        ("replicas", Value, "number of runs [1000]"),
        ("seed", Value, "master seed"),
    ]),
    ("qlaplace", "q-Laplace transforms of a law or of an ensemble", &[
        ("q", Value, "q in (0,1)"),
        ("zeta", Value, "arguments: list or lo:hi:step [0.5]"),
        ("dist", Value, "probabilities P(ξ=0), P(ξ=1), …"),
        ("invert", Value, "recover P(ξ=n) for n ≤ this value from the transform"),
    ]),
    ("verify-identity", "Monte Carlo against exact identities and limit laws", &[
        ("identity", Value, "asep-dl, tasep, asep-hermite, asep-tw, kpz, kpz-6v or 6v"),
        ("q", Value, "q"),
        ("t", Value, "time"),
        ("x", Value, "site"),
        ("zeta", Value, "q-Laplace arguments [0.25,0.5]"),
        ("N", Value, "particle count or six-vertex row"),
        ("M", Value, "six-vertex column"),
        ("u", Value, "six-vertex spectral parameter"),
        ("mode", Value, "inv-sqrt-q or neg-sqrt-q [inv-sqrt-q]"),
        ("r", Value, "edge offset (asep-hermite)"),
        ("t-tilde", Value, "rescaled times (1−q)t"),
        ("s", Value, "Tracy–Widom arguments"),
        ("x-over-t", Value, "ratio x/t̃ (asep-tw) [0]"),
        ("eps", Value, "weak-asymmetry grid"),
        ("t-hat", Value, "KPZ time [1]"),
        ("x-hat", Value, "KPZ position [0]"),
        ("zeta-hat", Value, "KPZ Laplace arguments [0.5,1,2]"),
        ("v", Value, "six-vertex KPZ v"),
        ("mu", Value, "six-vertex KPZ μ"),
        ("nu", Value, "six-vertex KPZ ν"),
        ("replicas", Value, "Monte Carlo runs [10000]"),
        ("seed", Value, "master seed"),
        ("tol", Value, "tolerance override"),
        ("kolmogorov-tol", Value, "Kolmogorov tolerance (asep-tw) [0.08]"),
    ]),
    ("verify-limit", "Jacobi-matrix and kernel convergence along a limit transition", &[
        ("transition", Value, "charlier-dh, meixner-dl, meixner-dh, krawtchouk-dh, hahn-dl, racah-dj or dl-dh"),
        ("rho", Value, "target cut point"),
        ("beta", Value, "Meixner β (meixner-dl) [1]"),
        ("xi", Value, "Meixner ξ (meixner-dh) [0.5]"),
        ("a", Value, "Hahn/Racah a [0.5]"),
        ("b", Value, "Hahn/Racah b [0.3]"),
        ("grid", Value, "N grid [50,100,200,400]"),
    ]),
    ("tw-table", "GUE Tracy–Widom distribution function on a grid", &[
        ("grid", Value, "s grid lo:hi:step or list [-5:2:0.25]"),
    ]),
    ("kpz-table", "Airy-side KPZ Laplace transform E exp(−ζ̂ e^{τ̂ z}) on a grid", &[
        ("tau-hat", Value, "τ̂ (else from --t-hat/--x-hat)"),
        ("t-hat", Value, "ASEP KPZ time [1]"),
        ("x-hat", Value, "ASEP KPZ position [0]"),
        ("zeta-hat", Value, "ζ̂ grid [0.25:4:0.25]"),
        ("tol", Value, "quadrature tolerance [1e-8]"),
    ]),
    ("schur-check", "Exact Schur-measure pushforwards against ensembles", &[
        ("kind", Value, "meixner, krawtchouk or duality"),
        ("a", Value, "number of x variables / M range"),
        ("b", Value, "number of y variables / N range"),
        ("x", Value, "specialization x [0.5]"),
        ("y", Value, "specialization y [0.6]"),
        ("cols", Value, "partition box width (meixner) [60]"),
        ("q", Value, "six-vertex q (duality) [0.25]"),
        ("u", Value, "six-vertex u (duality) [3]"),
        ("tol", Value, "TV tolerance [1e-9]"),
    ]),
];

const GLOBAL_KEYS: &[&str] = &["workers", "output"];

fn args_of(name: &str) -> Vec<(&'static str, Kind, &'static str)> {
    let (_, _, own) = COMMANDS.iter().find(|(n, _, _)| *n == name).expect("known command");
    let mut all = own.to_vec();
    if matches!(name, "kernel" | "gap" | "sample" | "qlaplace") {
        all.extend_from_slice(ENSEMBLE_ARGS);
    }
    all
}

fn cli() -> Command {
    let mut cmd = Command::new("ensembles")
        .about("Discrete Hermite/Laguerre/Jacobi ensembles, ASEP and six-vertex checks")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("config").long("config").global(true).num_args(1).help("`key = value` config file"))
        .arg(Arg::new("workers").long("workers").global(true).num_args(1).help(format!("worker threads [${WORKERS_ENV}]")))
        .arg(Arg::new("output").long("output").global(true).num_args(1).help("output file [stdout]"));
    for (name, about, _) in COMMANDS {
        let mut sub = Command::new(*name).about(*about);
        for (arg, kind, help) in args_of(name) {
            let a = Arg::new(arg).long(arg).help(help);
            sub = sub.arg(match kind {
                Value => a.num_args(1).allow_hyphen_values(true),
                Switch => a.action(ArgAction::SetTrue),
            });
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn gather(matches: &clap::ArgMatches) -> Result<(String, Params), CliError> {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let table = args_of(name);
    let mut p = Params::default();
    let config = sub.get_one::<String>("config").or_else(|| matches.get_one::<String>("config"));
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
        for (k, v) in params::parse_config(&text)? {
            if !table.iter().any(|(a, _, _)| *a == k) && !GLOBAL_KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("unknown key `{k}` in {path} for `{name}`")));
            }
            p.set(&k, v);
        }
    }
    for (arg, kind, _) in &table {
        if sub.value_source(arg) != Some(ValueSource::CommandLine) {
            continue;
        }
        match kind {
            Value => p.set(arg, sub.get_one::<String>(arg).expect("value present").clone()),
            Switch => p.set(arg, "true"),
        }
    }
    for key in GLOBAL_KEYS {
        let v = sub.get_one::<String>(key).or_else(|| matches.get_one::<String>(key));
        if let Some(v) = v {
            p.set(key, v.clone());
        }
    }
    Ok((name.to_string(), p))
}

fn configure_workers(p: &Params) -> Result<(), CliError> {
    let n: Option<usize> = match p.opt("workers")? {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Usage(format!("{WORKERS_ENV}: cannot parse `{v}`")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n.filter(|&n| n > 0) {
        // a pool that already exists (repeated calls in one process) is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(name: &str, p: &Params) -> Result<Outcome, CliError> {
    configure_workers(p)?;
    let out = commands::dispatch(name, p)?;
    match p.raw("output") {
        Some(path) => std::fs::write(path, &out.text)?,
        None => std::io::stdout().write_all(out.text.as_bytes())?,
    }
    Ok(out)
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let start = Instant::now();
    let result = gather(&matches).and_then(|(name, p)| execute(&name, &p));
    eprintln!("runtime_seconds={:.3}", start.elapsed().as_secs_f64());
    match result {
        Ok(out) if out.pass => 0,
        Ok(_) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run with --help for usage");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_table_builds() {
        cli().debug_assert();
    }

    #[test]
    fn exit_codes() {
        use ensembles::Error as E;
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(E::Parameter("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(E::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(E::Accuracy("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(E::Convergence("x".into())).exit_code(), 3);
    }
}

use std::fmt::Write as _;

use ensembles::dpp::sample_many;
use ensembles::fredholm::{self, Interval, MultiplicativeFunctional};
use ensembles::harness::{self, fmt17, scaling, ExperimentReport, Regime, Transition};
use ensembles::kernels::{self, Base, EnsembleSpec, Sign};
use ensembles::qlaplace;
use ensembles::simulators::{self, SMode, SixVertexParams};
use num_complex::Complex;

use crate::params::Params;
use crate::{CliError, Outcome};

pub fn dispatch(name: &str, p: &Params) -> Result<Outcome, CliError> {
    match name {
        "kernel" => kernel(p),
        "gap" => gap(p),
        "sample" => sample(p),
        "simulate-asep" => simulate_asep(p),
        "simulate-6v" => simulate_6v(p),
        "qlaplace" => q_laplace(p),
        "verify-identity" => verify_identity(p),
        "verify-limit" => verify_limit(p),
        "tw-table" => tw_table(p),
        "kpz-table" => kpz_table(p),
        "schur-check" => schur_check(p),
        _ => Err(CliError::Usage(format!("unknown command `{name}`"))),
    }
}

fn report(rep: ExperimentReport) -> Outcome {
    Outcome {
        pass: rep.verdict(),
        text: rep.to_string(),
    }
}

fn ensemble(p: &Params) -> Result<EnsembleSpec<f64>, CliError> {
    let name: String = p.req("ensemble")?;
    let (base, sign) = name.split_at(name.len().saturating_sub(1));
    let sign = match sign {
        "+" => Sign::Plus,
        "-" => Sign::Minus,
        _ => return Err(CliError::Usage(format!("--ensemble: expected a trailing + or −, got `{name}`"))),
    };
    let base = match base.to_ascii_uppercase().as_str() {
        "DH" => Base::DH,
        "DL" => Base::DL { beta: p.req("beta")? },
        "DJ" => Base::DJ { a: p.req("a")?, b: p.req("b")? },
        _ => return Err(CliError::Usage(format!("--ensemble: unknown ensemble `{name}`"))),
    };
    Ok(EnsembleSpec::new(base, sign, p.req("rho")?)?)
}

fn mode(p: &Params) -> Result<SMode, CliError> {
    match p.raw("mode").unwrap_or("inv-sqrt-q") {
        "inv-sqrt-q" => Ok(SMode::InvSqrtQ),
        "neg-sqrt-q" => Ok(SMode::NegSqrtQ),
        m => Err(CliError::Usage(format!("--mode: expected inv-sqrt-q or neg-sqrt-q, got `{m}`"))),
    }
}

fn kernel(p: &Params) -> Result<Outcome, CliError> {
    let spec = ensemble(p)?;
    let size: usize = p.or("size", 10)?;
    let form = p.raw("form").unwrap_or("window");
    let entry: Box<dyn Fn(usize, usize) -> ensembles::Result<f64>> = match form {
        "window" => {
            let k = kernels::discrete_kernel_window(&spec, size)?;
            Box::new(move |x, y| Ok(k.get(x, y)))
        }
        "integrable" => Box::new(|x, y| kernels::discrete_kernel_integrable(&spec, x, y)),
        "quadrature" => Box::new(|x, y| kernels::discrete_kernel_quadrature(&spec, x, y)),
        f => return Err(CliError::Usage(format!("--form: expected window, integrable or quadrature, got `{f}`"))),
    };
    let mut s = String::from("x,y,kernel\n");
    for x in 0..size {
        for y in 0..size {
            writeln!(s, "{x},{y},{}", fmt17(entry(x, y)?)).unwrap();
        }
    }
    Ok(Outcome::table(s))
}

fn gap(p: &Params) -> Result<Outcome, CliError> {
    let spec = ensemble(p)?;
    let ns: Vec<usize> = p.ints("N", &[])?;
    if ns.is_empty() {
        return Err(CliError::Usage("--N is required".into()));
    }
    let check = p.flag("check")?;
    let mut s = String::from(if check { "N,gap,gap_continuous,difference\n" } else { "N,gap\n" });
    for n in ns {
        let g = fredholm::gap_det_discrete(&spec, n)?;
        if check {
            let interval = match spec.sign {
                Sign::Plus => Interval::Above(spec.rho),
                Sign::Minus => Interval::Below(spec.rho),
            };
            let c = fredholm::gap_det_continuous(&spec.family(), n, interval)?;
            writeln!(s, "{n},{},{},{}", fmt17(g), fmt17(c), fmt17((g - c).abs())).unwrap();
        } else {
            writeln!(s, "{n},{}", fmt17(g)).unwrap();
        }
    }
    Ok(Outcome::table(s))
}

fn sample(p: &Params) -> Result<Outcome, CliError> {
    let spec = ensemble(p)?;
    let window: usize = p.req("window")?;
    let count: usize = p.or("count", 1)?;
    let seed = p.seed()?;
    let k = kernels::discrete_kernel_window(&spec, window)?;
    let mut s = String::new();
    for c in sample_many(&k, seed, count)? {
        writeln!(s, "{c}").unwrap();
    }
    Ok(Outcome::table(s))
}

fn simulate_asep(p: &Params) -> Result<Outcome, CliError> {
    let q: f64 = p.req("q")?;
    let t: f64 = p.req("t")?;
    let xs: Vec<i64> = p.ints("x", &[0])?;
    let replicas: usize = p.or("replicas", 1000)?;
    let seed = p.seed()?;
    let samples = simulators::asep_heights(q, t, &xs, seed, replicas)?;
    let labels: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    let mut buf = Vec::new();
    simulators::write_heights_csv(&mut buf, &labels, &samples)?;
    Ok(Outcome::table(String::from_utf8(buf).expect("CSV is UTF-8")))
}

fn simulate_6v(p: &Params) -> Result<Outcome, CliError> {
    let params = SixVertexParams {
        q: p.req("q")?,
        u: p.req("u")?,
        mode: mode(p)?,
    };
    let raw: String = p.req("points")?;
    let points = raw
        .split(',')
        .map(|pt| {
            let (m, n) = pt.trim().split_once(':').ok_or_else(|| CliError::Usage(format!("--points: expected M:N, got `{pt}`")))?;
            let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("--points: cannot parse `{pt}`")));
            Ok((parse(m)?, parse(n)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let replicas: usize = p.or("replicas", 1000)?;
    let seed = p.seed()?;
    let samples = simulators::six_vertex_heights(&params, &points, seed, replicas)?;
    let labels: Vec<String> = points.iter().map(|(m, n)| format!("{m}:{n}")).collect();
    let mut buf = Vec::new();
    simulators::write_heights_csv(&mut buf, &labels, &samples)?;
    Ok(Outcome::table(String::from_utf8(buf).expect("CSV is UTF-8")))
}

fn q_laplace(p: &Params) -> Result<Outcome, CliError> {
    let q: f64 = p.req("q")?;
    let zetas = p.reals("zeta", &[0.5])?;
    let mut s = String::new();
    if p.has("dist") {
        let dist = p.reals("dist", &[])?;
        if let Some(n_max) = p.opt::<usize>("invert")? {
            let l = |z: Complex<f64>| qlaplace::q_laplace_rv_complex(&dist, q, z);
            s.push_str("n,probability,recovered\n");
            for n in 0..=n_max {
                let got = qlaplace::invert_q_laplace(&l, q, n)?;
                let want = dist.get(n).copied().unwrap_or(0.0);
                writeln!(s, "{n},{},{}", fmt17(want), fmt17(got)).unwrap();
            }
        } else {
            s.push_str("zeta,transform\n");
            for z in zetas {
                writeln!(s, "{},{}", fmt17(z), fmt17(qlaplace::q_laplace_rv(&dist, q, z)?)).unwrap();
            }
        }
    } else {
        if p.has("invert") {
            return Err(CliError::Usage("--invert needs --dist".into()));
        }
        let spec = ensemble(p)?;
        s.push_str("zeta,transform\n");
        for z in zetas {
            let f = MultiplicativeFunctional::q_geometric(z, q)?;
            writeln!(s, "{},{}", fmt17(z), fmt17(fredholm::expect_multiplicative(&spec, &f, 1e-12)?)).unwrap();
        }
    }
    Ok(Outcome::table(s))
}

fn verify_identity(p: &Params) -> Result<Outcome, CliError> {
    let which: String = p.req("identity")?;
    let replicas: usize = p.or("replicas", 10_000)?;
    let seed = if replicas == 0 { p.or("seed", 0)? } else { p.seed()? };
    let zetas = p.reals("zeta", &[0.25, 0.5])?;
    let rep = match which.as_str() {
        "asep-dl" => harness::verify_asep_dl_identity(p.req("q")?, p.req("t")?, p.req("x")?, &zetas, replicas, seed)?,
        "tasep" => harness::verify_tasep_corollary(p.req("t")?, p.req("x")?, p.req("N")?, replicas, seed)?,
        "asep-hermite" => {
            let tt = p.reals("t-tilde", &[50.0, 200.0])?;
            harness::verify_asep_hermite(p.req("q")?, p.or("r", 0.0)?, &tt, replicas, seed, p.or("tol", 0.05)?)?
        }
        "asep-tw" => {
            let tt = p.reals("t-tilde", &[500.0, 1000.0, 2000.0])?;
            let ss = p.reals("s", &[-2.0, 0.0, 1.0])?;
            harness::verify_asep_tw(
                p.or("q", 0.0)?,
                p.or("x-over-t", 0.0)?,
                &tt,
                &ss,
                replicas,
                seed,
                p.or("tol", 0.02)?,
                p.or("kolmogorov-tol", 0.08)?,
            )?
        }
        "kpz" => harness::verify_kpz_regimes(
            &p.reals("eps", &[0.4, 0.3])?,
            p.or("t-hat", 1.0)?,
            p.or("x-hat", 0.0)?,
            &p.reals("zeta-hat", &[0.5, 1.0, 2.0])?,
            replicas,
            seed,
            p.or("tol", 0.05)?,
        )?,
        "kpz-6v" => harness::verify_kpz_six_vertex(
            mode(p)?,
            p.req("v")?,
            p.req("mu")?,
            p.req("nu")?,
            &p.reals("eps", &[0.4, 0.3])?,
            &p.reals("zeta-hat", &[0.5, 1.0, 2.0])?,
            replicas,
            seed,
            p.or("tol", 0.05)?,
        )?,
        "6v" => harness::verify_6v_corollary(p.req("q")?, p.req("u")?, mode(p)?, p.req("M")?, p.req("N")?, &zetas, replicas, seed)?,
        w => return Err(CliError::Usage(format!("--identity: unknown identity `{w}`"))),
    };
    Ok(report(rep))
}

fn verify_limit(p: &Params) -> Result<Outcome, CliError> {
    let name: String = p.req("transition")?;
    let (a, b) = (p.or("a", 0.5)?, p.or("b", 0.3)?);
    let tr = match name.as_str() {
        "charlier-dh" => Transition::CharlierToDh { rho: p.req("rho")? },
        "meixner-dl" => Transition::MeixnerToDl {
            beta: p.or("beta", 1.0)?,
            rho: p.req("rho")?,
        },
        "meixner-dh" => Transition::MeixnerToDh {
            rho: p.req("rho")?,
            xi: p.or("xi", 0.5)?,
        },
        "krawtchouk-dh" => Transition::KrawtchoukToDh { rho: p.req("rho")? },
        "hahn-dl" => Transition::HahnToDl { a, b, rho: p.req("rho")? },
        "racah-dj" => Transition::RacahToDj { a, b, rho: p.req("rho")? },
        "dl-dh" => Transition::DlToDh { rho: p.req("rho")? },
        t => return Err(CliError::Usage(format!("--transition: unknown transition `{t}`"))),
    };
    let grid: Vec<usize> = p.ints("grid", &[50, 100, 200, 400])?;
    Ok(report(harness::verify_limit_transition(tr, &grid)?))
}

fn tw_table(p: &Params) -> Result<Outcome, CliError> {
    let grid = p.reals("grid", &[])?;
    let grid = if grid.is_empty() { crate::params::parse_reals("grid", "-5:2:0.25")? } else { grid };
    let mut s = String::from("s,F_GUE\n");
    for x in grid {
        writeln!(s, "{},{}", fmt17(x), fmt17(fredholm::tracy_widom_gue(x)?)).unwrap();
    }
    Ok(Outcome::table(s))
}

fn kpz_table(p: &Params) -> Result<Outcome, CliError> {
    let tau = match p.opt::<f64>("tau-hat")? {
        Some(t) => t,
        None => {
            scaling(Regime::AsepKpz {
                t_hat: p.or("t-hat", 1.0)?,
                x_hat: p.or("x-hat", 0.0)?,
            })?
            .tau
        }
    };
    let zs = p.reals("zeta-hat", &[])?;
    let zs = if zs.is_empty() { crate::params::parse_reals("zeta-hat", "0.25:4:0.25")? } else { zs };
    let tol: f64 = p.or("tol", 1e-8)?;
    let mut s = String::from("zeta_hat,tau_hat,laplace\n");
    for z in zs {
        writeln!(s, "{},{},{}", fmt17(z), fmt17(tau), fmt17(fredholm::kpz_laplace_rhs(z, tau, tol)?)).unwrap();
    }
    Ok(Outcome::table(s))
}

fn schur_check(p: &Params) -> Result<Outcome, CliError> {
    let kind: String = p.req("kind")?;
    let (a, b): (usize, usize) = (p.req("a")?, p.req("b")?);
    let tol: f64 = p.or("tol", 1e-9)?;
    let rep = match kind.as_str() {
        "meixner" => harness::verify_schur_pushforward(a, p.or("x", 0.5)?, b, p.or("y", 0.6)?, false, p.or("cols", 60)?, tol)?,
        "krawtchouk" => harness::verify_schur_pushforward(a, p.or("x", 0.5)?, b, p.or("y", 0.6)?, true, b, tol)?,
        "duality" => harness::verify_krawtchouk_duality(a, b, p.or("q", 0.25)?, p.or("u", 3.0)?, tol)?,
        k => return Err(CliError::Usage(format!("--kind: expected meixner, krawtchouk or duality, got `{k}`"))),
    };
    Ok(report(rep))
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use grandlp::experiments::ExperimentConfig;
use grandlp::exponents::MultiIndex;
use grandlp::grand::{grand_norm, v_functional_report};
use grandlp::norms::{lp_norm, lp_norm_closed_form, FormSpec};
use grandlp::potential::{apply_kernel, EvalGrid, KernelSpec};
use grandlp::psi::{
    bessel_theta, derivative_zeta, riesz_zeta, singular_psi1, truncated_nu_general, zeta_s, PsiSpec,
    SlowlyVarying,
};
use grandlp::{run_experiment, Error, ExperimentName, PotentialParams, QuadratureSpec};

/// Grand Lebesgue norms of Riesz and Bessel potentials.
#[derive(Debug, Parser)]
#[command(name = "grandlp", version)]
struct Cli {
    /// Directory for output files (tables go to stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Quadrature overrides as JSON, e.g. '{"rel_tol": 1e-10}'.
    #[arg(long, global = true)]
    quad: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a weight transform over a grid.
    Transform {
        #[arg(long)]
        psi: String,
        #[arg(long, value_enum)]
        kind: TransformKind,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        d: u32,
        #[arg(long, alias = "qgrid")]
        grid: String,
        /// Derivative order |ξ| (derivative_zeta, bessel_theta).
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Slowly varying factor, `one` or `log_power:kappa=K`.
        #[arg(long, default_value = "one")]
        slowly: String,
    },
    /// L_p norm of a catalog function.
    Lpnorm {
        #[arg(long)]
        form: String,
        #[arg(long, conflicts_with = "pgrid")]
        p: Option<f64>,
        #[arg(long)]
        pgrid: Option<String>,
    },
    /// Grand Lebesgue norm sup_p |f|_p / psi(p).
    Grand {
        #[arg(long)]
        form: String,
        #[arg(long)]
        psi: String,
    },
    /// Sharpness functional V(f, p) on the line.
    Vfun {
        #[arg(long)]
        form: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long, conflicts_with = "pgrid")]
        p: Option<f64>,
        #[arg(long)]
        pgrid: Option<String>,
    },
    /// Potential K * f over a grid of x.
    Potential {
        #[arg(long)]
        form: String,
        #[arg(long)]
        kernel: String,
        #[arg(long, alias = "xgrid")]
        grid: String,
    },
    /// Run a named experiment (or `all`).
    Verify {
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the built-in test functions.
    Catalog,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum TransformKind {
    RieszZeta,
    DerivativeZeta,
    BesselTheta,
    SingularPsi1,
    ZetaS,
    TruncatedNu,
}

impl TransformKind {
    fn column(self) -> &'static str {
        match self {
            TransformKind::RieszZeta | TransformKind::DerivativeZeta | TransformKind::ZetaS => "q",
            TransformKind::BesselTheta => "m",
            TransformKind::SingularPsi1 => "p",
            TransformKind::TruncatedNu => "r",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// Write a table to `<out>/<name>.csv`, or to stdout.
fn emit(out: Option<&Path>, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Error> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn quad_spec(json: Option<&str>) -> Result<QuadratureSpec, Error> {
    let spec = match json {
        Some(text) => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
        None => QuadratureSpec::default(),
    };
    spec.validate()?;
    Ok(spec)
}

fn p_values(p: Option<f64>, pgrid: Option<&str>) -> Result<Vec<f64>, Error> {
    match (p, pgrid) {
        (Some(p), _) => Ok(vec![p]),
        (None, Some(g)) => Ok(g.parse::<EvalGrid>()?.points().to_vec()),
        (None, None) => Err(Error::Parameter("give --p or --pgrid".into())),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let out = cli.out.as_deref();
    let quad = quad_spec(cli.quad.as_deref())?;
    match cli.command {
        Command::Transform {
            psi,
            kind,
            alpha,
            d,
            grid,
            order,
            beta,
            slowly,
        } => {
            let psi = psi.parse::<PsiSpec>()?.build()?;
            let params = PotentialParams::new(d, alpha)?;
            let grid: EvalGrid = grid.parse()?;
            let xi = MultiIndex::of_order(d, order);
            let s: SlowlyVarying = slowly.parse()?;
            let mut rows = Vec::new();
            if let TransformKind::TruncatedNu = kind {
                for &r in grid.points() {
                    let nu = truncated_nu_general(&psi, &params, beta, &s, r)?;
                    rows.push(vec![fmt_num(r), fmt_num(nu.value), fmt_num(nu.argmin_p)]);
                }
                return emit(out, "transform", &["r", "value", "argmin_p"], &rows);
            }
            let t = match kind {
                TransformKind::RieszZeta => riesz_zeta(&psi, &params)?,
                TransformKind::DerivativeZeta => derivative_zeta(&psi, &params, &xi)?,
                TransformKind::BesselTheta => bessel_theta(&psi, &params, &xi)?,
                TransformKind::SingularPsi1 => singular_psi1(&psi)?,
                TransformKind::ZetaS => zeta_s(&psi, &params, beta, &s)?,
                TransformKind::TruncatedNu => unreachable!(),
            };
            for &x in grid.points() {
                rows.push(vec![fmt_num(x), fmt_num(t.evaluate(x)?)]);
            }
            emit(out, "transform", &[kind.column(), "value"], &rows)
        }
        Command::Lpnorm { form, p, pgrid } => {
            let spec: FormSpec = form.parse()?;
            let f = spec.build()?;
            let mut rows = Vec::new();
            for p in p_values(p, pgrid.as_deref())? {
                let n = lp_norm(&f, p, &quad)?;
                let closed = match lp_norm_closed_form(&spec, p) {
                    Ok(v) => v.powf(1.0 / p),
                    Err(_) => f64::NAN,
                };
                rows.push(vec![fmt_num(p), fmt_num(n.value), fmt_num(n.rel_error), fmt_num(closed)]);
            }
            emit(out, "lpnorm", &["p", "norm", "rel_error", "closed_form"], &rows)
        }
        Command::Grand { form, psi } => {
            let f = form.parse::<FormSpec>()?.build()?;
            let psi = psi.parse::<PsiSpec>()?.build()?;
            let rep = grand_norm(&f, &psi, &quad)?;
            let rows: Vec<Vec<String>> = rep
                .grid
                .iter()
                .map(|g| {
                    vec![
                        fmt_num(g.p),
                        fmt_num(g.norm.unwrap_or(f64::INFINITY)),
                        fmt_num(g.psi),
                        fmt_num(g.ratio.unwrap_or(f64::NAN)),
                    ]
                })
                .collect();
            emit(out, "grand", &["p", "norm", "psi", "ratio"], &rows)?;
            let flags = rep.endpoint_flags;
            let summary = format!(
                "VALUE={}\nARGMAX_P={}\nLOWER_CLIMBING={}\nUPPER_CLIMBING={}\nDIVERGENT_POINTS={}\n",
                fmt_num(rep.value),
                fmt_num(rep.argmax_p),
                flags.lower_climbing,
                flags.upper_climbing,
                flags.divergent_points
            );
            match out {
                Some(dir) => fs::write(dir.join("grand.summary.txt"), summary)?,
                None => eprint!("{summary}"),
            }
            Ok(())
        }
        Command::Vfun { form, alpha, p, pgrid } => {
            let f = form.parse::<FormSpec>()?.build()?;
            let mut rows = Vec::new();
            for p in p_values(p, pgrid.as_deref())? {
                let v = v_functional_report(&f, p, alpha, &quad, Default::default())?;
                rows.push(vec![
                    fmt_num(p),
                    fmt_num(v.q),
                    fmt_num(v.potential_norm),
                    fmt_num(v.function_norm),
                    fmt_num(v.value),
                ]);
            }
            emit(out, "vfun", &["p", "q", "potential_norm", "function_norm", "v"], &rows)
        }
        Command::Potential { form, kernel, grid } => {
            let f = form.parse::<FormSpec>()?.build()?;
            let kernel: KernelSpec = kernel.parse()?;
            let grid: EvalGrid = grid.parse()?;
            let mut rows = Vec::new();
            for &x in grid.points() {
                let u = apply_kernel(&f, x, &kernel, &quad)?;
                rows.push(vec![fmt_num(x), fmt_num(u.value), fmt_num(u.abs_error)]);
            }
            emit(out, "potential", &["x", "value", "abs_error"], &rows)
        }
        Command::Verify { experiment, config } => {
            let names: Vec<ExperimentName> = if experiment == "all" {
                ExperimentName::ALL.to_vec()
            } else {
                vec![experiment.parse()?]
            };
            let base = match &config {
                Some(path) => Some(ExperimentConfig::from_json(&fs::read_to_string(path)?)?),
                None => None,
            };
            if let (Some(cfg), [name]) = (&base, names.as_slice()) {
                if cfg.name != *name {
                    return Err(Error::Config(format!(
                        "config is for {} but {name} was requested",
                        cfg.name
                    )));
                }
            }
            for name in names {
                let mut cfg = match &base {
                    Some(c) => c.clone(),
                    None => ExperimentConfig::new(name),
                };
                cfg.name = name;
                if let Some(dir) = out {
                    cfg.output_dir = dir.to_path_buf();
                }
                if cli.quad.is_some() {
                    cfg.quadrature = Some(quad);
                }
                let rep = run_experiment(&cfg)?;
                println!("{name}: {}", if rep.passed { "PASS" } else { "FAIL" });
            }
            Ok(())
        }
        Command::Catalog => {
            for (form, what) in FormSpec::catalog_help() {
                println!("{form:<22} {what}");
            }
            Ok(())
        }
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crossdiff::experiment::{
    fmt_f64, run_experiment, CustomSetup, ExperimentConfig, SchemeChoice,
};
use crossdiff::ode::{simulate_logistic, simulate_split, SplitScenario, DEFAULT_DT};
use crossdiff::{KineticsMode, LotkaVolterraParams, TransportForm};

#[derive(Parser)]
#[command(
    name = "crossdiff",
    version,
    about = "Two-species cross-diffusion simulations",
    allow_negative_numbers = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the finite-element schemes over a mesh sweep.
    Pde(PdeArgs),
    /// Integrate the spatially homogeneous models.
    Ode(OdeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Invasion,
    Barenblatt,
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Pdelta,
    Pb,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Chi,
    GradChi,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nd,
    D,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PdeArgs {
    #[arg(long, value_enum, default_value = "barenblatt")]
    experiment: ExperimentArg,
    #[arg(long, value_enum, default_value = "both")]
    scheme: SchemeArg,
    /// Node count of a uniform mesh; repeat for a sweep.
    #[arg(long = "nodes")]
    nodes: Vec<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Viscosity of the two-species scheme (default h^2).
    #[arg(long)]
    delta: Option<f64>,
    /// Fraction diffusion of the (u, r) scheme (default 2 h^2).
    #[arg(long = "delta-b")]
    delta_b: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-inner")]
    max_inner: Option<usize>,
    /// Comma-separated output times (default 0, T/4, T/2, 3T/4, T).
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long = "transport-form", value_enum, default_value = "chi")]
    transport_form: TransportArg,
    /// Fail fraction-scheme runs once r leaves [-band, 1 + band].
    #[arg(long = "fraction-band")]
    fraction_band: Option<f64>,
    /// CSV with columns x,u1,u2 (custom experiment).
    #[arg(long)]
    initial: Option<PathBuf>,
    #[command(flatten)]
    kinetics: KineticsArgs,
}

#[derive(Args)]
struct KineticsArgs {
    /// Growth rates alpha1,alpha2.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    alpha: Option<Vec<f64>>,
    /// Competition coefficients beta11,beta12,beta21,beta22.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    beta: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "d")]
    mode: ModeArg,
}

impl KineticsArgs {
    fn params(&self) -> Result<LotkaVolterraParams> {
        let alpha = match self.alpha.as_deref() {
            None => [0.0; 2],
            Some([a]) => [*a; 2],
            Some([a, b]) => [*a, *b],
            Some(_) => bail!("--alpha takes one or two values"),
        };
        let beta = match self.beta.as_deref() {
            None => [[0.0; 2]; 2],
            Some([b]) => [[*b; 2]; 2],
            Some([a, b, c, d]) => [[*a, *b], [*c, *d]],
            Some(_) => bail!("--beta takes one or four values"),
        };
        let mode = match self.mode {
            ModeArg::Nd => KineticsMode::NonDifferentiated,
            ModeArg::D => KineticsMode::Differentiated,
        };
        Ok(LotkaVolterraParams::new(alpha, beta, mode)?)
    }
}

#[derive(Args)]
struct OdeArgs {
    #[command(subcommand)]
    model: OdeModel,
    /// Write the CSV here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OdeModel {
    /// U' = U (alpha - beta U).
    #[command(allow_negative_numbers = true)]
    Logistic {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.1)]
        u0: f64,
        #[arg(long = "T", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
    },
    /// Logistic growth until t*, then a split into two competing species.
    #[command(allow_negative_numbers = true)]
    Split {
        #[arg(long = "alpha-pre", default_value_t = 1.0)]
        alpha_pre: f64,
        #[arg(long = "beta-pre", default_value_t = 1.0)]
        beta_pre: f64,
        #[arg(long, default_value_t = 0.1)]
        u0: f64,
        #[arg(long = "t-star", default_value_t = 2.0)]
        t_star: f64,
        /// Fraction of the population that becomes species 1.
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long = "T", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[command(flatten)]
        kinetics: KineticsArgs,
    },
}

fn pde_config(args: &PdeArgs) -> Result<ExperimentConfig> {
    let mut config = match args.experiment {
        ExperimentArg::Invasion => ExperimentConfig::invasion(),
        ExperimentArg::Barenblatt => ExperimentConfig::barenblatt(),
        ExperimentArg::Custom => {
            let path = args
                .initial
                .as_ref()
                .context("the custom experiment needs --initial")?;
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let setup = CustomSetup::from_csv(&text, args.kinetics.params()?)?;
            let tau = args.tau.context("the custom experiment needs --tau")?;
            let t_end = args.t_end.context("the custom experiment needs --T")?;
            ExperimentConfig::custom(setup, tau, t_end)
        }
    };
    if !matches!(args.experiment, ExperimentArg::Custom)
        && (args.initial.is_some() || args.kinetics.alpha.is_some() || args.kinetics.beta.is_some())
    {
        bail!("--initial, --alpha and --beta only apply to the custom experiment");
    }
    config.scheme = match args.scheme {
        SchemeArg::Pdelta => SchemeChoice::Pdelta,
        SchemeArg::Pb => SchemeChoice::Pb,
        SchemeArg::Both => SchemeChoice::Both,
    };
    if !args.nodes.is_empty() {
        config.mesh_nodes = args.nodes.clone();
    }
    if let Some(v) = args.tau {
        config.tau = v;
    }
    if let Some(v) = args.t_end {
        config.t_end = v;
    }
    config.delta = args.delta.or(config.delta);
    config.delta_b = args.delta_b.or(config.delta_b);
    if let Some(v) = args.eps {
        config.eps = v;
    }
    if let Some(v) = args.tol {
        config.tol = v;
    }
    if let Some(v) = args.max_inner {
        config.max_inner = v;
    }
    if let Some(s) = &args.snapshots {
        config.snapshot_times = Some(s.clone());
    }
    config.output_dir = args.out.clone();
    config.transport_form = match args.transport_form {
        TransportArg::Chi => TransportForm::Chi,
        TransportArg::GradChi => TransportForm::GradChi,
    };
    config.fraction_band = args.fraction_band;
    config.validate()?;
    Ok(config)
}

fn run_pde(args: &PdeArgs) -> Result<ExitCode> {
    let config = pde_config(args)?;
    let report = run_experiment(&config)?;
    for run in &report.runs {
        let last = run.trajectory.final_record();
        match &run.error {
            None => eprintln!(
                "{} {} n={}: t={} max inner iterations {}",
                config.experiment.name(),
                run.scheme.name(),
                run.nodes,
                last.time,
                run.trajectory.max_inner_iterations()
            ),
            Some(e) => eprintln!(
                "{} {} n={}: failed at t={}: {e}",
                config.experiment.name(),
                run.scheme.name(),
                run.nodes,
                last.time
            ),
        }
    }
    Ok(if report.all_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn logistic_csv(alpha: f64, beta: f64, u0: f64, t_end: f64, dt: f64) -> Result<String> {
    let series = simulate_logistic(alpha, beta, u0, t_end, dt)?;
    let mut s = String::from("t,U\n");
    for (t, u) in series.t.iter().zip(&series.values) {
        writeln!(s, "{},{}", fmt_f64(*t), fmt_f64(*u))?;
    }
    Ok(s)
}

/// Rows before the split carry only `U`; for shared coefficients the
/// logistic continuation of the total is appended for comparison.
fn split_csv(scenario: &SplitScenario, dt: f64) -> Result<String> {
    let traj = simulate_split(scenario, dt)?;
    let lv = scenario.post;
    let nd = lv.mode() == KineticsMode::NonDifferentiated;
    let mut s = String::from(if nd { "t,U1,U2,U,U_logistic\n" } else { "t,U1,U2,U\n" });
    let pre_rows = traj.pre.t.len() - 1;
    for (t, u) in traj.pre.t.iter().zip(&traj.pre.values).take(pre_rows) {
        write!(s, "{},,,{}", fmt_f64(*t), fmt_f64(*u))?;
        s.push_str(if nd { ",\n" } else { "\n" });
    }
    let continuation = if nd {
        let u_split = traj.u1[0] + traj.u2[0];
        let horizon = scenario.t_end - scenario.t_star;
        Some(simulate_logistic(lv.alpha()[0], lv.beta()[0][0], u_split, horizon, dt)?)
    } else {
        None
    };
    for k in 0..traj.t.len() {
        let (a, b) = (traj.u1[k], traj.u2[k]);
        write!(s, "{},{},{},{}", fmt_f64(traj.t[k]), fmt_f64(a), fmt_f64(b), fmt_f64(a + b))?;
        if let Some(c) = &continuation {
            write!(s, ",{}", fmt_f64(c.values[k]))?;
        }
        s.push('\n');
    }
    Ok(s)
}

fn run_ode(args: &OdeArgs) -> Result<ExitCode> {
    let csv = match &args.model {
        OdeModel::Logistic {
            alpha,
            beta,
            u0,
            t_end,
            dt,
        } => logistic_csv(*alpha, *beta, *u0, *t_end, *dt)?,
        OdeModel::Split {
            alpha_pre,
            beta_pre,
            u0,
            t_star,
            theta,
            t_end,
            dt,
            kinetics,
        } => {
            let scenario = SplitScenario {
                alpha_pre: *alpha_pre,
                beta_pre: *beta_pre,
                u0: *u0,
                t_star: *t_star,
                theta: *theta,
                post: kinetics.params()?,
                t_end: *t_end,
            };
            split_csv(&scenario, *dt)?
        }
    };
    match &args.out {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pde(args) => run_pde(args),
        Command::Ode(args) => run_ode(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crossdiff::experiment::ExperimentKind;

    #[test]
    fn parses_sweep() {
        let cli = Cli::try_parse_from([
            "crossdiff", "pde", "--experiment", "invasion", "--nodes", "101", "--nodes", "301",
            "--snapshots", "0,0.5", "--transport-form", "grad-chi",
        ])
        .unwrap();
        let Command::Pde(args) = cli.command else { panic!() };
        let c = pde_config(&args).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Invasion);
        assert_eq!(c.mesh_nodes, vec![101, 301]);
        assert_eq!(c.snapshot_times, Some(vec![0.0, 0.5]));
        assert_eq!(c.transport_form, TransportForm::GradChi);
    }

    #[test]
    fn kinetics_flags() {
        let k = KineticsArgs {
            alpha: Some(vec![1.0]),
            beta: Some(vec![1.0, 1.0, 2.0, 2.0]),
            mode: ModeArg::D,
        };
        let p = k.params().unwrap();
        assert_eq!(p.beta(), [[1.0, 1.0], [2.0, 2.0]]);
        let bad = KineticsArgs {
            alpha: Some(vec![1.0, 2.0, 3.0]),
            beta: None,
            mode: ModeArg::D,
        };
        assert!(bad.params().is_err());
    }
}

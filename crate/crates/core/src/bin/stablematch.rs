use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stablematch::error::{Error, Result};
use stablematch::harness::{
    run_experiment, run_suite, run_torus_experiment, scatter_panel, trajectory_csv,
    write_level_stats, write_records, ExperimentConfig, SuiteConfig, TorusConfig,
};
use stablematch::hierarchical::{exact_chain, mc_segments, stats, DEFAULT_N_MAX};
use stablematch::io::{write_point_dump, InstanceFile, MatchingFile};
use stablematch::matching::{stable_match_view, verify_stable};
use stablematch::models::{ConfigView, ModelFamily};
use stablematch::odes::{integrate, OdeSystem};
use stablematch::pwit::{estimate_root_probabilities, DEFAULT_NODE_CAP};

#[derive(Parser)]
#[command(
    name = "stablematch",
    version,
    about = "Stable matchings of multi-colour Poisson processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stable matching of an instance file, written as JSON.
    Match {
        input: PathBuf,
        /// JSON output (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-point CSV dump (only for files with positions).
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Torus experiment from flags or a JSON config.
    Torus(TorusArgs),
    /// PWIT root estimates at time T.
    Pwit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "T", default_value_t = 5.0)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrates the ODE system and dumps the trajectory.
    Ode {
        #[arg(long, value_enum)]
        model: Model,
        /// eps for asym, comma-separated probabilities for sym.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value_t = 20.0)]
        tmax: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Resample on a uniform grid of this step instead of the solver steps.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hierarchical model: exact recursion or Monte Carlo segments.
    Hier {
        #[command(subcommand)]
        mode: HierMode,
    },
    /// Full verification suite; exits nonzero iff a gated check fails.
    Verify {
        /// Suite config (JSON); defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
    },
    /// Matching scatter SVGs and the asymmetric (r, b) trajectory CSV.
    Figures {
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Any experiment described by a JSON config with a `kind` field.
    Run { config: PathBuf },
}

#[derive(Subcommand)]
enum HierMode {
    Exact {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long, default_value_t = 30)]
        base_depth: u32,
        /// Top level k (intervals of length 2^k).
        #[arg(long, default_value_t = 10)]
        levels: i32,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-6)]
        slack_budget: f64,
        /// Also print the levels below unit length.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Mc {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long = "K", default_value_t = 10)]
        k: u32,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    One,
    Asym,
    Sym,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated colour probabilities.
    #[arg(long)]
    probs: Option<String>,
}

impl ModelArgs {
    fn family(&self) -> Result<ModelFamily> {
        let probs = self.probs.as_deref().map(parse_list).transpose()?;
        family(self.model, self.eps, probs)
    }
}

#[derive(Args)]
struct TorusArgs {
    /// JSON torus config; the flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "asym")]
    model: Model,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    probs: Option<String>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 20.0)]
    side: f64,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    palm_reps: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// SVG of the first replicate.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Records CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("{t:?}: {e}")))
        })
        .collect()
}

fn family(model: Model, eps: Option<f64>, probs: Option<Vec<f64>>) -> Result<ModelFamily> {
    let f = match model {
        Model::One => ModelFamily::OneType,
        Model::Asym => ModelFamily::Asymmetric {
            eps: eps.ok_or_else(|| Error::InvalidParameter("asym needs --eps".into()))?,
        },
        Model::Sym => ModelFamily::Symmetric {
            probs: probs.ok_or_else(|| Error::InvalidParameter("sym needs --probs".into()))?,
        },
    };
    f.validate()?;
    Ok(f)
}

fn model_name(model: Model) -> &'static str {
    match model {
        Model::One => "one",
        Model::Asym => "asym",
        Model::Sym => "sym",
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_match(input: &Path, out: Option<&Path>, points: Option<&Path>) -> Result<()> {
    let file = InstanceFile::load(input)?;
    let ids = file.vertices.clone();
    let result = match file.point_config()? {
        Some((config, rule, metric)) => {
            let view = ConfigView::new(&config, &rule, metric)?;
            let m = stable_match_view(&view)?;
            let stable = verify_stable(&view, &m)?.is_stable();
            if let Some(p) = points {
                write_point_dump(File::create(p)?, &config, &view, &m)?;
            }
            MatchingFile::new(&ids, &m, stable)
        }
        None => {
            if points.is_some() {
                return Err(Error::InvalidParameter(
                    "--points needs an instance with positions".into(),
                ));
            }
            let instance = file.to_instance()?;
            let m = stable_match_view(&instance)?;
            let stable = verify_stable(&instance, &m)?.is_stable();
            MatchingFile::new(&ids, &m, stable)
        }
    };
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &result)?;
    writeln!(w)?;
    Ok(())
}

fn cmd_torus(a: &TorusArgs) -> Result<bool> {
    let cfg = match &a.config {
        Some(p) => serde_json::from_str::<TorusConfig>(&std::fs::read_to_string(p)?)?,
        None => {
            let probs = a.probs.as_deref().map(parse_list).transpose()?;
            let mut cfg = TorusConfig::new(family(a.model, a.eps, probs)?, a.dim, a.side);
            cfg.replicates = a.reps;
            cfg.palm_replicates = a.palm_reps;
            cfg
        }
    };
    let mut cfg = cfg;
    cfg.svg |= a.svg.is_some();
    let report = run_torus_experiment(&cfg, a.seed, a.sigma)?;
    if let (Some(p), Some(svg)) = (&a.svg, &report.svg) {
        std::fs::write(p, svg)?;
    }
    write_records(sink(a.out.as_deref())?, &report.records)?;
    Ok(report.records.iter().all(|r| !r.gated_failure()))
}

fn cmd_pwit(
    model: &ModelArgs,
    t: f64,
    reps: usize,
    seed: u64,
    node_cap: usize,
    out: Option<&Path>,
) -> Result<()> {
    let fam = model.family()?;
    let est = estimate_root_probabilities(&fam, t, &[t], reps, seed, node_cap)?;
    let names = OdeSystem::new(fam)?.component_names();
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(["model", "T", "color", "estimate", "se", "censored_fraction"])?;
    for (i, name) in names.iter().enumerate() {
        w.write_record([
            model_name(model.model).to_string(),
            t.to_string(),
            name.clone(),
            est.at_bound()[i].to_string(),
            est.se_at_bound()[i].to_string(),
            est.censored_fraction().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_ode(
    model: Model,
    params: &str,
    tmax: f64,
    tol: f64,
    step: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let values = parse_list(params)?;
    let fam = match model {
        Model::One => family(model, None, None)?,
        Model::Asym => family(model, values.first().copied(), None)?,
        Model::Sym => family(model, None, Some(values))?,
    };
    let system = OdeSystem::new(fam)?;
    let traj = integrate(&system, tmax, tol)?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    let mut header = vec!["t".to_string()];
    header.extend(system.component_names());
    w.write_record(&header)?;
    let mut row = |t: f64, y: &[f64]| -> Result<()> {
        let mut r = vec![t.to_string()];
        r.extend(y.iter().map(f64::to_string));
        w.write_record(&r)?;
        Ok(())
    };
    match step {
        Some(h) if h > 0.0 => {
            let n = (tmax / h).round() as usize;
            for i in 0..=n {
                let t = (i as f64 * h).min(tmax);
                row(t, &traj.at(t))?;
            }
        }
        Some(h) => {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {h}"
            )))
        }
        None => {
            for (t, y) in traj.times.iter().zip(&traj.states) {
                row(*t, y)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_hier(mode: &HierMode) -> Result<()> {
    match mode {
        HierMode::Exact {
            lambda,
            eps,
            base_depth,
            levels,
            n_max,
            slack_budget,
            all,
            out,
        } => {
            let chain = exact_chain(*lambda, *eps, *base_depth, *levels, *n_max, *slack_budget)?;
            let rows: Vec<_> = chain
                .iter()
                .map(stats)
                .filter(|s| *all || s.level >= 0)
                .collect();
            write_level_stats(sink(out.as_deref())?, &rows)
        }
        HierMode::Mc {
            lambda,
            eps,
            k,
            reps,
            seed,
            out,
        } => {
            let s = mc_segments(*lambda, *eps, *k, *reps, *seed)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            w.write_record(["K", "excess", "count", "frequency"])?;
            for (x, c) in &s.histogram {
                w.write_record([
                    k.to_string(),
                    x.to_string(),
                    c.to_string(),
                    (*c as f64 / s.replicates as f64).to_string(),
                ])?;
            }
            w.flush()?;
            eprintln!(
                "unmatched blue density {:.6} (se {:.2e}); recursion/matching mismatches {}; superadditivity failures {}",
                s.density, s.density_se, s.inconsistent, s.non_superadditive
            );
            Ok(())
        }
    }
}

fn cmd_verify(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<bool> {
    let mut cfg = match config {
        Some(p) => serde_json::from_str::<SuiteConfig>(&std::fs::read_to_string(p)?)?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let suite = run_suite(&cfg)?;
    for path in suite.write(out)? {
        eprintln!("wrote {}", path.display());
    }
    let failures = suite.gated_failures();
    let gated = suite.records.iter().filter(|r| r.gated).count();
    for r in &failures {
        eprintln!(
            "FAIL {} [{}] estimate {} reference {:?} tolerance {}",
            r.experiment, r.parameters, r.estimate, r.reference, r.tolerance
        );
    }
    eprintln!(
        "{} of {} gated checks passed",
        gated - failures.len(),
        gated
    );
    Ok(failures.is_empty())
}

fn cmd_figures(out: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(out)?;
    for (name, red, blue) in [
        ("scatter_2000_1000.svg", 2000, 1000),
        ("scatter_2500_500.svg", 2500, 500),
    ] {
        let (svg, unmatched) = scatter_panel(red, blue, seed, name)?;
        std::fs::write(out.join(name), svg)?;
        eprintln!(
            "{name}: unmatched red {}, blue {}",
            unmatched[0], unmatched[1]
        );
    }
    std::fs::write(
        out.join("trajectory_eps_0.25.csv"),
        trajectory_csv(0.25, 20.0, 0.05, 1e-10)?,
    )?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Match { input, out, points } => {
            cmd_match(&input, out.as_deref(), points.as_deref()).map(|_| true)
        }
        Command::Torus(a) => cmd_torus(&a),
        Command::Pwit {
            model,
            t,
            reps,
            seed,
            node_cap,
            out,
        } => cmd_pwit(&model, t, reps, seed, node_cap, out.as_deref()).map(|_| true),
        Command::Ode {
            model,
            params,
            tmax,
            tol,
            step,
            out,
        } => cmd_ode(model, &params, tmax, tol, step, out.as_deref()).map(|_| true),
        Command::Hier { mode } => cmd_hier(&mode).map(|_| true),
        Command::Verify { config, seed, out } => cmd_verify(config.as_deref(), seed, &out),
        Command::Figures { out, seed } => cmd_figures(&out, seed).map(|_| true),
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = run_experiment(&cfg)?;
            if cfg.output_dir.is_none() {
                write_records(std::io::stdout().lock(), &records)?;
            }
            Ok(records.iter().all(|r| !r.gated_failure()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use wassmix::claims::load_claims;
use wassmix::risk::risk_report;
use wassmix::sequential::{run_sequential, tune_delta, write_risk_table, write_weight_table, PenaltyMode, SequentialConfig, ZeroStyle};
use wassmix::simharness::{run_experiment, ExperimentConfig, ExperimentReport, Method, Scenario};
use wassmix::solver::solve;
use wassmix::tuning::grid_search_evaluated;
use wassmix::{empirical_quantile, EvaluatedModels, PenaltyConfig, QuantileFunction};

use crate::config::DeltaValue;
use crate::error::{CliError, Context, Result};
use crate::input::{parse_model_line, read_model_spec, read_sample, ModelSpec};
use crate::{SequentialArgs, Settings, SimulateArgs, FitArgs, RiskArgs};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|source| CliError::Io { path, source })
}

fn finish(mut w: BufWriter<File>, path: PathBuf) -> Result<PathBuf> {
    w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn output_error(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

fn experiment_config(settings: &Settings, args: &SimulateArgs) -> Result<ExperimentConfig> {
    let file = &settings.file.experiment;
    let family = args.family.clone().or_else(|| file.family.clone()).unwrap_or_else(|| "normal".into());
    let or = |flag: Option<f64>, key: Option<f64>, default: f64| flag.or(key).unwrap_or(default);
    let scenario = match family.to_ascii_lowercase().as_str() {
        "normal" => {
            let Scenario::Normal { mean, sd, c, a, b } = Scenario::normal() else { unreachable!() };
            Scenario::Normal { mean, sd, c: or(args.c, file.c, c), a: or(args.a, file.a, a), b: or(args.b, file.b, b) }
        }
        "weibull" => {
            let shape = or(args.shape, file.shape, 1.0);
            let Scenario::Weibull { scale, a1, b1, a2, b2, .. } = Scenario::weibull(shape) else { unreachable!() };
            Scenario::Weibull {
                shape,
                scale,
                a1: or(args.a1, file.a1, a1),
                b1: or(args.b1, file.b1, b1),
                a2: or(args.a2, file.a2, a2),
                b2: or(args.b2, file.b2, b2),
            }
        }
        other => return Err(CliError::usage(format!("unknown family `{other}`; expected normal or weibull"))),
    };
    let models = args.models.or(file.models).unwrap_or(5);
    let sample_size = args.sample_size.or(file.sample_size).unwrap_or(100);
    let mut config = ExperimentConfig::new(scenario, models, sample_size);
    if let Some(b) = args.replications.or(file.replications) {
        config.replications = b;
    }
    if let Some(seed) = args.seed.or(file.seed) {
        config.seed = seed;
    }
    if let Some(names) = args.methods.clone().or_else(|| file.methods.clone()) {
        config.methods = names
            .iter()
            .map(|n| Method::parse(n).map_err(|e| CliError::usage(e.to_string())))
            .collect::<Result<_>>()?;
        config.methods.sort();
        config.methods.dedup();
    }
    if let Some(folds) = args.folds.or(file.folds) {
        config.folds = folds;
    }
    config.tuning = settings.tuning_grid()?;
    config.grid = settings.grid()?;
    config.solver = settings.solver()?;
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(config)
}

#[derive(Serialize)]
struct ReportRow<'a> {
    family: &'a str,
    #[serde(rename = "J")]
    models: usize,
    n: usize,
    #[serde(rename = "B")]
    replications: usize,
    method: &'a str,
    mean_w2: f64,
    se_w2: f64,
    mean_dw: Option<f64>,
    std_dw: Option<f64>,
    mean_lambda: Option<f64>,
    mean_alpha: Option<f64>,
}

fn report_rows(report: &ExperimentReport) -> Vec<ReportRow<'_>> {
    report
        .methods
        .iter()
        .map(|m| ReportRow {
            family: &report.family,
            models: report.models,
            n: report.sample_size,
            replications: report.replications,
            method: m.method.name(),
            mean_w2: m.mean_w2,
            se_w2: m.se_w2,
            mean_dw: m.mean_dw,
            std_dw: m.std_dw,
            mean_lambda: m.mean_lambda,
            mean_alpha: m.mean_alpha,
        })
        .collect()
}

#[derive(Serialize)]
struct ReportJson<'a> {
    family: &'a str,
    #[serde(rename = "J")]
    models: usize,
    n: usize,
    #[serde(rename = "B")]
    replications: usize,
    completed: usize,
    seed: u64,
    scenario: &'a Scenario,
    folds: usize,
    grid_nodes: usize,
    trim: f64,
    lambdas: &'a [f64],
    alphas: &'a [f64],
    methods: Vec<ReportRow<'a>>,
}

pub fn simulate(settings: &Settings, args: &SimulateArgs) -> Result<()> {
    let config = experiment_config(settings, args)?;
    log::info!(
        "running {} replications of {} J={} n={}",
        config.replications,
        config.scenario.family_name(),
        config.models,
        config.sample_size
    );
    let report = run_experiment(&config).context("experiment")?;
    let dir = settings.out_dir();

    let csv_out = create(&dir, "report.csv")?;
    let mut wtr = csv::Writer::from_writer(csv_out);
    for row in report_rows(&report) {
        wtr.serialize(row).map_err(output_error)?;
    }
    let csv_out = wtr.into_inner().map_err(output_error)?;
    let csv_path = finish(csv_out, dir.join("report.csv"))?;

    let json = ReportJson {
        family: &report.family,
        models: report.models,
        n: report.sample_size,
        replications: report.replications,
        completed: report.completed,
        seed: report.seed,
        scenario: &report.scenario,
        folds: config.folds,
        grid_nodes: config.grid.len(),
        trim: config.grid.trim(),
        lambdas: config.tuning.lambdas(),
        alphas: config.tuning.alphas(),
        methods: report_rows(&report),
    };
    let mut json_out = create(&dir, "report.json")?;
    serde_json::to_writer_pretty(&mut json_out, &json).map_err(output_error)?;
    writeln!(json_out).map_err(output_error)?;
    let json_path = finish(json_out, dir.join("report.json"))?;

    for m in &report.methods {
        println!("{:<6} mean W2 {:.4} (se {:.4})", m.method.name(), m.mean_w2, m.se_w2);
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

#[derive(Serialize)]
struct WeightsJson<'a> {
    weights: &'a [f64],
    objective: f64,
    lambda: f64,
    alpha: f64,
    active_set: &'a [usize],
    iterations: usize,
    converged: bool,
}

pub fn fit(settings: &Settings, args: &FitArgs) -> Result<()> {
    let grid = settings.grid()?;
    let opts = settings.solver()?;
    let specs = read_model_spec(&args.models)?;
    let models = specs.iter().map(ModelSpec::quantile).collect::<Result<Vec<_>>>()?;
    let sample = read_sample(&args.target)?;
    let target = empirical_quantile(&sample).context(args.target.display().to_string())?;

    let evaluated = EvaluatedModels::new(&models, &grid).context("evaluating models")?;
    let target_values = evaluated.target_values(&target).context("evaluating target")?;
    let fixed = settings.fixed_penalty()?;
    let (penalty, fit) = match (settings.tune(), fixed) {
        (Some(true), _) => {
            let tuning = settings.tuning_grid()?;
            let outcome =
                grid_search_evaluated(&evaluated, &target_values, &target_values, &tuning, &opts).context("tuning")?;
            (outcome.penalty, outcome.fit)
        }
        (_, penalty) => {
            let penalty = penalty.unwrap_or_else(PenaltyConfig::pure);
            let gram = evaluated.gram(&target_values).context("gram system")?;
            (penalty, solve(&gram, &penalty, &opts).context("solver")?)
        }
    };

    let json = WeightsJson {
        weights: fit.weights.as_slice(),
        objective: fit.objective,
        lambda: penalty.lambda(),
        alpha: penalty.alpha(),
        active_set: &fit.active_set,
        iterations: fit.iterations,
        converged: fit.converged,
    };
    let dir = settings.out_dir();
    let mut out = create(&dir, "weights.json")?;
    serde_json::to_writer_pretty(&mut out, &json).map_err(output_error)?;
    writeln!(out).map_err(output_error)?;
    let path = finish(out, dir.join("weights.json"))?;
    println!("weights {:?} (lambda {}, alpha {})", fit.weights.as_slice(), penalty.lambda(), penalty.alpha());
    println!("wrote {}", path.display());
    Ok(())
}

fn sequential_config(settings: &Settings, args: &SequentialArgs) -> Result<(SequentialConfig, Option<Vec<f64>>)> {
    let file = &settings.file.sequential;
    let mut config = SequentialConfig { grid: settings.grid()?, solver: settings.solver()?, levels: settings.levels(), ..Default::default() };
    if let Some(rho) = args.rho.or(file.rho) {
        config.rho = rho;
    }
    if let Some(warmup) = args.warmup.or(file.warmup) {
        config.warmup = warmup;
    }
    config.penalty = match (settings.tune(), settings.fixed_penalty()?) {
        (Some(true), _) => PenaltyMode::Tuned(settings.tuning_grid()?),
        (_, Some(p)) => PenaltyMode::Fixed(p),
        (Some(false), None) => PenaltyMode::Fixed(PenaltyConfig::pure()),
        (None, None) => PenaltyMode::Tuned(settings.tuning_grid()?),
    };
    let delta = match &args.delta {
        Some(s) if s.eq_ignore_ascii_case("auto") => DeltaValue::Named("auto".into()),
        Some(s) => DeltaValue::Fixed(
            s.parse().map_err(|_| CliError::usage(format!("delta must be a number or `auto`, got `{s}`")))?,
        ),
        None => file.delta.clone().unwrap_or(DeltaValue::Fixed(config.delta)),
    };
    let candidates = match delta {
        DeltaValue::Fixed(d) => {
            config.delta = d;
            None
        }
        DeltaValue::Named(s) if s.eq_ignore_ascii_case("auto") => Some(
            args.delta_candidates
                .clone()
                .or_else(|| file.delta_candidates.clone())
                .unwrap_or_else(|| (0..=10).map(|i| i as f64 / 10.0).collect()),
        ),
        DeltaValue::Named(s) => return Err(CliError::usage(format!("delta must be a number or `auto`, got `{s}`"))),
    };
    if let Some(c) = &candidates {
        if c.is_empty() || c.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(CliError::usage(format!("delta candidates must lie in [0, 1]: {c:?}")));
        }
    }
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok((config, candidates))
}

pub fn sequential(settings: &Settings, args: &SequentialArgs) -> Result<()> {
    let zeros = match args.zeros.clone().or_else(|| settings.file.sequential.zeros.clone()).as_deref() {
        None | Some("blank") => ZeroStyle::Blank,
        Some("numeric") => ZeroStyle::Numeric,
        Some(other) => return Err(CliError::usage(format!("--zeros takes blank or numeric, got `{other}`"))),
    };
    let (mut config, candidates) = sequential_config(settings, args)?;
    let panel = load_claims(&args.claims).context(args.claims.display().to_string())?;
    if panel.len() < config.warmup {
        return Err(CliError::usage(format!(
            "{} has {} periods, fewer than the warmup of {}",
            args.claims.display(),
            panel.len(),
            config.warmup
        )));
    }
    if let Some(candidates) = candidates {
        config.delta = tune_delta(&panel, &candidates, &config).context("tuning delta")?;
        println!("selected delta {}", config.delta);
    }
    let run = run_sequential(&panel, &config).context("sequential run")?;

    let dir = settings.out_dir();
    let mut weights = create(&dir, "weights.csv")?;
    write_weight_table(&run, zeros, &mut weights).context("weights.csv")?;
    let weights_path = finish(weights, dir.join("weights.csv"))?;
    let mut risk = create(&dir, "risk.csv")?;
    write_risk_table(&run, &mut risk).context("risk.csv")?;
    let risk_path = finish(risk, dir.join("risk.csv"))?;

    if let Some(score) = run.mean_one_step_w2() {
        println!("mean one-step-ahead W2^2 {score:.6} over {} periods", run.records.len());
    }
    println!("wrote {} and {}", weights_path.display(), risk_path.display());
    Ok(())
}

fn risk_source(args: &RiskArgs) -> Result<QuantileFunction> {
    if let Some(path) = &args.sample {
        let sample = read_sample(path)?;
        return empirical_quantile(&sample).context(path.display().to_string());
    }
    if let Some(path) = &args.spec {
        let specs = read_model_spec(path)?;
        if specs.len() != 1 {
            return Err(CliError::usage(format!("{} lists {} models; risk needs exactly one", path.display(), specs.len())));
        }
        return specs[0].quantile();
    }
    if let Some(line) = &args.model {
        let spec = parse_model_line(line, Path::new(".")).map_err(|e| CliError::usage(format!("--model: {e}")))?;
        return spec.quantile();
    }
    Err(CliError::usage("risk needs one of --sample, --spec or --model"))
}

pub fn risk(settings: &Settings, args: &RiskArgs) -> Result<()> {
    let levels = settings.levels();
    let grid = settings.grid()?;
    let q = risk_source(args)?;
    let report = risk_report(&q, &levels, &grid).context("risk")?;

    let dir = settings.out_dir();
    let out = create(&dir, "risk.csv")?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["level", "var", "es"]).map_err(output_error)?;
    for (level, var, es) in report.rows() {
        wtr.write_record([level.to_string(), var.to_string(), es.to_string()]).map_err(output_error)?;
        println!("level {level}: VaR {var:.6} ES {es:.6}");
    }
    let out = wtr.into_inner().map_err(output_error)?;
    let path = finish(out, dir.join("risk.csv"))?;
    println!("wrote {}", path.display());
    Ok(())
}

//! `liouville`: samples fields and measures, computes distances and runs the
//! statistical experiments, writing CSV/JSON artifacts and a run manifest.
//!
//! Exit codes: 0 on success, 2 when a statistical verdict is inconclusive,
//! 1 on errors (including usage errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use liouville_core::config::{config_to_toml, load_config_bytes};
use liouville_core::distance::{count_distance, crossing_distance, modified_distance, CrossingMode};
use liouville_core::experiments::{self as exp, ExperimentConfig, ScaleSetup, Verdict};
use liouville_core::field::sample_dgff;
use liouville_core::io::{chain_balls, write_csv, write_field, write_json, write_measure, DistanceRecord, RunManifest};
use liouville_core::measure::cell_measures;
use liouville_core::oracle;
use liouville_core::{Error, GridSpec, Point, Result};

/// Default output directory when `--out` is not given.
const OUT_ENV: &str = "LIOUVILLE_OUT";

#[derive(Parser, Debug)]
#[command(name = "liouville", version, about = "Liouville graph distance on the discrete Gaussian free field")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated box sizes (overrides `scales`).
    #[arg(long, global = true, value_delimiter = ',')]
    scale_ladder: Option<Vec<usize>>,
    /// Samples per scale (overrides `samples`).
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a discrete GFF on a padded box.
    SampleField(BoxArgs),
    /// Sample a field and write its LQG cell masses.
    Measure(BoxArgs),
    /// Distance between two points, or a crossing distance, in one sample.
    Distance(DistanceArgs),
    /// Run a named statistical experiment.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
    },
    /// Check the fast distances and the comparison inequalities exactly.
    OracleCheck {
        /// Random instances per check.
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
}

#[derive(Args, Debug, Serialize)]
struct BoxArgs {
    /// Inner box width in cells.
    #[arg(long, default_value_t = 64)]
    width: usize,
    /// Inner box height in cells.
    #[arg(long, default_value_t = 32)]
    height: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DistanceKind {
    /// Ball count between two points.
    Count,
    /// Weighted distance between two points.
    Modified,
    /// Between the short sides of the box.
    Hard,
    /// Between the long sides of the box.
    Easy,
}

#[derive(Args, Debug, Serialize)]
struct DistanceArgs {
    #[arg(long, value_enum, default_value = "hard")]
    kind: DistanceKind,
    /// Start point `x,y` in box coordinates (point kinds only).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    from: Option<Vec<f64>>,
    /// End point `x,y` in box coordinates (point kinds only).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    to: Option<Vec<f64>>,
    /// Mass threshold (default: first configured threshold).
    #[arg(long)]
    delta: Option<f64>,
    /// Sample index at the first scale.
    #[arg(long, default_value_t = 0)]
    sample: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum ExperimentName {
    Quantiles,
    QDelta,
    Rsw,
    Logvar,
    Chi,
    Diameter,
    Scaling,
    EfronStein,
    EfronSteinLinear,
    Holder,
    CircleSlope,
    GibbsMarkov,
    MeasureConvergence,
}

/// A finished command: its verdict and the files it wrote.
struct Outcome {
    verdict: Verdict,
    outputs: Vec<PathBuf>,
    /// Raised after the manifest is written, so the artifacts keep theirs.
    failure: Option<Error>,
}

impl Outcome {
    fn pass(outputs: Vec<PathBuf>) -> Self {
        Self {
            verdict: Verdict::Pass,
            outputs,
            failure: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Verdict::Inconclusive) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, Vec<u8>)> {
    let (mut cfg, bytes) = match &common.config {
        Some(p) => load_config_bytes(p)?,
        None => {
            let cfg = ExperimentConfig::default();
            let bytes = config_to_toml(&cfg).into_bytes();
            (cfg, bytes)
        }
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(l) = &common.scale_ladder {
        cfg.scales = l.clone();
    }
    if let Some(n) = common.samples {
        cfg.samples = n;
    }
    cfg.validate()?;
    Ok((cfg, bytes))
}

fn run(cli: Cli) -> Result<Verdict> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::param("threads", e.to_string()))?;
    }
    let (cfg, bytes) = load(&cli.common)?;
    let out = cli.common.out.clone();
    let (name, params) = match &cli.command {
        Command::SampleField(b) => ("sample-field".to_string(), json!(b)),
        Command::Measure(b) => ("measure".to_string(), json!(b)),
        Command::Distance(d) => ("distance".to_string(), json!(d)),
        Command::Experiment { name } => (format!("experiment {}", experiment_name(*name)), json!({})),
        Command::OracleCheck { instances } => ("oracle-check".to_string(), json!({ "instances": instances })),
    };
    let mut manifest = RunManifest::start(
        &name,
        &bytes,
        cfg.seed,
        json!({ "config": serde_json::to_value(&cfg).map_err(|e| Error::Io(e.to_string()))?, "command": params }),
    );
    let outcome = match &cli.command {
        Command::SampleField(b) => sample_field(&cfg, b, &out)?,
        Command::Measure(b) => measure(&cfg, b, &out)?,
        Command::Distance(d) => distance(&cfg, d, &out)?,
        Command::Experiment { name } => experiment(&cfg, *name, &out)?,
        Command::OracleCheck { instances } => oracle_check(&cfg, *instances, &out)?,
    };
    for p in &outcome.outputs {
        manifest.add_output(p);
    }
    let path = manifest.finish(&out)?;
    println!("verdict: {:?}", outcome.verdict);
    println!("manifest: {}", path.display());
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(outcome.verdict),
    }
}

fn experiment_name(n: ExperimentName) -> String {
    n.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn box_spec(cfg: &ExperimentConfig, b: &BoxArgs) -> Result<GridSpec> {
    GridSpec::with_padding(b.width, b.height, cfg.cell_size, cfg.padding_factor)
}

fn sample_field(cfg: &ExperimentConfig, b: &BoxArgs, out: &Path) -> Result<Outcome> {
    let field = sample_dgff(&box_spec(cfg, b)?, cfg.seed)?;
    Ok(Outcome::pass(write_field(&out.join("field.bin"), &field)?))
}

fn measure(cfg: &ExperimentConfig, b: &BoxArgs, out: &Path) -> Result<Outcome> {
    let field = sample_dgff(&box_spec(cfg, b)?, cfg.seed)?;
    let m = cell_measures(&field, cfg.gamma, cfg.epsilon_cells * cfg.cell_size)?;
    Ok(Outcome::pass(write_measure(&out.join("measure.bin"), &m)?))
}

fn point(v: &Option<Vec<f64>>, name: &str) -> Result<Point> {
    match v.as_deref() {
        Some([x, y]) => Ok(Point::new(*x, *y)),
        _ => Err(Error::param(name, "expected `x,y`")),
    }
}

fn distance(cfg: &ExperimentConfig, d: &DistanceArgs, out: &Path) -> Result<Outcome> {
    let setup = ScaleSetup::new(cfg, cfg.scales[0])?;
    let cat = setup.instance(d.sample)?;
    let delta = d.delta.unwrap_or(cfg.delta());
    let r = setup.r_cap();
    let result = match d.kind {
        DistanceKind::Count => count_distance(&cat, delta, point(&d.from, "from")?, point(&d.to, "to")?)?,
        DistanceKind::Modified => modified_distance(&cat, delta, r, point(&d.from, "from")?, point(&d.to, "to")?)?,
        DistanceKind::Hard => crossing_distance(&cat, delta, r, CrossingMode::Hard)?,
        DistanceKind::Easy => crossing_distance(&cat, delta, r, CrossingMode::Easy)?,
    };
    let params = json!({
        "kind": d.kind,
        "scale": setup.scale,
        "sample": d.sample,
        "seed": setup.sample_seed(d.sample),
        "delta": delta,
        "r_cap": r,
        "from": d.from,
        "to": d.to,
    });
    let json_path = out.join("distance.json");
    write_json(&json_path, &DistanceRecord::new(&result, params))?;
    let chain_path = out.join("chain.csv");
    write_csv(&chain_path, &chain_balls(&cat, &result.chain))?;
    match result.reached {
        true => println!("distance: {}", result.value),
        false => println!("distance: unreachable"),
    }
    Ok(Outcome::pass(vec![json_path, chain_path]))
}

/// Writes the report JSON and returns its verdict.
fn report<T: Serialize>(out: &Path, name: &str, value: &T, verdict: Verdict, mut outputs: Vec<PathBuf>) -> Result<Outcome> {
    let path = out.join(format!("{name}.json"));
    write_json(&path, value)?;
    outputs.push(path);
    Ok(Outcome {
        verdict,
        outputs,
        failure: None,
    })
}

fn experiment(cfg: &ExperimentConfig, name: ExperimentName, out: &Path) -> Result<Outcome> {
    use ExperimentName as E;
    let crossings = |out: &Path| -> Result<(Vec<exp::CrossingRecord>, PathBuf)> {
        let records = exp::run_crossings(cfg)?;
        let path = out.join("crossings.csv");
        write_csv(&path, &records)?;
        Ok((records, path))
    };
    match name {
        E::Quantiles => {
            let (records, csv) = crossings(out)?;
            let table = exp::QuantileTable::from_records(cfg, &records);
            report(out, "quantiles", &table, Verdict::Pass, vec![csv])
        }
        E::QDelta => {
            let (records, csv) = crossings(out)?;
            let r = exp::q_delta_scan(cfg, &records)?;
            report(out, "q_delta", &r, r.verdict, vec![csv])
        }
        E::Rsw => {
            let (records, csv) = crossings(out)?;
            let r = exp::rsw_ratio(cfg, &records)?;
            report(out, "rsw", &r, r.verdict, vec![csv])
        }
        E::Logvar => {
            let (records, csv) = crossings(out)?;
            let r = exp::logvar_scan(cfg, &records)?;
            report(out, "logvar", &r, r.verdict, vec![csv])
        }
        E::Chi => {
            let (records, csv) = crossings(out)?;
            let r = exp::chi_estimate(cfg, &records)?;
            report(out, "chi", &r, r.verdict, vec![csv])
        }
        E::Diameter => {
            let r = exp::diameter_ratio(cfg)?;
            let csv = out.join("diameter.csv");
            write_csv(&csv, &r.records)?;
            report(out, "diameter", &r, r.verdict, vec![csv])
        }
        E::Scaling => {
            let r = exp::scaling_covariance_test(cfg)?;
            report(out, "scaling", &r, r.verdict, vec![])
        }
        E::EfronStein | E::EfronSteinLinear => {
            let r = if name == E::EfronStein {
                exp::efron_stein_decomposition(cfg)?
            } else {
                exp::efron_stein_linear(cfg)?
            };
            let csv = out.join("efron_stein.csv");
            write_csv(&csv, &r.records)?;
            report(out, "efron_stein", &r, r.verdict, vec![csv])
        }
        E::Holder => {
            let r = exp::holder_scan(cfg)?;
            let csv = out.join("holder.csv");
            write_csv(&csv, &r.samples)?;
            report(out, "holder", &r, r.verdict, vec![csv])
        }
        E::CircleSlope => {
            let r = exp::circle_slope(cfg, cfg.scales[0], cfg.samples, &[4.0, 8.0, 16.0, 32.0])?;
            report(out, "circle_slope", &r, r.verdict, vec![])
        }
        E::GibbsMarkov => {
            let grid = cfg.scales[0];
            let r = exp::gibbs_markov_check(cfg, grid, grid / 4, cfg.samples)?;
            report(out, "gibbs_markov", &r, r.verdict, vec![])
        }
        E::MeasureConvergence => {
            let r = exp::measure_convergence(cfg, cfg.scales[0], cfg.samples)?;
            report(out, "measure_convergence", &r, r.verdict, vec![])
        }
    }
}

#[derive(Serialize)]
struct OracleReport {
    equivalence: Vec<oracle::CheckResult>,
    comparisons: Vec<oracle::CheckResult>,
    count_vs_modified: oracle::CountVsModified,
}

fn oracle_check(cfg: &ExperimentConfig, instances: usize, out: &Path) -> Result<Outcome> {
    if instances == 0 {
        return Err(Error::param("instances", "must be at least 1"));
    }
    let r = OracleReport {
        equivalence: oracle::oracle_equivalence(instances, cfg.seed)?,
        comparisons: oracle::comparison_suite(instances, cfg.seed)?,
        count_vs_modified: oracle::count_vs_modified(instances, cfg.seed)?,
    };
    for c in r.equivalence.iter().chain(&r.comparisons) {
        println!("{}: {} violations in {} instances", c.name, c.violations, c.instances);
    }
    let cm = &r.count_vs_modified;
    println!(
        "count vs modified: {} lower violations, slack violation rate {:.3}",
        cm.lower_violations, cm.slack_violation_rate
    );
    let ok = r.equivalence.iter().chain(&r.comparisons).all(|c| c.passed()) && cm.lower_violations == 0;
    let mut o = report(out, "oracle", &r, Verdict::Pass, vec![])?;
    if !ok {
        o.failure = Some(Error::param("oracle-check", "an exact property was violated; see oracle.json"));
    }
    Ok(o)
}

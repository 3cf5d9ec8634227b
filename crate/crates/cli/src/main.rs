use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use samlab::affine::{irrationality_condition, lyapunov, validate, DiagonalIFS, IfsSpec, Irrationality};
use samlab::bundle;
use samlab::dynamics::{equidistribution_trace, ergodicity_diagnostic, Roof, Suspension};
use samlab::estimators::{
    entropy_dimension, local_entropy_averages, product_structure_test, sample_level_cap, theta_grid,
    uniform_projection_entropy, verify_main_theorem, DimEstimate, LeaConfig, LeaOptions, ProductOptions, Target,
    UniformityOptions, VerifyConfig,
};
use samlab::measures::{sample, ConditionedOptions, CylinderMeasure, Projection};
use samlab::rational::parse_q;
use samlab::slices::{dimension_conservation_check, slice_conditioned};
use samlab::symbolic::SymbolSeq;
use samlab::Error;

#[derive(Parser)]
#[command(name = "samlab", version, about = "Experiments on diagonal self-affine measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Recorded in the manifest; runs are single-threaded.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(rename_all = "kebab-case")]
enum Command {
    Validate,
    Lyapunov,
    Irrationality,
    Dim,
    Verify,
    Lea,
    Product,
    Equidist,
    Uniformproj,
    Diagnose,
    Conserve,
    BundleList,
    /// Re-run the manifest given by --config and compare output hashes.
    Replay,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Lyapunov => "lyapunov",
            Command::Irrationality => "irrationality",
            Command::Dim => "dim",
            Command::Verify => "verify",
            Command::Lea => "lea",
            Command::Product => "product",
            Command::Equidist => "equidist",
            Command::Uniformproj => "uniformproj",
            Command::Diagnose => "diagnose",
            Command::Conserve => "conserve",
            Command::BundleList => "bundle-list",
            Command::Replay => "replay",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Experiment(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut root = &e;
        while let Error::At { source, .. } = root {
            root = source;
        }
        match root {
            Error::Parse(_) | Error::Validation { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Experiment(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Experiment(format!("{}: {e}", path.display()))
}

#[derive(Debug, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct Config {
    ifs: Option<IfsSpec>,
    bundle: Option<String>,
    dim: DimCfg,
    verify: VerifyCfg,
    lea: LeaCfg,
    product: ProductCfg,
    equidist: EquidistCfg,
    uniformproj: UniformCfg,
    diagnose: DiagnoseCfg,
    conserve: ConserveCfg,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DimCfg {
    /// mu, x, y, proj:θ or slice.
    target: String,
    method: String,
    levels: Option<[u32; 2]>,
    samples: usize,
    slice_level: u32,
}

impl Default for DimCfg {
    fn default() -> Self {
        Self { target: "mu".into(), method: "exact".into(), levels: None, samples: 1 << 20, slice_level: 10 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LeaBlock {
    #[serde(rename = "N")]
    big_n: u32,
    n: u32,
    trials: usize,
    samples: usize,
}

impl Default for LeaBlock {
    fn default() -> Self {
        let d = LeaConfig::default();
        Self { big_n: d.big_n, n: d.n, trials: d.trials, samples: d.opts.samples }
    }
}

impl LeaBlock {
    fn config(&self) -> LeaConfig {
        LeaConfig {
            big_n: self.big_n,
            n: self.n,
            trials: self.trials,
            opts: LeaOptions {
                samples: self.samples,
                conditioned: ConditionedOptions { particles: self.samples.min(1 << 17), ..ConditionedOptions::default() },
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VerifyCfg {
    thetas: Vec<Value>,
    mu_levels: [u32; 2],
    proj_samples: usize,
    tolerance: f64,
    lea: Option<LeaBlock>,
}

impl Default for VerifyCfg {
    fn default() -> Self {
        let d = VerifyConfig::default();
        Self {
            thetas: ["-2", "-1", "0", "1", "2"].iter().map(|s| Value::from(*s)).collect(),
            mu_levels: [d.mu_levels.0, d.mu_levels.1],
            proj_samples: d.proj_samples,
            tolerance: d.tolerance,
            lea: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LeaCfg {
    thetas: Vec<Value>,
    #[serde(flatten)]
    block: LeaBlock,
}

impl Default for LeaCfg {
    fn default() -> Self {
        Self { thetas: vec![Value::from("0")], block: LeaBlock::default() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProductCfg {
    #[serde(rename = "N")]
    big_n: u32,
    n_list: Vec<u32>,
    trials: usize,
    samples: usize,
}

impl Default for ProductCfg {
    fn default() -> Self {
        Self { big_n: 2, n_list: vec![4, 10], trials: 5, samples: ProductOptions::default().samples }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EquidistCfg {
    #[serde(rename = "N")]
    big_n: usize,
    depth: usize,
    m: usize,
}

impl Default for EquidistCfg {
    fn default() -> Self {
        Self { big_n: 1, depth: 3, m: 100_000 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct UniformCfg {
    #[serde(rename = "M")]
    big_m: f64,
    #[serde(rename = "N")]
    big_n: u32,
    bases: usize,
    samples: usize,
    slice_level: u32,
    mu_levels: [u32; 2],
    tolerance: f64,
}

impl Default for UniformCfg {
    fn default() -> Self {
        let o = UniformityOptions::default();
        Self { big_m: 2.0, big_n: 10, bases: 4, samples: o.samples, slice_level: o.slice_level, mu_levels: [6, 12], tolerance: 0.1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DiagnoseCfg {
    beta: String,
    trials: usize,
    horizon: usize,
    /// "z" (roof −log₂|λ₂|) or "w" (roof −log₂|λ₁|).
    roof: String,
}

impl Default for DiagnoseCfg {
    fn default() -> Self {
        Self { beta: "1".into(), trials: 8, horizon: 100_000, roof: "z".into() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConserveCfg {
    trials: usize,
    #[serde(rename = "L")]
    level: u32,
    n: u32,
    samples: usize,
}

impl Default for ConserveCfg {
    fn default() -> Self {
        Self { trials: 4, level: 10, n: 10, samples: 100_000 }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    command: Command,
    seed: u64,
    threads: Option<usize>,
    config_hash: String,
    config: Value,
    outputs: Vec<OutputEntry>,
    wall_time_ms: u128,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Collects CSV tables, appending the config hash to every row.
struct Outputs {
    dir: PathBuf,
    hash: String,
    files: Vec<OutputEntry>,
}

impl Outputs {
    fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> Res<()> {
        let mut s = format!("{header},config_hash\n");
        for r in rows {
            s.push_str(r);
            s.push(',');
            s.push_str(&self.hash);
            s.push('\n');
        }
        self.write(&format!("{name}.csv"), s)
    }

    /// Plot-ready `level,value` series.
    fn series(&mut self, name: &str, points: &[(String, f64)]) -> Res<()> {
        let mut s = String::from("level,value\n");
        for (l, v) in points {
            s.push_str(&format!("{l},{v:.9}\n"));
        }
        self.write(&format!("{name}_series.dat"), s)
    }

    fn write(&mut self, file: &str, content: String) -> Res<()> {
        let path = self.dir.join(file);
        fs::write(&path, &content).map_err(|e| io_err(&path, e))?;
        self.files.push(OutputEntry { file: file.to_string(), sha256: sha256(content.as_bytes()) });
        Ok(())
    }
}

fn parse_config(text: &str) -> Res<Config> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Failure::Validation(format!("config: {e}")))?;
    // A bare IFS file is accepted as a config with only the system.
    let cfg = if value.get("maps").is_some() {
        let spec: IfsSpec = serde_json::from_value(value.clone()).map_err(|e| Failure::Validation(format!("config: {e}")))?;
        Config { ifs: Some(spec), ..Config::default() }
    } else {
        serde_json::from_value(value.clone()).map_err(|e| Failure::Validation(format!("config: {e}")))?
    };
    Ok(cfg)
}

fn system(cfg: &Config) -> Res<DiagonalIFS> {
    match (&cfg.ifs, &cfg.bundle) {
        (Some(spec), None) => Ok(spec.build()?),
        (None, Some(name)) => Ok(bundle::get(name)?),
        _ => Err(Failure::Validation("config needs exactly one of \"ifs\" and \"bundle\"".into())),
    }
}

fn system_spec(cfg: &Config) -> Res<IfsSpec> {
    match (&cfg.ifs, &cfg.bundle) {
        (Some(spec), None) => Ok(spec.clone()),
        (None, Some(name)) => Ok(bundle::find(name)?.spec()),
        _ => Err(Failure::Validation("config needs exactly one of \"ifs\" and \"bundle\"".into())),
    }
}

fn targets(values: &[Value]) -> Res<Vec<Target>> {
    values
        .iter()
        .map(|v| match v {
            Value::String(s) => Ok(s.parse::<Target>()?),
            Value::Number(n) => Ok(Target::Theta(n.as_f64().unwrap_or(f64::NAN))),
            other => Err(Failure::Validation(format!("bad projection target {other}"))),
        })
        .collect()
}

fn dim_rows(d: &DimEstimate) -> Vec<String> {
    d.levels.iter().map(|r| r.csv_row()).collect()
}

fn run(command: Command, cfg: &Config, seed: u64, out: &mut Outputs) -> Res<()> {
    match command {
        Command::Validate => {
            let r = validate(&system_spec(cfg)?)?;
            println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
            let row = format!(
                "{},{},{},{},{},{},{},{}",
                r.maps, r.contractive, r.weights_normalized, r.hull[0][0], r.hull[0][1], r.hull[1][0], r.hull[1][1], r.inside_unit_square
            );
            out.csv("validate", "maps,contractive,weights_normalized,hull_x_lo,hull_x_hi,hull_y_lo,hull_y_hi,inside_unit_square", &[row])
        }
        Command::Lyapunov => {
            let l = lyapunov(&system(cfg)?);
            println!("λ₁^μ = {:.9}  λ₂^μ = {:.9}  {}", l.lambda1_mu, l.lambda2_mu, l.regime);
            out.csv("lyapunov", "lambda1_mu,lambda2_mu,regime", &[format!("{:.12},{:.12},{}", l.lambda1_mu, l.lambda2_mu, l.regime)])
        }
        Command::Irrationality => {
            let row = match irrationality_condition(&system(cfg)?)? {
                Irrationality::Satisfied(w) => {
                    format!("SATISFIED,{},{},{},{},{},{}", w.s, w.i, w.t, w.j, w.lambda_si, w.lambda_tj)
                }
                Irrationality::Violated => "VIOLATED,,,,,,".to_string(),
            };
            println!("{}", row.split(',').next().unwrap_or_default());
            out.csv("irrationality", "status,s,i,t,j,lambda_si,lambda_tj", &[row])
        }
        Command::Dim => {
            let ifs = system(cfg)?;
            let c = &cfg.dim;
            let exact = match c.method.as_str() {
                "exact" => true,
                "sample" => false,
                m => return Err(Failure::Validation(format!("dim.method must be exact or sample, got {m:?}"))),
            };
            let cap = sample_level_cap(c.samples);
            let [lo, hi] = c.levels.unwrap_or(if exact && c.target != "slice" { [6, 14] } else { [4, cap] });
            let target = c.target.as_str();
            let d = if target == "slice" {
                let base = SymbolSeq::sampled(ifs.weights(), seed);
                let s = slice_conditioned(&ifs, &base, c.slice_level, c.samples, seed)?;
                entropy_dimension(&s.measure, lo, hi)?
            } else {
                let t = match target {
                    "mu" => None,
                    "x" => Some(Target::X),
                    "y" => Some(Target::Y),
                    p => match p.strip_prefix("proj:") {
                        Some(th) => match th.parse::<Target>()? {
                            Target::Theta(v) => Some(Target::Theta(v)),
                            _ => return Err(Failure::Validation("proj:θ needs a finite θ; use x or y for the axes".into())),
                        },
                        None => return Err(Failure::Validation(format!("unknown dim target {p:?}"))),
                    },
                };
                if exact {
                    let proj = match t {
                        None => Projection::Plane,
                        Some(Target::X) => Projection::Axis(0),
                        Some(Target::Y) => Projection::Axis(1),
                        Some(Target::Theta(v)) => Projection::Theta(v),
                    };
                    entropy_dimension(&CylinderMeasure::projected(&ifs, proj), lo, hi)?
                } else {
                    let pool = sample(&ifs, c.samples, seed)?;
                    match t {
                        None => entropy_dimension(&pool, lo, hi)?,
                        Some(t) => entropy_dimension(&t.apply(&pool)?, lo, hi)?,
                    }
                }
            };
            println!("{target}: slope {:.6} ± {:.6} over [{lo}, {hi}]", d.slope, d.stderr);
            out.csv("dim", DimEstimate::CSV_HEADER, &dim_rows(&d))?;
            out.csv(
                "dim_summary",
                "target,slope,stderr,n_min,n_max",
                &[format!("{target},{:.9},{:.9},{lo},{hi}", d.slope, d.stderr)],
            )?;
            out.series("dim", &d.series().iter().map(|(n, h)| (n.to_string(), *h)).collect::<Vec<_>>())
        }
        Command::Verify => {
            let ifs = system(cfg)?;
            let c = &cfg.verify;
            let vc = VerifyConfig {
                mu_levels: (c.mu_levels[0], c.mu_levels[1]),
                proj_samples: c.proj_samples,
                tolerance: c.tolerance,
                lea: c.lea.as_ref().map(LeaBlock::config),
                seed,
            };
            let t = verify_main_theorem(&ifs, &targets(&c.thetas)?, &vc)?;
            for r in &t.rows {
                println!("θ={:<6} dim_proj {:.4}  min1 {:.4}  {}", r.target, r.dim_proj, r.min1, r.verdict);
            }
            out.csv("verify", samlab::estimators::VerdictTable::CSV_HEADER, &t.csv_rows())?;
            out.series("verify", &t.rows.iter().map(|r| (r.target.clone(), r.defect)).collect::<Vec<_>>())
        }
        Command::Lea => {
            let ifs = system(cfg)?;
            let l = cfg.lea.block.config();
            let rs = local_entropy_averages(&ifs, &targets(&cfg.lea.thetas)?, l.big_n, l.n, l.trials, seed, l.opts)?;
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for r in &rs {
                println!("θ={} average {:.6}", r.target, r.average);
                rows.extend(r.csv_rows());
                summary.push(format!("{},{},{},{},{:.9},{},{}", r.target, r.big_n, r.n, r.trials, r.average, r.regime, r.irrationality));
            }
            out.csv("lea", samlab::estimators::LEAReport::CSV_HEADER, &rows)?;
            out.csv("lea_summary", "theta,N,n,trials,average,regime,irrationality", &summary)?;
            let series: Vec<(String, f64)> =
                rs.first().map(|r| r.components.iter().enumerate().map(|(k, c)| ((k + 1).to_string(), *c)).collect()).unwrap_or_default();
            out.series("lea", &series)
        }
        Command::Product => {
            let ifs = system(cfg)?;
            let c = &cfg.product;
            let opts = ProductOptions { samples: c.samples, ..ProductOptions::default() };
            let t = product_structure_test(&ifs, c.big_n, &c.n_list, c.trials, seed, opts)?;
            for (n, m) in &t.medians {
                println!("n={n} median W1 {m:.6}");
            }
            out.csv("product", samlab::estimators::ProductTable::CSV_HEADER, &t.csv_rows())?;
            out.series("product", &t.medians.iter().map(|(n, m)| (n.to_string(), *m)).collect::<Vec<_>>())
        }
        Command::Equidist => {
            let ifs = system(cfg)?;
            let c = &cfg.equidist;
            let s = SymbolSeq::sampled(ifs.weights(), seed);
            let t = equidistribution_trace(&s, c.big_n, c.depth, c.m, &ifs)?;
            println!("TV gap {:.6}", t.tv_gap);
            out.csv("equidist", samlab::dynamics::EquidistTable::CSV_HEADER, &t.csv_rows())?;
            out.csv("equidist_summary", "N,depth,m,tv_gap", &[format!("{},{},{},{:.9}", c.big_n, c.depth, c.m, t.tv_gap)])?;
            let series: Vec<(String, f64)> = t.freq.iter().enumerate().map(|(i, f)| (i.to_string(), *f)).collect();
            out.series("equidist", &series)
        }
        Command::Uniformproj => {
            let ifs = system(cfg)?;
            let c = &cfg.uniformproj;
            let grid = theta_grid(c.big_m, c.big_n);
            let opts = UniformityOptions { samples: c.samples, slice_level: c.slice_level };
            let r = uniform_projection_entropy(&ifs, &grid, c.big_n, c.bases, seed, opts)?;
            let dim_mu = entropy_dimension(&CylinderMeasure::new(&ifs), c.mu_levels[0], c.mu_levels[1])?.slope;
            let floor = dim_mu.min(1.0) - c.tolerance;
            println!("min {:.6} at θ={} (floor {:.6}); max |ΔH_N| {:.6} bits", r.min, r.argmin, floor, r.max_jump);
            out.csv("uniformproj", samlab::estimators::UniformityReport::CSV_HEADER, &r.csv_rows())?;
            out.csv(
                "uniformproj_summary",
                "N,M,bases,min,argmin,max_jump,dim_mu,floor,pass",
                &[format!(
                    "{},{},{},{:.9},{},{:.9},{:.9},{:.9},{}",
                    c.big_n,
                    c.big_m,
                    c.bases,
                    r.min,
                    r.argmin,
                    r.max_jump,
                    dim_mu,
                    floor,
                    r.min >= floor && r.max_jump <= 1.0 + c.tolerance
                )],
            )?;
            out.series("uniformproj", &r.thetas.iter().zip(&r.values).map(|(t, v)| (t.to_string(), *v)).collect::<Vec<_>>())
        }
        Command::Diagnose => {
            let ifs = system(cfg)?;
            let c = &cfg.diagnose;
            let roof = match c.roof.as_str() {
                "z" => Roof::NegLogLambda2,
                "w" => Roof::NegLogLambda1,
                r => return Err(Failure::Validation(format!("diagnose.roof must be z or w, got {r:?}"))),
            };
            let beta = parse_q(&c.beta)?;
            let r = ergodicity_diagnostic(&Suspension::new(&ifs, roof), &beta, c.trials, c.horizon, seed)?;
            println!("spread {:.6}  rational lock {}", r.spread, r.rational_lock);
            out.csv("diagnose", samlab::dynamics::DiagnosticReport::CSV_HEADER, &[r.csv_row()])
        }
        Command::Conserve => {
            let ifs = system(cfg)?;
            let c = &cfg.conserve;
            let r = dimension_conservation_check(&ifs, c.trials, c.level, c.n, c.samples, seed)?;
            println!("dim μ {:.4}  dim π_xμ {:.4}  mean slice {:.4}  defect {:.4}", r.dim2d, r.dimx, r.mean_slice, r.defect);
            out.csv("conserve", samlab::slices::ConservationReport::CSV_HEADER, &r.csv_rows())?;
            out.series("conserve", &r.rows.iter().map(|x| (x.trial.to_string(), x.dimslice)).collect::<Vec<_>>())
        }
        Command::BundleList | Command::Replay => unreachable!("handled before dispatch"),
    }
}

fn bundle_list() {
    for b in bundle::SYSTEMS {
        println!("{:<10} {}", b.name, b.description);
    }
}

fn execute(command: Command, text: &str, seed: u64, threads: Option<usize>, dir: &Path) -> Res<RunManifest> {
    let start = Instant::now();
    let cfg = parse_config(text)?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let hash = sha256(format!("{}\n{}\n{}", text, command.name(), seed).as_bytes())[..16].to_string();
    let mut out = Outputs { dir: dir.to_path_buf(), hash: hash.clone(), files: Vec::new() };
    run(command, &cfg, seed, &mut out)?;
    let manifest = RunManifest {
        tool: "samlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed,
        threads,
        config_hash: hash,
        config: Value::String(text.to_string()),
        outputs: out.files,
        wall_time_ms: start.elapsed().as_millis(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("serializable")).map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

fn replay(manifest_path: &Path, dir: &Path) -> Res<()> {
    let text = fs::read_to_string(manifest_path).map_err(|e| io_err(manifest_path, e))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("manifest: {e}")))?;
    let config = m.config.as_str().ok_or_else(|| Failure::Validation("manifest config must be a string".into()))?;
    let again = execute(m.command, config, m.seed, m.threads, dir)?;
    let mut same = m.outputs.len() == again.outputs.len();
    for (a, b) in m.outputs.iter().zip(&again.outputs) {
        let ok = a.file == b.file && a.sha256 == b.sha256;
        println!("{} {}", if ok { "IDENTICAL" } else { "DIFFERS" }, a.file);
        same &= ok;
    }
    if same {
        Ok(())
    } else {
        Err(Failure::Experiment("replayed outputs differ from the manifest".into()))
    }
}

fn main_inner(cli: Cli) -> Res<()> {
    if cli.command == Command::BundleList {
        bundle_list();
        return Ok(());
    }
    let config = cli.config.ok_or_else(|| Failure::Validation("--config is required".into()))?;
    let out = cli.out.ok_or_else(|| Failure::Validation("--out is required".into()))?;
    if cli.command == Command::Replay {
        return replay(&config, &out);
    }
    let seed = cli.seed.ok_or_else(|| Failure::Validation("--seed is required".into()))?;
    let text = fs::read_to_string(&config).map_err(|e| Failure::Validation(format!("{}: {e}", config.display())))?;
    execute(cli.command, &text, seed, cli.threads, &out).map(|_| ())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Experiment(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

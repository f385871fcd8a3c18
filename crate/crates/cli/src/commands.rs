use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pushpull::counterexample::{counterexample_mdp, verify_all};
use pushpull::evaluation::simulate;
use pushpull::exact::uniform_start;
use pushpull::generator::{generate_suite, manifest, GeneratorSpec, SuiteInstance, SuiteManifest};
use pushpull::sweep::{run_sweep, solve_method, Method, SweepConfig};
use pushpull::{Mdp, SolveConfig};

use crate::GlobalArgs;

/// Schema of the Peak-AoI histogram CSV.
pub const HIST_SCHEMA_VERSION: u32 = 1;

const DEFAULT_T_MAX: usize = 12;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(g: &GlobalArgs) -> Result<&Path> {
    fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    Ok(&g.out)
}

fn generator_spec(g: &GlobalArgs) -> Result<GeneratorSpec> {
    let mut spec = match &g.config {
        Some(path) => read_json(path)?,
        None if g.paper_scale => GeneratorSpec::default(),
        None => GeneratorSpec::desk_scale(),
    };
    if let Some(seed) = g.seed {
        spec.seed = seed;
    }
    if let Some(gamma) = g.gamma {
        spec.gamma = gamma;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn generate(g: &GlobalArgs) -> Result<bool> {
    let spec = generator_spec(g)?;
    let suite = generate_suite(&spec)?;
    let dir = out_dir(g)?;
    let man = manifest(&spec, &suite);
    for (inst, entry) in suite.iter().zip(&man.instances) {
        write_file(&dir.join(&entry.file), &inst.mdp.to_json())?;
    }
    write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&man)?)?;
    println!("wrote {} instances and manifest.json to {}", suite.len(), dir.display());
    Ok(true)
}

/// Contents of a sweep `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepFile {
    sweep: Option<SweepConfig>,
    /// Suite to generate in memory when no manifest is given.
    generator: Option<GeneratorSpec>,
    manifest: Option<PathBuf>,
}

fn load_manifest(path: &Path) -> Result<Vec<SuiteInstance>> {
    let man: SuiteManifest = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    man.instances
        .iter()
        .map(|e| {
            let file = base.join(&e.file);
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let mdp = Mdp::from_json(&text).with_context(|| format!("loading {}", file.display()))?;
            Ok(SuiteInstance {
                id: e.id.clone(),
                reward_config: e.reward_config.clone(),
                alpha: e.alpha,
                density: e.density,
                measured_density: e.measured_density,
                mdp,
            })
        })
        .collect()
}

pub fn sweep(g: &GlobalArgs, manifest_arg: Option<&Path>, timing: bool) -> Result<bool> {
    let file: SweepFile = match &g.config {
        Some(path) => read_json(path)?,
        None => SweepFile::default(),
    };
    let mut cfg = file.sweep.unwrap_or_else(|| SweepConfig {
        betas: if g.paper_scale { SweepConfig::fine_betas() } else { SweepConfig::default().betas },
        ..Default::default()
    });
    if let Some(gamma) = g.gamma {
        cfg.gamma = Some(gamma);
    }
    if let Some(t) = g.tmax {
        cfg.t_max = t;
    }
    if let Some(j) = g.jobs {
        cfg.jobs = j;
    }
    cfg.timing |= timing;
    cfg.validate()?;

    let suite = match manifest_arg.map(Path::to_path_buf).or(file.manifest) {
        Some(path) => load_manifest(&path)?,
        None => {
            let mut spec = match file.generator {
                Some(spec) => spec,
                None if g.paper_scale => GeneratorSpec::default(),
                None => GeneratorSpec::desk_scale(),
            };
            if let Some(seed) = g.seed {
                spec.seed = seed;
            }
            generate_suite(&spec)?
        }
    };
    if suite.is_empty() {
        bail!("the suite has no instances");
    }
    info!("sweeping {} instances x {} methods x {} costs", suite.len(), cfg.methods.len(), cfg.betas.len());
    let rows = run_sweep(&suite, &cfg)?;
    let path = out_dir(g)?.join("results.csv");
    let mut writer = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    println!("wrote {} rows to {} ({failed} failed cells)", rows.len(), path.display());
    Ok(true)
}

fn load_instance(spec: &str, gamma: Option<f64>) -> Result<Mdp> {
    if spec == "counterexample" {
        return Ok(counterexample_mdp(gamma.unwrap_or(0.9))?);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    let mdp = Mdp::from_json(&text).with_context(|| format!("loading {spec}"))?;
    Ok(match gamma {
        Some(g) => mdp.with_gamma(g)?,
        None => mdp,
    })
}

fn solve_config(g: &GlobalArgs, beta: f64) -> Result<SolveConfig> {
    let mut cfg = match &g.config {
        Some(path) => read_json(path)?,
        None => SolveConfig::default().with_t_max(DEFAULT_T_MAX).with_horizon_cap(DEFAULT_T_MAX),
    };
    if let Some(t) = g.tmax {
        cfg = cfg.with_t_max(t).with_horizon_cap(t);
    }
    cfg = cfg.with_beta(beta);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    instance: &'a str,
    method: Method,
    beta: f64,
    gamma: f64,
    t_max: usize,
    rounds: Option<usize>,
    monotone: Option<bool>,
    equilibrium: Option<bool>,
    policy: &'a pushpull::JointPolicy,
    report: &'a pushpull::EvaluationReport,
}

pub fn solve(g: &GlobalArgs, instance: &str, method: Method, beta: f64) -> Result<bool> {
    let mdp = load_instance(instance, g.gamma)?;
    let cfg = solve_config(g, beta)?;
    let res = solve_method(&mdp, method, &cfg)?;
    let out = SolveOutput {
        instance,
        method,
        beta,
        gamma: mdp.gamma(),
        t_max: cfg.t_max,
        rounds: res.rounds,
        monotone: res.monotone,
        equilibrium: res.equilibrium,
        policy: &res.policy,
        report: &res.report,
    };
    let path = out_dir(g)?.join("solution.json");
    write_file(&path, &serde_json::to_string_pretty(&out)?)?;
    println!(
        "{method} beta={beta}: discounted return {:.6}, update frequency {:.4}; wrote {}",
        res.report.discounted_return,
        res.report.update_frequency,
        path.display()
    );
    Ok(true)
}

/// Contents of a verify `--config` file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    gammas: Vec<f64>,
}

pub fn verify(g: &GlobalArgs) -> Result<bool> {
    let gammas = match (g.gamma, &g.config) {
        (Some(gamma), _) => vec![gamma],
        (None, Some(path)) => read_json::<VerifyFile>(path)?.gammas,
        (None, None) => vec![0.9, 0.5],
    };
    if gammas.is_empty() {
        bail!("no discount factors to verify");
    }
    let dir = out_dir(g)?;
    let mut all_passed = true;
    for gamma in gammas {
        let report = verify_all(gamma)?;
        let text = report.to_text();
        print!("{text}");
        write_file(&dir.join(format!("verify-gamma{gamma}.txt")), &text)?;
        write_file(&dir.join(format!("verify-gamma{gamma}.json")), &serde_json::to_string_pretty(&report)?)?;
        all_passed &= report.passed();
    }
    println!("{}", if all_passed { "all checks passed" } else { "some checks failed" });
    Ok(all_passed)
}

#[derive(Serialize)]
struct HistRow<'a> {
    schema_version: u32,
    instance: &'a str,
    method: Method,
    beta: f64,
    scope: &'static str,
    state: Option<usize>,
    length: usize,
    probability: f64,
}

pub fn aoi_hist(g: &GlobalArgs, instance: &str, method: Method, beta: f64, steps: usize, episodes: usize) -> Result<bool> {
    let mdp = load_instance(instance, g.gamma)?;
    let cfg = solve_config(g, beta)?;
    let res = solve_method(&mdp, method, &cfg)?;
    let start = uniform_start(mdp.num_states());
    let report = simulate(&mdp, &res.policy, &cfg, &start, g.seed.unwrap_or(0), episodes, steps)?;

    let path = out_dir(g)?.join("peak-aoi.csv");
    let mut writer = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    let row = |scope, state, length, probability| HistRow {
        schema_version: HIST_SCHEMA_VERSION,
        instance,
        method,
        beta,
        scope,
        state,
        length,
        probability,
    };
    for (&len, &p) in &report.peak_aoi_pmf_overall {
        writer.serialize(row("overall", None, len, p))?;
    }
    for (s, pmf) in report.peak_aoi_pmf_per_state.iter().enumerate() {
        for (&len, &p) in pmf {
            writer.serialize(row("state", Some(s), len, p))?;
        }
    }
    writer.flush()?;
    println!(
        "{method} beta={beta}: Peak AoI mean {:.4}, variance {:.4} over {} steps; wrote {}",
        report.peak_aoi_mean(),
        report.peak_aoi_variance(),
        report.steps,
        path.display()
    );
    Ok(true)
}

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use mwmsr::engine::report::{write_aggregates, write_trajectory};
use mwmsr::engine::{monte_carlo, Aggregate};
use mwmsr::robustness::{certify, FaultSpec, RobustnessError, RobustnessQuery};
use mwmsr::{run_with_aux, Flavor, Graph, NodeSet, RunMetricsF64};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bundled;
use crate::scenario::{load_graph_file, GraphSource, Scenario};
use crate::{CheckArgs, MonteCarloArgs, SimulateArgs, EXIT_NOT_HELD, EXIT_OK};

pub const OUT_ENV: &str = "MWMSR_OUT";
const DEFAULT_OUT: &str = "mwmsr-out";

fn resolve_graph(spec: &str) -> Result<Graph> {
    if let Some(text) = bundled::graph(spec) {
        return Ok(text.parse()?);
    }
    if bundled::scenario(spec).is_some() {
        return Ok(Scenario::load(spec)?.graph);
    }
    load_graph_file(&PathBuf::from(spec))
}

fn parse_fault_set(text: &str) -> Result<NodeSet> {
    let mut set = NodeSet::EMPTY;
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let id: usize = tok.parse().with_context(|| format!("invalid node id {tok:?} in fault set"))?;
        set.insert(id);
    }
    Ok(set)
}

pub fn check(args: &CheckArgs) -> Result<i32> {
    let g = resolve_graph(&args.graph)?;
    let faults = match (args.f_total, args.f_local, &args.fault_set) {
        (_, Some(f), _) => FaultSpec::Model { flavor: Flavor::Local, f },
        (_, _, Some(set)) => {
            let set = parse_fault_set(set)?;
            if let Some(bad) = set.iter().find(|&id| !g.contains(id)) {
                bail!("fault set node {bad} is not in the graph");
            }
            FaultSpec::Explicit(set)
        }
        (f, _, _) => FaultSpec::Model { flavor: Flavor::Total, f: f.unwrap_or(0) },
    };
    let query = RobustnessQuery { r: args.r, s: args.s, l: args.hops, faults };
    let start = Instant::now();
    let cert = match certify(&g, &query) {
        Ok(c) => c,
        Err(e @ RobustnessError::TooLarge(_)) => bail!("{e}; refusing to certify"),
        Err(e) => return Err(e.into()),
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let out = json!({
        "holds": cert.holds,
        "witness": cert.witness,
        "elapsed_ms": elapsed_ms,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(if cert.holds { EXIT_OK } else { EXIT_NOT_HELD })
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    scenario: Option<&'a str>,
    seed: u64,
    config_sha256: String,
    files: Vec<String>,
}

/// Hash of the effective scenario (inline graph, overrides applied).
fn config_hash(sc: &Scenario, g: &Graph) -> Result<String> {
    let mut effective = sc.clone();
    effective.graph = GraphSource::Inline(g.clone());
    let bytes = serde_json::to_vec(&effective)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_manifest(dir: &Path, command: &'static str, sc: &Scenario, g: &Graph, files: Vec<String>) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        scenario: sc.name.as_deref(),
        seed: sc.sim.seed,
        config_sha256: config_hash(sc, g)?,
        files,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    variant: &'a str,
    final_spread: f64,
    converged_at: Option<usize>,
    safety_held: bool,
    mean_events: f64,
    mean_transmissions: f64,
    theoretical_c: f64,
}

pub fn simulate(args: &SimulateArgs) -> Result<i32> {
    let loaded = Scenario::load(&args.scenario)?;
    let mut sc = loaded.scenario;
    let g = loaded.graph;
    ensure!(!sc.x0.is_empty(), "scenario has no x0; simulate needs initial states");
    if let Some(seed) = args.seed {
        sc.sim.seed = seed;
    }
    if args.count_packages_once {
        sc.sim.count_packages_once = true;
    }
    let variants = sc.variants(&args.variant)?;
    let mut names: Vec<&str> = variants.iter().map(|v| v.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    ensure!(names.len() == variants.len(), "variant names must be distinct");
    sc.variants = variants.clone();

    let dir = out_dir(&args.out);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut files = Vec::new();
    for v in &variants {
        let cfg = v.apply(&sc.sim);
        let metrics: RunMetricsF64 = run_with_aux(&g, &sc.fault_model, &sc.x0, sc.x_hat0.as_deref(), &cfg)
            .with_context(|| format!("variant {}", v.name))?;
        let traj = format!("{}_trajectory.csv", v.name);
        write_trajectory(&metrics, create(&dir.join(&traj))?)?;
        let met = format!("{}_metrics.json", v.name);
        fs::write(dir.join(&met), serde_json::to_string_pretty(&metrics)? + "\n")?;
        files.push(traj);
        files.push(met);
        let summary = RunSummary {
            variant: &v.name,
            final_spread: metrics.final_spread,
            converged_at: metrics.converged_at,
            safety_held: metrics.safety_held,
            mean_events: metrics.mean_events,
            mean_transmissions: metrics.mean_transmissions,
            theoretical_c: metrics.theoretical_c,
        };
        println!("{}", serde_json::to_string(&summary)?);
    }
    write_manifest(&dir, "simulate", &sc, &g, files)?;
    Ok(EXIT_OK)
}

pub fn montecarlo(args: &MonteCarloArgs) -> Result<i32> {
    let loaded = Scenario::load(&args.scenario)?;
    let mut sc = loaded.scenario;
    let g = loaded.graph;
    if let Some(seed) = args.seed {
        sc.sim.seed = seed;
    }
    if args.count_packages_once {
        sc.sim.count_packages_once = true;
    }
    let spec = sc.montecarlo.clone();
    let runs = args.runs.or(spec.as_ref().map(|m| m.runs)).unwrap_or(50);
    ensure!(runs >= 1, "runs must be at least 1");
    let range = spec.as_ref().map(|m| m.range).unwrap_or((0.0, 10.0));
    let variants = sc.variants(&args.variant)?;
    sc.variants = variants.clone();
    sc.montecarlo = Some(crate::scenario::MonteCarloSpec { runs, range });

    let (rows, _): (Vec<Aggregate>, _) = monte_carlo(&g, &sc.fault_model, &sc.sim, &variants, runs, range)?;
    let dir = out_dir(&args.out);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_aggregates(&rows, create(&dir.join("montecarlo.csv"))?)?;
    write_aggregates(&rows, std::io::stdout().lock())?;
    write_manifest(&dir, "montecarlo", &sc, &g, vec!["montecarlo.csv".into()])?;
    Ok(EXIT_OK)
}

pub fn list_scenarios() -> Result<i32> {
    let props = bundled::properties();
    for (name, text) in bundled::SCENARIOS {
        let sc = Scenario::parse(text)?;
        println!("{name}");
        if let Some(d) = &sc.description {
            println!("  {d}");
        }
        for p in props.iter().filter(|p| p.scenario == *name) {
            for c in &p.checks {
                let verdict = if c.holds { "is" } else { "is not" };
                let flavor = serde_json::to_value(c.flavor)?;
                println!(
                    "  {} {verdict} ({},{})-strongly robust with {} hop(s), {} f={}",
                    p.graph,
                    c.r,
                    c.s,
                    c.hops,
                    flavor.as_str().unwrap_or("?"),
                    c.f
                );
            }
        }
    }
    Ok(EXIT_OK)
}

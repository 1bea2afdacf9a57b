//! `treewind`: winding experiments for exclusion processes on trees.
//!
//! Every command exits 0 on success; failures print a machine-readable
//! JSON object on stderr and exit nonzero. Output files are never
//! overwritten unless `--force` is given.

mod compare;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use treewind::closedform;
use treewind::dconfig::{census_csv, CellCensus};
use treewind::exclusion::build_exclusion;
use treewind::markov::ChainError;
use treewind::simulate::{
    clt_diagnostics, mc_covariance, samples_csv, SampleMetadata, StartMode, WindingSimulator,
};
use treewind::statistics::{covariance_report, exact_covariance, WindingBasis};
use treewind::tree::{PlanarTree, TreeError};

#[derive(Parser)]
#[command(
    name = "treewind",
    version,
    about = "Winding statistics of exclusion processes on planar leaf-rooted trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Output directory for generated files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the 1-cells of the configuration space and list the
    /// critical basis.
    Classify {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact asymptotic covariance of the winding statistic, with
    /// spectral bounds and reconciliation notes.
    ExactCov {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// JSON file with the planar sign vector (array of +-1, length g).
        #[arg(long)]
        signs: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo winding samples, covariance estimate, and CLT
    /// diagnostics.
    Simulate {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 256)]
        reps: u64,
        /// Master seed (required: all output is deterministic given it).
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        signs: Option<PathBuf>,
        /// Worker pool size for replicates.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Also write the full state trajectories.
        #[arg(long)]
        trace: bool,
        /// Start each replicate from a uniform (= stationary) state
        /// instead of the lexicographically smallest configuration.
        #[arg(long)]
        stationary_start: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare the exact covariance matrices of two trees.
    Compare {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        tree2: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-form star tables against the generic machinery.
    StarReport {
        #[arg(long)]
        l: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Complete-graph accumulated-homology rules against the generic
    /// machinery.
    CompleteReport {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let kind = classify_error(&err);
        let payload = json!({
            "schema": 1,
            "kind": kind,
            "error": format!("{err:#}"),
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}

fn classify_error(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if cause.is::<TreeError>() {
            return "tree";
        }
        if cause.is::<treewind::dconfig::DconfigError>() {
            return "dconfig";
        }
        if cause.is::<ChainError>() {
            return "chain";
        }
        if cause.is::<treewind::simulate::SimError>() {
            return "simulate";
        }
        if cause.is::<closedform::ClosedFormError>() {
            return "closedform";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "usage"
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify { tree, n, output } => cmd_classify(&tree, n as usize, &output),
        Command::ExactCov { tree, n, signs, output } => {
            cmd_exact_cov(&tree, n as usize, signs.as_deref(), &output)
        }
        Command::Simulate {
            tree,
            n,
            steps,
            reps,
            seed,
            signs,
            threads,
            trace,
            stationary_start,
            output,
        } => cmd_simulate(SimulateArgs {
            tree,
            n: n as usize,
            steps,
            reps,
            seed,
            signs,
            threads,
            trace,
            stationary_start,
            output,
        }),
        Command::Compare { tree, tree2, n, output } => {
            cmd_compare(&tree, &tree2, n as usize, &output)
        }
        Command::StarReport { l, output } => cmd_star_report(l, &output),
        Command::CompleteReport { n, output } => cmd_complete_report(n, &output),
    }
}

fn load_tree(path: &Path) -> Result<PlanarTree> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading tree document {}", path.display()))?;
    Ok(PlanarTree::parse(&text)?)
}

fn load_signs(path: &Path, g: usize) -> Result<Vec<i8>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading sign file {}", path.display()))?;
    let signs: Vec<i8> = serde_json::from_str(&text)
        .with_context(|| format!("sign file {} must be a JSON array of +-1", path.display()))?;
    if signs.len() != g {
        bail!("sign file has {} entries, basis has {}", signs.len(), g);
    }
    if !signs.iter().all(|&s| s == 1 || s == -1) {
        bail!("sign entries must be +1 or -1");
    }
    Ok(signs)
}

fn write_output(dir: &Path, name: &str, contents: &str, force: bool) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    if path.exists() && !force {
        bail!(
            "output file {} already exists; pass --force to overwrite",
            path.display()
        );
    }
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, force: bool) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_output(dir, name, &text, force)
}

fn emit(summary: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
}

fn cmd_classify(tree_path: &Path, n: usize, output: &OutputArgs) -> Result<()> {
    let tree = load_tree(tree_path)?;
    let census = CellCensus::build(&tree, n)?;
    let csv = census_csv(&census);
    let name = format!("{}_n{}_census.csv", tree.name(), n);
    let path = write_output(&output.out, &name, &csv, output.force)?;
    let (critical, collapsible, residual) = census.class_counts();
    let basis: Vec<String> = census
        .basis
        .iter()
        .map(|&i| {
            let c = &census.one_cells[i];
            let verts: Vec<String> = c.vertices.iter().map(|v| v.to_string()).collect();
            format!("{{{} | {}-{}}}", verts.join(" "), c.tau, c.iota)
        })
        .collect();
    let mut summary = json!({
        "schema": 1,
        "tree": tree.name(),
        "n": n,
        "zero_cells": census.zero_cells.len(),
        "one_cells": census.one_cells.len(),
        "counts": {"critical": critical, "collapsible": collapsible, "residual": residual},
        "g": census.rank(),
        "basis": basis,
        "essential_vertices": tree.essential_vertices(),
        "census_csv": path,
    });
    if census.rank() == 0 {
        summary["note"] =
            json!("configuration space is simply connected at the H1 level (no critical 1-cells)");
    }
    emit(summary);
    Ok(())
}

fn cmd_exact_cov(
    tree_path: &Path,
    n: usize,
    signs: Option<&Path>,
    output: &OutputArgs,
) -> Result<()> {
    let tree = load_tree(tree_path)?;
    let census = CellCensus::build(&tree, n)?;
    let ex = build_exclusion(&tree, n)?;
    let mut ws = WindingBasis::from_census(&census, &ex);
    if let Some(path) = signs {
        let s = load_signs(path, ws.g())?;
        ws = ws.with_signs(s);
    }
    let report = covariance_report(&tree, n, &ex, &ws)?;
    let name = format!("{}_n{}_covariance.json", tree.name(), n);
    let path = write_json(&output.out, &name, &report, output.force)?;
    let chain_path = write_json(
        &output.out,
        &format!("{}_n{}_chain.json", tree.name(), n),
        &ex.chain.export(),
        output.force,
    )?;
    emit(json!({
        "schema": 1,
        "tree": tree.name(),
        "n": n,
        "g": report.g,
        "sigma_diagonal": (0..report.g).map(|i| report.sigma[i][i]).collect::<Vec<_>>(),
        "psd_min_eigenvalue": report.psd_min_eigenvalue,
        "delta": report.delta,
        "report": path,
        "chain": chain_path,
    }));
    Ok(())
}

struct SimulateArgs {
    tree: PathBuf,
    n: usize,
    steps: u64,
    reps: u64,
    seed: u64,
    signs: Option<PathBuf>,
    threads: usize,
    trace: bool,
    stationary_start: bool,
    output: OutputArgs,
}

#[derive(Serialize)]
struct SimulateReport {
    schema: u32,
    tree: String,
    n: usize,
    t: u64,
    reps: u64,
    seed: u64,
    threads: usize,
    g: usize,
    sigma_hat: Vec<Vec<f64>>,
    sigma_hat_se: Vec<Vec<f64>>,
    mean: Vec<f64>,
    mean_se: Vec<f64>,
    sigma_exact: Vec<Vec<f64>>,
    max_abs_deviation_in_se: f64,
    ks: Vec<treewind::simulate::KsResult>,
    elapsed_seconds: f64,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let tree = load_tree(&args.tree)?;
    let census = CellCensus::build(&tree, args.n)?;
    let ex = build_exclusion(&tree, args.n)?;
    let mut ws = WindingBasis::from_census(&census, &ex);
    if let Some(path) = &args.signs {
        let s = load_signs(path, ws.g())?;
        ws = ws.with_signs(s);
    }
    let sim = WindingSimulator::for_exclusion(&tree, &census, &ex, &ws);
    let start_mode = if args.stationary_start {
        StartMode::Stationary
    } else {
        StartMode::Lex
    };
    let started = Instant::now();
    let samples = sim.sample(args.steps, args.reps, args.seed, start_mode, args.threads)?;
    let elapsed = started.elapsed().as_secs_f64();
    let g = ws.g();
    let mc = mc_covariance(&samples, g);
    let sigma_exact = exact_covariance(&ex.chain, &ws)?;
    let mut max_dev_se: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            let se = mc.se[(i, j)];
            if se > 0.0 {
                max_dev_se = max_dev_se.max((mc.sigma_hat[(i, j)] - sigma_exact[(i, j)]).abs() / se);
            }
        }
    }
    // Standard basis directions, the all-ones direction, and the planar
    // sign direction when it differs.
    let mut directions: Vec<Vec<f64>> = (0..g)
        .map(|i| (0..g).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if g > 1 {
        directions.push(vec![1.0; g]);
        if ws.signs.contains(&-1) {
            directions.push(ws.signs.iter().map(|&s| f64::from(s)).collect());
        }
    }
    let ks = clt_diagnostics(&samples, &sigma_exact, &directions);

    let stem = format!("{}_n{}_s{}", tree.name(), args.n, args.seed);
    let csv_path = write_output(
        &args.output.out,
        &format!("{stem}_samples.csv"),
        &samples_csv(&samples, g),
        args.output.force,
    )?;
    let meta = SampleMetadata::new(&tree, args.n, args.steps, args.reps, args.seed, start_mode, &ws);
    let meta_path = write_json(&args.output.out, &format!("{stem}_metadata.json"), &meta, args.output.force)?;
    let mut trace_path = None;
    if args.trace {
        let mut text = String::from("rep,step,state,config\n");
        for rep in 0..args.reps {
            let mut rng = treewind::simulate::replicate_rng(args.seed, rep);
            let mut states = Vec::with_capacity(args.steps as usize + 1);
            let start = sim.draw_start(&mut rng, start_mode);
            sim.run(args.steps, &mut rng, start, Some(&mut states));
            for (step, s) in states.iter().enumerate() {
                let cfg: Vec<String> = ex.states[*s as usize].iter().map(|v| v.to_string()).collect();
                text.push_str(&format!("{rep},{step},{s},{}\n", cfg.join(" ")));
            }
        }
        trace_path = Some(write_output(
            &args.output.out,
            &format!("{stem}_trace.csv"),
            &text,
            args.output.force,
        )?);
    }
    let report = SimulateReport {
        schema: 1,
        tree: tree.name().to_string(),
        n: args.n,
        t: args.steps,
        reps: args.reps,
        seed: args.seed,
        threads: args.threads,
        g,
        sigma_hat: matrix_rows(&mc.sigma_hat),
        sigma_hat_se: matrix_rows(&mc.se),
        mean: mc.mean.clone(),
        mean_se: mc.mean_se.clone(),
        sigma_exact: matrix_rows(&sigma_exact),
        max_abs_deviation_in_se: max_dev_se,
        ks,
        elapsed_seconds: elapsed,
    };
    let report_path = write_json(
        &args.output.out,
        &format!("{stem}_report.json"),
        &report,
        args.output.force,
    )?;
    emit(json!({
        "schema": 1,
        "tree": tree.name(),
        "samples_csv": csv_path,
        "metadata": meta_path,
        "report": report_path,
        "trace": trace_path,
        "max_abs_deviation_in_se": max_dev_se,
        "elapsed_seconds": elapsed,
    }));
    Ok(())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct CompareReport {
    schema: u32,
    tree_a: String,
    tree_b: String,
    n: usize,
    g_a: usize,
    g_b: usize,
    /// Basis rows are aligned by essential-vertex DFS order on each side.
    sigma_a: Vec<Vec<f64>>,
    sigma_b: Vec<Vec<f64>>,
    max_entry_diff: f64,
    verdict: String,
    transformation: Option<(Vec<usize>, Vec<i8>)>,
    notes: Vec<String>,
}

fn cmd_compare(tree_a: &Path, tree_b: &Path, n: usize, output: &OutputArgs) -> Result<()> {
    let a = load_tree(tree_a)?;
    let b = load_tree(tree_b)?;
    let sigma = |tree: &PlanarTree| -> Result<DMatrix<f64>> {
        let census = CellCensus::build(tree, n)?;
        let ex = build_exclusion(tree, n)?;
        let ws = WindingBasis::from_census(&census, &ex);
        Ok(exact_covariance(&ex.chain, &ws)?)
    };
    let sigma_a = sigma(&a)?;
    let sigma_b = sigma(&b)?;
    let mut notes = Vec::new();
    let (max_entry_diff, verdict, transformation) = if sigma_a.nrows() != sigma_b.nrows() {
        notes.push("basis ranks differ".into());
        (f64::INFINITY, "distinguished".to_string(), None)
    } else {
        let diff = (&sigma_a - &sigma_b).amax();
        if diff <= 1e-9 {
            (diff, "identical".to_string(), None)
        } else if let Some(tr) = compare::signed_permutation_match(&sigma_a, &sigma_b, 1e-9) {
            notes.push(
                "matrices differ entrywise but agree after a signed basis permutation".into(),
            );
            (diff, "equivalent-up-to-basis".to_string(), Some(tr))
        } else {
            (diff, "distinguished".to_string(), None)
        }
    };
    let report = CompareReport {
        schema: 1,
        tree_a: a.name().to_string(),
        tree_b: b.name().to_string(),
        n,
        g_a: sigma_a.nrows(),
        g_b: sigma_b.nrows(),
        sigma_a: matrix_rows(&sigma_a),
        sigma_b: matrix_rows(&sigma_b),
        max_entry_diff,
        verdict: verdict.clone(),
        transformation,
        notes,
    };
    let name = format!("compare_{}_vs_{}_n{}.json", a.name(), b.name(), n);
    let path = write_json(&output.out, &name, &report, output.force)?;
    emit(json!({
        "schema": 1,
        "verdict": verdict,
        "max_entry_diff": report.max_entry_diff,
        "report": path,
    }));
    Ok(())
}

fn cmd_star_report(l: usize, output: &OutputArgs) -> Result<()> {
    let report = closedform::star_report(l)?;
    let path = write_json(&output.out, &format!("star_{l}_report.json"), &report, output.force)?;
    emit(json!({
        "schema": 1,
        "l": l,
        "max_residual": report.max_residual,
        "green_identity_residual": report.green_identity_residual,
        "t2_variant_residual": report.t2_variant.residual,
        "report": path,
    }));
    Ok(())
}

fn cmd_complete_report(n: usize, output: &OutputArgs) -> Result<()> {
    let report = closedform::complete_report(n)?;
    let path = write_json(&output.out, &format!("complete_{n}_report.json"), &report, output.force)?;
    emit(json!({
        "schema": 1,
        "n": n,
        "diagonal_max_residual": report.diagonal_max_residual,
        "disjoint_max_abs": report.disjoint_max_abs,
        "adjacent_entries": report.adjacent_entries.len(),
        "report": path,
    }));
    Ok(())
}

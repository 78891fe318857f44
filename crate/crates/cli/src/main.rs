//! `rarekit` — kernel and ensemble learning from the command line.
//!
//! Seven subcommands wire CSV datasets (or built-in synthetic
//! generators) to the library: `kpca`, `svm`, `lago`, `boost`,
//! `forest`, `select`, and an `experiments` harness that emits
//! plot-ready CSV tables for the standard studies (fig2–fig5).
//!
//! Every run writes `manifest.txt` alongside its CSV artifacts; passing
//! that manifest back through `--config` replays the run bit-exactly,
//! regardless of `--threads`.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{write_csv_file, CliResult, RunConfig};
use rarekit_core::data::{self, LabelCoding, SplitSpec};
use rarekit_core::ensemble;
use rarekit_core::kpca;
use rarekit_core::lago;
use rarekit_core::metrics::misclassification;
use rarekit_core::select;
use rarekit_core::svm;
use rarekit_core::synth;
use rarekit_core::{Dataset, KernelSpec, SeedTree};

#[derive(Parser)]
#[command(
    name = "rarekit",
    version,
    about = "Kernel PCA, hinge classifiers, LAGO ranking, boosting, forests, and evolutionary variable selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel principal component scores for a dataset
    Kpca(KpcaArgs),
    /// Kernelized hinge+ridge classifier: evaluation or (γ, h) grid
    Svm(SvmArgs),
    /// LAGO rare-target ranking: rank a test split or tune α
    Lago(LagoArgs),
    /// AdaBoost with observation reweighting
    Boost(BoostArgs),
    /// Random forest / bagging: single fit or (m, B) error grid
    Forest(ForestArgs),
    /// Variable selection: exhaustive, evolutionary, parallel universes,
    /// or bagged stepwise
    Select(SelectArgs),
    /// Reproduce the standard studies as CSV tables (fig2..fig5)
    Experiments(ExperimentsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV artifacts and the manifest
    #[arg(long)]
    out: Option<String>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores); results never depend on this
    #[arg(long)]
    threads: Option<usize>,
    /// Input CSV with a `label` column (omit to use the built-in generator)
    #[arg(long)]
    data: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("out", self.out.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
            ("data", self.data.clone()),
        ]
    }
}

const COMMON_DEFAULTS: [(&str, &str); 4] =
    [("out", "out"), ("seed", "0"), ("threads", ""), ("data", "")];

fn defaults(extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    COMMON_DEFAULTS.iter().chain(extra).copied().collect()
}

#[derive(Args)]
struct KpcaArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Kernel: linear | gaussian
    #[arg(long)]
    kernel: Option<String>,
    /// Gaussian bandwidth h (kernel exp(-h·||u-v||²))
    #[arg(long)]
    h: Option<f64>,
    /// Number of components
    #[arg(long)]
    q: Option<usize>,
    /// Size of the built-in spherical toy when --data is omitted
    #[arg(long = "toy_n")]
    toy_n: Option<usize>,
}

#[derive(Args)]
struct SvmArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mode: grid | eval
    #[arg(long)]
    mode: Option<String>,
    /// γ grid (comma-separated); λ = 1/(2γ)
    #[arg(long)]
    gammas: Option<String>,
    /// h grid (comma-separated)
    #[arg(long)]
    hs: Option<String>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Train fraction of the split
    #[arg(long = "train_fraction")]
    train_fraction: Option<f64>,
    /// Single γ (eval mode)
    #[arg(long)]
    gamma: Option<f64>,
    /// Single h (eval mode)
    #[arg(long)]
    h: Option<f64>,
    /// Synthetic dataset size when --data is omitted
    #[arg(long = "synth_n")]
    synth_n: Option<usize>,
}

#[derive(Args)]
struct LagoArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mode: rank | tune
    #[arg(long)]
    mode: Option<String>,
    /// Neighbor count K
    #[arg(long)]
    k: Option<usize>,
    /// Bandwidth multiplier α (rank mode)
    #[arg(long)]
    alpha: Option<f64>,
    /// Variant: slago | elago
    #[arg(long)]
    variant: Option<String>,
    /// α grid for tuning (comma-separated)
    #[arg(long)]
    alphas: Option<String>,
    /// Cross-validation folds (tune mode)
    #[arg(long)]
    folds: Option<usize>,
    /// Train fraction of the split (rank mode)
    #[arg(long = "train_fraction")]
    train_fraction: Option<f64>,
    /// Synthetic dataset size when --data is omitted
    #[arg(long = "synth_n")]
    synth_n: Option<usize>,
}

#[derive(Args)]
struct BoostArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Boosting rounds
    #[arg(long = "B")]
    b: Option<usize>,
    /// Base learner tree depth (1 = exhaustive stumps)
    #[arg(long)]
    depth: Option<usize>,
    /// Train fraction of the split
    #[arg(long = "train_fraction")]
    train_fraction: Option<f64>,
    /// Synthetic dataset size when --data is omitted
    #[arg(long = "synth_n")]
    synth_n: Option<usize>,
}

#[derive(Args)]
struct ForestArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mode: grid | train
    #[arg(long)]
    mode: Option<String>,
    /// Trees (train mode)
    #[arg(long = "B")]
    b: Option<usize>,
    /// Feature-subset size m (train mode)
    #[arg(long)]
    m: Option<usize>,
    /// m grid (grid mode, comma-separated)
    #[arg(long)]
    ms: Option<String>,
    /// B grid (grid mode, comma-separated)
    #[arg(long)]
    bs: Option<String>,
    /// Train fraction of the split
    #[arg(long = "train_fraction")]
    train_fraction: Option<f64>,
    /// Synthetic dataset size when --data is omitted
    #[arg(long = "synth_n")]
    synth_n: Option<usize>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mode: exhaustive | evolve | universes | bagged-stepwise
    #[arg(long)]
    mode: Option<String>,
    /// Criterion: aic | bic | custom
    #[arg(long)]
    criterion: Option<String>,
    /// Penalty multiplier γ (criterion = custom)
    #[arg(long)]
    gamma: Option<f64>,
    /// Universes / bootstrap replicates
    #[arg(long = "B")]
    b: Option<usize>,
    /// Generations per evolutionary run
    #[arg(long)]
    generations: Option<usize>,
    /// Vote threshold τ: select variables with frequency ≥ ceil(τB)
    #[arg(long)]
    tau: Option<f64>,
    /// GA population size
    #[arg(long)]
    population: Option<usize>,
    /// 1-based true variables used only for the group flag of the
    /// exhaustive table (empty to disable)
    #[arg(long = "true_vars")]
    true_vars: Option<String>,
}

#[derive(Args)]
struct ExperimentsArgs {
    /// Which study to run: fig2 | fig3a | fig3b | fig4 | fig5
    /// (may also come from --config)
    mode: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
    /// Points for fig2's spherical toy
    #[arg(long)]
    n: Option<usize>,
    /// γ grid for fig3a
    #[arg(long)]
    gammas: Option<String>,
    /// h grid for fig3a
    #[arg(long)]
    hs: Option<String>,
    /// Training epochs for fig3a
    #[arg(long)]
    epochs: Option<usize>,
    /// m grid for fig3b
    #[arg(long)]
    ms: Option<String>,
    /// B grid for fig3b
    #[arg(long)]
    bs: Option<String>,
    /// Universe counts for fig5 (comma-separated)
    #[arg(long = "Bs")]
    universe_bs: Option<String>,
    /// Replicates per universe count for fig5
    #[arg(long)]
    replicates: Option<usize>,
    /// Generations per universe (fig5)
    #[arg(long)]
    generations: Option<usize>,
    /// Train fraction for fig3a/fig3b
    #[arg(long = "train_fraction")]
    train_fraction: Option<f64>,
    /// Synthetic classification dataset size for fig3a/fig3b
    #[arg(long = "synth_n")]
    synth_n: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Kpca(a) => run_kpca(a),
        Command::Svm(a) => run_svm(a),
        Command::Lago(a) => run_lago(a),
        Command::Boost(a) => run_boost(a),
        Command::Forest(a) => run_forest(a),
        Command::Select(a) => run_select(a),
        Command::Experiments(a) => run_experiments(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn setup_threads(cfg: &RunConfig) -> CliResult<()> {
    let raw = cfg.get("threads");
    if raw.is_empty() {
        return Ok(());
    }
    let n: usize = cfg.parse("threads")?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

fn core_err(e: rarekit_core::Error) -> String {
    e.to_string()
}

fn load_class_data(cfg: &RunConfig) -> CliResult<Option<Dataset>> {
    match cfg.path("data") {
        Some(path) => data::load_csv(&path, "label", &LabelCoding::Default)
            .map(Some)
            .map_err(core_err),
        None => Ok(None),
    }
}

fn split_pair(ds: &Dataset, fraction: f64, seed: u64) -> CliResult<(Dataset, Dataset)> {
    data::split(
        ds,
        &SplitSpec {
            train_fraction: fraction,
            seed,
        },
    )
    .map_err(core_err)
}

fn run_kpca(args: KpcaArgs) -> CliResult<()> {
    let mut overrides = args.common.overrides();
    overrides.extend([
        ("kernel", args.kernel),
        ("h", args.h.map(|v| v.to_string())),
        ("q", args.q.map(|v| v.to_string())),
        ("toy_n", args.toy_n.map(|v| v.to_string())),
    ]);
    let cfg = RunConfig::resolve(
        "kpca",
        &defaults(&[("kernel", "gaussian"), ("h", "1"), ("q", "2"), ("toy_n", "200")]),
        args.common.config.as_deref(),
        &overrides,
    )?;
    setup_threads(&cfg)?;
    let seed: u64 = cfg.parse("seed")?;
    let tree = SeedTree::new(seed);
    let features = match load_class_data(&cfg)? {
        Some(ds) => ds.features().clone(),
        None => synth::spherical_toy(cfg.parse("toy_n")?, tree.child(0).seed()).0,
    };
    let spec = match cfg.get("kernel") {
        "linear" => KernelSpec::Linear,
        "gaussian" => KernelSpec::gaussian(cfg.parse("h")?).map_err(core_err)?,
        other => return Err(format!("unknown kernel {other:?}")),
    };
    let q: usize = cfg.parse("q")?;
    let model = kpca::fit_kpca_matrix(&features, &spec, q, None).map_err(core_err)?;
    if let kpca::FitStatus::Truncated { requested, retained } = model.status() {
        eprintln!("warning: only {retained} of {requested} components exceed the eigenvalue cutoff");
    }
    let scores = model.training_scores();
    let header = {
        let mut h = String::from("row");
        for j in 0..model.retained() {
            h.push_str(&format!(",score_{}", j + 1));
        }
        h
    };
    let rows: Vec<String> = (0..scores.nrows())
        .map(|i| {
            let mut row = i.to_string();
            for j in 0..scores.ncols() {
                row.push_str(&format!(",{}", scores[(i, j)]));
            }
            row
        })
        .collect();
    cfg.write_manifest()?;
    let path = write_csv_file(&cfg.out_dir(), "scores.csv", &header, &rows)?;
    println!(
        "kpca: {} components retained, scores in {}",
        model.retained(),
        path.display()
    );
    Ok(())
}

fn svm_dataset(cfg: &RunConfig, tree: &SeedTree) -> CliResult<Dataset> {
    match load_class_data(cfg)? {
        Some(ds) => Ok(ds),
        None => Ok(synth::classification_synthetic(
            cfg.parse("synth_n")?,
            30,
            tree.child(0).seed(),
        )),
    }
}

fn run_svm(args: SvmArgs) -> CliResult<()> {
    let mut overrides = args.common.overrides();
    overrides.extend([
        ("mode", args.mode),
        ("gammas", args.gammas),
        ("hs", args.hs),
        ("epochs", args.epochs.map(|v| v.to_string())),
        ("train_fraction", args.train_fraction.map(|v| v.to_string())),
        ("gamma", args.gamma.map(|v| v.to_string())),
        ("h", args.h.map(|v| v.to_string())),
        ("synth_n", args.synth_n.map(|v| v.to_string())),
    ]);
    let cfg = RunConfig::resolve(
        "svm",
        &defaults(&[
            ("mode", "grid"),
            ("gammas", "1,10,100"),
            ("hs", "0.0001,0.001,0.01,0.1,1"),
            ("epochs", "20"),
            ("train_fraction", "0.5"),
            ("gamma", "1"),
            ("h", "1"),
            ("synth_n", "600"),
        ]),
        args.common.config.as_deref(),
        &overrides,
    )?;
    setup_threads(&cfg)?;
    let tree = SeedTree::new(cfg.parse("seed")?);
    let ds = svm_dataset(&cfg, &tree)?;
    let (train, test) = split_pair(&ds, cfg.parse("train_fraction")?, tree.child(1).seed())?;
    cfg.write_manifest()?;
    match cfg.get("mode") {
        "grid" => {
            let gammas: Vec<f64> = cfg.parse_list("gammas")?;
            let hs: Vec<f64> = cfg.parse_list("hs")?;
            let grid = svm::sensitivity_grid(
                &train,
                &test,
                &gammas,
                &hs,
                cfg.parse("epochs")?,
                tree.child(2).seed(),
            )
            .map_err(core_err)?;
            let mut rows = Vec::new();
            for (gi, &gamma) in gammas.iter().enumerate() {
                for (hi, &h) in hs.iter().enumerate() {
                    rows.push(format!("{gamma},{h},{}", grid.errors[gi][hi]));
                }
            }
            let path = write_csv_file(&cfg.out_dir(), "grid.csv", "gamma,h,errors", &rows)?;
            println!("svm grid: {} cells in {}", rows.len(), path.display());
        }
        "eval" => {
            let gamma: f64 = cfg.parse("gamma")?;
            let spec = KernelSpec::gaussian(cfg.parse("h")?).map_err(core_err)?;
            let clf = svm::train_kernel_hinge(
                &train,
                &spec,
                svm::lambda_from_gamma(gamma),
                cfg.parse("epochs")?,
                tree.child(2).seed(),
            )
            .map_err(core_err)?;
            let train_err = misclassification(
                &clf.predict_matrix(train.features()).map_err(core_err)?,
                train.labels().map_err(core_err)?,
            )
            .map_err(core_err)?;
            let test_err = misclassification(
                &clf.predict_matrix(test.features()).map_err(core_err)?,
                test.labels().map_err(core_err)?,
            )
            .map_err(core_err)?;
            let rows = vec![format!(
                "{},{},{train_err},{test_err}",
                train.n(),
                test.n()
            )];
            let path = write_csv_file(
                &cfg.out_dir(),
                "eval.csv",
                "n_train,n_test,train_errors,test_errors",
                &rows,
            )?;
            println!(
                "svm eval: {test_err}/{} test errors, summary in {}",
                test.n(),
                path.display()
            );
        }
        other => return Err(format!("unknown svm mode {other:?}")),
    }
    Ok(())
}

fn lago_variant(cfg: &RunConfig) -> CliResult<lago::LagoVariant> {
    match cfg.get("variant") {
        "slago" => Ok(lago::LagoVariant::Spherical),
        "elago" => Ok(lago::LagoVariant::Elliptical),
        other => Err(format!("unknown variant {other:?} (use slago | elago)")),
    }
}

fn run_lago(args: LagoArgs) -> CliResult<()> {
    let mut overrides = args.common.overrides();
    overrides.extend([
        ("mode", args.mode),
        ("k", args.k.map(|v| v.to_string())),
        ("alpha", args.alpha.map(|v| v.to_string())),
        ("variant", args.variant),
        ("alphas", args.alphas),
        ("folds", args.folds.map(|v| v.to_string())),
        ("train_fraction", args.train_fraction.map(|v| v.to_string())),
        ("synth_n", args.synth_n.map(|v| v.to_string())),
    ]);
    let cfg = RunConfig::resolve(
        "lago",
        &defaults(&[
            ("mode", "rank"),
            ("k", "5"),
            ("alpha", "1"),
            ("variant", "slago"),
            ("alphas", "0.01,0.1,1,10,100"),
            ("folds", "5"),
            ("train_fraction", "0.5"),
            ("synth_n", "600"),
        ]),
        args.common.config.as_deref(),
        &overrides,
    )?;
    setup_threads(&cfg)?;
    let tree = SeedTree::new(cfg.parse("seed")?);
    let ds = match load_class_data(&cfg)? {
        Some(ds) => ds,
        None => synth::mixture_rare(cfg.parse("synth_n")?, tree.child(0).seed()).0,
    };
    let variant = lago_variant(&cfg)?;
    let k: usize = cfg.parse("k")?;
    cfg.write_manifest()?;
    match cfg.get("mode") {
        "rank" => {
            let (train, test) =
                split_pair(&ds, cfg.parse("train_fraction")?, tree.child(1).seed())?;
            let model =
                lago::fit_lago(&train, k, cfg.parse("alpha")?, variant).map_err(core_err)?;
            let ranking = model.rank(test.features()).map_err(core_err)?;
            let mut rank_of = vec![0usize; test.n()];
            for (pos, &row) in ranking.order.iter().enumerate() {
                rank_of[row] = pos + 1;
            }
            let rows: Vec<String> = (0..test.n())
                .map(|i| format!("{i},{},{}", ranking.scores[i], rank_of[i]))
                .collect();
            let path =
                write_csv_file(&cfg.out_dir(), "ranked.csv", "row_id,score,rank", &rows)?;
            let ap = rarekit_core::metrics::average_precision(
                &ranking.scores,
                test.labels().map_err(core_err)?,
            )
            .map_err(core_err)?;
            println!(
                "lago rank: average precision {ap:.4} on {} rows, output in {}",
                test.n(),
                path.display()
            );
        }
        "tune" => {
            let alphas: Vec<f64> = cfg.parse_list("alphas")?;
            let tuning = lago::tune_alpha(
                &ds,
                k,
                &alphas,
                cfg.parse("folds")?,
                tree.child(1).seed(),
                variant,
            )
            .map_err(core_err)?;
            for &(ai, fold) in &tuning.skipped {
                eprintln!("warning: alpha index {ai}: fold {fold} skipped (class missing)");
            }
            let rows: Vec<String> = tuning
                .per_alpha
                .iter()
                .map(|(a, ap)| format!("{a},{ap}"))
                .collect();
            let path = write_csv_file(
                &cfg.out_dir(),
                "alphas.csv",
                "alpha,average_precision",
                &rows,
            )?;
            println!(
                "lago tune: best alpha {} of {} candidates, table in {}",
                tuning.best_alpha,
                alphas.len(),
                path.display()
            );
        }
        other => return Err(format!("unknown lago mode {other:?}")),
    }
    Ok(())
}

fn run_boost(args: BoostArgs) -> CliResult<()> {
    let mut overrides = args.common.overrides();
    overrides.extend([
        ("B", args.b.map(|v| v.to_string())),
        ("depth", args.depth.map(|v| v.to_string())),
        ("train_fraction", args.train_fraction.map(|v| v.to_string())),
        ("synth_n", args.synth_n.map(|v| v.to_string())),
    ]);
    let cfg = RunConfig::resolve(
        "boost",
        &defaults(&[
            ("B", "50"),
            ("depth", "1"),
            ("train_fraction", "0.5"),
            ("synth_n", "400"),
        ]),
        args.common.config.as_deref(),
        &overrides,
    )?;
    setup_threads(&cfg)?;
    let tree = SeedTree::new(cfg.parse("seed")?);
    let ds = svm_dataset(&cfg, &tree)?;
    let (train, test) = split_pair(&ds, cfg.parse("train_fraction")?, tree.child(1).seed())?;
    let ensemble = ensemble::adaboost(&train, cfg.parse("B")?, cfg.parse("depth")?)
        .map_err(core_err)?;
    cfg.write_manifest()?;
    let rows: Vec<String> = ensemble
        .rounds
        .iter()
        .enumerate()
        .map(|(b, (eps, r))| format!("{},{eps},{r},{}", b + 1, r.ln()))
        .collect();
    write_csv_file(&cfg.out_dir(), "rounds.csv", "round,epsilon,r,a", &rows)?;
    let train_err = misclassification(
        &ensemble.predict(train.features()),
        train.labels().map_err(core_err)?,
    )
    .map_err(core_err)?;
    let test_err = misclassification(
        &ensemble.predict(test.features()),
        test.labels().map_err(core_err)?,
    )
    .map_err(core_err)?;
    let summary = vec![format!(
        "{},{},{},{train_err},{test_err}",
        ensemble.members.len(),
        train.n(),
        test.n()
    )];
    let path = write_csv_file(
        &cfg.out_dir(),
        "summary.csv",
        "rounds,n_train,n_test,train_errors,test_errors",
        &summary,
    )?;
    println!(
        "boost: {} rounds, {test_err}/{} test errors, summary in {}",
        ensemble.members.len(),
        test.n(),
        path.display()
    );
    Ok(())
}

fn run_forest(args: ForestArgs) -> CliResult<()> {
    let mut overrides = args.common.overrides();
    overrides.extend([
        ("mode", args.mode),
        ("B", args.b.map(|v| v.to_string())),
        ("m", args.m.map(|v| v.to_string())),
        ("ms", args.ms),
        ("bs", args.bs),
        ("train_fraction", args.train_fraction.map(|v| v.to_string())),
        ("synth_n", args.synth_n.map(|v| v.to_string())),
    ]);
    let cfg = RunConfig::resolve(
        "forest",
        &defaults(&[
            ("mode", "grid"),
            ("B", "100"),
            ("m", "3"),
            ("ms", "1,3,5,10"),
            ("bs", "100,200"),
            ("train_fraction", "0.5"),
            ("synth_n", "600"),
        ]),
        args.common.config.as_deref(),
        &overrides,
    )?;
    setup_threads(&cfg)?;
    let tree = SeedTree::new(cfg.parse("seed")?);
    let ds = svm_dataset(&cfg, &tree)?;
    let (train, test) = split_pair(&ds, cfg.parse("train_fraction")?, tree.child(1).seed())?;
    cfg.write_manifest()?;
    match cfg.get("mode") {
        "grid" => {
            let ms: Vec<usize> = cfg.parse_list("ms")?;
            let bs: Vec<usize> = cfg.parse_list("bs")?;
            let grid = ensemble::forest_grid(&train, &test, &ms, &bs, tree.child(2).seed())
                .map_err(core_err)?;
            let mut rows = Vec::new();
            for (mi, &m) in ms.iter().enumerate() {
                for (bi, &b) in bs.iter().enumerate() {
                    rows.push(format!("{m},{b},{}", grid[mi][bi]));
                }
            }
            let path = write_csv_file(&cfg.out_dir(), "grid.csv", "m,B,errors", &rows)?;
            println!("forest grid: {} cells in {}", rows.len(), path.display());
        }
        "train" => {
            let forest =
                ensemble::random_forest(&train, cfg.parse("B")?, cfg.parse("m")?, tree.child(2).seed())
                    .map_err(core_err)?;
            let train_err = misclassification(
                &forest.predict(train.features()),
                train.labels().map_err(core_err)?,
            )
            .map_err(core_err)?;
            let test_err = misclassification(
                &forest.predict(test.features()),
                test.labels().map_err(core_err)?,
            )
            .map_err(core_err)?;
            let rows = vec![format!(
                "{},{},{},{},{train_err},{test_err}",
                forest.members.len(),
                forest.m,
                train.n(),
                test.n()
            )];
            let path = write_csv_file(
                &cfg.out_dir(),
                "summary.csv",
                "B,m,n_train,n_test,train_errors,test_errors",
                &rows,
            )?;
            println!(
                "forest: {test_err}/{} test errors, summary in {}",
                test.n(),
                path.display()
            );
        }
        other => return Err(format!("unknown forest mode {other:?}")),
    }
    Ok(())
}

fn criterion_spec(cfg: &RunConfig, n: usize) -> CliResult<select::CriterionSpec> {
    match cfg.get("criterion") {
        "aic" => Ok(select::CriterionSpec::aic()),
        "bic" => Ok(select::CriterionSpec::bic(n)),
        "custom" => select::CriterionSpec::custom(cfg.parse("gamma")?).map_err(core_err),
        other => Err(format!("unknown criterion {other:?} (use aic | bic | custom)")),
    }
}

/// Variable display name: the dataset's column name.
fn var_name(ds: &Dataset, j: usize) -> &str {
    &ds.feature_names()[j]
}

fn frequency_rows(ds: &Dataset, tally: &select::VoteTally) -> Vec<String> {
    (0..ds.d())
        .map(|j| {
            format!(
                "{},{},{}",
                var_name(ds, j),
                tally.frequencies[j],
                u8::from(tally.selected.contains(j))
            )
        })
        .collect()
}

fn selected_names(ds: &Dataset, mask: &select::SubsetMask) -> String {
    let names: Vec<&str> = mask.indices().into_iter().map(|j| var_name(ds, j)).collect();
    if names.is_empty() {
        "(none)".to_string()
    } else {
        names.join(",")
    }
}

fn run_select(args: SelectArgs) -> CliResult<()> {
    let mut overrides = args.common.overrides();
    overrides.extend([
        ("mode", args.mode),
        ("criterion", args.criterion),
        ("gamma", args.gamma.map(|v| v.to_string())),
        ("B", args.b.map(|v| v.to_string())),
        ("generations", args.generations.map(|v| v.to_string())),
        ("tau", args.tau.map(|v| v.to_string())),
        ("population", args.population.map(|v| v.to_string())),
        ("true_vars", args.true_vars),
    ]);
    let cfg = RunConfig::resolve(
        "select",
        &defaults(&[
            ("mode", "universes"),
            ("criterion", "aic"),
            ("gamma", "2"),
            ("B", "10"),
            ("generations", "6"),
            ("tau", "0.5"),
            ("population", "50"),
            ("true_vars", "2,5,8"),
        ]),
        args.common.config.as_deref(),
        &overrides,
    )?;
    setup_threads(&cfg)?;
    let tree = SeedTree::new(cfg.parse("seed")?);
    let ds = match cfg.path("data") {
        Some(path) => {
            data::load_csv(&path, "label", &LabelCoding::Real).map_err(core_err)?
        }
        None => synth::linear_toy(tree.child(0).seed()),
    };
    let spec = criterion_spec(&cfg, ds.n())?;
    let ga = select::GaParams {
        population: cfg.parse("population")?,
        ..select::GaParams::default()
    };
    cfg.write_manifest()?;
    let out = cfg.out_dir();
    match cfg.get("mode") {
        "exhaustive" => {
            let true_vars: Vec<usize> = cfg.parse_list("true_vars")?;
            let (best, table) = select::exhaustive_search(&ds, &spec).map_err(core_err)?;
            let rows: Vec<String> = table
                .iter()
                .map(|(mask, f)| {
                    // group 1: contains every declared true variable (1-based)
                    let group = if !true_vars.is_empty()
                        && true_vars.iter().all(|&v| v >= 1 && mask.contains(v - 1))
                    {
                        1
                    } else {
                        2
                    };
                    format!("{},{},{f},{group}", mask.to_integer(), mask.len())
                })
                .collect();
            let path = write_csv_file(&out, "table.csv", "mask,size,f,group", &rows)?;
            println!(
                "select exhaustive: best subset {{{}}}, table in {}",
                selected_names(&ds, &best),
                path.display()
            );
        }
        "evolve" => {
            let r = select::evolve(
                &ds,
                &spec,
                &ga,
                cfg.parse("generations")?,
                tree.child(1).seed(),
            )
            .map_err(core_err)?;
            let rows = vec![format!(
                "{},{},{}",
                r.best_mask.to_integer(),
                r.best_mask.len(),
                r.best_score
            )];
            let path = write_csv_file(&out, "best.csv", "mask,size,f", &rows)?;
            println!(
                "select evolve: best subset {{{}}} (F = {}), in {}",
                selected_names(&ds, &r.best_mask),
                r.best_score,
                path.display()
            );
        }
        "universes" => {
            let (tally, results) = select::parallel_universes(
                &ds,
                &spec,
                &ga,
                cfg.parse("B")?,
                cfg.parse("generations")?,
                cfg.parse("tau")?,
                tree.child(1).seed(),
            )
            .map_err(core_err)?;
            write_csv_file(
                &out,
                "frequencies.csv",
                "variable,frequency,selected",
                &frequency_rows(&ds, &tally),
            )?;
            let universe_rows: Vec<String> = results
                .iter()
                .enumerate()
                .map(|(u, r)| format!("{u},{},{}", r.best_mask.to_integer(), r.best_score))
                .collect();
            write_csv_file(&out, "universes.csv", "universe,mask,f", &universe_rows)?;
            println!(
                "select universes: B = {}, selected {{{}}}",
                tally.b,
                selected_names(&ds, &tally.selected)
            );
        }
        "bagged-stepwise" => {
            let tally =
                select::bagged_stepwise(&ds, &spec, cfg.parse("B")?, tree.child(1).seed())
                    .map_err(core_err)?;
            write_csv_file(
                &out,
                "frequencies.csv",
                "variable,frequency,selected",
                &frequency_rows(&ds, &tally),
            )?;
            println!(
                "select bagged-stepwise: B = {}, selected {{{}}}",
                tally.b,
                selected_names(&ds, &tally.selected)
            );
        }
        other => return Err(format!("unknown select mode {other:?}")),
    }
    Ok(())
}

fn run_experiments(args: ExperimentsArgs) -> CliResult<()> {
    let mut overrides = args.common.overrides();
    overrides.extend([
        ("mode", args.mode),
        ("n", args.n.map(|v| v.to_string())),
        ("gammas", args.gammas),
        ("hs", args.hs),
        ("epochs", args.epochs.map(|v| v.to_string())),
        ("ms", args.ms),
        ("bs", args.bs),
        ("Bs", args.universe_bs),
        ("replicates", args.replicates.map(|v| v.to_string())),
        ("generations", args.generations.map(|v| v.to_string())),
        ("train_fraction", args.train_fraction.map(|v| v.to_string())),
        ("synth_n", args.synth_n.map(|v| v.to_string())),
    ]);
    let cfg = RunConfig::resolve(
        "experiments",
        &defaults(&[
            ("mode", "fig2"),
            ("n", "200"),
            ("gammas", "1,10,100"),
            ("hs", "0.0001,0.001,0.01,0.1,1"),
            ("epochs", "20"),
            ("ms", "1,3,5,10,30"),
            ("bs", "100,200,400"),
            ("Bs", "1,5,10"),
            ("replicates", "20"),
            ("generations", "6"),
            ("train_fraction", "0.5"),
            ("synth_n", "1500"),
        ]),
        args.common.config.as_deref(),
        &overrides,
    )?;
    setup_threads(&cfg)?;
    let tree = SeedTree::new(cfg.parse("seed")?);
    cfg.write_manifest()?;
    let out = cfg.out_dir();
    match cfg.get("mode") {
        "fig2" => {
            let (points, radii) = synth::spherical_toy(cfg.parse("n")?, tree.child(0).seed());
            let spec = KernelSpec::gaussian(1.0).map_err(core_err)?;
            let model = kpca::fit_kpca_matrix(&points, &spec, 2, None).map_err(core_err)?;
            let scores = model.training_scores();
            let rows: Vec<String> = (0..points.nrows())
                .map(|i| {
                    format!(
                        "{},{},{},{},{}",
                        points[(i, 0)],
                        points[(i, 1)],
                        radii[i],
                        scores[(i, 0)],
                        scores[(i, 1)]
                    )
                })
                .collect();
            let path =
                write_csv_file(&out, "fig2.csv", "x1,x2,radius,score1,score2", &rows)?;
            println!("fig2: kernel PCA scores for {} points in {}", rows.len(), path.display());
        }
        "fig3a" | "fig3b" => {
            let ds = match load_class_data(&cfg)? {
                Some(ds) => ds,
                None => synth::classification_synthetic(
                    cfg.parse("synth_n")?,
                    30,
                    tree.child(0).seed(),
                ),
            };
            let (train, test) =
                split_pair(&ds, cfg.parse("train_fraction")?, tree.child(1).seed())?;
            if cfg.get("mode") == "fig3a" {
                let gammas: Vec<f64> = cfg.parse_list("gammas")?;
                let hs: Vec<f64> = cfg.parse_list("hs")?;
                let grid = svm::sensitivity_grid(
                    &train,
                    &test,
                    &gammas,
                    &hs,
                    cfg.parse("epochs")?,
                    tree.child(2).seed(),
                )
                .map_err(core_err)?;
                let mut rows = Vec::new();
                for (gi, &gamma) in gammas.iter().enumerate() {
                    for (hi, &h) in hs.iter().enumerate() {
                        rows.push(format!("{gamma},{h},{}", grid.errors[gi][hi]));
                    }
                }
                let path = write_csv_file(&out, "fig3a.csv", "gamma,h,errors", &rows)?;
                println!("fig3a: SVM error surface in {}", path.display());
            } else {
                let ms: Vec<usize> = cfg.parse_list("ms")?;
                let bs: Vec<usize> = cfg.parse_list("bs")?;
                let grid =
                    ensemble::forest_grid(&train, &test, &ms, &bs, tree.child(2).seed())
                        .map_err(core_err)?;
                let mut rows = Vec::new();
                for (mi, &m) in ms.iter().enumerate() {
                    for (bi, &b) in bs.iter().enumerate() {
                        rows.push(format!("{m},{b},{}", grid[mi][bi]));
                    }
                }
                let path = write_csv_file(&out, "fig3b.csv", "m,B,errors", &rows)?;
                println!("fig3b: forest error surface in {}", path.display());
            }
        }
        "fig4" => {
            let ds = synth::linear_toy(tree.child(0).seed());
            let spec = select::CriterionSpec::aic();
            let (best, table) = select::exhaustive_search(&ds, &spec).map_err(core_err)?;
            let rows: Vec<String> = table
                .iter()
                .map(|(mask, f)| {
                    let group = if synth::LINEAR_TOY_TRUE.iter().all(|&j| mask.contains(j)) {
                        1
                    } else {
                        2
                    };
                    format!("{},{},{f},{group}", mask.to_integer(), mask.len())
                })
                .collect();
            let path = write_csv_file(&out, "fig4.csv", "mask,size,f,group", &rows)?;
            println!(
                "fig4: 1024-subset AIC table in {} (best {{{}}})",
                path.display(),
                selected_names(&ds, &best)
            );
        }
        "fig5" => {
            let universe_counts: Vec<usize> = cfg.parse_list("Bs")?;
            let replicates: usize = cfg.parse("replicates")?;
            let generations: usize = cfg.parse("generations")?;
            let spec = select::CriterionSpec::aic();
            let ga = select::GaParams::default();
            let mut rows = Vec::new();
            for rep in 0..replicates {
                let ds = synth::linear_toy(tree.child(0).child(rep as u32).seed());
                for (bi, &b) in universe_counts.iter().enumerate() {
                    let (tally, _) = select::parallel_universes(
                        &ds,
                        &spec,
                        &ga,
                        b,
                        generations,
                        0.5,
                        tree.child(1).child(rep as u32).child(bi as u32).seed(),
                    )
                    .map_err(core_err)?;
                    for j in 0..ds.d() {
                        rows.push(format!(
                            "{b},{rep},{},{},{}",
                            var_name(&ds, j),
                            tally.frequencies[j],
                            u8::from(tally.selected.contains(j))
                        ));
                    }
                }
            }
            let path = write_csv_file(
                &out,
                "fig5.csv",
                "B,replicate,variable,frequency,selected",
                &rows,
            )?;
            println!("fig5: universe-count sweep in {}", path.display());
        }
        other => {
            return Err(format!(
                "unknown experiment {other:?} (use fig2 | fig3a | fig3b | fig4 | fig5)"
            ))
        }
    }
    Ok(())
}

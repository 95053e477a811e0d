//! `mvguide` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mvguide::dataset::{load_csv, read_columns, Column, ColumnRole, Dataset};
use mvguide::sim::{
    bias_experiment, mse_experiment, synthetic_concrete, BiasOptions, MseMethod, MseOptions, ScenarioKind,
};
use mvguide::tree::{cross_validate, CvOptions, Prediction};
use mvguide::{Cell, GrowConfig, Layout, LoadOptions, Method, RoleSpec, Sample, Tree};

const DEFAULT_SEED: u64 = 20_090_101;

#[derive(Parser)]
#[command(name = "mvguide", version, about = "Multiresponse and longitudinal regression trees")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Guide,
    Baseline,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Guide => Method::Guide,
            MethodArg::Baseline => Method::Baseline,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasScenario {
    /// The predictors as given.
    Plain,
    /// Adds uniform categorical predictors with 2 and 20 levels.
    Augmented,
    /// 80% of `fine_aggr` missing.
    Missing,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a tree and prune it by cross-validation.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// `name:role` lines.
        #[arg(long)]
        roles: PathBuf,
        /// Require a longitudinal layout (time and subject columns).
        #[arg(long)]
        longitudinal: bool,
        #[arg(long, default_value_t = 3)]
        intervals: usize,
        /// Lowess span.
        #[arg(long, default_value_t = 2.0 / 3.0)]
        span: f64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0.0)]
        se_rule: f64,
        /// Weight responses by their inverse root variance.
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_enum, default_value_t = MethodArg::Guide)]
        method: MethodArg,
        #[arg(long)]
        min_node_size: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Model JSON; the text tree and CSVs are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict every row of a data file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Roles file; defaults to treating model predictors by name.
        #[arg(long)]
        roles: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a saved tree.
    Show {
        #[arg(long)]
        model: PathBuf,
    },
    /// Root-node selection frequencies under permuted predictors.
    SimulateBias {
        /// Population table; the bundled synthetic concrete data if absent.
        #[arg(long, requires = "roles")]
        data: Option<PathBuf>,
        #[arg(long)]
        roles: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = BiasScenario::Plain)]
        scenario: BiasScenario,
        #[arg(long, value_enum, default_value_t = MethodArg::Guide)]
        method: MethodArg,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Frequencies CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Prediction error against known mean functions.
    SimulateMse {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Training rows (subjects for longitudinal scenarios).
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Comma-separated subset of univariate_guide, multivariate_guide, baseline.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0.0)]
        se_rule: f64,
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    set_threads(cli.threads)?;
    match cli.command {
        Command::Fit {
            data,
            roles,
            longitudinal,
            intervals,
            span,
            folds,
            se_rule,
            normalize,
            method,
            min_node_size,
            seed,
            out,
        } => {
            let ds = load(&data, &roles)?;
            if longitudinal && ds.layout != Layout::Longitudinal {
                bail!("--longitudinal needs time and subject columns in the roles file");
            }
            let sample = Sample::from_dataset(&ds)?;
            let mut config = GrowConfig::for_layout(ds.layout);
            config.intervals = intervals;
            config.lowess.span = span;
            config.normalize = normalize;
            if let Some(m) = min_node_size {
                config.min_node_size = m;
            }
            let opts = CvOptions {
                folds,
                se_rule,
                seed,
                method: method.into(),
            };
            let tree = cross_validate(&sample, &config, &opts)?.tree;
            tree.save(&out).with_context(|| format!("writing {}", out.display()))?;
            let text = tree.render();
            write(&out.with_extension("tree.txt"), &text)?;
            write(&out.with_extension("summary.csv"), &tree.summary_csv())?;
            if tree.layout == Layout::Longitudinal {
                write(&out.with_extension("curves.csv"), &tree.curve_csv())?;
            }
            print!("{text}");
        }
        Command::Predict {
            model,
            data,
            roles,
            out,
        } => {
            let tree = Tree::load(&model).with_context(|| format!("reading {}", model.display()))?;
            let roles = match roles {
                Some(p) => RoleSpec::from_file(&p)?,
                None => model_roles(&tree),
            };
            let opts = LoadOptions {
                exclude_unlisted: true,
                ..Default::default()
            };
            let file = fs::File::open(&data).with_context(|| format!("reading {}", data.display()))?;
            let columns = read_columns(file, &roles, &opts).with_context(|| format!("loading {}", data.display()))?;
            write(&out, &predictions_csv(&tree, &columns)?)?;
        }
        Command::Show { model } => {
            let tree = Tree::load(&model).with_context(|| format!("reading {}", model.display()))?;
            print!("{}", tree.render());
        }
        Command::SimulateBias {
            data,
            roles,
            scenario,
            method,
            trials,
            seed,
            csv,
        } => {
            let ds = match (data, roles) {
                (Some(d), Some(r)) => load(&d, &r)?,
                _ => synthetic_concrete(),
            };
            let population = Sample::from_dataset(&ds)?;
            let mut opts = BiasOptions {
                trials,
                seed,
                method: method.into(),
                ..Default::default()
            };
            match scenario {
                BiasScenario::Plain => {}
                BiasScenario::Augmented => opts.augment = vec![2, 20],
                BiasScenario::Missing => {
                    let var = population
                        .predictors
                        .iter()
                        .position(|p| p.name == "fine_aggr")
                        .context("the missing scenario needs a `fine_aggr` predictor")?;
                    opts.missing = Some((var, 0.8));
                }
            }
            let report = bias_experiment(&population, &opts)?;
            print!("{}", report.to_text());
            if let Some(p) = csv {
                write(&p, &report.to_csv())?;
            }
        }
        Command::SimulateMse {
            scenario,
            trials,
            seed,
            n,
            methods,
            folds,
            se_rule,
            normalize,
            noise_scale,
            csv,
        } => {
            let kind: ScenarioKind = scenario.parse()?;
            let methods = if methods.is_empty() {
                if kind.is_longitudinal() {
                    vec![MseMethod::MultivariateGuide]
                } else {
                    MseMethod::ALL.to_vec()
                }
            } else {
                methods.iter().map(|m| m.parse()).collect::<mvguide::Result<_>>()?
            };
            let opts = MseOptions {
                trials,
                seed,
                n,
                methods,
                test: None,
                folds,
                se_rule,
                normalize,
                noise_scale,
            };
            let report = mse_experiment(kind, &opts)?;
            print!("{}", report.to_text());
            if let Some(p) = csv {
                write(&p, &report.to_csv())?;
            }
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: Option<usize>) -> Result<()> {
    Ok(())
}

fn load(data: &Path, roles: &Path) -> Result<Dataset> {
    let roles = RoleSpec::from_file(roles).with_context(|| format!("reading {}", roles.display()))?;
    load_csv(data, &roles, &LoadOptions::default()).with_context(|| format!("loading {}", data.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The model's predictors; other columns are ignored, so longitudinal data
/// needs an explicit roles file naming the time column.
fn model_roles(tree: &Tree) -> RoleSpec {
    RoleSpec::new(tree.schema.predictors.iter().map(|p| {
        let role = match p.kind {
            mvguide::PredictorKind::Numeric => ColumnRole::NumericPredictor,
            mvguide::PredictorKind::Categorical => ColumnRole::CategoricalPredictor,
        };
        (p.name.clone(), role)
    }))
}

fn predictions_csv(tree: &Tree, columns: &[Column]) -> Result<String> {
    let rows = tree.cells_from_columns(columns)?;
    let times: Option<Vec<Cell>> = match tree.layout {
        Layout::Multiresponse => None,
        Layout::Longitudinal => {
            let col = columns
                .iter()
                .find(|c| c.role == ColumnRole::Time)
                .context("longitudinal predictions need a time column in the roles file")?;
            Some((0..col.len()).map(|r| col.cell(r)).collect())
        }
    };
    let mut out = match tree.layout {
        Layout::Multiresponse => tree.schema.responses.join(","),
        Layout::Longitudinal => "fitted".to_string(),
    };
    out.push('\n');
    for (r, x) in rows.iter().enumerate() {
        let u = match &times {
            Some(t) => match t[r] {
                Cell::Number(u) => Some(u),
                _ => bail!("row {}: missing time", r + 1),
            },
            None => None,
        };
        match tree.predict(x, u)? {
            Prediction::Vector(v) => {
                let cells: Vec<String> = v.iter().map(f64::to_string).collect();
                out.push_str(&cells.join(","));
            }
            Prediction::Scalar(v) => out.push_str(&v.to_string()),
        }
        out.push('\n');
    }
    Ok(out)
}

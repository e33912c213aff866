use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::de::DeserializeOwned;
use ssr_cli::{
    parse_config, run_compare, run_grid, run_single, CliError, ExperimentConfig, Result, RunData,
    SweepParam, SweepSpec,
};
use ssr_core::noise::{apply_noise, load_embeddings, load_pool, make_gaussian_dataset, write_embeddings, write_pool};
use ssr_core::{FcDistance, NoiseKind, NoiseSpec, SelectionMode};

#[derive(Parser)]
#[command(name = "ssr", version, about = "Sample selection and relabelling on noisy embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test split and an out-of-distribution pool.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Directory for train.ssrd, test.ssrd and ood.ssrd.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply the configured label noise to an embedding file.
    Inject {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Out-of-distribution pool, required for combined noise.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single experiment.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Sweep one hyperparameter.
    Grid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// theta_s, theta_r or k
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Compare selection strategies on the same data.
    CompareModes {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Training embeddings; a synthetic dataset is generated when absent.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Root directory for run outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

/// Config file plus per-key overrides; flags win over the file.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    theta_s: Option<f64>,
    #[arg(long)]
    theta_r: Option<f64>,
    #[arg(long = "k")]
    k_neighbours: Option<usize>,
    #[arg(long = "lambda")]
    lambda_fc: Option<f64>,
    #[arg(long = "alpha")]
    mixup_alpha: Option<f64>,
    #[arg(long)]
    no_mixup: bool,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// cosine or l2
    #[arg(long, value_parser = enum_value::<FcDistance>)]
    fc_distance: Option<FcDistance>,
    #[arg(long, value_parser = enum_value::<SelectionMode>)]
    selection: Option<SelectionMode>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    unbalanced: bool,
    #[arg(long)]
    persistent_relabel: bool,
    /// Write zeros in the timing columns so outputs are reproducible.
    #[arg(long)]
    no_timings: bool,
    /// symmetric, asymmetric or combined
    #[arg(long, value_parser = enum_value::<NoiseKind>)]
    noise: Option<NoiseKind>,
    #[arg(long)]
    noise_ratio: Option<f64>,
    #[arg(long)]
    open_ratio: Option<f64>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    separation: Option<f64>,
}

fn enum_value<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => parse_config(p)?,
            None => ExperimentConfig::default(),
        };
        let t = &mut cfg.train;
        set!(t.seed, self.seed);
        set!(t.epochs, self.epochs);
        set!(t.theta_s, self.theta_s);
        set!(t.theta_r, self.theta_r);
        set!(t.k_neighbours, self.k_neighbours);
        set!(t.lambda_fc, self.lambda_fc);
        set!(t.mixup_alpha, self.mixup_alpha);
        set!(t.learning_rate, self.learning_rate);
        set!(t.batch_size, self.batch_size);
        set!(t.fc_distance, self.fc_distance);
        set!(t.selection, self.selection);
        set!(t.tau, self.tau);
        t.mixup &= !self.no_mixup;
        t.balanced &= !self.unbalanced;
        t.persistent_relabel |= self.persistent_relabel;
        t.record_timings &= !self.no_timings;

        if self.noise.is_some() || self.noise_ratio.is_some() || self.open_ratio.is_some() {
            let n = cfg.noise.get_or_insert_with(NoiseSpec::default);
            set!(n.kind, self.noise);
            set!(n.total_ratio, self.noise_ratio);
            set!(n.open_ratio, self.open_ratio);
        }
        if let Some(n) = &mut cfg.noise {
            // noise and training share the seed unless the file says otherwise
            if self.seed.is_some() {
                n.seed = cfg.train.seed;
            }
        }
        if self.classes.is_some() || self.per_class.is_some() || self.dim.is_some() || self.separation.is_some() {
            let s = cfg.synth.get_or_insert_with(Default::default);
            set!(s.num_classes, self.classes);
            set!(s.per_class, self.per_class);
            set!(s.dim, self.dim);
            set!(s.separation, self.separation);
        }
        if let (Some(s), Some(seed)) = (&mut cfg.synth, self.seed) {
            s.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn data_for(cfg: &ExperimentConfig, args: &DataArgs) -> Result<RunData> {
    match &args.train {
        Some(train) => RunData::load(train, args.test.as_deref()),
        None => RunData::synthetic(cfg),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common, out } => {
            let cfg = common.resolve()?;
            let data = make_gaussian_dataset(&cfg.synth_or_default())?;
            std::fs::create_dir_all(&out)?;
            write_embeddings(out.join("train.ssrd"), &data.train)?;
            write_embeddings(out.join("test.ssrd"), &data.test)?;
            write_pool(out.join("ood.ssrd"), &data.ood_pool)?;
            println!("{}", out.display());
        }
        Command::Inject { common, input, pool, out } => {
            let cfg = common.resolve()?;
            let spec = cfg
                .noise
                .clone()
                .ok_or_else(|| CliError::Range("no noise configured (use --noise or a noise section)".into()))?;
            let ds = load_embeddings(&input)?;
            let pool = match &pool {
                Some(p) => load_pool(p)?,
                None => Array2::zeros((0, ds.dim())),
            };
            let noisy = apply_noise(&ds, &pool, &spec)?;
            write_embeddings(&out, &noisy)?;
            println!("{}", out.display());
        }
        Command::Run { common, data } => {
            let cfg = common.resolve()?;
            let run_data = data_for(&cfg, &data)?;
            let (manifest, _) = run_single(&cfg, &run_data, &data.out, common.config.as_deref())?;
            println!("{}", manifest.output_dir.display());
        }
        Command::Grid { common, data, param, values } => {
            let cfg = common.resolve()?;
            let run_data = data_for(&cfg, &data)?;
            let sweep = SweepSpec {
                param: SweepParam::parse(&param)?,
                values,
            };
            let outcome = run_grid(&cfg, &sweep, &run_data, &data.out, common.config.as_deref())?;
            println!("{}", outcome.dir.display());
        }
        Command::CompareModes { common, data } => {
            let cfg = common.resolve()?;
            let run_data = data_for(&cfg, &data)?;
            let (manifest, _) = run_compare(&cfg, &run_data, &data.out, common.config.as_deref())?;
            println!("{}", manifest.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

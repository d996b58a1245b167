use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fockml::data::DatasetKind;
use fockml::Error;
use fockml_cli::commands;
use fockml_cli::config::RunConfig;
use fockml_cli::report::RunReport;

#[derive(Parser)]
#[command(name = "fockml", version, about = "Linear optical circuit experiments")]
struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory. Defaults to `runs/<command>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for batch evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a toy dataset as CSV.
    GenData {
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        factor: Option<f64>,
    },
    /// Fit a degree-three Fourier series with several input states.
    FitFourier {
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        max_evals: Option<usize>,
    },
    /// Degrees-of-freedom table for photon-number-resolving and threshold detection.
    DofTable {
        #[arg(long)]
        m_max: Option<u64>,
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Train variational classifiers, or evaluate a saved model on a CSV file.
    ClassifyVariational {
        #[arg(long, value_delimiter = ',')]
        datasets: Option<Vec<String>>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        data: Option<String>,
    },
    /// Fit Gaussian kernels with the two-mode interferometer.
    FitKernel {
        #[arg(long, value_delimiter = ',')]
        photons: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Kernel ridge classification with the fitted circuit kernel.
    ClassifyKernel {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        photons: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Random kitchen sinks with circuit-derived cosine features.
    Rks {
        #[arg(long)]
        photons: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<usize>>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        standardize: bool,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    let (name, report): (&str, RunReport) = match cli.command {
        Command::GenData { name, n, noise, factor } => {
            if let Some(name) = name {
                cfg.gen_data.name = DatasetKind::parse(&name)?;
            }
            set(&mut cfg.gen_data.samples, n);
            if noise.is_some() {
                cfg.gen_data.noise = noise;
            }
            set(&mut cfg.gen_data.factor, factor);
            ("gen-data", commands::cmd_gen_data(&cfg)?)
        }
        Command::FitFourier { restarts, max_evals } => {
            set(&mut cfg.fit_fourier.restarts, restarts);
            set(&mut cfg.fit_fourier.max_evals, max_evals);
            ("fit-fourier", commands::cmd_fit_fourier(&cfg)?)
        }
        Command::DofTable { m_max, n_max } => {
            set(&mut cfg.dof_table.m_max, m_max);
            set(&mut cfg.dof_table.n_max, n_max);
            ("dof-table", commands::cmd_dof_table(&cfg)?)
        }
        Command::ClassifyVariational { datasets, seeds, model, data } => {
            if let Some(ds) = datasets {
                cfg.classify_variational.datasets = ds.iter().map(|s| DatasetKind::parse(s)).collect::<Result<_, _>>()?;
            }
            set(&mut cfg.classify_variational.split.seeds, seeds);
            if model.is_some() {
                cfg.classify_variational.model = model;
            }
            if data.is_some() {
                cfg.classify_variational.data = data;
            }
            ("classify-variational", commands::cmd_classify_variational(&cfg)?)
        }
        Command::FitKernel { photons, sigma, grid_points } => {
            set(&mut cfg.fit_kernel.photons, photons);
            set(&mut cfg.fit_kernel.sigmas, sigma);
            set(&mut cfg.fit_kernel.grid_points, grid_points);
            ("fit-kernel", commands::cmd_fit_kernel(&cfg)?)
        }
        Command::ClassifyKernel { dataset, photons, sigma } => {
            if let Some(d) = dataset {
                cfg.classify_kernel.dataset = DatasetKind::parse(&d)?;
            }
            set(&mut cfg.classify_kernel.photons, photons);
            set(&mut cfg.classify_kernel.sigma, sigma);
            ("classify-kernel", commands::cmd_classify_kernel(&cfg)?)
        }
        Command::Rks { photons, gamma, k, features, alpha, standardize } => {
            set(&mut cfg.rks.photons, photons);
            set(&mut cfg.rks.gamma, gamma);
            set(&mut cfg.rks.k, k);
            set(&mut cfg.rks.features, features);
            set(&mut cfg.rks.alpha, alpha);
            cfg.rks.standardize |= standardize;
            ("rks", commands::cmd_rks(&cfg)?)
        }
    };
    let out = cli.out.unwrap_or_else(|| PathBuf::from("runs").join(name));
    report.write(&out)?;
    println!("{}", report.metrics_json()?);
    eprintln!("wrote {} in {:.2}s", out.display(), report.wall_time_s);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_numerical() => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use boxctx::config::RunConfig;
use boxctx::io;
use boxctx::pipeline::{self, WORKERS_ENV};
use boxctx::report::render_summary;
use boxctx_core::classify::{Algorithm, ClassifierSpec};
use boxctx_core::context::{
    derive_constraints, describe, enumerate_feasible_bounded, validate_structure, ContextError, ContextStructure,
};
use boxctx_core::evaluation::{summarize, Method, DEFAULT_ALPHA};
use boxctx_core::optimizer::FEASIBLE_SIZE_LIMIT;
use boxctx_core::signal::segment;
use boxctx_core::synth::{generate, SynthSpec};
use clap::{Parser, Subcommand};

const EXIT_INVALID: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_NO_SOLUTIONS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "boxctx",
    version,
    about = "Context-dependent sequence classification with box structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a structure file; exit 0 iff it is valid.
    Validate { structure: PathBuf },
    /// Count and list the feasible bindings of a structure.
    Enumerate {
        structure: PathBuf,
        /// Write the bindings as a JSON list of permutations.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Print the box tables under the first feasible binding.
        #[arg(long)]
        describe: bool,
    },
    /// Search the best binding on a whole signalset and train its ensemble.
    Optimize {
        #[arg(short, long)]
        config: PathBuf,
        /// Restrict to one classifier (nn, nb, rf).
        #[arg(long)]
        classifier: Option<Algorithm>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validated comparison of the configured methods and classifiers.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long, value_delimiter = ',')]
        classifiers: Option<Vec<Algorithm>>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Summarise a metrics CSV: means, ranks and significance marks.
    Report {
        metrics: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Also write the summary as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a synthetic signalset directory.
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        classes: u32,
        #[arg(long, default_value_t = 100)]
        records_per_class: usize,
        #[arg(long, default_value_t = 4)]
        channels: usize,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export the feature matrix of a signalset as CSV.
    Features {
        signalset: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        window_ms: Option<u32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Validate { structure } => validate(structure),
        Command::Enumerate {
            structure,
            out,
            describe,
        } => enumerate(structure, out, describe),
        Command::Optimize {
            config,
            classifier,
            output,
            seed,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(a) = classifier {
                cfg.classifiers.retain(|c| c.algorithm == a);
                if cfg.classifiers.is_empty() {
                    cfg.classifiers.push(ClassifierSpec::new(a));
                }
            }
            optimize(&cfg)
        }
        Command::Run {
            config,
            output,
            seed,
            methods,
            classifiers,
            folds,
            repetitions,
            workers,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = methods {
                cfg.methods = m;
            }
            if let Some(c) = classifiers {
                cfg.classifiers = c.into_iter().map(ClassifierSpec::new).collect();
            }
            if let Some(f) = folds {
                cfg.folds = f;
            }
            if let Some(r) = repetitions {
                cfg.repetitions = r;
            }
            run(&cfg, workers)
        }
        Command::Report { metrics, alpha, json } => {
            let rows = io::read_metrics_csv(&metrics)?;
            let summary = summarize(&rows, alpha)?;
            print!("{}", render_summary(&summary));
            if let Some(p) = json {
                io::write_json(&p, &summary)?;
            }
            Ok(0)
        }
        Command::Synth {
            out,
            classes,
            records_per_class,
            channels,
            samples,
            seed,
        } => {
            let spec = SynthSpec {
                num_classes: classes,
                records_per_class,
                num_channels: channels,
                samples,
                seed,
                ..SynthSpec::default()
            };
            let set = generate(&spec)?;
            io::save_signalset(&out, &set)?;
            println!("wrote {} records ({} classes) to {}", set.len(), classes, out.display());
            Ok(0)
        }
        Command::Features {
            signalset,
            out,
            window_ms,
        } => {
            let mut set = io::load_signalset(&signalset)?;
            if let Some(w) = window_ms {
                set = segment(&set, w)?;
            }
            io::write_features_csv(&out, &set)?;
            println!("wrote {} feature rows to {}", set.len(), out.display());
            Ok(0)
        }
    }
}

fn validate(path: PathBuf) -> Result<u8> {
    let def = io::read_structure_def(&path)?;
    let violations = validate_structure(&def);
    if !violations.is_empty() {
        println!("INVALID, {} violation(s):", violations.len());
        for v in violations {
            println!("  - {v}");
        }
        return Ok(EXIT_INVALID);
    }
    let s = ContextStructure::new(def)?;
    println!(
        "OK, C={}, M={}, L={}",
        s.num_classes(),
        s.num_movements(),
        s.box_count()
    );
    Ok(0)
}

fn enumerate(path: PathBuf, out: Option<PathBuf>, show: bool) -> Result<u8> {
    let def = io::read_structure_def(&path)?;
    let violations = validate_structure(&def);
    if !violations.is_empty() {
        for v in violations {
            eprintln!("  - {v}");
        }
        bail!("{}: invalid structure", path.display());
    }
    let s = ContextStructure::new(def)?;
    let set = match derive_constraints(&s).and_then(|t| enumerate_feasible_bounded(&t, FEASIBLE_SIZE_LIMIT)) {
        Ok(set) => set,
        Err(ContextError::Infeasible(m)) => {
            eprintln!("no class available for {m}");
            println!("0");
            if let Some(p) = out {
                io::write_json(&p, &Vec::<Vec<u32>>::new())?;
            }
            return Ok(EXIT_NO_SOLUTIONS);
        }
        Err(e) => return Err(e.into()),
    };
    println!("{}", set.len());
    if let Some(p) = out {
        io::write_feasible(&p, &set)?;
    }
    if show {
        if let Some(b) = set.get(0) {
            print!("{}", describe(&s, b));
        }
    }
    Ok(if set.is_empty() { EXIT_NO_SOLUTIONS } else { 0 })
}

fn optimize(cfg: &RunConfig) -> Result<u8> {
    let (_, exp) = pipeline::prepare(cfg)?;
    println!("feasible bindings: {}", exp.feasible().len());
    for spec in &cfg.classifiers {
        let o = pipeline::optimize(&exp, spec).with_context(|| format!("classifier {}", spec.algorithm))?;
        let files = pipeline::write_optimized(&cfg.output, &o)?;
        println!(
            "{}: best {} fitness {:.4} ({:?}, {} evaluations) -> {}",
            o.classifier,
            o.search.best,
            o.search.fitness,
            o.search.method,
            o.search.evaluations,
            files.join(", ")
        );
        print!("{}", describe(exp.structure(), &o.search.best));
    }
    Ok(0)
}

fn run(cfg: &RunConfig, workers: Option<usize>) -> Result<u8> {
    let out = pipeline::execute(cfg, workers)?;
    print!("{}", render_summary(&out.summary));
    println!(
        "{} rows, feasible bindings {} ({:?}); outputs in {}",
        out.rows.len(),
        out.manifest.feasible_size,
        out.manifest.search,
        out.dir.display()
    );
    Ok(0)
}

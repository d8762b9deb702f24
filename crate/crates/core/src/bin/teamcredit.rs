use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use teamcredit::harness::{
    confidence_band, info_rows, load_config_file, run_blocks, write_figures, trial_rng, write_manifest, BlockWriter,
    ExperimentConfig, MetricsTable, DEFAULT_INFO_EPSILON, DEFAULT_INFO_MU, METRICS_FILE,
};
use teamcredit::infotheory::{classify_sparsity, Sparsity, SparsityThresholds};
use teamcredit::oracle::{run_verify, VerifyBudget, VerifyTarget};
use teamcredit::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "teamcredit", version, about = "Team reward sharing experiments for independent Q-learners")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Print progress per team size.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Config file of `key = value` lines.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train at the first listed team size.
    Run(RunArgs),
    /// Train at every listed team size.
    Sweep(RunArgs),
    /// Check closed forms and exact oracles against simulation.
    Verify {
        /// theorem1, lemma1, info-convergence, joint-oracle or all.
        #[arg(default_value = "all")]
        target: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write verify.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Information diagnostics under uniform play for each team size.
    InfoProbe {
        #[command(flatten)]
        run: RunArgs,
        /// Expected-info threshold ε for the sparsity verdict.
        #[arg(long, default_value_t = DEFAULT_INFO_EPSILON)]
        info_eps: f64,
        /// Info-variance threshold μ for the sparsity verdict.
        #[arg(long, default_value_t = DEFAULT_INFO_MU)]
        info_mu: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verbosity {
    Quiet,
    Normal,
    Verbose,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Csv(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn load(args: &RunArgs) -> teamcredit::Result<ExperimentConfig> {
    let mut cfg = load_config_file(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(dir) = &args.out {
        cfg.out_dir = dir.clone();
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn make_dir(dir: &Path) -> teamcredit::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn summarise(table: &MetricsTable, v: Verbosity) {
    if v == Verbosity::Quiet {
        return;
    }
    println!("{:>9}  {:>22}  {:>22}  {:>10}", "team_size", "mean_step_reward", "fraction_of_optimal", "q_gap");
    for n in table.team_sizes() {
        let cell = |m: &str| match confidence_band(&table.final_values(m, n)) {
            Some((mean, half)) => format!("{mean:.4} ± {half:.4}"),
            None => "-".into(),
        };
        println!(
            "{n:>9}  {:>22}  {:>22}  {:>10}",
            cell("mean_step_reward"),
            cell("fraction_of_optimal"),
            cell("q_gap")
        );
    }
}

fn train(args: &RunArgs, all_sizes: bool, v: Verbosity) -> teamcredit::Result<()> {
    let cfg = load(args)?;
    make_dir(&cfg.out_dir)?;
    let command = if all_sizes { "sweep" } else { "run" };
    write_manifest(&cfg, &cfg.out_dir, command)?;
    let csv_path = cfg.out_dir.join(METRICS_FILE);
    let mut writer = BlockWriter::create(&csv_path)?;
    let indices: Vec<usize> = if all_sizes {
        (0..cfg.team_sizes.len()).collect()
    } else {
        vec![0]
    };
    let start = Instant::now();
    let table = run_blocks(&cfg, &indices, |n, rows| {
        writer.write_block(rows)?;
        if v == Verbosity::Verbose {
            eprintln!(
                "team size {n}: {} trials, {} rows, {:.1}s elapsed",
                cfg.trials,
                rows.len(),
                start.elapsed().as_secs_f64()
            );
        }
        Ok(())
    })?;
    let figures = write_figures(&table, &cfg, &cfg.out_dir)?;
    summarise(&table, v);
    if v != Verbosity::Quiet {
        println!("wrote {}", csv_path.display());
        for f in figures {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn verify(target: &str, seed: u64, out: Option<&Path>, v: Verbosity) -> teamcredit::Result<bool> {
    let target = VerifyTarget::parse(target).ok_or_else(|| {
        Error::Config(format!(
            "unknown verify target {target:?}; expected theorem1, lemma1, info-convergence, joint-oracle or all"
        ))
    })?;
    let rows = run_verify(target, seed, &VerifyBudget::default())?;
    if v != Verbosity::Quiet {
        for r in &rows {
            println!("{r}");
        }
    }
    if let Some(dir) = out {
        make_dir(dir)?;
        let path = dir.join("verify.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["check", "n", "expected", "observed", "tolerance", "pass"])?;
        for r in &rows {
            w.write_record([
                r.check.clone(),
                r.n.to_string(),
                format!("{:?}", r.expected),
                format!("{:?}", r.observed),
                format!("{:?}", r.tolerance),
                r.pass.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Io { path, source: e })?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if v != Verbosity::Quiet {
        println!("{} checks, {} failed", rows.len(), failed);
    }
    Ok(failed == 0)
}

fn info_probe(args: &RunArgs, eps: f64, mu: f64, v: Verbosity) -> teamcredit::Result<()> {
    let cfg = load(args)?;
    if cfg.info_rollouts == 0 {
        return Err(Error::Config("info_rollouts is 0, which disables the info probe".into()));
    }
    let th = SparsityThresholds::new(eps, mu)?;
    make_dir(&cfg.out_dir)?;
    write_manifest(&cfg, &cfg.out_dir, "info-probe")?;
    let path = cfg.out_dir.join("info.csv");
    let mut writer = BlockWriter::create(&path)?;
    let mut table = MetricsTable::new();
    for (si, &n) in cfg.team_sizes.iter().enumerate() {
        let mut block = Vec::new();
        for trial in 0..cfg.trials {
            block.extend(info_rows(&cfg, n, trial, 0, &th, &mut trial_rng(cfg.seed, si, trial))?);
        }
        writer.write_block(&block)?;
        if v == Verbosity::Verbose {
            eprintln!("team size {n}: probe done");
        }
        table.extend(block);
    }
    let mut informative = None;
    if v != Verbosity::Quiet {
        println!(
            "{:>9}  {:>14}  {:>14}  {:>12}  verdict",
            "team_size", "expected_info", "variance_info", "tr_entropy"
        );
    }
    for n in table.team_sizes() {
        let mean = |m: &str| confidence_band(&table.final_values(m, n)).map_or(f64::NAN, |(x, _)| x);
        let (ei, vi, h) = (mean("expected_info"), mean("variance_info"), mean("tr_entropy"));
        let verdict = classify_sparsity(ei, vi, &th);
        if verdict.class == Sparsity::NotSparse {
            informative = Some(n);
        }
        if v != Verbosity::Quiet {
            let label = match verdict.class {
                Sparsity::Sparse => "sparse",
                Sparsity::NotSparse => "informative",
            };
            println!("{n:>9}  {ei:>14.6}  {vi:>14.3e}  {h:>12.6}  {label}");
        }
    }
    if v != Verbosity::Quiet {
        match informative {
            Some(n) => println!("largest informative team size: {n}"),
            None => println!("no informative team size at eps={eps} mu={mu}"),
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let v = if cli.quiet {
        Verbosity::Quiet
    } else if cli.verbose {
        Verbosity::Verbose
    } else {
        Verbosity::Normal
    };
    let result = match &cli.command {
        Command::Run(a) => train(a, false, v).map(|_| true),
        Command::Sweep(a) => train(a, true, v).map(|_| true),
        Command::Verify { target, seed, out } => verify(target, *seed, out.as_deref(), v),
        Command::InfoProbe { run, info_eps, info_mu } => info_probe(run, *info_eps, *info_mu, v).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

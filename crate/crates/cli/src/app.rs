use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use bayesaf_core::simulate::{Scenario, Trajectory};
use bayesaf_core::tune::{convergence_time, steady_state_level, TuneResult, DEFAULT_TAIL_FRAC};
use bayesaf_core::FilterConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{load_config, resolve, Experiment, Overrides};
use crate::csv::{format_db, write_curves};
use crate::engine::Runner;
use crate::error::{CliError, CliResult};
use crate::ir::save_ir;
use crate::reproduce::{panels, BuiltinAlgorithm, Figure, Panel, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "bayesaf",
    version,
    about = "Adaptive-filter convergence experiments"
)]
struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every algorithm of a config and write mean misalignment curves.
    Simulate(RunArgs),
    /// Grid-search the knobs of a config and print the chosen values.
    Tune(RunArgs),
    /// Regenerate the data behind one of the built-in figures.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `scenario.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies M (synthetic responses only), N and T.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// fig3 or fig5
    figure: Figure,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies M, N and T of the full-size experiment.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// `table` uses the built-in reference values, `tune` re-tunes every knob on a
    /// grid around them, `auto` re-tunes only when scaled.
    #[arg(long, value_enum, default_value_t = KnobSource::Auto)]
    knobs: KnobSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KnobSource {
    Table,
    Tune,
    Auto,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let runner = Runner::new(cli.threads)?;
    match cli.command {
        Command::Simulate(args) => simulate(&runner, &args),
        Command::Tune(args) => tune(&runner, &args),
        Command::Reproduce(args) => reproduce(&runner, &args),
    }
}

fn load_experiment(args: &RunArgs) -> CliResult<Experiment> {
    let cfg = load_config(&args.config)?;
    let dir = args.config.parent().unwrap_or(Path::new("."));
    let mut ex = resolve(
        &cfg,
        dir,
        Overrides {
            seed: args.seed,
            scale: args.scale,
        },
    )?;
    if let Some(out) = ex.output.take() {
        ex.output = Some(if out.is_absolute() {
            out
        } else {
            dir.join(out)
        });
    }
    Ok(ex)
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(BufWriter::new(f))
}

fn emit(
    target: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CliResult<()> {
    match target {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn log_tuning(label: &str, r: &TuneResult) {
    for p in &r.points {
        eprintln!(
            "  {label}: {:.4e} -> {} dB, converged {}",
            p.value,
            format_db(p.level_db),
            show_conv(p.convergence)
        );
    }
    eprintln!(
        "{label}: chose {:.4e} ({} dB, converged {}){}",
        r.value,
        format_db(r.level_db),
        show_conv(r.convergence),
        if r.on_target { "" } else { " OFF TARGET" }
    );
}

/// Convergence index as a 1-based step count, matching the CSV `t` column.
fn show_conv(c: Option<usize>) -> String {
    c.map_or_else(|| "never".into(), |i| (i + 1).to_string())
}

fn simulate(runner: &Runner, args: &RunArgs) -> CliResult<()> {
    let ex = load_experiment(args)?;
    let mut labels = Vec::new();
    let mut curves = Vec::new();
    for alg in &ex.algorithms {
        let cfg = match &alg.tune {
            Some(spec) => {
                let r = runner.tune(&ex.scenario, &alg.config, spec, ex.base_seed)?;
                log_tuning(&alg.label, &r);
                spec.knob.apply(&alg.config, r.value)?
            }
            None => alg.config,
        };
        curves.push(runner.ensemble(&ex.scenario, &cfg, ex.base_seed)?);
        labels.push(alg.label.clone());
    }
    let target = args.out.as_deref().or(ex.output.as_deref());
    emit(target, |w| write_curves(w, &labels, &curves))
}

fn tune(runner: &Runner, args: &RunArgs) -> CliResult<()> {
    let ex = load_experiment(args)?;
    let mut rows = Vec::new();
    for alg in &ex.algorithms {
        let Some(spec) = &alg.tune else { continue };
        let r = runner.tune(&ex.scenario, &alg.config, spec, ex.base_seed)?;
        log_tuning(&alg.label, &r);
        rows.push((alg, spec.knob, r));
    }
    if rows.is_empty() {
        return Err(CliError::config("tune: no algorithm has a tune block"));
    }
    emit(args.out.as_deref(), |w| {
        writeln!(
            w,
            "label,variant,beta,I,param,value,level_db,converged_t,on_target"
        )?;
        for (alg, knob, r) in &rows {
            let c = &alg.config;
            writeln!(
                w,
                "{},{},{},{},{},{:.6e},{},{},{}",
                alg.label,
                c.variant,
                c.noise.beta(),
                c.refine_iters,
                knob,
                r.value,
                format_db(r.level_db),
                show_conv(r.convergence),
                r.on_target
            )?;
        }
        Ok(())
    })
}

/// One row of the knob summary written next to the reproduced curves.
#[derive(Debug, Clone)]
pub struct KnobRow {
    pub panel: String,
    pub label: String,
    pub config: FilterConfig,
    pub value: f64,
    pub tuned: bool,
    pub level_db: f64,
    pub convergence: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PanelRun {
    pub labels: Vec<String>,
    pub curves: Vec<Trajectory>,
    pub rows: Vec<KnobRow>,
}

/// Retunes `alg` on its grid around the tabulated value.
pub fn retune(
    runner: &Runner,
    scenario: &Scenario,
    alg: &BuiltinAlgorithm,
    target_db: f64,
    seed: u64,
) -> CliResult<TuneResult> {
    let cfg = alg.config(scenario)?;
    Ok(runner.tune(scenario, &cfg, &alg.retune_spec(target_db), seed)?)
}

pub fn run_panel(
    runner: &Runner,
    panel: &Panel,
    scale: f64,
    seed: u64,
    knobs: KnobSource,
) -> CliResult<PanelRun> {
    let scenario = panel.scenario(scale)?;
    let tuned = match knobs {
        KnobSource::Table => false,
        KnobSource::Tune => true,
        KnobSource::Auto => scale != 1.0,
    };
    let mut out = PanelRun {
        labels: Vec::new(),
        curves: Vec::new(),
        rows: Vec::new(),
    };
    for alg in &panel.algorithms {
        let mut cfg = alg.config(&scenario)?;
        if tuned {
            let r = retune(runner, &scenario, alg, panel.target_db, seed)?;
            log_tuning(&format!("{}/{}", panel.name, alg.label), &r);
            cfg = alg.knob().apply(&cfg, r.value)?;
        }
        let traj = runner.ensemble(&scenario, &cfg, seed)?;
        let level_db = steady_state_level(&traj, DEFAULT_TAIL_FRAC)?;
        let convergence = convergence_time(&traj, panel.target_db);
        eprintln!(
            "{}/{}: {} = {:.4e}, steady state {} dB, converged {}",
            panel.name,
            alg.label,
            alg.knob(),
            alg.knob().get(&cfg),
            format_db(level_db),
            show_conv(convergence)
        );
        out.rows.push(KnobRow {
            panel: panel.name.to_string(),
            label: alg.label.clone(),
            config: cfg,
            value: alg.knob().get(&cfg),
            tuned,
            level_db,
            convergence,
        });
        out.labels.push(alg.label.clone());
        out.curves.push(traj);
    }
    Ok(out)
}

pub fn write_knob_rows<W: Write + ?Sized>(w: &mut W, rows: &[KnobRow]) -> io::Result<()> {
    writeln!(
        w,
        "panel,label,variant,beta,I,param,value,source,level_db,converged_t"
    )?;
    for r in rows {
        let c = &r.config;
        let knob = bayesaf_core::Knob::for_variant(c.variant);
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6e},{},{},{}",
            r.panel,
            r.label,
            c.variant,
            c.noise.beta(),
            c.refine_iters,
            knob,
            r.value,
            if r.tuned { "tuned" } else { "table" },
            format_db(r.level_db),
            show_conv(r.convergence)
        )?;
    }
    Ok(())
}

fn reproduce(runner: &Runner, args: &ReproduceArgs) -> CliResult<()> {
    if !(args.scale > 0.0 && args.scale.is_finite()) {
        return Err(CliError::Usage("--scale must be a positive number".into()));
    }
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let fig_panels = panels(args.figure);
    let stem = match args.figure {
        Figure::Fig3 => "fig3",
        Figure::Fig5 => "fig5",
    };
    let h = fig_panels[0].scenario(args.scale)?.h;
    save_ir(&args.out.join(format!("{stem}_ir.txt")), &h)?;
    let mut rows = Vec::new();
    for panel in &fig_panels {
        let run = run_panel(runner, panel, args.scale, seed, args.knobs)?;
        let path = args.out.join(format!("{}.csv", panel.name));
        let mut w = create(&path)?;
        write_curves(&mut w, &run.labels, &run.curves).map_err(|e| CliError::io(&path, e))?;
        rows.extend(run.rows);
    }
    let path = args.out.join(format!("{stem}_knobs.csv"));
    let mut w = create(&path)?;
    write_knob_rows(&mut w, &rows)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&path, e))?;
    write_knob_rows(&mut io::stdout().lock(), &rows)
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

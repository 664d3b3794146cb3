use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use amp_core::drives::SchemeFamily;
use amp_core::evolve::{averaged_tts, integrate, EvolutionConfig};
use amp_core::experiments::output::write_study;
use amp_core::experiments::{configure_threads, fit_exponential, scaling_study, table_one, RunConfig, SchemeSpec};
use amp_core::problem::{density_of_states_pairs, AmpParams, DifficultyEnsemble};
use amp_core::spectrum::{
    critical_kappa, field_to_s, forward_gap, forward_gap_sweep_units, gap_profile, level_diagram, overlap_trace,
    SpectrumOptions,
};

#[derive(Parser)]
#[command(name = "ampsim", version, about = "Annealing simulations of the asymmetric magnetization problem")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
struct Common {
    /// Base seed for all random draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Problem set: a name (hardest, hard, easy, easiest), an index, or "A,xp".
    #[arg(long, global = true)]
    set: Option<String>,
    /// Drive scheme name; comma-separated list for `scaling` and `table1`.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Inclusive size range, e.g. 5:12.
    #[arg(long, global = true, value_parser = parse_range)]
    n_range: Option<(usize, usize)>,
    /// Random draws per cell for randomized schemes.
    #[arg(long, global = true)]
    draws: Option<usize>,
    /// Spin count.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output file (single-table commands) or directory (`scaling`, `table1`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fraction of bitstrings at each magnetization.
    Dos,
    /// Classical energy of every magnetization sector.
    Energy,
    /// Gap between the two lowest levels along the anneal.
    Gap(SpectrumArgs),
    /// Forward-approximation gap prediction next to the exact minimum gap.
    ForwardGap,
    /// Lowest excitation energies along the anneal.
    Levels {
        #[command(flatten)]
        spectrum: SpectrumArgs,
        /// Number of excited levels.
        #[arg(long, default_value_t = 20)]
        levels: usize,
    },
    /// Overlaps of the two lowest eigenstates with all-up and all-down.
    Overlaps(SpectrumArgs),
    /// Integrate one anneal and report the success probability.
    Evolve {
        #[command(flatten)]
        run: RunArgs,
        /// Also dump the final state as CSV.
        #[arg(long)]
        state_out: Option<PathBuf>,
    },
    /// Draw-averaged time to solution at one size.
    Tts(RunArgs),
    /// Scaling study over sets, schemes and sizes.
    Scaling(RunArgs),
    /// Fitted exponents for every method and problem set.
    Table1(RunArgs),
    /// Fit value(N) = 2^(beta + gamma N) to a CSV of (N, value) rows.
    Fit {
        /// Input CSV; reads stdin when omitted.
        input: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct SpectrumArgs {
    /// Coarse grid points over s in [0, 1].
    #[arg(long, default_value_t = 200)]
    grid: usize,
    /// Physical time at which time-dependent drives are frozen.
    #[arg(long, default_value_t = 0.0)]
    t: f64,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Fixed sweep time; defaults to the runtime polynomial.
    #[arg(long)]
    t_f: Option<f64>,
    /// Largest integrator step.
    #[arg(long)]
    dt_max: Option<f64>,
}

fn parse_range(text: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = text
        .split_once(':')
        .or_else(|| text.split_once(".."))
        .ok_or_else(|| format!("expected MIN:MAX, got '{text}'"))?;
    let lo: usize = a.trim().parse().map_err(|_| format!("bad lower bound '{a}'"))?;
    let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad upper bound '{b}'"))?;
    if hi < lo {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

impl Common {
    fn params(&self) -> Result<AmpParams> {
        let n = self.n.context("--n is required")?;
        Ok(self.problem_set()?.params(n)?)
    }

    fn problem_set(&self) -> Result<amp_core::problem::ProblemSet> {
        Ok(DifficultyEnsemble::default().resolve(self.set.as_deref().unwrap_or("hardest"))?)
    }

    fn family(&self) -> Result<SchemeFamily> {
        Ok(SchemeFamily::from_name(self.scheme.as_deref().unwrap_or("uniform"))?)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Writer for `--out`, or stdout.
    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn run_config(&self, run: &RunArgs) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.set {
            cfg.sets = s.split(';').map(str::to_string).collect();
        }
        if let Some(s) = &self.scheme {
            cfg.schemes = s.split(',').map(|x| SchemeSpec::Name(x.trim().to_string())).collect();
        }
        if let Some(r) = self.n_range {
            cfg.n_range = r;
        }
        if let Some(d) = self.draws {
            cfg.draws = d;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        apply_run_args(&mut cfg.evolution, run);
        cfg.apply_env()?;
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply_run_args(evo: &mut EvolutionConfig, run: &RunArgs) {
    if let Some(t) = run.t_f {
        evo.t_f = Some(t);
    }
    if let Some(dt) = run.dt_max {
        evo.dt_max = dt;
    }
}

fn spectrum_opts(args: &SpectrumArgs) -> SpectrumOptions {
    SpectrumOptions { grid: args.grid, t: args.t, ..SpectrumOptions::default() }
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Dos => {
            let n = c.n.context("--n is required")?;
            let mut w = c.sink()?;
            writeln!(w, "m,weight")?;
            for (m, weight) in density_of_states_pairs(n)? {
                writeln!(w, "{m},{weight}")?;
            }
            w.flush()?;
        }
        Command::Energy => {
            let p = c.params()?;
            let mut w = c.sink()?;
            writeln!(w, "k,m,energy")?;
            for (k, e) in p.energy_table().iter().enumerate() {
                writeln!(w, "{k},{},{e}", k as f64 / p.n as f64)?;
            }
            w.flush()?;
        }
        Command::Gap(args) => {
            let p = c.params()?;
            let scheme = c.family()?.instantiate(p.n, c.seed(), EvolutionConfig::default().sweep_time(p.n))?;
            let prof = gap_profile(&scheme, &p, &spectrum_opts(args))?;
            let mut w = c.sink()?;
            prof.write_csv(&mut w)?;
            w.flush()?;
            drop(w);
            println!("# delta_min={:e} s_min={}", prof.delta_min, prof.s_min);
        }
        Command::ForwardGap => {
            let set = c.problem_set()?;
            let (lo, hi) = match (c.n_range, c.n) {
                (Some(r), _) => r,
                (None, Some(n)) => (n, n),
                (None, None) => (5, 12),
            };
            let mut w = c.sink()?;
            writeln!(w, "N,kappa_c,s_c,forward_gap,forward_gap_corrected,predicted,delta_min,ratio")?;
            for n in lo..=hi {
                let p = set.params(n)?;
                let kc = critical_kappa(&p)?;
                let raw = forward_gap(&p, kc, false)?;
                let cor = forward_gap(&p, kc, true)?;
                let pred = forward_gap_sweep_units(&p, kc, true)?;
                let exact = gap_profile(&amp_core::DriveScheme::Uniform, &p, &SpectrumOptions::default())?.delta_min;
                writeln!(w, "{n},{kc},{},{raw:e},{cor:e},{pred:e},{exact:e},{}", field_to_s(kc), pred / exact)?;
            }
            w.flush()?;
        }
        Command::Levels { spectrum, levels } => {
            let p = c.params()?;
            let scheme = c.family()?.instantiate(p.n, c.seed(), EvolutionConfig::default().sweep_time(p.n))?;
            let d = level_diagram(&scheme, &p, *levels, &spectrum_opts(spectrum))?;
            let mut w = c.sink()?;
            d.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Overlaps(args) => {
            let p = c.params()?;
            let scheme = c.family()?.instantiate(p.n, c.seed(), EvolutionConfig::default().sweep_time(p.n))?;
            let points = args.grid.max(2);
            let grid: Vec<f64> = (0..points).map(|j| j as f64 / (points - 1) as f64).collect();
            let tr = overlap_trace(&scheme, &p, &grid, &spectrum_opts(args))?;
            let mut w = c.sink()?;
            tr.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Evolve { run, state_out } => {
            let p = c.params()?;
            let mut evo = EvolutionConfig::default();
            apply_run_args(&mut evo, run);
            let scheme = c.family()?.instantiate(p.n, c.seed(), evo.sweep_time(p.n))?;
            let ev = integrate(&scheme, &p, &evo)?;
            let mut w = c.sink()?;
            writeln!(w, "scheme,N,duration,steps,norm_drift,p_success,scheme_params")?;
            let mut wtr = csv::Writer::from_writer(&mut w);
            wtr.write_record(&[
                scheme.label().to_string(),
                p.n.to_string(),
                ev.duration.to_string(),
                ev.steps.to_string(),
                format!("{:e}", ev.norm_drift),
                ev.success_probability().to_string(),
                serde_json::to_string(&scheme)?,
            ])?;
            wtr.flush()?;
            drop(wtr);
            w.flush()?;
            if let Some(path) = state_out {
                let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
                ev.state.to_full().write_csv(f)?;
            }
        }
        Command::Tts(run) => {
            let p = c.params()?;
            let mut evo = EvolutionConfig::default();
            apply_run_args(&mut evo, run);
            let rec = averaged_tts(&c.family()?, &p, &evo, c.draws.unwrap_or(1), c.seed())?;
            let mut w = c.sink()?;
            serde_json::to_writer_pretty(&mut w, &rec)?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Scaling(run) => {
            let cfg = c.run_config(run)?;
            configure_threads(cfg.threads);
            let res = scaling_study(&cfg)?;
            let paths = write_study(&cfg.out_dir, &cfg, &res, None)?;
            for f in &res.fits {
                match &f.fit {
                    Some(fit) => println!("{}/{}: gamma={:.4} beta={:.4} residual={:.3e}", f.set, f.scheme, fit.gamma, fit.beta, fit.residual),
                    None => println!("{}/{}: no fit ({})", f.set, f.scheme, f.reason.as_deref().unwrap_or("")),
                }
            }
            report_paths(&paths, &res.warnings);
        }
        Command::Table1(run) => {
            let mut cfg = c.run_config(run)?;
            if c.scheme.is_none() && c.config.is_none() {
                cfg.schemes.clear();
            }
            configure_threads(cfg.threads);
            let (table, res) = table_one(&cfg)?;
            let paths = write_study(&cfg.out_dir, &cfg, &res, Some(&table))?;
            print!("{}", table.to_text());
            report_paths(&paths, &res.warnings);
        }
        Command::Fit { input } => {
            let mut text = String::new();
            match input {
                Some(path) => {
                    File::open(path)
                        .with_context(|| format!("opening {}", path.display()))?
                        .read_to_string(&mut text)?;
                }
                None => {
                    io::stdin().read_to_string(&mut text)?;
                }
            }
            let points = read_points(&text)?;
            let fit = fit_exponential(&points)?;
            let mut w = c.sink()?;
            writeln!(w, "beta,gamma,residual,n_min,n_max,points")?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fit.beta,
                fit.gamma,
                fit.residual,
                fit.n_range.first().unwrap_or(&0),
                fit.n_range.last().unwrap_or(&0),
                points.len()
            )?;
            w.flush()?;
        }
    }
    Ok(())
}

fn report_paths(paths: &[PathBuf], warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

/// `(N, value)` pairs from CSV text. Lines starting with `#` are skipped; the
/// columns are taken by header name (`N` and `value`, `tts` or `delta_min`)
/// when present, otherwise the first two columns are used.
fn read_points(text: &str) -> Result<Vec<(usize, f64)>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let headers = rdr.headers()?.clone();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let n_col = find(&["N", "n"]).unwrap_or(0);
    let v_col = find(&["value", "tts", "delta_min"]).unwrap_or(1);
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let n: usize = rec
            .get(n_col)
            .and_then(|s| s.trim().parse().ok())
            .with_context(|| format!("row {}: bad N", line + 1))?;
        let v: f64 = rec
            .get(v_col)
            .and_then(|s| s.trim().parse().ok())
            .with_context(|| format!("row {}: bad value", line + 1))?;
        points.push((n, v));
    }
    if points.is_empty() {
        bail!("no data rows");
    }
    Ok(points)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(t) = std::env::var(amp_core::experiments::ENV_THREADS) {
        if let Ok(t) = t.parse::<usize>() {
            configure_threads(Some(t));
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

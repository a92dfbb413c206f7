//! `wnet`: derive parameters, run single trajectories and detuning sweeps,
//! and check physics invariants.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use wnet::config::{parse_grid, Config};
use wnet::device::{condition_report, quality_factor, DerivedQuantities, DeviceParams};
use wnet::dynamics::{write_snapshot, write_trajectory};
use wnet::hamiltonians::{build_full, build_h0, build_h_eff, build_h_i, build_h_int, build_h_tilde_int, build_theta_i, system_layout};
use wnet::hilbert::{HilbertLayout, SparseOperator};
use wnet::protocol::{run_protocol, Basis, Model, RunOptions};
use wnet::sweep::{run_sweep, write_csv, write_metadata, DEFAULT_PRECISION};
use wnet::units::{format_sig, to_ghz, to_mhz, to_ns};
use wnet::validate;

#[derive(Parser)]
#[command(name = "wnet", version, about = "One-step W-state preparation in coupled cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the matched parameter table and the validity-condition report.
    Derive {
        /// Parameter file.
        #[arg(long)]
        config: PathBuf,
        /// Normalized detuning |δ_1|/g_1; overrides the file.
        #[arg(long)]
        b: Option<f64>,
        /// Print JSON instead of the aligned table.
        #[arg(long)]
        json: bool,
    },
    /// Evolve one operating point and record fidelity against time.
    Evolve {
        /// Parameter file.
        #[arg(long)]
        config: PathBuf,
        /// Normalized detuning |δ_1|/g_1; overrides the file.
        #[arg(long)]
        b: Option<f64>,
        /// Dynamics to use.
        #[arg(long, default_value = "full")]
        model: Model,
        /// Drop the unwanted-transition terms from the full model.
        #[arg(long)]
        no_theta: bool,
        /// Closed-system evolution.
        #[arg(long)]
        no_losses: bool,
        /// Integrate in the invariant excitation sector or the whole space.
        #[arg(long)]
        basis: Option<Basis>,
        /// Final time in ns (default: t_W).
        #[arg(long)]
        t_final_ns: Option<f64>,
        /// Number of equally spaced fidelity samples.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Trajectory CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the final state as a binary snapshot.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Significant digits in the CSV.
        #[arg(long, env = "WNET_PRECISION", default_value_t = DEFAULT_PRECISION)]
        precision: usize,
    },
    /// Sweep normalized detuning and crosstalk ratio.
    Sweep {
        /// Parameter file.
        #[arg(long)]
        config: PathBuf,
        /// b grid, `lo:hi:step` or a comma list; overrides the file.
        #[arg(long)]
        b: Option<String>,
        /// Crosstalk ratios g_kl/g_max, `lo:hi:step` or a comma list.
        #[arg(long)]
        ratios: Option<String>,
        /// Result CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metadata JSON (default: `<out stem>.meta.json` beside the CSV).
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "WNET_WORKERS", default_value_t = default_workers())]
        workers: usize,
        /// Significant digits in the CSV.
        #[arg(long, env = "WNET_PRECISION", default_value_t = DEFAULT_PRECISION)]
        precision: usize,
        /// Fill the wall_s column (makes tables differ between runs).
        #[arg(long)]
        wall_time: bool,
    },
    /// Run the physics invariant suite.
    Validate {
        /// Print JSON results.
        #[arg(long)]
        json: bool,
    },
    /// Write a Hamiltonian at time t as `row col re im` triplets (rad/s).
    Dump {
        /// Parameter file.
        #[arg(long)]
        config: PathBuf,
        /// Normalized detuning |δ_1|/g_1; overrides the file.
        #[arg(long)]
        b: Option<f64>,
        /// Operator to write.
        #[arg(long, value_enum, default_value = "full")]
        operator: Operator,
        /// Time in ns.
        #[arg(long, default_value_t = 0.0)]
        t_ns: f64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    /// H_I + Θ_I.
    Full,
    HI,
    Theta,
    HEff,
    H0,
    HInt,
    HTildeInt,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

enum Failure {
    /// Bad flags or configuration: exit 2.
    Usage(anyhow::Error),
    /// Anything else: exit 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<Config, Failure> {
    Config::load(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)
}

fn operating_point(cfg: &Config, b: Option<f64>) -> Result<(DeviceParams, DerivedQuantities), Failure> {
    cfg.params(b).map_err(|e| Failure::Usage(e.into()))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cmd: Command) -> Result<ExitCode, Failure> {
    match cmd {
        Command::Derive { config, b, json } => {
            let cfg = load(&config)?;
            let (p, d) = operating_point(&cfg, b)?;
            derive(&cfg, &p, &d, json)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Evolve {
            config,
            b,
            model,
            no_theta,
            no_losses,
            basis,
            t_final_ns,
            samples,
            out,
            snapshot,
            precision,
        } => {
            let cfg = load(&config)?;
            let (p, d) = operating_point(&cfg, b)?;
            let t_final = t_final_ns.map(|t| t * 1e-9).unwrap_or(d.t_w);
            let mut integrator = cfg.spec.integrator.clone();
            integrator.checkpoint_times = (1..=samples.max(1)).map(|k| t_final * k as f64 / samples.max(1) as f64).collect();
            let opts = RunOptions {
                model,
                include_theta: !no_theta && cfg.spec.include_theta,
                include_losses: !no_losses && cfg.spec.include_losses,
                basis: basis.unwrap_or(cfg.spec.basis),
                integrator,
            };
            let run = run_protocol(&p, t_final, &opts).context("evolution failed")?;
            let mut w = output(out.as_deref())?;
            if precision == DEFAULT_PRECISION {
                write_trajectory(&mut w, &run.checkpoints).context("writing trajectory")?;
            } else {
                writeln!(w, "time_ns,trace,min_eig,fidelity").context("writing trajectory")?;
                for c in &run.checkpoints {
                    let opt = |x: Option<f64>| x.map(|v| format_sig(v, precision)).unwrap_or_default();
                    writeln!(
                        w,
                        "{},{},{},{}",
                        format_sig(to_ns(c.time), precision),
                        format_sig(c.trace, precision),
                        opt(c.min_eig),
                        opt(c.fidelity)
                    )
                    .context("writing trajectory")?;
                }
            }
            w.flush().context("writing trajectory")?;
            if let Some(path) = snapshot {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_snapshot(BufWriter::new(f), &run.final_state).context("writing snapshot")?;
            }
            eprintln!(
                "dim {}  steps {}  t = {} ns  F = {}",
                run.dim,
                run.steps,
                format_sig(to_ns(t_final), 6),
                format_sig(run.final_fidelity(), 10)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            b,
            ratios,
            out,
            meta,
            workers,
            precision,
            wall_time,
        } => {
            let cfg = load(&config)?;
            let mut spec = cfg.spec.clone();
            if let Some(g) = b {
                spec.b_grid = parse_grid(&g).map_err(|e| Failure::Usage(anyhow::anyhow!("--b: {e}")))?;
            }
            if let Some(r) = ratios {
                spec.ratios = parse_grid(&r).map_err(|e| Failure::Usage(anyhow::anyhow!("--ratios: {e}")))?;
            }
            spec.validate().map_err(|e| Failure::Usage(e.into()))?;
            let result = run_sweep(&spec, workers).context("sweep failed")?;
            let mut w = output(out.as_deref())?;
            write_csv(&mut w, &result.rows, precision, wall_time).context("writing CSV")?;
            w.flush().context("writing CSV")?;
            let meta = meta.or_else(|| out.as_ref().map(|o| o.with_extension("meta.json")));
            if let Some(path) = meta {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                let mut f = BufWriter::new(f);
                write_metadata(&mut f, &result).context("writing metadata")?;
                f.flush().context("writing metadata")?;
            }
            for r in &result.rows {
                if let Some(e) = &r.error {
                    eprintln!("b = {} ratio = {}: {e}", r.b, r.ratio);
                } else if !(r.trunc_ok && r.step_ok) {
                    eprintln!("b = {} ratio = {}: convergence flag false", r.b, r.ratio);
                }
            }
            eprintln!("{} points in {:.1} s", result.rows.len(), result.metadata.total_wall_s);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { json } => {
            let results = validate::run_all();
            if json {
                println!("{}", serde_json::to_string_pretty(&results).context("encoding results")?);
            } else {
                for r in &results {
                    println!(
                        "{:<4} {:<24} {:>12} (limit {}) {}",
                        if r.pass { "PASS" } else { "FAIL" },
                        r.name,
                        format_sig(r.value, 4),
                        format_sig(r.threshold, 4),
                        r.detail
                    );
                }
            }
            let failed = results.iter().filter(|r| !r.pass).count();
            if failed == 0 {
                eprintln!("all {} checks passed", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{failed} of {} checks failed", results.len());
                Ok(ExitCode::from(1))
            }
        }
        Command::Dump {
            config,
            b,
            operator,
            t_ns,
            out,
        } => {
            let cfg = load(&config)?;
            let (p, _) = operating_point(&cfg, b)?;
            let op = dump_operator(&p, operator, t_ns * 1e-9)?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "# dim {} nnz {}", op.dim(), op.nnz()).context("writing operator")?;
            for (r, c, v) in op.triplets() {
                writeln!(w, "{r} {c} {:e} {:e}", v.re, v.im).context("writing operator")?;
            }
            w.flush().context("writing operator")?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn dump_operator(p: &DeviceParams, which: Operator, t: f64) -> anyhow::Result<SparseOperator> {
    let system = || system_layout(p);
    let qubits = || HilbertLayout::qubits_with_coupler(p.n).map(Arc::new);
    Ok(match which {
        Operator::Full => build_full(p, &system()?, true)?.at(t)?,
        Operator::HI => build_h_i(p, &system()?)?.at(t)?,
        Operator::Theta => build_theta_i(p, &system()?)?.at(t)?,
        Operator::HEff => build_h_eff(p, &system()?)?.at(t)?,
        Operator::H0 => build_h0(p, &qubits()?)?,
        Operator::HInt => build_h_int(p, &qubits()?)?,
        Operator::HTildeInt => build_h_tilde_int(p, &qubits()?)?,
    })
}

fn quality_factors(p: &DeviceParams) -> Vec<Option<f64>> {
    p.cavity_frequency
        .iter()
        .zip(&p.kappa)
        .map(|(&wc, &k)| if k > 0.0 { quality_factor(wc, 1.0 / k).ok() } else { None })
        .collect()
}

fn derive(cfg: &Config, p: &DeviceParams, d: &DerivedQuantities, as_json: bool) -> anyhow::Result<()> {
    let report = condition_report(p, d, &cfg.spec.thresholds);
    let q = quality_factors(p);
    let pairs: Vec<(usize, usize)> = (0..p.n).flat_map(|k| (k + 1..p.n).map(move |l| (k, l))).collect();
    let b = p.delta[0].abs() / p.g[0];
    if as_json {
        let mhz = |v: &[f64]| v.iter().map(|&x| to_mhz(x)).collect::<Vec<_>>();
        let ghz = |v: &[f64]| v.iter().map(|&x| to_ghz(x)).collect::<Vec<_>>();
        let doc = json!({
            "b": b,
            "g_mhz": mhz(&p.g),
            "g_coupler_mhz": mhz(&p.g_coupler),
            "g21_mhz": mhz(&p.g21),
            "g21_coupler_mhz": mhz(&p.g21_coupler),
            "delta_ghz": ghz(&p.delta),
            "delta_coupler_ghz": ghz(&p.delta_coupler),
            "delta21_ghz": ghz(&p.delta21),
            "delta21_coupler_ghz": ghz(&p.delta21_coupler),
            "cavity_detuning_ghz": pairs.iter().map(|&(k, l)| json!({"k": k + 1, "l": l + 1, "value": to_ghz(p.cavity_detuning[k][l])})).collect::<Vec<_>>(),
            "g_cross_mhz": pairs.iter().map(|&(k, l)| json!({"k": k + 1, "l": l + 1, "value": to_mhz(p.g_cross[k][l])})).collect::<Vec<_>>(),
            "chi_mhz": to_mhz(d.chi),
            "lambda_mhz": to_mhz(d.lambda),
            "t_w_ns": to_ns(d.t_w),
            "cavity_frequency_ghz": ghz(&p.cavity_frequency),
            "quality_factor": q,
            "conditions": report,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    let list = |v: &[f64], f: fn(f64) -> f64| v.iter().map(|&x| format!("{:>10.4}", f(x))).collect::<Vec<_>>().join(" ");
    println!("b = |δ_1|/g_1                {b:>10.4}");
    println!("g_j/2π            (MHz)  {}", list(&p.g, to_mhz));
    println!("g_Aj/2π           (MHz)  {}", list(&p.g_coupler, to_mhz));
    println!("g̃_j/2π            (MHz)  {}", list(&p.g21, to_mhz));
    println!("g̃_Aj/2π           (MHz)  {}", list(&p.g21_coupler, to_mhz));
    println!("δ_j/2π            (GHz)  {}", list(&p.delta, to_ghz));
    println!("δ_Aj/2π           (GHz)  {}", list(&p.delta_coupler, to_ghz));
    println!("δ̃_j/2π            (GHz)  {}", list(&p.delta21, to_ghz));
    println!("δ̃_Aj/2π           (GHz)  {}", list(&p.delta21_coupler, to_ghz));
    for &(k, l) in &pairs {
        println!(
            "Δ_{}{}/2π           (GHz)  {:>10.4}   g_{}{}/2π (MHz) {:>10.4}",
            k + 1,
            l + 1,
            to_ghz(p.cavity_detuning[k][l]),
            k + 1,
            l + 1,
            to_mhz(p.g_cross[k][l])
        );
    }
    println!("χ/2π              (MHz)  {:>10.4}", to_mhz(d.chi));
    println!("λ/2π              (MHz)  {:>10.4}", to_mhz(d.lambda));
    println!("t_W                (ns)  {:>10.4}", to_ns(d.t_w));
    println!("ω_cj/2π           (GHz)  {}", list(&p.cavity_frequency, to_ghz));
    let qs = q
        .iter()
        .map(|x| x.map(|v| format!("{v:>10.3e}")).unwrap_or_else(|| format!("{:>10}", "inf")))
        .collect::<Vec<_>>()
        .join(" ");
    println!("Q_j                      {qs}");
    println!();
    println!("{:<22} {:>12} {:>12}  status", "condition", "value", "threshold");
    for c in &report {
        println!(
            "{:<22} {:>12} {:>12}  {}",
            c.name,
            format_sig(c.value, 5),
            format_sig(c.threshold, 5),
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}

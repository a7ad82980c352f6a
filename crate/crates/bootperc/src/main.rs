use clap::{Parser, Subcommand, ValueEnum};

use bootperc::branching::{
    dwass_pmf, gw_tail_bound, sample_total_progeny, total_progeny_pmf_dp, GWProcess,
    OffspringDistribution, DEFAULT_OVERFLOW_CAP,
};
use bootperc::experiments::{
    self, fmt12, parse_ratio_range, ProcessKind, TrialConfig,
};
use bootperc::mild_process::{self, MildSchedule};
use bootperc::percolation::{self, InfectionState};
use bootperc::query_process;
use bootperc::theory::{self, RegimeParams};

#[derive(Parser)]
#[command(
    name = "bootperc",
    about = "Bootstrap percolation on random uniform hypergraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessArg {
    Bootstrap,
    Query,
    Mild,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form thresholds, regime margins, and trajectory tables.
    Theory {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// One seeded trial of a chosen process.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        process: ProcessArg,
        #[arg(long)]
        trace: Option<String>,
    },
    /// Phase scan over initial sizes a = ratio * a_c.
    Scan {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        p: f64,
        /// LO:HI:STEP
        #[arg(long)]
        ratios: String,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: String,
    },
    /// Sandwich check of the three coupled processes on shared instances.
    Couple {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Galton-Watson total progeny tables and tail bound comparison.
    Gw {
        /// Comma-separated positive integer weights.
        #[arg(long)]
        weights: String,
        /// Comma-separated probabilities, one per weight.
        #[arg(long)]
        probs: String,
        #[arg(long)]
        roots: u64,
        #[arg(long, default_value_t = 50)]
        m_max: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        chi: Option<f64>,
    },
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Theory {
            n,
            k,
            r,
            p,
            eps,
            delta,
            steps,
            json: _,
            csv,
        } => cmd_theory(RegimeParams { n, k, r, p, eps, delta }, steps, csv),
        Command::Simulate {
            n,
            k,
            r,
            p,
            a,
            seed,
            process,
            trace,
        } => cmd_simulate(
            RegimeParams {
                n,
                k,
                r,
                p,
                eps: 0.1,
                delta: 0.05,
            },
            a,
            seed,
            process,
            trace,
        ),
        Command::Scan {
            n,
            k,
            r,
            p,
            ratios,
            trials,
            seed,
            out,
        } => cmd_scan(
            RegimeParams {
                n,
                k,
                r,
                p,
                eps: 0.1,
                delta: 0.05,
            },
            &ratios,
            trials,
            seed,
            &out,
        ),
        Command::Couple {
            n,
            k,
            r,
            p,
            a,
            trials,
            seed,
        } => cmd_couple(
            RegimeParams {
                n,
                k,
                r,
                p,
                eps: 0.1,
                delta: 0.05,
            },
            a,
            trials,
            seed,
        ),
        Command::Gw {
            weights,
            probs,
            roots,
            m_max,
            samples,
            chi,
        } => cmd_gw(&weights, &probs, roots, m_max, samples, chi),
    }
}

fn cmd_theory(
    params: RegimeParams,
    steps: usize,
    csv: bool,
) -> Result<(), Box<dyn std::error::Error>> {
    let (m_low, m_high, regime_ok) = theory::regime_margin(&params);
    let beta = theory::beta_trajectory(&params, steps).ok();
    let gamma = theory::gamma_trajectory(&params, steps).ok();
    let summary = serde_json::json!({
        "n": params.n,
        "k": params.k,
        "r": params.r,
        "p": params.p,
        "eps": params.eps,
        "delta": params.delta,
        "eta": theory::eta(params.k, params.r)?,
        "a_star": theory::a_star(&params)?,
        "a_c": theory::a_crit(&params)?,
        "m_low": m_low,
        "m_high": m_high,
        "regime_ok": regime_ok,
        "x0": beta.as_ref().map(|b| b.x0),
        "Delta": gamma.as_ref().map(|g| g.delta_floor),
        "phi_c": theory::phi_crit(params.r),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if csv {
        if let Some(b) = beta {
            println!("t,b,beta");
            for row in &b.rows {
                println!("{},{},{}", row.t, fmt12(row.b), fmt12(row.beta));
            }
        }
        if let Some(g) = gamma {
            let header: Vec<String> = (0..=params.r).map(|i| format!("c_{i}")).collect();
            println!("t,c,gamma,{}", header.join(","));
            for row in &g.rows {
                let levels: Vec<String> =
                    row.ln_levels.iter().map(|&l| fmt12(l.exp())).collect();
                println!(
                    "{},{},{},{}",
                    row.t,
                    fmt12(row.c()),
                    fmt12(row.gamma()),
                    levels.join(",")
                );
            }
        }
    }
    Ok(())
}

fn cmd_simulate(
    params: RegimeParams,
    a: usize,
    seed: u64,
    process: ProcessArg,
    trace_path: Option<String>,
) -> Result<(), Box<dyn std::error::Error>> {
    let kind = match process {
        ProcessArg::Bootstrap => ProcessKind::Bootstrap,
        ProcessArg::Query => ProcessKind::Query,
        ProcessArg::Mild => ProcessKind::Mild,
    };
    let record = experiments::run_trial(&TrialConfig {
        params,
        a,
        process: kind,
        master_seed: seed,
        trial_index: 0,
    })?;
    println!("{}", serde_json::to_string_pretty(&record)?);

    if let Some(path) = trace_path {
        let (h, perm) = experiments::sample_instance(&params, seed, 0)?;
        let a0 = &perm[..a.min(params.n as usize)];
        let r = params.r as usize;
        let value = match kind {
            ProcessKind::Bootstrap => {
                let (a_f, trace) = InfectionState::init(&h, r, a0)?.run();
                percolation::trace_json(&h, r, a0.len(), &trace, a_f.len())
            }
            ProcessKind::Query => {
                let (b_f, trace) = query_process::run(&h, r, a0)?;
                query_process::trace_json(&h, r, a0.len(), &trace, b_f.len())
            }
            ProcessKind::Mild => {
                let schedule = MildSchedule::from_params(&params)
                    .unwrap_or_else(|_| MildSchedule::eager(params.r));
                let (c_f, trace) = mild_process::run(&h, r, a0, &schedule)?;
                mild_process::trace_json(&h, r, a0.len(), &trace, c_f.len())
            }
        };
        std::fs::write(&path, serde_json::to_string_pretty(&value)?)?;
        eprintln!("trace written to {path}");
    }
    Ok(())
}

fn cmd_scan(
    params: RegimeParams,
    ratios_spec: &str,
    trials: usize,
    seed: u64,
    out: &str,
) -> Result<(), Box<dyn std::error::Error>> {
    let ratios =
        parse_ratio_range(ratios_spec).ok_or("ratios must be LO:HI:STEP with STEP > 0")?;
    let rows = experiments::phase_scan(&params, &ratios, trials, seed)?;
    let csv = experiments::scan_csv(&rows);
    std::fs::write(out, &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_couple(
    params: RegimeParams,
    a: usize,
    trials: usize,
    seed: u64,
) -> Result<(), Box<dyn std::error::Error>> {
    let report = experiments::sandwich_check(&params, a, trials, seed)?;
    println!("trials: {}", report.trials);
    println!("violations: {}", report.violations);
    println!("trial,lower,reference,upper");
    for (i, &(c, af, b)) in report.triples.iter().enumerate() {
        println!("{i},{c},{af},{b}");
    }
    Ok(())
}

fn cmd_gw(
    weights: &str,
    probs: &str,
    roots: u64,
    m_max: u64,
    samples: u64,
    chi: Option<f64>,
) -> Result<(), Box<dyn std::error::Error>> {
    let ws: Vec<u64> = weights
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()?;
    let ps: Vec<f64> = probs
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()?;
    if ws.len() != ps.len() {
        return Err("weights and probs must have equal length".into());
    }
    let dist = OffspringDistribution::new(ws.into_iter().zip(ps).collect())?;
    let process = GWProcess {
        offspring: dist,
        roots,
    };
    println!("mu: {}", fmt12(process.offspring.mu()));
    println!("m,dwass,dp");
    for m in roots..=m_max {
        let dw = dwass_pmf(&process, m);
        let dp = total_progeny_pmf_dp(&process, m)
            .map(fmt12)
            .unwrap_or_else(|_| "".to_string());
        println!("{m},{},{dp}", fmt12(dw));
    }
    if let Some(chi) = chi {
        let mu = process.offspring.mu();
        let bound = gw_tail_bound(mu, process.offspring.max_weight() as f64, chi, roots)?;
        let mut exceed = 0u64;
        for s in 0..samples {
            let over = match sample_total_progeny(&process, s, DEFAULT_OVERFLOW_CAP) {
                Some(z) => z as f64 > (1.0 + chi) * roots as f64,
                None => true,
            };
            if over {
                exceed += 1;
            }
        }
        println!("chi,empirical_tail,bound");
        println!(
            "{},{},{}",
            fmt12(chi),
            fmt12(exceed as f64 / samples as f64),
            fmt12(bound)
        );
    }
    Ok(())
}

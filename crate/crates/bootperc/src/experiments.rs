//! Monte Carlo harness: deterministic seed derivation, single trials,
//! phase scans around the critical size, and the three-process sandwich
//! check. All randomness flows from a master seed through per-trial derived
//! seeds, so results are reproducible and order-independent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::hypergraph::{mix64, sample_explicit, Hypergraph};
use crate::mild_process::{self, MildSchedule};
use crate::percolation::InfectionState;
use crate::query_process;
use crate::theory::{self, RegimeParams};

/// Derives an independent stream seed; pure and collision-resistant.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master, index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessKind {
    Bootstrap,
    Query,
    Mild,
}

impl ProcessKind {
    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::Bootstrap => "bootstrap",
            ProcessKind::Query => "query",
            ProcessKind::Mild => "mild",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialConfig {
    pub params: RegimeParams,
    pub a: usize,
    pub process: ProcessKind,
    pub master_seed: u64,
    pub trial_index: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub k: u32,
    pub r: u32,
    pub n: u64,
    pub p: f64,
    pub a: usize,
    pub a_over_ac: f64,
    pub a_star: f64,
    pub seed: u64,
    pub process: String,
    pub final_size: usize,
    pub productive_steps: usize,
    pub runtime_ms: u64,
    pub outcome: String,
    pub regime_ok: bool,
}

/// Classification thresholds: small means the final set stayed within the
/// scaling unit, large means it reached 90 percent of all vertices.
pub fn classify(final_size: usize, a_star: f64, n: u64) -> &'static str {
    if final_size as f64 <= a_star {
        "small"
    } else if final_size as f64 >= 0.9 * n as f64 {
        "large"
    } else {
        "other"
    }
}

/// Samples the trial's hypergraph and the vertex permutation whose prefixes
/// give nested uniform initial sets.
pub fn sample_instance(
    params: &RegimeParams,
    master_seed: u64,
    trial_index: u64,
) -> Result<(Hypergraph, Vec<u32>)> {
    let h = sample_explicit(
        params.n as u32,
        params.k as usize,
        params.p,
        derive_seed(master_seed, 2 * trial_index),
    )?;
    let mut perm: Vec<u32> = (0..params.n as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 2 * trial_index + 1));
    perm.shuffle(&mut rng);
    Ok((h, perm))
}

fn run_process(
    h: &Hypergraph,
    r: usize,
    a0: &[u32],
    process: ProcessKind,
    params: &RegimeParams,
) -> Result<(usize, usize)> {
    match process {
        ProcessKind::Bootstrap => {
            let (a_f, trace) = InfectionState::init(h, r, a0)?.run();
            Ok((a_f.len(), InfectionState::productive_steps(&trace)))
        }
        ProcessKind::Query => {
            let (b_f, trace) = query_process::run(h, r, a0)?;
            let steps = trace
                .b_sizes
                .windows(2)
                .filter(|w| w[1] > w[0])
                .count();
            Ok((b_f.len(), steps))
        }
        ProcessKind::Mild => {
            let schedule = MildSchedule::from_params(params)
                .unwrap_or_else(|_| MildSchedule::eager(params.r));
            let (c_f, trace) = mild_process::run(h, r, a0, &schedule)?;
            let steps = trace
                .c_sizes
                .windows(2)
                .filter(|w| w[1] > w[0])
                .count();
            Ok((c_f.len(), steps))
        }
    }
}

pub fn run_trial(config: &TrialConfig) -> Result<TrialRecord> {
    let params = &config.params;
    let start = std::time::Instant::now();
    let (h, perm) = sample_instance(params, config.master_seed, config.trial_index)?;
    let a0 = &perm[..config.a.min(params.n as usize)];
    let (final_size, steps) =
        run_process(&h, params.r as usize, a0, config.process, params)?;
    let astar = theory::a_star(params)?;
    let a_c = theory::a_crit(params)?;
    let (_, _, regime_ok) = theory::regime_margin(params);
    Ok(TrialRecord {
        k: params.k,
        r: params.r,
        n: params.n,
        p: params.p,
        a: config.a,
        a_over_ac: config.a as f64 / a_c,
        a_star: astar,
        seed: derive_seed(config.master_seed, 2 * config.trial_index),
        process: config.process.name().to_string(),
        final_size,
        productive_steps: steps,
        runtime_ms: start.elapsed().as_millis() as u64,
        outcome: classify(final_size, astar, params.n).to_string(),
        regime_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub ratio: f64,
    pub a: usize,
    pub trials: usize,
    pub frac_large: f64,
    pub frac_small: f64,
    pub frac_other: f64,
    pub mean_final: f64,
    pub mean_steps: f64,
}

/// Scans initial sizes a = ratio * a_c across ratios. Each trial index owns
/// one hypergraph and one permutation shared by all ratios, so per trial the
/// initial sets are nested and the final size is monotone in the ratio.
pub fn phase_scan(
    params: &RegimeParams,
    ratios: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<ScanRow>> {
    let a_c = theory::a_crit(params)?;
    let astar = theory::a_star(params)?;
    let per_trial: Vec<Vec<(usize, usize)>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<(usize, usize)>> {
            let (h, perm) = sample_instance(params, master_seed, i)?;
            ratios
                .iter()
                .map(|&ratio| {
                    let a = ((ratio * a_c).round() as usize).min(params.n as usize);
                    let (a_f, trace) =
                        InfectionState::init(&h, params.r as usize, &perm[..a])?.run();
                    Ok((a_f.len(), InfectionState::productive_steps(&trace)))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(ratios.len());
    for (j, &ratio) in ratios.iter().enumerate() {
        let a = ((ratio * a_c).round() as usize).min(params.n as usize);
        let mut counts = (0usize, 0usize, 0usize);
        let mut sum_final = 0.0;
        let mut sum_steps = 0.0;
        for res in &per_trial {
            let (final_size, steps) = res[j];
            match classify(final_size, astar, params.n) {
                "small" => counts.0 += 1,
                "large" => counts.1 += 1,
                _ => counts.2 += 1,
            }
            sum_final += final_size as f64;
            sum_steps += steps as f64;
        }
        rows.push(ScanRow {
            ratio,
            a,
            trials,
            frac_large: counts.1 as f64 / trials as f64,
            frac_small: counts.0 as f64 / trials as f64,
            frac_other: counts.2 as f64 / trials as f64,
            mean_final: sum_final / trials as f64,
            mean_steps: sum_steps / trials as f64,
        });
    }
    Ok(rows)
}

/// 12 significant digits, stable across platforms.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let s = format!("{:.11e}", x);
    // strip the exponent when it renders cleanly in plain notation
    if let Some(pos) = s.find('e') {
        let exp: i32 = s[pos + 1..].parse().unwrap_or(0);
        if (-4..12).contains(&exp) {
            let prec = (11 - exp).max(0) as usize;
            let plain = format!("{:.*}", prec, x);
            let trimmed = plain.trim_end_matches('0').trim_end_matches('.');
            return trimmed.to_string();
        }
    }
    s
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out =
        String::from("ratio,a,trials,frac_large,frac_small,frac_other,mean_final,mean_steps\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt12(r.ratio),
            r.a,
            r.trials,
            fmt12(r.frac_large),
            fmt12(r.frac_small),
            fmt12(r.frac_other),
            fmt12(r.mean_final),
            fmt12(r.mean_steps)
        ));
    }
    out
}

/// Parses "LO:HI:STEP" into an inclusive ratio grid.
pub fn parse_ratio_range(spec: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return None;
    }
    let lo: f64 = parts[0].parse().ok()?;
    let hi: f64 = parts[1].parse().ok()?;
    let step: f64 = parts[2].parse().ok()?;
    if step <= 0.0 || hi < lo {
        return None;
    }
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi + 1e-9 {
        out.push(x);
        x += step;
    }
    Some(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub trials: usize,
    pub violations: usize,
    /// (|C_f|, |A_f|, |B_f|) per trial.
    pub triples: Vec<(usize, usize, usize)>,
}

/// Runs all three processes on shared instances and counts containment
/// violations of lower within reference within upper; zero is expected.
pub fn sandwich_check(
    params: &RegimeParams,
    a: usize,
    trials: usize,
    master_seed: u64,
) -> Result<SandwichReport> {
    let results: Vec<(usize, usize, usize, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize, usize, bool)> {
            let (h, perm) = sample_instance(params, master_seed, i)?;
            let a0 = &perm[..a.min(params.n as usize)];
            let r = params.r as usize;
            let schedule = MildSchedule::eager(params.r);
            let (c_f, _) = mild_process::run(&h, r, a0, &schedule)?;
            let (a_f, _) = InfectionState::init(&h, r, a0)?.run();
            let (b_f, _) = query_process::run(&h, r, a0)?;
            let ok = is_subset(&c_f, &a_f) && is_subset(&a_f, &b_f);
            Ok((c_f.len(), a_f.len(), b_f.len(), ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = results.iter().filter(|r| !r.3).count();
    Ok(SandwichReport {
        trials,
        violations,
        triples: results.iter().map(|r| (r.0, r.1, r.2)).collect(),
    })
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    // both sorted
    let mut it = b.iter();
    'outer: for x in a {
        for y in it.by_ref() {
            if y == x {
                continue 'outer;
            }
            if y > x {
                return false;
            }
        }
        return false;
    }
    true
}

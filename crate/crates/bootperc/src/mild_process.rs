//! Lower coupling: staged activation with restricted edge exposure.
//!
//! Infected vertices are released in batches. Exposed edges must contain
//! exactly one batch vertex and no other infected vertex, so each exposure
//! step probes disjoint randomness. Vertices climb level sets as they
//! accumulate distinct batch neighbours and become infected at level r
//! (for r = 2 together with their closed neighbourhood in exposed edges).
//! The final infected set is a per-instance subset of the reference
//! process's final set.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::theory::{self, RegimeParams};

#[derive(Clone, Debug)]
pub struct MildSchedule {
    pub zeta: f64,
    pub t_low: f64,
    pub t_high: f64,
    /// c(0) of the driving trajectory.
    pub c0: f64,
    /// Growth coefficient: c(t+1) = coef * c(t)^r + c(0).
    pub coef: f64,
    pub r: u32,
}

impl MildSchedule {
    /// Schedule driven by the supercritical trajectory; validates the
    /// (eps, delta) pairing.
    pub fn from_params(params: &RegimeParams) -> Result<Self> {
        theory::delta_floor(params.eps, params.delta, params.r)?;
        let ln_n = (params.n as f64).ln();
        let ln_p = params.p.ln();
        let zeta =
            (((params.k as f64 - 1.0) * ln_n + ln_p) / (params.r as f64 + 1.0)).exp();
        let inv_np = -((params.k as f64 - 2.0) * ln_n + ln_p);
        let t_low = (inv_np - zeta.ln()).exp();
        let t_high = (inv_np + 0.5 * zeta.ln()).exp();
        let c0 = (1.0 + params.eps) * theory::a_crit(params)?;
        let e = theory::eta(params.k, params.r)? as f64;
        let ln_pi = theory::ln_binom(params.n, params.k as u64 - 2) + ln_p;
        let coef = ((1.0 - params.delta).ln() + e.ln() + ln_n
            + params.r as f64 * ln_pi
            - theory::ln_factorial(params.r as u64))
        .exp();
        Ok(MildSchedule {
            zeta,
            t_low,
            t_high,
            c0,
            coef,
            r: params.r,
        })
    }

    /// Degenerate schedule that activates every unactivated infected vertex
    /// each step; useful wherever only the coupling direction matters.
    pub fn eager(r: u32) -> Self {
        MildSchedule {
            zeta: 1.0,
            t_low: f64::INFINITY,
            t_high: f64::INFINITY,
            c0: f64::INFINITY,
            coef: 0.0,
            r,
        }
    }

    /// Trajectory value c(t), capped so the recursion cannot overflow; the
    /// cap is harmless because c only enters through min{c(t), |C(t)|}.
    pub fn c(&self, t: usize, cap: f64) -> f64 {
        let mut c = self.c0.min(cap);
        for _ in 0..t {
            if c >= cap {
                return cap;
            }
            c = (self.coef * c.powi(self.r as i32) + self.c0).min(cap);
        }
        c
    }
}

#[derive(Clone, Debug, Default)]
pub struct MildTrace {
    /// |C(t)| per step; index 0 is the initial set.
    pub c_sizes: Vec<usize>,
    /// [|C_0(t)|, ..., |C_r(t)|] per step.
    pub level_sizes: Vec<Vec<usize>>,
    /// Batch sizes per step.
    pub activated: Vec<usize>,
    /// |Xi'(t)| per step.
    pub xi_sizes: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct MildState<'a> {
    h: &'a Hypergraph,
    r: usize,
    c0_mask: Vec<bool>,
    c: Vec<bool>,
    c_hat: Vec<bool>,
    /// Current level of each vertex outside C(0); levels are nested so the
    /// maximum suffices.
    levels: Vec<u8>,
    f: Vec<bool>,
    /// Same-step overlapping exposed edges of the latest step.
    xi: Vec<u32>,
    t: usize,
    trace: MildTrace,
}

impl<'a> MildState<'a> {
    pub fn init(h: &'a Hypergraph, r: usize, c0: &[u32]) -> Result<Self> {
        assert!(r >= 2, "infection threshold r must be at least 2");
        let n = h.n() as usize;
        let mut mask = vec![false; n];
        for &v in c0 {
            if v >= h.n() {
                return Err(Error::OutOfRange { vertex: v, n: h.n() });
            }
            mask[v as usize] = true;
        }
        let mut trace = MildTrace::default();
        trace.c_sizes.push(mask.iter().filter(|&&b| b).count());
        trace.level_sizes.push(level_counts(&mask, &vec![0u8; n], r));
        Ok(MildState {
            h,
            r,
            c0_mask: mask.clone(),
            c: mask,
            c_hat: vec![false; n],
            levels: vec![0u8; n],
            f: vec![false; h.num_edges()],
            xi: Vec::new(),
            t: 0,
            trace,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn infected(&self) -> &[bool] {
        &self.c
    }

    pub fn exposed(&self) -> &[bool] {
        &self.f
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn trace(&self) -> &MildTrace {
        &self.trace
    }

    pub fn unactivated(&self) -> usize {
        self.c
            .iter()
            .zip(self.c_hat.iter())
            .filter(|&(&c, &ch)| c && !ch)
            .count()
    }

    pub fn activation_batch_size(&self, schedule: &MildSchedule) -> usize {
        let u = self.unactivated();
        if u == 0 {
            return 0;
        }
        let csz = self.c.iter().filter(|&&x| x).count() as f64;
        let hsz = self.c_hat.iter().filter(|&&x| x).count() as f64;
        let raw = if (u as f64) < schedule.t_low {
            let cap = 2.0 * self.h.n() as f64;
            schedule.c(self.t, cap).min(csz) - hsz
        } else if (u as f64) < schedule.t_high {
            schedule.t_low
        } else {
            schedule.t_high
        };
        if raw <= 0.0 {
            return 0;
        }
        (raw.ceil() as usize).min(u)
    }

    /// One step: activate a batch, expose its private edges, promote levels
    /// by distinct batch neighbours, infect. Returns (batch size, number of
    /// newly infected vertices).
    pub fn mstep(&mut self, schedule: &MildSchedule) -> (usize, usize) {
        let h = self.h;
        let batch_size = self.activation_batch_size(schedule);
        let batch: Vec<u32> = (0..h.n())
            .filter(|&v| self.c[v as usize] && !self.c_hat[v as usize])
            .take(batch_size)
            .collect();
        let mut in_batch = vec![false; h.n() as usize];
        for &v in &batch {
            self.c_hat[v as usize] = true;
            in_batch[v as usize] = true;
        }

        // edges with exactly one batch vertex and no other infected vertex
        let mut fresh_edges: Vec<u32> = Vec::new();
        let mut edge_batch_vertex: Vec<u32> = Vec::new();
        let mut seen_edges: HashSet<u32> = HashSet::new();
        for &w in &batch {
            for &e in h.incidence(w) {
                if self.f[e as usize] || !seen_edges.insert(e) {
                    continue;
                }
                let mut bcount = 0;
                let mut other_infected = false;
                let mut bvert = 0;
                for &v in h.edge(e as usize).vertices() {
                    if in_batch[v as usize] {
                        bcount += 1;
                        bvert = v;
                    } else if self.c[v as usize] {
                        other_infected = true;
                    }
                }
                if bcount == 1 && !other_infected {
                    fresh_edges.push(e);
                    edge_batch_vertex.push(bvert);
                }
            }
        }
        for &e in &fresh_edges {
            self.f[e as usize] = true;
        }

        // distinct batch neighbours of each uninfected vertex within the
        // fresh edges; each fresh edge carries exactly one batch vertex
        let mut gained: HashMap<u32, HashSet<u32>> = HashMap::new();
        for (&e, &w) in fresh_edges.iter().zip(edge_batch_vertex.iter()) {
            for &v in h.edge(e as usize).vertices() {
                if !self.c[v as usize] {
                    gained.entry(v).or_default().insert(w);
                }
            }
        }
        let mut promoted_to_r: Vec<u32> = Vec::new();
        for (&v, ws) in &gained {
            if self.c0_mask[v as usize] {
                continue;
            }
            let new_level = (self.levels[v as usize] as usize + ws.len()).min(self.r) as u8;
            if new_level as usize == self.r && (self.levels[v as usize] as usize) < self.r {
                promoted_to_r.push(v);
            }
            self.levels[v as usize] = new_level;
        }
        promoted_to_r.sort_unstable();

        let mut newly: Vec<u32> = promoted_to_r.clone();
        if self.r == 2 {
            // closed neighbourhood of the fresh level-2 vertices within all
            // exposed edges
            for &v in &promoted_to_r {
                for &e in h.incidence(v) {
                    if self.f[e as usize] {
                        newly.extend(h.edge(e as usize).vertices().iter().copied());
                    }
                }
            }
            newly.sort_unstable();
            newly.dedup();
        }
        let mut infected_count = 0;
        for &v in &newly {
            if !self.c[v as usize] {
                self.c[v as usize] = true;
                infected_count += 1;
            }
        }

        // fresh edges meeting another fresh edge in both their shared batch
        // vertex and an uninfected vertex
        let mut by_batch: HashMap<u32, Vec<u32>> = HashMap::new();
        for (&e, &w) in fresh_edges.iter().zip(edge_batch_vertex.iter()) {
            by_batch.entry(w).or_default().push(e);
        }
        let mut xi: HashSet<u32> = HashSet::new();
        for group in by_batch.values() {
            for i in 0..group.len() {
                for j in i + 1..group.len() {
                    let (e1, e2) = (group[i] as usize, group[j] as usize);
                    // a shared non-batch vertex was uninfected at exposure
                    // time by the exposure rule
                    let share_uninfected = h
                        .edge(e1)
                        .vertices()
                        .iter()
                        .any(|&v| !in_batch[v as usize] && h.edge(e2).contains(v));
                    if share_uninfected {
                        xi.insert(group[i]);
                        xi.insert(group[j]);
                    }
                }
            }
        }
        self.xi = xi.into_iter().collect();
        self.xi.sort_unstable();

        self.t += 1;
        self.trace
            .c_sizes
            .push(self.c.iter().filter(|&&x| x).count());
        self.trace
            .level_sizes
            .push(level_counts(&self.c0_mask, &self.levels, self.r));
        self.trace.activated.push(batch.len());
        self.trace.xi_sizes.push(self.xi.len());
        (batch.len(), infected_count)
    }
}

fn level_counts(c0_mask: &[bool], levels: &[u8], r: usize) -> Vec<usize> {
    let mut counts = vec![0usize; r + 1];
    for (v, &lvl) in levels.iter().enumerate() {
        if c0_mask[v] {
            continue;
        }
        for entry in counts.iter_mut().take(lvl as usize + 1) {
            *entry += 1;
        }
    }
    counts
}

/// Runs to termination: stops once a step activates nothing and infects
/// nothing, with a hard stop at 10n steps.
pub fn run(
    h: &Hypergraph,
    r: usize,
    c0: &[u32],
    schedule: &MildSchedule,
) -> Result<(Vec<u32>, MildTrace)> {
    let mut state = MildState::init(h, r, c0)?;
    let limit = 10 * h.n() as usize + 1;
    while state.t < limit {
        let (batch, infected) = state.mstep(schedule);
        if batch == 0 && infected == 0 {
            break;
        }
    }
    let c_f = (0..h.n()).filter(|&v| state.c[v as usize]).collect();
    Ok((c_f, state.trace))
}

pub fn trace_json(
    h: &Hypergraph,
    r: usize,
    c0_size: usize,
    trace: &MildTrace,
    final_size: usize,
) -> serde_json::Value {
    serde_json::json!({
        "process": "mild",
        "n": h.n(),
        "k": h.k(),
        "r": r,
        "a0_size": c0_size,
        "steps": trace.c_sizes,
        "levels": trace.level_sizes,
        "activated": trace.activated,
        "xi": trace.xi_sizes,
        "final_size": final_size,
    })
}

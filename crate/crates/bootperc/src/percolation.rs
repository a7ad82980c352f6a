//! The reference r-neighbourhood bootstrap percolation process.
//!
//! Synchronous rounds: every uninfected vertex with at least r distinct
//! infected neighbours at the start of a step becomes infected in that step.
//! The incremental engine maintains distinct-infected-neighbour counts; an
//! independent brute-force fixpoint serves as an oracle in tests.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

#[derive(Clone, Debug)]
pub struct InfectionState<'a> {
    h: &'a Hypergraph,
    r: usize,
    infected: Vec<bool>,
    infected_nbr_count: Vec<u32>,
    frontier: Vec<u32>,
    t: usize,
    trace: Vec<usize>,
    verbose: Option<Vec<Vec<u32>>>,
}

impl<'a> InfectionState<'a> {
    pub fn init(h: &'a Hypergraph, r: usize, a0: &[u32]) -> Result<Self> {
        assert!(r >= 2, "infection threshold r must be at least 2");
        let n = h.n() as usize;
        let mut infected = vec![false; n];
        for &v in a0 {
            if v >= h.n() {
                return Err(Error::OutOfRange { vertex: v, n: h.n() });
            }
            infected[v as usize] = true;
        }
        let mut frontier: Vec<u32> = (0..h.n()).filter(|&v| infected[v as usize]).collect();
        frontier.sort_unstable();
        let mut state = InfectionState {
            h,
            r,
            infected,
            infected_nbr_count: vec![0; n],
            frontier: frontier.clone(),
            t: 0,
            trace: Vec::new(),
            verbose: None,
        };
        for &u in &frontier {
            state.bump_counts(u);
        }
        state.trace.push(state.infected_count());
        Ok(state)
    }

    pub fn with_verbose(mut self) -> Self {
        let initial = self.frontier.clone();
        self.verbose = Some(vec![initial]);
        self
    }

    /// Adds 1 to the distinct-infected-neighbour count of every distinct
    /// neighbour of the freshly infected vertex u.
    fn bump_counts(&mut self, u: u32) {
        let mut seen: HashSet<u32> = HashSet::new();
        for &e in self.h.incidence(u) {
            for &w in self.h.edge(e as usize).vertices() {
                if w != u && seen.insert(w) {
                    self.infected_nbr_count[w as usize] += 1;
                }
            }
        }
    }

    pub fn infected(&self) -> &[bool] {
        &self.infected
    }

    pub fn infected_count(&self) -> usize {
        self.infected.iter().filter(|&&b| b).count()
    }

    pub fn infected_nbr_count(&self, v: u32) -> u32 {
        self.infected_nbr_count[v as usize]
    }

    pub fn frontier(&self) -> &[u32] {
        &self.frontier
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn trace(&self) -> &[usize] {
        &self.trace
    }

    pub fn step_sets(&self) -> Option<&[Vec<u32>]> {
        self.verbose.as_deref()
    }

    /// One synchronous round. Returns the vertices infected in this step.
    pub fn step(&mut self) -> Vec<u32> {
        let newly: Vec<u32> = (0..self.h.n())
            .filter(|&v| {
                !self.infected[v as usize]
                    && self.infected_nbr_count[v as usize] >= self.r as u32
            })
            .collect();
        for &v in &newly {
            self.infected[v as usize] = true;
        }
        for &v in &newly {
            self.bump_counts(v);
        }
        self.frontier = newly.clone();
        self.t += 1;
        self.trace.push(self.infected_count());
        if let Some(sets) = self.verbose.as_mut() {
            sets.push(newly.clone());
        }
        newly
    }

    /// Iterates until a step infects nothing. Returns the final infected set
    /// (ascending) and the per-step size trace.
    pub fn run(mut self) -> (Vec<u32>, Vec<usize>) {
        loop {
            if self.step().is_empty() {
                break;
            }
        }
        let final_set: Vec<u32> = (0..self.h.n())
            .filter(|&v| self.infected[v as usize])
            .collect();
        (final_set, self.trace)
    }

    /// Steps that infected at least one vertex.
    pub fn productive_steps(trace: &[usize]) -> usize {
        trace.windows(2).filter(|w| w[1] > w[0]).count()
    }
}

/// Independent oracle: recomputes every neighbour count from scratch each
/// round, no incremental state. Restricted to n <= 2000.
pub fn brute_force_fixpoint(h: &Hypergraph, r: usize, a0: &[u32]) -> Result<Vec<u32>> {
    if h.n() > 2000 {
        return Err(Error::TooLarge(format!(
            "brute force limited to n <= 2000, got {}",
            h.n()
        )));
    }
    let mut infected = vec![false; h.n() as usize];
    for &v in a0 {
        if v >= h.n() {
            return Err(Error::OutOfRange { vertex: v, n: h.n() });
        }
        infected[v as usize] = true;
    }
    loop {
        let mut newly = Vec::new();
        for v in 0..h.n() {
            if infected[v as usize] {
                continue;
            }
            let count = h
                .neighbours(v)?
                .iter()
                .filter(|&&u| infected[u as usize])
                .count();
            if count >= r {
                newly.push(v);
            }
        }
        if newly.is_empty() {
            break;
        }
        for &v in &newly {
            infected[v as usize] = true;
        }
    }
    Ok((0..h.n()).filter(|&v| infected[v as usize]).collect())
}

/// Trace export for the reference process.
pub fn trace_json(
    h: &Hypergraph,
    r: usize,
    a0_size: usize,
    trace: &[usize],
    final_size: usize,
) -> serde_json::Value {
    serde_json::json!({
        "process": "bootstrap",
        "n": h.n(),
        "k": h.k(),
        "r": r,
        "a0_size": a0_size,
        "steps": trace,
        "final_size": final_size,
    })
}

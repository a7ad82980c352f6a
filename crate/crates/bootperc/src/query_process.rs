//! Upper coupling: the queried-collection infection process.
//!
//! Each step builds four families of candidate collections from the state at
//! the end of the previous two steps, then examines them in a fixed family
//! order (neutron-star-adjacent, heavily-infected, widely-overlapping, star)
//! with per-family discard rules. A successful query exposes its k-sets and
//! infects vertices according to the family. The final infected set is a
//! per-instance superset of the reference process's final set.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{binom_u128, for_each_kset, Hypergraph, KSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Star,
    WidelyOverlapping,
    HeavilyInfected,
    NeutronStarAdjacent,
}

/// A candidate collection in fast mode; `edges` are ascending edge indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Collection {
    pub kind: FamilyKind,
    pub edges: Vec<u32>,
    /// Star collections only: the common uninfected hub vertex.
    pub hub: Option<u32>,
    /// Neutron-star-adjacent variant flags.
    pub in_n1: bool,
    pub in_n2: bool,
}

/// The per-step families, already in canonical order (lexicographic by the
/// sorted k-set lists; edge indices follow k-set lexicographic order).
#[derive(Clone, Debug, Default)]
pub struct Families {
    pub stars: Vec<Collection>,
    pub widely: Vec<Collection>,
    pub heavily: Vec<Collection>,
    pub neutron: Vec<Collection>,
}

#[derive(Clone, Debug, Default)]
pub struct QueryTrace {
    /// Infected-set size at the end of each step; index 0 is the initial set.
    pub b_sizes: Vec<usize>,
    /// Exposed-edge count at the end of each step.
    pub f_sizes: Vec<usize>,
    /// (S, W, H, N) family sizes per step, fast mode.
    pub family_sizes: Vec<(usize, usize, usize, usize)>,
}

/// One successful query, recorded in verbose mode.
#[derive(Clone, Debug)]
pub struct SuccessRecord {
    pub kind: FamilyKind,
    pub edges: Vec<u32>,
    pub in_n1: bool,
    pub in_n2: bool,
    /// Neutron-star-adjacent only: previously exposed edges meeting the
    /// queried k-set in a vertex uninfected at the start of the step.
    pub coinfected: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub newly_infected: Vec<u32>,
    pub newly_exposed: Vec<u32>,
    pub successes: Vec<SuccessRecord>,
}

#[derive(Clone, Debug)]
pub struct QueryState<'a> {
    h: &'a Hypergraph,
    r: usize,
    b_prev: Vec<bool>,
    b_cur: Vec<bool>,
    f_prev: Vec<bool>,
    f_cur: Vec<bool>,
    t: usize,
    trace: QueryTrace,
    verbose: Option<Vec<StepRecord>>,
}

#[derive(Clone, Debug)]
pub struct QueryOutcome {
    pub b_f: Vec<u32>,
    pub trace: QueryTrace,
    pub steps: Option<Vec<StepRecord>>,
}

impl<'a> QueryState<'a> {
    pub fn init(h: &'a Hypergraph, r: usize, b0: &[u32]) -> Result<Self> {
        assert!(r >= 2, "infection threshold r must be at least 2");
        let n = h.n() as usize;
        let mut b_cur = vec![false; n];
        for &v in b0 {
            if v >= h.n() {
                return Err(Error::OutOfRange { vertex: v, n: h.n() });
            }
            b_cur[v as usize] = true;
        }
        let mut trace = QueryTrace::default();
        trace.b_sizes.push(b_cur.iter().filter(|&&b| b).count());
        trace.f_sizes.push(0);
        let verbose_initial = StepRecord {
            newly_infected: (0..h.n()).filter(|&v| b_cur[v as usize]).collect(),
            newly_exposed: Vec::new(),
            successes: Vec::new(),
        };
        Ok(QueryState {
            h,
            r,
            b_prev: vec![false; n],
            b_cur,
            f_prev: vec![false; h.num_edges()],
            f_cur: vec![false; h.num_edges()],
            t: 0,
            trace,
            verbose: Some(vec![verbose_initial]),
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn b_cur(&self) -> &[bool] {
        &self.b_cur
    }

    pub fn b_prev(&self) -> &[bool] {
        &self.b_prev
    }

    pub fn f_cur(&self) -> &[bool] {
        &self.f_cur
    }

    pub fn f_prev(&self) -> &[bool] {
        &self.f_prev
    }

    pub fn trace(&self) -> &QueryTrace {
        &self.trace
    }

    fn fresh(&self, v: u32) -> bool {
        self.b_cur[v as usize] && !self.b_prev[v as usize]
    }

    /// Fast-mode family construction: only collections all of whose k-sets
    /// are present edges are enumerated, since queries over non-edges never
    /// succeed and never change state.
    pub fn build_families(&self) -> Families {
        let h = self.h;
        let m = h.num_edges();
        let b = &self.b_cur;

        // per-edge infected count and freshness
        let mut infected_cnt = vec![0u32; m];
        let mut has_fresh = vec![false; m];
        for (idx, e) in h.edges().iter().enumerate() {
            for &v in e.vertices() {
                if b[v as usize] {
                    infected_cnt[idx] += 1;
                }
                if self.fresh(v) {
                    has_fresh[idx] = true;
                }
            }
        }
        // vertex incident to an exposed edge / freshly exposed edge
        let n = h.n() as usize;
        let mut touch_f = vec![false; n];
        let mut touch_f_fresh = vec![false; n];
        for idx in 0..m {
            if self.f_cur[idx] {
                for &v in h.edge(idx).vertices() {
                    touch_f[v as usize] = true;
                    if !self.f_prev[idx] {
                        touch_f_fresh[v as usize] = true;
                    }
                }
            }
        }

        let mut neutron = Vec::new();
        let mut heavily = Vec::new();
        for idx in 0..m {
            let e = h.edge(idx);
            let in_n1 = has_fresh[idx]
                && e.vertices()
                    .iter()
                    .any(|&u| !b[u as usize] && touch_f[u as usize]);
            let in_n2 = infected_cnt[idx] >= 1
                && e.vertices()
                    .iter()
                    .any(|&u| !b[u as usize] && touch_f_fresh[u as usize]);
            if in_n1 || in_n2 {
                neutron.push(Collection {
                    kind: FamilyKind::NeutronStarAdjacent,
                    edges: vec![idx as u32],
                    hub: None,
                    in_n1,
                    in_n2,
                });
            }
            if infected_cnt[idx] >= 2 && has_fresh[idx] {
                heavily.push(Collection {
                    kind: FamilyKind::HeavilyInfected,
                    edges: vec![idx as u32],
                    hub: None,
                    in_n1: false,
                    in_n2: false,
                });
            }
        }

        // widely-overlapping: bucket edges by shared uninfected vertex pairs
        let mut widely = Vec::new();
        if h.k() >= 3 {
            let mut buckets: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
            for idx in 0..m {
                if infected_cnt[idx] == 0 {
                    continue;
                }
                let unf: Vec<u32> = h
                    .edge(idx)
                    .vertices()
                    .iter()
                    .copied()
                    .filter(|&v| !b[v as usize])
                    .collect();
                for i in 0..unf.len() {
                    for j in i + 1..unf.len() {
                        buckets.entry((unf[i], unf[j])).or_default().push(idx as u32);
                    }
                }
            }
            let mut seen: HashSet<(u32, u32)> = HashSet::new();
            for bucket in buckets.values() {
                for i in 0..bucket.len() {
                    for j in i + 1..bucket.len() {
                        let (e1, e2) = (bucket[i].min(bucket[j]), bucket[i].max(bucket[j]));
                        if (has_fresh[e1 as usize] || has_fresh[e2 as usize])
                            && seen.insert((e1, e2))
                        {
                            widely.push(Collection {
                                kind: FamilyKind::WidelyOverlapping,
                                edges: vec![e1, e2],
                                hub: None,
                                in_n1: false,
                                in_n2: false,
                            });
                        }
                    }
                }
            }
        }

        // stars: per uninfected hub, r incident edges with exactly one
        // infected vertex each, pairwise intersecting only in the hub
        let mut stars = Vec::new();
        for v in 0..h.n() {
            if b[v as usize] {
                continue;
            }
            let cand: Vec<u32> = h
                .incidence(v)
                .iter()
                .copied()
                .filter(|&e| infected_cnt[e as usize] == 1)
                .collect();
            if cand.len() < self.r {
                continue;
            }
            let mut chosen: Vec<u32> = Vec::with_capacity(self.r);
            collect_stars(h, &cand, 0, &mut chosen, self.r, &has_fresh, v, &mut stars);
        }

        let key = |c: &Collection| c.edges.clone();
        stars.sort_by_key(key);
        widely.sort_by_key(key);
        heavily.sort_by_key(key);
        neutron.sort_by_key(key);
        Families {
            stars,
            widely,
            heavily,
            neutron,
        }
    }

    /// One step of the process, examining the given families in the order
    /// neutron-star-adjacent, heavily-infected, widely-overlapping, star.
    /// Returns (number newly infected, number newly exposed).
    pub fn qstep(&mut self, families: &Families) -> (usize, usize) {
        let h = self.h;
        let b_start = self.b_cur.clone();
        let f_start = self.f_cur.clone();
        let mut b = self.b_cur.clone();
        let mut phi = self.f_cur.clone();
        // vertex uninfected at step start and covered by a live exposed edge
        let mut exposed_touch = vec![false; h.n() as usize];
        for (idx, &in_f) in f_start.iter().enumerate() {
            if in_f {
                for &v in h.edge(idx).vertices() {
                    if !b_start[v as usize] {
                        exposed_touch[v as usize] = true;
                    }
                }
            }
        }
        let mut newly_exposed: Vec<u32> = Vec::new();
        let mut successes: Vec<SuccessRecord> = Vec::new();

        macro_rules! expose {
            ($idx:expr) => {{
                let idx = $idx as usize;
                if !phi[idx] {
                    phi[idx] = true;
                    newly_exposed.push($idx);
                    for &v in h.edge(idx).vertices() {
                        if !b_start[v as usize] {
                            exposed_touch[v as usize] = true;
                        }
                    }
                }
            }};
        }
        macro_rules! infect_edge {
            ($idx:expr) => {
                for &v in h.edge($idx as usize).vertices() {
                    b[v as usize] = true;
                }
            };
        }

        for c in &families.neutron {
            let kidx = c.edges[0];
            if phi[kidx as usize] {
                continue;
            }
            // exposed edges of F(t) meeting K in a vertex uninfected at the
            // start of the step
            let mut co: Vec<u32> = Vec::new();
            for &u in h.edge(kidx as usize).vertices() {
                if !b_start[u as usize] {
                    for &e in h.incidence(u) {
                        if f_start[e as usize] {
                            co.push(e);
                        }
                    }
                }
            }
            co.sort_unstable();
            co.dedup();
            expose!(kidx);
            infect_edge!(kidx);
            for &e in &co {
                infect_edge!(e);
            }
            successes.push(SuccessRecord {
                kind: FamilyKind::NeutronStarAdjacent,
                edges: c.edges.clone(),
                in_n1: c.in_n1,
                in_n2: c.in_n2,
                coinfected: co,
            });
        }

        for c in &families.heavily {
            let kidx = c.edges[0];
            if phi[kidx as usize] {
                continue;
            }
            expose!(kidx);
            infect_edge!(kidx);
            successes.push(SuccessRecord {
                kind: FamilyKind::HeavilyInfected,
                edges: c.edges.clone(),
                in_n1: false,
                in_n2: false,
                coinfected: Vec::new(),
            });
        }

        for c in &families.widely {
            if c.edges.iter().any(|&e| phi[e as usize]) {
                continue;
            }
            for &e in &c.edges {
                expose!(e);
                infect_edge!(e);
            }
            successes.push(SuccessRecord {
                kind: FamilyKind::WidelyOverlapping,
                edges: c.edges.clone(),
                in_n1: false,
                in_n2: false,
                coinfected: Vec::new(),
            });
        }

        for c in &families.stars {
            if c.edges.iter().any(|&e| phi[e as usize]) {
                continue;
            }
            // no k-set of the star may meet any exposed edge in a vertex
            // uninfected at the start of the step
            let clashes = c.edges.iter().any(|&e| {
                h.edge(e as usize)
                    .vertices()
                    .iter()
                    .any(|&u| exposed_touch[u as usize])
            });
            if clashes {
                continue;
            }
            for &e in &c.edges {
                expose!(e);
            }
            if self.r == 2 {
                for &e in &c.edges {
                    infect_edge!(e);
                }
            } else {
                let hub = c.hub.expect("star collection carries its hub");
                b[hub as usize] = true;
            }
            successes.push(SuccessRecord {
                kind: FamilyKind::Star,
                edges: c.edges.clone(),
                in_n1: false,
                in_n2: false,
                coinfected: Vec::new(),
            });
        }

        let newly_infected: Vec<u32> = (0..h.n())
            .filter(|&v| b[v as usize] && !b_start[v as usize])
            .collect();
        let infected_delta = newly_infected.len();
        let exposed_delta = newly_exposed.len();

        self.b_prev = b_start;
        self.f_prev = f_start;
        self.b_cur = b;
        self.f_cur = phi;
        self.t += 1;
        self.trace
            .b_sizes
            .push(self.b_cur.iter().filter(|&&x| x).count());
        self.trace
            .f_sizes
            .push(self.f_cur.iter().filter(|&&x| x).count());
        self.trace.family_sizes.push((
            families.stars.len(),
            families.widely.len(),
            families.heavily.len(),
            families.neutron.len(),
        ));
        if let Some(steps) = self.verbose.as_mut() {
            steps.push(StepRecord {
                newly_infected,
                newly_exposed,
                successes,
            });
        }
        (infected_delta, exposed_delta)
    }

    fn finish(self, keep_steps: bool) -> QueryOutcome {
        QueryOutcome {
            b_f: (0..self.h.n())
                .filter(|&v| self.b_cur[v as usize])
                .collect(),
            trace: self.trace,
            steps: if keep_steps { self.verbose } else { None },
        }
    }
}

fn collect_stars(
    h: &Hypergraph,
    cand: &[u32],
    start: usize,
    chosen: &mut Vec<u32>,
    r: usize,
    has_fresh: &[bool],
    hub: u32,
    out: &mut Vec<Collection>,
) {
    if chosen.len() == r {
        if chosen.iter().any(|&e| has_fresh[e as usize]) {
            out.push(Collection {
                kind: FamilyKind::Star,
                edges: chosen.clone(),
                hub: Some(hub),
                in_n1: false,
                in_n2: false,
            });
        }
        return;
    }
    for i in start..cand.len() {
        let e = cand[i];
        let pairwise_ok = chosen.iter().all(|&prev| {
            h.edge(prev as usize)
                .vertices()
                .iter()
                .filter(|&&v| h.edge(e as usize).contains(v))
                .count()
                == 1
        });
        if pairwise_ok {
            chosen.push(e);
            collect_stars(h, cand, i + 1, chosen, r, has_fresh, hub, out);
            chosen.pop();
        }
    }
}

/// Runs the process to its fixpoint with the canonical within-family order.
pub fn run(h: &Hypergraph, r: usize, b0: &[u32]) -> Result<(Vec<u32>, QueryTrace)> {
    let outcome = run_full(h, r, b0, false, None::<&mut rand_chacha::ChaCha8Rng>)?;
    Ok((outcome.b_f, outcome.trace))
}

/// Runs with verbose per-step records kept for forest extraction.
pub fn run_verbose(h: &Hypergraph, r: usize, b0: &[u32]) -> Result<QueryOutcome> {
    run_full(h, r, b0, true, None::<&mut rand_chacha::ChaCha8Rng>)
}

/// Runs with every family shuffled before examination; the coupling
/// guarantee is order-free, so the final set must still cover the
/// reference process.
pub fn run_shuffled<R: Rng>(
    h: &Hypergraph,
    r: usize,
    b0: &[u32],
    rng: &mut R,
) -> Result<(Vec<u32>, QueryTrace)> {
    let outcome = run_full(h, r, b0, false, Some(rng))?;
    Ok((outcome.b_f, outcome.trace))
}

fn run_full<R: Rng>(
    h: &Hypergraph,
    r: usize,
    b0: &[u32],
    keep_steps: bool,
    mut rng: Option<&mut R>,
) -> Result<QueryOutcome> {
    let mut state = QueryState::init(h, r, b0)?;
    loop {
        let mut families = state.build_families();
        if let Some(rng) = rng.as_deref_mut() {
            families.stars.shuffle(rng);
            families.widely.shuffle(rng);
            families.heavily.shuffle(rng);
            families.neutron.shuffle(rng);
        }
        let (infected, exposed) = state.qstep(&families);
        if infected == 0 && exposed == 0 {
            break;
        }
    }
    Ok(state.finish(keep_steps))
}

/// Exhaustive family enumeration over all k-sets (tiny n): collections are
/// returned as k-set lists, following the family definitions verbatim.
#[derive(Clone, Debug, Default)]
pub struct ExhaustiveFamilies {
    pub stars: Vec<Vec<KSet>>,
    pub widely: Vec<Vec<KSet>>,
    pub heavily: Vec<Vec<KSet>>,
    pub neutron: Vec<Vec<KSet>>,
}

pub fn build_families_exhaustive(state: &QueryState) -> Result<ExhaustiveFamilies> {
    let h = state.h;
    let n = h.n();
    let k = h.k();
    let r = state.r;
    let total = binom_u128(u64::from(n), k as u64)
        .ok_or_else(|| Error::TooLarge("C(n,k) overflows".to_string()))?;
    if total > 10_000_000 || total.saturating_mul(total) > 10_000_000 {
        return Err(Error::TooLarge(
            "exhaustive candidate count exceeds 10^7".to_string(),
        ));
    }

    let b = state.b_cur();
    let is_fresh = |v: u32| state.b_cur()[v as usize] && !state.b_prev()[v as usize];
    let mut touch_f = vec![false; n as usize];
    let mut touch_f_fresh = vec![false; n as usize];
    for idx in 0..h.num_edges() {
        if state.f_cur()[idx] {
            for &v in h.edge(idx).vertices() {
                touch_f[v as usize] = true;
                if !state.f_prev()[idx] {
                    touch_f_fresh[v as usize] = true;
                }
            }
        }
    }

    let mut all: Vec<KSet> = Vec::with_capacity(total as usize);
    for_each_kset(n, k, |vs| {
        all.push(KSet::from_sorted_unchecked(vs.to_vec()));
    });
    let infected_cnt = |e: &KSet| e.vertices().iter().filter(|&&v| b[v as usize]).count();
    let has_fresh = |e: &KSet| e.vertices().iter().any(|&v| is_fresh(v));

    let mut fams = ExhaustiveFamilies::default();
    for e in &all {
        let cnt = infected_cnt(e);
        let in_n1 = has_fresh(e)
            && e.vertices()
                .iter()
                .any(|&u| !b[u as usize] && touch_f[u as usize]);
        let in_n2 = cnt >= 1
            && e.vertices()
                .iter()
                .any(|&u| !b[u as usize] && touch_f_fresh[u as usize]);
        if in_n1 || in_n2 {
            fams.neutron.push(vec![e.clone()]);
        }
        if cnt >= 2 && has_fresh(e) {
            fams.heavily.push(vec![e.clone()]);
        }
    }

    if k >= 3 {
        let with_infected: Vec<&KSet> = all.iter().filter(|e| infected_cnt(e) >= 1).collect();
        for i in 0..with_infected.len() {
            for j in i + 1..with_infected.len() {
                let (e1, e2) = (with_infected[i], with_infected[j]);
                let shared_unf = e1
                    .vertices()
                    .iter()
                    .filter(|&&v| !b[v as usize] && e2.contains(v))
                    .count();
                if shared_unf >= 2 && (has_fresh(e1) || has_fresh(e2)) {
                    fams.widely.push(vec![e1.clone(), e2.clone()]);
                }
            }
        }
    }

    for v in 0..n {
        if b[v as usize] {
            continue;
        }
        let cand: Vec<&KSet> = all
            .iter()
            .filter(|e| e.contains(v) && infected_cnt(e) == 1)
            .collect();
        if cand.len() < r {
            continue;
        }
        let mut chosen: Vec<usize> = Vec::with_capacity(r);
        collect_star_ksets(&cand, 0, &mut chosen, r, &has_fresh, &mut fams.stars);
    }

    Ok(fams)
}

fn collect_star_ksets(
    cand: &[&KSet],
    start: usize,
    chosen: &mut Vec<usize>,
    r: usize,
    has_fresh: &dyn Fn(&KSet) -> bool,
    out: &mut Vec<Vec<KSet>>,
) {
    if chosen.len() == r {
        if chosen.iter().any(|&i| has_fresh(cand[i])) {
            out.push(chosen.iter().map(|&i| cand[i].clone()).collect());
        }
        return;
    }
    for i in start..cand.len() {
        let pairwise_ok = chosen.iter().all(|&j| {
            cand[j]
                .vertices()
                .iter()
                .filter(|&&v| cand[i].contains(v))
                .count()
                == 1
        });
        if pairwise_ok {
            chosen.push(i);
            collect_star_ksets(cand, i + 1, chosen, r, has_fresh, out);
            chosen.pop();
        }
    }
}

/// Exact (S, W, H, N) counts over all k-sets, for comparison against the
/// family-size upper bounds.
pub fn family_sizes_exhaustive(state: &QueryState) -> Result<(u64, u64, u64, u64)> {
    let fams = build_families_exhaustive(state)?;
    Ok((
        fams.stars.len() as u64,
        fams.widely.len() as u64,
        fams.heavily.len() as u64,
        fams.neutron.len() as u64,
    ))
}

/// Parent assignment over the infected vertices of a verbose run: each
/// vertex infected at step t+1 > t0 receives the smallest vertex infected at
/// step t that shares a successfully queried collection with it (with the
/// exposed-edge attribution for neutron-star-adjacent queries).
#[derive(Clone, Debug, Default)]
pub struct Forest {
    pub parents: HashMap<u32, u32>,
    pub roots: Vec<u32>,
    /// Vertices whose potential-parent set was empty; expected to be empty.
    pub orphans: Vec<u32>,
}

pub fn extract_infection_forest(
    h: &Hypergraph,
    outcome: &QueryOutcome,
    t0: usize,
) -> Result<Forest> {
    let steps = outcome.steps.as_ref().ok_or(Error::MissingTrace)?;
    if t0 >= steps.len() {
        return Err(Error::MissingTrace);
    }
    let mut forest = Forest {
        roots: steps[t0].newly_infected.clone(),
        ..Forest::default()
    };
    // infected[v] = true once v has appeared in some newly_infected set
    // strictly before the step currently being attributed
    let mut infected = vec![false; h.n() as usize];
    for rec in steps.iter().take(t0 + 1) {
        for &v in &rec.newly_infected {
            infected[v as usize] = true;
        }
    }

    for s in t0 + 1..steps.len() {
        let prev_fresh: HashSet<u32> = steps[s - 1].newly_infected.iter().copied().collect();
        let prev_exposed: HashSet<u32> = steps[s - 1].newly_exposed.iter().copied().collect();
        let mut potential: HashMap<u32, Vec<u32>> = HashMap::new();
        let newly: HashSet<u32> = steps[s].newly_infected.iter().copied().collect();

        for q in &steps[s].successes {
            let mut parents: Vec<u32> = Vec::new();
            let mut children: Vec<u32> = Vec::new();
            match q.kind {
                FamilyKind::Star | FamilyKind::WidelyOverlapping | FamilyKind::HeavilyInfected => {
                    for &e in &q.edges {
                        for &v in h.edge(e as usize).vertices() {
                            if prev_fresh.contains(&v) {
                                parents.push(v);
                            }
                            if newly.contains(&v) {
                                children.push(v);
                            }
                        }
                    }
                }
                FamilyKind::NeutronStarAdjacent => {
                    let kidx = q.edges[0];
                    for &v in h.edge(kidx as usize).vertices() {
                        if newly.contains(&v) {
                            children.push(v);
                        }
                        if q.in_n1 && prev_fresh.contains(&v) {
                            parents.push(v);
                        }
                    }
                    for &e in &q.coinfected {
                        for &v in h.edge(e as usize).vertices() {
                            if newly.contains(&v) {
                                children.push(v);
                            }
                            if q.in_n2 && prev_exposed.contains(&e) && prev_fresh.contains(&v) {
                                parents.push(v);
                            }
                        }
                    }
                }
            }
            for &c in &children {
                potential.entry(c).or_default().extend(parents.iter().copied());
            }
        }

        for &v in &steps[s].newly_infected {
            match potential.get(&v).and_then(|ps| ps.iter().min().copied()) {
                Some(parent) => {
                    forest.parents.insert(v, parent);
                }
                None => forest.orphans.push(v),
            }
        }
        for &v in &steps[s].newly_infected {
            infected[v as usize] = true;
        }
    }
    Ok(forest)
}

/// Trace export for the query process.
pub fn trace_json(
    h: &Hypergraph,
    r: usize,
    b0_size: usize,
    trace: &QueryTrace,
    final_size: usize,
) -> serde_json::Value {
    let families: Vec<serde_json::Value> = trace
        .family_sizes
        .iter()
        .enumerate()
        .map(|(i, &(s, w, hh, nn))| {
            serde_json::json!({"t": i + 1, "S": s, "W": w, "H": hh, "N": nn})
        })
        .collect();
    serde_json::json!({
        "process": "query",
        "n": h.n(),
        "k": h.k(),
        "r": r,
        "a0_size": b0_size,
        "steps": trace.b_sizes,
        "exposed": trace.f_sizes,
        "families": families,
        "final_size": final_size,
    })
}

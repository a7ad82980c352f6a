//! Galton-Watson processes with weighted-Bernoulli offspring: exact total
//! progeny distributions via dynamic programming and via the Dwass identity,
//! a simulator, and the exponential tail bound on the total size.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use crate::error::{Error, Result};

type Rat = Ratio<BigInt>;

/// Offspring count distributed as a sum of independent weighted Bernoullis,
/// sum of w_i Be(p_i) with positive integer weights.
#[derive(Clone, Debug)]
pub struct OffspringDistribution {
    terms: Vec<(u64, f64)>,
}

impl OffspringDistribution {
    pub fn new(terms: Vec<(u64, f64)>) -> Result<Self> {
        for &(w, p) in &terms {
            if w == 0 {
                return Err(Error::TooLarge("weights must be positive".to_string()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::TooLarge(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(OffspringDistribution { terms })
    }

    pub fn terms(&self) -> &[(u64, f64)] {
        &self.terms
    }

    /// Mean offspring count.
    pub fn mu(&self) -> f64 {
        self.terms.iter().map(|&(w, p)| w as f64 * p).sum()
    }

    /// Largest single weight.
    pub fn max_weight(&self) -> u64 {
        self.terms.iter().map(|&(w, _)| w).max().unwrap_or(0)
    }

    /// Largest possible offspring count.
    pub fn support_max(&self) -> u64 {
        self.terms.iter().map(|&(w, _)| w).sum()
    }

    /// Exact pmf over 0..=support_max; probabilities entered as f64 are
    /// dyadic rationals, so the convolution below is exact.
    pub fn pmf_exact(&self) -> Vec<Rat> {
        let mut pmf = vec![Rat::one()];
        for &(w, p) in &self.terms {
            let pr = Rat::from_float(p).expect("finite probability");
            let qr = Rat::one() - pr.clone();
            let mut next = vec![Rat::zero(); pmf.len() + w as usize];
            for (j, v) in pmf.iter().enumerate() {
                next[j] += v * &qr;
                next[j + w as usize] += v * &pr;
            }
            pmf = next;
        }
        pmf
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.pmf_exact()
            .iter()
            .map(|r| r.to_f64().unwrap())
            .collect()
    }

    /// Samples one offspring count.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        self.terms
            .iter()
            .map(|&(w, p)| if rng.random::<f64>() < p { w } else { 0 })
            .sum()
    }
}

/// Exact pmf value P[offspring = j].
pub fn offspring_pmf(dist: &OffspringDistribution, j: u64) -> f64 {
    let pmf = dist.pmf();
    pmf.get(j as usize).copied().unwrap_or(0.0)
}

#[derive(Clone, Debug)]
pub struct GWProcess {
    pub offspring: OffspringDistribution,
    pub roots: u64,
}

fn convolve_truncated(a: &[Rat], b: &[Rat], max_deg: usize) -> Vec<Rat> {
    let len = (a.len() + b.len() - 1).min(max_deg + 1);
    let mut out = vec![Rat::zero(); len];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() || i > max_deg {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j > max_deg {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// P[Z = m | Z_0 = roots] by dynamic programming over generation states
/// (alive, total so far), independent of the Dwass identity; serves as its
/// oracle. Exact rational arithmetic throughout.
pub fn total_progeny_pmf_dp(process: &GWProcess, m: u64) -> Result<f64> {
    let ell = process.roots;
    assert!(m >= ell && ell >= 1, "need m >= roots >= 1");
    if m > 200 {
        return Err(Error::TooLarge(format!("dp total size {m} exceeds 200")));
    }
    let m = m as usize;
    let pmf = process.offspring.pmf_exact();

    // conv_pows[z] = z-fold convolution, truncated at degree m
    let mut conv_pows: Vec<Vec<Rat>> = vec![vec![Rat::one()]];
    let mut answer = Rat::zero();
    // state (alive z, total s) -> probability; z <= s <= m always
    let mut states: HashMap<(usize, usize), Rat> = HashMap::new();
    states.insert((ell as usize, ell as usize), Rat::one());
    for _gen in 0..=m + 1 {
        if states.is_empty() {
            break;
        }
        let mut next: HashMap<(usize, usize), Rat> = HashMap::new();
        for ((z, s), prob) in states {
            if z == 0 {
                if s == m {
                    answer += prob;
                }
                continue;
            }
            while conv_pows.len() <= z {
                let last = conv_pows.last().unwrap();
                conv_pows.push(convolve_truncated(last, &pmf, m));
            }
            let conv = &conv_pows[z];
            for y in 0..=(m - s).min(conv.len().saturating_sub(1)) {
                let q = &conv[y];
                if q.is_zero() {
                    continue;
                }
                *next.entry((y, s + y)).or_insert_with(Rat::zero) += &prob * q;
            }
        }
        states = next;
    }
    Ok(answer.to_f64().unwrap())
}

/// P[Z = m | Z_0 = roots] = (roots/m) P[Z_1 = m - roots | Z_0 = m]. Exact
/// rational convolutions when the term count allows, f64 otherwise.
pub fn dwass_pmf(process: &GWProcess, m: u64) -> f64 {
    let ell = process.roots;
    assert!(m >= ell && ell >= 1, "need m >= roots >= 1");
    let target = (m - ell) as usize;
    if process.offspring.terms.len() <= 20 {
        let pmf = process.offspring.pmf_exact();
        let mut conv = vec![Rat::one()];
        for _ in 0..m {
            conv = convolve_truncated(&conv, &pmf, target);
        }
        let v = conv.get(target).cloned().unwrap_or_else(Rat::zero);
        (Rat::new(BigInt::from(ell), BigInt::from(m)) * v)
            .to_f64()
            .unwrap()
    } else {
        let pmf = process.offspring.pmf();
        let mut conv = vec![1.0f64];
        for _ in 0..m {
            let mut next = vec![0.0; (conv.len() + pmf.len() - 1).min(target + 1)];
            for (i, &a) in conv.iter().enumerate() {
                for (j, &b) in pmf.iter().enumerate() {
                    if i + j > target {
                        break;
                    }
                    next[i + j] += a * b;
                }
            }
            conv = next;
        }
        ell as f64 / m as f64 * conv.get(target).copied().unwrap_or(0.0)
    }
}

/// Simulates the total progeny; `None` marks hitting the overflow cap.
pub fn sample_total_progeny(process: &GWProcess, seed: u64, cap: u64) -> Option<u64> {
    assert!(cap > process.roots);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alive = process.roots;
    let mut total = process.roots;
    while alive > 0 {
        let mut next = 0u64;
        for _ in 0..alive {
            next += process.offspring.sample(&mut rng);
        }
        total += next;
        if total >= cap {
            return None;
        }
        alive = next;
    }
    Some(total)
}

pub const DEFAULT_OVERFLOW_CAP: u64 = 1_000_000;

/// Tail of the total progeny: P[Z > (1+chi) ell | Z_0 = ell] is at most
/// exp(-q ell) / (1 - exp(-q)) with
/// q = (1 - (1+chi)^{-1} - mu)^2 (1+chi) / (3 M). Returns +inf at the
/// boundary chi = mu/(1-mu) where the exponent vanishes.
pub fn gw_tail_bound(mu: f64, m_max: f64, chi: f64, ell: u64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::BadMu);
    }
    if chi < mu / (1.0 - mu) {
        return Err(Error::BadChi);
    }
    assert!(m_max >= 1.0 && ell >= 1);
    let q = (1.0 - 1.0 / (1.0 + chi) - mu).powi(2) * (1.0 + chi) / (3.0 * m_max);
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-q * ell as f64).exp() / (-(-q).exp_m1()))
}

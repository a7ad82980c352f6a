//! Closed-form quantities of the phase transition: the edge-multiplicity
//! factor eta, the scaling unit a* and critical size a_c, regime margins,
//! the bounding trajectories for both couplings, the rescaled ODE heuristic,
//! and the concentration-bound calculators.

use crate::error::{Error, Result};
use crate::hypergraph::binom_u128;

#[derive(Clone, Copy, Debug)]
pub struct RegimeParams {
    pub n: u64,
    pub k: u32,
    pub r: u32,
    pub p: f64,
    pub eps: f64,
    pub delta: f64,
}

/// Number of ways two fixed vertices end up adjacent through one edge shape:
/// 1 for r >= 3, 2k-3 for r = 2.
pub fn eta(k: u32, r: u32) -> Result<u64> {
    if k < 2 || r < 2 {
        return Err(Error::BadArity);
    }
    Ok(if r >= 3 { 1 } else { 2 * k as u64 - 3 })
}

/// Lanczos approximation, g = 7, 9 terms; |relative error| < 1e-13 for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_factorial(m: u64) -> f64 {
    if m < 2 {
        0.0
    } else if m <= 20 {
        ((2..=m).product::<u64>() as f64).ln()
    } else {
        ln_gamma(m as f64 + 1.0)
    }
}

/// ln C(n, k); exact integer arithmetic when n*k <= 1000, log-gamma above.
pub fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if n * k <= 1000 {
        (binom_u128(n, k).expect("small binomial fits u128") as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

fn ln_pi(params: &RegimeParams) -> f64 {
    ln_binom(params.n, params.k as u64 - 2) + params.p.ln()
}

/// The scaling unit a* = ((r-1)! / (eta n (C(n,k-2) p)^r))^{1/(r-1)}.
pub fn a_star(params: &RegimeParams) -> Result<f64> {
    let e = eta(params.k, params.r)? as f64;
    let r = params.r as u64;
    let ln_a = (ln_factorial(r - 1)
        - e.ln()
        - (params.n as f64).ln()
        - r as f64 * ln_pi(params))
        / (r as f64 - 1.0);
    Ok(ln_a.exp())
}

/// Critical initial infection a_c = (1 - 1/r) a*.
pub fn a_crit(params: &RegimeParams) -> Result<f64> {
    Ok((1.0 - 1.0 / params.r as f64) * a_star(params)?)
}

/// Margins of the sparse regime n^{-1} << n^{k-2} p << n^{-1/r}.
/// m_low = n^{k-1} p should be large, m_high = n^{k-2+1/r} p should be small.
pub fn regime_margin(params: &RegimeParams) -> (f64, f64, bool) {
    let ln_n = (params.n as f64).ln();
    let ln_p = params.p.ln();
    let m_low = ((params.k as f64 - 1.0) * ln_n + ln_p).exp();
    let m_high = ((params.k as f64 - 2.0 + 1.0 / params.r as f64) * ln_n + ln_p).exp();
    (m_low, m_high, m_low >= 10.0 && m_high <= 0.1)
}

#[derive(Clone, Copy, Debug)]
pub struct BetaRow {
    pub t: usize,
    pub b: f64,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct BetaTrajectory {
    pub a_star: f64,
    pub a_c: f64,
    pub x0: f64,
    pub chi: f64,
    pub xi_prime: f64,
    /// First t with beta(t-1) >= (1 - xi') x0, if reached within the table.
    pub t0: Option<usize>,
    pub rows: Vec<BetaRow>,
}

/// Subcritical trajectory: b(t) by its defining recursion and beta(t) by the
/// rescaled recursion beta(t+1) = (1+delta) beta(t)^r / r + beta(0); the two
/// agree through beta = b/a*.
pub fn beta_trajectory(params: &RegimeParams, steps: usize) -> Result<BetaTrajectory> {
    let r = params.r as f64;
    let (eps, delta) = (params.eps, params.delta);
    if 1.0 / (1.0 + delta) <= (1.0 - eps).powf(r - 1.0) {
        return Err(Error::BadPairing(format!(
            "need 1/(1+delta) > (1-eps)^(r-1), got eps={eps}, delta={delta}"
        )));
    }
    let astar = a_star(params)?;
    let a_c = a_crit(params)?;
    let beta0 = (1.0 - eps) * (1.0 - 1.0 / r);
    let b0 = (1.0 - eps) * a_c;
    let x0 = x0_solve(params.r, delta, beta0)?;
    let chi = 4.0 / delta;
    // largest admissible value is [((1+delta)/(1+delta/2))^{1/(r-1)} - 1]/chi
    let xi_prime =
        0.5 * (((1.0 + delta) / (1.0 + delta / 2.0)).powf(1.0 / (r - 1.0)) - 1.0) / chi;

    let e = eta(params.k, params.r)? as f64;
    let ln_coef = (1.0 + delta).ln() + e.ln() + (params.n as f64).ln()
        + r * ln_pi(params)
        - ln_factorial(params.r as u64);
    let mut rows = vec![BetaRow {
        t: 0,
        b: b0,
        beta: beta0,
    }];
    for t in 0..steps {
        let prev = rows[t];
        rows.push(BetaRow {
            t: t + 1,
            b: (ln_coef + r * prev.b.ln()).exp() + b0,
            beta: (1.0 + delta) * prev.beta.powf(r) / r + beta0,
        });
    }
    let t0 = (1..rows.len()).find(|&t| rows[t - 1].beta >= (1.0 - xi_prime) * x0);
    Ok(BetaTrajectory {
        a_star: astar,
        a_c,
        x0,
        chi,
        xi_prime,
        t0,
        rows,
    })
}

/// Smallest positive solution of x = (1+delta) x^r / r + beta0, found by
/// bisection of h(x) = x - (1+delta) x^r / r over [beta0, (1+delta)^{-1/(r-1)}].
pub fn x0_solve(r: u32, delta: f64, beta0: f64) -> Result<f64> {
    if beta0 <= 0.0 {
        return Err(Error::NoRoot("beta(0) must be positive".to_string()));
    }
    let rf = r as f64;
    let h = |x: f64| x - (1.0 + delta) * x.powf(rf) / rf;
    let mut lo = beta0;
    let mut hi = (1.0 + delta).powf(-1.0 / (rf - 1.0));
    if h(hi) <= beta0 {
        return Err(Error::NoRoot(format!(
            "h at the bracket end is {} <= beta0 = {}",
            h(hi),
            beta0
        )));
    }
    if h(lo) > beta0 {
        return Err(Error::NoRoot("h(beta0) exceeds beta0".to_string()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (h(mid) - beta0).abs() <= 1e-10 {
            return Ok(mid);
        }
        if h(mid) < beta0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimum per-step increase of gamma: (1 + eps - 1/(1-delta)) (1 - 1/r).
pub fn delta_floor(eps: f64, delta: f64, r: u32) -> Result<f64> {
    if (1.0 + eps) * (1.0 - delta) <= 1.0 {
        return Err(Error::BadPairing(format!(
            "need (1+eps)(1-delta) > 1, got eps={eps}, delta={delta}"
        )));
    }
    Ok((1.0 + eps - 1.0 / (1.0 - delta)) * (1.0 - 1.0 / r as f64))
}

/// log(exp(a) + exp(b)) without overflow.
pub fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log(exp(a) - exp(b)) for a > b.
pub fn ln_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    debug_assert!(a > b);
    a + (-(b - a).exp_m1()).ln()
}

#[derive(Clone, Debug)]
pub struct GammaRow {
    pub t: usize,
    /// ln c(t) driven by the Definition's level recursion.
    pub ln_c: f64,
    /// ln gamma(t) from the rescaled recursion.
    pub ln_gamma: f64,
    /// ln c_i(t), i = 0..=r, by the level recursion.
    pub ln_levels: Vec<f64>,
    /// ln c_i(t), i = 0..=r, by the closed form c(t-1)^i / i! n pi^i.
    pub ln_levels_closed: Vec<f64>,
}

impl GammaRow {
    pub fn c(&self) -> f64 {
        self.ln_c.exp()
    }

    pub fn gamma(&self) -> f64 {
        self.ln_gamma.exp()
    }
}

#[derive(Clone, Debug)]
pub struct GammaTrajectory {
    pub a_star: f64,
    pub a_c: f64,
    pub delta_floor: f64,
    pub rows: Vec<GammaRow>,
}

/// Supercritical trajectory in the log domain: the level recursion of c_i,
/// its closed form, and the rescaled gamma recursion, all doubly exponential
/// so only logs are representable at depth.
pub fn gamma_trajectory(params: &RegimeParams, steps: usize) -> Result<GammaTrajectory> {
    let r = params.r as usize;
    let rf = r as f64;
    let dfl = delta_floor(params.eps, params.delta, params.r)?;
    let astar = a_star(params)?;
    let a_c = a_crit(params)?;
    let e = eta(params.k, params.r)? as f64;
    let lpi = ln_pi(params);
    let ln_n = (params.n as f64).ln();
    let ln_one_minus_delta = (1.0 - params.delta).ln();

    let ln_c0 = ((1.0 + params.eps) * a_c).ln();
    let ln_gamma0 = ((1.0 + params.eps) * (1.0 - 1.0 / rf)).ln();
    let mut levels0 = vec![f64::NEG_INFINITY; r + 1];
    levels0[0] = ln_n;
    let mut rows = vec![GammaRow {
        t: 0,
        ln_c: ln_c0,
        ln_gamma: ln_gamma0,
        ln_levels: levels0.clone(),
        ln_levels_closed: levels0,
    }];
    let mut ln_c_prev = f64::NEG_INFINITY; // c(-1) = 0

    for t in 0..steps {
        let cur = &rows[t];
        let ln_dc = ln_sub(cur.ln_c, ln_c_prev);
        let mut levels = vec![f64::NEG_INFINITY; r + 1];
        let mut closed = vec![f64::NEG_INFINITY; r + 1];
        levels[0] = ln_n;
        closed[0] = ln_n;
        for i in 1..=r {
            let mut acc = cur.ln_levels[i];
            for j in 0..i {
                let d = (i - j) as f64;
                acc = ln_add(
                    acc,
                    cur.ln_levels[j] + d * (ln_dc + lpi) - ln_factorial((i - j) as u64),
                );
            }
            if i == r {
                // the damping multiplies only the fresh sum, not the carry
                let fresh = ln_sub(acc, cur.ln_levels[i]);
                acc = ln_add(cur.ln_levels[i], ln_one_minus_delta + fresh);
            }
            levels[i] = acc;
            let mut cf = i as f64 * cur.ln_c - ln_factorial(i as u64) + ln_n + i as f64 * lpi;
            if i == r {
                cf += ln_one_minus_delta;
            }
            closed[i] = cf;
        }
        let ln_c_next = ln_add(e.ln() + levels[r], ln_c0);
        let ln_gamma_next = ln_add(
            ln_one_minus_delta + rf * cur.ln_gamma - rf.ln(),
            ln_gamma0,
        );
        ln_c_prev = cur.ln_c;
        rows.push(GammaRow {
            t: t + 1,
            ln_c: ln_c_next,
            ln_gamma: ln_gamma_next,
            ln_levels: levels,
            ln_levels_closed: closed,
        });
    }
    Ok(GammaTrajectory {
        a_star: astar,
        a_c,
        delta_floor: dfl,
        rows,
    })
}

/// phi_c = (1 - 1/r) ((r-1)!)^{1/(r-1)}, the rescaled critical value.
pub fn phi_crit(r: u32) -> f64 {
    let rf = r as f64;
    (1.0 - 1.0 / rf) * ln_factorial(r as u64 - 1).exp().powf(1.0 / (rf - 1.0))
}

#[derive(Clone, Debug)]
pub struct OdeResult {
    pub curve: Vec<(f64, f64)>,
    pub phi_c: f64,
    pub stalled: bool,
}

/// Integrates phi'(x) = phi^r / r! - phi + phi(0) by classical Runge-Kutta,
/// halving the step until the terminal value changes by less than 1e-8.
/// Stalls when the derivative reaches zero; stops early once phi passes
/// well beyond the escape region.
pub fn ode_heuristic(r: u32, phi0: f64, x_max: f64, dt: f64) -> OdeResult {
    assert!(phi0 > 0.0 && dt > 0.0 && x_max > 0.0);
    let mut step = dt;
    let mut result = integrate(r, phi0, x_max, step);
    for _ in 0..20 {
        step *= 0.5;
        let finer = integrate(r, phi0, x_max, step);
        // an escaped run has an arbitrary terminal overshoot, so only the
        // qualitative outcome is compared there
        let both_escaped = finer.1 > 1e6 && result.1 > 1e6;
        let stable =
            finer.2 == result.2 && (both_escaped || (finer.1 - result.1).abs() < 1e-8);
        result = finer;
        if stable {
            break;
        }
    }
    OdeResult {
        curve: result.0,
        phi_c: phi_crit(r),
        stalled: result.2,
    }
}

fn integrate(r: u32, phi0: f64, x_max: f64, dt: f64) -> (Vec<(f64, f64)>, f64, bool) {
    let rfac = ln_factorial(r as u64).exp();
    let f = |phi: f64| phi.powi(r as i32) / rfac - phi + phi0;
    let sample_every = ((x_max / dt / 1000.0).ceil() as usize).max(1);
    let mut curve = vec![(0.0, phi0)];
    let mut phi = phi0;
    let mut x = 0.0;
    let mut stalled = false;
    let mut i = 0usize;
    // below the critical value the trajectory approaches the derivative's
    // first root asymptotically, so a strict zero test never fires
    let stall_eps = 1e-6;
    while x < x_max {
        if f(phi) <= stall_eps {
            stalled = true;
            break;
        }
        let k1 = f(phi);
        let k2 = f(phi + 0.5 * dt * k1);
        let k3 = f(phi + 0.5 * dt * k2);
        let k4 = f(phi + dt * k3);
        phi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x += dt;
        i += 1;
        if i % sample_every == 0 {
            curve.push((x, phi));
        }
        if phi > 1e6 {
            break;
        }
    }
    curve.push((x, phi));
    (curve, phi, stalled)
}

/// exp(-theta^2 / (2 (variance + M theta / 3))), tail of a sum of bounded
/// independent variables.
pub fn mcdiarmid_bound(variance: f64, m: f64, theta: f64) -> f64 {
    assert!(variance >= 0.0 && m > 0.0 && theta >= 0.0);
    if theta == 0.0 {
        return 1.0;
    }
    (-theta * theta / (2.0 * (variance + m * theta / 3.0))).exp()
}

/// lambda exp(-theta^2 / (2 (var_hat + theta / 3))), for sums of dependent
/// Bernoullis dominated by lambda independent copies. May exceed 1.
pub fn dependent_bound(lambda: f64, var_hat: f64, theta: f64) -> f64 {
    assert!(lambda > 0.0);
    if theta == 0.0 {
        return lambda;
    }
    lambda * (-theta * theta / (2.0 * (var_hat + theta / 3.0))).exp()
}

/// exp(-theta^2 / (2 sum c_i^2)), supermartingale with bounded increments.
pub fn azuma_bound(increments: &[f64], theta: f64) -> Result<f64> {
    if increments.is_empty() {
        return Err(Error::EmptyIncrements);
    }
    assert!(increments.iter().all(|&c| c > 0.0));
    let s: f64 = increments.iter().map(|c| c * c).sum();
    Ok((-theta * theta / (2.0 * s)).exp())
}

/// Exhaustive product-measure check on the 4-vertex graph: A = triangle on
/// {0,1,2} present (increasing), B = vertex 3 isolated (decreasing).
/// Returns (P[A and B], P[A], P[B]); the product measure gives
/// P[A and B] <= P[A] P[B].
pub fn fkg_exhaustive_check(p: f64) -> (f64, f64, f64) {
    let pairs: [(u32, u32); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let (mut pa, mut pb, mut pab) = (0.0, 0.0, 0.0);
    for mask in 0u32..64 {
        let mut prob = 1.0;
        for (i, _) in pairs.iter().enumerate() {
            prob *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
        }
        let has = |u: u32, v: u32| {
            let idx = pairs.iter().position(|&e| e == (u, v)).unwrap();
            mask >> idx & 1 == 1
        };
        let a = has(0, 1) && has(0, 2) && has(1, 2);
        let b = !has(0, 3) && !has(1, 3) && !has(2, 3);
        if a {
            pa += prob;
        }
        if b {
            pb += prob;
        }
        if a && b {
            pab += prob;
        }
    }
    (pab, pa, pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: u64, k: u32, r: u32, p: f64, eps: f64, delta: f64) -> RegimeParams {
        RegimeParams {
            n,
            k,
            r,
            p,
            eps,
            delta,
        }
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(2, 2).unwrap(), 1);
        assert_eq!(eta(5, 2).unwrap(), 7);
        assert_eq!(eta(3, 3).unwrap(), 1);
        assert_eq!(eta(1, 2), Err(Error::BadArity));
        assert_eq!(eta(3, 1), Err(Error::BadArity));
    }

    #[test]
    fn a_star_graph_case() {
        let pr = params(100_000, 2, 2, 1e-4, 0.1, 0.05);
        let a = a_star(&pr).unwrap();
        assert!((a - 1000.0).abs() / 1000.0 < 1e-10);
        assert!((a_crit(&pr).unwrap() - 500.0).abs() < 1e-7);
    }

    #[test]
    fn a_star_p_scaling() {
        let pr1 = params(100_000, 2, 2, 1e-4, 0.1, 0.05);
        let pr2 = params(100_000, 2, 2, 2e-4, 0.1, 0.05);
        let ratio = a_star(&pr1).unwrap() / a_star(&pr2).unwrap();
        assert!((ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn a_crit_factor() {
        for r in 2..6 {
            let pr = params(10_000, 3, r, 1e-6, 0.1, 0.05);
            let ratio = a_crit(&pr).unwrap() / a_star(&pr).unwrap();
            assert!((ratio - (1.0 - 1.0 / r as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn regime_margins() {
        let (lo, hi, ok) = regime_margin(&params(100_000, 2, 2, 1e-4, 0.1, 0.05));
        assert!((lo - 10.0).abs() < 1e-6);
        assert!((hi - 10f64.powf(-1.5)).abs() < 1e-6);
        assert!(ok);
        let (lo, _, ok) = regime_margin(&params(100_000, 2, 2, 1e-5, 0.1, 0.05));
        assert!((lo - 1.0).abs() < 1e-9 && !ok);
        let (_, hi, ok) = regime_margin(&params(10_000, 2, 2, 0.01, 0.1, 0.05));
        assert!((hi - 1.0).abs() < 1e-9 && !ok);
    }

    #[test]
    fn ln_binom_crossover_consistency() {
        // both branches agree around the exact/log-gamma switch
        for n in [40u64, 100, 200] {
            for k in [3u64, 5, 10] {
                let exact = (binom_u128(n, k).unwrap() as f64).ln();
                assert!((ln_binom(n, k) - exact).abs() < 1e-9 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn beta_one_step_by_hand() {
        let pr = params(100_000, 2, 2, 1e-4, 0.25, 0.1);
        let tr = beta_trajectory(&pr, 1).unwrap();
        assert!((tr.rows[0].beta - 0.375).abs() < 1e-15);
        assert!((tr.rows[1].beta - 0.45234375).abs() < 1e-12);
    }

    #[test]
    fn beta_matches_b_over_a_star() {
        let pr = params(100_000, 2, 2, 1e-4, 0.2, 0.05);
        let tr = beta_trajectory(&pr, 50).unwrap();
        for row in &tr.rows {
            let rel = (row.b / tr.a_star - row.beta).abs() / row.beta;
            assert!(rel < 1e-12, "t={} rel={}", row.t, rel);
        }
    }

    #[test]
    fn beta_bounded_by_x0() {
        let pr = params(100_000, 3, 2, 2e-9, 0.15, 0.1);
        let tr = beta_trajectory(&pr, 10_000).unwrap();
        for w in tr.rows.windows(2) {
            assert!(w[1].beta >= w[0].beta);
            assert!(w[1].beta < tr.x0);
        }
    }

    #[test]
    fn beta_gain_before_t0() {
        let pr = params(100_000, 2, 2, 1e-4, 0.2, 0.1);
        let tr = beta_trajectory(&pr, 200).unwrap();
        let gain = (pr.r as f64 - 1.0) * tr.xi_prime * tr.xi_prime * tr.x0 / pr.r as f64;
        for w in tr.rows.windows(2) {
            if w[0].beta < (1.0 - tr.xi_prime) * tr.x0 {
                assert!(w[1].beta - w[0].beta >= gain);
            }
        }
    }

    #[test]
    fn beta_rejects_bad_pairing() {
        // eps small and delta large violates 1/(1+delta) > (1-eps)^{r-1}
        let pr = params(100_000, 2, 2, 1e-4, 0.01, 0.9);
        assert!(matches!(
            beta_trajectory(&pr, 5),
            Err(Error::BadPairing(_))
        ));
    }

    #[test]
    fn x0_quadratic_closed_form() {
        // r=2, delta=0: x - x^2/2 = 0.375 has smallest root 1 - sqrt(0.25)
        let x0 = x0_solve(2, 0.0, 0.375).unwrap();
        assert!((x0 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn x0_within_bounds() {
        for r in 2..5 {
            for &(eps, delta) in &[(0.2, 0.05), (0.3, 0.1), (0.5, 0.2)] {
                let beta0 = (1.0 - eps) * (1.0 - 1.0 / r as f64);
                let x0 = x0_solve(r, delta, beta0).unwrap();
                assert!(beta0 < x0);
                assert!(x0 < (1.0 + delta as f64).powf(-1.0 / (r as f64 - 1.0)));
            }
        }
    }

    #[test]
    fn x0_residual_small() {
        let x0 = x0_solve(3, 0.1, 0.4).unwrap();
        let h = x0 - 1.1 * x0.powi(3) / 3.0;
        assert!((h - 0.4).abs() <= 1e-10);
    }

    #[test]
    fn delta_floor_values() {
        let d = delta_floor(0.5, 0.2, 2).unwrap();
        assert!((d - 0.125).abs() < 1e-12);
        assert!(matches!(delta_floor(0.1, 0.2, 2), Err(Error::BadPairing(_))));
    }

    #[test]
    fn gamma_closed_form_matches_recursion() {
        let pr = params(100_000, 2, 2, 1e-4, 0.3, 0.1);
        let tr = gamma_trajectory(&pr, 50).unwrap();
        for row in tr.rows.iter().skip(1) {
            for i in 0..=pr.r as usize {
                let (a, b) = (row.ln_levels[i], row.ln_levels_closed[i]);
                if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
                    continue;
                }
                assert!(
                    (a - b).abs() < 1e-12 * b.abs().max(1.0),
                    "t={} i={} rec={} closed={}",
                    row.t,
                    i,
                    a,
                    b
                );
            }
            // gamma recursion tracks c/a*
            let rel = (row.ln_c - tr.a_star.ln() - row.ln_gamma).abs();
            assert!(
                rel < 1e-12 * row.ln_gamma.abs().max(1.0),
                "t={} rel={}",
                row.t,
                rel
            );
        }
    }

    #[test]
    fn gamma_increments_exceed_floor() {
        let pr = params(100_000, 3, 3, 1e-8, 0.4, 0.1);
        let tr = gamma_trajectory(&pr, 40).unwrap();
        for w in tr.rows.windows(2) {
            let diff = if w[1].ln_gamma > 300.0 {
                f64::INFINITY
            } else {
                w[1].gamma() - w[0].gamma()
            };
            assert!(diff > tr.delta_floor);
        }
    }

    #[test]
    fn gamma_level_zero_is_n() {
        let pr = params(50_000, 2, 2, 1e-4, 0.3, 0.1);
        let tr = gamma_trajectory(&pr, 10).unwrap();
        for row in &tr.rows {
            assert_eq!(row.ln_levels[0], (pr.n as f64).ln());
        }
    }

    #[test]
    fn phi_crit_values() {
        assert!((phi_crit(2) - 0.5).abs() < 1e-12);
        assert!((phi_crit(3) - 2.0 / 3.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ode_stalls_below_and_escapes_above() {
        for r in [2u32, 3, 4] {
            let pc = phi_crit(r);
            let below = ode_heuristic(r, 0.9 * pc, 50.0, 1e-3);
            assert!(below.stalled, "r={} should stall", r);
            let above = ode_heuristic(r, 1.1 * pc, 50.0, 1e-3);
            assert!(!above.stalled, "r={} should escape", r);
            let max_phi = above.curve.iter().map(|&(_, v)| v).fold(0.0, f64::max);
            assert!(max_phi > 10.0, "r={} max_phi={}", r, max_phi);
        }
    }

    #[test]
    fn mcdiarmid_values() {
        assert_eq!(mcdiarmid_bound(5.0, 1.0, 0.0), 1.0);
        let b = mcdiarmid_bound(100.0, 1.0, 30.0);
        assert!((b - (-900.0f64 / 220.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn dependent_values() {
        assert_eq!(dependent_bound(3.0, 5.0, 0.0), 3.0);
        let b = dependent_bound(2.0, 50.0, 20.0);
        assert!((b - 2.0 * (-400.0f64 / (2.0 * (50.0 + 20.0 / 3.0))).exp()).abs() < 1e-12);
    }

    #[test]
    fn azuma_values() {
        let b = azuma_bound(&[1.0, 1.0, 1.0, 1.0], 4.0).unwrap();
        assert!((b - (-2.0f64).exp()).abs() < 1e-12);
        assert_eq!(azuma_bound(&[], 1.0), Err(Error::EmptyIncrements));
    }

    #[test]
    fn fkg_negative_association() {
        let (pab, pa, pb) = fkg_exhaustive_check(0.3);
        assert!(pab <= pa * pb + 1e-15);
        // sanity of the marginals
        assert!((pa - 0.3f64.powi(3)).abs() < 1e-12);
        assert!((pb - 0.7f64.powi(3)).abs() < 1e-12);
        assert!((pab - 0.3f64.powi(3) * 0.7f64.powi(3)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mcdiarmid_monotone(theta in 0.1f64..30.0, var in 0.1f64..100.0) {
            let b1 = mcdiarmid_bound(var, 1.0, theta);
            let b2 = mcdiarmid_bound(var, 1.0, theta + 1.0);
            prop_assert!(b2 <= b1);
            let b3 = mcdiarmid_bound(var + 10.0, 1.0, theta);
            prop_assert!(b3 >= b1);
        }

        #[test]
        fn x0_bracket_holds(r in 2u32..6, eps in 0.05f64..0.6, delta in 0.01f64..0.3) {
            prop_assume!(1.0 / (1.0 + delta) > (1.0 - eps).powf(r as f64 - 1.0));
            let beta0 = (1.0 - eps) * (1.0 - 1.0 / r as f64);
            let x0 = x0_solve(r, delta, beta0).unwrap();
            prop_assert!(beta0 < x0 && x0 < 1.0);
        }
    }
}

//! Pólya, Chinese restaurant, triangular and three-type urns.
//!
//! Each scheme has a literal one-step transition on exact weights and a fast
//! run that produces the same law. Fast runs skip over stretches with no rare
//! event by thinning a geometric proposal.

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::distributions::sample_beta;
use crate::error::{Error, Result};
use crate::number::{Alpha, Number};
use crate::rng::RandomStream;

/// Weights per colour and the number of steps taken.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UrnState {
    pub weights: Vec<Number>,
    pub steps: u64,
}

impl UrnState {
    pub fn new(weights: Vec<Number>) -> Self {
        Self { weights, steps: 0 }
    }

    pub fn total(&self) -> Number {
        self.weights.iter().cloned().sum()
    }
}

/// Index drawn with probability proportional to the weights. Exact weights are
/// brought to a common denominator and sampled as integers.
fn pick_number(weights: &[&Number], rng: &mut RandomStream) -> Result<usize> {
    if weights.iter().any(|w| w.to_f64() < 0.0) {
        return Err(Error::InvalidParameter("negative urn weight".into()));
    }
    if weights.iter().all(|w| w.exact().is_some()) {
        let mut den = BigInt::one();
        for w in weights {
            den = den.lcm(w.exact().unwrap().denom());
        }
        let ints: Vec<BigInt> =
            weights.iter().map(|w| { let r = w.exact().unwrap(); r.numer() * (&den / r.denom()) }).collect();
        let total: BigInt = ints.iter().sum();
        if !total.is_positive() {
            return Err(Error::InvalidParameter("urn has no positive weight".into()));
        }
        if let Some(t) = total.to_u64() {
            let mut r = rng.below(t);
            for (i, x) in ints.iter().enumerate() {
                let x = x.to_u64().unwrap();
                if r < x {
                    return Ok(i);
                }
                r -= x;
            }
        }
    }
    let w: Vec<f64> = weights.iter().map(|w| w.to_f64()).collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("urn has no positive weight".into()));
    }
    let mut r = rng.uniform() * total;
    let mut last = 0;
    for (i, &x) in w.iter().enumerate() {
        if x > 0.0 {
            if r < x {
                return Ok(i);
            }
            r -= x;
            last = i;
        }
    }
    Ok(last)
}

/// Draws a colour proportionally to its weight and adds β to it.
pub fn polya_step(u: &UrnState, beta: &Number, rng: &mut RandomStream) -> Result<UrnState> {
    if u.weights.is_empty() || u.weights.iter().any(|w| w.to_f64() <= 0.0) || beta.to_f64() <= 0.0 {
        return Err(Error::InvalidParameter("Pólya urn needs positive weights and beta".into()));
    }
    let refs: Vec<&Number> = u.weights.iter().collect();
    let i = pick_number(&refs, rng)?;
    let mut next = u.clone();
    next.weights[i] = &next.weights[i] + beta;
    next.steps += 1;
    Ok(next)
}

/// Runs a Pólya urn with integer weights and integer increment, returning the
/// colour shares W_i / ΣW at each checkpoint (checkpoints must be increasing).
pub fn polya_shares(initial: &[u64], beta: u64, checkpoints: &[u64], rng: &mut RandomStream) -> Result<Vec<Vec<f64>>> {
    if initial.is_empty() || initial.iter().any(|&a| a == 0) || beta == 0 {
        return Err(Error::InvalidParameter("Pólya urn needs positive weights and beta".into()));
    }
    check_checkpoints(checkpoints)?;
    let mut w = initial.to_vec();
    let mut total: u64 = w.iter().sum();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut n = 0u64;
    for &cp in checkpoints {
        if w.len() == 2 && total.saturating_add(beta.saturating_mul(cp - n + 2)) < u32::MAX as u64 {
            let mut first = w[0];
            while n + 2 <= cp {
                let x = rng.next_u64();
                first += beta & 0u64.wrapping_sub(((below32(x as u32, total as u32, rng) as u64) < first) as u64);
                total += beta;
                first += beta & 0u64.wrapping_sub(((below32((x >> 32) as u32, total as u32, rng) as u64) < first) as u64);
                total += beta;
                n += 2;
            }
            if n < cp {
                first += beta * (rng.below(total) < first) as u64;
                total += beta;
                n += 1;
            }
            w[0] = first;
            w[1] = total - first;
        } else if w.len() == 2 {
            let mut first = w[0];
            while n < cp {
                first += beta * (rng.below(total) < first) as u64;
                total += beta;
                n += 1;
            }
            w[0] = first;
            w[1] = total - first;
        } else {
            while n < cp {
                let mut r = rng.below(total);
                let mut i = 0;
                while r >= w[i] {
                    r -= w[i];
                    i += 1;
                }
                w[i] += beta;
                total += beta;
                n += 1;
            }
        }
        out.push(w.iter().map(|&x| x as f64 / total as f64).collect());
    }
    Ok(out)
}

/// Uniform integer in [0, n) from 32 random bits by widening multiplication,
/// drawing fresh bits on rejection.
#[inline]
fn below32(mut u: u32, n: u32, rng: &mut RandomStream) -> u32 {
    let mut m = u as u64 * n as u64;
    if (m as u32) < n {
        let t = n.wrapping_neg() % n;
        while (m as u32) < t {
            u = rng.next_u32();
            m = u as u64 * n as u64;
        }
    }
    (m >> 32) as u32
}

fn check_checkpoints(cps: &[u64]) -> Result<()> {
    if cps.is_empty() || cps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("checkpoints must be nonempty and increasing".into()));
    }
    Ok(())
}

/// First index i in [start, limit) at which an event occurs, when the event
/// at index i has probability min(1, c/(x + i)) independently of the others.
fn next_event(c: f64, x: f64, start: u64, limit: u64, rng: &mut RandomStream) -> Option<u64> {
    let mut i = start;
    loop {
        if i >= limit {
            return None;
        }
        let base = x + i as f64;
        let p0 = c / base;
        if p0 >= 1.0 {
            return Some(i);
        }
        let skip = (rng.open_uniform().ln() / (-p0).ln_1p()).floor();
        if skip >= (limit - i) as f64 {
            return None;
        }
        let j = i + skip as u64;
        if rng.uniform() * (x + j as f64) < base {
            return Some(j);
        }
        i = j + 1;
    }
}

/// Table sizes of a Chinese restaurant process and the number of customers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrpState {
    pub tables: Vec<u64>,
    pub customers: u64,
}

impl CrpState {
    /// One table with one customer.
    pub fn start() -> Self {
        Self { tables: vec![1], customers: 1 }
    }

    /// Table shares sorted decreasingly.
    pub fn sorted_shares(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.tables.iter().map(|&t| t as f64 / self.customers as f64).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

fn check_crp(beta: f64, theta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) || !(theta > -beta) {
        return Err(Error::InvalidParameter(format!("CRP({beta}, {theta}) needs beta in (0,1), theta > -beta")));
    }
    Ok(())
}

/// Seats one customer: table i w.p. (n_i − β)/(n + θ), a new table w.p.
/// (θ + kβ)/(n + θ).
pub fn crp_step(state: &CrpState, beta: f64, theta: f64, rng: &mut RandomStream) -> Result<CrpState> {
    check_crp(beta, theta)?;
    let n = state.customers as f64;
    let k = state.tables.len() as f64;
    let mut r = rng.uniform() * (n + theta);
    let mut next = state.clone();
    next.customers += 1;
    for (i, &t) in state.tables.iter().enumerate() {
        let w = t as f64 - beta;
        if r < w {
            next.tables[i] += 1;
            return Ok(next);
        }
        r -= w;
    }
    debug_assert!(r < theta + k * beta + 1e-9);
    next.tables.push(1);
    Ok(next)
}

/// Runs the restaurant to `customers` customers and returns the table sizes.
pub fn crp_run(beta: f64, theta: f64, customers: u64, rng: &mut RandomStream) -> Result<CrpState> {
    let mut st = CrpState::start();
    while st.customers < customers {
        st = crp_step_in_place(st, beta, theta, rng)?;
    }
    Ok(st)
}

fn crp_step_in_place(mut st: CrpState, beta: f64, theta: f64, rng: &mut RandomStream) -> Result<CrpState> {
    check_crp(beta, theta)?;
    let mut r = rng.uniform() * (st.customers as f64 + theta);
    st.customers += 1;
    for t in st.tables.iter_mut() {
        let w = *t as f64 - beta;
        if r < w {
            *t += 1;
            return Ok(st);
        }
        r -= w;
    }
    st.tables.push(1);
    Ok(st)
}

/// Number of occupied tables K(n) once n customers are seated, tracking only
/// the table count.
pub fn crp_table_count(beta: f64, theta: f64, customers: u64, rng: &mut RandomStream) -> Result<u64> {
    check_crp(beta, theta)?;
    if customers == 0 {
        return Ok(0);
    }
    let mut k = 1u64;
    let mut n = 1u64;
    while let Some(i) = next_event(theta + k as f64 * beta, theta, n, customers, rng) {
        k += 1;
        n = i + 1;
    }
    Ok(k)
}

/// Red pick adds γ to red and β − γ to black; black pick adds β to black.
/// The state holds (red, black).
pub fn triangular_step(u: &UrnState, gamma: &Number, beta: &Number, rng: &mut RandomStream) -> Result<UrnState> {
    check_triangular(u.weights.first().map(Number::to_f64).unwrap_or(0.0), u.weights.get(1).map(Number::to_f64).unwrap_or(-1.0), gamma.to_f64(), beta.to_f64())?;
    if u.weights.len() != 2 {
        return Err(Error::InvalidParameter("triangular urn has exactly two colours".into()));
    }
    let refs: Vec<&Number> = u.weights.iter().collect();
    let i = pick_number(&refs, rng)?;
    let mut next = u.clone();
    if i == 0 {
        next.weights[0] = &next.weights[0] + gamma;
        next.weights[1] = &next.weights[1] + &(beta - gamma);
    } else {
        next.weights[1] = &next.weights[1] + beta;
    }
    next.steps += 1;
    Ok(next)
}

fn check_triangular(a: f64, b: f64, gamma: f64, beta: f64) -> Result<()> {
    if !(a > 0.0) || !(b >= 0.0) || !(gamma > 0.0) || !(beta > gamma) {
        return Err(Error::InvalidParameter(format!(
            "triangular urn needs a > 0, b >= 0, beta > gamma > 0 (a={a}, b={b}, gamma={gamma}, beta={beta})"
        )));
    }
    Ok(())
}

/// Red weight R_n = a + γ·(red picks) at each checkpoint.
pub fn triangular_red(a: f64, b: f64, gamma: f64, beta: f64, checkpoints: &[u64], rng: &mut RandomStream) -> Result<Vec<f64>> {
    check_triangular(a, b, gamma, beta)?;
    check_checkpoints(checkpoints)?;
    let mut reds = 0u64;
    let mut n = 0u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        // red at step i + 1 has probability (a + γK)/(a + b + iβ)
        while let Some(i) = next_event((a + gamma * reds as f64) / beta, (a + b) / beta, n, cp, rng) {
            reds += 1;
            n = i + 1;
        }
        n = cp;
        out.push(a + gamma * reds as f64);
    }
    Ok(out)
}

/// E[R_n] = a ∏_{i<n} (1 + γ/(a + b + iβ)).
pub fn triangular_mean(a: f64, b: f64, gamma: f64, beta: f64, n: u64) -> f64 {
    let mut m = a;
    for i in 0..n {
        m *= 1.0 + gamma / (a + b + i as f64 * beta);
    }
    m
}

/// Weights of types a, b and c per colour.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeTypeState {
    pub a: Vec<Number>,
    pub b: Vec<Number>,
    pub c: Vec<Number>,
    pub steps: u64,
}

impl ThreeTypeState {
    /// Initial weights (γ_i, 0, 0).
    pub fn new(gammas: Vec<Number>) -> Self {
        let k = gammas.len();
        Self { a: gammas, b: vec![Number::zero(); k], c: vec![Number::zero(); k], steps: 0 }
    }

    pub fn total(&self) -> Number {
        self.a.iter().chain(&self.b).chain(&self.c).cloned().sum()
    }
}

/// a-pick adds (α−1, 2−α, α−1); b-pick adds (0, 1, α−1); c-pick adds (0, 0, α).
pub fn three_type_step(st: &ThreeTypeState, alpha: &Number, rng: &mut RandomStream) -> Result<ThreeTypeState> {
    let af = alpha.to_f64();
    if !(af > 1.0 && af < 2.0) {
        return Err(Error::InvalidParameter(format!("alpha {af} not in (1,2)")));
    }
    let k = st.a.len();
    if k == 0 || st.b.len() != k || st.c.len() != k {
        return Err(Error::InvalidParameter("three-type urn needs matching colour vectors".into()));
    }
    let refs: Vec<&Number> = st.a.iter().chain(&st.b).chain(&st.c).collect();
    let idx = pick_number(&refs, rng)?;
    let (ty, i) = (idx / k, idx % k);
    let one = Number::one();
    let am1 = alpha - &one;
    let mut next = st.clone();
    match ty {
        0 => {
            next.a[i] = &next.a[i] + &am1;
            next.b[i] = &next.b[i] + &(&Number::int(2) - alpha);
            next.c[i] = &next.c[i] + &am1;
        }
        1 => {
            next.b[i] = &next.b[i] + &one;
            next.c[i] = &next.c[i] + &am1;
        }
        _ => next.c[i] = &next.c[i] + alpha,
    }
    next.steps += 1;
    Ok(next)
}

/// Snapshot of a fast three-type run, with the limit rescalings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeTypeSnapshot {
    pub steps: u64,
    pub alpha: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ThreeTypeSnapshot {
    /// X^a_i / ((α − 1) n^{1 − 1/α}).
    pub fn rescaled_a(&self) -> Vec<f64> {
        let s = (self.alpha - 1.0) * (self.steps as f64).powf(1.0 - 1.0 / self.alpha);
        self.a.iter().map(|x| x / s).collect()
    }

    /// X^b_i / n^{1/α}.
    pub fn rescaled_b(&self) -> Vec<f64> {
        let s = (self.steps as f64).powf(1.0 / self.alpha);
        self.b.iter().map(|x| x / s).collect()
    }

    /// X^c_i / (α n).
    pub fn rescaled_c(&self) -> Vec<f64> {
        let s = self.alpha * self.steps as f64;
        self.c.iter().map(|x| x / s).collect()
    }
}

/// Initial weights γ_i (scaled by q for α = p/q) for an ordered tree with
/// `edges` edges and internal degrees `degrees`: α − 1 per edge and
/// d − 1 − α per vertex.
pub fn shape_gammas(alpha: Alpha, edges: usize, degrees: &[usize]) -> Result<Vec<u64>> {
    let (p, q) = alpha.ratio().ok_or_else(|| Error::Unsupported("three-type urn needs a rational alpha".into()))?;
    if p >= 2 * q {
        return Err(Error::InvalidParameter("alpha must be below 2".into()));
    }
    let mut g = vec![(p - q) as u64; edges];
    for &d in degrees {
        if d < 3 {
            return Err(Error::InvalidParameter("internal degrees must be at least 3".into()));
        }
        g.push(((d as i64 - 1) * q - p) as u64);
    }
    Ok(g)
}

/// Adds `m` c-picks to the c weights; the colour of each follows a Pólya urn
/// on the c weights with increment p.
fn allocate_c(c: &mut [u64], m: u64, p: u64, rng: &mut RandomStream) -> Result<()> {
    if m == 0 {
        return Ok(());
    }
    let mut total: u64 = c.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("c-picks with no c weight".into()));
    }
    if m <= 32 {
        for _ in 0..m {
            let mut r = rng.below(total);
            let mut i = 0;
            while r >= c[i] {
                r -= c[i];
                i += 1;
            }
            c[i] += p;
            total += p;
        }
        return Ok(());
    }
    // Dirichlet-multinomial counts through successive beta-binomials.
    let mut left = m;
    let mut rest = total;
    let k = c.len();
    for i in 0..k {
        if left == 0 {
            break;
        }
        let ci = c[i];
        rest -= ci;
        let take = if ci == 0 {
            0
        } else if rest == 0 {
            left
        } else {
            let x = sample_beta(ci as f64 / p as f64, rest as f64 / p as f64, rng)?;
            Binomial::new(left, x).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng)
        };
        c[i] += take * p;
        left -= take;
    }
    Ok(())
}

/// Fast exact run of the three-type urn for α = p/q and initial a-weights
/// γ_i = gammas[i]/q, recording snapshots at the checkpoints.
pub fn three_type_run(alpha: Alpha, gammas: &[u64], checkpoints: &[u64], rng: &mut RandomStream) -> Result<Vec<ThreeTypeSnapshot>> {
    let (p, q) = alpha.ratio().ok_or_else(|| Error::Unsupported("three-type urn needs a rational alpha".into()))?;
    if p >= 2 * q {
        return Err(Error::InvalidParameter("alpha must be below 2".into()));
    }
    if gammas.is_empty() || gammas.iter().all(|&g| g == 0) {
        return Err(Error::InvalidParameter("three-type urn needs positive initial weight".into()));
    }
    check_checkpoints(checkpoints)?;
    let (p, q) = (p as u64, q as u64);
    let k = gammas.len();
    let mut a = gammas.to_vec();
    let mut b = vec![0u64; k];
    let mut c = vec![0u64; k];
    let mut ab: u64 = a.iter().sum();
    let t0: u64 = ab;
    let mut n = 0u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        loop {
            // total weight before step i + 1 is t0 + p·i; a/b picks have
            // probability ab/(t0 + p·i)
            let ev = next_event(ab as f64 / p as f64, t0 as f64 / p as f64, n, cp, rng);
            let stop = ev.unwrap_or(cp);
            allocate_c(&mut c, stop - n, p, rng)?;
            n = stop;
            let Some(_) = ev else { break };
            let mut r = rng.below(ab);
            let mut picked = None;
            for i in 0..k {
                if r < a[i] {
                    picked = Some((0, i));
                    break;
                }
                r -= a[i];
                if r < b[i] {
                    picked = Some((1, i));
                    break;
                }
                r -= b[i];
            }
            let (ty, i) = picked.expect("a/b weight accounts for the draw");
            if ty == 0 {
                a[i] += p - q;
                b[i] += 2 * q - p;
            } else {
                b[i] += q;
            }
            c[i] += p - q;
            ab += q;
            n += 1;
        }
        let qf = q as f64;
        out.push(ThreeTypeSnapshot {
            steps: cp,
            alpha: alpha.value(),
            a: a.iter().map(|&x| x as f64 / qf).collect(),
            b: b.iter().map(|&x| x as f64 / qf).collect(),
            c: c.iter().map(|&x| x as f64 / qf).collect(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ml_moment, sample_dirichlet, sample_ml, MLParams, MlMethod};
    use crate::stats::{ks_one_sample, ks_two_sample, mean};
    use proptest::prelude::*;

    fn rng(k: u64) -> RandomStream {
        RandomStream::new(77, k)
    }

    #[test]
    fn polya_first_step() {
        let u = UrnState::new(vec![Number::int(1), Number::int(1)]);
        let mut r = rng(0);
        let mut first = 0;
        for _ in 0..100_000 {
            let v = polya_step(&u, &Number::int(1), &mut r).unwrap();
            assert_eq!(v.total(), Number::int(3));
            assert_eq!(v.steps, 1);
            if v.weights[0] == Number::int(2) {
                first += 1;
            } else {
                assert_eq!(v.weights, vec![Number::int(1), Number::int(2)]);
            }
        }
        assert!((first as f64 / 100_000.0 - 0.5).abs() < 0.005);
    }

    #[test]
    fn polya_rejects_bad_input() {
        let mut r = rng(1);
        assert!(polya_step(&UrnState::new(vec![Number::int(0)]), &Number::one(), &mut r).is_err());
        assert!(polya_shares(&[1, 1], 0, &[10], &mut r).is_err());
        assert!(polya_shares(&[1, 1], 1, &[10, 5], &mut r).is_err());
    }

    #[test]
    fn polya_uniform_limit() {
        let mut r = rng(2);
        let xs: Vec<f64> = (0..10_000).map(|_| polya_shares(&[1, 1], 1, &[100_000], &mut r).unwrap()[0][0]).collect();
        let ks = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(!ks.rejects(0.001), "{ks:?}");
    }

    #[test]
    fn polya_three_colour_means() {
        let mut r = rng(3);
        let reps = 4000;
        let mut m = [0.0; 3];
        for _ in 0..reps {
            let s = polya_shares(&[1, 2, 3], 2, &[10_000], &mut r).unwrap();
            for i in 0..3 {
                m[i] += s[0][i] / reps as f64;
            }
        }
        for (i, e) in [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0].iter().enumerate() {
            assert!((m[i] - e).abs() < 0.01, "{m:?}");
        }
    }

    #[test]
    fn polya_share_is_martingale() {
        let mut r = rng(4);
        let reps = 20_000;
        let mut m = [0.0; 3];
        for _ in 0..reps {
            let s = polya_shares(&[1, 3], 1, &[1, 10, 1000], &mut r).unwrap();
            for j in 0..3 {
                m[j] += s[j][0] / reps as f64;
            }
        }
        for x in m {
            assert!((x - 0.25).abs() < 0.006, "{m:?}");
        }
    }

    #[test]
    fn polya_exact_and_fast_agree() {
        let mut r = rng(5);
        let reps = 20_000;
        let mut lit = Vec::with_capacity(reps);
        let mut fast = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut u = UrnState::new(vec![Number::int(2), Number::int(1)]);
            for _ in 0..20 {
                u = polya_step(&u, &Number::int(3), &mut r).unwrap();
            }
            lit.push((&u.weights[0] / &u.total()).to_f64());
            fast.push(polya_shares(&[2, 1], 3, &[20], &mut r).unwrap()[0][0]);
        }
        assert!(!ks_two_sample(&lit, &fast).unwrap().rejects(0.001));
    }

    #[test]
    fn crp_first_step_probability() {
        let (beta, theta) = (0.3, 0.5);
        let mut r = rng(6);
        let n = 200_000;
        let new = (0..n).filter(|_| crp_step(&CrpState::start(), beta, theta, &mut r).unwrap().tables.len() == 2).count();
        assert!((new as f64 / n as f64 - (theta + beta) / (1.0 + theta)).abs() < 0.004);
        assert!(crp_step(&CrpState::start(), 1.2, 0.0, &mut r).is_err());
    }

    #[test]
    fn crp_table_count_matches_literal() {
        let (beta, theta) = (0.4, 1.2);
        let mut r = rng(7);
        let reps = 20_000;
        let lit: Vec<f64> = (0..reps).map(|_| crp_run(beta, theta, 300, &mut r).unwrap().tables.len() as f64).collect();
        let fast: Vec<f64> = (0..reps).map(|_| crp_table_count(beta, theta, 300, &mut r).unwrap() as f64).collect();
        assert!(!ks_two_sample(&lit, &fast).unwrap().rejects(0.001));
        let exact = crate::distributions::crp_finite_mean(MLParams::new(beta, theta).unwrap(), 300) * 300f64.powf(beta);
        assert!((mean(&fast) / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn crp_mean_at_one_million() {
        let p = MLParams::new(1.0 / 3.0, 1.0 / 3.0).unwrap();
        let mut r = rng(8);
        let reps = 20_000;
        let xs: Vec<f64> = (0..reps).map(|_| crp_table_count(p.beta, p.theta, 1_000_000, &mut r).unwrap() as f64 / 100.0).collect();
        assert!((mean(&xs) / ml_moment(p, 1.0).unwrap() - 1.0).abs() < 0.02);
    }

    #[test]
    fn crp_largest_share_matches_stick_breaking() {
        let (beta, theta) = (0.5, 1.0);
        let mut r = rng(9);
        let reps = 3000;
        let crp: Vec<f64> = (0..reps).map(|_| crp_run(beta, theta, 5000, &mut r).unwrap().sorted_shares()[0]).collect();
        let pd: Vec<f64> =
            (0..reps).map(|_| crate::distributions::sample_pd(beta, theta, 2000, &mut r).unwrap().weights[0]).collect();
        assert!(!ks_two_sample(&crp, &pd).unwrap().rejects(0.001));
    }

    #[test]
    fn triangular_bookkeeping() {
        let mut u = UrnState::new(vec![Number::int(1), Number::int(1)]);
        let mut r = rng(10);
        for n in 1..=500u64 {
            u = triangular_step(&u, &Number::int(1), &Number::int(2), &mut r).unwrap();
            assert_eq!(u.total(), Number::int(2 + 2 * n as i64));
        }
        assert!(triangular_step(&u, &Number::int(2), &Number::int(2), &mut r).is_err());
    }

    #[test]
    fn triangular_fast_matches_literal_and_exact_mean() {
        let mut r = rng(11);
        let reps = 20_000;
        let mut lit = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut u = UrnState::new(vec![Number::int(1), Number::int(1)]);
            for _ in 0..40 {
                u = triangular_step(&u, &Number::int(1), &Number::int(2), &mut r).unwrap();
            }
            lit.push(u.weights[0].to_f64());
        }
        let fast: Vec<f64> = (0..reps).map(|_| triangular_red(1.0, 1.0, 1.0, 2.0, &[40], &mut r).unwrap()[0]).collect();
        assert!(!ks_two_sample(&lit, &fast).unwrap().rejects(0.001));
        let exact = triangular_mean(1.0, 1.0, 1.0, 2.0, 40);
        assert!((mean(&fast) / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn triangular_b_zero_is_crp() {
        // red weight = a + tables of a CRP(1/β, a/β) when γ = 1, b = 0
        let mut r = rng(12);
        let reps = 20_000;
        let tri: Vec<f64> = (0..reps).map(|_| triangular_red(1.0, 0.0, 1.0, 2.0, &[999], &mut r).unwrap()[0]).collect();
        let crp: Vec<f64> = (0..reps).map(|_| 1.0 + crp_table_count(0.5, 0.5, 999, &mut r).unwrap() as f64).collect();
        assert!(!ks_two_sample(&tri, &crp).unwrap().rejects(0.001));
    }

    #[test]
    fn three_type_total_grows_by_alpha() {
        let alpha = Number::ratio(5, 4);
        let mut st = ThreeTypeState::new(vec![Number::ratio(1, 4), Number::ratio(1, 4), Number::ratio(3, 4)]);
        let start = st.total();
        let mut r = rng(13);
        for n in 1..=300i64 {
            st = three_type_step(&st, &alpha, &mut r).unwrap();
            assert_eq!(st.total(), &start + &(&alpha * &Number::int(n)));
        }
    }

    #[test]
    fn three_type_fast_matches_literal() {
        let alpha = Alpha::rational(3, 2).unwrap();
        let g = shape_gammas(alpha, 3, &[3]).unwrap();
        assert_eq!(g, vec![1, 1, 1, 1]);
        let mut r = rng(14);
        let reps = 6000;
        let steps = 60;
        let mut lit = (Vec::new(), Vec::new(), Vec::new());
        let mut fast = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..reps {
            let mut st = ThreeTypeState::new(vec![Number::ratio(1, 2); 4]);
            for _ in 0..steps {
                st = three_type_step(&st, &alpha.number(), &mut r).unwrap();
            }
            lit.0.push(st.a[0].to_f64());
            lit.1.push(st.b[0].to_f64());
            lit.2.push(st.c[0].to_f64());
            let s = &three_type_run(alpha, &g, &[steps], &mut r).unwrap()[0];
            fast.0.push(s.a[0]);
            fast.1.push(s.b[0]);
            fast.2.push(s.c[0]);
        }
        for (x, y) in [(&lit.0, &fast.0), (&lit.1, &fast.1), (&lit.2, &fast.2)] {
            assert!(!ks_two_sample(x, y).unwrap().rejects(0.001));
        }
    }

    #[test]
    fn three_type_limits_match_marginal_laws() {
        let alpha = Alpha::rational(3, 2).unwrap();
        let a = alpha.value();
        let g = shape_gammas(alpha, 3, &[3]).unwrap();
        assert_eq!(g, vec![1, 1, 1, 1]);
        let mut r = rng(15);
        let reps = 2000;
        let (mut la, mut lb, mut lc) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..reps {
            let s = &three_type_run(alpha, &g, &[100_000], &mut r).unwrap()[0];
            la.push(s.rescaled_a()[0]);
            lb.push(s.rescaled_b()[0]);
            lc.push(s.rescaled_c()[3]);
        }
        // oracle: D^{1−1/α}R^{α−1}R̄ and D^{1/α}R from independent draws
        let params = [1.0 / 3.0; 4];
        let (mut oa, mut ob) = (Vec::new(), Vec::new());
        for _ in 0..200_000 {
            let d = sample_dirichlet(&params, &mut r).unwrap()[0];
            let rr = sample_ml(MLParams::new(1.0 / a, 1.0 / 3.0).unwrap(), &mut r, MlMethod::Tilted).unwrap();
            let rb = sample_ml(MLParams::new(a - 1.0, 0.5).unwrap(), &mut r, MlMethod::Tilted).unwrap();
            oa.push(d.powf(1.0 - 1.0 / a) * rr.powf(a - 1.0) * rb);
            ob.push(d.powf(1.0 / a) * rr);
        }
        assert!((mean(&la) / mean(&oa) - 1.0).abs() < 0.05, "{} {}", mean(&la), mean(&oa));
        // X^b approaches its limit at rate n^{-(1-1/α)}, about 2.5% low here
        assert!((mean(&lb) / mean(&ob) - 1.0).abs() < 0.07, "{} {}", mean(&lb), mean(&ob));
        assert!((mean(&lc) / 0.25 - 1.0).abs() < 0.08, "{}", mean(&lc));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn three_type_run_conserves_weight(seed in 0u64..1000, k in 1usize..5, steps in 1u64..5000) {
            let alpha = Alpha::rational(7, 4).unwrap();
            let g: Vec<u64> = (0..k).map(|i| 3 + i as u64).collect();
            let mut r = RandomStream::new(seed, 0);
            let s = &three_type_run(alpha, &g, &[steps], &mut r).unwrap()[0];
            let total: f64 = s.a.iter().chain(&s.b).chain(&s.c).sum();
            let expected = g.iter().sum::<u64>() as f64 / 4.0 + 1.75 * steps as f64;
            prop_assert!((total - expected).abs() < 1e-9 * expected.max(1.0));
        }

        #[test]
        fn triangular_red_within_bounds(seed in 0u64..1000, steps in 1u64..10_000) {
            let mut r = RandomStream::new(seed, 1);
            let red = triangular_red(1.0, 0.5, 1.0, 3.0, &[steps], &mut r).unwrap()[0];
            prop_assert!(red >= 1.0 && red <= 1.0 + steps as f64);
            prop_assert_eq!(red.fract(), 0.0);
        }
    }
}

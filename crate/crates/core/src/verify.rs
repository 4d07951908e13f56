//! Verification suites: exact-versus-empirical checks with fixed seeds and
//! explicit tolerances, run on a deterministic worker pool.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

use crate::config_model::{conditioned_frequencies, DegreeLaw};
use crate::continuum::{length_law, GlueBuilder, LineBreaker};
use crate::depth_first::{check_fibers, check_plans, check_roundtrip, CheckOutcome};
use crate::distributions::{beta_moment, ml_moment, ml_moment_unshifted, pd_mixed_moment, GemSticks, MLParams};
use crate::error::{Error, Result};
use crate::marchal::{grow, MarchalState};
use crate::multigraph::{CanonicalCode, Multigraph};
use crate::number::{Alpha, Number};
use crate::rng::RandomStream;
use crate::stats::{ks_one_sample, ks_two_sample, mean, tv_between, tv_distance, FreqTable};
use crate::urns::{polya_shares, three_type_run, triangular_red};
use crate::weights_enum::{brownian_distribution, exact_distribution, WeightSeq};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "STABLEGRAPH_THREADS";

/// Named groups of checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Figure2,
    Marchal,
    ConfigModel,
    Urns,
    Moments,
    Bijection,
    CrossConstruction,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Figure2,
        Suite::Marchal,
        Suite::ConfigModel,
        Suite::Urns,
        Suite::Moments,
        Suite::Bijection,
        Suite::CrossConstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Figure2 => "figure2",
            Suite::Marchal => "marchal",
            Suite::ConfigModel => "configmodel",
            Suite::Urns => "urns",
            Suite::Moments => "moments",
            Suite::Bijection => "bijection",
            Suite::CrossConstruction => "crossconstruction",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// One verified statement with its observed value and the bound it is held to.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub pass: bool,
    pub observed: Option<f64>,
    pub bound: Option<f64>,
    pub detail: String,
    /// Set when the statement is known not to hold as written.
    pub known_issue: Option<String>,
}

impl Check {
    fn new(criterion: u32, name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { criterion, name: name.into(), pass, observed: None, bound: None, detail: detail.into(), known_issue: None }
    }

    /// Passes when `observed < bound`.
    fn below(criterion: u32, name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            criterion,
            name: name.into(),
            pass: observed < bound,
            observed: Some(observed),
            bound: Some(bound),
            detail: format!("{observed:.4e} < {bound:e}"),
            known_issue: None,
        }
    }

    /// Passes when |observed/oracle − 1| ≤ tol.
    fn relative(criterion: u32, name: impl Into<String>, observed: f64, oracle: f64, tol: f64) -> Self {
        let err = (observed / oracle - 1.0).abs();
        Self {
            criterion,
            name: name.into(),
            pass: err <= tol,
            observed: Some(err),
            bound: Some(tol),
            detail: format!("observed {observed:.6}, oracle {oracle:.6}, relative error {err:.5}"),
            known_issue: None,
        }
    }

    fn info(criterion: u32, name: impl Into<String>, observed: f64, detail: impl Into<String>) -> Self {
        Self { observed: Some(observed), ..Self::new(criterion, name, true, detail) }
    }

    fn known(mut self, reason: &str) -> Self {
        self.known_issue = Some(reason.into());
        self
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{tag} [{}] {}: {}", self.criterion, self.name, self.detail);
        if let (false, Some(k)) = (self.pass, &self.known_issue) {
            s.push_str(&format!(" (known: {k})"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub threads: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Seed and worker count for a verification run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub threads: usize,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        Self { seed, threads: thread_count() }
    }
}

/// Worker count: `STABLEGRAPH_THREADS` if set, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `jobs` tasks on up to `threads` workers. Task `j` draws from stream
/// `(seed, stream_base + j)` and results come back in job order, so output
/// does not depend on the worker count.
pub fn run_jobs<T, F>(seed: u64, stream_base: u64, jobs: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut RandomStream) -> Result<T> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..jobs).map(|_| None).collect());
    let work = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        if j >= jobs {
            break;
        }
        let mut rng = RandomStream::new(seed, stream_base + j as u64);
        let out = f(j, &mut rng);
        slots.lock().expect("result slots poisoned")[j] = Some(out);
    };
    let workers = threads.clamp(1, jobs.max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|sc| {
            for _ in 0..workers {
                sc.spawn(work);
            }
        });
    }
    slots.into_inner().expect("result slots poisoned").into_iter().map(|r| r.expect("every job ran")).collect()
}

pub fn run_suite(suite: Suite, cfg: VerifyConfig) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Figure2 => figure2()?,
        Suite::Marchal => [marchal_one_step(cfg)?, weight_identity(cfg)?].concat(),
        Suite::ConfigModel => [configuration_model(cfg)?, degree_law()?].concat(),
        Suite::Urns => urn_limits(cfg)?,
        Suite::Moments => [moment_oracles(cfg)?, length_law_check(cfg)?].concat(),
        Suite::Bijection => bijection()?,
        Suite::CrossConstruction => cross_construction(cfg)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { suite, seed: cfg.seed, threads: cfg.threads, checks, pass })
}

fn a54() -> Alpha {
    Alpha::rational(5, 4).expect("valid alpha")
}

/// Figure 2 columns: (sl, weight product, mult product, |Sym|, probability, Brownian probability).
const FIGURE2: [(usize, (i64, i64), u64, u64, (i64, i64), (i64, i64)); 7] = [
    (2, (21, 64), 2, 1, (1, 2), (0, 1)),
    (1, (3, 64), 2, 1, (1, 7), (0, 1)),
    (0, (3, 64), 6, 1, (2, 21), (0, 1)),
    (0, (1, 64), 2, 2, (1, 21), (2, 5)),
    (2, (3, 64), 1, 1, (1, 7), (0, 1)),
    (1, (1, 64), 2, 1, (1, 21), (2, 5)),
    (2, (1, 64), 1, 2, (1, 42), (1, 5)),
];

/// Criterion 1: the s = 2 kernel table at α = 5/4 as exact rationals.
pub fn figure2() -> Result<Vec<Check>> {
    let start = Instant::now();
    let law = exact_distribution(2, 0, &WeightSeq::new(a54()))?;
    let brownian = brownian_distribution(2, 0)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut checks = vec![Check::new(1, "seven kernels", law.len() == 7, format!("{} kernels", law.len()))];
    let mut mismatches = Vec::new();
    for (col, &(sl, (wp, wq), mult, sym, (pp, pq), (bp, bq))) in FIGURE2.iter().enumerate() {
        let rows: Vec<_> = law
            .entries
            .iter()
            .filter(|e| e.sl == sl && e.weight_product == Number::ratio(wp, wq) && e.mult_product == mult && e.sym == sym)
            .collect();
        match rows.as_slice() {
            [e] => {
                if e.prob != Number::ratio(pp, pq) {
                    mismatches.push(format!("column {}: probability {} != {pp}/{pq}", col + 1, e.prob));
                }
                let b = brownian.get(&e.code).map(|x| x.prob.clone()).unwrap_or_else(Number::zero);
                if b != Number::ratio(bp, bq) {
                    mismatches.push(format!("column {}: Brownian probability {b} != {bp}/{bq}", col + 1));
                }
            }
            _ => mismatches.push(format!("column {}: {} matching kernels", col + 1, rows.len())),
        }
    }
    let detail = if mismatches.is_empty() { "all rows match exactly".to_string() } else { mismatches.join("; ") };
    checks.push(Check::new(1, "table rows and probabilities", mismatches.is_empty(), detail));
    checks.push(Check::new(1, "exact total mass", law.total() == Number::one(), format!("total {}", law.total())));
    checks.push(Check::below(1, "runtime seconds", elapsed, 5.0));
    Ok(checks)
}

/// Criterion 2: one Marchal step from every kernel of 𝕄_{2,0}, 10⁶ draws
/// each, mixed by the kernel law and compared with the law on 𝕄_{2,1}.
pub fn marchal_one_step(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let alpha = a54();
    let ws = WeightSeq::new(alpha);
    let kernels = exact_distribution(2, 0, &ws)?;
    let target = exact_distribution(2, 1, &ws)?;
    let draws = 1_000_000u64;
    let per_kernel = run_jobs(cfg.seed, 2_000, kernels.len(), cfg.threads, |j, rng| {
        let st = MarchalState::new(kernels.entries[j].graph.clone(), alpha)?;
        let mut counts = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(st.sample_choice(rng)?).or_insert(0u64) += 1;
        }
        let mut out: BTreeMap<CanonicalCode, u64> = BTreeMap::new();
        for (choice, k) in counts {
            *out.entry(st.apply(choice)?.graph.canonical_code()?).or_insert(0) += k;
        }
        Ok(out)
    })?;
    let mut emp: BTreeMap<CanonicalCode, f64> = BTreeMap::new();
    for (e, counts) in kernels.entries.iter().zip(&per_kernel) {
        for (code, &k) in counts {
            *emp.entry(code.clone()).or_insert(0.0) += e.prob.to_f64() * k as f64 / draws as f64;
        }
    }
    let exact: BTreeMap<CanonicalCode, f64> = target.entries.iter().map(|e| (e.code.clone(), e.prob.to_f64())).collect();
    let tv = tv_between(&emp, &exact);
    Ok(vec![Check::below(2, "TV one-step push-forward vs M_{2,1} law", tv, 0.01), Check::below(2, "runtime seconds", start.elapsed().as_secs_f64(), 120.0)])
}

/// Criterion 5: total Marchal weight equals α(s + n) + s − 1 exactly at every
/// step of 10⁴ trajectories.
pub fn weight_identity(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let alpha = a54();
    let trajectories = 10_000usize;
    let steps = 20;
    let mut checks = Vec::new();
    for s in [0usize, 2] {
        let start_law = exact_distribution(s, if s == 0 { 1 } else { 0 }, &WeightSeq::new(alpha))?;
        let jobs = 16;
        let bad = run_jobs(cfg.seed, 5_000 + 100 * s as u64, jobs, cfg.threads, |j, rng| {
            let mut bad = 0u64;
            for _ in (j..trajectories).step_by(jobs) {
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut g = &start_law.entries[0].graph;
                for e in &start_law.entries {
                    acc += e.prob.to_f64();
                    g = &e.graph;
                    if u < acc {
                        break;
                    }
                }
                let st = MarchalState::new(g.clone(), alpha)?;
                for state in grow(&st, steps, rng)? {
                    if state.total_weight().exact().is_none() || state.total_weight() != state.expected_total_weight() {
                        bad += 1;
                    }
                }
            }
            Ok(bad)
        })?;
        let bad: u64 = bad.iter().sum();
        checks.push(Check::new(
            5,
            format!("weight identity s={s}"),
            bad == 0,
            format!("{} states checked, {bad} mismatches", trajectories * (steps + 1)),
        ));
    }
    Ok(checks)
}

/// Criterion 3: the conditioned configuration model on m = 2 and m = 3
/// vertices against the kernel law conditioned on its vertex count.
pub fn configuration_model(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let alpha = a54();
    let law = DegreeLaw::new(alpha)?;
    let exact = exact_distribution(2, 0, &WeightSeq::new(alpha))?;
    let mut checks = Vec::new();
    for (m, attempts) in [(2usize, 40_000_000u64), (3, 160_000_000)] {
        let jobs = 16;
        let runs = run_jobs(cfg.seed, 3_000 + 100 * m as u64, jobs, cfg.threads, |_, rng| {
            conditioned_frequencies(2, 0, m, &law, attempts / jobs as u64, rng)
        })?;
        let mut table = FreqTable::new();
        for r in &runs {
            table.merge(&r.table);
        }
        let target = exact.condition(|e| e.graph.vertex_count() == m)?;
        let tv = tv_distance(&table, &target);
        checks.push(Check::below(3, format!("TV conditioned configuration model m={m}"), tv, 0.02));
        checks.push(Check::new(
            3,
            format!("acceptances m={m}"),
            table.total >= 100_000,
            format!("{} accepted of {attempts}", table.total),
        ));
    }
    Ok(checks)
}

/// Criterion 6: normalization, mean and size-biased generating function of D^(α).
pub fn degree_law() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for alpha in [a54(), Alpha::rational(3, 2)?] {
        let a = alpha.value();
        let law = DegreeLaw::new(alpha)?;
        checks.push(Check::below(6, format!("pmf total mass residual α={alpha}"), (law.total_mass() - 1.0).abs(), 1e-12));
        let mean = law.mean();
        let mut line = Check::below(6, format!("E[D] = 2 α={alpha}"), (mean - 2.0).abs(), 1e-9);
        line.detail = format!("E[D] = {mean:.12}");
        checks.push(line.known("the stated pmf has mean 2α(1+α)/(α²+α+2), not 2"));
        let closed = 2.0 * a * (1.0 + a) / (a * a + a + 2.0);
        checks.push(Check::below(6, format!("E[D] closed form α={alpha}"), (mean - closed).abs(), 1e-9));
        checks.push(Check::below(
            6,
            format!("criticality E[D²] = 2E[D] α={alpha}"),
            (law.second_moment() - 2.0 * mean).abs(),
            1e-9,
        ));
        for z in [0.3f64, 0.5, 0.8] {
            let oracle = z + (1.0 - z).powf(a) / a;
            checks.push(Check::below(
                6,
                format!("size-biased pgf α={alpha} z={z}"),
                (law.size_biased_pgf(z) - oracle).abs(),
                1e-9,
            ));
        }
    }
    Ok(checks)
}

/// Relative moment errors at two checkpoints, reported for information.
fn shrink_line(criterion: u32, name: &str, early: f64, late: f64) -> Check {
    Check::info(criterion, name, late, format!("relative error {early:.5} at n=10^4, {late:.5} at n=10^6"))
}

/// Criterion 7: Pólya, triangular and three-type urn limits at n = 10⁶.
pub fn urn_limits(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let checkpoints = [10_000u64, 1_000_000];
    let jobs = 16;
    let mut checks = Vec::new();

    let reps = 30_000usize;
    let shares = run_jobs(cfg.seed, 7_000, jobs, cfg.threads, |j, rng| {
        (j..reps).step_by(jobs).map(|_| polya_shares(&[1, 1], 1, &checkpoints, rng).map(|v| [v[0][0], v[1][0]])).collect::<Result<Vec<_>>>()
    })?;
    let shares: Vec<[f64; 2]> = shares.into_iter().flatten().collect();
    let ks_early = ks_one_sample(&shares.iter().map(|x| x[0]).collect::<Vec<_>>(), |x| x.clamp(0.0, 1.0))?;
    let ks_late = ks_one_sample(&shares.iter().map(|x| x[1]).collect::<Vec<_>>(), |x| x.clamp(0.0, 1.0))?;
    checks.push(Check::below(7, "Pólya share KS vs Beta(1,1) at n=10^6", ks_late.statistic, 0.01));
    checks.push(Check::info(
        7,
        "Pólya KS by checkpoint",
        ks_late.statistic,
        format!("{:.5} at n=10^4, {:.5} at n=10^6", ks_early.statistic, ks_late.statistic),
    ));

    let reps = 40_000usize;
    for (k, &(a, b, gamma, beta)) in [(1.0, 0.0, 1.0, 2.0), (1.0, 1.0, 1.0, 2.0)].iter().enumerate() {
        let reds = run_jobs(cfg.seed, 7_100 + 20 * k as u64, jobs, cfg.threads, |j, rng| {
            (j..reps).step_by(jobs).map(|_| triangular_red(a, b, gamma, beta, &checkpoints, rng)).collect::<Result<Vec<_>>>()
        })?;
        let reds: Vec<Vec<f64>> = reds.into_iter().flatten().collect();
        let ml = MLParams::new(gamma / beta, (a + b) / beta)?;
        for p in [1.0, 2.0] {
            let beta_part = if b == 0.0 { 1.0 } else { beta_moment(a / gamma, b / gamma, p, 0.0)? };
            let oracle = gamma.powf(p) * beta_part * ml_moment(ml, p)?;
            let at = |i: usize| mean(&reds.iter().map(|r| (r[i] / (checkpoints[i] as f64).powf(gamma / beta)).powf(p)).collect::<Vec<_>>());
            let name = format!("triangular (a,b,γ,β)=({a},{b},{gamma},{beta}) moment {p}");
            checks.push(Check::relative(7, format!("{name} at n=10^6"), at(1), oracle, 0.02));
            checks.push(shrink_line(7, &format!("{name} by checkpoint"), (at(0) / oracle - 1.0).abs(), (at(1) / oracle - 1.0).abs()));
        }
    }

    let alpha = Alpha::rational(7, 4)?;
    let gammas = [3u64, 3];
    let reps = 16_000usize;
    let runs = run_jobs(cfg.seed, 7_200, jobs, cfg.threads, |j, rng| {
        (j..reps)
            .step_by(jobs)
            .map(|_| {
                let snaps = three_type_run(alpha, &gammas, &checkpoints, rng)?;
                Ok(snaps
                    .iter()
                    .map(|s| {
                        let tot: f64 = s.a.iter().chain(&s.b).chain(&s.c).sum();
                        (s.a[0] + s.b[0] + s.c[0]) / tot
                    })
                    .collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let runs: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    let q = 4.0;
    let dir: Vec<f64> = gammas.iter().map(|&g| g as f64 / q / alpha.value()).collect();
    let oracle = dir[0] / dir.iter().sum::<f64>();
    let at = |i: usize| mean(&runs.iter().map(|r| r[i]).collect::<Vec<_>>());
    checks.push(Check::relative(7, "three-type colour share mean α=7/4 at n=10^6", at(1), oracle, 0.02));
    checks.push(shrink_line(7, "three-type colour share by checkpoint", (at(0) / oracle - 1.0).abs(), (at(1) / oracle - 1.0).abs()));
    let d = BetaDist::new(dir[0], dir[1]).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let ks = ks_one_sample(&runs.iter().map(|r| r[1]).collect::<Vec<_>>(), |x| d.cdf(x))?;
    checks.push(Check::below(7, "three-type colour share KS vs Beta(γ/α) at n=10^6", ks.statistic, ks.critical(0.001)));
    Ok(checks)
}

/// Criterion 8: the two Mittag-Leffler moment forms and a Poisson-Dirichlet
/// mixed moment by stick-breaking.
pub fn moment_oracles(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for beta in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for theta in [0.2, 0.5, 1.0, 2.5] {
            let p = MLParams::new(beta, theta)?;
            for power in [1.0, 2.0, 3.0] {
                let (x, y) = (ml_moment(p, power)?, ml_moment_unshifted(p, power)?);
                worst = worst.max((x / y - 1.0).abs());
            }
        }
    }
    let mut checks = vec![Check::below(8, "ML moment forms agree on a 20-point grid", worst, 1e-12)];
    let (beta, theta) = (0.25, 0.25);
    let oracle = pd_mixed_moment(beta, theta, &[2])?;
    checks.push(Check::below(8, "PD E[ΣP²] closed form equals 3/5", (oracle - 0.6).abs(), 1e-12));
    let reps = 100_000usize;
    let jobs = 16;
    let sums = run_jobs(cfg.seed, 8_000, jobs, cfg.threads, |j, rng| {
        (j..reps)
            .step_by(jobs)
            .map(|_| {
                let mut gem = GemSticks::new(beta, theta)?;
                let mut s = 0.0;
                while gem.remaining() > 1e-9 {
                    s += gem.next_stick(rng)?.powi(2);
                }
                Ok(s)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let sums: Vec<f64> = sums.into_iter().flatten().collect();
    checks.push(Check::relative(8, "PD E[ΣP²] by stick-breaking", mean(&sums), 0.6, 0.02));
    Ok(checks)
}

/// E[Beta(|E|, c − |E|)]·E[ML] averaged over the exact shape law of 𝕄_{s,n}.
pub fn beta_ml_mean(s: usize, n: usize, alpha: Alpha) -> Result<f64> {
    let a = alpha.value();
    let exact = exact_distribution(s, n as isize, &WeightSeq::new(alpha))?;
    let c = ((n + s) as f64 * a + s as f64 - 1.0) / (a - 1.0);
    let edges: f64 = exact.entries.iter().map(|e| e.prob.to_f64() * e.graph.edge_count() as f64).sum();
    let (_, _, ml) = length_law(s, n, 1, a)?;
    Ok(edges / c * ml_moment(ml, 1.0)?)
}

/// Criterion 9: total line-breaking length (times α) against E[Beta]·E[ML].
pub fn length_law_check(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (k, (s, n, alpha)) in [(1usize, 3usize, Alpha::rational(3, 2)?), (2, 0, a54())].into_iter().enumerate() {
        let lb = LineBreaker::new(s, alpha)?;
        let reps = 100_000usize;
        let jobs = 16;
        let totals = run_jobs(cfg.seed, 9_000 + 100 * k as u64, jobs, cfg.threads, |j, rng| {
            (j..reps).step_by(jobs).map(|_| Ok(lb.sample(n, rng)?.total_length())).collect::<Result<Vec<f64>>>()
        })?;
        let total = mean(&totals.into_iter().flatten().collect::<Vec<_>>());
        let oracle = beta_ml_mean(s, n, alpha)?;
        let a = alpha.value();
        checks.push(
            Check::relative(9, format!("α·ΣL vs E[Beta]E[ML] (s,n,α)=({s},{n},{alpha})"), a * total, oracle, 0.02)
                .known("the construction gives ΣL ~ Beta·ML, so α·ΣL is off by the factor α"),
        );
        checks.push(Check::relative(9, format!("ΣL vs E[Beta]E[ML] (s,n,α)=({s},{n},{alpha})"), total, oracle, 0.02));
    }
    Ok(checks)
}

fn outcome_check(criterion: u32, o: &CheckOutcome) -> Check {
    let detail = match &o.counterexample {
        None => format!("{} objects checked", o.checked),
        Some(c) => format!("counterexample {c}"),
    };
    Check::new(criterion, format!("{} (s,n)=({},{})", o.check, o.surplus, o.leaves), o.passed(), detail)
}

/// Criterion 4: the depth-first bijection on the exhaustive ordered spaces.
pub fn bijection() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (s, n) in [(1, 0), (1, 1), (2, 0)] {
        checks.push(outcome_check(4, &check_roundtrip(s, n)?));
    }
    checks.push(outcome_check(4, &check_fibers(2, 0)?));
    checks.push(outcome_check(4, &check_plans(2, 0)?));
    let eight = Multigraph::planted(0, 1, [(crate::Vertex::Leaf(0), crate::Vertex::Internal(0), 1), (crate::Vertex::Internal(0), crate::Vertex::Internal(0), 2)])?;
    let fiber = crate::depth_first::ordered_space(2, 0)?
        .into_iter()
        .find(|(g, _)| g.canonical_code().ok() == eight.canonical_code().ok())
        .map_or(0, |(_, f)| f.len());
    checks.push(Check::new(4, "figure-eight fiber", fiber == 3, format!("{fiber} orderings")));
    Ok(checks)
}

/// Criterion 10: root-to-leaf-1 distance under gluing and line-breaking.
pub fn cross_construction(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let alpha = Alpha::rational(3, 2)?;
    let reps = 10_000usize;
    let jobs = 16;
    let gb = GlueBuilder::new(1, alpha, 2, 16)?;
    let lb = LineBreaker::new(1, alpha)?;
    let glued = run_jobs(cfg.seed, 10_000, jobs, cfg.threads, |j, rng| {
        (j..reps).step_by(jobs).map(|_| gb.sample(rng)?.space.label_distance(0, 1)).collect::<Result<Vec<f64>>>()
    })?;
    let lined = run_jobs(cfg.seed, 10_100, jobs, cfg.threads, |j, rng| {
        (j..reps).step_by(jobs).map(|_| lb.sample(1, rng)?.label_distance(0, 1)).collect::<Result<Vec<f64>>>()
    })?;
    let glued: Vec<f64> = glued.into_iter().flatten().collect();
    let lined: Vec<f64> = lined.into_iter().flatten().collect();
    let ks = ks_two_sample(&glued, &lined)?;
    let mut c = Check::below(10, "KS root-to-leaf-1 distance, glue vs linebreak", ks.statistic, ks.critical(0.001));
    c.detail = format!("KS {:.5}, 0.1% critical value {:.5}", ks.statistic, ks.critical(0.001));
    Ok(vec![c])
}

//! Comparators between empirical samples and exact or analytic laws.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multigraph::CanonicalCode;
use crate::weights_enum::ExactDistribution;

/// Counts of sampled graphs keyed by canonical code.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FreqTable {
    pub counts: BTreeMap<CanonicalCode, u64>,
    pub total: u64,
}

impl FreqTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, code: CanonicalCode) {
        self.add_count(code, 1);
    }

    pub fn add_count(&mut self, code: CanonicalCode, k: u64) {
        *self.counts.entry(code).or_insert(0) += k;
        self.total += k;
    }

    pub fn merge(&mut self, other: &FreqTable) {
        for (c, &k) in &other.counts {
            self.add_count(c.clone(), k);
        }
    }

    pub fn frequency(&self, code: &CanonicalCode) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(code).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

/// Half the ℓ¹ distance between the empirical frequencies and the exact law.
/// Codes outside the exact support count fully as mismatch.
pub fn tv_distance(emp: &FreqTable, exact: &ExactDistribution) -> f64 {
    if emp.total == 0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for e in &exact.entries {
        sum += (emp.frequency(&e.code) - e.prob.to_f64()).abs();
    }
    for (c, &k) in &emp.counts {
        if exact.get(c).is_none() {
            sum += k as f64 / emp.total as f64;
        }
    }
    0.5 * sum
}

/// Half the ℓ¹ distance between two probability vectors on keyed supports.
pub fn tv_between<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, &a) in p {
        sum += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &b) in q {
        if !p.contains_key(k) {
            sum += b.abs();
        }
    }
    0.5 * sum
}

/// Pearson statistic Σ (O − E)²/E with degrees of freedom (support − 1).
/// Observations outside the support make the statistic infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
}

pub fn chi_square(emp: &FreqTable, exact: &ExactDistribution) -> Result<ChiSquare> {
    if emp.total == 0 {
        return Err(Error::InvalidParameter("empty frequency table".into()));
    }
    let n = emp.total as f64;
    let mut stat = 0.0;
    for e in &exact.entries {
        let expct = n * e.prob.to_f64();
        let obs = emp.counts.get(&e.code).copied().unwrap_or(0) as f64;
        if expct > 0.0 {
            stat += (obs - expct).powi(2) / expct;
        } else if obs > 0.0 {
            stat = f64::INFINITY;
        }
    }
    if emp.counts.keys().any(|c| exact.get(c).is_none()) {
        stat = f64::INFINITY;
    }
    Ok(ChiSquare { statistic: stat, dof: exact.len().saturating_sub(1) })
}

/// Kolmogorov-Smirnov statistic with its effective sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub effective_n: f64,
}

impl KsResult {
    /// Asymptotic critical value c(level)/√n_eff with c(level) = √(−ln(level/2)/2).
    pub fn critical(&self, level: f64) -> f64 {
        (-(level / 2.0).ln() / 2.0).sqrt() / self.effective_n.sqrt()
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.statistic > self.critical(level)
    }

    /// Asymptotic p-value from the Kolmogorov distribution.
    pub fn p_value(&self) -> f64 {
        let lambda = self.statistic * self.effective_n.sqrt();
        if lambda < 1e-3 {
            return 1.0;
        }
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-16 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample KS distance sup |F_n − F| against an analytic CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let v = sorted(xs)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult { statistic: d, effective_n: n })
}

/// Two-sample KS distance sup |F_n − G_m|.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    let a = sorted(xs)?;
    let b = sorted(ys)?;
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    Ok(KsResult { statistic: d, effective_n: ne })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Empirical moment compared with an oracle value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentLine {
    pub power: f64,
    pub empirical: f64,
    pub oracle: f64,
    pub std_error: f64,
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub lines: Vec<MomentLine>,
    pub pass: bool,
}

/// How a moment comparison is judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Tolerance {
    /// |empirical/oracle − 1| ≤ r.
    Relative(f64),
    /// |empirical − oracle| ≤ k standard errors.
    Sigma(f64),
}

/// Compares E[X^p] against oracle values for each listed power.
pub fn moment_check(xs: &[f64], oracle: &[f64], powers: &[f64], tol: Tolerance) -> Result<MomentReport> {
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("moment check needs at least two draws".into()));
    }
    if oracle.len() != powers.len() {
        return Err(Error::InvalidParameter("oracle and power lengths differ".into()));
    }
    let mut lines = Vec::new();
    for (&p, &o) in powers.iter().zip(oracle) {
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(p)).collect();
        let m = mean(&ys);
        let se = (variance(&ys) / ys.len() as f64).sqrt();
        let rel = (m / o - 1.0).abs();
        let pass = match tol {
            Tolerance::Relative(r) => rel <= r,
            Tolerance::Sigma(k) => (m - o).abs() <= k * se,
        };
        lines.push(MomentLine { power: p, empirical: m, oracle: o, std_error: se, relative_error: rel, pass });
    }
    let pass = lines.iter().all(|l| l.pass);
    Ok(MomentReport { lines, pass })
}

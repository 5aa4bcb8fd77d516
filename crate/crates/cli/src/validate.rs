//! Self-check suite behind `wetsim validate`.

use wetsim::analytic::HarvestLaw;
use wetsim::channel::{rician_params, ChannelSampler, CorrelationMatrix, RngStream};
use wetsim::eh::EhModel;
use wetsim::mc::{ks_distance_law, run_mc, sample_harvest, McConfig};
use wetsim::strategies::{theorem1_check, StrategyId};

use crate::config::{RunConfig, ValidateSection};
use crate::{CliError, Csv};

pub const KAPPAS: [f64; 5] = [0.0, 0.5, 1.0, 3.0, 10.0];
pub const ANTENNAS: [usize; 4] = [2, 4, 8, 16];
pub const TABLE_TOL: f64 = 1e-10;
pub const Z_TOL: f64 = 3.0;
pub const KS_TOL: f64 = 0.01;

/// How the suite turns a correlation matrix into `δ`. Swappable so that a
/// deliberately wrong rule can be shown to fail.
#[derive(Clone, Copy)]
pub struct DeltaRule(pub fn(&CorrelationMatrix) -> f64);

impl Default for DeltaRule {
    fn default() -> Self {
        Self(|c| c.delta())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub statistic: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn check(name: impl Into<String>, statistic: f64, tolerance: f64, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed: statistic <= tolerance, statistic, tolerance, detail: detail.into() }
}

/// Uniform coefficients hitting `δ ∈ {0, M, M(1+0.4(M−1)), M²}`.
pub fn grid_rhos(m: usize) -> [(f64, f64); 4] {
    let mf = m as f64;
    [(-1.0 / (mf - 1.0), 0.0), (0.0, mf), (0.4, mf * (1.0 + 0.4 * (mf - 1.0))), (1.0, mf * mf)]
}

/// Normalized mean and variance from the closed-form table.
pub fn table_moments(s: StrategyId, kappa: f64, delta: f64, m: usize) -> (f64, f64) {
    let (mf, k1) = (m as f64, 1.0 + kappa);
    let sa_var = ((mf + 2.0 * kappa * delta) * mf * mf - 2.0 * delta * mf * k1 + delta * delta) / (mf * mf * mf * (mf - 1.0) * k1 * k1);
    match s {
        StrategyId::Oa => (1.0, (1.0 + 2.0 * kappa) / (k1 * k1)),
        StrategyId::Aa => ((delta + kappa * mf * mf) / (mf * k1), delta * (delta + 2.0 * kappa * mf * mf) / (mf * mf * k1 * k1)),
        StrategyId::Sa => (1.0, sa_var),
        StrategyId::AaCsi => (mf, mf * mf * sa_var),
        StrategyId::OaCsi => (f64::NAN, f64::NAN),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

pub fn run_checks(sec: &ValidateSection, seed: u64, workers: usize, rule: DeltaRule) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();

    // pathwise ordering over the grid, ideal harvester
    let mut violations = 0usize;
    let mut draws = 0usize;
    for (ci, &kappa) in KAPPAS.iter().enumerate() {
        for (mi, &m) in ANTENNAS.iter().enumerate() {
            for (ri, (rho, _)) in grid_rhos(m).iter().enumerate() {
                let corr = CorrelationMatrix::uniform(m, *rho)?;
                let mut sampler = ChannelSampler::new(&corr, &rician_params(kappa)?)?;
                let mut rng = RngStream::new(seed, (ci * 100 + mi * 10 + ri) as u64);
                for _ in 0..sec.ordering_draws {
                    let h = sampler.sample(&mut rng);
                    if !theorem1_check(&h, 1.0, 1.0) {
                        violations += 1;
                    }
                    draws += 1;
                }
            }
        }
    }
    out.push(check("pathwise-ordering", violations as f64, 0.0, format!("{draws} draws over 80 cells")));

    // closed-form table against the mixture moments
    for s in [StrategyId::Oa, StrategyId::Aa, StrategyId::Sa, StrategyId::AaCsi] {
        let mut worst: f64 = 0.0;
        let mut at = String::new();
        for &kappa in &KAPPAS {
            for &m in &ANTENNAS {
                for (rho, delta) in grid_rhos(m) {
                    let corr = CorrelationMatrix::uniform(m, rho)?;
                    let (mean, var) = HarvestLaw::for_strategy(s, kappa, (rule.0)(&corr), m, 1.0)?.moments()?;
                    let (tm, tv) = table_moments(s, kappa, delta, m);
                    let e = rel_err(mean, tm).max(rel_err(var, tv));
                    if e > worst || e.is_nan() {
                        worst = if e.is_nan() { f64::INFINITY } else { e };
                        at = format!("worst at kappa={kappa} M={m} delta={delta}");
                    }
                }
            }
        }
        out.push(check(format!("closed-form-{}", s.name()), worst, TABLE_TOL, at));
    }

    // Monte Carlo moments, uniform correlation
    let (kappa, m) = (1.0, 4);
    let corr = CorrelationMatrix::uniform(m, 0.4)?;
    let delta = (rule.0)(&corr);
    for s in StrategyId::ALL {
        let (am, av) = HarvestLaw::for_strategy(s, kappa, delta, m, 1.0)?.moments()?;
        let mut cfg = McConfig::new(corr.clone(), kappa, s, EhModel::ideal(1.0)?, 1.0, sec.mc_samples, seed)?;
        cfg.workers = workers;
        let st = run_mc(&cfg)?;
        let z = ((st.mean - am) / st.se_mean).abs().max(((st.variance - av) / st.se_variance).abs());
        out.push(check(
            format!("mc-moments-{}", s.name()),
            z,
            Z_TOL,
            format!("kappa={kappa} M={m} uniform rho=0.4 n={}", sec.mc_samples),
        ));
    }

    // distribution agreement, exponential correlation
    let (kappa, m, tau) = (3.0, 4, 0.2);
    let corr = CorrelationMatrix::exponential(m, tau)?;
    let delta = (rule.0)(&corr);
    for s in StrategyId::ALL {
        let law = HarvestLaw::for_strategy(s, kappa, delta, m, 1.0)?;
        let mut cfg = McConfig::new(corr.clone(), kappa, s, EhModel::ideal(1.0)?, 1.0, sec.ks_samples, seed)?;
        cfg.workers = workers;
        let xs = sample_harvest(&cfg)?;
        let d = ks_distance_law(&xs, &law, 800)?;
        out.push(check(
            format!("ks-{}", s.name()),
            d,
            KS_TOL,
            format!("kappa={kappa} M={m} exponential tau={tau} n={}", sec.ks_samples),
        ));
    }
    Ok(out)
}

pub fn cmd_validate(cfg: &RunConfig, rule: DeltaRule) -> Result<Csv, CliError> {
    let sec = cfg.validate.clone().unwrap_or_default();
    let checks = run_checks(&sec, cfg.seed, cfg.workers(), rule)?;
    let mut csv = Csv::new("validate", &["check", "passed", "statistic", "tolerance", "detail"]);
    csv.meta("seed", cfg.seed)
        .meta("workers", cfg.workers())
        .meta("ordering_draws", sec.ordering_draws)
        .meta("mc_samples", sec.mc_samples)
        .meta("ks_samples", sec.ks_samples);
    for c in checks {
        csv.push(vec![
            c.name.into(),
            if c.passed { "pass" } else { "FAIL" }.into(),
            c.statistic.into(),
            c.tolerance.into(),
            c.detail.into(),
        ]);
    }
    Ok(csv)
}

/// Names of the failed checks in a `validate` report.
pub fn failures(csv: &Csv) -> Vec<String> {
    let (ci, pi) = (csv.column("check").expect("check column"), csv.column("passed").expect("passed column"));
    csv.rows
        .iter()
        .filter(|r| r[pi].to_string() != "pass")
        .map(|r| r[ci].to_string())
        .collect()
}

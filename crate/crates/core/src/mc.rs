//! Monte Carlo engine: single-user streaming statistics, Kolmogorov–Smirnov
//! distances, and the multi-user disk deployment.
//!
//! Every run is split into fixed-size blocks, each drawing from its own
//! ChaCha stream keyed by `(seed, block)`. Blocks are reduced in index order
//! with compensated sums, so results do not depend on how many worker
//! threads evaluated them.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::analytic::{HarvestLaw, TabulatedCdf};
use crate::channel::{rician_params, ChannelDraw, ChannelSampler, CorrelationMatrix, RngStream};
use crate::eh::EhModel;
use crate::error::{invalid, Result};
use crate::strategies::{aa_csi_multi, harvest_single, oa_csi_select, MultiUserDraw, StrategyId};

/// Samples per independent stream.
pub const BLOCK: usize = 1 << 15;
/// Size of the pilot pass fixing the histogram range.
pub const PILOT: usize = 10_000;
pub const DEFAULT_BINS: usize = 200;

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, o: &Neumaier) {
        self.add(o.sum);
        self.add(o.c);
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Runs `f` on every index in `0..n` with up to `workers` threads and returns
/// the results in index order.
fn par_map<T: Send, F: Fn(usize) -> T + Sync>(n: usize, workers: usize, f: F) -> Vec<T> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = f(i);
                slots.lock().expect("worker panicked")[i] = Some(v);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|v| v.expect("every index ran")).collect()
}

/// Single-user Monte Carlo settings. Powers in mW.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub corr: CorrelationMatrix,
    pub kappa: f64,
    pub strategy: StrategyId,
    pub model: EhModel,
    pub rho: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub bins: usize,
    /// Outage is the frequency of harvested energy strictly below each value.
    pub thresholds: Vec<f64>,
}

impl McConfig {
    pub fn new(
        corr: CorrelationMatrix,
        kappa: f64,
        strategy: StrategyId,
        model: EhModel,
        rho: f64,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self { corr, kappa, strategy, model, rho, n_samples, seed, workers: 1, bins: DEFAULT_BINS, thresholds: vec![] };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        rician_params(self.kappa)?;
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(invalid("rho", format!("must be positive and finite, got {}", self.rho)));
        }
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "must be at least 1"));
        }
        if self.bins == 0 {
            return Err(invalid("bins", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        Ok(())
    }

    fn sampler(&self) -> Result<ChannelSampler> {
        ChannelSampler::new(&self.corr, &rician_params(self.kappa)?)
    }

    fn fill(&self, sampler: &mut ChannelSampler, rng: &mut RngStream, out: &mut Vec<f64>, n: usize) {
        let mut h = ChannelDraw::new(vec![0.0; self.corr.m()], vec![0.0; self.corr.m()]).expect("matching lengths");
        out.clear();
        for _ in 0..n {
            sampler.sample_into(rng, &mut h);
            out.push(harvest_single(self.strategy, &h, self.rho, &self.model));
        }
    }
}

/// Equal-width histogram on `[lo, hi]`; values outside are counted in the
/// edge bins so that the counts add up to the sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self { lo, hi, counts: vec![0; bins] }
    }

    fn push(&mut self, x: f64) {
        let n = self.counts.len();
        let pos = (x - self.lo) / (self.hi - self.lo) * n as f64;
        let i = if pos.is_nan() || pos < 0.0 { 0 } else { (pos as usize).min(n - 1) };
        self.counts[i] += 1;
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
    }

    /// Counts normalized to a density.
    pub fn density(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        self.counts.iter().map(|&c| c as f64 / (total as f64 * w)).collect()
    }
}

/// Summary of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub n: u64,
    pub mean: f64,
    /// Unbiased.
    pub variance: f64,
    /// `√(var/n)`.
    pub se_mean: f64,
    /// `√((m₄ − m₂²)/n)`.
    pub se_variance: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
    /// `(threshold, frequency of values below it)`.
    pub outage_at: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct Acc {
    n: u64,
    s: [Neumaier; 4],
    min: f64,
    max: f64,
    hist: Histogram,
    below: Vec<u64>,
}

impl Acc {
    fn new(hist: Histogram, thresholds: usize) -> Self {
        Self { n: 0, s: [Neumaier::default(); 4], min: f64::INFINITY, max: f64::NEG_INFINITY, hist, below: vec![0; thresholds] }
    }

    fn push(&mut self, x: f64, shift: f64, thresholds: &[f64]) {
        self.n += 1;
        let a = x - shift;
        let a2 = a * a;
        self.s[0].add(a);
        self.s[1].add(a2);
        self.s[2].add(a2 * a);
        self.s[3].add(a2 * a2);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.hist.push(x);
        for (b, t) in self.below.iter_mut().zip(thresholds) {
            if x < *t {
                *b += 1;
            }
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.n += o.n;
        for (a, b) in self.s.iter_mut().zip(&o.s) {
            a.merge(b);
        }
        self.min = self.min.min(o.min);
        self.max = self.max.max(o.max);
        for (a, b) in self.hist.counts.iter_mut().zip(&o.hist.counts) {
            *a += b;
        }
        for (a, b) in self.below.iter_mut().zip(&o.below) {
            *a += b;
        }
    }
}

fn block_count(n: usize) -> usize {
    n.div_ceil(BLOCK)
}

/// Streams `n_samples` draws of the harvested energy and summarizes them.
///
/// Deterministic in `(seed, config)`; the worker count only affects speed.
pub fn run_mc(cfg: &McConfig) -> Result<EmpiricalStats> {
    cfg.validate()?;
    let mut sampler = cfg.sampler()?;

    // pilot pass on its own stream
    let mut pilot = Vec::new();
    let mut rng = RngStream::new(cfg.seed, 0);
    cfg.fill(&mut sampler, &mut rng, &mut pilot, PILOT.min(cfg.n_samples));
    let pn = pilot.len() as f64;
    let shift = pilot.iter().sum::<f64>() / pn;
    let sd = (pilot.iter().map(|x| (x - shift).powi(2)).sum::<f64>() / pn).sqrt();
    let pmax = pilot.iter().cloned().fold(0.0, f64::max);
    let mut hi = (shift + 8.0 * sd).max(pmax);
    if !(hi > 0.0) {
        hi = 1.0;
    }
    let template = Acc::new(Histogram::new(0.0, hi, cfg.bins), cfg.thresholds.len());

    let blocks = block_count(cfg.n_samples);
    let parts = par_map(blocks, cfg.workers, |b| {
        let mut sampler = sampler.clone();
        let mut rng = RngStream::new(cfg.seed, b as u64 + 1);
        let n = BLOCK.min(cfg.n_samples - b * BLOCK);
        let mut buf = Vec::with_capacity(n);
        cfg.fill(&mut sampler, &mut rng, &mut buf, n);
        let mut acc = template.clone();
        for &x in &buf {
            acc.push(x, shift, &cfg.thresholds);
        }
        acc
    });
    let mut total = template.clone();
    for p in &parts {
        total.merge(p);
    }

    let n = total.n as f64;
    let [s1, s2, s3, s4] = total.s.map(|s| s.value() / n);
    let d = s1;
    let m2 = (s2 - d * d).max(0.0);
    let m4 = (s4 - 4.0 * d * s3 + 6.0 * d * d * s2 - 3.0 * d.powi(4)).max(0.0);
    let variance = if total.n > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    Ok(EmpiricalStats {
        n: total.n,
        mean: shift + d,
        variance,
        se_mean: (variance / n).sqrt(),
        se_variance: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        min: total.min,
        max: total.max,
        histogram: total.hist,
        outage_at: cfg.thresholds.iter().zip(&total.below).map(|(t, b)| (*t, *b as f64 / n)).collect(),
    })
}

/// The raw harvested-energy draws of [`run_mc`], in stream order.
pub fn sample_harvest(cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let sampler = cfg.sampler()?;
    let parts = par_map(block_count(cfg.n_samples), cfg.workers, |b| {
        let mut sampler = sampler.clone();
        let mut rng = RngStream::new(cfg.seed, b as u64 + 1);
        let mut buf = Vec::new();
        cfg.fill(&mut sampler, &mut rng, &mut buf, BLOCK.min(cfg.n_samples - b * BLOCK));
        buf
    });
    Ok(parts.concat())
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
///
/// Ties are handled through the left limit `cdf(x⁻)`, so a point-mass law
/// against its own samples gives 0.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == x {
            j += 1;
        }
        let left = cdf(x.next_down());
        let at = cdf(x);
        d = d.max((left - i as f64 / n).abs()).max((at - (j + 1) as f64 / n).abs());
        i = j + 1;
    }
    d
}

/// [`ks_distance`] against an analytic law, whose CDF is tabulated on
/// `points` nodes over `mean ± 12σ` (clipped at 0).
pub fn ks_distance_law(samples: &[f64], law: &HarvestLaw, points: usize) -> Result<f64> {
    if let HarvestLaw::Mixture(d) = law {
        if d.is_deterministic() {
            return Ok(ks_distance(samples, |x| law.cdf(x.max(0.0)).unwrap_or(f64::NAN)));
        }
    }
    let (mean, var) = law.moments()?;
    let sd = var.sqrt();
    let lo = (mean - 12.0 * sd).max(0.0);
    let hi = mean + 12.0 * sd;
    let table = TabulatedCdf::from_fn(|x| law.cdf(x), lo, hi, points)?;
    Ok(ks_distance(samples, |x| if x < lo { 0.0 } else { table.eval(x) }))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Disk deployment around the transmitter. Distances in m, powers in mW.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub radius: f64,
    pub pathloss_exponent: f64,
    /// `ϱ = ι^{-α}/divisor` in W.
    pub link_budget_divisor: f64,
    pub kappa_amplitude: f64,
    pub kappa_decay: f64,
    pub tau_decay: f64,
    pub n_users: usize,
    pub m_antennas: usize,
    pub strategies: Vec<StrategyId>,
    pub eh_model: EhModel,
    pub placements: usize,
    pub draws_per_placement: usize,
    pub seed: u64,
    /// Outage when the harvested energy is below this value (mW).
    pub outage_threshold: f64,
    /// Objective evaluations per beamforming search; `None` uses the default.
    pub aa_csi_budget: Option<usize>,
    pub workers: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let eh_model = EhModel::reference_piecewise();
        let outage_threshold = match eh_model {
            EhModel::Piecewise { eta, w1, .. } => eta * w1,
            _ => unreachable!(),
        };
        Self {
            radius: 10.0,
            pathloss_exponent: 3.0,
            link_budget_divisor: 50.0,
            kappa_amplitude: 10.0,
            kappa_decay: 2.0,
            tau_decay: 3.0,
            n_users: 1,
            m_antennas: 8,
            strategies: StrategyId::ALL.to_vec(),
            eh_model,
            placements: 10_000,
            draws_per_placement: 100,
            seed: 1,
            outage_threshold,
            aa_csi_budget: None,
            workers: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radius", self.radius),
            ("pathloss_exponent", self.pathloss_exponent),
            ("link_budget_divisor", self.link_budget_divisor),
            ("kappa_decay", self.kappa_decay),
            ("tau_decay", self.tau_decay),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.kappa_amplitude >= 0.0) {
            return Err(invalid("kappa_amplitude", "must be non-negative"));
        }
        for (name, v) in [
            ("n_users", self.n_users),
            ("m_antennas", self.m_antennas),
            ("placements", self.placements),
            ("draws_per_placement", self.draws_per_placement),
            ("workers", self.workers),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        if self.strategies.is_empty() {
            return Err(invalid("strategies", "need at least one strategy"));
        }
        if !(self.outage_threshold >= 0.0) {
            return Err(invalid("outage_threshold", "must be non-negative"));
        }
        Ok(())
    }

    /// Link gain (mW), LOS factor and correlation coefficient at distance `d`.
    pub fn site_at(&self, distance: f64) -> UserSite {
        UserSite {
            distance,
            rho: 1e3 * distance.powf(-self.pathloss_exponent) / self.link_budget_divisor,
            kappa: self.kappa_amplitude * (-distance / self.kappa_decay).exp(),
            tau: (-distance / self.tau_decay).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSite {
    pub distance: f64,
    /// mW
    pub rho: f64,
    pub kappa: f64,
    pub tau: f64,
}

/// Uniform position in the disk: distance `R√u`, `u ∈ (0, 1]`.
pub fn sample_user_site(cfg: &ScenarioConfig, rng: &mut RngStream) -> UserSite {
    let u = 1.0 - rng.uniform();
    cfg.site_at(cfg.radius * u.sqrt())
}

/// Per-strategy output of [`multiuser_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub strategy: StrategyId,
    /// Per-user average harvested energy (mW).
    pub avg_energy: f64,
    /// Standard error over placements.
    pub se_energy: f64,
    pub outage: f64,
    pub se_outage: f64,
    /// Standard deviation of the harvested energy pooled over placements,
    /// draws and users (mW).
    pub fairness_std: f64,
    /// Per-placement means, for paired comparisons across runs.
    pub placement_energy: Vec<f64>,
    pub placement_outage: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserStats {
    pub n_users: usize,
    pub m_antennas: usize,
    pub placements: usize,
    pub draws_per_placement: usize,
    pub outcomes: Vec<StrategyOutcome>,
}

impl MultiUserStats {
    pub fn get(&self, s: StrategyId) -> Option<&StrategyOutcome> {
        self.outcomes.iter().find(|o| o.strategy == s)
    }
}

struct PlacementResult {
    energy: Vec<f64>,
    outage: Vec<f64>,
    sum: Vec<Neumaier>,
    sum_sq: Vec<Neumaier>,
}

const SITE_TAG: u64 = 0xFFFF_FFFF;
const SEARCH_TAG: u64 = 0xFFFF_FFFE;

fn stream_id(placement: usize, tag: u64) -> u64 {
    ((placement as u64) << 32) | tag
}

fn run_placement(cfg: &ScenarioConfig, p: usize) -> Result<PlacementResult> {
    let (m, users, ns) = (cfg.m_antennas, cfg.n_users, cfg.strategies.len());
    let mut site_rng = RngStream::new(cfg.seed, stream_id(p, SITE_TAG));
    let sites: Vec<UserSite> = (0..users).map(|_| sample_user_site(cfg, &mut site_rng)).collect();
    let mut samplers = Vec::with_capacity(users);
    for s in &sites {
        samplers.push(ChannelSampler::new(&CorrelationMatrix::exponential(m, s.tau)?, &rician_params(s.kappa)?)?);
    }
    let mut user_rngs: Vec<RngStream> = (0..users).map(|j| RngStream::new(cfg.seed, stream_id(p, j as u64))).collect();
    let mut search_rng = RngStream::new(cfg.seed, stream_id(p, SEARCH_TAG));
    let rho_vec: Vec<f64> = sites.iter().map(|s| s.rho).collect();

    let mut draws: Vec<ChannelDraw> = (0..users).map(|_| ChannelDraw::new(vec![0.0; m], vec![0.0; m]).expect("sizes")).collect();
    let mut sum = vec![Neumaier::default(); ns];
    let mut sum_sq = vec![Neumaier::default(); ns];
    let mut below = vec![0u64; ns];
    let mut energies = vec![0.0; users];
    for _ in 0..cfg.draws_per_placement {
        for j in 0..users {
            samplers[j].sample_into(&mut user_rngs[j], &mut draws[j]);
        }
        let multi = if cfg.strategies.iter().any(|s| s.uses_csi()) {
            Some(MultiUserDraw::from_draws(&draws, rho_vec.clone())?)
        } else {
            None
        };
        for (k, &st) in cfg.strategies.iter().enumerate() {
            match st {
                StrategyId::OaCsi => energies = oa_csi_select(multi.as_ref().expect("built for CSI"), &cfg.eh_model).1,
                StrategyId::AaCsi => {
                    energies = aa_csi_multi(multi.as_ref().expect("built for CSI"), &cfg.eh_model, cfg.aa_csi_budget, &mut search_rng)?
                        .harvested
                }
                _ => {
                    for j in 0..users {
                        energies[j] = harvest_single(st, &draws[j], rho_vec[j], &cfg.eh_model);
                    }
                }
            }
            for &e in &energies {
                sum[k].add(e);
                sum_sq[k].add(e * e);
                if e < cfg.outage_threshold {
                    below[k] += 1;
                }
            }
        }
    }
    let cnt = (cfg.draws_per_placement * users) as f64;
    Ok(PlacementResult {
        energy: sum.iter().map(|s| s.value() / cnt).collect(),
        outage: below.iter().map(|&b| b as f64 / cnt).collect(),
        sum,
        sum_sq,
    })
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Multi-user deployment: averages over user placements and channel draws.
///
/// All strategies see the same placements and channel draws. User `j`'s
/// position and channels depend only on `(seed, placement, j)`, so runs with
/// different `|S|` are paired on their common users.
pub fn multiuser_run(cfg: &ScenarioConfig) -> Result<MultiUserStats> {
    cfg.validate()?;
    let results = par_map(cfg.placements, cfg.workers, |p| run_placement(cfg, p));
    let results: Vec<PlacementResult> = results.into_iter().collect::<Result<_>>()?;
    let ns = cfg.strategies.len();
    let total = (cfg.placements * cfg.draws_per_placement * cfg.n_users) as f64;
    let outcomes = (0..ns)
        .map(|k| {
            let placement_energy: Vec<f64> = results.iter().map(|r| r.energy[k]).collect();
            let placement_outage: Vec<f64> = results.iter().map(|r| r.outage[k]).collect();
            let (avg_energy, se_energy) = mean_se(&placement_energy);
            let (outage, se_outage) = mean_se(&placement_outage);
            let mut s = Neumaier::default();
            let mut s2 = Neumaier::default();
            for r in &results {
                s.merge(&r.sum[k]);
                s2.merge(&r.sum_sq[k]);
            }
            let mean = s.value() / total;
            let var = (s2.value() / total - mean * mean).max(0.0) * total / (total - 1.0).max(1.0);
            StrategyOutcome {
                strategy: cfg.strategies[k],
                avg_energy,
                se_energy,
                outage,
                se_outage,
                fairness_std: var.sqrt(),
                placement_energy,
                placement_outage,
            }
        })
        .collect();
    Ok(MultiUserStats {
        n_users: cfg.n_users,
        m_antennas: cfg.m_antennas,
        placements: cfg.placements,
        draws_per_placement: cfg.draws_per_placement,
        outcomes,
    })
}

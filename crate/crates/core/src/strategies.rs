//! Per-realization harvested energy for the five transmit strategies.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{ChannelDraw, RngStream};
use crate::eh::EhModel;
use crate::error::{invalid, Error, Result};

/// Relative tolerance for the equalities of the ordering check.
pub const ORDERING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyId {
    /// One fixed antenna at full power.
    Oa,
    /// All antennas, equal power, no CSI.
    Aa,
    /// One antenna at a time, switched across the block.
    Sa,
    /// Best single antenna given CSI.
    OaCsi,
    /// CSI beamforming (MRT for a single user).
    AaCsi,
}

impl StrategyId {
    pub const ALL: [StrategyId; 5] = [Self::Oa, Self::Aa, Self::Sa, Self::OaCsi, Self::AaCsi];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Oa => "OA",
            Self::Aa => "AA",
            Self::Sa => "SA",
            Self::OaCsi => "OA-CSI",
            Self::AaCsi => "AA-CSI",
        }
    }

    pub fn uses_csi(&self) -> bool {
        matches!(self, Self::OaCsi | Self::AaCsi)
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_uppercase();
        match norm.as_str() {
            "OA" => Ok(Self::Oa),
            "AA" => Ok(Self::Aa),
            "SA" => Ok(Self::Sa),
            "OACSI" => Ok(Self::OaCsi),
            "AACSI" => Ok(Self::AaCsi),
            _ => Err(invalid("strategy", format!("unknown strategy `{s}` (expected OA, AA, SA, OA-CSI or AA-CSI)"))),
        }
    }
}

/// `ϱ|h_i|²` for the one-based `antenna`.
pub fn rf_power_oa(h: &ChannelDraw, rho: f64, antenna: usize) -> Result<f64> {
    if antenna == 0 || antenna > h.m() {
        return Err(invalid("antenna", format!("index {antenna} outside 1..={}", h.m())));
    }
    Ok(rho * h.power(antenna - 1))
}

/// `(ϱ/M)|Σ_i h_i|²`.
pub fn rf_power_aa(h: &ChannelDraw, rho: f64) -> f64 {
    let re: f64 = h.real_part.iter().sum();
    let im: f64 = h.imag_part.iter().sum();
    rho * (re * re + im * im) / h.m() as f64
}

/// `(1/M) Σ_i g(ϱ|h_i|²)`: the harvester acts on each sub-block separately.
pub fn harvested_sa(h: &ChannelDraw, rho: f64, model: &EhModel) -> f64 {
    let m = h.m();
    (0..m).map(|i| model.g(rho * h.power(i))).sum::<f64>() / m as f64
}

/// MRT value `ϱ Σ_i |h_i|²` (RF, before the harvester).
pub fn aa_csi_single(h: &ChannelDraw, rho: f64) -> f64 {
    rho * (0..h.m()).map(|i| h.power(i)).sum::<f64>()
}

/// Harvested power of a single user for any strategy.
pub fn harvest_single(strategy: StrategyId, h: &ChannelDraw, rho: f64, model: &EhModel) -> f64 {
    match strategy {
        StrategyId::Oa => model.g(rho * h.power(0)),
        StrategyId::Aa => model.g(rf_power_aa(h, rho)),
        StrategyId::Sa => harvested_sa(h, rho, model),
        StrategyId::OaCsi => {
            let best = (0..h.m()).map(|i| h.power(i)).fold(f64::NEG_INFINITY, f64::max);
            model.g(rho * best)
        }
        StrategyId::AaCsi => model.g(aa_csi_single(h, rho)),
    }
}

/// Channels to every user (columns) and their link gains `ϱ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserDraw {
    pub channels: DMatrix<Complex64>,
    pub rho_vec: Vec<f64>,
}

impl MultiUserDraw {
    pub fn new(channels: DMatrix<Complex64>, rho_vec: Vec<f64>) -> Result<Self> {
        if channels.ncols() == 0 || channels.nrows() == 0 {
            return Err(invalid("channels", "need at least one antenna and one user"));
        }
        if rho_vec.len() != channels.ncols() {
            return Err(invalid("rho_vec", format!("{} gains for {} users", rho_vec.len(), channels.ncols())));
        }
        if rho_vec.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(invalid("rho_vec", "link gains must be positive and finite"));
        }
        Ok(Self { channels, rho_vec })
    }

    pub fn from_draws(draws: &[ChannelDraw], rho_vec: Vec<f64>) -> Result<Self> {
        let m = draws.first().map(|d| d.m()).unwrap_or(0);
        if draws.iter().any(|d| d.m() != m) {
            return Err(invalid("channels", "all users need the same antenna count"));
        }
        let channels = DMatrix::from_fn(m, draws.len(), |i, j| draws[j].coefficient(i));
        Self::new(channels, rho_vec)
    }

    pub fn m(&self) -> usize {
        self.channels.nrows()
    }

    pub fn users(&self) -> usize {
        self.channels.ncols()
    }
}

/// Antenna (one-based) maximizing total harvested energy, with the per-user
/// energies it yields. Ties go to the lowest index.
pub fn oa_csi_select(draw: &MultiUserDraw, model: &EhModel) -> (usize, Vec<f64>) {
    let mut best = 0;
    let mut best_total = f64::NEG_INFINITY;
    for i in 0..draw.m() {
        let total: f64 = (0..draw.users()).map(|j| model.g(draw.rho_vec[j] * draw.channels[(i, j)].norm_sqr())).sum();
        if total > best_total {
            best_total = total;
            best = i;
        }
    }
    let per_user = (0..draw.users()).map(|j| model.g(draw.rho_vec[j] * draw.channels[(best, j)].norm_sqr())).collect();
    (best + 1, per_user)
}

/// Result of the multi-user beamforming search.
#[derive(Debug, Clone, PartialEq)]
pub struct AaCsiOutcome {
    /// `M × l` precoders, columns are beams; total power 1.
    pub beams: DMatrix<Complex64>,
    pub harvested: Vec<f64>,
    pub objective: f64,
    pub evaluations: usize,
}

/// Number of uniformly random restart seeds used by [`aa_csi_multi`].
pub const RANDOM_RESTARTS: usize = 2;

pub fn default_aa_csi_budget(m: usize, users: usize) -> usize {
    200 * m * users
}

fn per_user_energy(draw: &MultiUserDraw, model: &EhModel, w: &DMatrix<Complex64>, out: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for (j, slot) in out.iter_mut().enumerate() {
        let mut rf = 0.0;
        for k in 0..w.ncols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..w.nrows() {
                acc += draw.channels[(i, j)] * w[(i, k)];
            }
            rf += acc.norm_sqr();
        }
        *slot = model.g(draw.rho_vec[j] * rf);
        total += *slot;
    }
    total
}

fn normalize(w: &mut DMatrix<Complex64>) {
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        w.iter_mut().for_each(|z| *z /= norm);
    }
}

/// Heuristic search for the CSI beamformers maximizing total harvested energy.
///
/// Restarts from MRT toward each user, the equal-power vector and
/// [`RANDOM_RESTARTS`] random unit vectors, then refines each by coordinate
/// perturbation with a shrinking step, renormalizing after every move. The
/// result is never worse than any restart seed but is not a certified
/// optimum. `budget` counts objective evaluations and defaults to `200·M·|S|`.
pub fn aa_csi_multi(
    draw: &MultiUserDraw,
    model: &EhModel,
    budget: Option<usize>,
    rng: &mut RngStream,
) -> Result<AaCsiOutcome> {
    let (m, users) = (draw.m(), draw.users());
    let beams = m.min(users);
    let budget = budget.unwrap_or_else(|| default_aa_csi_budget(m, users));

    let mut seeds: Vec<DMatrix<Complex64>> = Vec::new();
    for j in 0..users {
        let mut w = DMatrix::zeros(m, beams);
        for i in 0..m {
            w[(i, 0)] = draw.channels[(i, j)].conj();
        }
        normalize(&mut w);
        if w.iter().any(|z| z.norm_sqr() > 0.0) {
            seeds.push(w);
        }
    }
    // one user: MRT maximizes the RF power and every g is non-decreasing
    if users == 1 && !seeds.is_empty() {
        let beams = seeds.swap_remove(0);
        let mut harvested = vec![0.0];
        let objective = per_user_energy(draw, model, &beams, &mut harvested);
        return Ok(AaCsiOutcome { beams, harvested, objective, evaluations: 1 });
    }
    let mut equal = DMatrix::zeros(m, beams);
    for i in 0..m {
        equal[(i, 0)] = Complex64::new(1.0, 0.0);
    }
    normalize(&mut equal);
    seeds.push(equal);
    for _ in 0..RANDOM_RESTARTS {
        let mut w = DMatrix::from_fn(m, beams, |_, _| Complex64::new(rng.standard_normal(), rng.standard_normal()));
        normalize(&mut w);
        seeds.push(w);
    }
    if budget < seeds.len() {
        return Err(invalid(
            "budget",
            format!("{budget} evaluations cannot cover the {} restart seeds", seeds.len()),
        ));
    }

    let mut scratch = vec![0.0; users];
    let mut values: Vec<f64> = seeds.iter().map(|w| per_user_energy(draw, model, w, &mut scratch)).collect();
    let mut evaluations = seeds.len();
    let per_restart = (budget - evaluations) / seeds.len();
    let dims = 2 * m * beams;

    for (w, value) in seeds.iter_mut().zip(values.iter_mut()) {
        let mut step = 0.5;
        let mut used = 0;
        let mut coord = 0;
        let mut since_improvement = 0;
        while used + 2 <= per_restart && step > 1e-9 {
            let (idx, imag) = (coord / 2, coord % 2 == 1);
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let mut cand = w.clone();
                let z = &mut cand[idx];
                if imag {
                    z.im += sign * step;
                } else {
                    z.re += sign * step;
                }
                normalize(&mut cand);
                let v = per_user_energy(draw, model, &cand, &mut scratch);
                used += 1;
                if v > *value {
                    *value = v;
                    *w = cand;
                    improved = true;
                    break;
                }
            }
            coord = (coord + 1) % dims;
            if improved {
                since_improvement = 0;
            } else {
                since_improvement += 1;
                if since_improvement >= dims {
                    step *= 0.5;
                    since_improvement = 0;
                }
            }
        }
        evaluations += used;
    }

    let (best_idx, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let beams = seeds.swap_remove(best_idx);
    let mut harvested = vec![0.0; users];
    let objective = per_user_energy(draw, model, &beams, &mut harvested);
    Ok(AaCsiOutcome { beams, harvested, objective, evaluations })
}

/// The five ideal-model harvested energies of one draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingValues {
    pub oa: f64,
    pub aa: f64,
    pub sa: f64,
    pub oa_csi: f64,
    pub aa_csi: f64,
}

impl OrderingValues {
    pub fn compute(h: &ChannelDraw, rho: f64, eta: f64) -> Self {
        let model = EhModel::IdealLinear { eta };
        let single = MultiUserDraw {
            channels: DMatrix::from_fn(h.m(), 1, |i, _| h.coefficient(i)),
            rho_vec: vec![rho],
        };
        let (_, oa_csi) = oa_csi_select(&single, &model);
        Self {
            oa: eta * rho * h.power(0),
            aa: eta * rf_power_aa(h, rho),
            sa: harvested_sa(h, rho, &model),
            oa_csi: oa_csi[0],
            aa_csi: eta * aa_csi_single(h, rho),
        }
    }

    /// `OA ≤ OA-CSI ≤ AA-CSI = M·SA` and `AA ≤ AA-CSI`.
    pub fn ordered(&self, m: usize) -> bool {
        let le = |a: f64, b: f64| a <= b + ORDERING_TOL * b.abs().max(a.abs());
        let eq = |a: f64, b: f64| (a - b).abs() <= ORDERING_TOL * a.abs().max(b.abs());
        le(self.oa, self.oa_csi) && le(self.oa_csi, self.aa_csi) && eq(self.aa_csi, m as f64 * self.sa) && le(self.aa, self.aa_csi)
    }
}

/// Ideal-model ordering of the five strategies on one draw.
pub fn theorem1_check(h: &ChannelDraw, rho: f64, eta: f64) -> bool {
    OrderingValues::compute(h, rho, eta).ordered(h.m())
}

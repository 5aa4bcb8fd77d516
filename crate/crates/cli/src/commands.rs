use wetsim::analytic::{avg_harvest, energy_outage, saturated_cdf, HarvestLaw, PiecewiseParams};
use wetsim::eh::{linear_to_dbm, EhModel};
use wetsim::mc::{multiuser_run, run_mc, sample_harvest, McConfig, MultiUserStats, ScenarioConfig};
use wetsim::strategies::StrategyId;
use wetsim::Error;

use crate::config::{parse_strategies, parse_strategy, require, ModelKind, RunConfig};
use crate::{Cell, CliError, Csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stats,
    Pdf,
    Cdf,
    Outage,
    AvgHarvest,
    Multiuser,
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Stats => "stats",
            Self::Pdf => "pdf",
            Self::Cdf => "cdf",
            Self::Outage => "outage",
            Self::AvgHarvest => "avg-harvest",
            Self::Multiuser => "multiuser",
            Self::Validate => "validate",
        }
    }
}

/// Runs `cmd`. `validate` returns its report even when checks fail; use
/// [`crate::validate::failures`] to decide the exit status.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Csv, CliError> {
    match cmd {
        Command::Stats => cmd_stats(cfg),
        Command::Pdf => cmd_density(cfg, false),
        Command::Cdf => cmd_density(cfg, true),
        Command::Outage => cmd_outage(cfg),
        Command::AvgHarvest => cmd_avg_harvest(cfg),
        Command::Multiuser => cmd_multiuser(cfg),
        Command::Validate => crate::validate::cmd_validate(cfg, crate::validate::DeltaRule::default()),
    }
}

/// Law of `ξ⁰` or `None` when the strategy has no analytic law for this input.
fn law_or_none(s: StrategyId, kappa: f64, delta: f64, m: usize, scale: f64) -> Result<Option<HarvestLaw>, CliError> {
    match HarvestLaw::for_strategy(s, kappa, delta, m, scale) {
        Ok(l) => Ok(Some(l)),
        Err(Error::Capability(msg)) => {
            eprintln!("note: {s}: {msg}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn base_meta(csv: &mut Csv, cfg: &RunConfig) {
    csv.meta("seed", cfg.seed).meta("workers", cfg.workers());
}

fn channel_meta(csv: &mut Csv, cfg: &RunConfig) -> Result<(), CliError> {
    let ch = cfg.channel()?;
    csv.meta("m", ch.antennas).meta("kappa", ch.kappa).meta("delta", ch.matrix()?.delta());
    Ok(())
}

fn mc_config(cfg: &RunConfig, s: StrategyId, model: EhModel, rho: f64, samples: usize) -> Result<McConfig, CliError> {
    let ch = cfg.channel()?;
    let mut mc = McConfig::new(ch.matrix()?, ch.kappa, s, model, rho, samples, cfg.seed)?;
    mc.workers = cfg.workers();
    Ok(mc)
}

fn cmd_stats(cfg: &RunConfig) -> Result<Csv, CliError> {
    let sec = require(&cfg.stats, "stats")?;
    let strategies = parse_strategies(&sec.strategies, "stats.strategies")?;
    let ch = cfg.channel()?;
    let delta = ch.matrix()?.delta();
    let h = cfg.harvester()?;
    let eta = h.eta()?;
    let rho = cfg.rho()?;
    let model = h.ideal()?;

    let mut csv = Csv::new(
        "stats",
        &["strategy", "kappa", "delta", "m", "analytic_mean", "analytic_var", "mc_mean", "mc_var", "mc_se", "mc_se_var"],
    );
    base_meta(&mut csv, cfg);
    csv.meta("samples", sec.samples).meta("eta", eta).meta("rho_mw", rho);
    for s in strategies {
        let (am, av) = match law_or_none(s, ch.kappa, delta, ch.antennas, eta * rho)? {
            Some(l) => l.moments()?,
            None => (f64::NAN, f64::NAN),
        };
        let st = run_mc(&mc_config(cfg, s, model, rho, sec.samples)?)?;
        csv.push(vec![
            s.name().into(),
            ch.kappa.into(),
            delta.into(),
            ch.antennas.into(),
            am.into(),
            av.into(),
            st.mean.into(),
            st.variance.into(),
            st.se_mean.into(),
            st.se_variance.into(),
        ]);
    }
    Ok(csv)
}

fn cmd_density(cfg: &RunConfig, cumulative: bool) -> Result<Csv, CliError> {
    let (name, field) = if cumulative { ("cdf", &cfg.cdf) } else { ("pdf", &cfg.pdf) };
    let sec = require(field, name)?;
    let s = parse_strategy(&sec.strategy, &format!("{name}.strategy"))?;
    let ch = cfg.channel()?;
    let delta = ch.matrix()?.delta();
    let h = cfg.harvester()?;
    let eta = h.eta()?;
    let rho = cfg.rho()?;
    let points = sec.points.unwrap_or(400);
    if points < 2 {
        return Err(CliError::config(&format!("{name}.points"), "need at least 2"));
    }
    // the cdf honours the configured linear model; the pdf is always of ξ⁰
    let model = if cumulative { h.model()? } else { h.ideal()? };
    let saturation = match model {
        EhModel::Piecewise { w1, w2, .. } => Some((w1, w2)),
        EhModel::Logistic { .. } => {
            return Err(CliError::config("harvester.model", "no analytic law for the logistic model"));
        }
        EhModel::IdealLinear { .. } => None,
    };

    let law = law_or_none(s, ch.kappa, delta, ch.antennas, eta * rho)?;
    let (mean, var) = match &law {
        Some(l) => l.moments()?,
        None => {
            let pilot = run_mc(&mc_config(cfg, s, h.ideal()?, rho, 10_000)?)?;
            (pilot.mean, pilot.variance)
        }
    };
    let top = if var > 0.0 { mean + 6.0 * var.sqrt() } else { 2.0 * mean.max(f64::MIN_POSITIVE) };
    let grid: Vec<f64> = (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect();

    let mut csv = Csv::new(name, &["x_mw", "analytic", "empirical"]);
    base_meta(&mut csv, cfg);
    channel_meta(&mut csv, cfg)?;
    csv.meta("strategy", s).meta("samples", sec.samples).meta("eta", eta).meta("rho_mw", rho);

    let mut mc = mc_config(cfg, s, model, rho, sec.samples)?;
    if cumulative {
        let mut xs = sample_harvest(&mc)?;
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        for &x in &grid {
            let analytic = match (&law, saturation) {
                (None, _) => f64::NAN,
                (Some(l), None) => l.cdf(x)?,
                (Some(l), Some((w1, w2))) => saturated_cdf(l, eta, w1, w2, x)?,
            };
            let emp = xs.partition_point(|v| *v <= x) as f64 / n;
            csv.push(vec![x.into(), analytic.into(), emp.into()]);
        }
    } else {
        mc.bins = sec.bins.unwrap_or(wetsim::mc::DEFAULT_BINS);
        let st = run_mc(&mc)?;
        let dens = st.histogram.density();
        let hist = &st.histogram;
        let width = (hist.hi - hist.lo) / dens.len() as f64;
        for &x in &grid {
            let analytic = match &law {
                Some(l) => match l.pdf(x) {
                    Ok(v) => v,
                    Err(Error::Capability(_)) => f64::NAN,
                    Err(e) => return Err(e.into()),
                },
                None => f64::NAN,
            };
            let emp = if x < hist.lo || x > hist.hi {
                0.0
            } else {
                dens[(((x - hist.lo) / width) as usize).min(dens.len() - 1)]
            };
            csv.push(vec![x.into(), analytic.into(), emp.into()]);
        }
    }
    Ok(csv)
}

fn cmd_outage(cfg: &RunConfig) -> Result<Csv, CliError> {
    let sec = require(&cfg.outage, "outage")?;
    let strategies = parse_strategies(&sec.strategies, "outage.strategies")?;
    let thresholds = sec.thresholds.points("outage.thresholds")?;
    let ch = cfg.channel()?;
    let delta = ch.matrix()?.delta();
    let h = cfg.harvester()?;
    let eta = h.eta()?;
    let rho = cfg.rho()?;

    let mut csv = Csv::new("outage", &["xi_th", "xi_th_mw", "strategy", "analytic_outage", "empirical_outage"]);
    base_meta(&mut csv, cfg);
    channel_meta(&mut csv, cfg)?;
    csv.meta("samples", sec.samples).meta("eta", eta).meta("rho_mw", rho);
    let mut per_strategy = Vec::new();
    for &s in &strategies {
        let law = law_or_none(s, ch.kappa, delta, ch.antennas, eta * rho)?;
        let mut mc = mc_config(cfg, s, h.ideal()?, rho, sec.samples)?;
        mc.thresholds = thresholds.iter().map(|(_, mw)| eta * mw).collect();
        let st = run_mc(&mc)?;
        per_strategy.push((s, law, st));
    }
    for (i, (raw, mw)) in thresholds.iter().enumerate() {
        for (s, law, st) in &per_strategy {
            let analytic = match law {
                Some(l) => energy_outage(l, *mw, eta)?,
                None => f64::NAN,
            };
            csv.push(vec![(*raw).into(), (*mw).into(), s.name().into(), analytic.into(), st.outage_at[i].1.into()]);
        }
    }
    Ok(csv)
}

fn cmd_avg_harvest(cfg: &RunConfig) -> Result<Csv, CliError> {
    let sec = require(&cfg.avg_harvest, "avg_harvest")?;
    let strategies = parse_strategies(&sec.strategies, "avg_harvest.strategies")?;
    let rhos = sec.rho.points("avg_harvest.rho")?;
    let ch = cfg.channel()?;
    let delta = ch.matrix()?.delta();
    let h = cfg.harvester()?;
    if h.model != ModelKind::Piecewise {
        return Err(CliError::config("harvester.model", "avg-harvest needs the piecewise model"));
    }
    let piecewise = h.model()?;
    let params = PiecewiseParams::from_model(&piecewise)?;
    let ideal = h.ideal()?;
    let logistic = h.logistic().map_err(|e| CliError::config("harvester", e))?;

    let mut csv = Csv::new(
        "avg-harvest",
        &[
            "rho",
            "rho_mw",
            "strategy",
            "analytic_piecewise",
            "analytic_ideal",
            "mc_ideal",
            "mc_piecewise",
            "mc_logistic",
            "se_piecewise",
        ],
    );
    base_meta(&mut csv, cfg);
    channel_meta(&mut csv, cfg)?;
    csv.meta("samples", sec.samples).meta("eta", params.eta).meta("w1_mw", params.w1).meta("w2_mw", params.w2);

    for &s in &strategies {
        // ideal mean is linear in ϱ: one law at unit gain
        let unit_mean = match law_or_none(s, ch.kappa, delta, ch.antennas, params.eta)? {
            Some(l) => l.moments()?.0,
            None => f64::NAN,
        };
        for &(raw, rho) in &rhos {
            if !(rho > 0.0) {
                return Err(CliError::config("avg_harvest.rho", "link gains must be positive"));
            }
            let analytic = match avg_harvest(s, ch.kappa, delta, ch.antennas, rho, &params) {
                Ok(v) => v,
                Err(Error::Capability(_)) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            let mi = run_mc(&mc_config(cfg, s, ideal, rho, sec.samples)?)?;
            let mp = run_mc(&mc_config(cfg, s, piecewise, rho, sec.samples)?)?;
            let ml = run_mc(&mc_config(cfg, s, logistic, rho, sec.samples)?)?;
            csv.push(vec![
                raw.into(),
                rho.into(),
                s.name().into(),
                analytic.into(),
                (unit_mean * rho).into(),
                mi.mean.into(),
                mp.mean.into(),
                ml.mean.into(),
                mp.se_mean.into(),
            ]);
        }
    }
    Ok(csv)
}

fn multiuser_rows(csv: &mut Csv, sweep: &str, r: &MultiUserStats) {
    for o in &r.outcomes {
        csv.push(vec![
            sweep.into(),
            r.n_users.into(),
            r.m_antennas.into(),
            o.strategy.name().into(),
            o.avg_energy.into(),
            o.se_energy.into(),
            o.outage.into(),
            o.se_outage.into(),
            o.fairness_std.into(),
            linear_to_dbm(o.fairness_std).into(),
            r.placements.into(),
            r.draws_per_placement.into(),
        ]);
    }
}

/// Runs the strategies of `base` with their own sample budgets: the
/// beamforming search gets the reduced `aa_csi_*` counts.
fn run_split(base: &ScenarioConfig, strategies: &[StrategyId], aa: (usize, usize)) -> Result<Vec<MultiUserStats>, CliError> {
    let mut out = Vec::new();
    let cheap: Vec<StrategyId> = strategies.iter().copied().filter(|s| *s != StrategyId::AaCsi).collect();
    if !cheap.is_empty() {
        out.push(multiuser_run(&ScenarioConfig { strategies: cheap, ..base.clone() })?);
    }
    if strategies.contains(&StrategyId::AaCsi) {
        out.push(multiuser_run(&ScenarioConfig {
            strategies: vec![StrategyId::AaCsi],
            placements: aa.0,
            draws_per_placement: aa.1,
            ..base.clone()
        })?);
    }
    Ok(out)
}

fn cmd_multiuser(cfg: &RunConfig) -> Result<Csv, CliError> {
    let sec = require(&cfg.multiuser, "multiuser")?;
    let strategies = parse_strategies(&sec.strategies, "multiuser.strategies")?;
    let model = cfg.harvester()?.model()?;
    let base = ScenarioConfig { strategies: strategies.clone(), ..sec.scenario(model, cfg.seed, cfg.workers()) };
    base.validate()?;
    let aa = (sec.aa_csi_placements.unwrap_or(sec.placements), sec.aa_csi_draws.unwrap_or(sec.draws));
    if sec.users.is_empty() || sec.fairness_antennas.is_empty() {
        return Err(CliError::config("multiuser", "`users` and `fairness_antennas` must be non-empty"));
    }

    let mut csv = Csv::new(
        "multiuser",
        &[
            "sweep",
            "users",
            "m",
            "strategy",
            "avg_energy_mw",
            "se_energy_mw",
            "outage",
            "se_outage",
            "fairness_std_mw",
            "fairness_std_dbm",
            "placements",
            "draws",
        ],
    );
    base_meta(&mut csv, cfg);
    csv.meta("placements", sec.placements)
        .meta("draws", sec.draws)
        .meta("aa_csi_placements", aa.0)
        .meta("aa_csi_draws", aa.1)
        .meta("outage_threshold_mw", base.outage_threshold);

    for &users in &sec.users {
        let sc = ScenarioConfig { n_users: users, ..base.clone() };
        for r in run_split(&sc, &strategies, aa)? {
            multiuser_rows(&mut csv, "users", &r);
        }
    }
    for &m in &sec.fairness_antennas {
        let sc = ScenarioConfig { n_users: sec.fairness_users, m_antennas: m, ..base.clone() };
        for r in run_split(&sc, &strategies, aa)? {
            multiuser_rows(&mut csv, "antennas", &r);
        }
    }
    Ok(csv)
}

/// Column values of `csv` as cells; test helper.
pub fn column<'a>(csv: &'a Csv, name: &str) -> Vec<&'a Cell> {
    let i = csv.column(name).expect("known column");
    csv.rows.iter().map(|r| &r[i]).collect()
}

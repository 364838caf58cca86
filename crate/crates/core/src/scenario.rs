//! Timed evolution scenarios: initial excitations, free evolution under the
//! FST chain and instantaneous events (X flips, projective measurements).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{synthesize, ChainParams, ChainSpec};
use crate::error::{FstError, Result};
use crate::fermion::{FreeFermionOp, SpectralPropagator};
use crate::state::{FockState, OccupationSubset};

/// Largest sector dimension handled by the sparse evolution.
pub const MAX_SECTOR_STATES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Instantaneous pi flip of one qubit.
    XFlip,
    /// Projective measurement of one qubit (seeded draw).
    Measure,
    /// Marks a time to evolve to; no action.
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Time in units of `tau`.
    pub t: f64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
}

fn default_tau() -> f64 {
    1.0
}

fn default_steps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_sites: usize,
    pub theta: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    pub excitations: OccupationSubset,
    #[serde(default)]
    pub events: Vec<Event>,
    /// End time in units of `tau`; defaults to the last event time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Grid points per `tau`.
    #[serde(default = "default_steps")]
    pub steps_per_tau: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn new(n_sites: usize, theta: f64, excitations: &[usize]) -> Result<Self> {
        Ok(Scenario {
            n_sites,
            theta,
            tau: 1.0,
            excitations: OccupationSubset::new(excitations.to_vec())?,
            events: Vec::new(),
            t_end: None,
            steps_per_tau: default_steps(),
            seed: 0,
        })
    }

    pub fn with_event(mut self, t: f64, kind: EventKind, site: Option<usize>) -> Self {
        self.events.push(Event { t, kind, site });
        self
    }

    pub fn until(mut self, t_end: f64) -> Self {
        self.t_end = Some(t_end);
        self
    }

    pub fn end_time(&self) -> f64 {
        self.t_end
            .unwrap_or_else(|| self.events.iter().map(|e| e.t).fold(0.0, f64::max))
    }

    pub fn validate(&self) -> Result<()> {
        ChainSpec::with_tau(self.n_sites, self.theta, self.tau)?;
        if self.steps_per_tau == 0 {
            return Err(FstError::invalid("steps_per_tau must be positive"));
        }
        let mut last = 0.0;
        for (k, e) in self.events.iter().enumerate() {
            if !(e.t >= last) {
                return Err(FstError::invalid(format!(
                    "event {k}: time {} precedes the previous event",
                    e.t
                )));
            }
            last = e.t;
            match (e.kind, e.site) {
                (EventKind::Continue, _) => {}
                (_, Some(s)) if (1..=self.n_sites).contains(&s) => {}
                (kind, site) => {
                    return Err(FstError::invalid(format!(
                        "event {k}: {kind:?} needs a site in 1..={}, got {site:?}",
                        self.n_sites
                    )));
                }
            }
        }
        if !(self.end_time() >= last) {
            return Err(FstError::invalid("t_end precedes the last event"));
        }
        if let Some(&s) = self.excitations.sites().last() {
            if s > self.n_sites {
                return Err(FstError::invalid(format!(
                    "excitation at site {s} outside the chain"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub t: f64,
    pub site: usize,
    pub outcome: bool,
    pub probability_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    /// Grid times in seconds.
    pub times: Vec<f64>,
    /// `populations[k][n]` is the occupation of site `n+1` at `times[k]`.
    /// At an event time the value is taken just before the event.
    pub populations: Vec<Vec<f64>>,
    pub measurements: Vec<MeasurementRecord>,
    pub params: ChainParams,
}

impl ScenarioResult {
    /// Populations at the grid point closest to `t` (seconds).
    pub fn populations_at(&self, t: f64) -> &[f64] {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.populations[k]
    }

    /// CSV with header `t,p_1,...,p_N`.
    pub fn to_csv(&self) -> String {
        let n = self.params.n_sites();
        let mut out = String::from("t");
        for s in 1..=n {
            out.push_str(&format!(",p_{s}"));
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.populations) {
            out.push_str(&crate::io::fmt_f64(*t));
            for p in row {
                out.push(',');
                out.push_str(&crate::io::fmt_f64(*p));
            }
            out.push('\n');
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k.min(n - k)).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult> {
    s.validate()?;
    let n = s.n_sites;
    let k = s.excitations.len();
    // flips change the excitation number by one at most per event
    let worst = (0..=n)
        .filter(|m| m.abs_diff(k) <= s.events.len())
        .map(|m| binomial(n, m))
        .fold(1.0, f64::max);
    if worst > MAX_SECTOR_STATES as f64 {
        return Err(FstError::SizeGuard {
            what: "scenario sector",
            n: worst as usize,
            limit: MAX_SECTOR_STATES,
        });
    }
    let params = synthesize(&ChainSpec::with_tau(n, s.theta, s.tau)?)?;
    let spectral = SpectralPropagator::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);

    let t_end = s.end_time();
    let steps = (t_end * s.steps_per_tau as f64).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|j| j as f64 / s.steps_per_tau as f64)
        .collect();

    let mut anchor = FockState::from_occupation(n, &s.excitations)?;
    let mut anchor_t = 0.0;
    let mut next_event = 0;
    let mut times = Vec::with_capacity(grid.len());
    let mut populations = Vec::with_capacity(grid.len());
    let mut measurements = Vec::new();
    let eps = 1e-9;

    let evolve = |psi: &FockState, dt: f64| -> Result<FockState> {
        if dt <= 0.0 {
            return Ok(psi.clone());
        }
        FreeFermionOp::from(spectral.at(dt * s.tau)?).apply_fock(psi)
    };

    let mut run_events_until = |limit: f64,
                                anchor: &mut FockState,
                                anchor_t: &mut f64,
                                next_event: &mut usize|
     -> Result<()> {
        while *next_event < s.events.len() && s.events[*next_event].t <= limit + eps {
            let e = s.events[*next_event];
            *anchor = evolve(anchor, e.t - *anchor_t)?;
            *anchor_t = e.t;
            match e.kind {
                EventKind::XFlip => anchor.flip(e.site.unwrap_or(0)),
                EventKind::Measure => {
                    let site = e.site.unwrap_or(0);
                    let p1 = anchor.probability_one(site).clamp(0.0, 1.0);
                    let outcome = rng.random::<f64>() < p1;
                    anchor.collapse(site, outcome)?;
                    measurements.push(MeasurementRecord {
                        t: e.t * s.tau,
                        site,
                        outcome,
                        probability_one: p1,
                    });
                }
                EventKind::Continue => {}
            }
            *next_event += 1;
        }
        Ok(())
    };

    for &t in &grid {
        // events strictly before this grid point
        run_events_until(t - 2.0 * eps, &mut anchor, &mut anchor_t, &mut next_event)?;
        let psi = evolve(&anchor, t - anchor_t)?;
        times.push(t * s.tau);
        populations.push(psi.populations());
    }
    run_events_until(f64::INFINITY, &mut anchor, &mut anchor_t, &mut next_event)?;
    Ok(ScenarioResult {
        times,
        populations,
        measurements,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_excitation_refocuses_at_far_end() {
        let s = Scenario::new(7, PI / 2.0, &[1]).unwrap().until(2.0);
        let r = run_scenario(&s).unwrap();
        let half = r.populations_at(1.0);
        assert!((half[0] - 0.5).abs() < 1e-9 && (half[6] - 0.5).abs() < 1e-9);
        assert!((r.populations_at(2.0)[6] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vacuum_stays_empty() {
        let s = Scenario::new(5, 1.0, &[])
            .unwrap()
            .with_event(1.0, EventKind::Continue, None);
        let r = run_scenario(&s).unwrap();
        assert!(r.populations.iter().flatten().all(|p| p.abs() < 1e-15));
    }

    #[test]
    fn measurement_is_seeded() {
        let s = Scenario::new(5, PI / 2.0, &[1])
            .unwrap()
            .with_event(1.0, EventKind::Measure, Some(1))
            .until(2.0);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.measurements, b.measurements);
        assert!((a.measurements[0].probability_one - 0.5).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        let bad = Scenario::new(5, 1.0, &[1])
            .unwrap()
            .with_event(1.0, EventKind::XFlip, None);
        assert!(run_scenario(&bad).is_err());
        let unordered = Scenario::new(5, 1.0, &[1])
            .unwrap()
            .with_event(1.0, EventKind::Continue, None)
            .with_event(0.5, EventKind::Continue, None);
        assert!(unordered.validate().is_err());
        assert!(Scenario::from_json(r#"{"n_sites":3,"theta":1.0,"excitations":[4]}"#).is_err());
        let ok = Scenario::from_json(
            r#"{"n_sites":3,"theta":1.0,"excitations":[1],"events":[{"t":1.0,"kind":"x_flip","site":2}]}"#,
        )
        .unwrap();
        assert_eq!(ok.events[0].kind, EventKind::XFlip);
    }

    #[test]
    fn csv_header() {
        let r = run_scenario(&Scenario::new(2, 1.0, &[1]).unwrap().until(0.02)).unwrap();
        assert!(r.to_csv().starts_with("t,p_1,p_2\n"));
        assert_eq!(r.to_csv().lines().count(), 4);
    }
}

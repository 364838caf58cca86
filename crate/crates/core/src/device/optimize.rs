//! Theory-seeded pulses and a four-parameter optimizer over the flux
//! amplitudes and drive frequencies of both couplers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::device::metrics::{gate_metrics, GateMetrics};
use crate::device::propagate::{propagate, ComputationalFrame, PropagationOptions};
use crate::device::spec::{DeviceSpec, PulseConfig, GHZ, MHZ, NS};
use crate::device::swt::{
    amplitude_for_coupling, cycle_averaged_frequencies, theory_pulse, TheoryPulse,
};
use crate::error::{FstError, Result};

/// Pulse timing shared by all angles: the full-turn gate length fixes `J`,
/// other angles scale the flattop according to the three-site gate time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    /// Gate length at `theta = pi` (s).
    pub full_turn_time: f64,
    pub rise_time: f64,
    pub sample_rate: f64,
    /// Upper bound on the flux amplitudes searched by the seed.
    pub max_amplitude: f64,
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape {
            full_turn_time: 212.0 * NS,
            rise_time: 2.0 * NS,
            sample_rate: 2.4e9,
            max_amplitude: 0.2,
        }
    }
}

impl PulseShape {
    /// Sideband coupling implied by the full-turn gate length.
    pub fn coupling(&self) -> f64 {
        PI / (2f64.sqrt() * (self.full_turn_time - 4.0 * self.rise_time))
    }
}

/// Points per drive period used for cycle-averaged dressed frequencies.
pub const AVERAGING_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPulse {
    pub config: PulseConfig,
    pub coupling: f64,
    pub theory: TheoryPulse,
    /// Dressed qubit frequencies averaged over the drive cycle (rad/s).
    pub averaged_frequencies: [f64; 3],
}

/// Amplitudes matching the sideband coupling to `J`, drive frequencies
/// placing the outer qubits `Delta` above the middle one in the rotating frame.
pub fn seed_pulse(spec: &DeviceSpec, theta: f64, shape: &PulseShape) -> Result<SeedPulse> {
    spec.validate()?;
    let j = shape.coupling();
    let theory = theory_pulse(theta, j)?;
    let limit = |c: usize| shape.max_amplitude.min(0.499 - spec.phi_dc[c].abs());
    let amplitude = [
        amplitude_for_coupling(spec, 0, j, limit(0))?,
        amplitude_for_coupling(spec, 1, j, limit(1))?,
    ];
    let w = cycle_averaged_frequencies(spec, amplitude, AVERAGING_POINTS)?;
    let config = PulseConfig {
        amplitude,
        drive_freq: [w[0] - w[1] - theory.delta, w[2] - w[1] - theory.delta],
        rise_time: shape.rise_time,
        gate_time: theory.tau + 4.0 * shape.rise_time,
        sample_rate: shape.sample_rate,
    };
    config.validate(spec)?;
    Ok(SeedPulse {
        config,
        coupling: j,
        theory,
        averaged_frequencies: w,
    })
}

/// Rotating-frame detunings realized by a pulse against the ideal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetuningTracking {
    pub theory: f64,
    /// Outer-minus-middle detunings of bonds 1-2 and 2-3 (rad/s).
    pub effective: [f64; 2],
    /// `|effective - theory| / max(|theory|, J)`.
    pub relative: [f64; 2],
    pub passed: bool,
}

pub const DETUNING_TRACKING_TOL: f64 = 0.2;

pub fn detuning_tracking(
    spec: &DeviceSpec,
    cfg: &PulseConfig,
    theta: f64,
    j: f64,
) -> Result<DetuningTracking> {
    let theory = theory_pulse(theta, j)?.delta;
    let w = cycle_averaged_frequencies(spec, cfg.amplitude, AVERAGING_POINTS)?;
    let effective = [
        w[0] - w[1] - cfg.drive_freq[0],
        w[2] - w[1] - cfg.drive_freq[1],
    ];
    let scale = theory.abs().max(j);
    let relative = effective.map(|d| (d - theory).abs() / scale);
    Ok(DetuningTracking {
        theory,
        effective,
        relative,
        passed: relative.iter().all(|r| *r <= DETUNING_TRACKING_TOL),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMethod {
    #[default]
    Bfgs,
    NelderMead,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeOptions {
    pub method: OptimizerMethod,
    pub max_evaluations: usize,
    /// Relative forward-difference step per parameter.
    pub fd_step: f64,
    /// Stop once the infidelity drops below this value.
    pub target_infidelity: f64,
    pub propagation: PropagationOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            method: OptimizerMethod::Bfgs,
            max_evaluations: 200,
            fd_step: 1e-4,
            target_infidelity: 1e-3,
            propagation: PropagationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub eval: usize,
    pub infidelity: f64,
    pub leakage: f64,
    pub phi_a1: f64,
    pub phi_a2: f64,
    /// Drive frequencies in GHz.
    pub wd1: f64,
    pub wd2: f64,
    pub best_infidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub config: PulseConfig,
    pub metrics: GateMetrics,
    pub initial_metrics: GateMetrics,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
    pub reached_target: bool,
    pub budget_exhausted: bool,
}

impl OptimizeResult {
    pub fn trace_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .trace
            .iter()
            .map(|r| {
                vec![
                    r.eval as f64,
                    r.infidelity,
                    r.leakage,
                    r.phi_a1,
                    r.phi_a2,
                    r.wd1,
                    r.wd2,
                    r.best_infidelity,
                ]
            })
            .collect();
        crate::io::csv_table(
            &[
                "eval",
                "infidelity",
                "leakage",
                "phiA1",
                "phiA2",
                "wd1",
                "wd2",
                "best_infidelity",
            ],
            &rows,
        )
    }
}

// scaled coordinates: amplitudes in 0.01 flux quanta, frequencies in MHz
const SCALE: [f64; 4] = [0.01, 0.01, MHZ, MHZ];

struct Objective<'a> {
    spec: &'a DeviceSpec,
    base: PulseConfig,
    theta: f64,
    frame: ComputationalFrame,
    opts: OptimizeOptions,
    trace: Vec<TraceRow>,
    best: Option<(f64, PulseConfig, GateMetrics)>,
}

struct BudgetExhausted;

impl Objective<'_> {
    fn config(&self, u: &[f64; 4]) -> PulseConfig {
        let mut cfg = self.base.clone();
        for c in 0..2 {
            let hi = 0.499 - self.spec.phi_dc[c].abs();
            cfg.amplitude[c] = (u[c] * SCALE[c]).clamp(0.0, hi);
            cfg.drive_freq[c] = u[2 + c] * SCALE[2 + c];
        }
        cfg
    }

    fn remaining(&self) -> usize {
        self.opts.max_evaluations.saturating_sub(self.trace.len())
    }

    fn done(&self) -> bool {
        self.best
            .as_ref()
            .is_some_and(|b| b.0 < self.opts.target_infidelity)
    }

    fn eval(&mut self, u: &[f64; 4]) -> std::result::Result<f64, BudgetExhausted> {
        if self.remaining() == 0 || self.done() {
            return Err(BudgetExhausted);
        }
        let cfg = self.config(u);
        let metrics = propagate(self.spec, &cfg, &self.frame, &self.opts.propagation)
            .and_then(|p| gate_metrics(&p, self.theta))
            .ok();
        let f = metrics.as_ref().map_or(1.0, |m| m.infidelity);
        if let Some(m) = metrics {
            if self.best.as_ref().is_none_or(|b| f < b.0) {
                self.best = Some((f, cfg.clone(), m.clone()));
            }
            let best_infidelity = self.best.as_ref().map_or(f, |b| b.0);
            self.trace.push(TraceRow {
                eval: self.trace.len() + 1,
                infidelity: f,
                leakage: m.leakage,
                phi_a1: cfg.amplitude[0],
                phi_a2: cfg.amplitude[1],
                wd1: cfg.drive_freq[0] / GHZ,
                wd2: cfg.drive_freq[1] / GHZ,
                best_infidelity,
            });
        } else {
            let best_infidelity = self.best.as_ref().map_or(f, |b| b.0);
            self.trace.push(TraceRow {
                eval: self.trace.len() + 1,
                infidelity: f,
                leakage: f64::NAN,
                phi_a1: cfg.amplitude[0],
                phi_a2: cfg.amplitude[1],
                wd1: cfg.drive_freq[0] / GHZ,
                wd2: cfg.drive_freq[1] / GHZ,
                best_infidelity,
            });
        }
        Ok(f)
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64; 4], a: f64, d: &[f64; 4]) -> [f64; 4] {
    [0, 1, 2, 3].map(|i| x[i] + a * d[i])
}

fn gradient(
    obj: &mut Objective,
    u: &[f64; 4],
    f0: f64,
) -> std::result::Result<[f64; 4], BudgetExhausted> {
    let mut g = [0.0; 4];
    for i in 0..4 {
        let h = obj.opts.fd_step * u[i].abs().max(1.0);
        let mut v = *u;
        v[i] += h;
        g[i] = (obj.eval(&v)? - f0) / h;
    }
    Ok(g)
}

/// Largest step (scaled units) a single line search may take.
const MAX_STEP: f64 = 2.0;

fn run_bfgs(
    obj: &mut Objective,
    u0: [f64; 4],
    f0: f64,
) -> std::result::Result<(), BudgetExhausted> {
    let (mut u, mut f) = (u0, f0);
    let mut g = gradient(obj, &u, f)?;
    let mut hinv = [[0.0; 4]; 4];
    for (i, row) in hinv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    loop {
        let mut d = [0, 1, 2, 3].map(|i| -dot(&hinv[i], &g));
        if dot(&d, &g) >= 0.0 {
            d = g.map(|x| -x);
            hinv = [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ];
        }
        let norm = dot(&d, &d).sqrt();
        if norm == 0.0 {
            return Ok(());
        }
        let mut alpha = (MAX_STEP / norm).min(1.0);
        let slope = dot(&d, &g);
        let (u_new, f_new) = loop {
            let v = axpy(&u, alpha, &d);
            let fv = obj.eval(&v)?;
            if fv <= f + 1e-4 * alpha * slope {
                break (v, fv);
            }
            alpha *= 0.3;
            if alpha * norm < 1e-6 {
                return Ok(());
            }
        };
        let g_new = gradient(obj, &u_new, f_new)?;
        let s = [0, 1, 2, 3].map(|i| u_new[i] - u[i]);
        let y = [0, 1, 2, 3].map(|i| g_new[i] - g[i]);
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            let hy = [0, 1, 2, 3].map(|i| dot(&hinv[i], &y));
            let yhy = dot(&y, &hy);
            let mut next = hinv;
            for i in 0..4 {
                for k in 0..4 {
                    next[i][k] +=
                        (sy + yhy) * s[i] * s[k] / (sy * sy) - (hy[i] * s[k] + s[i] * hy[k]) / sy;
                }
            }
            hinv = next;
        }
        (u, f, g) = (u_new, f_new, g_new);
    }
}

fn run_nelder_mead(
    obj: &mut Objective,
    u0: [f64; 4],
    f0: f64,
) -> std::result::Result<(), BudgetExhausted> {
    let mut simplex = vec![(u0, f0)];
    for i in 0..4 {
        let mut v = u0;
        v[i] += 0.5;
        let fv = obj.eval(&v)?;
        simplex.push((v, fv));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[4].1 - simplex[0].1;
        if spread.abs() < 1e-12 {
            return Ok(());
        }
        let centroid = [0, 1, 2, 3].map(|i| simplex[..4].iter().map(|p| p.0[i]).sum::<f64>() / 4.0);
        let worst = simplex[4];
        let toward = |t: f64| [0, 1, 2, 3].map(|i| centroid[i] + t * (worst.0[i] - centroid[i]));
        let r = toward(-1.0);
        let fr = obj.eval(&r)?;
        if fr < simplex[0].1 {
            let e = toward(-2.0);
            let fe = obj.eval(&e)?;
            simplex[4] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[3].1 {
            simplex[4] = (r, fr);
        } else {
            let c = if fr < worst.1 {
                toward(-0.5)
            } else {
                toward(0.5)
            };
            let fc = obj.eval(&c)?;
            if fc < worst.1.min(fr) {
                simplex[4] = (c, fc);
            } else {
                let best = simplex[0].0;
                for p in simplex.iter_mut().skip(1) {
                    let v = [0, 1, 2, 3].map(|i| best[i] + 0.5 * (p.0[i] - best[i]));
                    *p = (v, obj.eval(&v)?);
                }
            }
        }
    }
}

/// Minimize the infidelity over amplitudes and drive frequencies starting
/// from `initial`; gate and rise times stay fixed.
pub fn optimize_pulse(
    spec: &DeviceSpec,
    theta: f64,
    initial: &PulseConfig,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    initial.validate(spec)?;
    if opts.max_evaluations == 0 {
        return Err(FstError::invalid("the evaluation budget must be positive"));
    }
    let mut obj = Objective {
        spec,
        base: initial.clone(),
        theta,
        frame: ComputationalFrame::new(spec)?,
        opts: *opts,
        trace: Vec::new(),
        best: None,
    };
    let u0 = [
        initial.amplitude[0] / SCALE[0],
        initial.amplitude[1] / SCALE[1],
        initial.drive_freq[0] / SCALE[2],
        initial.drive_freq[1] / SCALE[3],
    ];
    let f0 = obj
        .eval(&u0)
        .map_err(|_| FstError::invalid("empty budget"))?;
    let initial_metrics =
        obj.best.as_ref().map(|b| b.2.clone()).ok_or_else(|| {
            FstError::Validation("the initial pulse could not be simulated".into())
        })?;
    let _ = match opts.method {
        OptimizerMethod::Bfgs => run_bfgs(&mut obj, u0, f0),
        OptimizerMethod::NelderMead => run_nelder_mead(&mut obj, u0, f0),
    };
    let (best, config, metrics) = obj.best.clone().expect("initial evaluation recorded");
    let reached_target = best < opts.target_infidelity;
    let config = if best < f0 { config } else { initial.clone() };
    Ok(OptimizeResult {
        config,
        metrics,
        initial_metrics,
        evaluations: obj.trace.len(),
        budget_exhausted: !reached_target && obj.trace.len() >= opts.max_evaluations,
        reached_target,
        trace: obj.trace,
    })
}

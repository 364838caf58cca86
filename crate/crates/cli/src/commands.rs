//! Implementations of the subcommands.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use fstchain::chain::{
    detuning_range, gate_time_bound, solve_gate_time, spectrum_check, ChainParams,
};
use fstchain::circuit::{
    build_decomposition, decomposition_distance, even_small_angle_asymptote, expected_gate_counts,
    speed_gain, AngleConvention, GateKind, DECOMPOSITION_CHECK_MAX_SITES,
};
use fstchain::device::spec::DeviceSpecFile;
use fstchain::device::{
    detuning_tracking, optimize_pulse, seed_pulse, zz_coupling, zz_scan, DeviceSpec,
    OptimizeOptions, OptimizerMethod, PropagationOptions, PulseConfig, PulseShape, GHZ, NS,
};
use fstchain::fermion::single_propagator;
use fstchain::gates;
use fstchain::io::{csv_table, fmt_f64};
use fstchain::protocols::{parity_measure, KernelMethod, Parity, ProtocolOptions};
use fstchain::scenario::{run_scenario, Scenario};
use fstchain::{synthesize as synthesize_chain, ChainSpec, StateVector, TimeScale, Tolerances};
use serde_json::{json, Value};

use crate::output::{config_err, CliError, Report};
use crate::parse::{clamp_theta, parse_angle_grid, parse_int_range, parse_sites};
use crate::pool::parallel_map;
use crate::{
    ChainArgs, Convention, DecomposeArgs, DeviceOptimizeArgs, EvolveArgs, Kernel, Optimizer,
    ParityArgs,
};
use crate::{ScenarioArgs, SpeedSweepArgs, ZzScanArgs};

type Res<T> = Result<T, CliError>;

const TWO_PI: f64 = 2.0 * PI;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn echo<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

/// Defaults overridden by the entries of a JSON object; unknown keys are rejected.
pub fn load_tolerances(path: Option<&Path>) -> Res<Tolerances> {
    let Some(path) = path else {
        return Ok(Tolerances::default());
    };
    let text = read(path)?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let Value::Object(map) = &v else {
        return Err(config_err(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    let known = serde_json::to_value(Tolerances::default()).expect("tolerances serialize");
    if let Some(k) = map.keys().find(|k| known.get(k.as_str()).is_none()) {
        return Err(config_err(format!(
            "{}: unknown tolerance field `{k}`",
            path.display()
        )));
    }
    serde_json::from_value(v).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn load_device(path: Option<&Path>) -> Res<DeviceSpec> {
    let Some(path) = path else {
        return Ok(DeviceSpec::reference());
    };
    let text = read(path)?;
    let file: DeviceSpecFile =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    Ok(DeviceSpec::try_from(file)?)
}

impl ChainArgs {
    fn spec(&self, warnings: &mut Vec<String>) -> Res<ChainSpec> {
        let theta = clamp_theta(self.theta, warnings);
        let scale = match (self.tau, self.j_max) {
            (_, Some(hz)) => TimeScale::JMax(TWO_PI * hz),
            (Some(t), None) => TimeScale::Tau(t),
            (None, None) => TimeScale::Tau(1.0),
        };
        Ok(ChainSpec::new(self.n, theta, scale)?)
    }
}

fn hz(values: &[f64]) -> Vec<f64> {
    values.iter().map(|x| x / TWO_PI).collect()
}

fn chain(args: &ChainArgs) -> Res<(Report, ChainSpec, ChainParams)> {
    let mut report = Report {
        input: echo(args),
        ..Default::default()
    };
    let spec = args.spec(&mut report.warnings)?;
    let params = synthesize_chain(&spec)?;
    Ok((report, spec, params))
}

pub fn synthesize(args: &ChainArgs, tol: &Tolerances) -> Res<Report> {
    let (mut report, spec, params) = chain(args)?;
    let range = detuning_range(&params, spec.theta);
    let bound = match spec.scale {
        TimeScale::JMax(j) => Some(gate_time_bound(spec.n_sites, j)),
        TimeScale::Tau(_) => None,
    };
    let asym = params.mirror_asymmetry();
    report.fail_if(asym > tol.mirror_symmetry, || {
        format!("mirror asymmetry {asym:e}")
    });
    let max_j = params.couplings.iter().cloned().fold(0.0, f64::max);
    report.result = json!({
        "n_sites": spec.n_sites,
        "theta": spec.theta,
        "tau_s": params.tau,
        "couplings_hz": hz(&params.couplings),
        "detunings_hz": hz(&params.detunings),
        "max_coupling_hz": max_j / TWO_PI,
        "mirror_asymmetry": asym,
        "detuning_range_hz": { "direct": range.direct / TWO_PI, "closed_form": range.closed_form / TWO_PI },
        "gate_time_bound_s": bound,
    });
    let couplings: Vec<Vec<f64>> = params
        .couplings
        .iter()
        .enumerate()
        .map(|(k, j)| vec![(k + 1) as f64, j / TWO_PI])
        .collect();
    let detunings: Vec<Vec<f64>> = params
        .detunings
        .iter()
        .enumerate()
        .map(|(k, d)| vec![(k + 1) as f64, d / TWO_PI])
        .collect();
    report.tables.push((
        "couplings.csv".into(),
        csv_table(&["bond", "coupling_hz"], &couplings),
    ));
    report.tables.push((
        "detunings.csv".into(),
        csv_table(&["site", "detuning_hz"], &detunings),
    ));
    Ok(report)
}

pub fn spectrum(args: &ChainArgs, tol: &Tolerances) -> Res<Report> {
    let (mut report, spec, params) = chain(args)?;
    let s = spectrum_check(&params, spec.theta, tol.spectrum_gap)?;
    let u = single_propagator(&params, params.tau)?;
    let transfer = u.transfer_structure_error(spec.theta);
    let unitarity = u.unitarity_error();
    report.fail_if(transfer > tol.transfer_structure, || {
        format!("transfer structure error {transfer:e}")
    });
    report.fail_if(unitarity > tol.unitarity, || {
        format!("unitarity error {unitarity:e}")
    });
    let rows: Vec<Vec<f64>> = (0..s.eigenvalues.len())
        .map(|k| {
            vec![
                k as f64,
                s.eigenvalues[k] / TWO_PI,
                s.parities[k] as f64,
                s.scaled_gaps.get(k).copied().unwrap_or(f64::NAN),
            ]
        })
        .collect();
    report.result = json!({
        "n_sites": spec.n_sites,
        "theta": spec.theta,
        "tau_s": params.tau,
        "eigenvalues_hz": hz(&s.eigenvalues),
        "parities": s.parities,
        "scaled_gaps": s.scaled_gaps,
        "transfer_phase": s.phi,
        "transfer_structure_error": transfer,
        "unitarity_error": unitarity,
    });
    report.tables.push((
        "spectrum.csv".into(),
        csv_table(
            &["index", "eigenvalue_hz", "mirror_parity", "scaled_gap"],
            &rows,
        ),
    ));
    Ok(report)
}

fn population_drift(populations: &[Vec<f64>]) -> f64 {
    let totals: Vec<f64> = populations.iter().map(|r| r.iter().sum()).collect();
    totals
        .iter()
        .map(|t| (t - totals[0]).abs())
        .fold(0.0, f64::max)
}

pub fn evolve(args: &EvolveArgs, tol: &Tolerances) -> Res<Report> {
    let (mut report, spec, params) = chain(&args.chain)?;
    report.input = echo(args);
    let sites = parse_sites(&args.excite).map_err(config_err)?;
    let mut sc = Scenario::new(spec.n_sites, spec.theta, &sites)?.until(args.t_end);
    sc.tau = params.tau;
    sc.steps_per_tau = args.steps;
    let r = run_scenario(&sc)?;
    let drift = population_drift(&r.populations);
    report.fail_if(drift > tol.norm, || {
        format!("excitation number drift {drift:e}")
    });
    report.result = json!({
        "n_sites": spec.n_sites,
        "theta": spec.theta,
        "tau_s": params.tau,
        "excitations": sites,
        "final_populations": r.populations.last(),
        "excitation_drift": drift,
    });
    report.tables.push(("populations.csv".into(), r.to_csv()));
    Ok(report)
}

pub fn scenario(args: &ScenarioArgs, seed: Option<u64>) -> Res<Report> {
    let text = read(&args.file)?;
    let mut sc: Scenario = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", args.file.display())))?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    sc.validate()?;
    let r = run_scenario(&sc)?;
    let mut measurements = String::from("t,site,outcome,probability_one\n");
    for m in &r.measurements {
        let _ = writeln!(
            measurements,
            "{},{},{},{}",
            fmt_f64(m.t),
            m.site,
            u8::from(m.outcome),
            fmt_f64(m.probability_one)
        );
    }
    let report = Report {
        input: json!({ "file": args.file, "scenario": sc }),
        result: json!({
            "tau_s": r.params.tau,
            "couplings_hz": hz(&r.params.couplings),
            "detunings_hz": hz(&r.params.detunings),
            "final_populations": r.populations.last(),
            "measurements": r.measurements,
        }),
        tables: vec![
            ("populations.csv".into(), r.to_csv()),
            ("measurements.csv".into(), measurements),
        ],
        ..Default::default()
    };
    Ok(report)
}

pub fn verify_mapping(args: &ChainArgs, tol: &Tolerances) -> Res<Report> {
    let (mut report, spec, params) = chain(args)?;
    let m = gates::verify_mapping(&params, spec.theta, tol.mapping)?;
    report.fail_if(!m.passed, || {
        format!("mapping distance {:e} above {:e}", m.distance, m.tolerance)
    });
    report.result = serde_json::to_value(&m).expect("report serializes");
    Ok(report)
}

fn convention(c: Convention) -> AngleConvention {
    match c {
        Convention::HalfAngle => AngleConvention::HalfAngle,
        Convention::Literal => AngleConvention::Literal,
    }
}

pub fn decompose(args: &DecomposeArgs, tol: &Tolerances) -> Res<Report> {
    let mut report = Report {
        input: echo(args),
        ..Default::default()
    };
    let theta = clamp_theta(args.theta, &mut report.warnings);
    let j_max = TWO_PI * args.j_max;
    let circuit = build_decomposition(args.n, theta, j_max)?;
    let distance = if args.n <= DECOMPOSITION_CHECK_MAX_SITES {
        let d = decomposition_distance(&circuit, theta, convention(args.convention))?;
        report.fail_if(!(d <= tol.z_layer_equivalence), || {
            format!("Z-layer distance {d:e}")
        });
        Some(d)
    } else {
        None
    };
    let (fswaps, iswaps) = (circuit.fswap_count(), circuit.iswap_count());
    let expected = expected_gate_counts(args.n);
    let t_fst = solve_gate_time(args.n, theta, j_max)?;
    let duration = circuit.total_duration();
    let t_iswap = PI / (2.0 * j_max);
    let mut gates = String::from("layer,kind,site_a,site_b,angle,duration_s\n");
    for (k, layer) in circuit.layers.iter().enumerate() {
        for g in layer {
            let (kind, angle) = match g.kind {
                GateKind::Iswap { angle } => ("iswap", Some(angle)),
                GateKind::Fswap => ("fswap", None),
                GateKind::Rz { angle } => ("rz", Some(angle)),
                GateKind::X => ("x", None),
                GateKind::HalfX => ("half_x", None),
                GateKind::HalfY => ("half_y", None),
            };
            let b = g.targets.get(1).map_or(String::new(), |t| t.to_string());
            let _ = writeln!(
                gates,
                "{k},{kind},{},{b},{},{}",
                g.targets[0],
                angle.map_or(String::new(), fmt_f64),
                fmt_f64(g.duration)
            );
        }
    }
    report.result = json!({
        "n_sites": args.n,
        "theta": theta,
        "layers": circuit.layers.len(),
        "fswap_count": fswaps,
        "iswap_count": iswaps,
        "expected_counts": { "fswap": expected.0, "iswap": expected.1 },
        "total_gates": fswaps + iswaps,
        "duration_s": duration,
        "duration_in_iswaps": duration / t_iswap,
        "fst_time_s": t_fst,
        "speed_gain": duration / t_fst,
        "z_layer_distance": distance,
    });
    report.fail_if((fswaps, iswaps) != expected, || {
        format!("gate counts {fswaps}+{iswaps}, expected {expected:?}")
    });
    report.tables.push(("gates.csv".into(), gates));
    Ok(report)
}

pub fn speed_sweep(args: &SpeedSweepArgs) -> Res<Report> {
    let mut report = Report {
        input: echo(args),
        ..Default::default()
    };
    let ns = parse_int_range(&args.n).map_err(config_err)?;
    let mut thetas = parse_angle_grid(&args.theta, args.points).map_err(config_err)?;
    for t in thetas.iter_mut() {
        *t = clamp_theta(*t, &mut report.warnings);
    }
    let grid: Vec<(usize, f64)> = ns
        .iter()
        .flat_map(|&n| thetas.iter().map(move |&t| (n, t)))
        .collect();
    // J_max = 1, so times in units of tau_iSWAP are t / (pi / 2)
    let gains = parallel_map(&grid, |&(n, t)| speed_gain(n, t, 1.0));
    let sqrt3 = 3f64.sqrt();
    // the floor is a large-chain statement; N = 4 dips to sqrt(12/5) at theta = pi/2
    const FLOOR_MIN_SITES: usize = 5;
    let mut rows = Vec::with_capacity(grid.len());
    let mut floor_violation: Option<(usize, f64, f64)> = None;
    for g in gains {
        let g = g?;
        if g.n_sites >= FLOOR_MIN_SITES
            && g.ratio < sqrt3 * (1.0 - 1e-12)
            && floor_violation.is_none()
        {
            floor_violation = Some((g.n_sites, g.theta, g.ratio));
        }
        let asym = if g.n_sites % 2 == 0 {
            even_small_angle_asymptote(g.n_sites)
        } else {
            f64::NAN
        };
        rows.push(vec![
            g.n_sites as f64,
            g.theta / PI,
            g.t_fst / (PI / 2.0),
            g.t_decomp / (PI / 2.0),
            g.ratio,
            sqrt3,
            2.0,
            asym,
        ]);
    }
    report.fail_if(floor_violation.is_some(), || {
        format!("ratio below sqrt(3) at (N, theta, ratio) = {floor_violation:?}")
    });
    let min = rows.iter().map(|r| r[4]).fold(f64::INFINITY, f64::min);
    report.result = json!({ "points": rows.len(), "min_ratio": min, "sqrt3_floor_holds": floor_violation.is_none() });
    let header = [
        "n",
        "theta_over_pi",
        "t_fst_over_tiswap",
        "t_decomp_over_tiswap",
        "ratio",
        "sqrt3_floor",
        "two_limit",
        "even_small_angle_asymptote",
    ];
    report
        .tables
        .push(("speed_gain.csv".into(), csv_table(&header, &rows)));
    Ok(report)
}

fn kernel(k: Kernel) -> KernelMethod {
    match k {
        Kernel::FstLift => KernelMethod::FstLift,
        Kernel::PairRotations => KernelMethod::PairRotations,
    }
}

pub fn parity(args: &ParityArgs, tol: &Tolerances, seed: u64) -> Res<Report> {
    let mut report = Report {
        input: echo(args),
        ..Default::default()
    };
    let n = args.n;
    if n == 0 {
        return Err(fstchain::FstError::invalid("the register needs at least one site").into());
    }
    let opts = ProtocolOptions {
        method: kernel(args.method),
        j_max: TWO_PI * args.j_max,
        ..Default::default()
    };
    let basis: Vec<usize> = (0..1usize << n).collect();
    let results = parallel_map(&basis, |&x| {
        parity_measure(&StateVector::basis(n, x), &opts)
    });
    let mut rows = Vec::with_capacity(basis.len());
    let mut agree = 0usize;
    let mut duration = (0.0, 0.0);
    for (x, r) in basis.iter().zip(results) {
        let r = r?;
        duration = (r.protocol_duration, r.duration_in_iswaps);
        let expected = Parity::of_weight(x.count_ones());
        let ok = r.inferred_parity == expected;
        agree += usize::from(ok);
        let even = |p: Parity| f64::from(u8::from(p == Parity::Even));
        rows.push(vec![
            *x as f64,
            x.count_ones() as f64,
            even(expected),
            r.left_ancilla_one_probability,
            even(r.inferred_parity),
            f64::from(u8::from(ok)),
        ]);
    }
    report.fail_if(agree != basis.len(), || {
        format!(
            "{} of {} basis states misclassified",
            basis.len() - agree,
            basis.len()
        )
    });
    report.tables.push((
        "parity_basis.csv".into(),
        csv_table(
            &[
                "index",
                "weight",
                "expected_even",
                "p_left_one",
                "inferred_even",
                "agrees",
            ],
            &rows,
        ),
    ));

    let ks: Vec<usize> = (0..args.random).collect();
    let random = parallel_map(&ks, |&k| {
        let psi = StateVector::random(n, seed.wrapping_add(k as u64));
        let p_even: f64 = psi
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(x, _)| x.count_ones() % 2 == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        parity_measure(&psi, &opts).map(|r| {
            let shots = r.sample_shots(args.shots, seed.wrapping_add(k as u64));
            (r.left_ancilla_one_probability, p_even, shots)
        })
    });
    let mut rrows = Vec::with_capacity(ks.len());
    let mut worst: f64 = 0.0;
    for (k, r) in ks.iter().zip(random) {
        let (p1, p_even, shots) = r?;
        worst = worst.max((p1 - p_even).abs());
        rrows.push(vec![
            *k as f64,
            p1,
            p_even,
            (p1 - p_even).abs(),
            shots as f64,
        ]);
    }
    report.fail_if(worst > tol.parity, || {
        format!("superposition deviation {worst:e}")
    });
    if args.random > 0 {
        report.tables.push((
            "parity_random.csv".into(),
            csv_table(
                &[
                    "state",
                    "p_left_one",
                    "p_even_exact",
                    "abs_diff",
                    "shots_one",
                ],
                &rrows,
            ),
        ));
    }
    report.result = json!({
        "n_sites": n,
        "basis_states": basis.len(),
        "agreement": agree as f64 / basis.len() as f64,
        "random_states": args.random,
        "max_superposition_deviation": worst,
        "protocol_duration_s": duration.0,
        "duration_in_iswaps": duration.1,
        "half_extended_length": (n + 2) as f64 / 2.0,
    });
    Ok(report)
}

pub fn device_optimize(args: &DeviceOptimizeArgs) -> Res<Report> {
    let mut report = Report {
        input: echo(args),
        ..Default::default()
    };
    let spec = load_device(args.device.as_deref())?;
    let initial = match &args.initial {
        Some(p) => {
            let text = read(p)?;
            Some(
                serde_json::from_str::<PulseConfig>(&text)
                    .map_err(|e| config_err(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let mut thetas = parse_angle_grid(&args.theta, args.points).map_err(config_err)?;
    for t in thetas.iter_mut() {
        *t = clamp_theta(*t, &mut report.warnings);
    }
    report.warnings.extend(spec.dispersive_warnings());
    let opts = OptimizeOptions {
        method: match args.method {
            Optimizer::Bfgs => OptimizerMethod::Bfgs,
            Optimizer::NelderMead => OptimizerMethod::NelderMead,
        },
        max_evaluations: args.budget,
        target_infidelity: args.target,
        propagation: PropagationOptions {
            substeps_per_sample: args.substeps,
            ..Default::default()
        },
        ..Default::default()
    };
    let shape = PulseShape::default();
    let runs = parallel_map(&thetas, |&theta| -> fstchain::Result<_> {
        let seed = seed_pulse(&spec, theta, &shape)?;
        let start = initial.clone().unwrap_or_else(|| seed.config.clone());
        let res = optimize_pulse(&spec, theta, &start, &opts)?;
        let tracking = detuning_tracking(&spec, &res.config, theta, seed.coupling)?;
        Ok((theta, seed, res, tracking))
    });
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        let (theta, seed, res, tracking) = run?;
        if let Some(limit) = args.require_infidelity {
            let inf = res.metrics.infidelity;
            report.fail_if(!(inf <= limit), || {
                format!("infidelity {inf:e} at theta = {theta} above {limit:e}")
            });
        }
        summary.push(vec![
            theta,
            theta / PI,
            res.initial_metrics.infidelity,
            res.metrics.infidelity,
            res.metrics.leakage,
            res.config.amplitude[0],
            res.config.amplitude[1],
            res.config.drive_freq[0] / GHZ,
            res.config.drive_freq[1] / GHZ,
            res.config.gate_time / NS,
            tracking.theory / TWO_PI,
            tracking.effective[0] / TWO_PI,
            tracking.effective[1] / TWO_PI,
            res.evaluations as f64,
        ]);
        entries.push(json!({
            "theta": theta,
            "trace_file": format!("trace_{k}.csv"),
            "seed": {
                "pulse": seed.config,
                "coupling_hz": seed.coupling / TWO_PI,
                "theory_detuning_hz": seed.theory.delta / TWO_PI,
                "theory_time_s": seed.theory.tau,
                "averaged_frequencies_hz": hz(&seed.averaged_frequencies),
            },
            "pulse": res.config,
            "initial_metrics": res.initial_metrics,
            "metrics": res.metrics,
            "evaluations": res.evaluations,
            "reached_target": res.reached_target,
            "budget_exhausted": res.budget_exhausted,
            "detuning_tracking": {
                "theory_hz": tracking.theory / TWO_PI,
                "effective_hz": hz(&tracking.effective),
                "relative": tracking.relative,
                "passed": tracking.passed,
            },
        }));
        report
            .tables
            .push((format!("trace_{k}.csv"), res.trace_csv()));
    }
    let header = [
        "theta",
        "theta_over_pi",
        "initial_infidelity",
        "infidelity",
        "leakage",
        "phiA1",
        "phiA2",
        "wd1",
        "wd2",
        "tau_final_ns",
        "delta_theory_hz",
        "delta_eff1_hz",
        "delta_eff2_hz",
        "evaluations",
    ];
    report
        .tables
        .push(("summary.csv".into(), csv_table(&header, &summary)));
    report.result = json!({ "device": spec, "runs": entries });
    Ok(report)
}

pub fn device_zz_scan(args: &ZzScanArgs) -> Res<Report> {
    let mut report = Report {
        input: echo(args),
        ..Default::default()
    };
    let spec = load_device(args.device.as_deref())?;
    let pair = usize::from(args.pair - 1);
    let scan = zz_scan(&spec, pair, args.lo, args.hi, args.points)?;
    let at_bias = zz_coupling(&spec, spec.phi_dc, pair)?;
    let mut csv = String::from("phi,zeta_hz,identified\n");
    for (p, z) in scan.phi.iter().zip(&scan.zeta) {
        let (v, ok) = z.map_or((f64::NAN, 0), |v| (v / TWO_PI, 1));
        let _ = writeln!(csv, "{},{},{ok}", fmt_f64(*p), fmt_f64(v));
    }
    report.result = json!({
        "pair": [pair + 1, pair + 2],
        "sign_changes": scan.sign_changes,
        "crossings": scan.crossings,
        "ambiguous_points": scan.ambiguous_points(),
        "zeta_at_bias_hz": at_bias / TWO_PI,
        "device": spec,
    });
    report.tables.push(("zz_scan.csv".into(), csv));
    Ok(report)
}

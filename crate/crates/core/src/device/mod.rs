//! Pulse-level model of three fixed-frequency transmons coupled through two
//! flux-modulated tunable couplers.

pub mod hamiltonian;
pub mod metrics;
pub mod optimize;
pub mod propagate;
pub mod spec;
pub mod swt;
pub mod zz;

pub use hamiltonian::{build_hamiltonian, FockBasis, StaticSpectrum};
pub use metrics::{block_metrics, gate_metrics, GateMetrics};
pub use optimize::{
    detuning_tracking, optimize_pulse, seed_pulse, OptimizeOptions, OptimizeResult,
    OptimizerMethod, PulseShape,
};
pub use propagate::{
    propagate, propagate_full, ComputationalFrame, Propagation, PropagationOptions,
};
pub use spec::{flux_to_frequency, pulse_envelope, DeviceSpec, PulseConfig, GHZ, MHZ, NS};
pub use swt::{
    numeric_coupling, sideband_coupling, swt_effective_params, theory_pulse, SwtParams, TheoryPulse,
};
pub use zz::{zz_coupling, zz_scan, ZzScan};

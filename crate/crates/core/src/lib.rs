//! Multimode quantum memory built from a common resonator coupled to a
//! waveguide through a switch and to a set of detuned mini-resonators.
//!
//! All numerics are generic over the scalar type (`f32` or `f64`) through
//! [`Real`]. The aliases at the crate root fix the scalar to `f64` (no
//! suffix) or `f32` (`32` suffix).

pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod real;
pub mod spectral;

pub use dynamics::{
    echo_metrics, find_switch_time, freq_domain_output, integrate, store_retrieve, EchoMetrics, EnergyLedger,
    SimulationResult, StoreRetrieveRun,
};
pub use eigen::{eigenfreqs, multiplet_base, revival_period, scan_merge, EigenReport, MergeScan, ScanRow};
pub use error::{Error, Result};
pub use model::{make_case, Case, ConfigFile, GaussianPulse, MemoryConfig, SwitchSchedule};
pub use optimize::{design, solve_f, solve_kappa, verify_plateau, DesignReport, PlateauMetrics};
pub use real::Real;
pub use spectral::{SpectralCurve, SpectrumKind};

pub use num_complex::Complex;

pub type MemoryConfig64 = MemoryConfig<f64>;
pub type GaussianPulse64 = GaussianPulse<f64>;
pub type SwitchSchedule64 = SwitchSchedule<f64>;
pub type SpectralCurve64 = SpectralCurve<f64>;
pub type EigenReport64 = EigenReport<f64>;
pub type DesignReport64 = DesignReport<f64>;
pub type SimulationResult64 = SimulationResult<f64>;

pub type MemoryConfig32 = MemoryConfig<f32>;
pub type GaussianPulse32 = GaussianPulse<f32>;
pub type SwitchSchedule32 = SwitchSchedule<f32>;
pub type SpectralCurve32 = SpectralCurve<f32>;
pub type EigenReport32 = EigenReport<f32>;
pub type DesignReport32 = DesignReport<f32>;
pub type SimulationResult32 = SimulationResult<f32>;

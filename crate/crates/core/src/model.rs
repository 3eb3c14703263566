//! Physical configuration of the resonator network, the input pulse and the
//! switch schedule of the waveguide coupling.
//!
//! All frequencies are offsets from the rotating-frame carrier and are
//! expressed in units where the detuning scale is typically `delta = 1`.
//! Times are in inverse frequency units.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize;
use crate::real::Real;

/// Parameter set of `N` mini-resonators coupled to one common resonator that
/// is in turn coupled to the waveguide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MemoryConfig<T> {
    /// Detuning scale.
    pub delta: T,
    /// Mini-resonator frequency offsets.
    pub offsets: Vec<T>,
    /// Relative couplings; the absolute coupling of mode `n` is `f * w_n`.
    pub coupling_weights: Vec<T>,
    pub f: T,
    /// Mini-resonator decay constants.
    pub gamma: Vec<T>,
    /// Common-resonator decay constant.
    pub gamma0: T,
    /// Waveguide coupling while the switch is on.
    pub kappa0: T,
}

/// One broken invariant reported by [`MemoryConfig::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// The two reference designs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Equal couplings `f * [1, 1, 1]`, target spectrum `[-4, -1, 1, 4]`.
    A,
    /// Tapered couplings `f * [0.8, 1, 0.8]`, target spectrum `[-3, -1, 1, 3]`.
    B,
}

impl Case {
    pub fn weights<T: Real>(self) -> [T; 3] {
        match self {
            Case::A => [T::one(), T::one(), T::one()],
            Case::B => [T::lit(0.8), T::one(), T::lit(0.8)],
        }
    }

    pub fn coupling<T: Real>(self) -> T {
        match self {
            Case::A => T::lit(1.119),
            Case::B => T::lit(1.038),
        }
    }

    /// Integer ratio of the outer to the inner storage eigenfrequency.
    pub fn ratio(self) -> u32 {
        match self {
            Case::A => 4,
            Case::B => 3,
        }
    }
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" | "A" => Ok(Case::A),
            "b" | "B" => Ok(Case::B),
            other => Err(Error::InvalidArgument(format!("unknown case `{other}`"))),
        }
    }
}

/// Reference configuration with `delta = 1`, no losses, and the on-state
/// coupling set by the flat-phase-delay condition.
pub fn make_case<T: Real>(case: Case) -> MemoryConfig<T> {
    let mut config = MemoryConfig::symmetric(T::one(), case.weights(), case.coupling(), T::zero());
    config.kappa0 = optimize::solve_kappa(&config).expect("reference cases satisfy the matching preconditions");
    config
}

fn symmetry_tol<T: Real>() -> T {
    T::epsilon() * T::lit(64.0)
}

impl<T: Real> MemoryConfig<T> {
    /// Three-resonator star with offsets `{-delta, 0, delta}` and no losses.
    pub fn symmetric(delta: T, weights: [T; 3], f: T, kappa0: T) -> Self {
        MemoryConfig {
            delta,
            offsets: vec![-delta, T::zero(), delta],
            coupling_weights: weights.to_vec(),
            f,
            gamma: vec![T::zero(); 3],
            gamma0: T::zero(),
            kappa0,
        }
    }

    /// Sets every mini-resonator decay constant to `gamma` and the common
    /// resonator decay constant to `gamma0`.
    pub fn with_losses(mut self, gamma: T, gamma0: T) -> Self {
        self.gamma = vec![gamma; self.offsets.len()];
        self.gamma0 = gamma0;
        self
    }

    pub fn with_f(mut self, f: T) -> Self {
        self.f = f;
        self
    }

    pub fn with_kappa0(mut self, kappa0: T) -> Self {
        self.kappa0 = kappa0;
        self
    }

    pub fn modes(&self) -> usize {
        self.offsets.len()
    }

    /// Absolute couplings `f_n = f * w_n`.
    pub fn couplings(&self) -> Vec<T> {
        self.coupling_weights.iter().map(|&w| self.f * w).collect()
    }

    pub fn is_lossless(&self) -> bool {
        self.gamma0 == T::zero() && self.gamma.iter().all(|&g| g == T::zero())
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_defect().is_none()
    }

    fn symmetry_defect(&self) -> Option<String> {
        if self.offsets.len() != 3 || self.coupling_weights.len() != 3 || self.gamma.len() != 3 {
            return Some(format!("expected 3 mini-resonators, got {}", self.offsets.len()));
        }
        let tol = symmetry_tol::<T>() * self.delta.abs().max(T::one());
        let close = |a: T, b: T| (a - b).abs() <= tol;
        if !(close(self.offsets[0], -self.delta) && close(self.offsets[1], T::zero()) && close(self.offsets[2], self.delta)) {
            return Some("offsets must be {-delta, 0, delta}".into());
        }
        let w = &self.coupling_weights;
        if (w[0] - w[2]).abs() > symmetry_tol::<T>() * w[0].abs().max(w[2].abs()).max(T::one()) {
            return Some("coupling weights w1 and w3 differ".into());
        }
        if !close(self.gamma[0], self.gamma[2]) {
            return Some("decay constants gamma1 and gamma3 differ".into());
        }
        None
    }

    pub fn require_symmetric(&self) -> Result<()> {
        match self.symmetry_defect() {
            Some(why) => Err(Error::Symmetry(why)),
            None => Ok(()),
        }
    }

    pub fn require_lossless(&self) -> Result<()> {
        if self.is_lossless() {
            Ok(())
        } else {
            Err(Error::NotLossless)
        }
    }

    /// Lists every broken invariant; empty iff the configuration is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &'static str, rule: &str| {
            out.push(Violation { field, rule: rule.to_string() });
        };
        let finite_nonneg = |x: T| x.is_finite() && x >= T::zero();

        if !(self.delta.is_finite() && self.delta > T::zero()) {
            push("delta", "must be finite and > 0");
        }
        if !finite_nonneg(self.f) {
            push("f", "must be finite and >= 0");
        }
        if !finite_nonneg(self.gamma0) {
            push("gamma0", "must be finite and >= 0");
        }
        if !finite_nonneg(self.kappa0) {
            push("kappa0", "must be finite and >= 0");
        }
        let n = self.offsets.len();
        if n == 0 {
            push("offsets", "at least one mini-resonator is required");
        }
        if self.coupling_weights.len() != n {
            push("coupling_weights", "length must match offsets");
        }
        if self.gamma.len() != n {
            push("gamma", "length must match offsets");
        }
        if self.offsets.iter().any(|x| !x.is_finite()) {
            push("offsets", "entries must be finite");
        }
        if !self.coupling_weights.iter().all(|&w| finite_nonneg(w)) {
            push("coupling_weights", "entries must be finite and >= 0");
        }
        if !self.gamma.iter().all(|&g| finite_nonneg(g)) {
            push("gamma", "entries must be finite and >= 0");
        }
        out
    }

    pub fn validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(violations.iter().map(ToString::to_string).collect()))
        }
    }

    /// Rescales every frequency-like parameter by `c`.
    pub fn scaled(&self, c: T) -> Self {
        MemoryConfig {
            delta: self.delta * c,
            offsets: self.offsets.iter().map(|&x| x * c).collect(),
            coupling_weights: self.coupling_weights.clone(),
            f: self.f * c,
            gamma: self.gamma.iter().map(|&x| x * c).collect(),
            gamma0: self.gamma0 * c,
            kappa0: self.kappa0 * c,
        }
    }
}

/// Gaussian input envelope `amplitude * exp(-(t - center)^2 / (2 sigma^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaussianPulse<T> {
    pub sigma: T,
    pub center: T,
    pub amplitude: Complex<T>,
}

impl<T: Real> GaussianPulse<T> {
    /// Pulse carrying unit energy.
    pub fn normalized(sigma: T, center: T) -> Self {
        let amp = (T::PI() * sigma * sigma).powf(T::lit(-0.25));
        GaussianPulse { sigma, center, amplitude: Complex::new(amp, T::zero()) }
    }

    pub fn scaled(self, c: T) -> Self {
        GaussianPulse { amplitude: self.amplitude * c, ..self }
    }

    pub fn eval(&self, t: T) -> Complex<T> {
        let x = (t - self.center) / self.sigma;
        self.amplitude * (-(x * x) / T::lit(2.0)).exp()
    }

    /// Analytic value of the integral of `|a_in|^2` over the whole line.
    pub fn energy(&self) -> T {
        self.amplitude.norm_sqr() * self.sigma * T::PI().sqrt()
    }

    pub fn peak_intensity(&self) -> T {
        self.amplitude.norm_sqr()
    }
}

/// Piecewise-constant waveguide coupling `k(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SwitchSchedule<T> {
    /// `(t_start, k)` pairs; each value holds until the next start time.
    pub segments: Vec<(T, T)>,
}

impl<T: Real> SwitchSchedule<T> {
    pub fn new(segments: Vec<(T, T)>) -> Result<Self> {
        let schedule = SwitchSchedule { segments };
        schedule.check()?;
        Ok(schedule)
    }

    pub fn constant(t_start: T, k: T) -> Self {
        SwitchSchedule { segments: vec![(t_start, k)] }
    }

    /// On until `t_off`, off for `hold`, then on again. A zero hold collapses
    /// to the always-on schedule.
    pub fn store_retrieve(t_start: T, kappa: T, t_off: T, hold: T) -> Result<Self> {
        if hold <= T::zero() {
            return Ok(Self::constant(t_start, kappa));
        }
        Self::new(vec![(t_start, kappa), (t_off, T::zero()), (t_off + hold, kappa)])
    }

    pub fn check(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Schedule("no segments".into()));
        }
        for w in self.segments.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Schedule("segment start times must be strictly increasing".into()));
            }
        }
        if self.segments.iter().any(|&(t, k)| !t.is_finite() || !k.is_finite() || k < T::zero()) {
            return Err(Error::Schedule("start times must be finite and k values finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn start(&self) -> T {
        self.segments[0].0
    }

    pub fn k_at(&self, t: T) -> T {
        self.segments
            .iter()
            .take_while(|&&(s, _)| s <= t)
            .last()
            .map_or(self.segments[0].1, |&(_, k)| k)
    }

    pub fn max_k(&self) -> T {
        self.segments.iter().fold(T::zero(), |m, &(_, k)| m.max(k))
    }

    /// Start of the last coupled segment that follows an uncoupled one, i.e.
    /// the on-demand readout instant.
    pub fn retrieval_start(&self) -> Option<T> {
        self.segments
            .windows(2)
            .filter(|w| w[0].1 == T::zero() && w[1].1 > T::zero())
            .map(|w| w[1].0)
            .last()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PulseSpec<T> {
    pub sigma: T,
    pub center: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScheduleSpec<T> {
    pub segments: Vec<[T; 2]>,
}

/// On-disk configuration document: the [`MemoryConfig`] keys at top level plus
/// optional `pulse` and `schedule` sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConfigFile<T> {
    #[serde(flatten)]
    pub config: MemoryConfig<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSpec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec<T>>,
}

impl<T: Real> ConfigFile<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile<T> =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config parse error: {e}")))?;
        let violations = file.config.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidConfig(violations.iter().map(ToString::to_string).collect()));
        }
        if let Some(p) = &file.pulse {
            if !(p.sigma > T::zero()) {
                return Err(Error::InvalidConfig(vec!["pulse.sigma: must be > 0".into()]));
            }
        }
        if file.schedule.is_some() {
            file.switch_schedule().transpose()?;
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn gaussian_pulse(&self) -> Option<GaussianPulse<T>> {
        self.pulse.map(|p| GaussianPulse::normalized(p.sigma, p.center))
    }

    pub fn switch_schedule(&self) -> Option<Result<SwitchSchedule<T>>> {
        self.schedule
            .as_ref()
            .map(|s| SwitchSchedule::new(s.segments.iter().map(|&[t, k]| (t, k)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_cases() {
        let a = make_case::<f64>(Case::A);
        assert_eq!(a.f, 1.119);
        assert_eq!(a.coupling_weights, vec![1.0, 1.0, 1.0]);
        assert_eq!(a.delta, 1.0);
        assert!((a.kappa0 - 7.256).abs() < 1e-3, "kappa0 = {}", a.kappa0);
        assert!(a.validate().is_empty());

        let b = make_case::<f64>(Case::B);
        assert_eq!(b.f, 1.038);
        assert_eq!(b.coupling_weights, vec![0.8, 1.0, 0.8]);
        assert!((b.kappa0 - 5.546).abs() < 1e-3, "kappa0 = {}", b.kappa0);
        assert!(b.validate().is_empty());
        assert!(b.is_symmetric() && b.is_lossless());
    }

    #[test]
    fn negative_f_is_reported() {
        let c = make_case::<f64>(Case::B).with_f(-1.0);
        let v = c.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "f");
    }

    #[test]
    fn length_mismatch_is_reported() {
        let mut c = make_case::<f64>(Case::B);
        c.gamma = vec![0.0, 0.0];
        let v = c.validate();
        assert!(v.iter().any(|v| v.field == "gamma" && v.rule.contains("length")));
    }

    #[test]
    fn asymmetric_configs_are_rejected() {
        let mut c = make_case::<f64>(Case::A);
        c.coupling_weights[0] = 0.9;
        assert!(matches!(c.require_symmetric(), Err(Error::Symmetry(_))));
        let mut c = make_case::<f64>(Case::A);
        c.offsets[1] = 0.1;
        assert!(!c.is_symmetric());
    }

    #[test]
    fn normalized_pulse_has_unit_energy() {
        let p = GaussianPulse::normalized(1.3_f64, 2.0);
        let n = 20_000;
        let (lo, hi) = (p.center - 8.0 * p.sigma, p.center + 8.0 * p.sigma);
        let h = (hi - lo) / n as f64;
        // composite Simpson
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * p.eval(lo + i as f64 * h).norm_sqr();
        }
        assert!((acc * h / 3.0 - 1.0).abs() < 1e-6);
        assert!((p.energy() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schedule_lookup_and_ordering() {
        let s = SwitchSchedule::new(vec![(0.0, 5.0), (3.0, 0.0), (7.0, 5.0)]).unwrap();
        assert_eq!(s.k_at(-1.0), 5.0);
        assert_eq!(s.k_at(2.999), 5.0);
        assert_eq!(s.k_at(3.0), 0.0);
        assert_eq!(s.k_at(10.0), 5.0);
        assert_eq!(s.retrieval_start(), Some(7.0));
        assert_eq!(SwitchSchedule::constant(0.0, 1.0).retrieval_start(), None);
        assert!(matches!(SwitchSchedule::new(vec![(0.0, 1.0), (0.0, 0.0)]), Err(Error::Schedule(_))));
        assert!(matches!(SwitchSchedule::new(vec![(0.0, -1.0)]), Err(Error::Schedule(_))));
    }

    #[test]
    fn config_file_roundtrip() {
        let text = r#"{
            "delta": 1.0, "offsets": [-1.0, 0.0, 1.0], "coupling_weights": [0.8, 1.0, 0.8],
            "f": 1.038, "gamma": [0.0, 0.0, 0.0], "gamma0": 0.0, "kappa0": 5.546,
            "pulse": {"sigma": 1.0, "center": 8.0},
            "schedule": {"segments": [[0.0, 5.546], [11.0, 0.0], [21.7, 5.546]]}
        }"#;
        let file = ConfigFile::<f64>::from_json(text).unwrap();
        assert_eq!(file.config.f, 1.038);
        assert_eq!(file.gaussian_pulse().unwrap().sigma, 1.0);
        assert_eq!(file.switch_schedule().unwrap().unwrap().segments.len(), 3);
        let again = ConfigFile::<f64>::from_json(&file.to_json()).unwrap();
        assert_eq!(again, file);

        let bad = text.replace("\"f\": 1.038", "\"f\": -2");
        assert!(matches!(ConfigFile::<f64>::from_json(&bad), Err(Error::InvalidConfig(_))));
    }
}

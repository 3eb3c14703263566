//! Frequency-domain response of the memory seen from the waveguide.
//!
//! The output field convention is `a_out = sqrt(k) a - a_in`, for which the
//! reflection coefficient reads
//!
//! ```text
//! S(w) = (k - g0 - 2 chi(w) + 2 i w) / (k + g0 + 2 chi(w) - 2 i w)
//! ```
//!
//! with the mini-resonator self-energy `chi(w) = sum f_n^2 / (g_n/2 + i (D_n - w))`.
//! The opposite convention (`a_out = a_in - sqrt(k) a`) only flips the global
//! sign; [`s11_lossless`] is written in that convention.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::eigen::char_poly_storage;
use crate::error::{Error, Result};
use crate::model::MemoryConfig;
use crate::real::Real;

const DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Chi,
    S,
    S11,
    Tau,
    Efficiency,
    NoiseGain,
}

impl SpectrumKind {
    /// Kinds whose values are real-valued.
    pub fn is_real(self) -> bool {
        matches!(self, SpectrumKind::Tau | SpectrumKind::Efficiency | SpectrumKind::NoiseGain)
    }
}

/// Response sampled on an explicit, strictly increasing frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectralCurve<T> {
    pub omega_grid: Vec<T>,
    pub values: Vec<Complex<T>>,
    pub kind: SpectrumKind,
}

impl<T: Real> SpectralCurve<T> {
    /// Evaluates `kind` at every grid point. The first failing point aborts the
    /// whole curve.
    pub fn evaluate(kind: SpectrumKind, grid: &[T], config: &MemoryConfig<T>, k: T) -> Result<Self> {
        check_grid(grid)?;
        let real = |x: T| Complex::new(x, T::zero());
        let values = grid
            .iter()
            .map(|&w| match kind {
                SpectrumKind::Chi => chi(w, config),
                SpectrumKind::S => transfer_s(w, config, k),
                SpectrumKind::S11 => s11_lossless(w, config, k),
                SpectrumKind::Tau => phase_delay(w, config, k).map(real),
                SpectrumKind::Efficiency => transfer_s(w, config, k).map(|s| real(s.norm_sqr())),
                SpectrumKind::NoiseGain => noise_gain(w, config, k).map(real),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralCurve { omega_grid: grid.to_vec(), values, kind })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_values(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("frequency grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive. Interior points are
/// computed as `lo + (hi - lo) * i / (n - 1)` so that round grids hit round
/// frequencies exactly.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = T::from_usize(n - 1).unwrap();
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * T::from_usize(i).unwrap() / last })
                .collect()
        }
    }
}

/// Effective permittivity `chi(w)` contributed by the mini-resonators.
pub fn chi<T: Real>(omega: T, config: &MemoryConfig<T>) -> Result<Complex<T>> {
    let half = T::lit(0.5);
    let mut acc = Complex::new(T::zero(), T::zero());
    for ((&fn_, &off), &g) in config.couplings().iter().zip(&config.offsets).zip(&config.gamma) {
        if fn_ == T::zero() {
            continue;
        }
        let den = Complex::new(g * half, off - omega);
        if den.re == T::zero() && den.im == T::zero() {
            return Err(Error::Pole { omega: omega.as_f64() });
        }
        acc = acc + Complex::new(fn_ * fn_, T::zero()) / den;
    }
    Ok(acc)
}

/// Reflection coefficient `S(w)` for waveguide coupling `k`.
pub fn transfer_s<T: Real>(omega: T, config: &MemoryConfig<T>, k: T) -> Result<Complex<T>> {
    let two = T::lit(2.0);
    let x = chi(omega, config)? * two;
    let iw2 = Complex::new(T::zero(), two * omega);
    let num = Complex::new(k - config.gamma0, T::zero()) - x + iw2;
    let den = Complex::new(k + config.gamma0, T::zero()) + x - iw2;
    if den.norm() < T::lit(DENOMINATOR_FLOOR) {
        return Err(Error::Pole { omega: omega.as_f64() });
    }
    Ok(num / den)
}

/// `S(w)` written over the common denominator `prod_n (g_n/2 + i(D_n - w))`.
///
/// Identical to [`transfer_s`] away from the mini-resonator poles and
/// finite (the removable-singularity limit) on them. Used where a grid cannot
/// avoid the bare resonances, e.g. FFT frequency grids.
pub fn transfer_s_regular<T: Real>(omega: T, config: &MemoryConfig<T>, k: T) -> Result<Complex<T>> {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    // decoupled resonators (f_n = 0) drop out of the response entirely
    let coupled: Vec<(T, Complex<T>)> = config
        .couplings()
        .into_iter()
        .zip(config.offsets.iter().zip(&config.gamma))
        .filter(|&(f, _)| f != T::zero())
        .map(|(f, (&off, &g))| (f, Complex::new(g * half, off - omega)))
        .collect();
    let one = Complex::new(T::one(), T::zero());
    let full = coupled.iter().fold(one, |p, &(_, x)| p * x);
    // sum_n f_n^2 prod_{m != n} d_m without dividing by d_n
    let mut cross = Complex::new(T::zero(), T::zero());
    for (n, &(fn_, _)) in coupled.iter().enumerate() {
        let others = coupled.iter().enumerate().filter(|&(m, _)| m != n).fold(one, |p, (_, &(_, x))| p * x);
        cross = cross + others * (fn_ * fn_);
    }
    let iw2 = Complex::new(T::zero(), two * omega);
    let num = (Complex::new(k - config.gamma0, T::zero()) + iw2) * full - cross * two;
    let den = (Complex::new(k + config.gamma0, T::zero()) - iw2) * full + cross * two;
    if den.norm() < T::lit(DENOMINATOR_FLOOR) * full.norm().max(T::one()) {
        return Err(Error::Pole { omega: omega.as_f64() });
    }
    Ok(num / den)
}

/// Storage-stage polynomial `P(w) = w^4 + c2 w^2 + c0` of a symmetric config.
fn storage_poly<T: Real>(omega: T, config: &MemoryConfig<T>) -> Result<T> {
    let [c4, c2, c0] = char_poly_storage(config)?;
    let w2 = omega * omega;
    Ok((c4 * w2 + c2) * w2 + c0)
}

fn require_closed_form<T: Real>(config: &MemoryConfig<T>) -> Result<()> {
    config.require_symmetric()?;
    config.require_lossless()
}

/// Closed-form lossless reflection of the symmetric three-resonator memory,
/// in the `a_out = a_in - sqrt(k) a` convention (so it equals `-S`).
pub fn s11_lossless<T: Real>(omega: T, config: &MemoryConfig<T>, k: T) -> Result<Complex<T>> {
    require_closed_form(config)?;
    let d2 = config.delta * config.delta;
    let a = k * omega * (d2 - omega * omega);
    let p2 = storage_poly(omega, config)? * T::lit(2.0);
    let num = Complex::new(a, -p2);
    let den = Complex::new(a, p2);
    if den.norm() < T::lit(DENOMINATOR_FLOOR) {
        return Err(Error::Pole { omega: omega.as_f64() });
    }
    Ok(-(num / den))
}

/// Phase delay `tau(w) = (2/w) atan(k w (D^2 - w^2) / (2 P(w)))`, with the
/// analytic limit `k D^2 / P(0)` at `w = 0`.
pub fn phase_delay<T: Real>(omega: T, config: &MemoryConfig<T>, k: T) -> Result<T> {
    require_closed_form(config)?;
    let d2 = config.delta * config.delta;
    if omega == T::zero() {
        let p0 = storage_poly(T::zero(), config)?;
        if p0 == T::zero() {
            return Err(Error::Degenerate("P(0) = 0: central mini-resonator is uncoupled".into()));
        }
        return Ok(k * d2 / p0);
    }
    let a = k * omega * (d2 - omega * omega);
    if a == T::zero() {
        return Ok(T::zero());
    }
    let p = storage_poly(omega, config)?;
    Ok(T::lit(2.0) / omega * (a / (T::lit(2.0) * p)).atan())
}

/// Spectral efficiency `|S(w)|^2` on `grid`.
pub fn efficiency_spectrum<T: Real>(grid: &[T], config: &MemoryConfig<T>, k: T) -> Result<SpectralCurve<T>> {
    SpectralCurve::evaluate(SpectrumKind::Efficiency, grid, config, k)
}

/// Squared magnitude of the factor `2 sqrt(k g0) / (k + g0 + 2 chi - 2 i w)`
/// that maps the effective bath operator onto the output.
pub fn noise_gain<T: Real>(omega: T, config: &MemoryConfig<T>, k: T) -> Result<T> {
    if config.gamma0 == T::zero() || k == T::zero() {
        return Ok(T::zero());
    }
    let two = T::lit(2.0);
    let den = Complex::new(k + config.gamma0, -two * omega) + chi(omega, config)? * two;
    if den.norm() < T::lit(DENOMINATOR_FLOOR) {
        return Err(Error::Pole { omega: omega.as_f64() });
    }
    let num = two * (k * config.gamma0).sqrt();
    Ok(num * num / den.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_case, Case};

    fn unit_config(f: f64, gamma: f64) -> MemoryConfig<f64> {
        MemoryConfig::symmetric(1.0, [1.0, 1.0, 1.0], f, 0.0).with_losses(gamma, gamma)
    }

    #[test]
    fn chi_vanishes_without_coupling() {
        let c = unit_config(0.0, 0.0);
        for w in [-2.0, -1.0, 0.0, 0.3, 1.0] {
            assert_eq!(chi(w, &c).unwrap(), Complex::new(0.0, 0.0));
        }
    }

    #[test]
    fn chi_term_by_term() {
        // 0.1/0.01 + 2 * 0.1/1.01
        let c = unit_config(1.0, 0.2);
        let x = chi(0.0, &c).unwrap();
        assert!((x.re - (10.0 + 0.2 / 1.01)).abs() < 1e-12);
        assert!((x.re - 10.1980).abs() < 1e-4);
        assert!(x.im.abs() < 1e-15);
    }

    #[test]
    fn chi_parity_on_symmetric_config() {
        let mut c = make_case::<f64>(Case::B).with_losses(0.05, 0.02);
        c.gamma = vec![0.05, 0.01, 0.05];
        for w in [0.1, 0.7, 1.3, 2.9] {
            let p = chi(w, &c).unwrap();
            let m = chi(-w, &c).unwrap();
            assert!((p.re - m.re).abs() < 1e-12);
            assert!((p.im + m.im).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_pole_is_an_error() {
        let c = make_case::<f64>(Case::B);
        assert_eq!(chi(1.0, &c), Err(Error::Pole { omega: 1.0 }));
        assert!(matches!(transfer_s(0.0, &c, 5.0), Err(Error::Pole { .. })));
    }

    #[test]
    fn transfer_limits() {
        // critically coupled empty cavity absorbs at line center
        let c = unit_config(0.0, 0.0).with_losses(0.0, 0.7);
        assert!(transfer_s(0.0, &c, 0.7).unwrap().norm() < 1e-15);
        // far detuned: S -> -1
        let c = make_case::<f64>(Case::B);
        let s = transfer_s(1e4, &c, c.kappa0).unwrap();
        assert!((s + 1.0).norm() < 1e-2);
    }

    #[test]
    fn regular_form_matches_off_pole_and_is_finite_on_pole() {
        let c = make_case::<f64>(Case::B);
        for w in [-3.1, -0.4, 0.25, 0.999, 2.2] {
            let a = transfer_s(w, &c, c.kappa0).unwrap();
            let b = transfer_s_regular(w, &c, c.kappa0).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
        for w in [-1.0, 0.0, 1.0] {
            let s = transfer_s_regular(w, &c, c.kappa0).unwrap();
            assert!((s + 1.0).norm() < 1e-12, "{s}");
        }
        let lossy = c.clone().with_losses(0.01, 0.02);
        for w in [-1.0, 0.0, 0.5] {
            let a = transfer_s(w, &lossy, 3.0).unwrap();
            let b = transfer_s_regular(w, &lossy, 3.0).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn s11_special_points() {
        let c = make_case::<f64>(Case::A);
        let k = c.kappa0;
        assert!((s11_lossless(1e-9, &c, k).unwrap() - 1.0).norm() < 1e-8);
        assert!((s11_lossless(1.0, &c, k).unwrap() - 1.0).norm() < 1e-14);
        let roots = crate::eigen::storage_roots(&c).unwrap();
        for r in roots {
            assert!((s11_lossless(r, &c, k).unwrap() + 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn s11_requires_symmetry() {
        let mut c = make_case::<f64>(Case::A);
        c.coupling_weights = vec![1.0, 1.0, 0.5];
        assert!(matches!(s11_lossless(0.3, &c, 1.0), Err(Error::Symmetry(_))));
        assert!(matches!(phase_delay(0.3, &c, 1.0), Err(Error::Symmetry(_))));
    }

    #[test]
    fn phase_delay_center_and_parity() {
        let c = make_case::<f64>(Case::B);
        let tau0 = phase_delay(0.0, &c, 5.546).unwrap();
        assert!((tau0 - 5.546 / 1.038f64.powi(2)).abs() < 1e-12);
        assert!((tau0 - 5.148).abs() < 1e-3);
        for w in [0.05, 0.4, 1.7, 3.0] {
            let a = phase_delay(w, &c, 5.546).unwrap();
            let b = phase_delay(-w, &c, 5.546).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
        // continuity at the origin
        let near = phase_delay(1e-6, &c, 5.546).unwrap();
        assert!((near - tau0).abs() < 1e-8);
    }

    #[test]
    fn phase_delay_is_flat_at_matched_coupling() {
        let c = make_case::<f64>(Case::A);
        let h = 1e-3;
        let t = |w| phase_delay(w, &c, c.kappa0).unwrap();
        let d2 = (t(h) - 2.0 * t(0.0) + t(-h)) / (h * h);
        assert!(d2.abs() < 1e-4 * t(0.0), "d2 = {d2}");
    }

    #[test]
    fn efficiency_cases() {
        let c = make_case::<f64>(Case::B);
        let grid = linspace(-3.05, 3.05, 300);
        let e = efficiency_spectrum(&grid, &c, c.kappa0).unwrap();
        assert!(e.values.iter().all(|v| (v.re - 1.0).abs() < 1e-12 && v.im == 0.0));

        let lossy = c.clone().with_losses(0.01, 0.01);
        let e = efficiency_spectrum(&[0.0], &lossy, c.kappa0).unwrap();
        assert!(e.values[0].re < 1.0);

        let empty = unit_config(0.0, 0.0).with_losses(0.0, 2.0);
        let e = efficiency_spectrum(&[0.0], &empty, 2.0).unwrap();
        assert!(e.values[0].re < 1e-30);

        assert!(efficiency_spectrum(&[0.0, 0.0], &c, 1.0).is_err());
    }

    #[test]
    fn noise_gain_cases() {
        let c = unit_config(0.0, 0.0);
        assert_eq!(noise_gain(0.0, &c, 1.0).unwrap(), 0.0);
        let c = unit_config(0.0, 0.0).with_losses(0.0, 0.01);
        let g = noise_gain(0.0, &c, 1.0).unwrap();
        assert!((g - (0.2f64 / 1.01).powi(2)).abs() < 1e-15);
        assert!((g - 0.039212).abs() < 1e-6);
        let c = unit_config(0.0, 0.0).with_losses(0.0, 0.5);
        assert!((noise_gain(0.0, &c, 0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn curve_kinds_are_consistent() {
        let c = make_case::<f64>(Case::A);
        let grid = linspace(-2.5, 2.5, 40);
        let s = SpectralCurve::evaluate(SpectrumKind::S, &grid, &c, c.kappa0).unwrap();
        let s11 = SpectralCurve::evaluate(SpectrumKind::S11, &grid, &c, c.kappa0).unwrap();
        for (a, b) in s.values.iter().zip(&s11.values) {
            assert!((a + b).norm() < 1e-10);
        }
        let tau = SpectralCurve::evaluate(SpectrumKind::Tau, &grid, &c, c.kappa0).unwrap();
        assert!(tau.values.iter().all(|v| v.im == 0.0));
        assert_eq!(tau.len(), 40);
    }

    #[test]
    fn linspace_hits_round_points() {
        let g = linspace(-4.0, 4.0, 2001);
        assert_eq!(g.len(), 2001);
        assert_eq!(g[1000], 0.0);
        assert_eq!(g[1250], 1.0);
        assert_eq!(g[750], -1.0);
        assert_eq!(g[2000], 4.0);
    }

    #[test]
    fn single_precision_smoke() {
        let c = make_case::<f32>(Case::B);
        let s = transfer_s(0.3f32, &c, c.kappa0).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-5);
    }
}

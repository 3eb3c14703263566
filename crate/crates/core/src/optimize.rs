//! Two-step matching of the symmetric three-resonator memory.
//!
//! 1. Pick `f` so that the storage spectrum `±w-, ±w+` satisfies
//!    `w+ / w- = r`, i.e. the pattern `[-r, -1, 1, r]`.
//! 2. Pick the waveguide coupling `k` that makes the phase delay flat at the
//!    carrier, `d^2 tau / dw^2 (0) = 0`.
//!
//! Expanding `tau` to second order in `w` reduces step 2 to
//! `k = (2 f2 / D) sqrt(3 (f1^2 + f3^2 + D^2))`; [`solve_kappa`] finds the
//! root numerically and [`kappa_closed_form`] evaluates the reduction.

use serde::{Deserialize, Serialize};

use crate::eigen::{self, char_poly_storage, multiplet_base, storage_roots};
use crate::error::{Error, Result};
use crate::model::MemoryConfig;
use crate::real::Real;
use crate::spectral::{linspace, phase_delay};

/// Finite-difference step of the curvature stencil, relative to the
/// spectral scale (see `stencil_step`).
pub const STENCIL_STEP: f64 = 1e-3;
/// Relative flatness that defines the plateau half-width.
pub const PLATEAU_FLATNESS: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PlateauMetrics<T> {
    pub tau0: T,
    /// Magnitude of the five-point second derivative of `tau` at the carrier.
    pub second_derivative_residual: T,
    /// Largest `w` such that `|tau(w)/tau(0) - 1| < 0.05` holds on `[0, w]`.
    pub band_halfwidth: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DesignReport<T> {
    pub config: MemoryConfig<T>,
    pub target_pattern: Vec<i64>,
    pub f_candidates: Vec<T>,
    pub kappa: T,
    pub delta_prime: T,
    pub revival_period: T,
    pub plateau_metrics: PlateauMetrics<T>,
}

fn ratio_of_roots<T: Real>(config: &MemoryConfig<T>) -> Result<T> {
    let r = storage_roots(config)?;
    Ok(r[3] / r[2])
}

/// All couplings `f > 0` that put the storage spectrum on the pattern
/// `[-ratio, -1, 1, ratio]`, ascending.
pub fn solve_f<T: Real>(weights: &[T; 3], delta: T, ratio: u32) -> Result<Vec<T>> {
    if ratio == 0 {
        return Err(Error::InvalidArgument("ratio must be a positive integer".into()));
    }
    if ratio == 1 {
        return Err(Error::Degenerate("ratio 1 requests a double root".into()));
    }
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument("delta must be > 0".into()));
    }
    let probe = MemoryConfig::symmetric(delta, *weights, T::one(), T::zero());
    probe.require_symmetric()?;
    if weights.iter().any(|&w| w < T::zero()) || !(weights[1] > T::zero()) {
        return Err(Error::NoSolution("central weight must be > 0 and all weights >= 0".into()));
    }

    // (W f^2 + D^2)^2 = D^2 w2^2 f^2 (r^2+1)^2/r^2  =>  W f^2 - D w2 c f + D^2 = 0
    let r = T::from_u32(ratio).unwrap();
    let big_w = weights.iter().fold(T::zero(), |a, &w| a + w * w);
    let c = delta * weights[1] * (r * r + T::one()) / r;
    let disc = c * c - T::lit(4.0) * big_w * delta * delta;
    if disc < T::zero() {
        return Err(Error::NoSolution(format!("no coupling yields ratio {ratio}")));
    }
    let sq = disc.sqrt();
    let hi = (c + sq) / (T::lit(2.0) * big_w);
    let lo = delta * delta / (big_w * hi);
    let mut out = vec![lo, hi];
    out.dedup();

    for &f in &out {
        let got = ratio_of_roots(&probe.clone().with_f(f))?;
        if (got - r).abs() > T::lit(1e-6) * r {
            return Err(Error::NoSolution(format!("candidate f = {f} gives ratio {got}")));
        }
    }
    Ok(out)
}

fn require_matching<T: Real>(config: &MemoryConfig<T>) -> Result<()> {
    config.require_symmetric()?;
    config.require_lossless()?;
    let f = config.couplings();
    if !(f[1] > T::zero()) {
        return Err(Error::Degenerate("central coupling f2 must be > 0".into()));
    }
    Ok(())
}

/// Stencil step: `STENCIL_STEP` times the smaller of `delta` and the lowest
/// storage frequency, widened in low precision where round-off would
/// otherwise dominate the second difference.
fn stencil_step<T: Real>(config: &MemoryConfig<T>) -> Result<T> {
    let lowest = storage_roots(config)?[2];
    let scale = if lowest > T::zero() { config.delta.min(lowest) } else { config.delta };
    let rel = T::lit(STENCIL_STEP).max(T::epsilon().powf(T::lit(1.0 / 6.0)) / T::lit(4.0));
    Ok(rel * scale)
}

fn tau_curvature<T: Real>(config: &MemoryConfig<T>, k: T) -> Result<T> {
    let h = stencil_step(config)?;
    let t = |w: T| phase_delay(w, config, k);
    let (m2, m1, c0, p1, p2) = (t(-h - h)?, t(-h)?, t(T::zero())?, t(h)?, t(h + h)?);
    Ok((-m2 + T::lit(16.0) * m1 - T::lit(30.0) * c0 + T::lit(16.0) * p1 - p2) / (T::lit(12.0) * h * h))
}

/// Closed-form root of the flat-delay condition.
pub fn kappa_closed_form<T: Real>(config: &MemoryConfig<T>) -> Result<T> {
    require_matching(config)?;
    let f = config.couplings();
    let d = config.delta;
    Ok(T::lit(2.0) * f[1] / d * (T::lit(3.0) * (f[0] * f[0] + f[2] * f[2] + d * d)).sqrt())
}

/// Waveguide coupling at which the curvature of the phase delay at the
/// carrier vanishes, found by bracketing the finite-difference curvature on
/// `[1e-3, 50] * delta` and polishing with the secant method.
pub fn solve_kappa<T: Real>(config: &MemoryConfig<T>) -> Result<T> {
    require_matching(config)?;
    let g = |k: T| tau_curvature(config, k);
    let (mut lo, mut hi) = (T::lit(1e-3) * config.delta, T::lit(50.0) * config.delta);
    let (mut glo, ghi) = (g(lo)?, g(hi)?);
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSolution("flat-delay condition has no root in the coupling bracket".into()));
    }
    while (hi - lo) > T::lit(1e-6) * hi {
        let mid = (lo + hi) / T::lit(2.0);
        let gm = g(mid)?;
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    let (mut x0, mut x1) = (lo, hi);
    let (mut g0, mut g1) = (glo, g(hi)?);
    for _ in 0..50 {
        if g1 == g0 {
            break;
        }
        let x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        if !(x2 >= lo && x2 <= hi) {
            break;
        }
        let done = (x2 - x1).abs() <= T::lit(1e-10) * x2;
        x0 = x1;
        g0 = g1;
        x1 = x2;
        if done {
            break;
        }
        g1 = g(x1)?;
    }
    Ok(x1)
}

/// Curvature residual, `tau(0)` and the 5% plateau half-width at coupling `k`.
pub fn verify_plateau<T: Real>(config: &MemoryConfig<T>, k: T) -> Result<PlateauMetrics<T>> {
    config.require_symmetric()?;
    config.require_lossless()?;
    let tau0 = phase_delay(T::zero(), config, k)?;
    let residual = tau_curvature(config, k)?.abs();
    let flat = |w: T| -> Result<bool> {
        Ok(((phase_delay(w, config, k)? / tau0) - T::one()).abs() < T::lit(PLATEAU_FLATNESS))
    };
    let step = T::lit(1e-3) * config.delta;
    let limit = T::lit(10.0) * config.delta;
    let mut w = T::zero();
    let mut band = limit;
    while w < limit {
        let next = w + step;
        if !flat(next)? {
            let (mut lo, mut hi) = (w, next);
            for _ in 0..60 {
                let mid = (lo + hi) / T::lit(2.0);
                if flat(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            band = lo;
            break;
        }
        w = next;
    }
    Ok(PlateauMetrics { tau0, second_derivative_residual: residual, band_halfwidth: band })
}

/// Relative phase delay `tau(w) / tau(0)` on `grid`.
pub fn relative_delay<T: Real>(config: &MemoryConfig<T>, k: T, grid: &[T]) -> Result<Vec<T>> {
    let tau0 = phase_delay(T::zero(), config, k)?;
    grid.iter().map(|&w| phase_delay(w, config, k).map(|t| t / tau0)).collect()
}

/// Symmetric grid for plotting the relative delay across the comb.
pub fn default_delay_grid<T: Real>(config: &MemoryConfig<T>) -> Vec<T> {
    linspace(-T::lit(4.0) * config.delta, T::lit(4.0) * config.delta, 801)
}

/// Full pipeline: coupling from the spectrum target (largest solution), then
/// the waveguide coupling, storage-spectrum analysis and plateau check.
pub fn design<T: Real>(weights: &[T; 3], delta: T, ratio: u32) -> Result<DesignReport<T>> {
    let f_candidates = solve_f(weights, delta, ratio)?;
    let f = *f_candidates.last().expect("solve_f returns at least one root");
    let mut config = MemoryConfig::symmetric(delta, *weights, f, T::zero());
    let kappa = solve_kappa(&config)?;
    config.kappa0 = kappa;

    let r = ratio as i64;
    let target_pattern = vec![-r, -1, 1, r];
    let storage = eigen::eigenfreqs(&config, T::zero())?;
    let re: Vec<T> = storage.frequencies.iter().map(|z| z.re).collect();
    let multiplet = multiplet_base(&re, T::lit(eigen::MULTIPLET_TOL))?;
    if multiplet.pattern != target_pattern {
        return Err(Error::NoSolution(format!(
            "storage spectrum pattern {:?} differs from target {:?}",
            multiplet.pattern, target_pattern
        )));
    }
    debug_assert!(char_poly_storage(&config).is_ok());
    let plateau_metrics = verify_plateau(&config, kappa)?;
    Ok(DesignReport {
        config,
        target_pattern,
        f_candidates,
        kappa,
        delta_prime: multiplet.base,
        revival_period: T::TAU() / multiplet.base,
        plateau_metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_case, Case};

    /// Dense scan of the root ratio with sign-change bisection.
    fn bisection_oracle(weights: [f64; 3], ratio: f64) -> Vec<f64> {
        let g = |f: f64| {
            let c = MemoryConfig::symmetric(1.0, weights, f, 0.0);
            let [_, c2, c0] = char_poly_storage(&c).unwrap();
            let b = -c2;
            let d = (b * b - 4.0 * c0).sqrt();
            ((b + d) / (b - d)).sqrt() - ratio
        };
        let n = 5000;
        let mut roots = Vec::new();
        for i in 1..n {
            let (a, b) = (5.0 * i as f64 / n as f64, 5.0 * (i + 1) as f64 / n as f64);
            if g(a).signum() != g(b).signum() {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..80 {
                    let m = 0.5 * (lo + hi);
                    if g(m).signum() == g(lo).signum() {
                        lo = m
                    } else {
                        hi = m
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        roots
    }

    #[test]
    fn solve_f_matches_bisection_oracle() {
        let cases: [([f64; 3], u32); 2] = [([1.0, 1.0, 1.0], 4), ([0.8, 1.0, 0.8], 3)];
        for (w, r) in cases {
            let got = solve_f(&w, 1.0, r).unwrap();
            let oracle = bisection_oracle(w, r as f64);
            assert_eq!(got.len(), oracle.len());
            for (a, b) in got.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
        let a = solve_f(&[1.0f64, 1.0, 1.0], 1.0, 4).unwrap();
        assert!((a[0] - 0.2980).abs() < 1e-4 && (a[1] - 1.1187).abs() < 1e-4);
        let b = solve_f(&[0.8f64, 1.0, 0.8], 1.0, 3).unwrap();
        assert!((b[0] - 0.4216).abs() < 1e-4 && (b[1] - 1.0404).abs() < 1e-4);
        assert!((b[1] - 1.038).abs() < 0.003 * 1.038);
    }

    #[test]
    fn solve_f_rejects_bad_targets() {
        assert!(matches!(solve_f(&[1.0, 1.0, 1.0], 1.0, 1), Err(Error::Degenerate(_))));
        assert!(matches!(solve_f(&[1.0, 1.0, 1.0], 1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(solve_f(&[1.0, 1.0, 0.5], 1.0, 3), Err(Error::Symmetry(_))));
        assert!(matches!(solve_f(&[1.0, 0.0, 1.0], 1.0, 3), Err(Error::NoSolution(_))));
    }

    #[test]
    fn kappa_for_reference_cases() {
        let a = make_case::<f64>(Case::A);
        assert!((solve_kappa(&a).unwrap() - 7.256).abs() < 0.005 * 7.256);
        let b = make_case::<f64>(Case::B);
        assert!((solve_kappa(&b).unwrap() - 5.546).abs() < 0.005 * 5.546);
        for c in [a, b] {
            let num = solve_kappa(&c).unwrap();
            let cf = kappa_closed_form(&c).unwrap();
            assert!((num - cf).abs() < 1e-8 * cf);
        }
    }

    #[test]
    fn kappa_preconditions() {
        let zero_center = MemoryConfig::symmetric(1.0, [1.0, 0.0, 1.0], 1.0, 0.0);
        assert!(matches!(solve_kappa(&zero_center), Err(Error::Degenerate(_))));
        let lossy = make_case::<f64>(Case::A).with_losses(0.01, 0.0);
        assert!(matches!(solve_kappa(&lossy), Err(Error::NotLossless)));
        let mut skew = make_case::<f64>(Case::A);
        skew.offsets[0] = -0.9;
        assert!(matches!(solve_kappa(&skew), Err(Error::Symmetry(_))));
    }

    #[test]
    fn plateau_matched_and_mismatched() {
        let b = make_case::<f64>(Case::B);
        // the curvature moves by about 1.6 tau0 per unit of kappa, so the
        // four-digit 5.546 sits at 3.466e-4 tau0 (high-precision oracle)
        let m = verify_plateau(&b, 5.546).unwrap();
        assert!((m.second_derivative_residual / m.tau0 - 3.4663e-4).abs() < 1e-6, "{m:?}");
        let m = verify_plateau(&b, b.kappa0).unwrap();
        assert!(m.second_derivative_residual < 1e-6 * m.tau0);
        assert!(m.band_halfwidth > 0.0 && m.band_halfwidth < 4.0);
        let bad = verify_plateau(&b, 2.0).unwrap();
        assert!(bad.second_derivative_residual > 1e-2 * bad.tau0);
    }

    #[test]
    fn single_central_resonator_has_finite_plateau() {
        let c = MemoryConfig::symmetric(1.0f64, [0.0, 1.0, 0.0], 1.0, 0.0);
        let k = solve_kappa(&c).unwrap();
        let m = verify_plateau(&c, k).unwrap();
        assert!(m.band_halfwidth.is_finite() && m.band_halfwidth > 0.0 && m.band_halfwidth < 10.0);
        let curve = relative_delay(&c, k, &default_delay_grid(&c)).unwrap();
        assert!(curve.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn design_pipeline() {
        let a = design(&[1.0f64, 1.0, 1.0], 1.0, 4).unwrap();
        assert!((a.config.f - 1.119).abs() < 0.01 * 1.119);
        assert!((a.kappa - 7.256).abs() < 0.005 * 7.256);
        assert_eq!(a.target_pattern, vec![-4, -1, 1, 4]);

        let b = design(&[0.8f64, 1.0, 0.8], 1.0, 3).unwrap();
        assert!((b.config.f - 1.040).abs() < 1e-3);
        assert!((b.kappa - 5.546).abs() < 0.005 * 5.546);
        assert!((b.delta_prime - 0.589).abs() < 1e-3);
        assert!((b.revival_period - 10.67).abs() < 1e-2);
    }

    #[test]
    fn design_scales_with_delta() {
        let one = design(&[1.0f64, 1.0, 1.0], 1.0, 4).unwrap();
        let two = design(&[1.0f64, 1.0, 1.0], 2.0, 4).unwrap();
        assert!((two.config.f - 2.0 * one.config.f).abs() < 1e-10);
        assert!((two.kappa - 2.0 * one.kappa).abs() < 1e-7);
        assert!((two.delta_prime - 2.0 * one.delta_prime).abs() < 1e-10);
        assert!((two.revival_period - 0.5 * one.revival_period).abs() < 1e-10);
    }
}

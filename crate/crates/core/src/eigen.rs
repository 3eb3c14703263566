//! Eigenfrequencies of the resonator network in the storage (`k = 0`) and
//! loaded (`k > 0`) regimes.
//!
//! Writing the mean-field equations as `dv/dt = -i H v` with
//! `v = (a, b_1, .., b_N)`, the matrix is
//!
//! ```text
//! H_00 = -i (k + g0)/2,  H_nn = D_n - i g_n/2,  H_0n = H_n0 = f_n
//! ```
//!
//! and its eigenvalues are the complex eigenfrequencies. Equal decay rates
//! shift every eigenvalue by `-i g/2`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::MemoryConfig;
use crate::real::Real;

/// Default relative tolerance of [`multiplet_base`].
pub const MULTIPLET_TOL: f64 = 1e-2;
/// Largest integer multiple searched by [`multiplet_base`].
pub const MAX_MULTIPLE: i64 = 100;
/// Two real parts closer than this (times `delta`) count as merged.
pub const MERGE_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EigenReport<T> {
    pub k_used: T,
    /// Sorted by real part, then imaginary part.
    pub frequencies: Vec<Complex<T>>,
    /// Largest over smallest nonzero magnitude of the real parts.
    pub multiplet_ratio: Option<T>,
    /// Commensurate base of the real parts; only evaluated for `k_used = 0`.
    pub base: Option<T>,
    pub pattern: Option<Vec<i64>>,
    pub revival_period: Option<T>,
    pub merged: bool,
}

/// Commensurate base frequency and the integer multiples it generates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Multiplet<T> {
    pub base: T,
    pub pattern: Vec<i64>,
}

/// Coefficients `(c4, c2, c0)` of the storage-stage polynomial
/// `P(w) = w^4 - (f1^2 + f2^2 + f3^2 + D^2) w^2 + D^2 f2^2`.
pub fn char_poly_storage<T: Real>(config: &MemoryConfig<T>) -> Result<[T; 3]> {
    config.require_symmetric()?;
    let f = config.couplings();
    let d2 = config.delta * config.delta;
    let sum = f.iter().fold(T::zero(), |a, &x| a + x * x);
    Ok([T::one(), -(sum + d2), d2 * f[1] * f[1]])
}

/// Real roots of `P`, ascending, from the quadratic in `w^2`.
pub fn storage_roots<T: Real>(config: &MemoryConfig<T>) -> Result<[T; 4]> {
    let [_, c2, c0] = char_poly_storage(config)?;
    let b = -c2;
    let disc = (b * b - T::lit(4.0) * c0).max(T::zero()).sqrt();
    let hi = (b + disc) / T::lit(2.0);
    // product of the two squared roots is c0
    let lo = if hi > T::zero() { c0 / hi } else { T::zero() };
    let (p, q) = (lo.max(T::zero()).sqrt(), hi.max(T::zero()).sqrt());
    Ok([-q, -p, p, q])
}

/// The `(N+1) x (N+1)` dynamical matrix at waveguide coupling `k`.
pub fn dynamical_matrix<T: Real>(config: &MemoryConfig<T>, k: T) -> CMatrix<T> {
    let n = config.modes();
    let half = T::lit(0.5);
    let zero = Complex::new(T::zero(), T::zero());
    let mut h = vec![vec![zero; n + 1]; n + 1];
    h[0][0] = Complex::new(T::zero(), -(k + config.gamma0) * half);
    for (i, &fn_) in config.couplings().iter().enumerate() {
        h[i + 1][i + 1] = Complex::new(config.offsets[i], -config.gamma[i] * half);
        h[0][i + 1] = Complex::new(fn_, T::zero());
        h[i + 1][0] = Complex::new(fn_, T::zero());
    }
    h
}

fn sort_frequencies<T: Real>(v: &mut [Complex<T>]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Eigenvalues of the dynamical matrix, sorted by real part.
pub fn eigenvalues_at<T: Real>(config: &MemoryConfig<T>, k: T) -> Result<Vec<Complex<T>>> {
    let mut ev = linalg::eigenvalues(&dynamical_matrix(config, k))?;
    sort_frequencies(&mut ev);
    Ok(ev)
}

fn min_real_gap<T: Real>(freqs: &[Complex<T>]) -> T {
    let mut re: Vec<T> = freqs.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    re.windows(2).map(|w| w[1] - w[0]).fold(T::infinity(), T::min)
}

/// Full spectral analysis at waveguide coupling `k`.
pub fn eigenfreqs<T: Real>(config: &MemoryConfig<T>, k: T) -> Result<EigenReport<T>> {
    if !(k >= T::zero()) {
        return Err(Error::InvalidArgument("waveguide coupling must be >= 0".into()));
    }
    let frequencies = eigenvalues_at(config, k)?;
    let scale = config.delta;
    let zero_tol = T::lit(1e-9) * scale;
    let magnitudes: Vec<T> = frequencies.iter().map(|z| z.re.abs()).filter(|&x| x > zero_tol).collect();
    let multiplet_ratio = if magnitudes.is_empty() {
        None
    } else {
        let lo = magnitudes.iter().copied().fold(T::infinity(), T::min);
        let hi = magnitudes.iter().copied().fold(T::zero(), T::max);
        Some(hi / lo)
    };
    let multiplet = if k == T::zero() {
        let re: Vec<T> = frequencies.iter().map(|z| z.re).collect();
        multiplet_base(&re, T::lit(MULTIPLET_TOL)).ok()
    } else {
        None
    };
    let base = multiplet.as_ref().map(|m| m.base);
    let merged = min_real_gap(&frequencies) < T::lit(MERGE_TOL) * scale;
    Ok(EigenReport {
        k_used: k,
        frequencies,
        multiplet_ratio,
        revival_period: base.map(|b| T::TAU() / b),
        base,
        pattern: multiplet.map(|m| m.pattern),
        merged,
    })
}

/// Largest `base` such that every frequency is an integer multiple of it,
/// with multiples bounded by [`MAX_MULTIPLE`]. A base equal to the smallest
/// nonzero frequency divided by `n` may miss each frequency by at most
/// `tol * base / n`. The returned base is the least-squares fit for the
/// found pattern.
pub fn multiplet_base<T: Real>(frequencies: &[T], tol: T) -> Result<Multiplet<T>> {
    if frequencies.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("frequencies must be finite".into()));
    }
    let scale = frequencies.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let zero_tol = T::lit(1e-9) * scale;
    let smallest = frequencies
        .iter()
        .map(|x| x.abs())
        .filter(|&x| x > zero_tol)
        .fold(T::infinity(), T::min);
    if !smallest.is_finite() {
        return Err(Error::InvalidArgument("at least one nonzero frequency is required".into()));
    }
    for n in 1..=MAX_MULTIPLE {
        let base = smallest / T::from_i64(n).unwrap();
        // A plain tol*base slack would accept any pair at some n <= 100
        // (rational approximation), so it shrinks with the subdivision.
        let slack = tol * base / T::from_i64(n).unwrap();
        let mut pattern = Vec::with_capacity(frequencies.len());
        let fits = frequencies.iter().all(|&w| {
            let m = (w / base).round();
            pattern.push(m.to_i64().unwrap_or(i64::MAX));
            m.abs() <= T::from_i64(MAX_MULTIPLE).unwrap() && (w - m * base).abs() <= slack
        });
        if fits {
            let (num, den) = frequencies.iter().zip(&pattern).fold((T::zero(), T::zero()), |(a, b), (&w, &m)| {
                let m = T::from_i64(m).unwrap();
                (a + m * w, b + m * m)
            });
            return Ok(Multiplet { base: num / den, pattern });
        }
    }
    Err(Error::Incommensurate)
}

/// Revival period `2 pi / base` of a commensurate spectrum.
pub fn revival_period<T: Real>(report: &EigenReport<T>) -> Result<T> {
    report.base.map(|b| T::TAU() / b).ok_or(Error::MissingBase)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScanRow<T> {
    pub k: T,
    pub min_distance: T,
    pub frequencies: Vec<Complex<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MergeScan<T> {
    pub rows: Vec<ScanRow<T>>,
    /// First coupling at which two previously separated real parts coalesce.
    pub merge_point: Option<T>,
}

/// Scans `k` over `[k_min, k_max]` and locates the first coalescence of two
/// eigenfrequency real parts.
///
/// A merge is a transition from a gap above `MERGE_TOL * delta` to one below
/// it; real parts that coincide over the whole range (decoupled modes) are
/// not a merge.
pub fn scan_merge<T: Real>(config: &MemoryConfig<T>, k_min: T, k_max: T, steps: usize) -> Result<MergeScan<T>> {
    if !(k_min < k_max) || k_min < T::zero() {
        return Err(Error::InvalidArgument("scan range must satisfy 0 <= k_min < k_max".into()));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument("scan needs at least 2 steps".into()));
    }
    let tol = T::lit(MERGE_TOL) * config.delta;
    let grid = crate::spectral::linspace(k_min, k_max, steps);
    let rows = grid
        .iter()
        .map(|&k| {
            let frequencies = eigenvalues_at(config, k)?;
            Ok(ScanRow { k, min_distance: min_real_gap(&frequencies), frequencies })
        })
        .collect::<Result<Vec<_>>>()?;

    let gap = |k: T| eigenvalues_at(config, k).map(|f| min_real_gap(&f));
    let mut merge_point = None;
    for w in rows.windows(2) {
        if w[0].min_distance >= tol && w[1].min_distance < tol {
            let (mut lo, mut hi) = (w[0].k, w[1].k);
            for _ in 0..100 {
                if hi - lo <= T::epsilon() * T::lit(4.0) * hi.abs().max(T::one()) {
                    break;
                }
                let mid = (lo + hi) / T::lit(2.0);
                if gap(mid)? < tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            merge_point = Some(hi);
            break;
        }
    }
    Ok(MergeScan { rows, merge_point })
}

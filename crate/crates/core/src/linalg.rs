//! Eigenvalues of small dense complex matrices: Householder reduction to
//! upper Hessenberg form followed by single-shift complex QR sweeps.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

type C<T> = Complex<T>;

/// Row-major square matrix.
pub type CMatrix<T> = Vec<Vec<C<T>>>;

fn l1<T: Real>(z: C<T>) -> T {
    z.re.abs() + z.im.abs()
}

fn hessenberg<T: Real>(h: &mut CMatrix<T>) {
    let n = h.len();
    let zero = C::new(T::zero(), T::zero());
    for col in 0..n.saturating_sub(2) {
        let norm = (col + 1..n).map(|i| h[i][col].norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if norm == T::zero() {
            continue;
        }
        let x0 = h[col + 1][col];
        let phase = if x0.norm() == T::zero() { C::new(T::one(), T::zero()) } else { x0 / x0.norm() };
        // v = x + e^{i arg x0} |x| e1, reflector I - 2 v v^H / (v^H v)
        let mut v = vec![zero; n];
        for i in col + 1..n {
            v[i] = h[i][col];
        }
        v[col + 1] = v[col + 1] + phase * norm;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        // left: H <- H - 2 v (v^H H) / |v|^2
        for j in 0..n {
            let s = (col + 1..n).fold(zero, |acc, i| acc + v[i].conj() * h[i][j]) * two / vnorm2;
            for i in col + 1..n {
                h[i][j] = h[i][j] - v[i] * s;
            }
        }
        // right: H <- H - 2 (H v) v^H / |v|^2
        for row in h.iter_mut() {
            let s = (col + 1..n).fold(zero, |acc, j| acc + row[j] * v[j]) * two / vnorm2;
            for j in col + 1..n {
                row[j] = row[j] - s * v[j].conj();
            }
        }
        for i in col + 2..n {
            h[i][col] = zero;
        }
    }
}

fn wilkinson<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = T::lit(0.5);
    let m = (a + d) * half;
    let e = (a - d) * half;
    let disc = (e * e + b * c).sqrt();
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of `a`, unordered.
pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<C<T>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let zero = C::new(T::zero(), T::zero());
    let mut h = a.clone();
    hessenberg(&mut h);
    let scale = h.iter().flatten().map(|&z| l1(z)).fold(T::zero(), T::max);
    let eps = T::epsilon();
    let mut eig = vec![zero; n];
    let mut hi = n;
    let mut iter = 0usize;
    let mut rot: Vec<(C<T>, C<T>)> = Vec::with_capacity(n);

    while hi > 0 {
        if hi == 1 {
            eig[0] = h[0][0];
            break;
        }
        // locate the active unreduced block [lo, hi)
        let mut lo = hi - 1;
        while lo > 0 {
            let mut s = l1(h[lo - 1][lo - 1]) + l1(h[lo][lo]);
            if s == T::zero() {
                s = scale;
            }
            if l1(h[lo][lo - 1]) <= eps * s {
                h[lo][lo - 1] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eig[hi - 1] = h[hi - 1][hi - 1];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 60 * n {
            return Err(Error::NoConvergence);
        }
        let m = hi - 1;
        let mu = if iter % 11 == 0 {
            // exceptional shift
            h[m][m] + C::new(l1(h[m][m - 1]) * T::lit(0.75), T::zero())
        } else {
            wilkinson(h[m - 1][m - 1], h[m - 1][m], h[m][m - 1], h[m][m])
        };
        for i in lo..hi {
            h[i][i] = h[i][i] - mu;
        }
        rot.clear();
        for j in lo..hi - 1 {
            let x = h[j][j];
            let y = h[j + 1][j];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == T::zero() {
                (C::new(T::one(), T::zero()), zero)
            } else {
                (x / r, y / r)
            };
            for col in j..hi {
                let u = h[j][col];
                let v = h[j + 1][col];
                h[j][col] = c.conj() * u + s.conj() * v;
                h[j + 1][col] = c * v - s * u;
            }
            rot.push((c, s));
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let j = lo + idx;
            for row in lo..=(j + 1).min(hi - 1) {
                let p = h[row][j];
                let q = h[row][j + 1];
                h[row][j] = p * c + q * s;
                h[row][j + 1] = q * c.conj() - p * s.conj();
            }
        }
        for i in lo..hi {
            h[i][i] = h[i][i] + mu;
        }
    }
    Ok(eig)
}

/// Roots of a polynomial with complex coefficients, highest degree first,
/// via the eigenvalues of its companion matrix.
pub fn poly_roots<T: Real>(coeffs: &[C<T>]) -> Result<Vec<C<T>>> {
    let lead = coeffs
        .iter()
        .position(|c| c.norm() != T::zero())
        .ok_or_else(|| Error::InvalidArgument("zero polynomial".into()))?;
    let c = &coeffs[lead..];
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let zero = C::new(T::zero(), T::zero());
    let mut m = vec![vec![zero; deg]; deg];
    for j in 0..deg {
        m[0][j] = -c[j + 1] / c[0];
    }
    for i in 1..deg {
        m[i][i - 1] = C::new(T::one(), T::zero());
    }
    eigenvalues(&m)
}

/// Evaluates a polynomial (highest degree first) at `z`.
pub fn poly_eval<T: Real>(coeffs: &[C<T>], z: C<T>) -> C<T> {
    coeffs.iter().fold(C::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
}

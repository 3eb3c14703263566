//! Time-domain mean-field dynamics with a switchable waveguide coupling.
//!
//! ```text
//! db_n/dt = -(g_n/2 + i D_n) b_n - i f_n a
//! da/dt   = -(k(t) + g0)/2 a - i sum_n f_n b_n + sqrt(k(t)) a_in(t)
//! a_out   = sqrt(k(t)) a - a_in
//! ```
//!
//! Integration is classical fixed-step RK4. Switch instants are snapped to
//! the time grid so that `k` is constant inside every step; the state is
//! continuous across a switch. The input, output and dissipated energies are
//! carried as extra ODE components so the energy ledger is integrated at the
//! same order as the fields.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};
use crate::model::{GaussianPulse, MemoryConfig, SwitchSchedule};
use crate::real::Real;
use crate::spectral::transfer_s_regular;

type C<T> = Complex<T>;

/// Pulse support before its center used by [`store_retrieve`], in units of sigma.
pub const LEAD_SIGMAS: f64 = 8.0;
/// Length of the default echo window, in revival periods.
pub const ECHO_WINDOW_PERIODS: f64 = 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EnergyLedger<T> {
    pub input: T,
    /// Output energy before the split instant.
    pub reflected_before: T,
    /// Output energy from the split instant to the end of the run.
    pub echo: T,
    pub residual_intracavity: T,
    pub dissipated: T,
}

impl<T: Real> EnergyLedger<T> {
    /// `|input - (reflected + echo + residual + dissipated)| / input`.
    pub fn closure_error(&self) -> T {
        let out = self.reflected_before + self.echo + self.residual_intracavity + self.dissipated;
        if self.input == T::zero() {
            return out.abs();
        }
        ((self.input - out) / self.input).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SimulationResult<T> {
    pub t_grid: Vec<T>,
    pub a: Vec<C<T>>,
    /// One series per mini-resonator.
    pub b: Vec<Vec<C<T>>>,
    pub a_in: Vec<C<T>>,
    pub a_out: Vec<C<T>>,
    pub k_of_t: Vec<T>,
    pub energy: EnergyLedger<T>,
    pub cumulative_input: Vec<T>,
    pub cumulative_output: Vec<T>,
    pub cumulative_dissipated: Vec<T>,
}

impl<T: Real> SimulationResult<T> {
    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn dt(&self) -> T {
        if self.t_grid.len() < 2 {
            T::zero()
        } else {
            self.t_grid[1] - self.t_grid[0]
        }
    }

    /// Nearest grid index to `t`, clamped to the run.
    pub fn index_of(&self, t: T) -> usize {
        let dt = self.dt();
        if dt == T::zero() {
            return 0;
        }
        let i = ((t - self.t_grid[0]) / dt).round();
        if i <= T::zero() {
            0
        } else {
            i.to_usize().unwrap_or(usize::MAX).min(self.len() - 1)
        }
    }

    /// `|a|^2 + sum |b_n|^2` at sample `i`.
    pub fn intracavity_energy(&self, i: usize) -> T {
        self.b.iter().fold(self.a[i].norm_sqr(), |acc, s| acc + s[i].norm_sqr())
    }

    pub fn intracavity_series(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.intracavity_energy(i)).collect()
    }

    /// State vector `(a, b_1, .., b_N)` at sample `i`.
    pub fn state(&self, i: usize) -> Vec<C<T>> {
        std::iter::once(self.a[i]).chain(self.b.iter().map(|s| s[i])).collect()
    }

    /// Energy ledger with the reflected/echo boundary at `t_split`.
    pub fn energy_split(&self, t_split: T) -> EnergyLedger<T> {
        let last = self.len() - 1;
        let i = self.index_of(t_split);
        EnergyLedger {
            input: self.cumulative_input[last],
            reflected_before: self.cumulative_output[i],
            echo: self.cumulative_output[last] - self.cumulative_output[i],
            residual_intracavity: self.intracavity_energy(last),
            dissipated: self.cumulative_dissipated[last],
        }
    }

    /// Output intensity relative to the peak input intensity.
    pub fn relative_intensity(&self) -> Vec<T> {
        let peak = self.a_in.iter().fold(T::zero(), |m, z| m.max(z.norm_sqr()));
        self.a_out
            .iter()
            .map(|z| if peak > T::zero() { z.norm_sqr() / peak } else { T::zero() })
            .collect()
    }
}

/// Largest step accepted by [`integrate`].
pub fn max_step<T: Real>(config: &MemoryConfig<T>, schedule: &SwitchSchedule<T>, pulse: &GaussianPulse<T>) -> T {
    let fmax = config.couplings().iter().fold(config.f, |m, &x| m.max(x));
    let rate = [config.delta, fmax, config.kappa0, schedule.max_k(), T::one()]
        .iter()
        .fold(T::zero(), |m, &x| m.max(x));
    (T::lit(0.02) / rate).min(pulse.sigma / T::lit(20.0))
}

struct Rhs<'a, T> {
    couplings: &'a [T],
    offsets: &'a [T],
    gamma: &'a [T],
    gamma0: T,
}

impl<T: Real> Rhs<'_, T> {
    /// Writes the field derivatives into `dy` and returns the input, output
    /// and dissipated power.
    fn eval(&self, k: T, sqrt_k: T, ain: C<T>, y: &[C<T>], dy: &mut [C<T>]) -> [T; 3] {
        let half = T::lit(0.5);
        let i = C::new(T::zero(), T::one());
        let a = y[0];
        let mut coupled = C::new(T::zero(), T::zero());
        let mut diss = self.gamma0 * a.norm_sqr();
        for n in 0..self.couplings.len() {
            let b = y[n + 1];
            coupled = coupled + b * self.couplings[n];
            dy[n + 1] = -(C::new(self.gamma[n] * half, self.offsets[n]) * b) - i * a * self.couplings[n];
            diss = diss + self.gamma[n] * b.norm_sqr();
        }
        dy[0] = -(a * ((k + self.gamma0) * half)) - i * coupled + ain * sqrt_k;
        let aout = a * sqrt_k - ain;
        [ain.norm_sqr(), aout.norm_sqr(), diss]
    }
}

fn snap<T: Real>(t: T, t0: T, dt: T) -> usize {
    let x = ((t - t0) / dt).round();
    if x <= T::zero() {
        0
    } else {
        x.to_usize().unwrap_or(usize::MAX)
    }
}

/// Integrates the mean-field equations from the schedule start to `t_end`.
pub fn integrate<T: Real>(
    config: &MemoryConfig<T>,
    schedule: &SwitchSchedule<T>,
    pulse: &GaussianPulse<T>,
    t_end: T,
    dt: T,
) -> Result<SimulationResult<T>> {
    let config = config.clone().validated()?;
    schedule.check()?;
    let limit = max_step(&config, schedule, pulse);
    if !(dt > T::zero()) || dt > limit * (T::one() + T::lit(1e-9)) {
        return Err(Error::StepSize { dt: dt.as_f64(), max: limit.as_f64() });
    }
    let t0 = schedule.start();
    if !(t_end > t0) {
        return Err(Error::InvalidArgument("t_end must be after the schedule start".into()));
    }
    let steps = snap(t_end, t0, dt).max(1);

    // per-step coupling; segment starts snapped to the grid
    let starts: Vec<usize> = schedule.segments.iter().map(|&(t, _)| snap(t, t0, dt)).collect();
    let mut k_step = Vec::with_capacity(steps);
    let mut seg = 0;
    for i in 0..steps {
        while seg + 1 < starts.len() && starts[seg + 1] <= i {
            seg += 1;
        }
        k_step.push(schedule.segments[seg].1);
    }

    let couplings = config.couplings();
    let rhs = Rhs { couplings: &couplings, offsets: &config.offsets, gamma: &config.gamma, gamma0: config.gamma0 };
    let modes = config.modes();
    let dim = modes + 1;
    let zero = C::new(T::zero(), T::zero());
    let time = |i: usize| t0 + dt * T::from_usize(i).unwrap();

    let mut t_grid = Vec::with_capacity(steps + 1);
    let mut a = Vec::with_capacity(steps + 1);
    let mut b = vec![Vec::with_capacity(steps + 1); modes];
    let mut a_in = Vec::with_capacity(steps + 1);
    let mut cum_in = Vec::with_capacity(steps + 1);
    let mut cum_out = Vec::with_capacity(steps + 1);
    let mut cum_diss = Vec::with_capacity(steps + 1);

    let mut y = vec![zero; dim];
    let mut acc = [T::zero(); 3];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    let mut tmp = vec![zero; dim];
    let half = T::lit(0.5);
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);

    let mut record = |y: &[C<T>], acc: &[T; 3], t: T, ain: C<T>| {
        t_grid.push(t);
        a.push(y[0]);
        for (n, s) in b.iter_mut().enumerate() {
            s.push(y[n + 1]);
        }
        a_in.push(ain);
        cum_in.push(acc[0]);
        cum_out.push(acc[1]);
        cum_diss.push(acc[2]);
    };
    record(&y, &acc, t0, pulse.eval(t0));

    for i in 0..steps {
        let t = time(i);
        let k = k_step[i];
        let sk = k.sqrt();
        let (in0, inh, in1) = (pulse.eval(t), pulse.eval(t + dt * half), pulse.eval(t + dt));

        let q1 = rhs.eval(k, sk, in0, &y, &mut k1);
        for j in 0..dim {
            tmp[j] = y[j] + k1[j] * (dt * half);
        }
        let q2 = rhs.eval(k, sk, inh, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + k2[j] * (dt * half);
        }
        let q3 = rhs.eval(k, sk, inh, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + k3[j] * dt;
        }
        let q4 = rhs.eval(k, sk, in1, &tmp, &mut k4);
        for j in 0..dim {
            y[j] = y[j] + (k1[j] + (k2[j] + k3[j]) * two + k4[j]) * sixth;
        }
        for c in 0..3 {
            acc[c] = acc[c] + (q1[c] + two * (q2[c] + q3[c]) + q4[c]) * sixth;
        }
        record(&y, &acc, time(i + 1), in1);
    }

    let k_of_t: Vec<T> = (0..=steps).map(|i| k_step[i.min(steps - 1)]).collect();
    let a_out = a.iter().zip(&a_in).zip(&k_of_t).map(|((&x, &u), &k)| x * k.sqrt() - u).collect();
    let mut result = SimulationResult {
        t_grid,
        a,
        b,
        a_in,
        a_out,
        k_of_t,
        energy: EnergyLedger::default(),
        cumulative_input: cum_in,
        cumulative_output: cum_out,
        cumulative_dissipated: cum_diss,
    };
    result.energy = result.energy_split(schedule.retrieval_start().unwrap_or(t0));
    Ok(result)
}

/// Output field for a constant coupling `k`, computed as
/// `a_out(w) = S(w) a_in(w)` on a zero-padded FFT grid.
///
/// `t_grid` must be uniform. The padding is doubled until the energy in the
/// trailing quarter of the padded window is below `1e-8` of the total, which
/// keeps the circular wrap-around of slowly ringing responses negligible.
pub fn freq_domain_output<T: Real>(
    config: &MemoryConfig<T>,
    pulse: &GaussianPulse<T>,
    k: T,
    t_grid: &[T],
) -> Result<Vec<C<T>>> {
    let n = t_grid.len();
    if n < 2 {
        return Err(Error::InvalidArgument("time grid needs at least two points".into()));
    }
    let dt = t_grid[1] - t_grid[0];
    let uniform_tol = T::lit(1e-9) * dt.abs() * T::from_usize(n).unwrap();
    if !(dt > T::zero())
        || t_grid.iter().enumerate().any(|(i, &t)| (t - t_grid[0] - dt * T::from_usize(i).unwrap()).abs() > uniform_tol)
    {
        return Err(Error::InvalidArgument("time grid must be uniform and increasing".into()));
    }
    let zero = C::new(T::zero(), T::zero());
    let peak = pulse.amplitude.norm();
    if peak == T::zero() {
        return Ok(vec![zero; n]);
    }
    let edge = pulse.eval(t_grid[0]).norm().max(pulse.eval(t_grid[n - 1]).norm()) / peak;
    if edge > T::lit(1e-6) {
        return Err(Error::Aliasing { ratio: edge.as_f64() });
    }

    let mut planner = FftPlanner::<T>::new();
    let mut len = 4 * n;
    loop {
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut buf: Vec<C<T>> =
            (0..len).map(|i| pulse.eval(t_grid[0] + dt * T::from_usize(i).unwrap())).collect();
        fwd.process(&mut buf);
        let lenf = T::from_usize(len).unwrap();
        for (j, x) in buf.iter_mut().enumerate() {
            let bin = if j <= len / 2 { j as i64 } else { j as i64 - len as i64 };
            let omega = T::TAU() * T::from_i64(bin).unwrap() / (lenf * dt);
            // forward DFT uses exp(-i w t), i.e. it samples the spectrum at -w
            *x = *x * transfer_s_regular(-omega, config, k)?;
        }
        inv.process(&mut buf);
        for x in buf.iter_mut() {
            *x = *x / lenf;
        }
        let total = buf.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        let tail = buf[len - len / 4..].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        if tail <= T::lit(1e-8) * total || len >= (1 << 26) {
            buf.truncate(n);
            return Ok(buf);
        }
        len *= 2;
    }
}

/// Time in `window` minimizing `|a|^2 + |a_out|^2`, the instant at which the
/// common resonator and the waveguide are (nearly) empty.
pub fn find_switch_time<T: Real>(result: &SimulationResult<T>, window: (T, T)) -> Result<T> {
    let (lo, hi) = window;
    result
        .t_grid
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t >= lo && t <= hi)
        .map(|(i, &t)| (t, result.a[i].norm_sqr() + result.a_out[i].norm_sqr()))
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(t, _)| t)
        .ok_or(Error::EmptyWindow)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EchoMetrics<T> {
    /// Peak of `J(t) = |a_out|^2 / max |a_in|^2` inside the window.
    pub j_peak: T,
    pub t_peak: T,
    /// `|<a_out, a_in(. - d)>|^2 / (|a_out|^2 |a_in|^2)` maximized over `d`.
    pub waveform_fidelity: T,
    /// Delay `d` at which the fidelity is attained.
    pub best_delay: T,
}

/// Echo intensity and shape metrics of the output restricted to `window`.
pub fn echo_metrics<T: Real>(result: &SimulationResult<T>, window: (T, T)) -> Result<EchoMetrics<T>> {
    let (lo, hi) = window;
    let idx: Vec<usize> = (0..result.len()).filter(|&i| result.t_grid[i] >= lo && result.t_grid[i] <= hi).collect();
    if idx.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let peak_in = result.a_in.iter().fold(T::zero(), |m, z| m.max(z.norm_sqr()));
    if peak_in == T::zero() {
        return Err(Error::Degenerate("input pulse is identically zero".into()));
    }
    let (t_peak, j_peak) = idx
        .iter()
        .map(|&i| (result.t_grid[i], result.a_out[i].norm_sqr() / peak_in))
        .fold((result.t_grid[idx[0]], T::neg_infinity()), |best, x| if x.1 > best.1 { x } else { best });

    let n = result.len();
    let zero = C::new(T::zero(), T::zero());
    let len = (2 * n).next_power_of_two();
    let mut out = vec![zero; len];
    for &i in &idx {
        out[i] = result.a_out[i];
    }
    let mut inp = vec![zero; len];
    inp[..n].copy_from_slice(&result.a_in);
    let e_out = out.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    let e_in = inp.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    if e_out == T::zero() {
        return Ok(EchoMetrics { j_peak, t_peak, waveform_fidelity: T::zero(), best_delay: T::zero() });
    }

    // corr(s) = sum_i out[i] conj(in[i - s]) = IDFT(OUT * conj(IN))
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(len);
    fwd.process(&mut out);
    fwd.process(&mut inp);
    for (o, x) in out.iter_mut().zip(&inp) {
        *o = *o * x.conj();
    }
    planner.plan_fft_inverse(len).process(&mut out);
    let lenf = T::from_usize(len).unwrap();
    let (shift, best) = out
        .iter()
        .enumerate()
        .map(|(s, z)| (s, (z / lenf).norm_sqr()))
        .fold((0, T::neg_infinity()), |b, x| if x.1 > b.1 { x } else { b });
    let lag = if shift < len / 2 { shift as i64 } else { shift as i64 - len as i64 };
    Ok(EchoMetrics {
        j_peak,
        t_peak,
        waveform_fidelity: best / (e_out * e_in),
        best_delay: result.dt() * T::from_i64(lag).unwrap(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StoreRetrieveRun<T> {
    pub result: SimulationResult<T>,
    pub cycles: u32,
    pub t_switch_off: T,
    pub t_switch_on: T,
    pub revival_period: T,
    /// Echo energy after switch-on over the input energy.
    pub efficiency: T,
    /// Echo peak time minus the input pulse center.
    pub echo_delay: T,
    pub echo: EchoMetrics<T>,
}

/// Load with the switch on, disconnect at the instant the common resonator
/// empties, hold for `cycles` revival periods, reconnect and read out.
///
/// The run starts `LEAD_SIGMAS` pulse widths before the pulse center and
/// ends `ECHO_WINDOW_PERIODS` revival periods after reconnection. With
/// `cycles = 0` the switch never opens and the split between reflected and
/// echo energy sits at the would-be switch-off instant.
pub fn store_retrieve<T: Real>(
    config: &MemoryConfig<T>,
    pulse: &GaussianPulse<T>,
    cycles: u32,
    dt: T,
) -> Result<StoreRetrieveRun<T>> {
    let config = config.clone().validated()?;
    if !(config.kappa0 > T::zero()) {
        return Err(Error::InvalidArgument("kappa0 must be > 0 for loading".into()));
    }
    let storage = eigen::eigenfreqs(&config, T::zero())?;
    let period = storage.revival_period.ok_or(Error::Incommensurate)?;

    let t_start = pulse.center - T::lit(LEAD_SIGMAS) * pulse.sigma;
    let half_period = period / T::lit(2.0);
    let window = (pulse.center, pulse.center + half_period);
    let loading = integrate(
        &config,
        &SwitchSchedule::constant(t_start, config.kappa0),
        pulse,
        window.1 + dt * T::lit(2.0),
        dt,
    )?;
    let t_off = find_switch_time(&loading, window)?;

    let on_index = snap(t_off + period * T::from_u32(cycles).unwrap(), t_start, dt);
    let t_on = t_start + dt * T::from_usize(on_index).unwrap();
    let schedule = SwitchSchedule::store_retrieve(t_start, config.kappa0, t_off, t_on - t_off)?;
    let t_end = t_on + period * T::lit(ECHO_WINDOW_PERIODS);
    let mut result = integrate(&config, &schedule, pulse, t_end, dt)?;
    result.energy = result.energy_split(t_on);
    let efficiency = result.energy.echo / result.energy.input;
    let echo = echo_metrics(&result, (t_on, t_end))?;
    Ok(StoreRetrieveRun {
        echo_delay: echo.t_peak - pulse.center,
        result,
        cycles,
        t_switch_off: t_off,
        t_switch_on: t_on,
        revival_period: period,
        efficiency,
        echo,
    })
}

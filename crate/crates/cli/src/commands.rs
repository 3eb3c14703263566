use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use multimem::optimize::{default_delay_grid, relative_delay};
use multimem::spectral::{linspace, noise_gain, phase_delay, transfer_s};
use multimem::{
    design, echo_metrics, integrate, make_case, scan_merge, store_retrieve, Case, ConfigFile, EnergyLedger,
    GaussianPulse, MemoryConfig, SimulationResult,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::output::{fmt12, write_atomic, write_json, Table};
use crate::svg::{line_plot, Series};
use crate::{CaseArg, Common, RunArgs};

fn case_of(arg: CaseArg) -> Case {
    match arg {
        CaseArg::A => Case::A,
        CaseArg::B => Case::B,
    }
}

fn load(common: &Common) -> Result<ConfigFile<f64>> {
    match (&common.config, common.case) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ConfigFile::from_json(&text).with_context(|| format!("loading {}", path.display()))
        }
        (None, Some(case)) => Ok(ConfigFile { config: make_case(case_of(case)), pulse: None, schedule: None }),
        (None, None) => bail!("either --config or --case is required"),
    }
}

fn out_dir(common: &Common) -> Result<&Path> {
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    Ok(&common.out)
}

pub fn spectrum(common: &Common, lo: f64, hi: f64, points: usize, k: Option<f64>) -> Result<()> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    if !(hi > lo) {
        bail!("--omega-max must exceed --omega-min");
    }
    let file = load(common)?;
    let c = &file.config;
    let k = k.unwrap_or(c.kappa0);
    let grid = linspace(lo, hi, points);
    let tau0 = phase_delay(0.0, c, k).ok();

    let mut table = Table::new(&["omega", "re_s", "im_s", "efficiency", "tau", "tau_r", "noise_gain"]);
    let mut max_dev = 0.0f64;
    let mut plot_e = Vec::with_capacity(points);
    let mut plot_tau = Vec::with_capacity(points);
    for &w in &grid {
        let s = transfer_s(w, c, k)?;
        let e = s.norm_sqr();
        max_dev = max_dev.max((e - 1.0).abs());
        let tau = match tau0 {
            Some(_) => phase_delay(w, c, k)?,
            None => f64::NAN,
        };
        let tau_r = tau0.map_or(f64::NAN, |t0| tau / t0);
        table.row(&[w, s.re, s.im, e, tau, tau_r, noise_gain(w, c, k)?]);
        plot_e.push((w, e));
        plot_tau.push((w, tau_r));
    }

    let dir = out_dir(common)?;
    write_atomic(&dir.join("spectrum.csv"), &table.into_string())?;
    write_json(
        &dir.join("spectrum_summary.json"),
        json!({
            "points": points,
            "k": k,
            "lossless": c.is_lossless(),
            "max_abs_efficiency_minus_one": max_dev,
            "tau0": tau0,
        }),
    )?;
    if common.svg {
        let mut series = vec![Series::new("|S|^2", plot_e)];
        if tau0.is_some() {
            series.push(Series::new("tau_r", plot_tau));
        }
        write_atomic(&dir.join("spectrum.svg"), &line_plot("Spectral response", "omega", "value", &series))?;
    }
    Ok(())
}

pub fn eigen_scan(common: &Common, k_min: f64, k_max: f64, k_steps: usize) -> Result<()> {
    let file = load(common)?;
    let scan = scan_merge(&file.config, k_min, k_max, k_steps)?;
    let n = scan.rows.first().map_or(0, |r| r.frequencies.len());
    let mut header = vec!["k".to_string(), "min_distance".to_string()];
    for i in 1..=n {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    let mut table = Table::new(&header);
    let mut curves = vec![Vec::new(); n];
    for row in &scan.rows {
        let mut values = vec![row.k, row.min_distance];
        for (i, z) in row.frequencies.iter().enumerate() {
            values.push(z.re);
            values.push(z.im);
            curves[i].push((row.k, z.re));
        }
        table.row(&values);
    }
    let summary = match scan.merge_point {
        Some(k) => format!("merge at k = {}", fmt12(k)),
        None => "no merge in range".to_string(),
    };
    let dir = out_dir(common)?;
    write_atomic(&dir.join("eigen_scan.csv"), &table.into_string())?;
    write_json(
        &dir.join("eigen_summary.json"),
        json!({
            "k_min": k_min,
            "k_max": k_max,
            "k_steps": k_steps,
            "merge_point": scan.merge_point,
            "summary": summary,
        }),
    )?;
    if common.svg {
        let series: Vec<Series> =
            curves.into_iter().enumerate().map(|(i, p)| Series::new(format!("Re w{}", i + 1), p)).collect();
        write_atomic(&dir.join("eigen_scan.svg"), &line_plot("Eigenfrequencies", "k", "Re omega", &series))?;
    }
    println!("{summary}");
    Ok(())
}

pub fn optimize(common: &Common, weights: Option<Vec<f64>>, ratio: Option<u32>) -> Result<()> {
    let file = if common.config.is_some() || common.case.is_some() { Some(load(common)?) } else { None };
    let case = common.case.map(case_of);
    let weights: [f64; 3] = match (weights, &file) {
        (Some(w), _) if w.len() == 3 => [w[0], w[1], w[2]],
        (Some(w), _) => bail!("--weights takes exactly three values, got {}", w.len()),
        (None, Some(f)) if f.config.coupling_weights.len() == 3 => {
            [f.config.coupling_weights[0], f.config.coupling_weights[1], f.config.coupling_weights[2]]
        }
        _ => bail!("--weights w1,w2,w3 is required"),
    };
    let ratio = ratio.or(case.map(Case::ratio)).ok_or_else(|| anyhow!("--ratio is required"))?;
    let delta = file.as_ref().map_or(1.0, |f| f.config.delta);
    let report = design(&weights, delta, ratio)?;

    let grid = default_delay_grid(&report.config);
    let tau_r = relative_delay(&report.config, report.kappa, &grid)?;
    let mut table = Table::new(&["omega", "tau_r"]);
    for (&w, &t) in grid.iter().zip(&tau_r) {
        table.row(&[w, t]);
    }
    let dir = out_dir(common)?;
    write_json(&dir.join("design.json"), serde_json::to_value(&report)?)?;
    write_atomic(&dir.join("tau_r.csv"), &table.into_string())?;
    if common.svg {
        let pts = grid.iter().copied().zip(tau_r).collect();
        let plot = line_plot("Relative phase delay", "omega", "tau_r", &[Series::new("tau_r", pts)]);
        write_atomic(&dir.join("tau_r.svg"), &plot)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
struct RunSummary {
    efficiency: f64,
    waveform_fidelity: f64,
    j_peak: f64,
    t_peak: f64,
    echo_delay: f64,
    cycles: Option<u32>,
    t_switch_off: Option<f64>,
    t_switch_on: Option<f64>,
    revival_period: Option<f64>,
    sigma: f64,
    dt: f64,
    energy: EnergyLedger<f64>,
    energy_closure_error: f64,
}

fn pulse_for(file: &ConfigFile<f64>, sigma: Option<f64>) -> Result<GaussianPulse<f64>> {
    let pulse = match (sigma, file.pulse) {
        (None, Some(p)) => GaussianPulse::normalized(p.sigma, p.center),
        (s, _) => {
            let sigma = s.unwrap_or(1.0);
            GaussianPulse::normalized(sigma, multimem::dynamics::LEAD_SIGMAS * sigma)
        }
    };
    if !(pulse.sigma > 0.0) {
        bail!("--sigma must be > 0");
    }
    Ok(pulse)
}

fn run_once(
    config: &MemoryConfig<f64>,
    file: &ConfigFile<f64>,
    pulse: &GaussianPulse<f64>,
    run: &RunArgs,
    cycles: Option<u32>,
) -> Result<(RunSummary, SimulationResult<f64>)> {
    match (cycles, file.switch_schedule()) {
        (None, Some(schedule)) => {
            let schedule = schedule?;
            let t_end = run.t_end.ok_or_else(|| anyhow!("--t-end is required with a config schedule"))?;
            let result = integrate(config, &schedule, pulse, t_end, run.dt)?;
            let on = schedule.retrieval_start().unwrap_or(schedule.start());
            let echo = echo_metrics(&result, (on, t_end))?;
            let summary = RunSummary {
                efficiency: result.energy.echo / result.energy.input,
                waveform_fidelity: echo.waveform_fidelity,
                j_peak: echo.j_peak,
                t_peak: echo.t_peak,
                echo_delay: echo.t_peak - pulse.center,
                cycles: None,
                t_switch_off: None,
                t_switch_on: schedule.retrieval_start(),
                revival_period: None,
                sigma: pulse.sigma,
                dt: run.dt,
                energy: result.energy,
                energy_closure_error: result.energy.closure_error(),
            };
            Ok((summary, result))
        }
        (m, _) => {
            let m = m.unwrap_or(0);
            let r = store_retrieve(config, pulse, m, run.dt)?;
            let summary = RunSummary {
                efficiency: r.efficiency,
                waveform_fidelity: r.echo.waveform_fidelity,
                j_peak: r.echo.j_peak,
                t_peak: r.echo.t_peak,
                echo_delay: r.echo_delay,
                cycles: Some(m),
                t_switch_off: Some(r.t_switch_off),
                t_switch_on: Some(r.t_switch_on),
                revival_period: Some(r.revival_period),
                sigma: pulse.sigma,
                dt: run.dt,
                energy: r.result.energy,
                energy_closure_error: r.result.energy.closure_error(),
            };
            Ok((summary, r.result))
        }
    }
}

fn timeseries_csv(r: &SimulationResult<f64>) -> String {
    let mut header = vec!["t".to_string(), "re_ain".into(), "im_ain".into(), "re_a".into(), "im_a".into()];
    for n in 1..=r.b.len() {
        header.push(format!("re_b{n}"));
        header.push(format!("im_b{n}"));
    }
    header.extend(["re_aout".into(), "im_aout".into(), "k".into(), "J".into()]);
    let j = r.relative_intensity();
    let mut table = Table::new(&header);
    let mut row = Vec::with_capacity(header.len());
    for i in 0..r.len() {
        row.clear();
        row.extend([r.t_grid[i], r.a_in[i].re, r.a_in[i].im, r.a[i].re, r.a[i].im]);
        for b in &r.b {
            row.extend([b[i].re, b[i].im]);
        }
        row.extend([r.a_out[i].re, r.a_out[i].im, r.k_of_t[i], j[i]]);
        table.row(&row);
    }
    table.into_string()
}

pub fn simulate(common: &Common, run: &RunArgs) -> Result<()> {
    let file = load(common)?;
    let pulse = pulse_for(&file, run.sigma)?;
    let (summary, result) = run_once(&file.config, &file, &pulse, run, run.cycles)?;
    let dir = out_dir(common)?;
    write_atomic(&dir.join("timeseries.csv"), &timeseries_csv(&result))?;
    write_json(&dir.join("summary.json"), serde_json::to_value(&summary)?)?;
    if common.svg {
        let pts = result.t_grid.iter().copied().zip(result.relative_intensity()).collect();
        let plot = line_plot("Echo intensity", "t", "J(t)", &[Series::new("J", pts)]);
        write_atomic(&dir.join("echo.svg"), &plot)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Param {
    Gamma,
    Gamma0,
    Sigma,
    Kappa0,
    F,
    Cycles,
}

#[derive(Clone, Debug, PartialEq)]
struct SweepSpec {
    name: String,
    param: Param,
    values: Vec<f64>,
}

fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let (name, range) = text.split_once('=').ok_or_else(|| anyhow!("usage: --sweep NAME=lo:hi:steps"))?;
    let param = match name.trim() {
        "gamma" => Param::Gamma,
        "gamma0" => Param::Gamma0,
        "sigma" => Param::Sigma,
        "kappa0" => Param::Kappa0,
        "f" => Param::F,
        "cycles" => Param::Cycles,
        other => bail!("unknown sweep parameter '{other}' (expected gamma, gamma0, sigma, kappa0, f or cycles)"),
    };
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        bail!("usage: --sweep NAME=lo:hi:steps");
    };
    let lo: f64 = lo.trim().parse().with_context(|| format!("bad lower bound '{lo}'"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("bad upper bound '{hi}'"))?;
    let steps: usize = steps.trim().parse().with_context(|| format!("bad step count '{steps}'"))?;
    if steps == 0 || hi < lo || !lo.is_finite() || !hi.is_finite() {
        bail!("usage: empty sweep range {lo}:{hi}:{steps}");
    }
    let values = if steps == 1 { vec![lo] } else { linspace(lo, hi, steps) };
    Ok(SweepSpec { name: name.trim().to_string(), param, values })
}

pub fn sweep(common: &Common, run: &RunArgs, spec: &str) -> Result<()> {
    let spec = parse_sweep(spec)?;
    let file = load(common)?;
    let dir = out_dir(common)?;
    let jobs_dir = dir.join("sweep_jobs");
    fs::create_dir_all(&jobs_dir).with_context(|| format!("creating {}", jobs_dir.display()))?;

    let rows: Vec<RunSummary> = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| -> Result<RunSummary> {
            let mut config = file.config.clone();
            let mut sigma = run.sigma;
            let mut cycles = run.cycles;
            match spec.param {
                Param::Gamma => {
                    config.gamma.iter_mut().for_each(|g| *g = v);
                    config.gamma0 = v;
                }
                Param::Gamma0 => config.gamma0 = v,
                Param::Sigma => sigma = Some(v),
                Param::Kappa0 => config.kappa0 = v,
                Param::F => config.f = v,
                Param::Cycles => cycles = Some(v.round().max(0.0) as u32),
            }
            let pulse = pulse_for(&file, sigma)?;
            let (summary, _) = run_once(&config, &file, &pulse, run, Some(cycles.unwrap_or(0)))
                .with_context(|| format!("sweep job {} ({} = {v})", i, spec.name))?;
            let mut doc = serde_json::to_value(&summary)?;
            doc[spec.name.as_str()] = json!(v);
            write_json(&jobs_dir.join(format!("job_{i:03}.json")), doc)?;
            Ok(summary)
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        spec.name.as_str(),
        "eta",
        "waveform_fidelity",
        "j_peak",
        "echo_delay",
        "t_switch_off",
        "revival_period",
        "energy_closure_error",
    ]);
    for (&v, r) in spec.values.iter().zip(&rows) {
        table.row(&[
            v,
            r.efficiency,
            r.waveform_fidelity,
            r.j_peak,
            r.echo_delay,
            r.t_switch_off.unwrap_or(f64::NAN),
            r.revival_period.unwrap_or(f64::NAN),
            r.energy_closure_error,
        ]);
    }
    write_atomic(&dir.join("sweep.csv"), &table.into_string())?;
    if common.svg {
        let pts = spec.values.iter().copied().zip(rows.iter().map(|r| r.efficiency)).collect();
        let plot = line_plot("Retrieval efficiency", &spec.name, "eta", &[Series::new("eta", pts)]);
        write_atomic(&dir.join("sweep.svg"), &plot)?;
    }
    Ok(())
}

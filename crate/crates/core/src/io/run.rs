//! Mode dispatch: runs one mode from a resolved config, writes plot tables,
//! traces and the report into the output directory.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use super::atomic::{write_atomic, write_table};
use super::config::{FieldError, Mode, RunConfig};
use super::report::{Provenance, Report, FORMAT_VERSION, TOOL_NAME, TOOL_VERSION};
use super::trace_csv::{read_trace, write_trace};
use crate::chip::{
    linear_fit_mse, optimize_geometry, run_monte_carlo_with, synthesize_s21, ChipDesign,
    SearchGrid, ThicknessModel, RNG_ALGORITHM,
};
use crate::fit::{
    fit_resonances, fit_tls, photon_number_scaled, power_at_chip, thermal_factor, tls_internal_q,
    FitOptions, NotchParams, PreprocessOptions, ResonanceFit, S21Trace, TlsPoint,
};
use crate::kinetic::{kinetic_params, penetration_depth, KineticMode};
use crate::parallel::Execution;
use crate::resonator::{frequency_shift, thickness_sensitivity};
use crate::{Error, Result};

const MHZ: f64 = 1e6;
const NM: f64 = 1e-9;
const UM: f64 = 1e-6;

/// Files written by a mode, relative to the output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let p = self.path(name);
        write_table(&p, header, rows)
    }

    fn trace(&mut self, name: &str, trace: &S21Trace) -> Result<PathBuf> {
        let p = self.path(name);
        write_trace(&p, trace)?;
        Ok(p)
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Runs `mode`, writing `report.json`, `resolved_config.toml` and the
/// mode's tables under `cfg.output_dir`.
pub fn run(mode: Mode, cfg: &RunConfig, exec: Execution) -> Result<Report> {
    let started = unix_now();
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        files: Vec::new(),
    };
    let results = match mode {
        Mode::Design => design(cfg, &mut out)?,
        Mode::Sweep => sweep(cfg, exec, &mut out)?,
        Mode::Mc => monte_carlo(cfg, exec, &mut out)?,
        Mode::Synth => synth(cfg, &mut out)?,
        Mode::Fit => fit(cfg, exec, &mut out)?,
        Mode::Tls => tls(cfg, exec, &mut out)?,
    };
    let mut raw = cfg.raw.clone();
    raw.mode = Some(mode);
    let config_toml = toml::to_string_pretty(&raw).expect("config is always representable");
    let toml_path = out.path("resolved_config.toml");
    write_atomic(&toml_path, config_toml.as_bytes())?;
    out.files.push("report.json".into());
    let report = Report {
        tool: TOOL_NAME.into(),
        tool_version: TOOL_VERSION.into(),
        format_version: FORMAT_VERSION,
        mode,
        config: raw,
        config_toml,
        results,
        files: out.files.clone(),
        provenance: Provenance {
            seed: cfg.seed,
            rng: RNG_ALGORITHM.into(),
            started_unix: started,
            finished_unix: unix_now(),
        },
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&cfg.output_dir.join("report.json"), text.as_bytes())?;
    Ok(report)
}

fn design(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let chip = &cfg.chip;
    let models = chip.design(KineticMode::Full)?;
    let predicted: Vec<f64> = models.iter().map(|m| m.f_full / MHZ).collect();
    let lf = linear_fit_mse(&predicted)?;
    let mut resonators = Vec::new();
    let mut rows = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let target = chip.target_frequency(i);
        resonators.push(json!({
            "index": i,
            "f_target_hz": target,
            "length_m": m.length(),
            "f_predicted_hz": m.f_full,
            "f_geometric_hz": m.f_geometric,
            "delta_f_hz": frequency_shift(m),
            "kinetic_fraction": m.tl.kinetic_fraction(),
            "sensitivity_hz_per_nm": thickness_sensitivity(m)? * NM,
        }));
        rows.push(vec![
            i as f64,
            target / MHZ,
            m.f_full / MHZ,
            m.f_geometric / MHZ,
            lf.predict(i),
        ]);
    }
    out.table(
        "design_frequencies.csv",
        &[
            "index",
            "f_target_mhz",
            "f_predicted_mhz",
            "f_geometric_mhz",
            "f_linear_fit_mhz",
        ],
        &rows,
    )?;
    let kp = kinetic_params(&chip.geom, &chip.mat)?;
    let mean_shift = models.iter().map(frequency_shift).sum::<f64>() / models.len() as f64 / MHZ;
    Ok(json!({
        "resonators": resonators,
        "linear_fit": lf,
        "mean_delta_f_mhz": mean_shift,
        "kinetic": kp,
    }))
}

fn sweep(cfg: &RunConfig, exec: Execution, out: &mut Outputs) -> Result<Value> {
    let base = &cfg.chip;
    let plan = &cfg.sweep;
    let with_geom = |s: f64, w: f64, d: f64| ChipDesign {
        geom: crate::em::CpwGeometry {
            w,
            s,
            d,
            length: None,
        },
        ..*base
    };
    let disorder = |d: f64| ThicknessModel {
        d_nominal: d,
        sigma_d: plan.sigma_rel * d,
        gradient_d: cfg.thickness.gradient_d,
    };

    let mut thickness = Vec::new();
    let mut rows = Vec::new();
    for &d in &plan.thicknesses {
        let chip = with_geom(base.geom.s, base.geom.w, d);
        let mc = run_monte_carlo_with(&chip, &disorder(d), cfg.trials, cfg.seed, exec)?;
        let kp = kinetic_params(&chip.geom, &chip.mat)?;
        rows.push(vec![
            d / NM,
            mc.mean_mse(),
            mc.mean_delta_f(),
            kp.kinetic_fraction,
        ]);
        thickness.push(json!({
            "d_nm": d / NM,
            "mean_mse_mhz2": mc.mean_mse(),
            "mean_delta_f_mhz": mc.mean_delta_f(),
            "kinetic_fraction": kp.kinetic_fraction,
        }));
    }
    out.table(
        "mse_vs_thickness.csv",
        &[
            "d_nm",
            "mean_mse_mhz2",
            "mean_delta_f_mhz",
            "kinetic_fraction",
        ],
        &rows,
    )?;

    let d = base.geom.d;
    let mut geometry = Vec::new();
    let mut rows = Vec::new();
    for &s in &plan.gaps {
        let w = plan.footprint - 2.0 * s;
        let chip = with_geom(s, w, d);
        let mc = run_monte_carlo_with(&chip, &disorder(d), cfg.trials, cfg.seed, exec)?;
        let kp = kinetic_params(&chip.geom, &chip.mat)?;
        rows.push(vec![
            s / UM,
            w / UM,
            mc.mean_mse(),
            mc.mean_delta_f(),
            kp.kinetic_fraction,
        ]);
        geometry.push(json!({
            "s_um": s / UM,
            "w_um": w / UM,
            "mean_mse_mhz2": mc.mean_mse(),
            "mean_delta_f_mhz": mc.mean_delta_f(),
            "kinetic_fraction": kp.kinetic_fraction,
        }));
    }
    out.table(
        "mse_vs_geometry.csv",
        &[
            "s_um",
            "w_um",
            "mean_mse_mhz2",
            "mean_delta_f_mhz",
            "kinetic_fraction",
        ],
        &rows,
    )?;

    let ranking = optimize_geometry(
        plan.footprint,
        d,
        &base.mat,
        &SearchGrid::with_step(plan.grid_step),
    )?;
    out.table(
        "geometry_ranking.csv",
        &["s_um", "w_um", "kinetic_fraction"],
        &ranking
            .iter()
            .map(|c| vec![c.s / UM, c.w / UM, c.kinetic_fraction])
            .collect::<Vec<_>>(),
    )?;

    let lambda_rows = (1..=50)
        .map(|i| {
            let d = 10.0 * i as f64 * NM;
            Ok(vec![d / NM, penetration_depth(d, base.mat.lambda0)? / NM])
        })
        .collect::<Result<Vec<_>>>()?;
    out.table(
        "penetration_depth.csv",
        &["d_nm", "lambda_eff_nm"],
        &lambda_rows,
    )?;

    Ok(json!({
        "sigma_rel": plan.sigma_rel,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "thickness": thickness,
        "geometry": geometry,
        "ranking": ranking,
    }))
}

fn monte_carlo(cfg: &RunConfig, exec: Execution, out: &mut Outputs) -> Result<Value> {
    let mc = run_monte_carlo_with(&cfg.chip, &cfg.thickness, cfg.trials, cfg.seed, exec)?;
    let rows: Vec<Vec<f64>> = mc
        .mse_samples
        .iter()
        .zip(&mc.delta_f_samples)
        .enumerate()
        .map(|(t, (m, d))| vec![t as f64, *m, *d])
        .collect();
    out.table(
        "mc_samples.csv",
        &["trial", "mse_mhz2", "delta_f_mhz"],
        &rows,
    )?;
    Ok(json!({
        "mean_mse_mhz2": mc.mean_mse(),
        "mean_delta_f_mhz": mc.mean_delta_f(),
        "thickness_model": cfg.thickness,
        "samples": mc,
    }))
}

/// Solves `n = n(P, Q(Qi(n)))` by fixed-point iteration; `Qi` depends on
/// `n` only through a square root, so the map is a contraction.
fn self_consistent_photons(
    p_chip_dbm: f64,
    f0: f64,
    qc: f64,
    phi: f64,
    impedance_factor: f64,
    qi_of_n: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let mut n = 1.0;
    let mut qi = qi_of_n(n);
    for _ in 0..500 {
        let q = 1.0 / (1.0 / qi + phi.cos() / qc);
        let next = photon_number_scaled(p_chip_dbm, f0, q, qc, impedance_factor)?;
        let done = ((next - n) / next).abs() < 1e-14;
        n = next;
        qi = qi_of_n(n);
        if done {
            break;
        }
    }
    Ok((n, qi))
}

fn window(f0: f64, half: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| f0 - half + 2.0 * half * k as f64 / (n - 1) as f64)
        .collect()
}

fn synth(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let chip = &cfg.chip;
    let plan = &cfg.synth;
    let models = chip.design(KineticMode::Full)?;
    let params: Vec<NotchParams> = models
        .iter()
        .map(|m| NotchParams {
            f0: m.f_full,
            qi: plan.qi,
            qc: chip.q_c_nominal,
            phi: plan.phi,
        })
        .collect();
    let mut resonators = Vec::new();
    let mut overlapping = false;
    for (i, p) in params.iter().enumerate() {
        let grid = window(
            p.f0,
            plan.window_linewidths * p.linewidth(),
            plan.points_per_window,
        );
        let syn = synthesize_s21(
            &params,
            &grid,
            plan.noise_sigma,
            cfg.seed.wrapping_add(i as u64),
        )?;
        overlapping |= syn.overlapping;
        let name = format!("traces/resonator_{i:02}.csv");
        out.trace(&name, &syn.trace)?;
        resonators.push(json!({
            "index": i,
            "params": p,
            "q_loaded": p.loaded_q(),
            "linewidth_hz": p.linewidth(),
            "trace": name,
        }));
    }
    if plan.overview_points >= 2 {
        let lo = chip.target_frequency(0) - chip.f_gap;
        let hi = chip.target_frequency(chip.n_resonators - 1) + chip.f_gap;
        let grid = window(0.5 * (lo + hi), 0.5 * (hi - lo), plan.overview_points);
        let syn = synthesize_s21(&params, &grid, 0.0, cfg.seed)?;
        out.trace("traces/overview.csv", &syn.trace)?;
    }

    let mut sweep = Vec::new();
    if let Some(ps) = &plan.power_sweep {
        let base = params[ps.resonator];
        let thermal = thermal_factor(chip.mat.temperature, base.f0);
        let qi_of_n = |n: f64| tls_internal_q(n, ps.f_delta0, ps.n_c, ps.q_others, thermal);
        let mut rows = Vec::new();
        for (k, &p_src) in ps.source_dbm.iter().enumerate() {
            let p_chip = power_at_chip(p_src, &cfg.chain);
            let (n, qi) = self_consistent_photons(
                p_chip,
                base.f0,
                base.qc,
                base.phi,
                cfg.impedance_factor,
                qi_of_n,
            )?;
            let mut local = params.clone();
            local[ps.resonator].qi = qi;
            let p = local[ps.resonator];
            let grid = window(
                p.f0,
                plan.window_linewidths * p.linewidth(),
                plan.points_per_window,
            );
            let seed = cfg.seed.wrapping_add(1000 + k as u64);
            let mut trace = synthesize_s21(&local, &grid, plan.noise_sigma, seed)?.trace;
            trace.power_dbm = Some(p_src);
            let name = format!("power_sweep/p_{k:02}.csv");
            out.trace(&name, &trace)?;
            rows.push(vec![p_src, p_chip, n, qi]);
            sweep.push(json!({
                "source_dbm": p_src,
                "chip_dbm": p_chip,
                "n_photons": n,
                "qi": qi,
                "trace": name,
            }));
        }
        out.table(
            "power_sweep.csv",
            &["source_dbm", "chip_dbm", "n_photons", "qi"],
            &rows,
        )?;
    }
    Ok(json!({
        "resonators": resonators,
        "overlapping": overlapping,
        "power_sweep": sweep,
    }))
}

fn load_traces(cfg: &RunConfig) -> Result<Vec<S21Trace>> {
    if cfg.traces.is_empty() {
        return Err(Error::Config(vec![FieldError {
            path: "fit.traces".into(),
            message: "no trace files given".into(),
        }]));
    }
    cfg.traces.iter().map(|p| read_trace(p)).collect()
}

fn fit_all(cfg: &RunConfig, exec: Execution) -> Result<(Vec<S21Trace>, Vec<ResonanceFit>)> {
    let traces = load_traces(cfg)?;
    let options = FitOptions {
        preprocess: cfg.preprocess,
        preprocess_options: PreprocessOptions {
            wing_fraction: cfg.wing_fraction,
            ..PreprocessOptions::default()
        },
        ..FitOptions::default()
    };
    let fits = fit_resonances(&traces, &options, exec)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok((traces, fits))
}

fn paths(cfg: &RunConfig) -> Vec<String> {
    cfg.traces.iter().map(|p| display(p)).collect()
}

fn display(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn fit(cfg: &RunConfig, exec: Execution, out: &mut Outputs) -> Result<Value> {
    let (_, fits) = fit_all(cfg, exec)?;
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| fits[a].params.f0.total_cmp(&fits[b].params.f0));
    let sorted: Vec<f64> = order.iter().map(|&i| fits[i].params.f0 / MHZ).collect();
    let lf = if sorted.len() >= 2 {
        Some(linear_fit_mse(&sorted)?)
    } else {
        None
    };

    let design = if fits.len() == cfg.chip.n_resonators {
        Some(cfg.chip.design(KineticMode::Full)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut comparison = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        let f = &fits[i];
        let designed = design.as_ref().map(|d| d[rank].f_full);
        let rel = designed.map(|d| (f.params.f0 - d) / d);
        comparison.push(json!({
            "index": rank,
            "trace": display(&cfg.traces[i]),
            "f_design_hz": designed,
            "relative_deviation": rel,
        }));
        rows.push(vec![
            rank as f64,
            f.params.f0 / MHZ,
            lf.map_or(f64::NAN, |l| l.predict(rank)),
            designed.map_or(f64::NAN, |d| d / MHZ),
            f.params.qi,
            f.uncertainties.qi,
            f.params.qc,
            f.params.phi,
        ]);
    }
    out.table(
        "fit_frequencies.csv",
        &[
            "index",
            "f_fit_mhz",
            "f_linear_fit_mhz",
            "f_design_mhz",
            "qi",
            "qi_sigma",
            "qc",
            "phi_rad",
        ],
        &rows,
    )?;
    let max_dev = comparison
        .iter()
        .filter_map(|c| c["relative_deviation"].as_f64())
        .map(f64::abs)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    Ok(json!({
        "traces": paths(cfg),
        "fits": fits,
        "linear_fit": lf,
        "design_comparison": comparison,
        "max_abs_relative_deviation": max_dev,
    }))
}

fn tls(cfg: &RunConfig, exec: Execution, out: &mut Outputs) -> Result<Value> {
    let (traces, fits) = fit_all(cfg, exec)?;
    let mut points = Vec::new();
    for ((trace, f), path) in traces.iter().zip(&fits).zip(&cfg.traces) {
        let p_src = trace.power_dbm.ok_or_else(|| Error::TraceFormat {
            path: path.clone(),
            line: 1,
            message: "tls mode needs a power_dbm column".into(),
        })?;
        let p_chip = power_at_chip(p_src, &cfg.chain);
        let n = photon_number_scaled(p_chip, f.params.f0, f.q, f.params.qc, cfg.impedance_factor)?;
        points.push(TlsPoint {
            n_photons: n,
            qi: f.params.qi,
            sigma_qi: f.uncertainties.qi,
        });
    }
    let f_mean = fits.iter().map(|f| f.params.f0).sum::<f64>() / fits.len() as f64;
    let tf = fit_tls(&points, cfg.chip.mat.temperature, f_mean)?;
    out.table(
        "qi_vs_n.csv",
        &["n_photons", "qi", "qi_sigma", "qi_model"],
        &points
            .iter()
            .map(|p| vec![p.n_photons, p.qi, p.sigma_qi, tf.qi_at(p.n_photons)])
            .collect::<Vec<_>>(),
    )?;
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.n_photons), hi.max(p.n_photons))
    });
    let (a, b) = ((lo / 10.0).log10(), (hi * 10.0).log10());
    let curve: Vec<Vec<f64>> = (0..200)
        .map(|k| {
            let n = 10f64.powf(a + (b - a) * k as f64 / 199.0);
            vec![n, tf.qi_at(n)]
        })
        .collect();
    out.table("tls_curve.csv", &["n_photons", "qi_model"], &curve)?;
    Ok(json!({
        "traces": paths(cfg),
        "points": points,
        "fit": tf,
        "qi_at_single_photon": tf.qi_at(1.0),
    }))
}

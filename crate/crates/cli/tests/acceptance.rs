//! Acceptance suite: one line per criterion, `PASS` or `FAIL`.
//!
//! Criteria listed in `KNOWN_RED` are evaluated exactly like the others and
//! reported as `FAIL` when they fail, but do not change the exit status.
//! Any other failure, or a known-red criterion that starts passing, exits 1.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use scpw_core::chip::{linear_fit_mse, run_monte_carlo_with, ChipDesign, ThicknessModel};
use scpw_core::constants::{EPSILON_0, MU_0};
use scpw_core::em::{
    cpw_capacitance, cpw_geometric_inductance, effective_permittivity, elliptic_k,
};
use scpw_core::fit::{
    fit_resonance, fit_tls, notch_s21, photon_number, power_at_chip, thermal_factor,
    tls_internal_q, AttenuationChain, AttenuationStage, FitOptions, NotchParams, S21Trace,
    TlsPoint,
};
use scpw_core::kinetic::{kinetic_fraction, penetration_depth, transmission_line, KineticMode};
use scpw_core::parallel::Execution;
use scpw_core::resonator::{frequency_shift, solve_length, ResonatorModel};
use scpw_core::{CpwGeometry, Material};
use scpw_oracles::{coth_exp, elliptic_k_quadrature, ols_brute_force};

const UM: f64 = 1e-6;
const NM: f64 = 1e-9;

/// Criteria that cannot be met by the specified model.
const KNOWN_RED: &[u32] = &[5];

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn material() -> Material {
    Material::new(150.0 * NM, 10.55, 0.013).unwrap()
}

fn geom(s_um: f64, w_um: f64, d_nm: f64) -> CpwGeometry {
    CpwGeometry::new(w_um * UM, s_um * UM, d_nm * NM).unwrap()
}

const PATH: [(f64, f64); 5] = [(7.0, 2.0), (6.0, 4.0), (5.0, 6.0), (4.0, 8.0), (3.0, 10.0)];

fn elliptic_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let k = 0.999 * i as f64 / 49.0;
        worst = worst.max(rel(elliptic_k(k).unwrap(), elliptic_k_quadrature(k)));
    }
    ensure(worst <= 1e-12, format!("max rel err {worst:.2e}"))?;
    Ok(format!("50 moduli, max rel err {worst:.2e}"))
}

fn conformal_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let g = CpwGeometry::new(
            rng.random_range(0.5..50.0) * UM,
            rng.random_range(0.5..50.0) * UM,
            100.0 * NM,
        )
        .unwrap();
        let m = Material::new(150.0 * NM, rng.random_range(1.0..20.0), 0.013).unwrap();
        let prod = cpw_capacitance(&g, &m).unwrap() * cpw_geometric_inductance(&g).unwrap();
        worst = worst.max(rel(prod, MU_0 * EPSILON_0 * (m.eps_r + 1.0) / 2.0));
        worst = worst.max(rel(prod, MU_0 * EPSILON_0 * effective_permittivity(&m)));
    }
    ensure(worst <= 1e-12, format!("max rel err {worst:.2e}"))?;
    Ok(format!("100 geometries, max rel err {worst:.2e}"))
}

fn penetration() -> Outcome {
    let l0 = 150.0 * NM;
    let l300 = penetration_depth(300.0 * NM, l0).unwrap() / NM;
    let l100 = penetration_depth(100.0 * NM, l0).unwrap() / NM;
    let o300 = 150.0 * coth_exp(2.0);
    let o100 = 150.0 * coth_exp(2.0 / 3.0);
    ensure(
        (l300 - o300).abs() < 1e-3,
        format!("λ(300) = {l300} vs {o300}"),
    )?;
    ensure(
        (l100 - o100).abs() < 1e-3,
        format!("λ(100) = {l100} vs {o100}"),
    )?;
    ensure((l300 - 155.597).abs() < 1e-3, format!("λ(300) = {l300}"))?;
    let mut prev = f64::INFINITY;
    for i in 1..=200 {
        let l = penetration_depth(i as f64 * 5.0 * NM, l0).unwrap();
        ensure(l < prev && l >= l0, format!("not monotone at {} nm", 5 * i))?;
        prev = l;
    }
    let far = penetration_depth(100.0 * l0, l0).unwrap();
    ensure(rel(far, l0) < 1e-10, "no thick-film limit")?;
    Ok(format!(
        "λ(300 nm) = {l300:.3} nm, λ(100 nm) = {l100:.3} nm"
    ))
}

fn ranking() -> Outcome {
    let x: Vec<f64> = PATH
        .iter()
        .map(|&(s, w)| kinetic_fraction(&geom(s, w, 100.0), &material()).unwrap())
        .collect();
    ensure(x.windows(2).all(|p| p[1] < p[0]), format!("{x:?}"))?;
    Ok(format!(
        "fractions {}",
        x.iter()
            .map(|v| format!("{v:.3}"))
            .collect::<Vec<_>>()
            .join(" > ")
    ))
}

fn shift_magnitude() -> Outcome {
    let g = geom(7.0, 2.0, 100.0);
    let tl = transmission_line(&g, &material(), KineticMode::GeometricOnly).unwrap();
    let length = solve_length(6.7e9, tl.c_per_len, tl.lm_per_len).unwrap();
    let model = ResonatorModel::new(g.with_length(length).unwrap(), material()).unwrap();
    let df = frequency_shift(&model) / 1e6;
    let detail = format!(
        "Δf = {df:.0} MHz (kinetic fraction {:.3}), allowed [-1500, -167] MHz",
        model.tl.kinetic_fraction()
    );
    ensure(
        df < 0.0 && df.abs() <= 1500.0 && df.abs() >= 500.0 / 3.0,
        detail.clone(),
    )?;
    Ok(detail)
}

fn monte_carlo_trend() -> Outcome {
    let mat = material();
    let chip = |s: f64, w: f64, d: f64| ChipDesign {
        n_resonators: 8,
        f_mean: 6.7e9,
        f_gap: 30e6,
        geom: geom(s, w, d),
        mat,
        q_c_nominal: 7e5,
    };
    let trials = 10_000;
    let seed = 2024;
    let run = |c: &ChipDesign, d: f64, exec| {
        run_monte_carlo_with(
            c,
            &ThicknessModel::relative(d * NM, 0.02),
            trials,
            seed,
            exec,
        )
        .unwrap()
    };
    let by_d: Vec<f64> = [100.0, 200.0, 300.0]
        .iter()
        .map(|&d| run(&chip(16.0, 16.0, d), d, Execution::Parallel).mean_mse())
        .collect();
    ensure(
        by_d.windows(2).all(|p| p[1] < p[0]),
        format!("MSE vs d {by_d:?}"),
    )?;
    let by_path: Vec<f64> = PATH
        .iter()
        .map(|&(s, w)| run(&chip(s, w, 100.0), 100.0, Execution::Parallel).mean_mse())
        .collect();
    ensure(
        by_path.windows(2).all(|p| p[1] < p[0]),
        format!("MSE along path {by_path:?}"),
    )?;
    let c = chip(16.0, 16.0, 100.0);
    let a = run(&c, 100.0, Execution::Parallel);
    let b = run(&c, 100.0, Execution::Serial);
    let again = run(&c, 100.0, Execution::Parallel);
    ensure(
        a == b && a == again,
        "serial/parallel or repeat runs differ",
    )?;
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" > ")
    };
    Ok(format!(
        "MSE [MHz²] vs d: {}; along (s,w) path: {}; deterministic",
        fmt(&by_d),
        fmt(&by_path)
    ))
}

fn resonance_trace(p: &NotchParams, noise: f64, seed: u64) -> S21Trace {
    let n = 801;
    let half = 8.0 * p.linewidth();
    let freq: Vec<f64> = (0..n)
        .map(|i| p.f0 - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    let s21 = freq
        .iter()
        .map(|&f| {
            let env = Complex64::from_polar(0.5, 0.3 - 2.0 * std::f64::consts::PI * f * 10e-9);
            let mut v = notch_s21(f, p) * env;
            if noise > 0.0 {
                v += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
            v
        })
        .collect();
    S21Trace::new(freq, s21, None).unwrap()
}

fn resonance_round_trip() -> Outcome {
    let p = NotchParams {
        f0: 6.636e9,
        qi: 2.5e6,
        qc: 0.7e6,
        phi: 0.1,
    };
    let opts = FitOptions::default();
    let fit = fit_resonance(&resonance_trace(&p, 0.0, 0), &opts).map_err(|e| e.to_string())?;
    let (ef, ei, ec) = (
        rel(fit.params.f0, p.f0),
        rel(fit.params.qi, p.qi),
        rel(fit.params.qc, p.qc),
    );
    ensure(
        ef < 1e-8 && ei < 0.01 && ec < 0.01,
        format!("noiseless {ef:.1e} {ei:.1e} {ec:.1e}"),
    )?;
    let good = (0..100u64)
        .filter(|&seed| {
            fit_resonance(&resonance_trace(&p, 0.01, 1000 + seed), &opts)
                .map(|f| rel(f.params.qi, p.qi) < 0.2)
                .unwrap_or(false)
        })
        .count();
    ensure(good >= 90, format!("noisy: {good}/100 within 20%"))?;
    Ok(format!(
        "noiseless f0 {ef:.1e}, Qi {ei:.1e}, Qc {ec:.1e}; noisy Qi within 20% in {good}/100"
    ))
}

fn tls_round_trip() -> Outcome {
    let (fd, nc, qo, t, f) = (2e-7, 10.0, 5e6, 0.013, 6.636e9);
    let thermal = thermal_factor(t, f);
    let sweep: Vec<TlsPoint> = (0..29)
        .map(|i| {
            let n = 10f64.powf(-1.0 + 0.25 * i as f64);
            let qi = tls_internal_q(n, fd, nc, qo, thermal);
            TlsPoint {
                n_photons: n,
                qi,
                sigma_qi: 0.01 * qi,
            }
        })
        .collect();
    let fit = fit_tls(&sweep, t, f).map_err(|e| e.to_string())?;
    let errs = [
        rel(fit.f_delta0, fd),
        rel(fit.n_c, nc),
        rel(fit.q_others, qo),
    ];
    ensure(errs.iter().all(|e| *e < 0.01), format!("{errs:?}"))?;
    let q1 = fit.qi_at(1.0);
    ensure(rel(q1, 2.5e6) < 0.1, format!("Qi(1) = {q1:.3e}"))?;
    Ok(format!(
        "Fδ⁰ {:.2e}, n_c {:.2e}, Q_others {:.2e} rel err; Qi(⟨n⟩=1) = {q1:.3e}",
        errs[0], errs[1], errs[2]
    ))
}

fn attenuation() -> Outcome {
    let chain = AttenuationChain {
        stages: [
            ("3K", 20.0),
            ("still", 3.0),
            ("cold plate", 6.0),
            ("MXC", 40.0),
        ]
        .into_iter()
        .map(|(l, a)| AttenuationStage {
            label: l.into(),
            attenuation_db: a,
        })
        .collect(),
        cable_loss_db: 10.0,
    };
    let p = power_at_chip(-60.0, &chain);
    ensure(p == -139.0, format!("got {p}"))?;
    let q = 1.0 / (1.0 / 2.5e6 + 1.0 / 0.7e6);
    let n1 = photon_number(power_at_chip(-60.0, &chain), 6.636e9, q, 0.7e6).unwrap();
    let n2 = photon_number(power_at_chip(-60.0 + 3.0103, &chain), 6.636e9, q, 0.7e6).unwrap();
    let r = rel(n2 / n1, 2.0);
    ensure(r < 1e-6, format!("ratio err {r:.1e}"))?;
    Ok(format!(
        "-60 dBm source reaches {p} dBm; +3.0103 dB doubles ⟨n⟩ to {r:.1e}"
    ))
}

fn mse_metric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ours = linear_fit_mse(&y).unwrap();
        let (_, _, brute) = ols_brute_force(&y);
        ensure(ours.mse <= brute + 1e-12, "OLS above grid minimum")?;
        worst = worst.max((brute - ours.mse) / ours.mse.max(1e-12));
    }
    ensure(worst < 1e-6, format!("grid gap {worst:.1e}"))?;
    let chip = ChipDesign {
        n_resonators: 8,
        f_mean: 6.7e9,
        f_gap: 30e6,
        geom: geom(3.0, 10.0, 300.0),
        mat: material(),
        q_c_nominal: 7e5,
    };
    let mhz: Vec<f64> = chip.target_frequencies().iter().map(|f| f / 1e6).collect();
    let lin = linear_fit_mse(&mhz).unwrap();
    ensure(lin.mse == 0.0, format!("linear targets MSE {}", lin.mse))?;
    Ok(format!(
        "20 instances, brute-force gap {worst:.1e}; linear targets MSE = 0"
    ))
}

fn scpw(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_scpw"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!(
            "`scpw {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ),
    )
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn chip_config(out: &str, traces: &[String]) -> String {
    let list = traces
        .iter()
        .map(|t| format!("\"{t}\""))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r#"seed = 7

[chip]
n_resonators = 8
f_mean_ghz = 6.7
f_gap_mhz = 30.0
q_c_nominal = 700000.0

[chip.geom]
w_um = 10.0
s_um = 3.0
d_nm = 300.0

[material]
lambda0_nm = 150.0
eps_r = 10.55
temperature_mk = 13.0

[synth]
q_i = 2500000.0
phi = 0.1
noise_sigma = 0.0
points_per_window = 401
window_linewidths = 10.0
overview_points = 2001

[fit]
preprocess = true
wing_fraction = 0.2
traces = [{list}]

[output]
dir = "{out}"
"#
    )
}

fn cli_pipeline() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let traces: Vec<String> = (0..8)
        .map(|i| format!("synth/traces/resonator_{i:02}.csv"))
        .collect();
    for (name, out, tr) in [
        ("design.toml", "design", &[][..]),
        ("synth.toml", "synth", &[][..]),
        ("fit.toml", "fit", &traces[..]),
    ] {
        std::fs::write(dir.join(name), chip_config(out, tr)).map_err(|e| e.to_string())?;
    }
    scpw(dir, &["design", "--config", "design.toml"])?;
    scpw(dir, &["synth", "--config", "synth.toml"])?;
    scpw(dir, &["fit", "--config", "fit.toml"])?;

    let design = read_json(&dir.join("design/report.json"));
    let fit = read_json(&dir.join("fit/report.json"));
    let mut worst = 0.0f64;
    for i in 0..8 {
        let d = design["results"]["resonators"][i]["f_predicted_hz"]
            .as_f64()
            .unwrap();
        let f = fit["results"]["fits"][i]["params"]["f0"].as_f64().unwrap();
        worst = worst.max(rel(f, d));
    }
    ensure(worst < 1e-6, format!("max rel deviation {worst:.2e}"))?;

    for stage in ["design", "synth", "fit"] {
        let first = read_json(&dir.join(stage).join("report.json"));
        let first_files: Vec<Vec<u8>> = first["files"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|f| f.as_str() != Some("report.json"))
            .map(|f| std::fs::read(dir.join(stage).join(f.as_str().unwrap())).unwrap())
            .collect();
        let echo = format!("{stage}_echo.toml");
        std::fs::write(dir.join(&echo), first["config_toml"].as_str().unwrap())
            .map_err(|e| e.to_string())?;
        scpw(dir, &[stage, "--config", &echo])?;
        let second = read_json(&dir.join(stage).join("report.json"));
        ensure(
            first["results"].to_string() == second["results"].to_string(),
            format!("{stage}: results differ on re-run from echo"),
        )?;
        ensure(
            first["config"] == second["config"],
            format!("{stage}: config echo drifted"),
        )?;
        let second_files: Vec<Vec<u8>> = second["files"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|f| f.as_str() != Some("report.json"))
            .map(|f| std::fs::read(dir.join(stage).join(f.as_str().unwrap())).unwrap())
            .collect();
        ensure(
            first_files == second_files,
            format!("{stage}: emitted files differ"),
        )?;
    }
    Ok(format!(
        "design -> synth -> fit exit 0, max rel deviation {worst:.1e}; echo re-runs bit-identical"
    ))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "elliptic integral vs quadrature oracle", elliptic_oracle),
        (2, "conformal-mapping identity", conformal_identity),
        (3, "penetration depth", penetration),
        (4, "geometry ranking at fixed footprint", ranking),
        (5, "pre-optimization shift magnitude", shift_magnitude),
        (
            6,
            "Monte-Carlo MSE trends and determinism",
            monte_carlo_trend,
        ),
        (7, "resonance-fit round trip", resonance_round_trip),
        (8, "TLS round trip", tls_round_trip),
        (9, "attenuation arithmetic", attenuation),
        (10, "linear-fit MSE metric", mse_metric),
        (11, "CLI design -> synth -> fit pipeline", cli_pipeline),
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_RED.contains(&id);
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let note = match (outcome.is_ok(), known) {
            (false, true) => " (known red)",
            (true, true) => " (known red now passes)",
            _ => "",
        };
        println!("criterion {id:>2} {tag}{note}: {name}: {detail} [{secs:.2}s]");
        if outcome.is_ok() {
            passed += 1;
        }
        if outcome.is_ok() == known {
            unexpected += 1;
        }
    }
    println!("acceptance: {passed}/11 passed, {unexpected} unexpected");
    if unexpected > 0 {
        std::process::exit(1);
    }
}

//! Run configuration: a strict TOML schema with unit-suffixed keys, resolved
//! into SI-valued model types.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chip::{ChipDesign, ThicknessModel};
use crate::em::{CpwGeometry, Material};
use crate::fit::{AttenuationChain, AttenuationStage};
use crate::{Error, Result};

const UM: f64 = 1e-6;
const NM: f64 = 1e-9;

/// A configuration problem at a dotted key path such as `chip.geom.w_um`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Design,
    Sweep,
    Mc,
    Synth,
    Fit,
    Tls,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Design,
        Mode::Sweep,
        Mode::Mc,
        Mode::Synth,
        Mode::Fit,
        Mode::Tls,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Design => "design",
            Mode::Sweep => "sweep",
            Mode::Mc => "mc",
            Mode::Synth => "synth",
            Mode::Fit => "fit",
            Mode::Tls => "tls",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// The file schema. Every section rejects unknown keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub chip: ChipSection,
    pub material: MaterialSection,
    #[serde(default)]
    pub thickness: ThicknessSection,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChipSection {
    pub n_resonators: usize,
    pub f_mean_ghz: f64,
    pub f_gap_mhz: f64,
    #[serde(default = "default_qc")]
    pub q_c_nominal: f64,
    pub geom: GeomSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeomSection {
    pub w_um: f64,
    pub s_um: f64,
    pub d_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub lambda0_nm: f64,
    pub eps_r: f64,
    #[serde(default = "default_temperature_mk")]
    pub temperature_mk: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessSection {
    /// Gaussian disorder relative to the nominal thickness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_rel: Option<f64>,
    /// Absolute Gaussian disorder; exclusive with `sigma_rel`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_nm: Option<f64>,
    /// Linear drift per resonator index.
    #[serde(default)]
    pub gradient_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default)]
    pub cable_loss_db: f64,
    #[serde(default = "one")]
    pub impedance_factor: f64,
    #[serde(default)]
    pub stages: Vec<StageSection>,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            cable_loss_db: 0.0,
            impedance_factor: 1.0,
            stages: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSection {
    pub label: String,
    pub atten_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub d_nm: Vec<f64>,
    pub footprint_um: f64,
    pub s_um: Vec<f64>,
    pub grid_step_um: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            d_nm: vec![100.0, 200.0, 300.0],
            footprint_um: 16.0,
            s_um: vec![7.0, 6.0, 5.0, 4.0, 3.0],
            grid_step_um: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub q_i: f64,
    pub phi: f64,
    /// Standard deviation of each of the real and imaginary noise parts.
    pub noise_sigma: f64,
    pub points_per_window: usize,
    /// Half-width of each per-resonator window, in loaded linewidths.
    pub window_linewidths: f64,
    /// Points in the full-band overview trace; 0 disables it.
    pub overview_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_sweep: Option<PowerSweepSection>,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            q_i: 2.5e6,
            phi: 0.1,
            noise_sigma: 0.0,
            points_per_window: 401,
            window_linewidths: 10.0,
            overview_points: 20001,
            power_sweep: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSweepSection {
    pub resonator: usize,
    pub source_dbm: Vec<f64>,
    pub f_delta0: f64,
    pub n_c: f64,
    pub q_others: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub preprocess: bool,
    pub wing_fraction: f64,
    /// Trace files; relative paths are resolved against the config file.
    pub traces: Vec<PathBuf>,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            preprocess: true,
            wing_fraction: 0.2,
            traces: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

fn default_seed() -> u64 {
    42
}

fn default_trials() -> usize {
    1000
}

fn default_qc() -> f64 {
    7e5
}

fn default_temperature_mk() -> f64 {
    13.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub thicknesses: Vec<f64>,
    pub footprint: f64,
    pub gaps: Vec<f64>,
    pub grid_step: f64,
    pub sigma_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSweepPlan {
    pub resonator: usize,
    pub source_dbm: Vec<f64>,
    pub f_delta0: f64,
    pub n_c: f64,
    pub q_others: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPlan {
    pub qi: f64,
    pub phi: f64,
    pub noise_sigma: f64,
    pub points_per_window: usize,
    pub window_linewidths: f64,
    pub overview_points: usize,
    pub power_sweep: Option<PowerSweepPlan>,
}

/// A validated configuration in SI units. `raw` is the resolved file
/// content, suitable for echoing and re-running.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub trials: usize,
    pub chip: ChipDesign,
    pub thickness: ThicknessModel,
    pub chain: AttenuationChain,
    pub impedance_factor: f64,
    pub sweep: SweepPlan,
    pub synth: SynthPlan,
    pub preprocess: bool,
    pub wing_fraction: f64,
    pub traces: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub raw: RawConfig,
}

impl RunConfig {
    /// Re-resolves after the raw section was edited (e.g. CLI overrides).
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        resolve(raw)
    }

    /// Resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.raw).expect("config is always representable")
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let abs = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
    parse_config_str(&text, abs.parent().unwrap_or(Path::new(".")))
}

/// Parses `text`, resolving relative trace paths against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| {
        Error::Config(vec![FieldError {
            path: String::new(),
            message: e.message().to_string(),
        }])
    })?;
    let mut raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        Error::Config(vec![FieldError {
            path: e.path().to_string(),
            message: e.inner().message().to_string(),
        }])
    })?;
    for t in &mut raw.fit.traces {
        if t.is_relative() {
            *t = base_dir.join(&*t);
        }
    }
    resolve(raw)
}

struct Checker(Vec<FieldError>);

impl Checker {
    fn check(&mut self, ok: bool, path: impl Into<String>, message: &str) {
        if !ok {
            self.0.push(FieldError {
                path: path.into(),
                message: message.to_string(),
            });
        }
    }

    fn positive(&mut self, v: f64, path: impl Into<String>) {
        self.check(
            v > 0.0 && v.is_finite(),
            path,
            "must be positive and finite",
        );
    }

    fn non_negative(&mut self, v: f64, path: impl Into<String>) {
        self.check(
            v >= 0.0 && v.is_finite(),
            path,
            "must be non-negative and finite",
        );
    }
}

fn resolve(mut raw: RawConfig) -> Result<RunConfig> {
    let mut c = Checker(Vec::new());
    let chip = &raw.chip;
    c.check(
        chip.n_resonators >= 2,
        "chip.n_resonators",
        "must be at least 2",
    );
    c.positive(chip.f_mean_ghz, "chip.f_mean_ghz");
    c.positive(chip.f_gap_mhz, "chip.f_gap_mhz");
    c.positive(chip.q_c_nominal, "chip.q_c_nominal");
    let g = &chip.geom;
    c.positive(g.w_um, "chip.geom.w_um");
    c.positive(g.s_um, "chip.geom.s_um");
    c.positive(g.d_nm, "chip.geom.d_nm");
    c.check(
        !(g.d_nm * NM >= g.w_um * UM),
        "chip.geom.d_nm",
        "film must be thinner than the strip width",
    );
    if chip.n_resonators >= 2 && chip.f_mean_ghz > 0.0 {
        let half = 0.5 * (chip.n_resonators as f64 - 1.0) * chip.f_gap_mhz * 1e6;
        c.check(
            chip.f_mean_ghz * 1e9 - half > 0.0,
            "chip.f_gap_mhz",
            "lowest target frequency must be positive",
        );
    }
    let m = &raw.material;
    c.positive(m.lambda0_nm, "material.lambda0_nm");
    c.check(
        m.eps_r >= 1.0 && m.eps_r.is_finite(),
        "material.eps_r",
        "must be >= 1",
    );
    c.positive(m.temperature_mk, "material.temperature_mk");

    let t = &mut raw.thickness;
    c.check(
        !(t.sigma_rel.is_some() && t.sigma_nm.is_some()),
        "thickness.sigma_nm",
        "give either sigma_rel or sigma_nm, not both",
    );
    if t.sigma_rel.is_none() && t.sigma_nm.is_none() {
        t.sigma_rel = Some(0.02);
    }
    if let Some(v) = t.sigma_rel {
        c.non_negative(v, "thickness.sigma_rel");
    }
    if let Some(v) = t.sigma_nm {
        c.non_negative(v, "thickness.sigma_nm");
    }
    c.check(
        t.gradient_nm.is_finite(),
        "thickness.gradient_nm",
        "must be finite",
    );
    c.check(raw.trials >= 1, "trials", "must be at least 1");

    let ch = &raw.chain;
    c.non_negative(ch.cable_loss_db, "chain.cable_loss_db");
    c.positive(ch.impedance_factor, "chain.impedance_factor");
    for (i, s) in ch.stages.iter().enumerate() {
        c.non_negative(s.atten_db, format!("chain.stages[{i}].atten_db"));
    }

    let sw = &raw.sweep;
    c.check(!sw.d_nm.is_empty(), "sweep.d_nm", "must not be empty");
    for (i, d) in sw.d_nm.iter().enumerate() {
        c.positive(*d, format!("sweep.d_nm[{i}]"));
    }
    c.positive(sw.footprint_um, "sweep.footprint_um");
    c.positive(sw.grid_step_um, "sweep.grid_step_um");
    for (i, s) in sw.s_um.iter().enumerate() {
        c.check(
            *s > 0.0 && 2.0 * s < sw.footprint_um,
            format!("sweep.s_um[{i}]"),
            "must lie in (0, footprint_um / 2)",
        );
    }

    let sy = &raw.synth;
    c.positive(sy.q_i, "synth.q_i");
    c.check(
        sy.phi.abs() < std::f64::consts::FRAC_PI_2,
        "synth.phi",
        "must satisfy |phi| < pi/2",
    );
    c.non_negative(sy.noise_sigma, "synth.noise_sigma");
    c.check(
        sy.points_per_window >= 20,
        "synth.points_per_window",
        "must be at least 20",
    );
    c.check(
        sy.window_linewidths >= 1.5 && sy.window_linewidths.is_finite(),
        "synth.window_linewidths",
        "must be at least 1.5",
    );
    c.check(
        sy.overview_points == 0 || sy.overview_points >= 2,
        "synth.overview_points",
        "must be 0 or at least 2",
    );
    if let Some(ps) = &sy.power_sweep {
        c.check(
            ps.resonator < raw.chip.n_resonators,
            "synth.power_sweep.resonator",
            "must index a resonator of the chip",
        );
        c.check(
            !ps.source_dbm.is_empty(),
            "synth.power_sweep.source_dbm",
            "must not be empty",
        );
        for (i, p) in ps.source_dbm.iter().enumerate() {
            c.check(
                p.is_finite(),
                format!("synth.power_sweep.source_dbm[{i}]"),
                "must be finite",
            );
        }
        c.positive(ps.f_delta0, "synth.power_sweep.f_delta0");
        c.positive(ps.n_c, "synth.power_sweep.n_c");
        c.positive(ps.q_others, "synth.power_sweep.q_others");
    }
    c.check(
        raw.fit.wing_fraction > 0.0 && raw.fit.wing_fraction < 1.0,
        "fit.wing_fraction",
        "must lie in (0, 1)",
    );

    if !c.0.is_empty() {
        return Err(Error::Config(c.0));
    }

    let geom = CpwGeometry {
        w: g.w_um * UM,
        s: g.s_um * UM,
        d: g.d_nm * NM,
        length: None,
    };
    let mat = Material {
        lambda0: m.lambda0_nm * NM,
        eps_r: m.eps_r,
        temperature: m.temperature_mk * 1e-3,
    };
    let chip_design = ChipDesign {
        n_resonators: chip.n_resonators,
        f_mean: chip.f_mean_ghz * 1e9,
        f_gap: chip.f_gap_mhz * 1e6,
        geom,
        mat,
        q_c_nominal: chip.q_c_nominal,
    };
    let t = &raw.thickness;
    let sigma_d = match (t.sigma_rel, t.sigma_nm) {
        (_, Some(nm)) => nm * NM,
        (Some(rel), None) => rel * geom.d,
        (None, None) => unreachable!("default filled above"),
    };
    let thickness = ThicknessModel {
        d_nominal: geom.d,
        sigma_d,
        gradient_d: t.gradient_nm * NM,
    };
    let chain = AttenuationChain {
        stages: ch
            .stages
            .iter()
            .map(|s| AttenuationStage {
                label: s.label.clone(),
                attenuation_db: s.atten_db,
            })
            .collect(),
        cable_loss_db: ch.cable_loss_db,
    };
    let sweep = SweepPlan {
        thicknesses: sw.d_nm.iter().map(|d| d * NM).collect(),
        footprint: sw.footprint_um * UM,
        gaps: sw.s_um.iter().map(|s| s * UM).collect(),
        grid_step: sw.grid_step_um * UM,
        sigma_rel: sigma_d / geom.d,
    };
    let synth = SynthPlan {
        qi: sy.q_i,
        phi: sy.phi,
        noise_sigma: sy.noise_sigma,
        points_per_window: sy.points_per_window,
        window_linewidths: sy.window_linewidths,
        overview_points: sy.overview_points,
        power_sweep: sy.power_sweep.as_ref().map(|p| PowerSweepPlan {
            resonator: p.resonator,
            source_dbm: p.source_dbm.clone(),
            f_delta0: p.f_delta0,
            n_c: p.n_c,
            q_others: p.q_others,
        }),
    };
    Ok(RunConfig {
        mode: raw.mode,
        seed: raw.seed,
        trials: raw.trials,
        chip: chip_design,
        thickness,
        impedance_factor: ch.impedance_factor,
        chain,
        sweep,
        synth,
        preprocess: raw.fit.preprocess,
        wing_fraction: raw.fit.wing_fraction,
        traces: raw.fit.traces.clone(),
        output_dir: raw.output.dir.clone(),
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[chip]
n_resonators = 8
f_mean_ghz = 6.7
f_gap_mhz = 30.0

[chip.geom]
w_um = 10.0
s_um = 3.0
d_nm = 300.0

[material]
lambda0_nm = 150.0
eps_r = 10.55
"#;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("/cfg"))
    }

    fn field_paths(err: Error) -> Vec<String> {
        match err {
            Error::Config(v) => v.into_iter().map(|e| e.path).collect(),
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_in_si() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.chip.n_resonators, 8);
        assert_eq!(cfg.chip.f_mean, 6.7e9);
        assert_eq!(cfg.chip.f_gap, 30e6);
        assert_eq!(cfg.chip.geom.w, 10.0 * UM);
        assert_eq!(cfg.chip.geom.s, 3.0 * UM);
        assert_eq!(cfg.chip.geom.d, 300.0 * NM);
        assert_eq!(cfg.chip.mat.lambda0, 150.0 * NM);
        assert_eq!(cfg.chip.mat.eps_r, 10.55);
        assert_eq!(cfg.thickness.sigma_d, 0.02 * 300.0 * NM);
        assert_eq!(cfg.raw.thickness.sigma_rel, Some(0.02));
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn negative_width_names_key() {
        let text = MINIMAL.replace("w_um = 10.0", "w_um = -1.0");
        let paths = field_paths(parse(&text).unwrap_err());
        assert!(paths.contains(&"chip.geom.w_um".to_string()), "{paths:?}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("eps_r = 10.55", "eps_r = 10.55\ncolour = 3");
        let err = parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("colour"), "{msg}");
    }

    #[test]
    fn missing_field_reported() {
        let text = MINIMAL.replace("d_nm = 300.0", "");
        let msg = parse(&text).unwrap_err().to_string();
        assert!(msg.contains("d_nm"), "{msg}");
    }

    #[test]
    fn type_mismatch_has_path() {
        let text = MINIMAL.replace("n_resonators = 8", "n_resonators = \"eight\"");
        let paths = field_paths(parse(&text).unwrap_err());
        assert_eq!(paths, vec!["chip.n_resonators".to_string()]);
    }

    #[test]
    fn several_errors_collected() {
        let text = MINIMAL
            .replace("w_um = 10.0", "w_um = -1.0")
            .replace("eps_r = 10.55", "eps_r = 0.5");
        let paths = field_paths(parse(&text).unwrap_err());
        assert!(paths.contains(&"chip.geom.w_um".into()));
        assert!(paths.contains(&"material.eps_r".into()));
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "{MINIMAL}\n[fit]\npreprocess = true\nwing_fraction = 0.2\ntraces = [\"a.csv\"]\n\n[[chain.stages]]\nlabel = \"MXC\"\natten_db = 40.0\n"
        );
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.traces, vec![PathBuf::from("/cfg/a.csv")]);
        let again = parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn sigma_exclusive() {
        let text = format!("{MINIMAL}\n[thickness]\nsigma_rel = 0.01\nsigma_nm = 2.0\n");
        let paths = field_paths(parse(&text).unwrap_err());
        assert_eq!(paths, vec!["thickness.sigma_nm".to_string()]);
    }

    #[test]
    fn mode_names() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("plot".parse::<Mode>().is_err());
    }

    #[test]
    fn partial_sections_take_defaults() {
        let cfg = parse(&format!(
            "{MINIMAL}\n[synth]\nnoise_sigma = 0.01\n[fit]\npreprocess = false\n"
        ))
        .unwrap();
        assert_eq!(cfg.synth.noise_sigma, 0.01);
        assert_eq!(cfg.synth.qi, 2.5e6);
        assert!(!cfg.preprocess);
        assert_eq!(cfg.wing_fraction, 0.2);
    }
}

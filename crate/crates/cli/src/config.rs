//! Experiment configuration: a TOML document with `[model]`, `[run]`,
//! `[output]` and `[tolerance]` sections, single-key overrides from the
//! command line, and a canonical digest.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qedlab_core::assembly::{ModelConfig, PhotonConfig};
use qedlab_core::atom::{AtomConfig, Lattice, Potential};
use qedlab_core::io::{fmt_real, read_potential_table};
use qedlab_core::photon::{FockCaps, Mode, DEFAULT_BASIS_LIMIT};

pub const SECTIONS: [&str; 4] = ["model", "run", "output", "tolerance"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Ground,
    Series,
    IrStudy,
    ScalingCheck,
    AlphaScan,
    BetaScan,
    ComplexTrack,
}

impl RunKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunKind::Ground => "ground",
            RunKind::Series => "series",
            RunKind::IrStudy => "ir-study",
            RunKind::ScalingCheck => "scaling-check",
            RunKind::AlphaScan => "alpha-scan",
            RunKind::BetaScan => "beta-scan",
            RunKind::ComplexTrack => "complex-track",
        }
    }
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ModelSection {
    /// soft-coulomb | harmonic | double-well | zero | table:<path>
    pub potential: String,
    pub charge: f64,
    pub softening: f64,
    pub omega: f64,
    pub depth: f64,
    pub separation: f64,
    /// none | soft-coulomb (repulsive, strength / √(r² + softening²))
    pub interaction: String,
    pub interaction_strength: f64,
    /// line | cube | point
    pub lattice: String,
    pub nodes: usize,
    pub half_width: f64,
    pub electrons: usize,
    /// quadrature | single-mode
    pub photons: String,
    pub uv_cutoff: f64,
    pub ir_cutoff: f64,
    /// Lower edge of the radial quadrature; defaults to the infrared cutoff.
    pub quadrature_floor: Option<f64>,
    pub n_radial: usize,
    pub n_angular: usize,
    pub mode_energy: f64,
    pub mode_weight: f64,
    pub n_max_total: usize,
    pub n_max_mode: Option<usize>,
    pub energy_cap: Option<f64>,
    pub basis_limit: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            potential: "soft-coulomb".into(),
            charge: 1.0,
            softening: 1.0,
            omega: 1.0,
            depth: 1.0,
            separation: 1.0,
            interaction: "none".into(),
            interaction_strength: 1.0,
            lattice: "line".into(),
            nodes: 41,
            half_width: 10.0,
            electrons: 1,
            photons: "quadrature".into(),
            uv_cutoff: 1.0,
            ir_cutoff: 0.0,
            quadrature_floor: None,
            n_radial: 1,
            n_angular: 4,
            mode_energy: 1.0,
            mode_weight: 0.5,
            n_max_total: 2,
            n_max_mode: None,
            energy_cap: None,
            basis_limit: DEFAULT_BASIS_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunSection {
    pub kind: Option<RunKind>,
    pub g: f64,
    pub beta: f64,
    /// Highest RS order (series: 8, ir-study: 2 when unset).
    pub order: Option<usize>,
    pub fd_check: bool,
    pub ladder: Vec<f64>,
    pub require_convergent: Vec<usize>,
    pub alphas: Vec<f64>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Grid size (alpha-scan: 10, beta-scan: 401 when unset).
    pub points: Option<usize>,
    /// log | linear
    pub spacing: String,
    pub rs_order: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub derivative_order: usize,
    /// Circle radius; unset means half the measured isolation window.
    pub rho: Option<f64>,
    pub n_circle: usize,
    pub radial_steps: usize,
    pub window_max: f64,
    pub window_points: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            kind: None,
            g: 0.0,
            beta: 1.0,
            order: None,
            fd_check: false,
            ladder: vec![0.4, 0.2, 0.1, 0.05],
            require_convergent: vec![2],
            alphas: vec![0.3, 0.5, 1.0],
            alpha_min: 0.01,
            alpha_max: 0.1,
            points: None,
            spacing: "log".into(),
            rs_order: 4,
            beta_min: -50.0,
            beta_max: 50.0,
            derivative_order: 1,
            rho: None,
            n_circle: 64,
            radial_steps: 4,
            window_max: 1.0,
            window_points: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputSection {
    pub directory: PathBuf,
    /// csv (always written), operator, vector
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("qedlab-out"), formats: vec!["csv".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ToleranceSection {
    pub solver: f64,
    pub max_iter: usize,
    pub decoupling: f64,
    pub scaling: f64,
    pub cauchy: f64,
    pub conjugate: f64,
    pub parity: f64,
    pub slope: f64,
    pub refinement: f64,
    pub fd: f64,
    pub isolation_factor: f64,
    pub gap_fraction: f64,
    pub min_overlap: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection {
            solver: 1e-12,
            max_iter: 20_000,
            decoupling: 1e-10,
            scaling: 1e-10,
            cauchy: 1e-7,
            conjugate: 1e-8,
            parity: 1e-10,
            slope: 0.1,
            refinement: 0.1,
            fd: 1e-5,
            isolation_factor: 5.0,
            gap_fraction: 0.5,
            min_overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub run: RunSection,
    pub output: OutputSection,
    pub tolerance: ToleranceSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub msg: String,
}

impl ConfigError {
    fn field(field: &str, msg: impl Into<String>) -> Self {
        ConfigError { line: None, field: Some(field.to_string()), msg: msg.into() }
    }

    fn plain(msg: impl Into<String>) -> Self {
        ConfigError { line: None, field: None, msg: msg.into() }
    }

    fn from_toml(err: &toml::de::Error, source: Option<&str>) -> Self {
        let line = match (err.span(), source) {
            (Some(span), Some(src)) => Some(src[..span.start.min(src.len())].matches('\n').count() + 1),
            _ => None,
        };
        ConfigError { line, field: None, msg: err.message().trim().to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(l) = self.line {
            write!(f, " on line {l}")?;
        }
        if let Some(k) = &self.field {
            write!(f, " in `{k}`")?;
        }
        write!(f, ": {}", self.msg)
    }
}

impl std::error::Error for ConfigError {}

/// A parsed, validated configuration with its run kind fixed and any
/// potential table loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub kind: RunKind,
    pub table: Option<Vec<(f64, f64)>>,
    pub hash: String,
}

/// Splits `section.key=value` (leading dashes already removed).
pub fn parse_override(arg: &str) -> Result<(String, String, toml::Value), ConfigError> {
    let (path, raw) = arg
        .split_once('=')
        .ok_or_else(|| ConfigError::plain(format!("override `{arg}` needs the form section.key=value")))?;
    let (section, key) = path
        .split_once('.')
        .ok_or_else(|| ConfigError::plain(format!("override `{arg}` needs the form section.key=value")))?;
    if !SECTIONS.contains(&section) {
        return Err(ConfigError::field(path, format!("unknown section `{section}`")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((section.to_string(), key.to_string(), value))
}

/// Parses `text`, applies `overrides` (`section.key=value`), fixes the run
/// kind and validates. Relative table paths resolve against `base_dir`.
pub fn load_str(
    text: &str,
    base_dir: &Path,
    kind: Option<RunKind>,
    overrides: &[String],
) -> Result<LoadedConfig, ConfigError> {
    let mut doc: toml::Table = text.parse().map_err(|e| ConfigError::from_toml(&e, Some(text)))?;
    let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::from_toml(&e, Some(text)))?;
    if !overrides.is_empty() {
        let mut keys = Vec::new();
        for o in overrides {
            let (section, key, value) = parse_override(o)?;
            let entry = doc.entry(section.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(key.clone(), value);
                }
                _ => return Err(ConfigError::field(&section, "is not a section")),
            }
            keys.push(format!("{section}.{key}"));
        }
        config = toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| ConfigError {
            line: None,
            field: Some(keys.join(", ")),
            msg: format!("after overrides: {}", e.message().trim()),
        })?;
    }
    let kind = match (kind, config.run.kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::field("run.kind", format!("config asks for `{b}` but the command is `{a}`")));
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(ConfigError::field("run.kind", "no run kind given")),
    };
    config.run.kind = Some(kind);
    validate(&config, kind)?;
    let table = match config.model.potential.strip_prefix("table:") {
        Some(p) => {
            let path = base_dir.join(p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError::field("model.potential", format!("cannot read {}: {e}", path.display())))?;
            let pts = read_potential_table::<f64>(&text)
                .map_err(|e| ConfigError::field("model.potential", format!("{}: {e}", path.display())))?;
            Some(pts)
        }
        None => None,
    };
    let hash = canonical_hash(&config, table.as_deref());
    Ok(LoadedConfig { config, kind, table, hash })
}

pub fn load_file(path: &Path, kind: Option<RunKind>, overrides: &[String]) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::plain(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_str(&text, &base, kind, overrides)
}

/// Canonical text of everything that determines the results: model, run and
/// tolerance sections with defaults filled in, plus the table contents. The
/// output section is excluded.
pub fn canonical_text(config: &ExperimentConfig, table: Option<&[(f64, f64)]>) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        model: &'a ModelSection,
        run: &'a RunSection,
        tolerance: &'a ToleranceSection,
    }
    let body = toml::to_string(&Canonical { model: &config.model, run: &config.run, tolerance: &config.tolerance })
        .expect("config sections serialize");
    let mut out = String::from("# qedlab config v1\n");
    out.push_str(&body);
    if let Some(pts) = table {
        out.push_str("\n[potential-table]\n");
        for (x, v) in pts {
            out.push_str(&format!("{} {}\n", fmt_real(*x), fmt_real(*v)));
        }
    }
    out
}

pub fn canonical_hash(config: &ExperimentConfig, table: Option<&[(f64, f64)]>) -> String {
    hex(&Sha256::digest(canonical_text(config, table).as_bytes()))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::field(field, format!("must be positive and finite, got {x}")))
    }
}

fn finite(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::field(field, "must be finite"))
    }
}

fn validate(c: &ExperimentConfig, kind: RunKind) -> Result<(), ConfigError> {
    let m = &c.model;
    match m.potential.as_str() {
        "soft-coulomb" | "harmonic" | "double-well" | "zero" => {}
        p if p.starts_with("table:") && p.len() > 6 => {}
        p => return Err(ConfigError::field("model.potential", format!("unknown potential `{p}`"))),
    }
    match m.interaction.as_str() {
        "none" | "soft-coulomb" => {}
        p => return Err(ConfigError::field("model.interaction", format!("unknown interaction `{p}`"))),
    }
    match m.lattice.as_str() {
        "line" | "cube" | "point" => {}
        p => return Err(ConfigError::field("model.lattice", format!("unknown lattice `{p}`"))),
    }
    match m.photons.as_str() {
        "quadrature" | "single-mode" => {}
        p => return Err(ConfigError::field("model.photons", format!("unknown photon grid `{p}`"))),
    }
    for (k, v) in [
        ("model.softening", m.softening),
        ("model.omega", m.omega),
        ("model.separation", m.separation),
        ("model.half-width", m.half_width),
        ("model.uv-cutoff", m.uv_cutoff),
        ("model.mode-energy", m.mode_energy),
        ("model.mode-weight", m.mode_weight),
    ] {
        positive(k, v)?;
    }
    for (k, v) in [("model.charge", m.charge), ("model.depth", m.depth), ("model.interaction-strength", m.interaction_strength)] {
        finite(k, v)?;
    }
    if !(m.ir_cutoff >= 0.0 && m.ir_cutoff < m.uv_cutoff) {
        return Err(ConfigError::field("model.ir-cutoff", "must lie in [0, uv-cutoff)"));
    }
    if let Some(f) = m.quadrature_floor {
        if !(f >= 0.0 && f <= m.ir_cutoff) {
            return Err(ConfigError::field("model.quadrature-floor", "must lie in [0, ir-cutoff]"));
        }
    }
    if m.photons == "single-mode" && !(m.mode_energy < m.uv_cutoff) {
        return Err(ConfigError::field("model.mode-energy", "must be below uv-cutoff"));
    }
    if m.lattice != "point" && m.nodes < 2 {
        return Err(ConfigError::field("model.nodes", "needs at least 2 sites"));
    }
    if !(1..=2).contains(&m.electrons) {
        return Err(ConfigError::field("model.electrons", "must be 1 or 2"));
    }
    if m.n_radial == 0 || m.n_angular == 0 {
        return Err(ConfigError::field("model.n-radial", "quadrature sizes must be positive"));
    }
    if let Some(e) = m.energy_cap {
        positive("model.energy-cap", e)?;
    }
    let t = &c.tolerance;
    for (k, v) in [
        ("tolerance.solver", t.solver),
        ("tolerance.decoupling", t.decoupling),
        ("tolerance.scaling", t.scaling),
        ("tolerance.cauchy", t.cauchy),
        ("tolerance.conjugate", t.conjugate),
        ("tolerance.parity", t.parity),
        ("tolerance.slope", t.slope),
        ("tolerance.refinement", t.refinement),
        ("tolerance.fd", t.fd),
        ("tolerance.isolation-factor", t.isolation_factor),
        ("tolerance.gap-fraction", t.gap_fraction),
        ("tolerance.min-overlap", t.min_overlap),
    ] {
        positive(k, v)?;
    }
    if t.max_iter == 0 {
        return Err(ConfigError::field("tolerance.max-iter", "must be positive"));
    }
    for f in &c.output.formats {
        if !["csv", "operator", "vector"].contains(&f.as_str()) {
            return Err(ConfigError::field("output.formats", format!("unknown format `{f}`")));
        }
    }
    let r = &c.run;
    finite("run.g", r.g)?;
    finite("run.beta", r.beta)?;
    match kind {
        RunKind::Ground => {}
        RunKind::Series => {
            if r.order.unwrap_or(8) > 8 {
                return Err(ConfigError::field("run.order", "at most 8"));
            }
        }
        RunKind::IrStudy => {
            if r.order.unwrap_or(2) > 8 {
                return Err(ConfigError::field("run.order", "at most 8"));
            }
            if r.ladder.len() < 4 {
                return Err(ConfigError::field("run.ladder", "needs at least 4 rungs"));
            }
            if r.ladder.windows(2).any(|w| !(w[1] < w[0])) || r.ladder.iter().any(|&e| !(e >= 0.0 && e < m.uv_cutoff)) {
                return Err(ConfigError::field("run.ladder", "must be strictly decreasing inside [0, uv-cutoff)"));
            }
        }
        RunKind::ScalingCheck => {
            if r.alphas.is_empty() {
                return Err(ConfigError::field("run.alphas", "needs at least one value"));
            }
            for &a in &r.alphas {
                positive("run.alphas", a)?;
            }
        }
        RunKind::AlphaScan => {
            if !(r.alpha_min >= 0.0 && r.alpha_min < r.alpha_max && r.alpha_max.is_finite()) {
                return Err(ConfigError::field("run.alpha-min", "need 0 <= alpha-min < alpha-max"));
            }
            match r.spacing.as_str() {
                "linear" => {}
                "log" if r.alpha_min > 0.0 => {}
                "log" => return Err(ConfigError::field("run.spacing", "log spacing needs alpha-min > 0")),
                s => return Err(ConfigError::field("run.spacing", format!("unknown spacing `{s}`"))),
            }
            if r.points.unwrap_or(10) < 2 {
                return Err(ConfigError::field("run.points", "needs at least 2 points"));
            }
        }
        RunKind::BetaScan => {
            if !(r.beta_min < r.beta_max) || !r.beta_min.is_finite() || !r.beta_max.is_finite() {
                return Err(ConfigError::field("run.beta-min", "need beta-min < beta-max"));
            }
            if r.points.unwrap_or(401) < 3 {
                return Err(ConfigError::field("run.points", "needs at least 3 points"));
            }
            if r.derivative_order > 2 {
                return Err(ConfigError::field("run.derivative-order", "at most 2"));
            }
        }
        RunKind::ComplexTrack => {
            if let Some(rho) = r.rho {
                positive("run.rho", rho)?;
            }
            positive("run.window-max", r.window_max)?;
            if r.n_circle < 4 || r.radial_steps == 0 || r.window_points == 0 {
                return Err(ConfigError::field("run.n-circle", "need n-circle >= 4 and positive step counts"));
            }
        }
    }
    Ok(())
}

impl LoadedConfig {
    pub fn model(&self) -> ModelConfig<f64> {
        let m = &self.config.model;
        let potential = match m.potential.as_str() {
            "soft-coulomb" => Potential::SoftCoulomb { charge: m.charge, softening: m.softening },
            "harmonic" => Potential::Harmonic { omega: m.omega },
            "double-well" => Potential::DoubleWell { depth: m.depth, separation: m.separation },
            "zero" => Potential::Zero,
            _ => Potential::Table(self.table.clone().unwrap_or_default()),
        };
        let interaction = match m.interaction.as_str() {
            "soft-coulomb" => Some(Potential::SoftCoulomb { charge: -m.interaction_strength, softening: m.softening }),
            _ => None,
        };
        let lattice = match m.lattice.as_str() {
            "cube" => Lattice::cube(m.nodes, m.half_width),
            "point" => Lattice::point(),
            _ => Lattice::line(m.nodes, m.half_width),
        };
        let atom = AtomConfig { potential, interaction, lattice, n_electrons: m.electrons };
        let photons = if m.photons == "single-mode" {
            // validated: energy and weight positive
            let mode = Mode::new([0.0, 0.0, m.mode_energy], 1, m.mode_weight).expect("valid single mode");
            PhotonConfig::explicit(vec![mode], m.uv_cutoff, m.ir_cutoff)
        } else {
            let mut p = PhotonConfig::quadrature(m.uv_cutoff, m.ir_cutoff, m.n_radial, m.n_angular);
            if let (Some(f), qedlab_core::assembly::PhotonSource::Quadrature { floor, .. }) = (m.quadrature_floor, &mut p.source) {
                *floor = f;
            }
            p
        };
        let caps = FockCaps::new(m.n_max_total, m.n_max_mode.unwrap_or(m.n_max_total), m.energy_cap);
        let mut cfg = ModelConfig::new(atom, photons, caps);
        cfg.basis_limit = m.basis_limit;
        cfg
    }

    /// Whether V is even under x → −x on the lattice sites.
    pub fn potential_is_symmetric(&self) -> bool {
        let model = self.model();
        let l = model.atom.lattice;
        let axis = l.axis();
        axis.iter().all(|&x| {
            let a = model.atom.potential.eval([x, 0.0, 0.0], l.dim == qedlab_core::atom::LatticeDim::One);
            let b = model.atom.potential.eval([-x, 0.0, 0.0], l.dim == qedlab_core::atom::LatticeDim::One);
            (a - b).abs() <= 1e-12 * (1.0 + a.abs())
        })
    }
}

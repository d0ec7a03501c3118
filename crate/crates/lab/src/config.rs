//! Run configuration: a versioned JSON payload with one section per
//! subcommand. Unknown keys are rejected and every tolerance must be
//! positive. Missing keys take the defaults below, which are the settings of
//! the acceptance suite.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

pub const CONFIG_SCHEMA: &str = "shrinker-lab/config/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyTargets,
    VerifyShrinkers,
    VerifyProp41,
    FlowGraph,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyTargets => "verify-targets",
            Command::VerifyShrinkers => "verify-shrinkers",
            Command::VerifyProp41 => "verify-prop41",
            Command::FlowGraph => "flow-graph",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    pub schema: String,
    pub seed: u64,
    pub targets: TargetsConfig,
    pub shrinkers: ShrinkersConfig,
    pub prop41: Prop41Config,
    pub flow: FlowConfig,
    pub report: ReportConfig,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            schema: CONFIG_SCHEMA.into(),
            seed: 20_240_601,
            targets: TargetsConfig::default(),
            shrinkers: ShrinkersConfig::default(),
            prop41: Prop41Config::default(),
            flow: FlowConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

/// Finite-difference checks of the closed-form Hessians on Sⁿ and G(n, m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetsConfig {
    /// Probes per family.
    pub probes: usize,
    /// Step of the central differences along geodesics.
    pub fd_step: f64,
    /// Largest n and m drawn for Grassmannian probes.
    pub max_dim: usize,
    /// Jordan angles are drawn from [0, max_angle).
    pub max_angle: f64,
    /// Relative-error tolerance.
    pub tolerance: f64,
    /// Test hook: flips the sign of every closed-form value before the
    /// comparison, so the run must FAIL.
    pub sign_flip: bool,
}

impl Default for TargetsConfig {
    fn default() -> Self {
        TargetsConfig {
            probes: 500,
            fd_step: 1e-4,
            max_dim: 4,
            max_angle: 1.2,
            tolerance: 1e-5,
            sign_flip: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Height,
    V,
    LogV,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionCase {
    pub surface: String,
    pub targets: Vec<TargetKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratedConfig {
    /// Surface carrying the identity; must be closed.
    pub surface: String,
    /// Direction a of f = 1 − ⟨γ, a⟩ (normalised on use).
    pub direction: Vec<f64>,
    pub resolution: Vec<usize>,
    pub tolerance: f64,
    /// Successive meshes of the convergence study.
    pub refinements: Vec<Vec<usize>>,
    pub expected_order: f64,
    pub order_tolerance: f64,
}

impl Default for IntegratedConfig {
    fn default() -> Self {
        IntegratedConfig {
            surface: "sphere-area:R=2".into(),
            direction: vec![0.3, -0.5, 0.8],
            resolution: vec![256, 512],
            tolerance: 1e-4,
            refinements: vec![vec![32, 64], vec![64, 128], vec![128, 256]],
            expected_order: 2.0,
            order_tolerance: 0.1,
        }
    }
}

/// Catalog residuals, weighted tension of the Gauss map, composition
/// formula, integrated identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShrinkersConfig {
    /// Exact shrinkers, as catalog names.
    pub catalog: Vec<String>,
    pub residual_probes: usize,
    pub residual_tolerance: f64,
    pub tension_probes: usize,
    pub tension_tolerance: f64,
    /// Non-shrinker whose Gauss map must have non-zero tension.
    pub control: String,
    pub control_probes: usize,
    pub control_min_tension: f64,
    /// Slack on the negative-control threshold.
    pub control_tolerance: f64,
    pub composition: Vec<CompositionCase>,
    pub composition_probes: usize,
    pub composition_tolerance: f64,
    pub integrated: IntegratedConfig,
}

impl Default for ShrinkersConfig {
    fn default() -> Self {
        let case = |s: &str, t: &[TargetKind]| CompositionCase {
            surface: s.into(),
            targets: t.to_vec(),
        };
        use TargetKind::*;
        ShrinkersConfig {
            catalog: [
                "plane:n=2,m=2",
                "plane:n=3,m=1",
                "sphere:n=1",
                "sphere:n=2",
                "sphere:n=3",
                "cylinder:k=1,n=2",
                "cylinder:k=1,n=3",
                "cylinder:k=2,n=3",
                "torus",
                "graph-cap:R=2",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            residual_probes: 1000,
            residual_tolerance: 1e-10,
            tension_probes: 40,
            tension_tolerance: 1e-6,
            control: "sphere:n=2,R=1,cz=1".into(),
            control_probes: 100,
            control_min_tension: 1e-2,
            control_tolerance: 1e-12,
            composition: vec![
                case("plane:n=2,m=2", &[V, LogV]),
                case("sphere:n=2", &[Height]),
                case("cylinder:k=1,n=2", &[Height]),
                case("graph-cap:R=2", &[Height, V, LogV]),
                case("graph-bump:n=2,m=2,amp=0.8,width=0.7,L=2", &[V, LogV]),
                case("graph-bump:n=2,m=1,amp=0.9,width=0.6,L=2", &[Height, V, LogV]),
                case("sphere:n=2,R=1,cz=1", &[Height]),
            ],
            composition_probes: 100,
            composition_tolerance: 1e-4,
            integrated: IntegratedConfig::default(),
        }
    }
}

/// Scalar sweep of F on Ω, random and adversarial checks of the master
/// inequality, the regrouping identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop41Config {
    pub v_lo: f64,
    pub v_hi: f64,
    pub v_count: usize,
    pub r_resolution: usize,
    /// Slack on sup F ≤ −δ₀.
    pub sweep_tolerance: f64,
    /// Grid sizes for the infima of H₁ and θ(θ−1)².
    pub infimum_samples: usize,
    pub infimum_tolerance: f64,
    pub c1: f64,
    /// Random subcritical samples of the master inequality.
    pub samples: usize,
    /// Adversarial restarts.
    pub restarts: usize,
    pub margin_tolerance: f64,
    /// Random samples of the regrouping identity.
    pub regroup_samples: usize,
    pub regroup_tolerance: f64,
    /// Samples per tight case (λ = 0, arbitrary h).
    pub tight_samples: usize,
    pub tight_tolerance: f64,
    /// Optional JSON file with a list of user samples `{n, m, lambda, h}`.
    pub samples_file: Option<PathBuf>,
}

impl Default for Prop41Config {
    fn default() -> Self {
        Prop41Config {
            v_lo: 1.0 + 1e-6,
            v_hi: 3.0 - 1e-6,
            v_count: 10_000,
            r_resolution: 10_000,
            sweep_tolerance: 1e-9,
            infimum_samples: 20_001,
            infimum_tolerance: 1e-12,
            c1: 16.0,
            samples: 1_000_000,
            restarts: 10_000,
            margin_tolerance: 1e-12,
            regroup_samples: 100_000,
            regroup_tolerance: 1e-10,
            tight_samples: 1000,
            tight_tolerance: 1e-12,
            samples_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Explicit,
    Implicit,
}

/// Relaxation of a graph toward a shrinker on a box with affine boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub n: usize,
    pub m: usize,
    pub half_width: f64,
    pub resolution: usize,
    /// Boundary matrix A (m rows of n entries); the boundary data is u = Ax.
    pub boundary: Vec<Vec<f64>>,
    /// Initial bump `amplitude · exp(−|x|²/2width²)/(α+1)` on top of Ax.
    pub amplitude: f64,
    pub width: f64,
    /// Start from this field CSV instead of the bump.
    pub input_field: Option<PathBuf>,
    pub scheme: SchemeKind,
    pub cfl: f64,
    pub pseudo_dt: f64,
    pub fourth_order: bool,
    pub max_steps: usize,
    pub sample_every: usize,
    /// Convergence threshold on the sup residual.
    pub residual_tolerance: f64,
    pub affine_tolerance: f64,
    pub b2_tolerance: f64,
    /// Hypothesis of the experiment: initial sup slope at most this.
    pub max_initial_slope: f64,
    pub slope_tolerance: f64,
    /// Relative tolerance of the slope-monotonicity observation.
    pub monotone_tolerance: f64,
    /// Pole for the hemisphere telemetry when m = 1; defaults to ε_{n+1}.
    pub pole: Option<Vec<f64>>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            n: 2,
            m: 2,
            half_width: 4.0,
            resolution: 129,
            boundary: vec![vec![0.3, -0.2], vec![0.1, 0.4]],
            amplitude: 1.0,
            width: 1.0,
            input_field: None,
            scheme: SchemeKind::Implicit,
            cfl: 0.45,
            pseudo_dt: 1e3,
            fourth_order: false,
            max_steps: 500,
            sample_every: 1,
            residual_tolerance: 1e-8,
            affine_tolerance: 1e-6,
            b2_tolerance: 1e-6,
            max_initial_slope: 2.5,
            slope_tolerance: 1e-12,
            monotone_tolerance: 1e-9,
            pole: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Directory searched for `report.json` files; defaults to the output
    /// directory.
    pub runs_dir: Option<PathBuf>,
}

impl LabConfig {
    /// Parses a JSON payload.
    pub fn from_json(text: &str) -> LabResult<Self> {
        let cfg: LabConfig = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        LabConfig::from_json(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn tolerances_mut(&mut self) -> Vec<(&'static str, &mut f64)> {
        let (t, s, p, f) = (&mut self.targets, &mut self.shrinkers, &mut self.prop41, &mut self.flow);
        vec![
            ("targets.tolerance", &mut t.tolerance),
            ("shrinkers.residual_tolerance", &mut s.residual_tolerance),
            ("shrinkers.tension_tolerance", &mut s.tension_tolerance),
            ("shrinkers.control_tolerance", &mut s.control_tolerance),
            ("shrinkers.composition_tolerance", &mut s.composition_tolerance),
            ("shrinkers.integrated.tolerance", &mut s.integrated.tolerance),
            (
                "shrinkers.integrated.order_tolerance",
                &mut s.integrated.order_tolerance,
            ),
            ("prop41.sweep_tolerance", &mut p.sweep_tolerance),
            ("prop41.infimum_tolerance", &mut p.infimum_tolerance),
            ("prop41.margin_tolerance", &mut p.margin_tolerance),
            ("prop41.regroup_tolerance", &mut p.regroup_tolerance),
            ("prop41.tight_tolerance", &mut p.tight_tolerance),
            ("flow.residual_tolerance", &mut f.residual_tolerance),
            ("flow.affine_tolerance", &mut f.affine_tolerance),
            ("flow.b2_tolerance", &mut f.b2_tolerance),
            ("flow.slope_tolerance", &mut f.slope_tolerance),
            ("flow.monotone_tolerance", &mut f.monotone_tolerance),
        ]
    }

    /// Multiplies every tolerance by `scale`.
    pub fn scale_tolerances(&mut self, scale: f64) -> LabResult<()> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(LabError::Config(format!(
                "tolerance scale must be positive, got {scale}"
            )));
        }
        for (_, t) in self.tolerances_mut() {
            *t *= scale;
        }
        Ok(())
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!(
                "unsupported config schema {:?}, expected {CONFIG_SCHEMA:?}",
                self.schema
            ));
        }
        for (name, t) in self.clone().tolerances_mut() {
            if !(*t > 0.0 && t.is_finite()) {
                return bad(format!("{name} must be positive, got {t}"));
            }
        }
        let t = &self.targets;
        if t.probes == 0 || !(t.fd_step > 0.0) || t.max_dim == 0 || !(t.max_angle > 0.0 && t.max_angle < 1.5) {
            return bad("targets: probes, fd_step, max_dim must be positive and max_angle in (0, 1.5)".into());
        }
        let s = &self.shrinkers;
        if s.residual_probes == 0 || s.tension_probes == 0 || s.control_probes == 0 || s.composition_probes == 0 {
            return bad("shrinkers: probe counts must be positive".into());
        }
        if !(s.control_min_tension > 0.0) {
            return bad("shrinkers.control_min_tension must be positive".into());
        }
        if s.composition.iter().any(|c| c.targets.is_empty()) || s.composition.is_empty() {
            return bad("shrinkers.composition needs at least one case, each with a target".into());
        }
        let i = &s.integrated;
        if i.resolution.len() != 2 || i.refinements.len() < 2 || i.refinements.iter().any(|r| r.len() != 2) {
            return bad("shrinkers.integrated: meshes are [nz, nphi] and the study needs two or more".into());
        }
        if i.direction.len() != 3 || i.direction.iter().all(|x| *x == 0.0) {
            return bad("shrinkers.integrated.direction must be a non-zero 3-vector".into());
        }
        let p = &self.prop41;
        if !(p.v_lo > 1.0 && p.v_lo < p.v_hi && p.v_hi < 3.0) {
            return bad("prop41: need 1 < v_lo < v_hi < 3".into());
        }
        if p.v_count < 2 || p.r_resolution == 0 || p.infimum_samples < 3 || !(p.c1 >= 0.0) {
            return bad("prop41: grid sizes must be positive and c1 non-negative".into());
        }
        let f = &self.flow;
        if f.n == 0 || f.m == 0 || f.resolution < 5 || !(f.half_width > 0.0) {
            return bad("flow: need n, m >= 1, resolution >= 5 and a positive half width".into());
        }
        if f.boundary.len() != f.m || f.boundary.iter().any(|row| row.len() != f.n) {
            return bad(format!("flow.boundary must be {} rows of {} entries", f.m, f.n));
        }
        if !(f.width > 0.0) || !(f.cfl > 0.0) || !(f.pseudo_dt > 0.0) || f.sample_every == 0 || f.max_steps == 0 {
            return bad("flow: width, cfl, pseudo_dt, sample_every and max_steps must be positive".into());
        }
        if let Some(pole) = &f.pole {
            if pole.len() != f.n + f.m {
                return bad(format!("flow.pole must have {} entries", f.n + f.m));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Everything a subcommand needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub lab: LabConfig,
    pub out_dir: PathBuf,
    /// RFC 3339 time stamped into the report.
    pub timestamp: String,
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, lab: LabConfig, out_dir: impl Into<PathBuf>, timestamp: impl Into<String>) -> Self {
        RunConfig {
            command,
            lab,
            out_dir: out_dir.into(),
            timestamp: timestamp.into(),
            jobs: None,
        }
    }

    /// Directory for this command's artifacts: `<out>/<command>`.
    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(self.command.name())
    }
}

/// The current time, or `SOURCE_DATE_EPOCH` when set, as RFC 3339.
pub fn timestamp_now() -> LabResult<String> {
    use chrono::{DateTime, SecondsFormat, Utc};
    let t = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => {
            let secs: i64 = s
                .trim()
                .parse()
                .map_err(|_| LabError::Config(format!("SOURCE_DATE_EPOCH is not an integer: {s:?}")))?;
            DateTime::<Utc>::from_timestamp(secs, 0)
                .ok_or_else(|| LabError::Config(format!("SOURCE_DATE_EPOCH out of range: {secs}")))?
        }
        Err(_) => Utc::now(),
    };
    Ok(t.to_rfc3339_opts(SecondsFormat::Secs, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = LabConfig::default();
        cfg.validate().unwrap();
        assert_eq!(LabConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn partial_payload_takes_defaults() {
        let cfg = LabConfig::from_json(r#"{"seed": 3, "targets": {"probes": 10}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.targets.probes, 10);
        assert_eq!(cfg.targets.tolerance, 1e-5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"sed": 3}"#,
            r#"{"targets": {"probe": 10}}"#,
            r#"{"flow": {"n": 2, "colour": 1}}"#,
        ] {
            assert!(matches!(LabConfig::from_json(text), Err(LabError::Config(_))), "{text}");
        }
    }

    #[test]
    fn tolerances_must_be_positive() {
        for text in [
            r#"{"targets": {"tolerance": 0}}"#,
            r#"{"prop41": {"margin_tolerance": -1e-12}}"#,
            r#"{"flow": {"b2_tolerance": 0.0}}"#,
        ] {
            let err = LabConfig::from_json(text).unwrap_err();
            assert!(err.to_string().contains("must be positive"), "{err}");
        }
    }

    #[test]
    fn scaling_multiplies_every_tolerance() {
        let mut cfg = LabConfig::default();
        cfg.scale_tolerances(10.0).unwrap();
        assert!((cfg.targets.tolerance - 1e-4).abs() < 1e-18);
        assert!((cfg.flow.affine_tolerance - 1e-5).abs() < 1e-19);
        assert!(cfg.scale_tolerances(0.0).is_err());
        assert!(cfg.scale_tolerances(f64::NAN).is_err());
    }

    #[test]
    fn wrong_schema_and_shapes_are_rejected() {
        assert!(LabConfig::from_json(r#"{"schema": "other/v9"}"#).is_err());
        assert!(LabConfig::from_json(r#"{"flow": {"m": 1}}"#).is_err());
        assert!(LabConfig::from_json(r#"{"prop41": {"v_hi": 3.0}}"#).is_err());
    }
}

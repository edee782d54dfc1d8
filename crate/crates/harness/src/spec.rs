//! Experiment spec files.
//!
//! ```json
//! {
//!   "target": {"name": "double_well", "params": {"dims": 2}},
//!   "sweep": {"axis": "dt", "values": [0.1, 0.2, 0.3]},
//!   "fixed": {"leg_span": 2.4, "sin_psi": 0.5, "K": 3, "jitter": 0.05},
//!   "replicas": 10,
//!   "budget_force_evals": 1000000,
//!   "burn_in": 500,
//!   "observable": "coord:0",
//!   "seed": 1,
//!   "out_dir": "runs/dw"
//! }
//! ```
//!
//! `target` may also be a bare name with a top-level `dims`, and `sweep` a
//! bare axis name with a top-level `values`. `fixed` takes `L` or
//! `leg_span`, and `sin_psi` or `psi` (radians).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use xcghmc::{
    builtin_target, LegSpec, Observable, RefreshAngle, SamplerConfig, TargetModel, TargetParams,
};

use crate::error::{HarnessError, Result};

pub const DEFAULT_REPLICAS: usize = 10;
pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const DEFAULT_BURN_IN: usize = xcghmc::xchmc::DEFAULT_BURN_IN;
pub const DEFAULT_STEPS: usize = 10;
pub const DEFAULT_JITTER: f64 = 0.05;
pub const DEFAULT_OBSERVABLE: &str = "coord:0";
pub const DEFAULT_OUT_DIR: &str = "xcghmc-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Dt,
    LegSpan,
    SinPsi,
    #[serde(rename = "K")]
    K,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dt => "dt",
            Self::LegSpan => "leg_span",
            Self::SinPsi => "sin_psi",
            Self::K => "K",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(Self::Dt),
            "leg_span" => Ok(Self::LegSpan),
            "sin_psi" => Ok(Self::SinPsi),
            "K" => Ok(Self::K),
            other => Err(HarnessError::spec(
                "sweep.axis",
                format!("unknown axis `{other}`; expected one of dt, leg_span, sin_psi, K"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSpec {
    pub name: String,
    pub dims: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variances: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
}

impl TargetSpec {
    pub fn new(name: impl Into<String>, dims: usize) -> Self {
        Self {
            name: name.into(),
            dims,
            variances: None,
            curvature: None,
        }
    }

    pub fn params(&self) -> TargetParams {
        TargetParams {
            dims: self.dims,
            variances: self.variances.clone(),
            curvature: self.curvature,
        }
    }

    pub fn build(&self) -> Result<TargetModel> {
        builtin_target(&self.name, &self.params())
            .map_err(|e| HarnessError::spec("target", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Parameters held constant across the sweep. The swept one is `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedParams {
    pub dt: Option<f64>,
    #[serde(rename = "L")]
    pub steps: Option<usize>,
    pub leg_span: Option<f64>,
    pub sin_psi: f64,
    #[serde(rename = "K")]
    pub extra_chances: usize,
    pub jitter: f64,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            dt: None,
            steps: None,
            leg_span: None,
            sin_psi: 1.0,
            extra_chances: 0,
            jitter: DEFAULT_JITTER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub target: TargetSpec,
    pub sweep: Sweep,
    pub fixed: FixedParams,
    pub replicas: usize,
    pub budget_force_evals: u64,
    pub burn_in: usize,
    pub observable: String,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Sampler settings at one sweep value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSettings {
    pub leg: LegSpec,
    pub angle: RefreshAngle,
    pub extra_chances: usize,
    pub jitter: f64,
}

impl PointSettings {
    pub fn config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig::new(self.leg, self.angle)
            .with_extra_chances(self.extra_chances)
            .with_jitter(self.jitter)
            .expect("jitter validated with the spec")
            .with_seed(seed)
    }
}

/// `L = round(span / dt)`, at least 1.
pub fn steps_for_span(span: f64, dt: f64) -> usize {
    ((span / dt).round() as usize).max(1)
}

impl ExperimentSpec {
    /// A spec with every optional field at its default.
    pub fn new(target: TargetSpec, sweep: Sweep) -> Self {
        Self {
            target,
            sweep,
            fixed: FixedParams::default(),
            replicas: DEFAULT_REPLICAS,
            budget_force_evals: DEFAULT_BUDGET,
            burn_in: DEFAULT_BURN_IN,
            observable: DEFAULT_OBSERVABLE.to_string(),
            seed: 0,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::parse_with_origin(text, Path::new("<spec>"))
    }

    fn parse_with_origin(text: &str, origin: &Path) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let spec = raw.resolve()?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every cross-field constraint and every sweep value.
    pub fn validate(&self) -> Result<()> {
        let model = self.target.build()?;
        if self.replicas == 0 {
            return Err(HarnessError::spec("replicas", "must be at least 1"));
        }
        if self.budget_force_evals == 0 {
            return Err(HarnessError::spec("budget_force_evals", "must be positive"));
        }
        let observable = self.parsed_observable()?;
        if observable.min_dim() > model.dim() {
            return Err(HarnessError::spec(
                "observable",
                format!(
                    "`{}` needs {} dimensions, target has {}",
                    self.observable,
                    observable.min_dim(),
                    model.dim()
                ),
            ));
        }
        if self.sweep.values.is_empty() {
            return Err(HarnessError::spec(
                "sweep.values",
                "at least one value is required",
            ));
        }

        let f = &self.fixed;
        let conflict = |field: &str| {
            HarnessError::spec(
                format!("fixed.{field}"),
                format!("conflicts with the sweep axis `{}`", self.sweep.axis.name()),
            )
        };
        if f.steps.is_some() && f.leg_span.is_some() {
            return Err(HarnessError::spec(
                "fixed.L",
                "give either L or leg_span, not both",
            ));
        }
        match self.sweep.axis {
            SweepAxis::Dt if f.dt.is_some() => return Err(conflict("dt")),
            SweepAxis::LegSpan if f.leg_span.is_some() => return Err(conflict("leg_span")),
            SweepAxis::LegSpan if f.steps.is_some() => return Err(conflict("L")),
            _ => {}
        }
        if self.sweep.axis != SweepAxis::Dt && f.dt.is_none() {
            return Err(HarnessError::spec(
                "fixed.dt",
                "required unless sweeping dt",
            ));
        }
        if let Some(dt) = f.dt {
            positive("fixed.dt", dt)?;
        }
        if let Some(span) = f.leg_span {
            positive("fixed.leg_span", span)?;
        }
        if f.steps == Some(0) {
            return Err(HarnessError::spec("fixed.L", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&f.jitter) {
            return Err(HarnessError::spec(
                "fixed.jitter",
                format!("must lie in [0, 1), got {}", f.jitter),
            ));
        }
        RefreshAngle::from_sin(f.sin_psi)
            .map_err(|e| HarnessError::spec("fixed.sin_psi", e.to_string()))?;
        for (i, &v) in self.sweep.values.iter().enumerate() {
            self.point(v).map_err(|e| match e {
                HarnessError::Spec { reason, .. } => {
                    HarnessError::spec(format!("sweep.values[{i}]"), reason)
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn parsed_observable(&self) -> Result<Observable> {
        Observable::parse(&self.observable)
            .map_err(|e| HarnessError::spec("observable", e.to_string()))
    }

    /// Resolves the sampler settings at sweep value `value`.
    pub fn point(&self, value: f64) -> Result<PointSettings> {
        let f = &self.fixed;
        let axis = self.sweep.axis;
        let field = format!("sweep {}", axis.name());
        let dt = match axis {
            SweepAxis::Dt => positive(&field, value)?,
            _ => {
                f.dt.ok_or_else(|| HarnessError::spec("fixed.dt", "required unless sweeping dt"))?
            }
        };
        let steps = match (axis, f.leg_span, f.steps) {
            (SweepAxis::LegSpan, _, _) => steps_for_span(positive(&field, value)?, dt),
            (_, Some(span), _) => steps_for_span(span, dt),
            (_, None, Some(l)) => l,
            (_, None, None) => DEFAULT_STEPS,
        };
        let sin_psi = if axis == SweepAxis::SinPsi {
            value
        } else {
            f.sin_psi
        };
        let angle = RefreshAngle::from_sin(sin_psi)
            .map_err(|e| HarnessError::spec("sin_psi", e.to_string()))?;
        let extra_chances = if axis == SweepAxis::K {
            if !(value >= 0.0 && value.fract() == 0.0 && value <= 1e6) {
                return Err(HarnessError::spec(
                    field,
                    format!("K must be a non-negative integer, got {value}"),
                ));
            }
            value as usize
        } else {
            f.extra_chances
        };
        let leg = LegSpec::new(dt, steps).map_err(|e| HarnessError::spec("dt", e.to_string()))?;
        Ok(PointSettings {
            leg,
            angle,
            extra_chances,
            jitter: f.jitter,
        })
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(HarnessError::spec(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

/// Reads and validates a spec file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    ExperimentSpec::parse_with_origin(&text, path)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    target: RawTarget,
    dims: Option<usize>,
    sweep: RawSweep,
    values: Option<Vec<f64>>,
    #[serde(default)]
    fixed: RawFixed,
    replicas: Option<usize>,
    budget_force_evals: Option<u64>,
    burn_in: Option<usize>,
    observable: Option<String>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTargetObject {
    name: String,
    #[serde(default)]
    params: RawParams,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    dims: Option<usize>,
    variances: Option<Vec<f64>>,
    curvature: Option<f64>,
}

enum RawTarget {
    Name(String),
    Object(RawTargetObject),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweepObject {
    axis: String,
    values: Vec<f64>,
}

enum RawSweep {
    Axis(String),
    Object(RawSweepObject),
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixed {
    dt: Option<f64>,
    #[serde(rename = "L")]
    steps: Option<usize>,
    leg_span: Option<f64>,
    sin_psi: Option<f64>,
    psi: Option<f64>,
    #[serde(rename = "K")]
    extra_chances: Option<usize>,
    jitter: Option<f64>,
}

/// Accepts either a string or an object, so both short and long forms share
/// one field without losing the object's unknown/duplicate-key checks.
macro_rules! string_or_object {
    ($ty:ident, $variant:ident, $obj:ident, $expect:literal) => {
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = $ty;

                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        f.write_str($expect)
                    }

                    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<$ty, E> {
                        Ok($ty::$variant(v.to_string()))
                    }

                    fn visit_map<A: MapAccess<'de>>(
                        self,
                        map: A,
                    ) -> std::result::Result<$ty, A::Error> {
                        $obj::deserialize(de::value::MapAccessDeserializer::new(map))
                            .map($ty::Object)
                    }

                    fn visit_seq<A: SeqAccess<'de>>(
                        self,
                        _: A,
                    ) -> std::result::Result<$ty, A::Error> {
                        Err(de::Error::custom(concat!(
                            "a list is not allowed here; expected ",
                            $expect
                        )))
                    }
                }
                d.deserialize_any(V)
            }
        }
    };
}

string_or_object!(
    RawTarget,
    Name,
    RawTargetObject,
    "a target name or {name, params}"
);
string_or_object!(
    RawSweep,
    Axis,
    RawSweepObject,
    "exactly one sweep axis name or {axis, values}"
);

impl RawSpec {
    fn resolve(self) -> Result<ExperimentSpec> {
        let (name, params) = match self.target {
            RawTarget::Name(n) => (n, RawParams::default()),
            RawTarget::Object(o) => (o.name, o.params),
        };
        let dims = match (params.dims, self.dims) {
            (Some(a), Some(b)) if a != b => {
                return Err(HarnessError::spec(
                    "dims",
                    format!("{b} disagrees with target.params.dims = {a}"),
                ))
            }
            (Some(d), _) | (None, Some(d)) => d,
            (None, None) => {
                return Err(HarnessError::spec(
                    "target.params.dims",
                    "missing; set it or a top-level `dims`",
                ))
            }
        };
        let target = TargetSpec {
            name,
            dims,
            variances: params.variances,
            curvature: params.curvature,
        };

        let sweep = match (self.sweep, self.values) {
            (RawSweep::Axis(axis), Some(values)) => Sweep {
                axis: SweepAxis::parse(&axis)?,
                values,
            },
            (RawSweep::Axis(_), None) => {
                return Err(HarnessError::spec(
                    "values",
                    "required when `sweep` is an axis name",
                ))
            }
            (RawSweep::Object(_), Some(_)) => {
                return Err(HarnessError::spec(
                    "values",
                    "given both at top level and in `sweep`",
                ))
            }
            (RawSweep::Object(o), None) => Sweep {
                axis: SweepAxis::parse(&o.axis)?,
                values: o.values,
            },
        };

        let f = self.fixed;
        let sin_psi = match (f.sin_psi, f.psi) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::spec(
                    "fixed.psi",
                    "give either psi or sin_psi, not both",
                ))
            }
            (Some(s), None) => s,
            (None, Some(psi)) => RefreshAngle::new(psi)
                .map_err(|_| {
                    HarnessError::spec("fixed.psi", format!("must lie in (0, π/2], got {psi}"))
                })?
                .sin(),
            (None, None) => 1.0,
        };
        let fixed = FixedParams {
            dt: f.dt,
            steps: f.steps,
            leg_span: f.leg_span,
            sin_psi,
            extra_chances: f.extra_chances.unwrap_or(0),
            jitter: f.jitter.unwrap_or(DEFAULT_JITTER),
        };

        Ok(ExperimentSpec {
            target,
            sweep,
            fixed,
            replicas: self.replicas.unwrap_or(DEFAULT_REPLICAS),
            budget_force_evals: self.budget_force_evals.unwrap_or(DEFAULT_BUDGET),
            burn_in: self.burn_in.unwrap_or(DEFAULT_BURN_IN),
            observable: self
                .observable
                .unwrap_or_else(|| DEFAULT_OBSERVABLE.to_string()),
            seed: self.seed.unwrap_or(0),
            out_dir: self
                .out_dir
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        })
    }
}

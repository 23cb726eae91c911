//! JSON experiment configs.
//!
//! ```json
//! {
//!   "space": {"dim": 2, "p": 2.0},
//!   "domain": {"kind": "ball", "center": [0, 0], "radius": 2},
//!   "operator_T": {"kind": "rotation2d", "theta": 1.5707963267948966, "center": [0, 0]},
//!   "scheme": "mann", "variant": "anchored", "u": [1, 0],
//!   "schedules": {"alpha": {"family": "power", "c": 1.0, "rho": 1.0, "offset": 1}},
//!   "x0": [1, 1],
//!   "stop": {"max_iters": 10000, "residual_tol": 0.01},
//!   "seed": 7
//! }
//! ```
//!
//! Unknown keys are rejected, and so are keys that the chosen scheme does
//! not use.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::anchor::PathParams;
use crate::engine::{
    make_ishikawa, make_ishikawa_with_errors, make_mann, make_mann_with_errors, make_viscosity, make_yao_three_term,
    ProcessBase, ProcessConfig, StopRule, Variant, DEFAULT_DIVERGENCE_RADIUS,
};
use crate::error::{Error, Result};
use crate::operators::{BoundedSequence, DomainSpec, FamilySpec, OperatorSpec};
use crate::schedules::ScheduleSpec;
use crate::space::SpaceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Extended,
    Mann,
    Ishikawa,
    MannErrors,
    IshikawaErrors,
    Viscosity,
    Yao,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Anchored,
    Inertial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedules {
    pub alpha: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<ScheduleSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    pub max_iters: u64,
    #[serde(default)]
    pub residual_tol: f64,
    #[serde(default = "default_radius")]
    pub divergence_radius: f64,
}

fn default_radius() -> f64 {
    DEFAULT_DIVERGENCE_RADIUS
}

impl From<StopConfig> for StopRule {
    fn from(s: StopConfig) -> Self {
        StopRule {
            max_iters: s.max_iters,
            residual_tol: s.residual_tol,
            divergence_radius: s.divergence_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    pub domain: DomainSpec,
    #[serde(rename = "operator_T")]
    pub operator_t: OperatorSpec,
    pub scheme: SchemeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_seq: Option<BoundedSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_seq: Option<BoundedSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_m: Option<f64>,
    pub schedules: Schedules,
    pub x0: Vec<f64>,
    pub stop: StopConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<PathParams>,
}

/// Catalog kinds without parameters; serde accepts stray keys next to them,
/// so they are checked separately.
const UNIT_KINDS: [&str; 3] = ["identity", "identity_family", "whole_space"];

fn reject_keys_on_unit_kinds(v: &Value, path: &str) -> Result<()> {
    match v {
        Value::Object(map) => {
            if let Some(Value::String(kind)) = map.get("kind") {
                if UNIT_KINDS.contains(&kind.as_str()) && map.len() > 1 {
                    let extra: Vec<&str> = map.keys().map(String::as_str).filter(|k| *k != "kind").collect();
                    return Err(Error::Config(format!("{path}: '{kind}' takes no fields, found {extra:?}")));
                }
            }
            for (k, child) in map {
                reject_keys_on_unit_kinds(child, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                reject_keys_on_unit_kinds(child, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let raw: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        reject_keys_on_unit_kinds(&raw, "$")?;
        cfg.check_fields()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fields each scheme requires and admits.
    fn check_fields(&self) -> Result<()> {
        use SchemeName::*;
        let s = &self.schedules;
        let present: [(&str, bool); 10] = [
            ("variant", self.variant.is_some()),
            ("u", self.u.is_some()),
            ("u_seq", self.u_seq.is_some()),
            ("v_seq", self.v_seq.is_some()),
            ("f_family", self.f_family.is_some()),
            ("g_family", self.g_family.is_some()),
            ("perturbation_m", self.perturbation_m.is_some()),
            ("schedules.beta", s.beta.is_some()),
            ("schedules.gamma", s.gamma.is_some()),
            ("schedules.delta", s.delta.is_some()),
        ];
        let anchored = self.variant == Some(VariantName::Anchored);
        let (required, optional): (Vec<&str>, Vec<&str>) = match self.scheme {
            Extended => (
                vec!["f_family", "g_family", "schedules.beta"],
                vec!["schedules.delta", "perturbation_m"],
            ),
            Mann => (if anchored { vec!["variant", "u"] } else { vec!["variant"] }, vec![]),
            Ishikawa => (
                if anchored { vec!["variant", "u", "schedules.beta"] } else { vec!["variant", "schedules.beta"] },
                vec![],
            ),
            MannErrors => (vec!["u", "u_seq", "schedules.gamma"], vec![]),
            IshikawaErrors => (
                vec!["u", "u_seq", "v_seq", "schedules.beta", "schedules.gamma", "schedules.delta"],
                vec![],
            ),
            Viscosity => (vec!["f_family"], vec![]),
            Yao => (vec!["u", "schedules.beta"], vec![]),
        };
        let scheme = serde_json::to_value(self.scheme).expect("scheme serializes");
        let scheme = scheme.as_str().unwrap_or("?");
        for (name, is_present) in present {
            if required.contains(&name) && !is_present {
                return Err(Error::Config(format!("scheme '{scheme}' requires '{name}'")));
            }
            if is_present && !required.contains(&name) && !optional.contains(&name) {
                return Err(Error::Config(format!("'{name}' is not used by scheme '{scheme}'")));
            }
        }
        Ok(())
    }

    fn base(&self) -> Result<ProcessBase> {
        Ok(ProcessBase {
            space: self.space,
            domain: self.domain.clone(),
            t_op: self.operator_t.clone(),
            x0: self.space.vector(self.x0.clone())?,
            stop: self.stop.into(),
            seed: self.seed,
        })
    }

    /// Builds the engine config through the scheme's constructor.
    pub fn build(&self) -> Result<ProcessConfig> {
        let base = self.base()?;
        let s = &self.schedules;
        let need = |o: &Option<ScheduleSpec>| o.clone().expect("presence checked");
        let variant = || match self.variant {
            Some(VariantName::Anchored) => Variant::Anchored(self.u.clone().expect("presence checked")),
            _ => Variant::Inertial,
        };
        match self.scheme {
            SchemeName::Extended => ProcessConfig::extended(
                base,
                self.f_family.clone().expect("presence checked"),
                self.g_family.clone().expect("presence checked"),
                s.alpha.clone(),
                need(&s.beta),
                s.delta.clone().unwrap_or_else(ScheduleSpec::zero),
                self.perturbation_m.unwrap_or(1.0),
            ),
            SchemeName::Mann => make_mann(base, variant(), s.alpha.clone()),
            SchemeName::Ishikawa => make_ishikawa(base, variant(), s.alpha.clone(), need(&s.beta)),
            SchemeName::MannErrors => make_mann_with_errors(
                base,
                self.u.clone().expect("presence checked"),
                self.u_seq.clone().expect("presence checked"),
                s.alpha.clone(),
                need(&s.gamma),
            ),
            SchemeName::IshikawaErrors => make_ishikawa_with_errors(
                base,
                self.u.clone().expect("presence checked"),
                self.u_seq.clone().expect("presence checked"),
                self.v_seq.clone().expect("presence checked"),
                s.alpha.clone(),
                need(&s.beta),
                need(&s.gamma),
                need(&s.delta),
            ),
            SchemeName::Viscosity => match self.f_family.clone().expect("presence checked") {
                FamilySpec::ConstantFamily { f } => make_viscosity(base, f, s.alpha.clone()),
                other => Err(Error::Config(format!(
                    "scheme 'viscosity' needs a constant_family, found {}",
                    other.kind_name()
                ))),
            },
            SchemeName::Yao => make_yao_three_term(base, self.u.clone().expect("presence checked"), s.alpha.clone(), need(&s.beta)),
        }
    }

    pub fn anchor_params(&self) -> PathParams {
        self.anchor.unwrap_or_default()
    }
}

/// Bundled scenario.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub theorem: &'static str,
    pub description: &'static str,
    #[serde(skip)]
    pub json: &'static str,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "halpern_rotation",
        theorem: "3.1",
        description: "anchored Mann (Halpern) on a quarter-turn rotation of the plane, u = (1,0)",
        json: include_str!("../presets/halpern_rotation.json"),
    },
    Preset {
        name: "viscosity_segment",
        theorem: "3.1",
        description: "viscosity iteration with f(x) = x/2 + (1/2,1/2) onto the segment [(0,0),(1,0)]",
        json: include_str!("../presets/viscosity_segment.json"),
    },
    Preset {
        name: "ishikawa_errors_demo",
        theorem: "3.2",
        description: "Ishikawa with summable errors on a box clamp in l_3",
        json: include_str!("../presets/ishikawa_errors_demo.json"),
    },
    Preset {
        name: "yao_demo",
        theorem: "3.3",
        description: "three-term scheme with alpha_n, beta_n -> 0 on a quarter-turn rotation",
        json: include_str!("../presets/yao_demo.json"),
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl Preset {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::from_json(self.json).expect("bundled presets parse")
    }
}

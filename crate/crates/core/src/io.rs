//! Input documents (JSON or TOML) and frequency-list syntax.

use crate::model::{CableSystem, ConductorSpec, GroundModel, GroundSpec, Medium, ModelError, ReferencePolicy, Shape};
use crate::solver::shunt::ShuntSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid JSON input: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid TOML input: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConductorKind {
    Solid,
    Hollow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConductorDoc {
    #[serde(rename = "type")]
    pub kind: ConductorKind,
    pub x_m: f64,
    pub y_m: f64,
    pub outer_radius_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius_m: Option<f64>,
    #[serde(rename = "sigma_S_per_m", default, skip_serializing_if = "Option::is_none")]
    pub sigma_s_per_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistivity_ohm_m: Option<f64>,
    #[serde(default = "one")]
    pub mu_r: f64,
    #[serde(default = "one")]
    pub eps_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumDoc {
    #[serde(default = "one")]
    pub eps_r: f64,
    #[serde(default = "one")]
    pub mu_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundModelDoc {
    None,
    #[serde(alias = "analytic", alias = "infinite-earth-analytic")]
    InfiniteEarthAnalytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundDoc {
    pub model: GroundModelDoc,
    #[serde(rename = "sigma_S_per_m", default, skip_serializing_if = "Option::is_none")]
    pub sigma_s_per_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    Explicit,
    AutoTube,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDoc {
    pub mode: ReferenceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_m: Option<f64>,
    #[serde(rename = "sigma_S_per_m", default, skip_serializing_if = "Option::is_none")]
    pub sigma_s_per_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    fn validate(self) -> Result<Self, InputError> {
        let ok = self.f_min_hz > 0.0 && self.f_min_hz.is_finite() && self.f_max_hz.is_finite() && self.f_max_hz >= self.f_min_hz && self.points >= 1;
        if !ok || (self.points == 1 && self.f_max_hz != self.f_min_hz) {
            return Err(InputError::Schema(format!(
                "bad sweep {}:{}:{} (need 0 < min <= max, points >= 1, one point only when min == max)",
                self.f_min_hz, self.f_max_hz, self.points
            )));
        }
        Ok(self)
    }

    /// Parses `min:max:points:log|linear`.
    pub fn parse(text: &str) -> Result<Self, InputError> {
        let bad = || InputError::Schema(format!("sweep must be min:max:points:log|linear, got {text:?}"));
        let parts: Vec<&str> = text.trim().split(':').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let spacing = match parts[3] {
            "log" => Spacing::Log,
            "linear" | "lin" => Spacing::Linear,
            _ => return Err(bad()),
        };
        SweepSpec {
            f_min_hz: parts[0].parse().map_err(|_| bad())?,
            f_max_hz: parts[1].parse().map_err(|_| bad())?,
            points: parts[2].parse().map_err(|_| bad())?,
            spacing,
        }
        .validate()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.f_min_hz];
        }
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.f_min_hz;
                }
                if i == n - 1 {
                    return self.f_max_hz;
                }
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Log => (self.f_min_hz.ln() + t * (self.f_max_hz / self.f_min_hz).ln()).exp(),
                    Spacing::Linear => self.f_min_hz + t * (self.f_max_hz - self.f_min_hz),
                }
            })
            .collect()
    }
}

/// Parses a comma-separated list of positive frequencies.
pub fn parse_frequency_list(text: &str) -> Result<Vec<f64>, InputError> {
    text.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| InputError::Schema(format!("bad frequency {s:?}")))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(InputError::Schema(format!("frequency must be positive, got {v}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    pub conductors: Vec<ConductorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground: Option<GroundDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt: Option<ShuntSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    /// By extension, else by the first non-blank character.
    pub fn detect(path: Option<&Path>, text: &str) -> Format {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            Some("toml") => Format::Toml,
            _ => {
                if text.trim_start().starts_with('{') {
                    Format::Json
                } else {
                    Format::Toml
                }
            }
        }
    }
}

/// A parsed document: the validated system plus run settings it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInput {
    pub system: CableSystem,
    pub sweep: Option<SweepSpec>,
    pub shunt: Option<ShuntSpec>,
    pub default_order: u32,
}

impl InputDocument {
    pub fn from_str(text: &str, format: Format) -> Result<Self, InputError> {
        Ok(match format {
            Format::Json => serde_json::from_str(text)?,
            Format::Toml => toml::from_str(text)?,
        })
    }

    pub fn to_string(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("document serialises"),
            Format::Toml => toml::to_string(self).expect("document serialises"),
        }
    }

    fn conductor(&self, i: usize, c: &ConductorDoc) -> Result<ConductorSpec, InputError> {
        let sigma = match (c.sigma_s_per_m, c.resistivity_ohm_m) {
            (Some(s), None) => s,
            (None, Some(rho)) if rho > 0.0 => 1.0 / rho,
            (None, Some(rho)) => return Err(InputError::Schema(format!("conductor {i}: resistivity must be positive, got {rho}"))),
            _ => {
                return Err(InputError::Schema(format!(
                    "conductor {i}: give exactly one of sigma_S_per_m and resistivity_ohm_m"
                )))
            }
        };
        let shape = match (c.kind, c.inner_radius_m) {
            (ConductorKind::Solid, None) => Shape::Solid,
            (ConductorKind::Hollow, Some(r)) => Shape::Hollow { inner_radius: r },
            (ConductorKind::Solid, Some(_)) => return Err(InputError::Schema(format!("conductor {i}: solid conductor with inner_radius_m"))),
            (ConductorKind::Hollow, None) => return Err(InputError::Schema(format!("conductor {i}: hollow conductor needs inner_radius_m"))),
        };
        Ok(ConductorSpec {
            center_x: c.x_m,
            center_y: c.y_m,
            outer_radius: c.outer_radius_m,
            shape,
            sigma,
            eps_r: c.eps_r,
            mu_r: c.mu_r,
            order: c.order.or(self.order).unwrap_or(0),
        })
    }

    pub fn into_input(self) -> Result<ParsedInput, InputError> {
        let conductors = self
            .conductors
            .iter()
            .enumerate()
            .map(|(i, c)| self.conductor(i, c))
            .collect::<Result<Vec<_>, _>>()?;
        let medium = self.medium.map_or(Medium::default(), |m| Medium {
            eps_r: m.eps_r,
            mu_r: m.mu_r,
        });
        if !(medium.mu_r > 0.0 && medium.eps_r >= 1.0) {
            return Err(InputError::Schema(format!("medium needs mu_r > 0 and eps_r >= 1, got {medium:?}")));
        }
        let ground = match self.ground {
            None | Some(GroundDoc { model: GroundModelDoc::None, .. }) => None,
            Some(GroundDoc {
                model: GroundModelDoc::InfiniteEarthAnalytic,
                sigma_s_per_m,
            }) => match sigma_s_per_m {
                Some(s) if s > 0.0 && s.is_finite() => Some(GroundSpec {
                    model: GroundModel::InfiniteEarthAnalytic,
                    sigma: s,
                }),
                _ => return Err(InputError::Schema("ground model needs a positive sigma_S_per_m".into())),
            },
        };
        let policy = match self.reference {
            None => ReferencePolicy::auto_tube(),
            Some(r) => match r.mode {
                ReferenceMode::Explicit => {
                    ReferencePolicy::Explicit(r.index.ok_or_else(|| InputError::Schema("explicit reference needs index".into()))?)
                }
                ReferenceMode::AutoTube => {
                    if r.index.is_some() {
                        return Err(InputError::Schema("auto_tube reference takes no index".into()));
                    }
                    ReferencePolicy::AutoTube {
                        radius: r.radius_m.unwrap_or(ReferencePolicy::DEFAULT_TUBE_RADIUS),
                        thickness: r.thickness_m.unwrap_or(ReferencePolicy::DEFAULT_TUBE_THICKNESS),
                        sigma: r.sigma_s_per_m,
                    }
                }
            },
        };
        let sweep = self.sweep.map(SweepSpec::validate).transpose()?;
        let system = CableSystem::new(conductors, medium, ground, policy)?;
        Ok(ParsedInput {
            system,
            sweep,
            shunt: self.shunt,
            default_order: self.order.unwrap_or(0),
        })
    }

    /// Inverse of [`InputDocument::into_input`]: the auto-return tube is left
    /// implicit and every conductor carries its conductivity and order.
    pub fn from_input(input: &ParsedInput) -> Self {
        let sys = &input.system;
        let conductors = sys
            .user_conductors()
            .iter()
            .map(|c| ConductorDoc {
                kind: if c.is_hollow() { ConductorKind::Hollow } else { ConductorKind::Solid },
                x_m: c.center_x,
                y_m: c.center_y,
                outer_radius_m: c.outer_radius,
                inner_radius_m: c.inner_radius(),
                sigma_s_per_m: Some(c.sigma),
                resistivity_ohm_m: None,
                mu_r: c.mu_r,
                eps_r: c.eps_r,
                order: Some(c.order),
            })
            .collect();
        let reference = match sys.reference_policy {
            ReferencePolicy::Explicit(i) => ReferenceDoc {
                mode: ReferenceMode::Explicit,
                index: Some(i),
                radius_m: None,
                thickness_m: None,
                sigma_s_per_m: None,
            },
            ReferencePolicy::AutoTube { radius, thickness, sigma } => ReferenceDoc {
                mode: ReferenceMode::AutoTube,
                index: None,
                radius_m: Some(radius),
                thickness_m: Some(thickness),
                sigma_s_per_m: sigma,
            },
        };
        InputDocument {
            conductors,
            medium: Some(MediumDoc {
                eps_r: sys.medium.eps_r,
                mu_r: sys.medium.mu_r,
            }),
            ground: sys.ground.map(|g| GroundDoc {
                model: match g.model {
                    GroundModel::None => GroundModelDoc::None,
                    GroundModel::InfiniteEarthAnalytic => GroundModelDoc::InfiniteEarthAnalytic,
                },
                sigma_s_per_m: Some(g.sigma),
            }),
            reference: Some(reference),
            sweep: input.sweep,
            order: Some(input.default_order),
            shunt: input.shunt.clone(),
        }
    }
}

/// Parses and validates a document.
pub fn parse_system(text: &str, format: Format) -> Result<ParsedInput, InputError> {
    InputDocument::from_str(text, format)?.into_input()
}

pub fn read_input(path: &Path) -> Result<ParsedInput, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_system(&text, Format::detect(Some(path), &text))
}

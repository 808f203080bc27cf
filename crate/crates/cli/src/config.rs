//! TOML run configuration.
//!
//! ```toml
//! [model]
//! kind = "rhomboid"        # prismatic | baton | rhomboid
//! g = 9.81
//! ideal_tolerance = 0.01
//!
//! [masses]                 # m1..m8 (rhomboid), body + foot (prismatic), body (baton)
//! [spring]                 # stiffness or force_to_weight / k_norm, angles in degrees
//! [integrator]             # method = adaptive | fixed | penalty, tolerances, steps
//! [output]                 # trajectory = "run.csv", report = "run.json"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use jumpsim::baton::BatonConfig;
use jumpsim::prismatic::PrismaticConfig;
use jumpsim::rhomboid::{MassLayout, RhomboidConfig};
use jumpsim::takeoff::{DEFAULT_IDEAL_TOLERANCE, STANDARD_GRAVITY};
use jumpsim::IntegratorSettings;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Prismatic,
    Baton,
    Rhomboid,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Prismatic => "prismatic",
            ModelKind::Baton => "baton",
            ModelKind::Rhomboid => "rhomboid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Adaptive,
    Fixed,
    /// Rhomboid only: foot on a stiff ground spring.
    Penalty,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassesSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m5: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m6: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m7: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m8: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub foot: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpringSection {
    /// N·m/rad for the rotational models, N/m for the prismatic one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_to_weight: Option<f64>,
    /// Baton only: stiffness over `m·g·d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_ini_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_end_deg: Option<f64>,
    /// Rhomboid segment length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_length: Option<f64>,
    /// Prismatic natural length or baton rod length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contact_stiffness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub masses: MassesSection,
    #[serde(default)]
    pub spring: SpringSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Prismatic(PrismaticConfig),
    Baton(BatonConfig),
    Rhomboid(RhomboidConfig),
}

/// A configuration with every default filled in and every value checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: Model,
    pub method: Method,
    pub settings: IntegratorSettings,
    pub ideal_tolerance: f64,
    pub trajectory: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Error pointing at a config key, with its line when the key came from a file.
fn key_error(src: Option<&str>, section: &str, key: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    match src.and_then(|s| locate(s, section, key)) {
        Some(line) => anyhow::anyhow!("key `{section}.{key}` (line {line}): {msg}"),
        None => anyhow::anyhow!("key `{section}.{key}`: {msg}"),
    }
}

/// 1-based line of `key` inside `[section]`.
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            if current == section && k.trim() == key {
                return Some(i + 1);
            }
        }
    }
    None
}

impl RunConfig {
    pub fn parse(src: &str) -> anyhow::Result<Self> {
        toml::from_str(src).map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = Self::parse(&src).with_context(|| format!("parsing {}", path.display()))?;
        Ok((cfg, src))
    }

    /// Built-in defaults for a model: the demonstrator for the rhomboid,
    /// the idealised k_norm = 5.5 case for the baton, and a 10:1
    /// force-to-weight prismatic jumper with no foot mass.
    pub fn default_for(kind: ModelKind) -> Self {
        let mut c = RunConfig {
            model: ModelSection {
                kind: Some(kind),
                g: Some(STANDARD_GRAVITY),
                ideal_tolerance: Some(DEFAULT_IDEAL_TOLERANCE),
            },
            ..Default::default()
        };
        match kind {
            ModelKind::Rhomboid => {
                let d = RhomboidConfig::demonstrator();
                let m = d.masses;
                c.masses = MassesSection {
                    m1: Some(m.m1),
                    m2: Some(m.m2),
                    m3: Some(m.m3),
                    m4: Some(m.m4),
                    m5: Some(m.m5),
                    m6: Some(m.m6),
                    m7: Some(m.m7),
                    m8: Some(m.m8),
                    ..Default::default()
                };
                c.spring = SpringSection {
                    stiffness: Some(d.k_r),
                    theta_ini_deg: Some(178.0),
                    theta_end_deg: Some(25.0),
                    segment_length: Some(d.segment_length),
                    ..Default::default()
                };
            }
            ModelKind::Baton => {
                c.masses.body = Some(1.0);
                c.spring = SpringSection {
                    k_norm: Some(5.5),
                    theta_ini_deg: Some(30.0),
                    length: Some(1.0),
                    ..Default::default()
                };
            }
            ModelKind::Prismatic => {
                c.masses.body = Some(1.0);
                c.masses.foot = Some(0.0);
                c.spring = SpringSection {
                    force_to_weight: Some(10.0),
                    length: Some(0.2),
                    ..Default::default()
                };
            }
        }
        c
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks every key and builds the model. `src` is the file text, used
    /// only to point errors at line numbers.
    pub fn resolve(&self, src: Option<&str>) -> anyhow::Result<Resolved> {
        let err = |section: &str, key: &str, msg: String| key_error(src, section, key, msg);
        let Some(kind) = self.model.kind else {
            return Err(err("model", "kind", "missing; expected prismatic, baton or rhomboid".into()));
        };

        let g = self.model.g.unwrap_or(STANDARD_GRAVITY);
        if !(g >= 0.0 && g.is_finite()) {
            return Err(err("model", "g", format!("must be a finite value >= 0, got {g}")));
        }
        let tol = self.model.ideal_tolerance.unwrap_or(DEFAULT_IDEAL_TOLERANCE);
        if !(0.0..1.0).contains(&tol) {
            return Err(err("model", "ideal_tolerance", format!("must be in [0, 1), got {tol}")));
        }

        let m = &self.masses;
        let s = &self.spring;
        let allowed: (&[&str], &[&str]) = match kind {
            ModelKind::Rhomboid => (
                &["m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8"],
                &["stiffness", "force_to_weight", "theta_ini_deg", "theta_end_deg", "segment_length"],
            ),
            ModelKind::Baton => (&["body"], &["stiffness", "k_norm", "theta_ini_deg", "length"]),
            ModelKind::Prismatic => (&["body", "foot"], &["stiffness", "force_to_weight", "length"]),
        };
        let mass_keys = [
            ("m1", m.m1),
            ("m2", m.m2),
            ("m3", m.m3),
            ("m4", m.m4),
            ("m5", m.m5),
            ("m6", m.m6),
            ("m7", m.m7),
            ("m8", m.m8),
            ("body", m.body),
            ("foot", m.foot),
        ];
        let spring_keys = [
            ("stiffness", s.stiffness),
            ("force_to_weight", s.force_to_weight),
            ("k_norm", s.k_norm),
            ("theta_ini_deg", s.theta_ini_deg),
            ("theta_end_deg", s.theta_end_deg),
            ("segment_length", s.segment_length),
            ("length", s.length),
        ];
        for (section, keys, ok) in [("masses", &mass_keys[..], allowed.0), ("spring", &spring_keys[..], allowed.1)] {
            for (k, v) in keys {
                if let Some(v) = v {
                    if !ok.contains(k) {
                        return Err(err(section, k, format!("does not apply to the {} model", kind.as_str())));
                    }
                    if !v.is_finite() {
                        return Err(err(section, k, format!("must be finite, got {v}")));
                    }
                }
            }
        }
        let non_negative = |section: &str, key: &str, v: Option<f64>| -> anyhow::Result<f64> {
            match v {
                None => Err(err(section, key, "missing".into())),
                Some(x) if x < 0.0 => Err(err(section, key, format!("must be >= 0, got {x}"))),
                Some(x) => Ok(x),
            }
        };
        let positive = |section: &str, key: &str, v: Option<f64>| -> anyhow::Result<f64> {
            match v {
                None => Err(err(section, key, "missing".into())),
                Some(x) if x <= 0.0 => Err(err(section, key, format!("must be > 0, got {x}"))),
                Some(x) => Ok(x),
            }
        };
        let one_of = |a: &str, av: Option<f64>, b: &str, bv: Option<f64>| -> anyhow::Result<(bool, f64)> {
            match (av, bv) {
                (Some(_), Some(_)) => Err(err("spring", b, format!("give either `{a}` or `{b}`, not both"))),
                (Some(_), None) => Ok((true, positive("spring", a, av)?)),
                (None, Some(_)) => Ok((false, positive("spring", b, bv)?)),
                (None, None) => Err(err("spring", a, format!("missing (or give `{b}`)"))),
            }
        };

        let model = match kind {
            ModelKind::Rhomboid => {
                let mut arr = [0.0; 8];
                for (i, (k, v)) in mass_keys[..8].iter().enumerate() {
                    arr[i] = non_negative("masses", k, *v)?;
                }
                let masses = MassLayout::new(arr).map_err(|e| err("masses", "m1", e.to_string()))?;
                let l = positive("spring", "segment_length", s.segment_length)?;
                let ini = positive("spring", "theta_ini_deg", s.theta_ini_deg)?;
                let end = positive("spring", "theta_end_deg", s.theta_end_deg)?;
                if ini >= 180.0 {
                    return Err(err("spring", "theta_ini_deg", format!("must be below 180, got {ini}")));
                }
                if end >= ini {
                    return Err(err(
                        "spring",
                        "theta_end_deg",
                        format!("charged angle {end} must be below the natural angle {ini}"),
                    ));
                }
                let (direct, v) = one_of("stiffness", s.stiffness, "force_to_weight", s.force_to_weight)?;
                let built = if direct {
                    RhomboidConfig::new(masses, l, v, ini.to_radians(), end.to_radians(), g)
                } else {
                    RhomboidConfig::with_force_to_weight(masses, l, v, ini.to_radians(), end.to_radians(), g)
                };
                Model::Rhomboid(built.map_err(|e| err("spring", if direct { "stiffness" } else { "force_to_weight" }, e.to_string()))?)
            }
            ModelKind::Baton => {
                let body = positive("masses", "body", m.body)?;
                let d = positive("spring", "length", s.length)?;
                let ini = positive("spring", "theta_ini_deg", s.theta_ini_deg)?;
                if ini > 90.0 {
                    return Err(err("spring", "theta_ini_deg", format!("must be at most 90, got {ini}")));
                }
                let (direct, v) = one_of("stiffness", s.stiffness, "k_norm", s.k_norm)?;
                let built = if direct {
                    BatonConfig::new(body, d, v, ini.to_radians(), g)
                } else {
                    BatonConfig::from_normalized_stiffness(body, d, v, ini.to_radians(), g)
                };
                Model::Baton(built.map_err(|e| err("spring", if direct { "stiffness" } else { "k_norm" }, e.to_string()))?)
            }
            ModelKind::Prismatic => {
                let body = positive("masses", "body", m.body)?;
                let foot = non_negative("masses", "foot", m.foot.or(Some(0.0)))?;
                let d = positive("spring", "length", s.length)?;
                let (direct, v) = one_of("stiffness", s.stiffness, "force_to_weight", s.force_to_weight)?;
                let built = if direct {
                    PrismaticConfig::new(body, foot, v, d, g)
                } else {
                    PrismaticConfig::from_force_to_weight(body, foot, v, d, g)
                };
                Model::Prismatic(built.map_err(|e| err("spring", if direct { "stiffness" } else { "force_to_weight" }, e.to_string()))?)
            }
        };

        let i = &self.integrator;
        let mut settings = IntegratorSettings::default();
        for (key, value, slot) in [
            ("rel_tol", i.rel_tol, &mut settings.rel_tol),
            ("abs_tol", i.abs_tol, &mut settings.abs_tol),
            ("max_step", i.max_step, &mut settings.max_step),
            ("fixed_step", i.fixed_step, &mut settings.fixed_step),
            ("contact_stiffness", i.contact_stiffness, &mut settings.contact_stiffness),
            ("max_time", i.max_time, &mut settings.max_time),
        ] {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(err("integrator", key, format!("must be a finite value > 0, got {v}")));
                }
                *slot = v;
            }
        }
        if let Err(e) = settings.validate() {
            return Err(err("integrator", "fixed_step", e.to_string()));
        }
        let method = i.method.unwrap_or_default();
        if method == Method::Penalty && kind != ModelKind::Rhomboid {
            return Err(err("integrator", "method", format!("penalty contact needs the rhomboid model, not {}", kind.as_str())));
        }

        Ok(Resolved {
            model,
            method,
            settings,
            ideal_tolerance: tol,
            trajectory: self.output.trajectory.clone(),
            report: self.output.report.clone(),
        })
    }
}

/// Loads `path` or falls back to the built-in defaults of `kind`. When both
/// are given the file must describe that model.
pub fn load_or_default(path: Option<&Path>, kind: Option<ModelKind>) -> anyhow::Result<(RunConfig, Option<String>)> {
    match (path, kind) {
        (Some(p), kind) => {
            let (mut cfg, src) = RunConfig::load(p)?;
            match (cfg.model.kind, kind) {
                (Some(a), Some(b)) if a != b => bail!(
                    "--model {} conflicts with `model.kind = \"{}\"` in {}",
                    b.as_str(),
                    a.as_str(),
                    p.display()
                ),
                (None, Some(b)) => cfg.model.kind = Some(b),
                _ => {}
            }
            Ok((cfg, Some(src)))
        }
        (None, Some(k)) => Ok((RunConfig::default_for(k), None)),
        (None, None) => bail!("give --config <file> or --model <kind>"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        for k in [ModelKind::Prismatic, ModelKind::Baton, ModelKind::Rhomboid] {
            RunConfig::default_for(k).resolve(None).unwrap();
        }
    }

    #[test]
    fn rhomboid_default_is_demonstrator() {
        let r = RunConfig::default_for(ModelKind::Rhomboid).resolve(None).unwrap();
        let Model::Rhomboid(c) = r.model else { panic!() };
        let d = RhomboidConfig::demonstrator();
        assert_eq!(c.masses, d.masses);
        assert!((c.theta_ini - d.theta_ini).abs() < 1e-15);
    }

    #[test]
    fn negative_mass_names_key_and_line() {
        let src = "[model]\nkind = \"rhomboid\"\n\n[masses]\nm1 = -0.1\n";
        let e = RunConfig::parse(src).unwrap().resolve(Some(src)).unwrap_err().to_string();
        assert!(e.contains("masses.m1") && e.contains("line 5"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        let e = RunConfig::parse("[spring]\nstifness = 1.0\n").unwrap_err().to_string();
        assert!(e.contains("stifness"), "{e}");
    }

    #[test]
    fn inapplicable_key_rejected() {
        let mut c = RunConfig::default_for(ModelKind::Baton);
        c.spring.theta_end_deg = Some(20.0);
        let e = c.resolve(None).unwrap_err().to_string();
        assert!(e.contains("spring.theta_end_deg"), "{e}");
    }

    #[test]
    fn stiffness_and_ratio_are_exclusive() {
        let mut c = RunConfig::default_for(ModelKind::Rhomboid);
        c.spring.force_to_weight = Some(12.0);
        assert!(c.resolve(None).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        for k in [ModelKind::Prismatic, ModelKind::Baton, ModelKind::Rhomboid] {
            let c = RunConfig::default_for(k);
            let text = c.to_toml().unwrap();
            assert_eq!(RunConfig::parse(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn locate_tracks_sections() {
        let src = "[a]\nx = 1\n[b]\nx = 2\n";
        assert_eq!(locate(src, "b", "x"), Some(4));
        assert_eq!(locate(src, "c", "x"), None);
    }
}

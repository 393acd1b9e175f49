//! JSON run configuration and its translation into library types.
//!
//! All fields are optional except where a subcommand needs them. Lengths,
//! frequencies, dipole moments and densities are read in the unit system
//! named by `units`; everything is converted to natural units once, here.

use std::collections::BTreeMap;
use std::fmt;

use casimir_core::units::UnitScale;
use casimir_core::{
    AtomAt, AtomSpecies, Background, BodySpec, Constituent, Geometry, LorentzTerm, MediumModel, Orders,
    Oscillator, PairRule, QuadratureSpec, Sphere, Susceptibility, Vec3, VolumeSpec,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Natural,
    #[serde(alias = "SI")]
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    CpSphere,
    VdwPair,
    ManyAtom,
    Born,
    Micro,
    Verify,
    Check,
}

impl Problem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::CpSphere => "cp-sphere",
            Problem::VdwPair => "vdw-pair",
            Problem::ManyAtom => "many-atom",
            Problem::Born => "born",
            Problem::Micro => "micro",
            Problem::Verify => "verify",
            Problem::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorDef {
    pub omega: f64,
    pub d2: f64,
}

/// Either an explicit oscillator list or a single transition fixed by
/// its frequency and static polarizability.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillators: Option<Vec<OscillatorDef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_polarizability: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzDef {
    pub omega_p: f64,
    pub omega_t: f64,
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumDef {
    #[serde(default)]
    pub eps: Vec<LorentzDef>,
    #[serde(default)]
    pub mu: Vec<LorentzDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDef {
    pub species: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereDef {
    #[serde(default)]
    pub center: [f64; 3],
    pub radius: f64,
    pub medium: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryDef {
    Sphere {
        #[serde(default)]
        center: [f64; 3],
        radius: f64,
    },
    Box {
        corner: [f64; 3],
        extents: [f64; 3],
    },
    PointCloud {
        points: Vec<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstituentDef {
    pub species: String,
    pub density: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyDef {
    pub geometry: GeometryDef,
    pub composition: Vec<ConstituentDef>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundDef {
    /// Name of a medium filling all space; absent means vacuum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Distance of the (first) atom from the body or the other atom.
    Distance,
    /// Uniform scaling of all atom positions about the first atom.
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDef {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepDef {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                // end points exactly as written
                if i == 0 {
                    return self.min;
                }
                if i == self.points - 1 {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                    Spacing::Linear => self.min + t * (self.max - self.min),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Absolute tolerance in natural energy units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    /// Frequency map scale, in frequency units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloDef {
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_panels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub susceptibility: Option<Susceptibility>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloDef>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub units: Units,
    /// L₀ in metres. Required for SI input; in natural units it only
    /// matters for the packing diagnostic and defaults to the Bohr radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<Problem>,
    #[serde(default)]
    pub species: BTreeMap<String, SpeciesDef>,
    #[serde(default)]
    pub media: BTreeMap<String, MediumDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomDef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere: Option<SphereDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodyDef>,
    #[serde(default)]
    pub background: BackgroundDef,
    /// Born order k or microscopic order l.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Restrict a second-order Born term to one l-channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Orders>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinements: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packing_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDef>,
    #[serde(default)]
    pub quadrature: QuadratureDef,
    #[serde(default)]
    pub volume: VolumeDef,
}

/// A rejected configuration, with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

type Checked<T> = std::result::Result<T, ConfigError>;

/// Parse JSON text, reporting the path of the first schema violation.
pub fn parse(text: &str) -> Checked<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ConfigError::new(path, e.into_inner().to_string())
    })
}

fn positive(path: &str, v: f64) -> Checked<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Checked<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be non-negative and finite, got {v}")))
    }
}

fn finite3(path: &str, v: &[f64; 3]) -> Checked<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ConfigError::new(path, "components must be finite"))
    }
}

/// Configuration with every quantity converted to natural units.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub units: Units,
    pub scale: Option<UnitScale>,
    pub species: BTreeMap<String, AtomSpecies>,
    pub media: BTreeMap<String, MediumModel>,
    pub background: Background,
}

impl Resolved {
    pub fn build(cfg: &RunConfig) -> Checked<Self> {
        let scale = match (cfg.units, cfg.length_scale) {
            (_, Some(l)) => Some(UnitScale::new(positive("length_scale", l)?).expect("checked positive")),
            (Units::Si, None) => return Err(ConfigError::new("length_scale", "required when units is \"si\"")),
            (Units::Natural, None) => None,
        };
        let mut out = Self {
            units: cfg.units,
            scale,
            species: BTreeMap::new(),
            media: BTreeMap::new(),
            background: Background::Vacuum,
        };
        for (name, def) in &cfg.species {
            let species = out.species_from(name, def)?;
            out.species.insert(name.clone(), species);
        }
        for (name, def) in &cfg.media {
            let medium = out.medium_from(name, def)?;
            out.media.insert(name.clone(), medium);
        }
        if let Some(m) = &cfg.background.medium {
            out.background = Background::Bulk(out.medium("background.medium", m)?);
        }
        Ok(out)
    }

    fn si(&self) -> Option<&UnitScale> {
        match self.units {
            Units::Si => self.scale.as_ref(),
            Units::Natural => None,
        }
    }

    pub fn length(&self, x: f64) -> f64 {
        self.si().map_or(x, |s| s.length_to_natural(x))
    }

    pub fn frequency(&self, w: f64) -> f64 {
        self.si().map_or(w, |s| s.frequency_to_natural(w))
    }

    pub fn vector(&self, v: &[f64; 3]) -> Vec3 {
        Vec3::new(self.length(v[0]), self.length(v[1]), self.length(v[2]))
    }

    pub fn length_out(&self, x: f64) -> f64 {
        self.si().map_or(x, |s| s.length_to_si(x))
    }

    pub fn energy_out(&self, e: f64) -> f64 {
        self.si().map_or(e, |s| s.energy_to_si(e))
    }

    pub fn length_unit(&self) -> &'static str {
        match self.units {
            Units::Si => "m",
            Units::Natural => "L0",
        }
    }

    pub fn energy_unit(&self) -> &'static str {
        match self.units {
            Units::Si => "J",
            Units::Natural => "hbar c/L0",
        }
    }

    /// Bohr radius in units of L₀.
    pub fn bohr_radius(&self) -> f64 {
        self.scale.map_or(1.0, |s| s.bohr_radius())
    }

    fn species_from(&self, name: &str, def: &SpeciesDef) -> Checked<AtomSpecies> {
        let path = format!("species.{name}");
        let built = match (&def.oscillators, def.omega, def.static_polarizability) {
            (Some(list), None, None) => {
                let mut oscillators = Vec::with_capacity(list.len());
                for (k, o) in list.iter().enumerate() {
                    let omega = positive(&format!("{path}.oscillators[{k}].omega"), o.omega)?;
                    let d2 = non_negative(&format!("{path}.oscillators[{k}].d2"), o.d2)?;
                    let d2 = self.si().map_or(d2, |s| s.dipole_squared_to_natural(d2));
                    oscillators.push(Oscillator {
                        omega: self.frequency(omega),
                        d2,
                    });
                }
                AtomSpecies::new(name, oscillators)
            }
            (None, Some(omega), Some(alpha0)) => {
                let omega = self.frequency(positive(&format!("{path}.omega"), omega)?);
                let alpha0 = positive(&format!("{path}.static_polarizability"), alpha0)?;
                let alpha0 = self.si().map_or(alpha0, |s| s.polarizability_to_natural(alpha0));
                AtomSpecies::with_static_polarizability(name, omega, alpha0)
            }
            _ => {
                return Err(ConfigError::new(
                    path,
                    "give either `oscillators` or both `omega` and `static_polarizability`",
                ))
            }
        };
        built.map_err(|e| ConfigError::new(path, e.to_string()))
    }

    fn lorentz(&self, path: &str, terms: &[LorentzDef]) -> Checked<Vec<LorentzTerm>> {
        terms
            .iter()
            .enumerate()
            .map(|(k, t)| {
                Ok(LorentzTerm {
                    omega_p: self.frequency(non_negative(&format!("{path}[{k}].omega_p"), t.omega_p)?),
                    omega_t: self.frequency(positive(&format!("{path}[{k}].omega_t"), t.omega_t)?),
                    gamma: self.frequency(non_negative(&format!("{path}[{k}].gamma"), t.gamma)?),
                })
            })
            .collect()
    }

    fn medium_from(&self, name: &str, def: &MediumDef) -> Checked<MediumModel> {
        let path = format!("media.{name}");
        let model = MediumModel {
            eps: self.lorentz(&format!("{path}.eps"), &def.eps)?,
            mu: self.lorentz(&format!("{path}.mu"), &def.mu)?,
        };
        model.validate().map_err(|e| ConfigError::new(path, e.to_string()))?;
        Ok(model)
    }

    pub fn species(&self, path: &str, name: &str) -> Checked<AtomSpecies> {
        self.species
            .get(name)
            .cloned()
            .ok_or_else(|| ConfigError::new(path, format!("species '{name}' is not defined")))
    }

    pub fn medium(&self, path: &str, name: &str) -> Checked<MediumModel> {
        // "vacuum" is always available
        if name == "vacuum" && !self.media.contains_key(name) {
            return Ok(MediumModel::vacuum());
        }
        self.media
            .get(name)
            .cloned()
            .ok_or_else(|| ConfigError::new(path, format!("medium '{name}' is not defined")))
    }

    pub fn atom(&self, path: &str, def: &AtomDef) -> Checked<AtomAt> {
        finite3(&format!("{path}.position"), &def.position)?;
        Ok(AtomAt::new(
            self.species(&format!("{path}.species"), &def.species)?,
            self.vector(&def.position),
        ))
    }

    pub fn sphere(&self, def: &SphereDef) -> Checked<Sphere> {
        finite3("sphere.center", &def.center)?;
        Ok(Sphere {
            center: self.vector(&def.center),
            radius: self.length(positive("sphere.radius", def.radius)?),
            medium: self.medium("sphere.medium", &def.medium)?,
        })
    }

    pub fn body(&self, def: &BodyDef) -> Checked<BodySpec> {
        let geometry = match &def.geometry {
            GeometryDef::Sphere { center, radius } => {
                finite3("body.geometry.center", center)?;
                Geometry::Sphere {
                    center: self.vector(center),
                    radius: self.length(positive("body.geometry.radius", *radius)?),
                }
            }
            GeometryDef::Box { corner, extents } => {
                finite3("body.geometry.corner", corner)?;
                for (k, e) in extents.iter().enumerate() {
                    positive(&format!("body.geometry.extents[{k}]"), *e)?;
                }
                Geometry::Box {
                    corner: self.vector(corner),
                    extents: self.vector(extents),
                }
            }
            GeometryDef::PointCloud { points, weights } => {
                for (k, p) in points.iter().enumerate() {
                    finite3(&format!("body.geometry.points[{k}]"), p)?;
                }
                Geometry::PointCloud {
                    points: points.iter().map(|p| self.vector(p)).collect(),
                    weights: weights.clone(),
                }
            }
        };
        let mut composition = Vec::with_capacity(def.composition.len());
        for (k, c) in def.composition.iter().enumerate() {
            let path = format!("body.composition[{k}]");
            let density = non_negative(&format!("{path}.density"), c.density)?;
            let density = match (&def.geometry, self.si()) {
                // point-cloud densities count atoms per point
                (GeometryDef::PointCloud { .. }, _) | (_, None) => density,
                (_, Some(s)) => s.density_to_natural(density),
            };
            composition.push(Constituent {
                species: self.species(&format!("{path}.species"), &c.species)?,
                density,
            });
        }
        let body = BodySpec { geometry, composition };
        body.validate().map_err(|e| ConfigError::new("body", e.to_string()))?;
        Ok(body)
    }

    pub fn quadrature(&self, def: &QuadratureDef, rel_tol: Option<f64>) -> Checked<QuadratureSpec> {
        let mut spec = QuadratureSpec::default();
        if let Some(r) = rel_tol.or(def.rel_tol) {
            spec.rel_tol = positive("quadrature.rel_tol", r)?;
        }
        if let Some(a) = def.abs_tol {
            spec.abs_tol = non_negative("quadrature.abs_tol", a)?;
        }
        if let Some(m) = def.max_evals {
            spec.max_evals = m;
        }
        if let Some(s) = def.scale {
            spec.scale = Some(self.frequency(positive("quadrature.scale", s)?));
        }
        spec.validate().map_err(|e| ConfigError::new("quadrature", e.to_string()))?;
        Ok(spec)
    }

    pub fn volume(
        &self,
        def: &VolumeDef,
        quadrature: QuadratureSpec,
        grid: Option<usize>,
        seed: Option<u64>,
    ) -> Checked<VolumeSpec> {
        let mut spec = VolumeSpec {
            quadrature,
            ..VolumeSpec::default()
        };
        spec.scale = quadrature.scale;
        if let Some(n) = grid.or(def.grid) {
            spec.grid = n;
        }
        if let Some(p) = def.frequency_panels {
            spec.frequency.panels = p;
        }
        if let Some(o) = def.frequency_order {
            spec.frequency.order = o;
        }
        if let Some(x) = def.exclusion {
            spec.exclusion = non_negative("volume.exclusion", x)?;
        }
        if let Some(t) = def.tolerance {
            spec.tolerance = positive("volume.tolerance", t)?;
        }
        if let Some(s) = def.susceptibility {
            spec.susceptibility = s;
        }
        match (&def.monte_carlo, seed) {
            (Some(mc), seed) => {
                if mc.samples == 0 {
                    return Err(ConfigError::new("volume.monte_carlo.samples", "must be positive"));
                }
                spec.pair_rule = PairRule::MonteCarlo {
                    samples: mc.samples,
                    seed: seed.unwrap_or(mc.seed),
                };
            }
            (None, Some(_)) => log::warn!("--seed has no effect without volume.monte_carlo"),
            (None, None) => {}
        }
        spec.validate().map_err(|e| ConfigError::new("volume", e.to_string()))?;
        Ok(spec)
    }
}

/// Checks that need no numerics: references, sweep bounds, required parts.
pub fn validate_for(cfg: &RunConfig, problem: Problem) -> Checked<()> {
    if let Some(p) = cfg.problem {
        if p != problem {
            return Err(ConfigError::new(
                "problem",
                format!("config is for '{}' but '{}' was requested", p.as_str(), problem.as_str()),
            ));
        }
    }
    if let Some(s) = &cfg.sweep {
        positive("sweep.min", s.min)?;
        positive("sweep.max", s.max)?;
        if s.points == 0 {
            return Err(ConfigError::new("sweep.points", "must be at least 1"));
        }
        if s.points > 1 && !(s.max > s.min) {
            return Err(ConfigError::new("sweep.max", "must exceed sweep.min"));
        }
        let allowed = match problem {
            Problem::ManyAtom => s.variable == SweepVariable::Scale,
            Problem::Verify | Problem::Check => false,
            _ => s.variable == SweepVariable::Distance,
        };
        if !allowed {
            return Err(ConfigError::new(
                "sweep.variable",
                format!("not supported by '{}'", problem.as_str()),
            ));
        }
    }
    if let Some(f) = cfg.packing_factor {
        positive("packing_factor", f)?;
    }
    Ok(())
}

pub fn require<'a, T>(value: &'a Option<T>, path: &str) -> Checked<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| ConfigError::new(path, "missing field"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_carry_paths() {
        let err = parse(r#"{"sphere": {"radius": "big", "medium": "m"}}"#).unwrap_err();
        assert_eq!(err.path, "sphere.radius");
        let err = parse(r#"{"volume": {"grid": 4, "gird": 5}}"#).unwrap_err();
        assert_eq!(err.path, "volume.gird");
    }

    #[test]
    fn undefined_species_is_reported() {
        let cfg = parse(r#"{"atom": {"species": "Rb", "position": [0, 0, 1]}}"#).unwrap();
        let r = Resolved::build(&cfg).unwrap();
        let err = r.atom("atom", cfg.atom.as_ref().unwrap()).unwrap_err();
        assert_eq!(err.path, "atom.species");
    }

    #[test]
    fn sweep_bounds_must_be_ordered() {
        let cfg = parse(r#"{"sweep": {"variable": "distance", "min": 2, "max": 1, "points": 3}}"#).unwrap();
        assert_eq!(validate_for(&cfg, Problem::CpSphere).unwrap_err().path, "sweep.max");
        let cfg = parse(r#"{"sweep": {"variable": "distance", "min": -1, "max": 1, "points": 3}}"#).unwrap();
        assert_eq!(validate_for(&cfg, Problem::CpSphere).unwrap_err().path, "sweep.min");
    }

    #[test]
    fn log_sweep_hits_end_points() {
        let s = SweepDef {
            variable: SweepVariable::Distance,
            min: 1e-2,
            max: 1e2,
            points: 5,
            spacing: Spacing::Log,
        };
        let v = s.values();
        assert!((v[0] - 1e-2).abs() < 1e-17 && (v[2] - 1.0).abs() < 1e-15 && (v[4] - 1e2).abs() < 1e-12);
    }

    #[test]
    fn si_requires_length_scale() {
        let cfg = parse(r#"{"units": "si"}"#).unwrap();
        assert_eq!(Resolved::build(&cfg).unwrap_err().path, "length_scale");
    }
}

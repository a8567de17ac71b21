//! Flat `section.key = value` scenario files.
//!
//! ```text
//! # charged particle in a constant magnetic field
//! potential.kind = constant-magnetic
//! potential.phi = 1
//! particle.mass = 1
//! particle.charge = 2
//! initial.u = 1.4142135623730951, 0, 0, 1
//! integrator.step = 1e-3
//! integrator.t_end = 1
//! ```

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Matrix4, Vector4};
use sublorentz_core::fields::{
    DistributionMetric, Event5, FaradayTensor, FramedDistribution, PotentialField, Spacetime4Point,
};
use sublorentz_core::geodesic::{GeodesicState, IntegratorConfig, ParticleParams};
use sublorentz_core::polynomial::{Monomial, Polynomial4};

const KEYS: &[&str] = &[
    "potential.kind",
    "potential.phi",
    "potential.E",
    "potential.electric",
    "potential.magnetic",
    "potential.a0",
    "potential.a1",
    "potential.a2",
    "potential.a3",
    "metric.kind",
    "metric.matrix.row0",
    "metric.matrix.row1",
    "metric.matrix.row2",
    "metric.matrix.row3",
    "metric.g00",
    "metric.g01",
    "metric.g02",
    "metric.g03",
    "metric.g11",
    "metric.g12",
    "metric.g13",
    "metric.g22",
    "metric.g23",
    "metric.g33",
    "particle.mass",
    "particle.charge",
    "initial.x",
    "initial.x4",
    "initial.u",
    "integrator.step",
    "integrator.t_end",
    "integrator.record_every",
];

/// Where a value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => write!(f, "--set"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub origin: Option<Origin>,
    pub key: Option<String>,
    pub message: String,
}

impl ScenarioError {
    fn at(origin: &Origin, key: &str, message: impl Into<String>) -> Self {
        Self {
            origin: Some(origin.clone()),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn missing(key: &str) -> Self {
        Self {
            origin: None,
            key: Some(key.to_string()),
            message: "required key is missing".into(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.origin, &self.key) {
            (Some(o), Some(k)) => write!(f, "{o}: {k}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (Some(o), None) => write!(f, "{o}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    ConstantMagnetic { phi: f64 },
    ConstantElectric { e: f64 },
    Uniform { electric: [f64; 3], magnetic: [f64; 3] },
    Polynomial(Box<[Polynomial4; 4]>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Minkowski,
    Constant(Matrix4<f64>),
    Polynomial(Box<[[Polynomial4; 4]; 4]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub potential: PotentialSpec,
    pub metric: MetricSpec,
    pub particle: ParticleParams,
    pub initial: GeodesicState,
    pub integrator: IntegratorConfig,
}

impl Scenario {
    pub fn distribution(&self) -> FramedDistribution {
        let potential = match &self.potential {
            PotentialSpec::Zero => PotentialField::zero(),
            PotentialSpec::ConstantMagnetic { phi } => PotentialField::constant_magnetic(*phi),
            PotentialSpec::ConstantElectric { e } => PotentialField::constant_electric(*e),
            PotentialSpec::Uniform { electric, magnetic } => {
                PotentialField::uniform_field(&FaradayTensor::from_fields(*electric, *magnetic))
            }
            PotentialSpec::Polynomial(a) => PotentialField::polynomial((**a).clone()),
        };
        let metric = match &self.metric {
            MetricSpec::Minkowski => DistributionMetric::minkowski(),
            MetricSpec::Constant(m) => DistributionMetric::constant(*m).expect("validated at parse time"),
            MetricSpec::Polynomial(g) => DistributionMetric::polynomial((**g).clone()),
        };
        FramedDistribution::new(potential, metric)
    }
}

/// Raw key-value pairs with their origins; later entries override earlier ones.
#[derive(Debug, Clone, Default)]
pub struct Entries {
    map: BTreeMap<String, (String, Origin)>,
}

impl Entries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ScenarioError {
                    origin: Some(origin),
                    key: None,
                    message: format!("expected 'key = value', got '{line}'"),
                });
            };
            entries.insert(k.trim(), v.trim(), origin)?;
        }
        Ok(entries)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(ScenarioError {
                origin: Some(Origin::Override),
                key: None,
                message: format!("expected key=value, got '{assignment}'"),
            });
        };
        self.insert(k.trim(), v.trim(), Origin::Override)
    }

    fn insert(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(ScenarioError::at(&origin, key, "unknown key"));
        }
        if let (Some((_, prev)), Origin::Line(_)) = (self.map.get(key), &origin) {
            return Err(ScenarioError::at(&origin, key, format!("duplicate key, first set at {prev}")));
        }
        self.map.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, &Origin)> {
        self.map.get(key).map(|(v, o)| (v.as_str(), o))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|(v, o)| parse_number(v, o, key)).transpose()
    }

    fn required_number(&self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| ScenarioError::missing(key))
    }

    fn vector<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>> {
        self.get(key).map(|(v, o)| parse_vector::<N>(v, o, key)).transpose()
    }

    fn unused(&self, key: &str, reason: &str) -> Result<()> {
        match self.get(key) {
            Some((_, o)) => Err(ScenarioError::at(o, key, format!("not used {reason}"))),
            None => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let potential = self.potential()?;
        let metric = self.metric()?;

        let mass = self.number("particle.mass")?.unwrap_or(1.0);
        let charge = self.number("particle.charge")?.unwrap_or(0.0);
        let particle = ParticleParams::new(mass, charge).map_err(|e| ScenarioError {
            origin: self.get("particle.mass").map(|(_, o)| o.clone()),
            key: Some("particle".into()),
            message: e.to_string(),
        })?;

        let x = self.vector::<4>("initial.x")?.unwrap_or([0.0; 4]);
        let x4 = self.number("initial.x4")?.unwrap_or(0.0);
        let u = self.vector::<4>("initial.u")?.ok_or_else(|| ScenarioError::missing("initial.u"))?;
        let base = Spacetime4Point::from_array(x).expect("finite by parsing");
        let initial = GeodesicState::new(Event5::new(base, x4).expect("finite by parsing"), Vector4::from(u))
            .expect("finite by parsing");

        let step = self.required_number("integrator.step")?;
        let t_end = self.required_number("integrator.t_end")?;
        let record_every = match self.get("integrator.record_every") {
            None => 1,
            Some((v, o)) => v
                .parse::<usize>()
                .map_err(|_| ScenarioError::at(o, "integrator.record_every", format!("expected a positive integer, got '{v}'")))?,
        };
        let integrator = IntegratorConfig::new(step, t_end, record_every).map_err(|e| ScenarioError {
            origin: self.get("integrator.step").map(|(_, o)| o.clone()),
            key: Some("integrator".into()),
            message: e.to_string(),
        })?;

        Ok(Scenario {
            potential,
            metric,
            particle,
            initial,
            integrator,
        })
    }

    fn potential(&self) -> Result<PotentialSpec> {
        let kind = self.get("potential.kind").map(|(v, _)| v).unwrap_or("zero");
        let origin = self.get("potential.kind").map(|(_, o)| o.clone()).unwrap_or(Origin::Override);
        let all = [
            "potential.phi",
            "potential.E",
            "potential.electric",
            "potential.magnetic",
            "potential.a0",
            "potential.a1",
            "potential.a2",
            "potential.a3",
        ];
        let used: &[&str] = match kind {
            "zero" => &[],
            "constant-magnetic" => &["potential.phi"],
            "constant-electric" => &["potential.E"],
            "uniform" => &["potential.electric", "potential.magnetic"],
            "polynomial" => &["potential.a0", "potential.a1", "potential.a2", "potential.a3"],
            other => {
                return Err(ScenarioError::at(
                    &origin,
                    "potential.kind",
                    format!("unknown potential '{other}', expected zero, constant-magnetic, constant-electric, uniform or polynomial"),
                ))
            }
        };
        for key in all.iter().filter(|k| !used.contains(k)) {
            self.unused(key, &format!("with potential.kind = {kind}"))?;
        }
        Ok(match kind {
            "zero" => PotentialSpec::Zero,
            "constant-magnetic" => PotentialSpec::ConstantMagnetic {
                phi: self.required_number("potential.phi")?,
            },
            "constant-electric" => PotentialSpec::ConstantElectric {
                e: self.required_number("potential.E")?,
            },
            "uniform" => PotentialSpec::Uniform {
                electric: self.vector::<3>("potential.electric")?.unwrap_or([0.0; 3]),
                magnetic: self.vector::<3>("potential.magnetic")?.unwrap_or([0.0; 3]),
            },
            _ => {
                let comp = |i: usize| -> Result<Polynomial4> {
                    let key = format!("potential.a{i}");
                    match self.get(&key) {
                        None => Ok(Polynomial4::zero()),
                        Some((v, o)) => parse_polynomial(v, o, &key),
                    }
                };
                PotentialSpec::Polynomial(Box::new([comp(0)?, comp(1)?, comp(2)?, comp(3)?]))
            }
        })
    }

    fn metric(&self) -> Result<MetricSpec> {
        let kind = self.get("metric.kind").map(|(v, _)| v).unwrap_or("minkowski");
        let origin = self.get("metric.kind").map(|(_, o)| o.clone()).unwrap_or(Origin::Override);
        let rows: Vec<String> = (0..4).map(|i| format!("metric.matrix.row{i}")).collect();
        let entries: Vec<String> = (0..4)
            .flat_map(|i| (i..4).map(move |j| format!("metric.g{i}{j}")))
            .collect();
        let reject = |keys: &[String]| -> Result<()> {
            keys.iter().try_for_each(|k| self.unused(k, &format!("with metric.kind = {kind}")))
        };
        match kind {
            "minkowski" => {
                reject(&rows)?;
                reject(&entries)?;
                Ok(MetricSpec::Minkowski)
            }
            "constant" => {
                reject(&entries)?;
                let mut m = Matrix4::zeros();
                let mut origins = Vec::new();
                for (i, key) in rows.iter().enumerate() {
                    let (v, o) = self.get(key).ok_or_else(|| ScenarioError::missing(key))?;
                    let row = parse_vector::<4>(v, o, key)?;
                    for (j, x) in row.iter().enumerate() {
                        m[(i, j)] = *x;
                    }
                    origins.push(o.clone());
                }
                for i in 0..4 {
                    for j in (i + 1)..4 {
                        if m[(i, j)] != m[(j, i)] {
                            return Err(ScenarioError::at(
                                &origins[i],
                                "metric.matrix",
                                format!(
                                    "matrix is not symmetric: entry ({i},{j}) = {} but entry ({j},{i}) = {}",
                                    m[(i, j)],
                                    m[(j, i)]
                                ),
                            ));
                        }
                    }
                }
                DistributionMetric::constant(m)
                    .map_err(|e| ScenarioError::at(&origins[0], "metric.matrix", e.to_string()))?;
                Ok(MetricSpec::Constant(m))
            }
            "polynomial" => {
                reject(&rows)?;
                let mut g: [[Polynomial4; 4]; 4] = Default::default();
                for i in 0..4 {
                    for j in i..4 {
                        let key = format!("metric.g{i}{j}");
                        g[i][j] = match self.get(&key) {
                            Some((v, o)) => parse_polynomial(v, o, &key)?,
                            None if i == j => return Err(ScenarioError::missing(&key)),
                            None => Polynomial4::zero(),
                        };
                        g[j][i] = g[i][j].clone();
                    }
                }
                Ok(MetricSpec::Polynomial(Box::new(g)))
            }
            other => Err(ScenarioError::at(
                &origin,
                "metric.kind",
                format!("unknown metric '{other}', expected minkowski, constant or polynomial"),
            )),
        }
    }
}

/// Parses the scenario text and applies `--set` overrides.
pub fn load(text: &str, overrides: &[String]) -> Result<Scenario> {
    let mut entries = Entries::parse(text)?;
    for o in overrides {
        entries.set(o)?;
    }
    entries.build()
}

fn parse_number(v: &str, origin: &Origin, key: &str) -> Result<f64> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(x) => Err(ScenarioError::at(origin, key, format!("value must be finite, got {x}"))),
        Err(_) => Err(ScenarioError::at(origin, key, format!("expected a number, got '{v}'"))),
    }
}

fn parse_vector<const N: usize>(v: &str, origin: &Origin, key: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(ScenarioError::at(
            origin,
            key,
            format!("expected {N} comma-separated numbers, got {}", parts.len()),
        ));
    }
    let mut out = [0.0; N];
    for (i, p) in parts.iter().enumerate() {
        out[i] = parse_number(p, origin, &format!("{key}[{i}]"))?;
    }
    Ok(out)
}

/// `coef@e0,e1,e2,e3; coef@e0,e1,e2,e3; …`, or `0` for the zero polynomial.
fn parse_polynomial(v: &str, origin: &Origin, key: &str) -> Result<Polynomial4> {
    if v.trim() == "0" {
        return Ok(Polynomial4::zero());
    }
    let mut terms = Vec::new();
    for (i, term) in v.split(';').map(str::trim).filter(|t| !t.is_empty()).enumerate() {
        let sub = format!("{key} term {}", i + 1);
        let (c, e) = term
            .split_once('@')
            .ok_or_else(|| ScenarioError::at(origin, &sub, format!("expected coef@e0,e1,e2,e3, got '{term}'")))?;
        let coeff = parse_number(c, origin, &sub)?;
        let parts: Vec<&str> = e.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(ScenarioError::at(origin, &sub, format!("expected 4 exponents, got {}", parts.len())));
        }
        let mut exps = [0u32; 4];
        for (k, p) in parts.iter().enumerate() {
            exps[k] = p
                .parse()
                .map_err(|_| ScenarioError::at(origin, &sub, format!("exponent must be a non-negative integer, got '{p}'")))?;
        }
        terms.push(Monomial::new(coeff, exps));
    }
    if terms.is_empty() {
        return Err(ScenarioError::at(origin, key, "empty polynomial; write 0 for zero"));
    }
    Ok(Polynomial4::new(terms))
}

//! Experiment configuration: one JSON document naming the system and strip
//! plus registries of events, partitions, observables, and rectangles, and
//! the parameters of the requested operation.
//!
//! Exact scalars travel as strings like `"1/2"`, `"sqrt(2)"`, or
//! `"1/2 + 1/2*sqrt(5)"` so nothing is lost to serialization; probabilities
//! must be rational. Directions are written with their leading component,
//! which must be exactly 1: strips are graphs over the first axis, so a
//! vertical direction like (0, 1) is rejected up front.

use std::collections::BTreeMap;

use serde::Deserialize;

use dirmix_core::lattice::{DirectionVector, StripSpec};
use dirmix_core::mixing::ObservableExpr;
use dirmix_core::partition::{LogBase, Partition, DEFAULT_ATOM_CAP};
use dirmix_core::suspension::RectangleEvent;
use dirmix_core::systems::{product_system, Arc, CylinderEvent, EventExpr, SystemSpec};
use dirmix_core::{Int, Rational, Scalar};

use crate::error::CliError;

type Result<V> = std::result::Result<V, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn parse_scalar(s: &str) -> Result<Scalar> {
    s.parse::<Scalar>().map_err(|e| config_err(e.to_string()))
}

fn parse_rational(s: &str) -> Result<Rational> {
    parse_scalar(s)?
        .to_ratio()
        .ok_or_else(|| config_err(format!("expected a rational number, got {s:?}")))
}

/// Parses a full direction vector, requiring the leading component to be
/// exactly 1.
pub fn parse_direction(components: &[String]) -> Result<DirectionVector<Int>> {
    if components.len() < 2 {
        return Err(config_err(
            "a direction needs at least two components, e.g. [\"1\", \"sqrt(2)\"]",
        ));
    }
    let lead = parse_scalar(&components[0])?;
    if lead != Scalar::from_i64(1) {
        return Err(config_err(format!(
            "direction leading component must be exactly 1, got {lead}; strips are graphs \
             over the first axis, so vertical directions are not expressible"
        )));
    }
    let betas =
        components[1..].iter().map(|s| parse_scalar(s)).collect::<Result<Vec<Scalar>>>()?;
    Ok(DirectionVector::new(betas)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemDef,
    #[serde(default)]
    pub strip: Option<StripDef>,
    /// Optional echo of the verb; when present it must match the command
    /// line, which catches configs pasted under the wrong subcommand.
    #[serde(default)]
    pub verb: Option<String>,
    #[serde(default)]
    pub events: BTreeMap<String, EventDef>,
    #[serde(default)]
    pub partitions: BTreeMap<String, PartitionDef>,
    #[serde(default)]
    pub observables: BTreeMap<String, ObservableDef>,
    #[serde(default)]
    pub rectangles: BTreeMap<String, RectangleDef>,
    #[serde(default)]
    pub params: Params,
    /// "nats" or "bits"; applies to the entropy verbs.
    #[serde(default = "default_log_base")]
    pub log_base: String,
    #[serde(default = "default_atom_cap")]
    pub atom_cap: usize,
}

fn default_log_base() -> String {
    "nats".into()
}

fn default_atom_cap() -> usize {
    DEFAULT_ATOM_CAP
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemDef {
    Bernoulli { weights: Vec<String> },
    Counterexample { weights: Vec<String> },
    Rotation { alphas: [String; 2] },
    Product { left: Box<SystemDef>, right: Box<SystemDef> },
}

impl SystemDef {
    pub fn resolve(&self) -> Result<SystemSpec<Int>> {
        match self {
            SystemDef::Bernoulli { weights } => {
                Ok(SystemSpec::bernoulli(parse_weights(weights)?)?)
            }
            SystemDef::Counterexample { weights } => {
                Ok(SystemSpec::counterexample(parse_weights(weights)?)?)
            }
            SystemDef::Rotation { alphas } => {
                Ok(SystemSpec::rotation(parse_scalar(&alphas[0])?, parse_scalar(&alphas[1])?)?)
            }
            SystemDef::Product { left, right } => {
                Ok(product_system(left.resolve()?, right.resolve()?))
            }
        }
    }
}

fn parse_weights(weights: &[String]) -> Result<Vec<Rational>> {
    weights.iter().map(|w| parse_rational(w)).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripDef {
    pub direction: Vec<String>,
    pub widths: Vec<String>,
}

impl StripDef {
    pub fn resolve(&self) -> Result<StripSpec<Int>> {
        let direction = parse_direction(&self.direction)?;
        let widths =
            self.widths.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<Scalar>>>()?;
        Ok(StripSpec::new(direction, widths)?)
    }
}

/// An event is a disjoint union of cylinder atoms.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDef {
    pub atoms: Vec<AtomDef>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomDef {
    /// Lattice-site constraints on the 2-D shift.
    Sites { sites: Vec<SiteDef> },
    /// Index constraints on the two one-dimensional factors of the skew
    /// system.
    TwoFactor {
        #[serde(default)]
        left: Vec<IndexDef>,
        #[serde(default)]
        right: Vec<IndexDef>,
    },
    /// A rectangle of arcs on the two-torus rotation.
    Torus { u: [String; 2], v: [String; 2] },
    /// The whole space of whatever system the event is used with.
    Whole,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDef {
    pub m: i64,
    pub n: i64,
    pub symbol: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexDef {
    pub index: i64,
    pub symbol: usize,
}

impl AtomDef {
    fn resolve(&self, name: &str, sys: &SystemSpec<Int>) -> Result<CylinderEvent<Int>> {
        match self {
            AtomDef::Sites { sites } => {
                let entries: Vec<((i64, i64), usize)> =
                    sites.iter().map(|s| ((s.m, s.n), s.symbol)).collect();
                CylinderEvent::bernoulli_sites(&entries).ok_or_else(|| {
                    config_err(format!("event {name:?} pins one site to two symbols"))
                })
            }
            AtomDef::TwoFactor { left, right } => {
                let l: Vec<(i64, usize)> = left.iter().map(|e| (e.index, e.symbol)).collect();
                let r: Vec<(i64, usize)> = right.iter().map(|e| (e.index, e.symbol)).collect();
                CylinderEvent::two_factor(&l, &r).ok_or_else(|| {
                    config_err(format!("event {name:?} pins one index to two symbols"))
                })
            }
            AtomDef::Torus { u, v } => Ok(CylinderEvent::torus_rect(
                Arc::new(parse_scalar(&u[0])?, parse_scalar(&u[1])?)?,
                Arc::new(parse_scalar(&v[0])?, parse_scalar(&v[1])?)?,
            )),
            AtomDef::Whole => Ok(CylinderEvent::whole(sys)),
        }
    }
}

/// A partition is either the two-atom split of a named event or an explicit
/// atom list of named events.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PartitionDef {
    Binary { binary: String },
    Atoms { atoms: Vec<String> },
}

/// An observable is an indicator, a mean-centered indicator, or a rational
/// linear combination of named events.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ObservableDef {
    Indicator { indicator: String },
    Centered { centered: String },
    Terms { terms: Vec<TermDef> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDef {
    pub coeff: String,
    pub event: String,
}

/// A base event crossed with two unit-interval arcs; omitted arcs default
/// to the full interval.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleDef {
    pub base: String,
    #[serde(default)]
    pub u: Option<[String; 2]>,
    #[serde(default)]
    pub v: Option<[String; 2]>,
}

/// Flat bag of per-verb parameters; each verb validates the fields it needs
/// and ignores none silently: unknown keys are already rejected by serde.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub kmax: Option<i64>,
    pub nmax: Option<i64>,
    pub length: Option<usize>,
    pub horizon: Option<i64>,
    pub pmax: Option<u32>,
    pub window: Option<i64>,
    /// Event names for correlate/densityone (B and C) and ergodic (B).
    pub b: Option<String>,
    pub c: Option<String>,
    /// Observable names for wmavg (f and g) and kvn (f).
    pub f: Option<String>,
    pub g: Option<String>,
    /// Partition name for entropy; fullseq tracks `track` (or this one).
    pub partition: Option<String>,
    pub track: Option<Vec<String>>,
    /// Explicit plan points for entropy/ergodic, full coordinates each.
    pub plan: Option<Vec<Vec<i64>>>,
    /// Flow slope for suspend.
    pub beta: Option<String>,
    /// Rectangle names for suspend.
    pub rect_b: Option<String>,
    pub rect_c: Option<String>,
    /// Second strip for sumset.
    pub second: Option<StripDef>,
    /// Direction for kvn; defaults to the strip direction.
    pub direction: Option<Vec<String>>,
}

/// The config with every name resolved against the system: ready to run.
#[derive(Debug)]
pub struct ResolvedConfig {
    pub system: SystemSpec<Int>,
    pub strip: Option<StripSpec<Int>>,
    pub events: BTreeMap<String, EventExpr<Int>>,
    pub partitions: BTreeMap<String, Partition<Int>>,
    pub observables: BTreeMap<String, ObservableExpr<Int>>,
    pub rectangles: BTreeMap<String, RectangleEvent<Int>>,
    pub params: Params,
    pub log_base: LogBase,
    pub atom_cap: usize,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let system = self.system.resolve()?;
        let strip = self.strip.as_ref().map(|s| s.resolve()).transpose()?;

        let mut events = BTreeMap::new();
        for (name, def) in &self.events {
            if def.atoms.is_empty() {
                return Err(config_err(format!("event {name:?} needs at least one atom")));
            }
            let atoms = def
                .atoms
                .iter()
                .map(|a| a.resolve(name, &system))
                .collect::<Result<Vec<_>>>()?;
            events.insert(name.clone(), EventExpr::union(atoms)?);
        }

        let mut partitions = BTreeMap::new();
        for (name, def) in &self.partitions {
            let part = match def {
                PartitionDef::Binary { binary } => {
                    Partition::binary(&system, lookup(&events, binary, "event")?.clone())?
                }
                PartitionDef::Atoms { atoms } => {
                    let resolved = atoms
                        .iter()
                        .map(|a| lookup(&events, a, "event").cloned())
                        .collect::<Result<Vec<_>>>()?;
                    Partition::new(&system, resolved)?
                }
            };
            partitions.insert(name.clone(), part);
        }

        let mut observables = BTreeMap::new();
        for (name, def) in &self.observables {
            let obs = match def {
                ObservableDef::Indicator { indicator } => {
                    ObservableExpr::indicator(lookup(&events, indicator, "event")?.clone())
                }
                ObservableDef::Centered { centered } => {
                    ObservableExpr::centered(&system, lookup(&events, centered, "event")?.clone())?
                }
                ObservableDef::Terms { terms } => {
                    let mut acc = ObservableExpr::zero();
                    for t in terms {
                        let e = lookup(&events, &t.event, "event")?.clone();
                        acc = acc.add(&ObservableExpr::indicator(e).scale(&parse_rational(&t.coeff)?));
                    }
                    acc
                }
            };
            observables.insert(name.clone(), obs);
        }

        let mut rectangles = BTreeMap::new();
        for (name, def) in &self.rectangles {
            let base = lookup(&events, &def.base, "event")?.clone();
            let arc = |spec: &Option<[String; 2]>| -> Result<Arc<Int>> {
                match spec {
                    Some([lo, hi]) => Ok(Arc::new(parse_scalar(lo)?, parse_scalar(hi)?)?),
                    None => Ok(Arc::full()),
                }
            };
            rectangles
                .insert(name.clone(), RectangleEvent::new(base, arc(&def.u)?, arc(&def.v)?));
        }

        let log_base = match self.log_base.as_str() {
            "nats" => LogBase::Nats,
            "bits" => LogBase::Bits,
            other => {
                return Err(config_err(format!(
                    "log_base must be \"nats\" or \"bits\", got {other:?}"
                )))
            }
        };

        if self.atom_cap < 1 {
            return Err(config_err("atom_cap must be at least 1"));
        }

        Ok(ResolvedConfig {
            system,
            strip,
            events,
            partitions,
            observables,
            rectangles,
            params: self.params.clone(),
            log_base,
            atom_cap: self.atom_cap,
        })
    }
}

fn lookup<'m, V>(map: &'m BTreeMap<String, V>, name: &str, kind: &str) -> Result<&'m V> {
    map.get(name)
        .ok_or_else(|| config_err(format!("{kind} {name:?} is not defined in the config")))
}

impl ResolvedConfig {
    pub fn require_strip(&self) -> Result<&StripSpec<Int>> {
        self.strip.as_ref().ok_or_else(|| config_err("this verb requires a \"strip\" section"))
    }

    pub fn named_event(&self, field: &str, name: &Option<String>) -> Result<&EventExpr<Int>> {
        let name = require(field, name)?;
        lookup(&self.events, name, "event")
    }

    pub fn named_observable(
        &self,
        field: &str,
        name: &Option<String>,
    ) -> Result<&ObservableExpr<Int>> {
        let name = require(field, name)?;
        lookup(&self.observables, name, "observable")
    }

    pub fn named_partition(&self, field: &str, name: &Option<String>) -> Result<&Partition<Int>> {
        let name = require(field, name)?;
        lookup(&self.partitions, name, "partition")
    }

    pub fn named_rectangle(
        &self,
        field: &str,
        name: &Option<String>,
    ) -> Result<&RectangleEvent<Int>> {
        let name = require(field, name)?;
        lookup(&self.rectangles, name, "rectangle")
    }
}

pub fn require<'v, V>(field: &str, value: &'v Option<V>) -> Result<&'v V> {
    value.as_ref().ok_or_else(|| config_err(format!("missing required params.{field}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(system: serde_json::Value) -> ExperimentConfig {
        serde_json::from_value(serde_json::json!({ "system": system })).unwrap()
    }

    #[test]
    fn resolves_a_bernoulli_system_with_rational_weights() {
        let cfg = minimal(serde_json::json!({"kind": "bernoulli", "weights": ["1/3", "2/3"]}));
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.system.q(), 2);
        assert_eq!(resolved.atom_cap, DEFAULT_ATOM_CAP);
    }

    #[test]
    fn rejects_irrational_weights() {
        let cfg = minimal(serde_json::json!({"kind": "bernoulli", "weights": ["sqrt(2)", "1/2"]}));
        let err = cfg.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_directions_not_led_by_one() {
        for lead in ["0", "2", "-1"] {
            let err = parse_direction(&[lead.to_string(), "1/2".to_string()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "lead {lead} should be a config error");
        }
        parse_direction(&["1".to_string(), "sqrt(2)".to_string()]).unwrap();
    }

    #[test]
    fn unknown_fields_are_config_errors() {
        let text = r#"{"system": {"kind": "bernoulli", "weights": ["1/2", "1/2"]}, "surprise": 1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }

    #[test]
    fn conflicting_site_symbols_are_reported_by_event_name() {
        let cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
            "system": {"kind": "bernoulli", "weights": ["1/2", "1/2"]},
            "events": {"bad": {"atoms": [{"kind": "sites", "sites": [
                {"m": 0, "n": 0, "symbol": 0},
                {"m": 0, "n": 0, "symbol": 1}
            ]}]}}
        }))
        .unwrap();
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("bad"));
    }
}

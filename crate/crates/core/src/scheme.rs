//! Optical layouts up to the modulator reflection point, and the double-pass
//! probe transmittance they imply.
//!
//! A probe enters from the channel, crosses the outbound elements, bounces
//! off one reflection point and crosses the inbound elements back out. Its
//! composite transmittance is the dB sum of every traversed leg plus the
//! reflection term. Only one reflection point is modeled.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::components::{base_dir, read_json, Catalog, Component, ComponentKind, Leg};
use crate::error::{Error, Result};
use crate::spectrum::{resample, sum_db, OutOfRange, TransmittanceSpectrum, WavelengthGrid};

/// Reflection assumed when none is measured: the upper (Eve-favoring) edge
/// of the -40..-50 dB photodiode noise floor.
pub const DEFAULT_REF_DB: f64 = -40.0;

/// Outbound index where countermeasures go by default: the channel-facing end.
pub const CHANNEL_END: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeElement {
    pub component: String,
    pub leg: Leg,
}

impl SchemeElement {
    pub fn new(component: impl Into<String>, leg: Leg) -> Self {
        Self {
            component: component.into(),
            leg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionPoint {
    pub flat_db: f64,
}

impl ReflectionPoint {
    pub fn new(ref_db: f64) -> Result<Self> {
        if !ref_db.is_finite() || ref_db > 0.0 {
            return Err(Error::InvalidParameter(format!("reflection must be finite and <= 0 dB (got {ref_db})")));
        }
        Ok(Self { flat_db: ref_db })
    }
}

impl Default for ReflectionPoint {
    fn default() -> Self {
        Self { flat_db: DEFAULT_REF_DB }
    }
}

/// Either a flat reflectance or a full spectrum taken from a component leg
/// (e.g. PBS cross-port leakage acting as the reflector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reflection {
    Flat(ReflectionPoint),
    Element(SchemeElement),
}

impl Default for Reflection {
    fn default() -> Self {
        Reflection::Flat(ReflectionPoint::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePath {
    pub outbound: Vec<SchemeElement>,
    pub reflection: Reflection,
    pub inbound: Vec<SchemeElement>,
}

impl ProbePath {
    /// Paths with an empty pass are legal but usually a mistake.
    pub fn is_one_sided(&self) -> bool {
        self.outbound.is_empty() != self.inbound.is_empty()
    }

    fn elements(&self) -> impl Iterator<Item = &SchemeElement> {
        let refl = match &self.reflection {
            Reflection::Element(e) => Some(e),
            Reflection::Flat(_) => None,
        };
        self.outbound.iter().chain(refl).chain(self.inbound.iter())
    }

    /// Every referenced component exists and exposes the referenced leg.
    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        if let Reflection::Flat(r) = self.reflection {
            ReflectionPoint::new(r.flat_db)?;
        }
        for e in self.elements() {
            catalog.get(&e.component)?.leg(e.leg)?;
        }
        Ok(())
    }
}

/// Replaces the mirrored inbound element at `index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InboundOverride {
    pub index: usize,
    pub component: String,
    pub leg: Leg,
}

/// Builds a path whose inbound pass is the outbound pass reversed with every
/// leg flipped, then patched by `overrides`.
///
/// Fails when a mirrored leg that is not overridden has no spectrum.
pub fn build_double_pass(
    outbound: Vec<SchemeElement>,
    reflection: Reflection,
    overrides: &[InboundOverride],
    catalog: &Catalog,
) -> Result<ProbePath> {
    let mut inbound: Vec<SchemeElement> = outbound
        .iter()
        .rev()
        .map(|e| SchemeElement::new(e.component.clone(), e.leg.reversed()))
        .collect();
    for o in overrides {
        let len = inbound.len();
        let slot = inbound.get_mut(o.index).ok_or(Error::PositionOutOfRange { position: o.index, len })?;
        *slot = SchemeElement::new(o.component.clone(), o.leg);
    }
    let path = ProbePath {
        outbound,
        reflection,
        inbound,
    };
    path.validate(catalog)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    name: String,
    path: ProbePath,
    catalog: Catalog,
}

impl Scheme {
    pub fn new(name: impl Into<String>, path: ProbePath, catalog: Catalog) -> Result<Self> {
        path.validate(&catalog)?;
        Ok(Self {
            name: name.into(),
            path,
            catalog,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn path(&self) -> &ProbePath {
        &self.path
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Replaces a flat reflection value; spectral reflections are untouched.
    pub fn with_flat_reflection(mut self, ref_db: f64) -> Result<Self> {
        if let Reflection::Flat(_) = self.path.reflection {
            self.path.reflection = Reflection::Flat(ReflectionPoint::new(ref_db)?);
        }
        Ok(self)
    }
}

fn leg_on_grid(catalog: &Catalog, e: &SchemeElement, grid: &WavelengthGrid) -> Result<TransmittanceSpectrum> {
    let s = catalog.get(&e.component)?.leg(e.leg)?;
    resample(s, grid, OutOfRange::Error).map_err(|err| Error::in_component(&e.component, err))
}

/// Legs of one pass summed on `grid`, with no reflection term.
pub fn single_pass(scheme: &Scheme, elements: &[SchemeElement], grid: &WavelengthGrid) -> Result<TransmittanceSpectrum> {
    let legs = elements
        .iter()
        .map(|e| leg_on_grid(&scheme.catalog, e, grid))
        .collect::<Result<Vec<_>>>()?;
    sum_db(&legs.iter().collect::<Vec<_>>(), 0.0, grid)
}

/// Double-pass probe transmittance: outbound legs, reflection and inbound
/// legs summed in dB on `grid`.
pub fn composite_transmittance(scheme: &Scheme, grid: &WavelengthGrid) -> Result<TransmittanceSpectrum> {
    let mut legs = Vec::with_capacity(scheme.path.outbound.len() + scheme.path.inbound.len() + 1);
    for e in &scheme.path.outbound {
        legs.push(leg_on_grid(&scheme.catalog, e, grid)?);
    }
    let offset = match &scheme.path.reflection {
        Reflection::Flat(r) => r.flat_db,
        Reflection::Element(e) => {
            legs.push(leg_on_grid(&scheme.catalog, e, grid)?);
            0.0
        }
    };
    for e in &scheme.path.inbound {
        legs.push(leg_on_grid(&scheme.catalog, e, grid)?);
    }
    sum_db(&legs.iter().collect::<Vec<_>>(), offset, grid)
}

/// Returns a new scheme with `component` inserted at outbound `position`
/// (forward leg) and at the mirrored inbound slot (backward leg).
pub fn apply_countermeasure(scheme: &Scheme, component: &Component, position: usize) -> Result<Scheme> {
    if component.kind() != ComponentKind::TwoPort {
        return Err(Error::KindMismatch {
            component: component.id().to_string(),
            msg: "countermeasures must be two-port".into(),
        });
    }
    let out_len = scheme.path.outbound.len();
    if position > out_len {
        return Err(Error::PositionOutOfRange { position, len: out_len });
    }
    let mut next = scheme.clone();
    match next.catalog.get(component.id()) {
        Ok(existing) if existing == component => {}
        Ok(_) => return Err(Error::DuplicateComponent(component.id().to_string())),
        Err(_) => next.catalog.insert(component.clone())?,
    }
    let in_len = next.path.inbound.len();
    let in_pos = in_len.saturating_sub(position);
    next.path
        .outbound
        .insert(position, SchemeElement::new(component.id(), Leg::Forward));
    next.path
        .inbound
        .insert(in_pos, SchemeElement::new(component.id(), Leg::Backward));
    Ok(next)
}

/// Inbound pass as written in a scheme file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InboundSpec {
    Mirror(MirrorKeyword),
    Explicit(Vec<SchemeElement>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MirrorKeyword {
    Mirror,
}

impl Default for InboundSpec {
    fn default() -> Self {
        InboundSpec::Mirror(MirrorKeyword::Mirror)
    }
}

/// Scheme JSON:
/// `{name, outbound: [{component, leg}], reflection: {flat_db} | {component, leg},
///   inbound: [...] | "mirror", overrides: [{index, component, leg}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub name: String,
    pub outbound: Vec<SchemeElement>,
    #[serde(default)]
    pub reflection: Reflection,
    #[serde(default)]
    pub inbound: InboundSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<InboundOverride>,
    /// Optional component catalog manifest, relative to the scheme file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<std::path::PathBuf>,
}

impl SchemeFile {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn build(&self, catalog: Catalog) -> Result<Scheme> {
        let path = match &self.inbound {
            InboundSpec::Mirror(_) => {
                build_double_pass(self.outbound.clone(), self.reflection.clone(), &self.overrides, &catalog)?
            }
            InboundSpec::Explicit(inbound) => {
                if !self.overrides.is_empty() {
                    return Err(Error::InvalidParameter(
                        "overrides only apply to a mirrored inbound pass".into(),
                    ));
                }
                ProbePath {
                    outbound: self.outbound.clone(),
                    reflection: self.reflection.clone(),
                    inbound: inbound.clone(),
                }
            }
        };
        Scheme::new(self.name.clone(), path, catalog)
    }
}

/// Loads a scheme file. The catalog comes from `catalog` when given,
/// otherwise from the file's own `catalog` entry.
pub fn load_scheme(path: &Path, catalog: Option<Catalog>, grid: &WavelengthGrid) -> Result<Scheme> {
    let file = SchemeFile::read(path)?;
    let catalog = match (catalog, &file.catalog) {
        (Some(c), _) => c,
        (None, Some(rel)) => crate::components::load_catalog(&base_dir(path).join(rel), grid)?,
        (None, None) => {
            return Err(Error::InvalidParameter(format!(
                "{}: no component catalog given",
                path.display()
            )))
        }
    };
    file.build(catalog)
}

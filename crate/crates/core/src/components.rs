//! Optical elements: measured legs loaded from CSV, or synthetic parametric
//! models (attenuator, isolator, WDM filter, bent-fiber filter).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{read_spectrum_csv, resample, OutOfRange, TransmittanceSpectrum, WavelengthGrid};

/// Ordered port pair `from -> to` of a three-port element, ports 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortPair {
    from: u8,
    to: u8,
}

impl PortPair {
    pub fn new(from: u8, to: u8) -> Result<Self> {
        if !(1..=3).contains(&from) || !(1..=3).contains(&to) || from == to {
            return Err(Error::InvalidParameter(format!("invalid port pair {from}->{to}")));
        }
        Ok(Self { from, to })
    }

    pub fn from(&self) -> u8 {
        self.from
    }

    pub fn to(&self) -> u8 {
        self.to
    }

    pub fn reversed(&self) -> Self {
        Self {
            from: self.to,
            to: self.from,
        }
    }

    /// All six ordered pairs.
    pub fn all() -> impl Iterator<Item = PortPair> {
        (1..=3u8).flat_map(|i| (1..=3u8).filter(move |&j| j != i).map(move |j| PortPair { from: i, to: j }))
    }
}

impl fmt::Display for PortPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.from, self.to)
    }
}

impl FromStr for PortPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits: Vec<u8> = s
            .chars()
            .filter(|c| !matches!(c, '-' | '>' | ' '))
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidParameter(format!("invalid port pair '{s}'")))?;
        match digits[..] {
            [i, j] => PortPair::new(i, j),
            _ => Err(Error::InvalidParameter(format!("invalid port pair '{s}'"))),
        }
    }
}

/// Which spectrum of a component a probe traverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leg {
    Forward,
    Backward,
    Pair(PortPair),
}

impl Leg {
    /// The leg a probe takes on the way back.
    pub fn reversed(&self) -> Leg {
        match self {
            Leg::Forward => Leg::Backward,
            Leg::Backward => Leg::Forward,
            Leg::Pair(p) => Leg::Pair(p.reversed()),
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leg::Forward => f.write_str("forward"),
            Leg::Backward => f.write_str("backward"),
            Leg::Pair(p) => p.fmt(f),
        }
    }
}

impl FromStr for Leg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" | "f" => Ok(Leg::Forward),
            "backward" | "b" => Ok(Leg::Backward),
            other => other.parse().map(Leg::Pair),
        }
    }
}

impl Serialize for Leg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Leg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalSpectra {
    forward: TransmittanceSpectrum,
    backward: TransmittanceSpectrum,
}

impl DirectionalSpectra {
    pub fn new(forward: TransmittanceSpectrum, backward: TransmittanceSpectrum) -> Result<Self> {
        if forward.grid() != backward.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { forward, backward })
    }

    /// Same spectrum in both directions.
    pub fn reciprocal(s: TransmittanceSpectrum) -> Self {
        Self {
            forward: s.clone(),
            backward: s,
        }
    }

    pub fn forward(&self) -> &TransmittanceSpectrum {
        &self.forward
    }

    pub fn backward(&self) -> &TransmittanceSpectrum {
        &self.backward
    }
}

/// Independent per-pair spectra; no energy-conservation constraint is
/// imposed across ports.
#[derive(Debug, Clone, PartialEq)]
pub struct PortPairSpectra {
    pairs: BTreeMap<PortPair, TransmittanceSpectrum>,
}

impl PortPairSpectra {
    pub fn new(pairs: BTreeMap<PortPair, TransmittanceSpectrum>) -> Result<Self> {
        let mut grids = pairs.values().map(|s| s.grid());
        if let Some(first) = grids.next() {
            if grids.any(|g| g != first) {
                return Err(Error::GridMismatch);
            }
        } else {
            return Err(Error::InvalidParameter("port-pair component has no spectra".into()));
        }
        Ok(Self { pairs })
    }

    pub fn get(&self, pair: PortPair) -> Option<&TransmittanceSpectrum> {
        self.pairs.get(&pair)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PortPair, &TransmittanceSpectrum)> {
        self.pairs.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Spectra {
    Directional(DirectionalSpectra),
    PortPairs(PortPairSpectra),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    TwoPort,
    ThreePort,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::TwoPort => "two-port",
            ComponentKind::ThreePort => "three-port",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Measured,
    Synthetic(SynthModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    id: String,
    kind: ComponentKind,
    spectra: Spectra,
    provenance: Provenance,
}

impl Component {
    pub fn new(id: impl Into<String>, kind: ComponentKind, spectra: Spectra, provenance: Provenance) -> Result<Self> {
        let id = id.into();
        let consistent = matches!(
            (kind, &spectra),
            (ComponentKind::TwoPort, Spectra::Directional(_)) | (ComponentKind::ThreePort, Spectra::PortPairs(_))
        );
        if !consistent {
            return Err(Error::KindMismatch {
                component: id,
                msg: format!("{kind} component given the wrong kind of spectra"),
            });
        }
        if id.is_empty() {
            return Err(Error::InvalidParameter("component id is empty".into()));
        }
        Ok(Self {
            id,
            kind,
            spectra,
            provenance,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> ComponentKind {
        self.kind
    }

    pub fn spectra(&self) -> &Spectra {
        &self.spectra
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Spectrum for `leg`, or an error when the leg does not exist on this
    /// kind of component or was never supplied.
    pub fn leg(&self, leg: Leg) -> Result<&TransmittanceSpectrum> {
        match (&self.spectra, leg) {
            (Spectra::Directional(d), Leg::Forward) => Ok(&d.forward),
            (Spectra::Directional(d), Leg::Backward) => Ok(&d.backward),
            (Spectra::PortPairs(p), Leg::Pair(pair)) => p.get(pair).ok_or_else(|| Error::MissingLeg {
                component: self.id.clone(),
                leg: format!("port pair {pair}"),
            }),
            (_, leg) => Err(Error::KindMismatch {
                component: self.id.clone(),
                msg: format!("{} component has no '{leg}' leg", self.kind),
            }),
        }
    }

    /// Every spectrum this component carries, for invariant checks.
    pub fn all_legs(&self) -> Vec<(Leg, &TransmittanceSpectrum)> {
        match &self.spectra {
            Spectra::Directional(d) => vec![(Leg::Forward, &d.forward), (Leg::Backward, &d.backward)],
            Spectra::PortPairs(p) => p.pairs.iter().map(|(k, v)| (Leg::Pair(*k), v)).collect(),
        }
    }
}

/// Components keyed by unique id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    components: BTreeMap<String, Component>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: Component) -> Result<()> {
        if self.components.contains_key(c.id()) {
            return Err(Error::DuplicateComponent(c.id().to_string()));
        }
        self.components.insert(c.id().to_string(), c);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&Component> {
        self.components.get(id).ok_or_else(|| Error::UnknownComponent(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.components.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Component> {
        self.components.values()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl FromIterator<Component> for Result<Catalog> {
    fn from_iter<I: IntoIterator<Item = Component>>(iter: I) -> Self {
        let mut cat = Catalog::new();
        for c in iter {
            cat.insert(c)?;
        }
        Ok(cat)
    }
}

// --- synthetic models --------------------------------------------------------

/// Flat `-loss_db` in both directions.
pub fn synth_attenuator(id: &str, loss_db: f64, grid: &WavelengthGrid) -> Result<Component> {
    if !loss_db.is_finite() || loss_db < 0.0 {
        return Err(Error::InvalidParameter(format!("attenuator loss must be finite and >= 0 dB (got {loss_db})")));
    }
    let s = TransmittanceSpectrum::flat(grid.clone(), -loss_db)?;
    Component::new(
        id,
        ComponentKind::TwoPort,
        Spectra::Directional(DirectionalSpectra::reciprocal(s)),
        Provenance::Synthetic(SynthModel::Attenuator { loss_db }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsolatorParams {
    pub fwd_loss_db: f64,
    pub iso_floor_db: f64,
    pub degradation_rate_db_per_nm: f64,
    pub band_center_nm: f64,
}

impl IsolatorParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.fwd_loss_db,
            self.iso_floor_db,
            self.degradation_rate_db_per_nm,
            self.band_center_nm,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite
            || self.fwd_loss_db < 0.0
            || self.iso_floor_db <= self.fwd_loss_db
            || self.degradation_rate_db_per_nm < 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "isolator needs iso_floor_db > fwd_loss_db >= 0 and degradation rate >= 0 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Backward transmittance: isolation degrading linearly away from the
    /// design band, never better than the forward leg.
    pub fn backward_db(&self, lambda_nm: f64) -> f64 {
        let iso = -self.iso_floor_db + self.degradation_rate_db_per_nm * (lambda_nm - self.band_center_nm);
        iso.min(-self.fwd_loss_db)
    }
}

pub fn synth_isolator(id: &str, params: IsolatorParams, grid: &WavelengthGrid) -> Result<Component> {
    params.validate()?;
    let fwd = TransmittanceSpectrum::flat(grid.clone(), -params.fwd_loss_db)?;
    let bwd = TransmittanceSpectrum::from_fn(grid.clone(), |l| params.backward_db(l))?;
    Component::new(
        id,
        ComponentKind::TwoPort,
        Spectra::Directional(DirectionalSpectra::new(fwd, bwd)?),
        Provenance::Synthetic(SynthModel::Isolator(params)),
    )
}

/// Closed wavelength interval with a loss in dB (positive number).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub loss_db: f64,
}

impl Band {
    pub fn new(lo_nm: f64, hi_nm: f64, loss_db: f64) -> Self {
        Self { lo_nm, hi_nm, loss_db }
    }

    fn contains(&self, l: f64) -> bool {
        l >= self.lo_nm && l <= self.hi_nm
    }

    fn overlaps(&self, o: &Band) -> bool {
        self.lo_nm <= o.hi_nm && o.lo_nm <= self.hi_nm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmParams {
    pub passbands: Vec<Band>,
    pub stop_floor_db: f64,
    #[serde(default)]
    pub leak_windows: Vec<Band>,
}

impl WdmParams {
    pub fn validate(&self, grid: &WavelengthGrid) -> Result<()> {
        if !(self.stop_floor_db.is_finite() && self.stop_floor_db >= 0.0) {
            return Err(Error::InvalidParameter(format!("stop floor must be >= 0 dB (got {})", self.stop_floor_db)));
        }
        for (what, bands) in [("passband", &self.passbands), ("leak window", &self.leak_windows)] {
            for b in bands.iter() {
                let finite = b.lo_nm.is_finite() && b.hi_nm.is_finite() && b.loss_db.is_finite();
                if !finite || b.lo_nm >= b.hi_nm || b.loss_db < 0.0 {
                    return Err(Error::InvalidParameter(format!("bad {what} {b:?}")));
                }
                if b.lo_nm < grid.lo() || b.hi_nm > grid.hi() {
                    return Err(Error::InvalidParameter(format!(
                        "{what} {}..{} nm lies outside the grid span {}..{} nm",
                        b.lo_nm,
                        b.hi_nm,
                        grid.lo(),
                        grid.hi()
                    )));
                }
                if b.loss_db >= self.stop_floor_db {
                    return Err(Error::InvalidParameter(format!(
                        "{what} loss {} dB must be below the stop floor {} dB",
                        b.loss_db, self.stop_floor_db
                    )));
                }
            }
        }
        for p in &self.passbands {
            if let Some(w) = self.leak_windows.iter().find(|w| w.overlaps(p)) {
                return Err(Error::InvalidParameter(format!(
                    "passband {}..{} nm overlaps leak window {}..{} nm",
                    p.lo_nm, p.hi_nm, w.lo_nm, w.hi_nm
                )));
            }
        }
        Ok(())
    }

    /// Piecewise-flat transmittance. Overlapping bands of one type resolve to
    /// the lowest loss, which keeps the result independent of list order.
    pub fn transmittance_db(&self, lambda_nm: f64) -> f64 {
        let lowest = |bands: &[Band]| {
            bands
                .iter()
                .filter(|b| b.contains(lambda_nm))
                .map(|b| b.loss_db)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
        };
        let loss = lowest(&self.passbands)
            .or_else(|| lowest(&self.leak_windows))
            .unwrap_or(self.stop_floor_db);
        -loss
    }
}

pub fn synth_wdm(id: &str, params: WdmParams, grid: &WavelengthGrid) -> Result<Component> {
    params.validate(grid)?;
    let s = TransmittanceSpectrum::from_fn(grid.clone(), |l| params.transmittance_db(l))?;
    Component::new(
        id,
        ComponentKind::TwoPort,
        Spectra::Directional(DirectionalSpectra::reciprocal(s)),
        Provenance::Synthetic(SynthModel::Wdm(params)),
    )
}

/// Macrobend loss of a wound single-mode fiber section.
///
/// Per-meter loss is `floor + amplitude * exp(rate * (lambda - knee))`,
/// capped at `cap`, and scales linearly with length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BendLossParams {
    pub radius_mm: f64,
    pub length_m: f64,
    pub amplitude_db_per_m: f64,
    pub rate_per_nm: f64,
    pub knee_nm: f64,
    pub floor_db_per_m: f64,
    pub cap_db_per_m: f64,
}

impl BendLossParams {
    /// Only calibrated radius. Chosen so 1 m gives at most 1 dB at 1550 nm and
    /// at least 30 dB from 1830 nm on, saturating at 60 dB/m.
    pub const CALIBRATED_RADIUS_MM: f64 = 12.0;

    pub fn radius_12mm() -> Self {
        Self {
            radius_mm: Self::CALIBRATED_RADIUS_MM,
            length_m: 1.0,
            amplitude_db_per_m: 30.0,
            rate_per_nm: 0.02,
            knee_nm: 1830.0,
            floor_db_per_m: 0.05,
            cap_db_per_m: 60.0,
        }
    }

    /// Shipped calibration for `radius_mm`, if there is one.
    pub fn calibrated(radius_mm: f64, length_m: f64) -> Option<Self> {
        (radius_mm == Self::CALIBRATED_RADIUS_MM).then(|| Self {
            length_m,
            ..Self::radius_12mm()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.radius_mm.is_finite()
            && self.radius_mm > 0.0
            && self.length_m.is_finite()
            && self.length_m >= 0.0
            && self.amplitude_db_per_m.is_finite()
            && self.amplitude_db_per_m >= 0.0
            && self.rate_per_nm.is_finite()
            && self.rate_per_nm >= 0.0
            && self.knee_nm.is_finite()
            && self.floor_db_per_m.is_finite()
            && self.floor_db_per_m >= 0.0
            && self.cap_db_per_m.is_finite()
            && self.cap_db_per_m >= self.floor_db_per_m;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid bend-loss parameters {self:?}")))
        }
    }
}

/// Transmittance in dB (<= 0) of the wound section at `lambda_nm`.
pub fn bend_loss(lambda_nm: f64, p: &BendLossParams) -> f64 {
    let per_m = (p.floor_db_per_m + p.amplitude_db_per_m * (p.rate_per_nm * (lambda_nm - p.knee_nm)).exp())
        .min(p.cap_db_per_m);
    -(p.length_m * per_m)
}

pub fn synth_bend_filter(id: &str, params: BendLossParams, grid: &WavelengthGrid) -> Result<Component> {
    params.validate()?;
    let s = TransmittanceSpectrum::from_fn(grid.clone(), |l| bend_loss(l, &params))?;
    Component::new(
        id,
        ComponentKind::TwoPort,
        Spectra::Directional(DirectionalSpectra::reciprocal(s)),
        Provenance::Synthetic(SynthModel::BendFilter(params)),
    )
}

/// Bent-fiber filter parameters as written in a manifest. For the
/// calibrated radius every other field may be omitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BendFilterSpec {
    pub radius_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_db_per_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_per_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knee_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor_db_per_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_db_per_m: Option<f64>,
}

impl BendFilterSpec {
    pub fn resolve(&self) -> Result<BendLossParams> {
        let length_m = self.length_m.unwrap_or(1.0);
        let base = BendLossParams::calibrated(self.radius_mm, length_m);
        let pick = |v: Option<f64>, f: fn(&BendLossParams) -> f64, name: &str| -> Result<f64> {
            v.or_else(|| base.as_ref().map(f)).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no shipped calibration for {} mm radius; '{name}' must be given",
                    self.radius_mm
                ))
            })
        };
        let p = BendLossParams {
            radius_mm: self.radius_mm,
            length_m,
            amplitude_db_per_m: pick(self.amplitude_db_per_m, |b| b.amplitude_db_per_m, "amplitude_db_per_m")?,
            rate_per_nm: pick(self.rate_per_nm, |b| b.rate_per_nm, "rate_per_nm")?,
            knee_nm: pick(self.knee_nm, |b| b.knee_nm, "knee_nm")?,
            floor_db_per_m: pick(self.floor_db_per_m, |b| b.floor_db_per_m, "floor_db_per_m")?,
            cap_db_per_m: pick(self.cap_db_per_m, |b| b.cap_db_per_m, "cap_db_per_m")?,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<BendLossParams> for BendFilterSpec {
    fn from(p: BendLossParams) -> Self {
        Self {
            radius_mm: p.radius_mm,
            length_m: Some(p.length_m),
            amplitude_db_per_m: Some(p.amplitude_db_per_m),
            rate_per_nm: Some(p.rate_per_nm),
            knee_nm: Some(p.knee_nm),
            floor_db_per_m: Some(p.floor_db_per_m),
            cap_db_per_m: Some(p.cap_db_per_m),
        }
    }
}

/// A named synthetic model with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case")]
pub enum SynthModel {
    Attenuator { loss_db: f64 },
    Isolator(IsolatorParams),
    Wdm(WdmParams),
    BendFilter(BendLossParams),
}

impl SynthModel {
    pub fn name(&self) -> &'static str {
        match self {
            SynthModel::Attenuator { .. } => "attenuator",
            SynthModel::Isolator(_) => "isolator",
            SynthModel::Wdm(_) => "wdm",
            SynthModel::BendFilter(_) => "bend-filter",
        }
    }

    /// Builds a model from a name and a JSON parameter object, as accepted by
    /// manifests and the `synth` command.
    pub fn from_parts(name: &str, params: serde_json::Value) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::InvalidParameter(format!("{name} parameters: {e}"));
        match name {
            "attenuator" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    loss_db: f64,
                }
                let p: P = serde_json::from_value(params).map_err(bad)?;
                Ok(SynthModel::Attenuator { loss_db: p.loss_db })
            }
            "isolator" => Ok(SynthModel::Isolator(serde_json::from_value(params).map_err(bad)?)),
            "wdm" => Ok(SynthModel::Wdm(serde_json::from_value(params).map_err(bad)?)),
            "bend-filter" => {
                let spec: BendFilterSpec = serde_json::from_value(params).map_err(bad)?;
                Ok(SynthModel::BendFilter(spec.resolve()?))
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown model '{other}' (expected attenuator, isolator, wdm or bend-filter)"
            ))),
        }
    }

    pub fn build(&self, id: &str, grid: &WavelengthGrid) -> Result<Component> {
        match self {
            SynthModel::Attenuator { loss_db } => synth_attenuator(id, *loss_db, grid),
            SynthModel::Isolator(p) => synth_isolator(id, *p, grid),
            SynthModel::Wdm(p) => synth_wdm(id, p.clone(), grid),
            SynthModel::BendFilter(p) => synth_bend_filter(id, *p, grid),
        }
    }
}

// --- measured components and manifests ---------------------------------------

/// CSV files making up a measured component.
#[derive(Debug, Clone, PartialEq)]
pub enum LegFiles {
    Directional {
        forward: Option<PathBuf>,
        backward: Option<PathBuf>,
    },
    Pairs(BTreeMap<PortPair, PathBuf>),
}

/// Loads a measured component. All legs are resampled onto the grid of the
/// first leg (forward, or the lowest port pair).
pub fn load_component(id: &str, kind: ComponentKind, files: &LegFiles, gain_allowed: bool) -> Result<Component> {
    let wrap = |e| Error::in_component(id, e);
    let spectra = match (kind, files) {
        (ComponentKind::TwoPort, LegFiles::Directional { forward, backward }) => {
            let missing = |leg: &str| Error::MissingLeg {
                component: id.to_string(),
                leg: leg.to_string(),
            };
            let fwd_path = forward.as_ref().ok_or_else(|| missing("forward"))?;
            let bwd_path = backward.as_ref().ok_or_else(|| missing("backward"))?;
            let fwd = read_spectrum_csv(fwd_path, gain_allowed).map_err(wrap)?;
            let bwd = read_spectrum_csv(bwd_path, gain_allowed).map_err(wrap)?;
            let bwd = resample(&bwd, fwd.grid(), OutOfRange::Error).map_err(wrap)?;
            Spectra::Directional(DirectionalSpectra::new(fwd, bwd)?)
        }
        (ComponentKind::ThreePort, LegFiles::Pairs(files)) => {
            if files.is_empty() {
                return Err(Error::MissingLeg {
                    component: id.to_string(),
                    leg: "every port pair".into(),
                });
            }
            let mut pairs = BTreeMap::new();
            let mut grid: Option<WavelengthGrid> = None;
            for (pair, path) in files {
                let s = read_spectrum_csv(path, gain_allowed).map_err(wrap)?;
                let s = match &grid {
                    Some(g) => resample(&s, g, OutOfRange::Error).map_err(wrap)?,
                    None => {
                        grid = Some(s.grid().clone());
                        s
                    }
                };
                pairs.insert(*pair, s);
            }
            Spectra::PortPairs(PortPairSpectra::new(pairs)?)
        }
        (kind, _) => {
            return Err(Error::KindMismatch {
                component: id.to_string(),
                msg: format!("{kind} component given the wrong set of leg files"),
            })
        }
    };
    Component::new(id, kind, spectra, Provenance::Measured)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestLegs {
    Pairs {
        pairs: BTreeMap<String, PathBuf>,
    },
    Directional {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forward: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        backward: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestModel {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// On-disk description of one component. Either `legs` (CSV paths, relative
/// to the manifest) or `model` must be present; `legs` wins when both are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentManifest {
    pub id: String,
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legs: Option<ManifestLegs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ManifestModel>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub gain_allowed: bool,
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl ComponentManifest {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Materializes the component. Leg paths resolve against `base`;
    /// synthetic models are sampled on `grid`.
    pub fn load(&self, base: &Path, grid: &WavelengthGrid) -> Result<Component> {
        if let Some(legs) = &self.legs {
            let files = match legs {
                ManifestLegs::Directional { forward, backward } => LegFiles::Directional {
                    forward: forward.as_ref().map(|p| base.join(p)),
                    backward: backward.as_ref().map(|p| base.join(p)),
                },
                ManifestLegs::Pairs { pairs } => LegFiles::Pairs(
                    pairs
                        .iter()
                        .map(|(k, p)| Ok((k.parse()?, base.join(p))))
                        .collect::<Result<_>>()?,
                ),
            };
            let mut c = load_component(&self.id, self.kind, &files, self.gain_allowed)?;
            if let Some(p) = &self.provenance {
                c.provenance = p.clone();
            }
            return Ok(c);
        }
        let model = self.model.as_ref().ok_or_else(|| Error::MissingLeg {
            component: self.id.clone(),
            leg: "legs or model".into(),
        })?;
        let model = SynthModel::from_parts(&model.name, model.params.clone()).map_err(|e| Error::in_component(&self.id, e))?;
        let c = model.build(&self.id, grid).map_err(|e| Error::in_component(&self.id, e))?;
        if c.kind != self.kind {
            return Err(Error::KindMismatch {
                component: self.id.clone(),
                msg: format!("manifest says {} but model '{}' is {}", self.kind, model.name(), c.kind),
            });
        }
        Ok(c)
    }
}

/// Reads a component manifest file and loads the component it describes.
pub fn load_manifest(path: &Path, grid: &WavelengthGrid) -> Result<Component> {
    ComponentManifest::read(path)?.load(&base_dir(path), grid)
}

/// `{"components": ["a.json", ...]}` listing component manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogManifest {
    pub components: Vec<PathBuf>,
}

pub fn load_catalog(path: &Path, grid: &WavelengthGrid) -> Result<Catalog> {
    let m: CatalogManifest = read_json(path)?;
    let base = base_dir(path);
    m.components.iter().map(|p| load_manifest(&base.join(p), grid)).collect::<Result<Vec<_>>>()?.into_iter().collect()
}

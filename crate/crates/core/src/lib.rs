//! Wavelength-resolved Trojan-horse leakage analysis for QKD optical modules.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectrum`]: dB-domain transmittance spectra, resampling, raw-scan
//!   reduction and the CSV formats.
//! - [`components`]: measured and synthetic optical elements.
//! - [`scheme`]: probe paths through a module and their double-pass
//!   composite transmittance.
//! - [`security`]: photon budget and Holevo bound per wavelength.
//! - [`planner`]: countermeasure stack search.

pub mod components;
pub mod error;
pub mod format;
pub mod planner;
pub mod scheme;
pub mod security;
pub mod spectrum;

pub use components::{
    bend_loss, load_catalog, load_component, load_manifest, synth_attenuator, synth_bend_filter, synth_isolator,
    synth_wdm, Band, BendLossParams, Catalog, Component, ComponentKind, ComponentManifest, Leg, PortPair, Provenance,
    SynthModel,
};
pub use error::{Error, Result};
pub use planner::{
    load_countermeasure_catalog, search_min_stack, verify_plan, CountermeasureCatalog, CountermeasureEntry, Plan,
    PlanConstraints, PlanReport, SearchOutcome, SearchResult, SearchStrategy,
};
pub use scheme::{
    apply_countermeasure, build_double_pass, composite_transmittance, load_scheme, ProbePath, Reflection,
    ReflectionPoint, Scheme, SchemeElement, DEFAULT_REF_DB,
};
pub use security::{
    evaluate, holevo_general, holevo_two_state, mean_photon_number, InfoBoundCurve, InfoBoundReport,
    PhotonEnergyMode, ProbeBudget, SecurityThresholds,
};
pub use spectrum::{
    add_db, db_to_linear, linear_to_db, reduce_raw_scan, resample, OutOfRange, RawScan, TransmittanceSpectrum,
    WavelengthGrid,
};

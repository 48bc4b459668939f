//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use tha_core::components::{synth_attenuator, synth_bend_filter, synth_isolator, BendLossParams, Catalog, IsolatorParams};
use tha_core::planner::{CountermeasureCatalog, CountermeasureEntry};
use tha_core::scheme::{build_double_pass, Reflection, ReflectionPoint, Scheme, SchemeElement};
use tha_core::spectrum::{TransmittanceSpectrum, WavelengthGrid};
use tha_core::{Component, ComponentKind, Leg, Provenance};

pub fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

/// A double-pass scheme of `n` distinct rippled two-port elements.
pub fn synthetic_scheme(n: usize, grid: &WavelengthGrid) -> Scheme {
    let mut catalog = Catalog::new();
    let mut outbound = Vec::with_capacity(n);
    for k in 0..n {
        let id = format!("e{k}");
        let phase = k as f64;
        let fwd = TransmittanceSpectrum::from_fn(grid.clone(), |l| -1.0 - 0.5 * ((l / 17.0) + phase).sin().abs())
            .expect("finite");
        let bwd = TransmittanceSpectrum::from_fn(grid.clone(), |l| -1.2 - 0.4 * ((l / 23.0) + phase).cos().abs())
            .expect("finite");
        let spectra = tha_core::components::DirectionalSpectra::new(fwd, bwd).expect("same grid");
        let c = Component::new(
            id.clone(),
            ComponentKind::TwoPort,
            tha_core::components::Spectra::Directional(spectra),
            Provenance::Measured,
        )
        .expect("two-port");
        catalog.insert(c).expect("unique ids");
        outbound.push(SchemeElement::new(id, Leg::Forward));
    }
    let reflection = Reflection::Flat(ReflectionPoint::default());
    let path = build_double_pass(outbound, reflection, &[], &catalog).expect("valid path");
    Scheme::new("synthetic", path, catalog).expect("valid scheme")
}

/// `entries` countermeasures cycling through isolator, attenuator and bend
/// filter variants, each allowed `max_count` times.
pub fn countermeasure_catalog(entries: usize, max_count: u32, grid: &WavelengthGrid) -> CountermeasureCatalog {
    let list: Vec<CountermeasureEntry> = (0..entries)
        .map(|k| {
            let id = format!("cm{k}");
            let c: Component = match k % 3 {
                0 => synth_isolator(
                    &id,
                    IsolatorParams {
                        fwd_loss_db: 0.5 + 0.1 * k as f64,
                        iso_floor_db: 35.0 + k as f64,
                        degradation_rate_db_per_nm: 0.1,
                        band_center_nm: 1550.0,
                    },
                    grid,
                ),
                1 => synth_attenuator(&id, 3.0 + k as f64, grid),
                _ => synth_bend_filter(&id, BendLossParams::radius_12mm(), grid),
            }
            .expect("valid model");
            CountermeasureEntry::new(c, max_count)
        })
        .collect();
    CountermeasureCatalog::new(list).expect("valid catalog")
}

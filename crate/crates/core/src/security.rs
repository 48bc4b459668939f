//! Eavesdropper photon budget and Holevo information bound.
//!
//! The pipeline per wavelength is `T_dB -> mu_p -> chi`: the probe power
//! that survives the composite transmittance is converted into a mean
//! photon number per modulation period, and `chi(mu_p)` bounds what the
//! back-reflected sidebands reveal about the modulator phase.

pub use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::round_sig;
use crate::spectrum::{db_to_linear, TransmittanceSpectrum, WavelengthGrid};

/// Planck constant, J*s (exact SI).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (exact SI).
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
/// Continuous power above which the fiber fuse effect destroys the fiber.
pub const FIBER_FUSE_CAP_W: f64 = 10.0;
/// Reference wavelength of the fixed photon-energy mode.
pub const REFERENCE_WAVELENGTH_NM: f64 = 1550.0;

/// Tolerances for validating Gram matrices and distributions.
const GRAM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotonEnergyMode {
    /// `E = h c / lambda` at each wavelength.
    #[default]
    PerWavelength,
    /// `E = h c / 1550 nm` everywhere.
    #[serde(rename = "fixed_1550")]
    Fixed1550,
}

/// What the eavesdropper can inject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeBudget {
    pub input_power_w: f64,
    /// Fraction of probe power in the phase-carrying sidebands.
    pub sideband_ratio: f64,
    pub rep_rate_hz: f64,
    pub photon_energy_mode: PhotonEnergyMode,
}

impl Default for ProbeBudget {
    fn default() -> Self {
        Self {
            input_power_w: FIBER_FUSE_CAP_W,
            sideband_ratio: 0.1,
            rep_rate_hz: 1e8,
            photon_energy_mode: PhotonEnergyMode::PerWavelength,
        }
    }
}

impl ProbeBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.input_power_w.is_finite() && self.input_power_w > 0.0) {
            return Err(Error::InvalidParameter(format!("input power must be > 0 W (got {})", self.input_power_w)));
        }
        if !(0.0..=1.0).contains(&self.sideband_ratio) {
            return Err(Error::InvalidParameter(format!(
                "sideband ratio must lie in [0, 1] (got {})",
                self.sideband_ratio
            )));
        }
        if !(self.rep_rate_hz.is_finite() && self.rep_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("repetition rate must be > 0 Hz (got {})", self.rep_rate_hz)));
        }
        Ok(())
    }

    /// Power beyond what a fiber survives; the analysis still runs but the
    /// report flags it.
    pub fn exceeds_fiber_fuse_cap(&self) -> bool {
        self.input_power_w > FIBER_FUSE_CAP_W
    }

    pub fn photon_energy_j(&self, lambda_nm: f64) -> f64 {
        let l = match self.photon_energy_mode {
            PhotonEnergyMode::PerWavelength => lambda_nm,
            PhotonEnergyMode::Fixed1550 => REFERENCE_WAVELENGTH_NM,
        };
        PLANCK_J_S * SPEED_OF_LIGHT_M_S / (l * 1e-9)
    }

    /// `log10(P / (E_ph f_rep))`: with `M = 1` the mean photon number is
    /// `10^(T/10 + exponent)`.
    pub fn photon_exponent(&self, lambda_nm: f64) -> f64 {
        (self.input_power_w / (self.photon_energy_j(lambda_nm) * self.rep_rate_hz)).log10()
    }
}

/// Mean photon number of the returning probe per modulation period:
/// `M P 10^(T/10) / (E_ph f_rep)`.
pub fn mean_photon_number(t_db: f64, lambda_nm: f64, budget: &ProbeBudget) -> f64 {
    budget.sideband_ratio * budget.input_power_w * db_to_linear(t_db)
        / (budget.photon_energy_j(lambda_nm) * budget.rep_rate_hz)
}

/// `h(x) = -x log2 x - (1-x) log2 (1-x)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let ln2 = std::f64::consts::LN_2;
    -(x * x.ln() + (1.0 - x) * (-x).ln_1p()) / ln2
}

/// Holevo quantity of two equiprobable pure states with overlap `e^(-2 mu)`:
/// `h((1 - e^(-2 mu)) / 2)`.
pub fn holevo_two_state(mu: f64) -> Result<f64> {
    if mu.is_nan() || mu < 0.0 {
        return Err(Error::InvalidParameter(format!("mean photon number must be >= 0 (got {mu})")));
    }
    // With d = e^(-2 mu): h((1 - d)/2) = 1 - f(d) / (2 ln 2), where
    // f(d) = (1 - d) ln(1 - d) + (1 + d) ln(1 + d) = sum_k d^(2k) / (k (2k - 1)).
    // The series avoids cancellation as d -> 0 and keeps the result monotone.
    let d = (-2.0 * mu).exp();
    if d >= 0.5 {
        let x = -(-2.0 * mu).exp_m1() / 2.0;
        return Ok(binary_entropy(x).clamp(0.0, 1.0));
    }
    let d2 = d * d;
    let mut term = d2;
    let mut f = 0.0;
    for k in 1..=60u32 {
        let k = f64::from(k);
        f += term / (k * (2.0 * k - 1.0));
        term *= d2;
        if term < 1e-18 * f {
            break;
        }
    }
    Ok((1.0 - f / (2.0 * std::f64::consts::LN_2)).clamp(0.0, 1.0))
}

/// Gram matrix of two unit states with the given overlap.
pub fn two_state_gram(overlap: Complex<f64>) -> DMatrix<Complex<f64>> {
    let one = Complex::new(1.0, 0.0);
    DMatrix::from_row_slice(2, 2, &[one, overlap, overlap.conj(), one])
}

/// Holevo quantity of a pure-state ensemble given its Gram matrix
/// `G_ij = <psi_i|psi_j>` and prior `probs`.
///
/// For pure states the average-state entropy is the whole bound, and the
/// nonzero spectrum of `sum_k p_k |psi_k><psi_k|` equals that of
/// `sqrt(P) G sqrt(P)`.
pub fn holevo_general(gram: &DMatrix<Complex<f64>>, probs: &[f64]) -> Result<f64> {
    let n = probs.len();
    if n == 0 {
        return Err(Error::InvalidProbabilities("empty ensemble".into()));
    }
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::InvalidGram(format!(
            "{}x{} matrix for {n} states",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::InvalidProbabilities(format!("negative or non-finite entry in {probs:?}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > GRAM_TOL {
        return Err(Error::InvalidProbabilities(format!("sums to {total}")));
    }
    for i in 0..n {
        if (gram[(i, i)] - Complex::new(1.0, 0.0)).norm() > GRAM_TOL {
            return Err(Error::InvalidGram(format!("diagonal entry {i} is {}", gram[(i, i)])));
        }
        for j in 0..i {
            if !gram[(i, j)].re.is_finite() || !gram[(i, j)].im.is_finite() {
                return Err(Error::InvalidGram(format!("entry ({i}, {j}) is not finite")));
            }
            if (gram[(i, j)] - gram[(j, i)].conj()).norm() > GRAM_TOL {
                return Err(Error::InvalidGram(format!("not Hermitian at ({i}, {j})")));
            }
        }
    }
    let gram_eigs = gram.clone().symmetric_eigenvalues();
    if let Some(e) = gram_eigs.iter().find(|&&e| e < -GRAM_TOL) {
        return Err(Error::InvalidGram(format!("not positive semidefinite (eigenvalue {e})")));
    }
    let sqrt_p: Vec<f64> = probs.iter().map(|p| p.sqrt()).collect();
    let weighted = DMatrix::from_fn(n, n, |i, j| gram[(i, j)] * (sqrt_p[i] * sqrt_p[j]));
    let entropy: f64 = weighted
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum();
    Ok(entropy.max(0.0))
}

/// Pass/fail levels for the information bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecurityThresholds {
    pub chi_max: f64,
    /// Composite transmittance regarded as safely closed.
    pub t_secure_db: f64,
}

impl Default for SecurityThresholds {
    fn default() -> Self {
        Self {
            chi_max: 1e-2,
            t_secure_db: -140.0,
        }
    }
}

impl SecurityThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi_max > 0.0 && self.chi_max < 1.0) {
            return Err(Error::InvalidParameter(format!("chi_max must lie in (0, 1) (got {})", self.chi_max)));
        }
        if !self.t_secure_db.is_finite() {
            return Err(Error::InvalidParameter("t_secure_db must be finite".into()));
        }
        Ok(())
    }
}

/// Closed wavelength interval on the analysis grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo_nm: f64,
    pub hi_nm: f64,
}

/// Maximal runs of consecutive `true` flags, as grid intervals.
pub fn runs(grid: &WavelengthGrid, flags: &[bool]) -> Vec<Interval> {
    let pts = grid.points();
    let mut out = Vec::new();
    let mut start = None;
    for (k, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push(Interval {
                    lo_nm: pts[s],
                    hi_nm: pts[k - 1],
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Interval {
            lo_nm: pts[s],
            hi_nm: pts[flags.len() - 1],
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoBoundCurve {
    grid: WavelengthGrid,
    t_db: Vec<f64>,
    mu_p: Vec<f64>,
    chi: Vec<f64>,
    loopholes: Vec<Interval>,
}

/// One evaluated wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub wavelength_nm: f64,
    pub t_db: f64,
    pub mu_p: f64,
    pub chi: f64,
}

impl InfoBoundCurve {
    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn t_db(&self) -> &[f64] {
        &self.t_db
    }

    pub fn mu_p(&self) -> &[f64] {
        &self.mu_p
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn loopholes(&self) -> &[Interval] {
        &self.loopholes
    }

    pub fn point(&self, k: usize) -> CurvePoint {
        CurvePoint {
            wavelength_nm: self.grid.points()[k],
            t_db: self.t_db[k],
            mu_p: self.mu_p[k],
            chi: self.chi[k],
        }
    }

    /// Index with the most information leaked (largest `mu_p`; first on ties).
    pub fn worst_index(&self) -> usize {
        let mut best = 0;
        for k in 1..self.mu_p.len() {
            if self.mu_p[k] > self.mu_p[best] {
                best = k;
            }
        }
        best
    }

    pub fn worst(&self) -> CurvePoint {
        self.point(self.worst_index())
    }

    pub fn worst_chi(&self) -> f64 {
        self.chi[self.worst_index()]
    }

    pub fn is_secure(&self) -> bool {
        self.loopholes.is_empty()
    }

    /// `wavelength_nm,t_db,mu_p,chi` with six significant digits.
    pub fn to_csv(&self) -> String {
        use crate::format::format_sig;
        let mut out = String::from("wavelength_nm,t_db,mu_p,chi\n");
        for k in 0..self.t_db.len() {
            let p = self.point(k);
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_sig(p.wavelength_nm),
                format_sig(p.t_db),
                format_sig(p.mu_p),
                format_sig(p.chi)
            ));
        }
        out
    }
}

/// Runs `T -> mu_p -> chi` over every grid point and collects the intervals
/// where `chi > chi_max`.
pub fn evaluate(
    composite: &TransmittanceSpectrum,
    budget: &ProbeBudget,
    thresholds: &SecurityThresholds,
) -> Result<InfoBoundCurve> {
    budget.validate()?;
    thresholds.validate()?;
    let grid = composite.grid().clone();
    let (mu_p, chi): (Vec<f64>, Vec<f64>) = grid
        .points()
        .par_iter()
        .zip(composite.values_db().par_iter())
        .map(|(&l, &t)| {
            let mu = mean_photon_number(t, l, budget);
            // mu is >= 0 by construction, so this cannot fail
            (mu, holevo_two_state(mu).unwrap_or(1.0))
        })
        .unzip();
    let flags: Vec<bool> = chi.iter().map(|&c| c > thresholds.chi_max).collect();
    let loopholes = runs(&grid, &flags);
    Ok(InfoBoundCurve {
        grid,
        t_db: composite.values_db().to_vec(),
        mu_p,
        chi,
        loopholes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub wavelength_nm: f64,
    pub t_db: f64,
}

/// JSON summary of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoBoundReport {
    pub scheme: String,
    pub secure: bool,
    pub loopholes: Vec<Interval>,
    pub worst: CurvePoint,
    pub t_max: SpectralPoint,
    pub t_min: SpectralPoint,
    /// `t_secure_db - max(T)`; negative when some wavelength is above it.
    pub t_secure_margin_db: f64,
    pub budget: ProbeBudget,
    pub fiber_fuse_cap_exceeded: bool,
    pub thresholds: SecurityThresholds,
    pub grid_lo_nm: f64,
    pub grid_hi_nm: f64,
    pub grid_points: usize,
}

impl InfoBoundReport {
    pub fn new(scheme: &str, curve: &InfoBoundCurve, budget: &ProbeBudget, thresholds: &SecurityThresholds) -> Self {
        let r = round_sig;
        let pts = curve.grid.points();
        let (imax, imin) = argmax_argmin(&curve.t_db);
        let w = curve.worst();
        Self {
            scheme: scheme.to_string(),
            secure: curve.is_secure(),
            loopholes: curve
                .loopholes
                .iter()
                .map(|i| Interval {
                    lo_nm: r(i.lo_nm),
                    hi_nm: r(i.hi_nm),
                })
                .collect(),
            worst: CurvePoint {
                wavelength_nm: r(w.wavelength_nm),
                t_db: r(w.t_db),
                mu_p: r(w.mu_p),
                chi: r(w.chi),
            },
            t_max: SpectralPoint {
                wavelength_nm: r(pts[imax]),
                t_db: r(curve.t_db[imax]),
            },
            t_min: SpectralPoint {
                wavelength_nm: r(pts[imin]),
                t_db: r(curve.t_db[imin]),
            },
            t_secure_margin_db: r(thresholds.t_secure_db - curve.t_db[imax]),
            budget: *budget,
            fiber_fuse_cap_exceeded: budget.exceeds_fiber_fuse_cap(),
            thresholds: *thresholds,
            grid_lo_nm: r(curve.grid.lo()),
            grid_hi_nm: r(curve.grid.hi()),
            grid_points: curve.grid.len(),
        }
    }
}

fn argmax_argmin(v: &[f64]) -> (usize, usize) {
    let (mut hi, mut lo) = (0, 0);
    for k in 1..v.len() {
        if v[k] > v[hi] {
            hi = k;
        }
        if v[k] < v[lo] {
            lo = k;
        }
    }
    (hi, lo)
}

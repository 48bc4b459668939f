//! Wavelength-resolved transmittance in the dB domain.
//!
//! Every spectrum lives on a [`WavelengthGrid`] and stores dB values; linear
//! ratios only appear at the photon-budget boundary ([`db_to_linear`]).
//! Cascaded elements compose by [`add_db`].

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::format_sig;

/// Lower edge of the default analysis band, nm.
pub const BAND_LO_NM: f64 = 1500.0;
/// Upper edge of the default analysis band, nm.
pub const BAND_HI_NM: f64 = 2100.0;

/// Strictly increasing, positive wavelengths in nanometers.
#[derive(Debug, Clone, PartialEq)]
pub struct WavelengthGrid {
    points: Vec<f64>,
}

impl WavelengthGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        for (i, &p) in points.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidGrid(format!("point {i} = {p} nm is not finite and > 0")));
            }
            if i > 0 && p <= points[i - 1] {
                return Err(Error::InvalidGrid(format!(
                    "points must be strictly increasing ({} nm followed by {p} nm)",
                    points[i - 1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// Uniform grid from `lo` to `hi` inclusive. `hi - lo` must be a whole
    /// number of steps (within 1e-9 of a step).
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) || !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::InvalidGrid(format!("bad uniform grid {lo}:{hi}:{step}")));
        }
        let steps = (hi - lo) / step;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "span {lo}..{hi} is not a multiple of step {step}"
            )));
        }
        let n = n as usize;
        Self::new((0..=n).map(|i| lo + i as f64 * step).collect())
    }

    /// 1500 to 2100 nm at 1 nm pitch (601 points).
    pub fn analysis_band() -> Self {
        Self::uniform(BAND_LO_NM, BAND_HI_NM, 1.0).expect("static grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn contains(&self, lambda_nm: f64) -> bool {
        lambda_nm >= self.lo() && lambda_nm <= self.hi()
    }
}

/// Transmittance in dB aligned to a grid, with optional per-point
/// half-width uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceSpectrum {
    grid: WavelengthGrid,
    values_db: Vec<f64>,
    uncertainty_db: Option<Vec<f64>>,
}

impl TransmittanceSpectrum {
    pub fn new(grid: WavelengthGrid, values_db: Vec<f64>) -> Result<Self> {
        check_aligned(&grid, &values_db, "values_db")?;
        Ok(Self {
            grid,
            values_db,
            uncertainty_db: None,
        })
    }

    pub fn with_uncertainty(mut self, uncertainty_db: Vec<f64>) -> Result<Self> {
        check_aligned(&self.grid, &uncertainty_db, "uncertainty_db")?;
        if let Some(i) = uncertainty_db.iter().position(|&u| u < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative uncertainty {} dB at {} nm",
                uncertainty_db[i], self.grid.points[i]
            )));
        }
        self.uncertainty_db = Some(uncertainty_db);
        Ok(self)
    }

    pub fn flat(grid: WavelengthGrid, value_db: f64) -> Result<Self> {
        let values = vec![value_db; grid.len()];
        Self::new(grid, values)
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: WavelengthGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points.iter().map(|&l| f(l)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values_db(&self) -> &[f64] {
        &self.values_db
    }

    pub fn uncertainty_db(&self) -> Option<&[f64]> {
        self.uncertainty_db.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_db.is_empty()
    }

    /// Rejects any point above 0 dB.
    pub fn ensure_passive(&self) -> Result<()> {
        match self.values_db.iter().position(|&v| v > 0.0) {
            Some(i) => Err(Error::PositiveTransmittance {
                wavelength_nm: self.grid.points[i],
                value_db: self.values_db[i],
            }),
            None => Ok(()),
        }
    }

    /// Linearly interpolated dB value at a single wavelength.
    pub fn value_at(&self, lambda_nm: f64) -> Result<f64> {
        let (lo, hi) = (self.grid.lo(), self.grid.hi());
        if !self.grid.contains(lambda_nm) {
            return Err(Error::OutOfSpan {
                source_lo: lo,
                source_hi: hi,
                target_lo: lambda_nm,
                target_hi: lambda_nm,
            });
        }
        Ok(interpolate(&self.grid.points, &self.values_db, lambda_nm))
    }

    /// Index and value of the largest transmittance (first on ties).
    pub fn max(&self) -> (usize, f64) {
        extremum(&self.values_db, |a, b| a > b)
    }

    /// Index and value of the smallest transmittance (first on ties).
    pub fn min(&self) -> (usize, f64) {
        extremum(&self.values_db, |a, b| a < b)
    }

    /// Adds a constant dB offset to every point.
    pub fn offset_db(&self, offset: f64) -> Result<Self> {
        let values = self.values_db.iter().map(|v| v + offset).collect();
        let mut out = Self::new(self.grid.clone(), values)?;
        out.uncertainty_db = self.uncertainty_db.clone();
        Ok(out)
    }
}

fn extremum(values: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, best.1) {
            best = (i, v);
        }
    }
    best
}

fn check_aligned(grid: &WavelengthGrid, values: &[f64], what: &'static str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            what,
            expected: grid.len(),
            got: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what,
            wavelength_nm: grid.points[i],
        });
    }
    Ok(())
}

/// Linear interpolation; `x` must lie within `xs[0]..=xs[last]`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&p| p < x);
    if i < xs.len() && xs[i] == x {
        return ys[i];
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// What [`resample`] does with target points outside the source span.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum OutOfRange {
    #[default]
    Error,
    ClampToEdge,
    Fill(f64),
}

/// Linear interpolation in dB onto `target`.
///
/// Points that coincide with source points are copied bit-for-bit.
/// Uncertainty is interpolated the same way; filled points get zero
/// uncertainty.
pub fn resample(
    s: &TransmittanceSpectrum,
    target: &WavelengthGrid,
    policy: OutOfRange,
) -> Result<TransmittanceSpectrum> {
    if s.grid == *target {
        return Ok(s.clone());
    }
    let src = s.grid.points();
    let (src_lo, src_hi) = (s.grid.lo(), s.grid.hi());
    if policy == OutOfRange::Error && (target.lo() < src_lo || target.hi() > src_hi) {
        return Err(Error::OutOfSpan {
            source_lo: src_lo,
            source_hi: src_hi,
            target_lo: target.lo(),
            target_hi: target.hi(),
        });
    }
    let sample = |ys: &[f64], x: f64, fill: Option<f64>| -> f64 {
        if x < src_lo {
            fill.unwrap_or(ys[0])
        } else if x > src_hi {
            fill.unwrap_or(ys[ys.len() - 1])
        } else {
            interpolate(src, ys, x)
        }
    };
    let (fill_value, fill_unc) = match policy {
        OutOfRange::Fill(v) => (Some(v), Some(0.0)),
        _ => (None, None),
    };
    let values = target
        .points()
        .iter()
        .map(|&x| sample(&s.values_db, x, fill_value))
        .collect();
    let mut out = TransmittanceSpectrum::new(target.clone(), values)?;
    if let Some(u) = &s.uncertainty_db {
        out.uncertainty_db = Some(target.points().iter().map(|&x| sample(u, x, fill_unc)).collect());
    }
    Ok(out)
}

/// Pointwise dB sum of two cascaded elements on the same grid.
///
/// Uncertainties add in quadrature when both sides carry one; otherwise the
/// result has none.
pub fn add_db(a: &TransmittanceSpectrum, b: &TransmittanceSpectrum) -> Result<TransmittanceSpectrum> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let values = a.values_db.iter().zip(&b.values_db).map(|(x, y)| x + y).collect();
    let mut out = TransmittanceSpectrum::new(a.grid.clone(), values)?;
    if let (Some(ua), Some(ub)) = (&a.uncertainty_db, &b.uncertainty_db) {
        out.uncertainty_db = Some(ua.iter().zip(ub).map(|(x, y)| x.hypot(*y)).collect());
    }
    Ok(out)
}

/// Correctly rounded sum of `terms` (Shewchuk's algorithm, as in Python's
/// `math.fsum`). The result does not depend on the order of the terms.
pub fn exact_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in terms {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // round-half-even correction when the remaining partials push past a tie
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Pointwise dB sum of any number of aligned spectra plus a constant offset,
/// rounded once per point so the order of `parts` never matters.
///
/// The result carries an uncertainty only when every part does (the offset
/// counts as exact).
pub fn sum_db(parts: &[&TransmittanceSpectrum], offset_db: f64, grid: &WavelengthGrid) -> Result<TransmittanceSpectrum> {
    if parts.iter().any(|p| p.grid != *grid) {
        return Err(Error::GridMismatch);
    }
    let values = (0..grid.len())
        .map(|k| exact_sum(parts.iter().map(|p| p.values_db[k]).chain(std::iter::once(offset_db))))
        .collect();
    let mut out = TransmittanceSpectrum::new(grid.clone(), values)?;
    if !parts.is_empty() && parts.iter().all(|p| p.uncertainty_db.is_some()) {
        out.uncertainty_db = Some(
            (0..grid.len())
                .map(|k| exact_sum(parts.iter().map(|p| p.uncertainty_db.as_ref().unwrap()[k].powi(2))).sqrt())
                .collect(),
        );
    }
    Ok(out)
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> Result<f64> {
    if ratio > 0.0 {
        Ok(10.0 * ratio.log10())
    } else {
        Err(Error::NonPositiveRatio(ratio))
    }
}

/// Intensities recorded with and without the element under test, plus the
/// attenuating filter transmission used for each point.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScan {
    grid: WavelengthGrid,
    i_ref: Vec<f64>,
    i_mes: Vec<f64>,
    t_f: Vec<f64>,
}

impl RawScan {
    pub fn new(grid: WavelengthGrid, i_ref: Vec<f64>, i_mes: Vec<f64>, t_f: Vec<f64>) -> Result<Self> {
        for (what, v) in [("i_ref", &i_ref), ("i_mes", &i_mes), ("t_f", &t_f)] {
            check_aligned(&grid, v, what)?;
        }
        for (k, &l) in grid.points().iter().enumerate() {
            for (what, v) in [("i_ref", &i_ref), ("i_mes", &i_mes)] {
                if v[k] <= 0.0 {
                    return Err(Error::NonPositive {
                        what,
                        wavelength_nm: l,
                        value: v[k],
                    });
                }
            }
            if !(t_f[k] > 0.0 && t_f[k] <= 1.0) {
                return Err(Error::FilterOutOfRange {
                    wavelength_nm: l,
                    value: t_f[k],
                });
            }
        }
        Ok(Self { grid, i_ref, i_mes, t_f })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }
}

/// `T_dB = -10 log10(I_ref * T_f / I_mes)`, point by point, unclamped.
///
/// With `T_f < 1` and equal intensities the result is positive; callers
/// whose filter sat in the reference arm must account for that themselves.
pub fn reduce_raw_scan(raw: &RawScan) -> Result<TransmittanceSpectrum> {
    let values = raw
        .i_ref
        .iter()
        .zip(&raw.i_mes)
        .zip(&raw.t_f)
        .map(|((r, m), f)| -10.0 * (r * f / m).log10())
        .collect();
    TransmittanceSpectrum::new(raw.grid.clone(), values)
}

// --- CSV -------------------------------------------------------------------

pub const SPECTRUM_HEADER: [&str; 2] = ["wavelength_nm", "transmittance_db"];
pub const UNCERTAINTY_COLUMN: &str = "uncertainty_db";
pub const RAW_SCAN_HEADER: [&str; 4] = ["wavelength_nm", "i_ref", "i_mes", "t_f"];

struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn read_table<R: Read>(reader: R, origin: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let header = rdr
        .headers()
        .map_err(|e| parse_err(csv_line(&e), e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(csv_line(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("'{f}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, vals));
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    Ok(Table { header, rows })
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

fn table_grid(t: &Table, origin: &Path) -> Result<WavelengthGrid> {
    let points: Vec<f64> = t.rows.iter().map(|(_, r)| r[0]).collect();
    WavelengthGrid::new(points).map_err(|e| {
        // point at the offending row when the grid is not increasing
        let line = t
            .rows
            .windows(2)
            .find(|w| w[1].1[0] <= w[0].1[0])
            .map_or(t.rows[0].0, |w| w[1].0);
        Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg: e.to_string(),
        }
    })
}

/// Parses the spectrum CSV format. Positive dB values are rejected unless
/// `gain_allowed`.
pub fn parse_spectrum_csv<R: Read>(reader: R, origin: &Path, gain_allowed: bool) -> Result<TransmittanceSpectrum> {
    let t = read_table(reader, origin)?;
    let with_unc = t.header.len() == 3 && t.header[2] == UNCERTAINTY_COLUMN;
    if t.header[..t.header.len().min(2)] != SPECTRUM_HEADER || !(t.header.len() == 2 || with_unc) {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            msg: format!(
                "expected header '{}[,{UNCERTAINTY_COLUMN}]', found '{}'",
                SPECTRUM_HEADER.join(","),
                t.header.join(",")
            ),
        });
    }
    let grid = table_grid(&t, origin)?;
    let at_line = |k: usize, e: Error| Error::Parse {
        path: origin.to_path_buf(),
        line: t.rows[k].0,
        msg: e.to_string(),
    };
    let values: Vec<f64> = t.rows.iter().map(|(_, r)| r[1]).collect();
    let mut s = TransmittanceSpectrum::new(grid, values).map_err(|e| at_line(0, e))?;
    if with_unc {
        let unc: Vec<f64> = t.rows.iter().map(|(_, r)| r[2]).collect();
        let bad = unc.iter().position(|&u| u < 0.0 || !u.is_finite());
        s = s.with_uncertainty(unc).map_err(|e| at_line(bad.unwrap_or(0), e))?;
    }
    if !gain_allowed {
        if let Some(k) = s.values_db.iter().position(|&v| v > 0.0) {
            return Err(at_line(
                k,
                Error::PositiveTransmittance {
                    wavelength_nm: s.grid.points[k],
                    value_db: s.values_db[k],
                },
            ));
        }
    }
    Ok(s)
}

pub fn read_spectrum_csv(path: &Path, gain_allowed: bool) -> Result<TransmittanceSpectrum> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_spectrum_csv(f, path, gain_allowed)
}

/// Canonical spectrum CSV with six significant digits per number.
pub fn spectrum_to_csv(s: &TransmittanceSpectrum) -> String {
    let mut out = SPECTRUM_HEADER.join(",");
    if s.uncertainty_db.is_some() {
        out.push(',');
        out.push_str(UNCERTAINTY_COLUMN);
    }
    out.push('\n');
    for (k, (&l, &v)) in s.grid.points.iter().zip(&s.values_db).enumerate() {
        let _ = write!(out, "{},{}", format_sig(l), format_sig(v));
        if let Some(u) = &s.uncertainty_db {
            let _ = write!(out, ",{}", format_sig(u[k]));
        }
        out.push('\n');
    }
    out
}

/// Parses the raw-scan CSV. When `filter_override` is given it replaces the
/// `t_f` column, which may then be omitted.
pub fn parse_raw_scan_csv<R: Read>(reader: R, origin: &Path, filter_override: Option<f64>) -> Result<RawScan> {
    let t = read_table(reader, origin)?;
    let full = t.header == RAW_SCAN_HEADER;
    let without_tf = t.header == RAW_SCAN_HEADER[..3];
    if !(full || (without_tf && filter_override.is_some())) {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            msg: format!(
                "expected header '{}', found '{}'",
                RAW_SCAN_HEADER.join(","),
                t.header.join(",")
            ),
        });
    }
    let grid = table_grid(&t, origin)?;
    let col = |c: usize| t.rows.iter().map(|(_, r)| r[c]).collect::<Vec<_>>();
    let t_f = match filter_override {
        Some(f) => vec![f; t.rows.len()],
        None => col(3),
    };
    RawScan::new(grid, col(1), col(2), t_f).map_err(|e| {
        let wl = match &e {
            Error::NonPositive { wavelength_nm, .. } | Error::FilterOutOfRange { wavelength_nm, .. } => {
                Some(*wavelength_nm)
            }
            _ => None,
        };
        let line = wl
            .and_then(|w| t.rows.iter().find(|(_, r)| r[0] == w))
            .map_or(0, |(l, _)| *l);
        Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg: e.to_string(),
        }
    })
}

pub fn read_raw_scan_csv(path: &Path, filter_override: Option<f64>) -> Result<RawScan> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_raw_scan_csv(f, path, filter_override)
}

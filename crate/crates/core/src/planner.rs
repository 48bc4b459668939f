//! Countermeasure stack search.
//!
//! Given a scheme and a catalog of passive two-port countermeasures, find
//! the smallest stack (fewest picks, then lowest loss at the operating
//! wavelength, then lexicographic ids) whose insertion at the channel end
//! pushes the information bound below `chi_max` everywhere on the grid.
//!
//! Small catalogs are enumerated exhaustively; larger ones fall back to a
//! greedy heuristic with no optimality guarantee.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::{base_dir, load_manifest, read_json, Component, ComponentKind, Leg};
use crate::error::{Error, Result};
use crate::format::round_sig;
use crate::scheme::{apply_countermeasure, composite_transmittance, Scheme, CHANNEL_END};
use crate::security::{evaluate, holevo_two_state, mean_photon_number, CurvePoint, ProbeBudget, SecurityThresholds};
use crate::spectrum::{resample, OutOfRange, WavelengthGrid};

/// Enumerate every count vector when there are at most this many.
pub const EXHAUSTIVE_LIMIT: u64 = 10_000;

/// Slack on the operating-loss budget comparison.
const LOSS_EPS_DB: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CountermeasureEntry {
    pub component: Component,
    pub max_count: u32,
    /// Single-pass forward loss at the operating wavelength, in dB (>= 0).
    /// Read off the forward leg when absent.
    pub operating_loss_db: Option<f64>,
}

impl CountermeasureEntry {
    pub fn new(component: Component, max_count: u32) -> Self {
        Self {
            component,
            max_count,
            operating_loss_db: None,
        }
    }

    pub fn id(&self) -> &str {
        self.component.id()
    }

    pub fn operating_loss(&self, lambda_op_nm: f64) -> Result<f64> {
        match self.operating_loss_db {
            Some(l) => Ok(l),
            None => {
                let t = self
                    .component
                    .leg(Leg::Forward)?
                    .value_at(lambda_op_nm)
                    .map_err(|e| Error::in_component(self.id(), e))?;
                Ok(-t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountermeasureCatalog {
    entries: Vec<CountermeasureEntry>,
}

impl CountermeasureCatalog {
    pub fn new(entries: Vec<CountermeasureEntry>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &entries {
            if e.component.kind() != ComponentKind::TwoPort {
                return Err(Error::KindMismatch {
                    component: e.id().to_string(),
                    msg: "countermeasures must be two-port".into(),
                });
            }
            if !seen.insert(e.id().to_string()) {
                return Err(Error::DuplicateComponent(e.id().to_string()));
            }
            if let Some(l) = e.operating_loss_db {
                if !l.is_finite() {
                    return Err(Error::InvalidParameter(format!("{}: operating loss must be finite", e.id())));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CountermeasureEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn find(&self, id: &str) -> Result<&CountermeasureEntry> {
        self.entries
            .iter()
            .find(|e| e.id() == id)
            .ok_or_else(|| Error::UnknownComponent(id.to_string()))
    }

    /// Number of count vectors the exhaustive search would visit.
    pub fn search_space(&self) -> u64 {
        self.entries
            .iter()
            .map(|e| e.max_count as u64 + 1)
            .try_fold(1u64, |acc, n| acc.checked_mul(n))
            .unwrap_or(u64::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConstraints {
    pub chi_max: f64,
    pub lambda_op_nm: f64,
    /// Allowed forward single-pass loss at `lambda_op_nm`.
    pub op_loss_budget_db: f64,
}

impl Default for PlanConstraints {
    fn default() -> Self {
        Self {
            chi_max: 1e-2,
            lambda_op_nm: 1550.0,
            op_loss_budget_db: 6.0,
        }
    }
}

impl PlanConstraints {
    pub fn validate(&self) -> Result<()> {
        if self.op_loss_budget_db.is_nan() || self.op_loss_budget_db < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "operating loss budget must be >= 0 dB (got {})",
                self.op_loss_budget_db
            )));
        }
        self.thresholds().validate()
    }

    fn thresholds(&self) -> SecurityThresholds {
        SecurityThresholds {
            chi_max: self.chi_max,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Component id -> count; zero counts are omitted.
    pub picks: BTreeMap<String, u32>,
    #[serde(default)]
    pub achieved_worst_chi: f64,
    #[serde(default)]
    pub achieved_operating_loss_db: f64,
}

impl Plan {
    pub fn from_picks(picks: impl IntoIterator<Item = (String, u32)>) -> Self {
        Self {
            picks: picks.into_iter().filter(|(_, n)| *n > 0).collect(),
            achieved_worst_chi: f64::NAN,
            achieved_operating_loss_db: f64::NAN,
        }
    }

    pub fn total_count(&self) -> u32 {
        self.picks.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub pass: bool,
    pub chi_pass: bool,
    pub worst: CurvePoint,
    pub loopholes: usize,
    pub op_loss_pass: bool,
    pub operating_loss_db: f64,
    pub op_loss_budget_db: f64,
    pub counts_pass: bool,
}

/// Inserts every pick at the channel end of `scheme` and evaluates the
/// result against `constraints`.
pub fn verify_plan(
    plan: &Plan,
    catalog: &CountermeasureCatalog,
    scheme: &Scheme,
    budget: &ProbeBudget,
    constraints: &PlanConstraints,
    grid: &WavelengthGrid,
) -> Result<PlanReport> {
    constraints.validate()?;
    let mut protected = scheme.clone();
    let mut op_loss = 0.0;
    let mut counts_pass = true;
    for (id, &n) in &plan.picks {
        let entry = catalog.find(id)?;
        counts_pass &= n <= entry.max_count;
        op_loss += n as f64 * entry.operating_loss(constraints.lambda_op_nm)?;
        for _ in 0..n {
            protected = apply_countermeasure(&protected, &entry.component, CHANNEL_END)?;
        }
    }
    let composite = composite_transmittance(&protected, grid)?;
    let curve = evaluate(&composite, budget, &constraints.thresholds())?;
    let chi_pass = curve.is_secure();
    let op_loss_pass = op_loss <= constraints.op_loss_budget_db + LOSS_EPS_DB;
    let w = curve.worst();
    Ok(PlanReport {
        pass: chi_pass && op_loss_pass && counts_pass,
        chi_pass,
        worst: CurvePoint {
            wavelength_nm: round_sig(w.wavelength_nm),
            t_db: round_sig(w.t_db),
            mu_p: round_sig(w.mu_p),
            chi: round_sig(w.chi),
        },
        loopholes: curve.loopholes().len(),
        op_loss_pass,
        operating_loss_db: round_sig(op_loss),
        op_loss_budget_db: constraints.op_loss_budget_db,
        counts_pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SearchOutcome {
    Feasible { plan: Plan },
    /// No plan meets the constraints; `best` has the lowest worst-case chi
    /// among plans within the loss budget.
    NoFeasiblePlan { best: Plan },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub strategy: SearchStrategy,
    pub plans_evaluated: u64,
    #[serde(flatten)]
    pub outcome: SearchOutcome,
}

impl SearchResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.outcome, SearchOutcome::Feasible { .. })
    }

    pub fn plan(&self) -> &Plan {
        match &self.outcome {
            SearchOutcome::Feasible { plan } => plan,
            SearchOutcome::NoFeasiblePlan { best } => best,
        }
    }
}

/// Precomputed double-pass contributions, so candidate plans cost one
/// vector sum each instead of a full scheme rebuild.
struct Evaluator<'a> {
    grid: &'a WavelengthGrid,
    base: Vec<f64>,
    /// forward + backward leg of each entry, on the grid
    deltas: Vec<Vec<f64>>,
    op_losses: Vec<f64>,
    ids: Vec<&'a str>,
    max_counts: Vec<u32>,
    budget: &'a ProbeBudget,
    constraints: &'a PlanConstraints,
}

#[derive(Debug, Clone)]
struct Candidate {
    counts: Vec<u32>,
    total: u32,
    op_loss: f64,
    worst_chi: f64,
    sum_chi: f64,
    max_mu: f64,
}

impl<'a> Evaluator<'a> {
    fn new(
        catalog: &'a CountermeasureCatalog,
        scheme: &Scheme,
        budget: &'a ProbeBudget,
        constraints: &'a PlanConstraints,
        grid: &'a WavelengthGrid,
    ) -> Result<Self> {
        let base = composite_transmittance(scheme, grid)?.values_db().to_vec();
        let mut deltas = Vec::new();
        let mut op_losses = Vec::new();
        for e in catalog.entries() {
            let on_grid = |leg| -> Result<Vec<f64>> {
                let s = e.component.leg(leg)?;
                Ok(resample(s, grid, OutOfRange::Error)
                    .map_err(|err| Error::in_component(e.id(), err))?
                    .values_db()
                    .to_vec())
            };
            let f = on_grid(Leg::Forward)?;
            let b = on_grid(Leg::Backward)?;
            deltas.push(f.iter().zip(&b).map(|(x, y)| x + y).collect());
            op_losses.push(e.operating_loss(constraints.lambda_op_nm)?);
        }
        Ok(Self {
            grid,
            base,
            deltas,
            op_losses,
            ids: catalog.entries().iter().map(|e| e.id()).collect(),
            max_counts: catalog.entries().iter().map(|e| e.max_count).collect(),
            budget,
            constraints,
        })
    }

    fn assess(&self, counts: &[u32]) -> Candidate {
        let pts = self.grid.points();
        let (mut worst_chi, mut sum_chi, mut max_mu) = (0.0f64, 0.0, 0.0f64);
        for k in 0..self.base.len() {
            let mut t = self.base[k];
            for (d, &c) in self.deltas.iter().zip(counts) {
                t += c as f64 * d[k];
            }
            let mu = mean_photon_number(t, pts[k], self.budget);
            let chi = holevo_two_state(mu).unwrap_or(1.0);
            worst_chi = worst_chi.max(chi);
            max_mu = max_mu.max(mu);
            sum_chi += chi;
        }
        Candidate {
            counts: counts.to_vec(),
            total: counts.iter().sum(),
            op_loss: counts.iter().zip(&self.op_losses).map(|(&c, l)| c as f64 * l).sum(),
            worst_chi,
            sum_chi,
            max_mu,
        }
    }

    fn within_budget(&self, c: &Candidate) -> bool {
        c.op_loss <= self.constraints.op_loss_budget_db + LOSS_EPS_DB
    }

    fn feasible(&self, c: &Candidate) -> bool {
        self.within_budget(c) && c.worst_chi <= self.constraints.chi_max
    }

    /// Picks expanded into a sorted id list, for lexicographic tie-breaks.
    fn expanded(&self, counts: &[u32]) -> Vec<&str> {
        let mut v: Vec<&str> = counts
            .iter()
            .zip(&self.ids)
            .flat_map(|(&c, id)| std::iter::repeat_n(*id, c as usize))
            .collect();
        v.sort_unstable();
        v
    }

    /// Minimal plan order: fewest picks, lowest operating loss, then ids.
    fn cmp_minimal(&self, a: &Candidate, b: &Candidate) -> Ordering {
        a.total
            .cmp(&b.total)
            .then(a.op_loss.total_cmp(&b.op_loss))
            .then_with(|| self.expanded(&a.counts).cmp(&self.expanded(&b.counts)))
    }

    /// Best-effort order for infeasible searches: lowest leakage first.
    fn cmp_leakage(&self, a: &Candidate, b: &Candidate) -> Ordering {
        a.worst_chi
            .total_cmp(&b.worst_chi)
            .then(a.max_mu.total_cmp(&b.max_mu))
            .then_with(|| self.cmp_minimal(a, b))
    }

    fn plan(&self, c: &Candidate) -> Plan {
        Plan {
            picks: self
                .ids
                .iter()
                .zip(&c.counts)
                .filter(|(_, &n)| n > 0)
                .map(|(id, &n)| (id.to_string(), n))
                .collect(),
            achieved_worst_chi: round_sig(c.worst_chi),
            achieved_operating_loss_db: round_sig(c.op_loss),
        }
    }

    fn counts_for(&self, mut index: u64) -> Vec<u32> {
        self.max_counts
            .iter()
            .map(|&m| {
                let radix = m as u64 + 1;
                let c = (index % radix) as u32;
                index /= radix;
                c
            })
            .collect()
    }

    fn exhaustive(&self, space: u64) -> SearchResult {
        let candidates: Vec<Candidate> = (0..space)
            .into_par_iter()
            .map(|i| self.assess(&self.counts_for(i)))
            .filter(|c| self.within_budget(c))
            .collect();
        let feasible = candidates
            .iter()
            .filter(|c| self.feasible(c))
            .min_by(|a, b| self.cmp_minimal(a, b));
        let outcome = match feasible {
            Some(c) => SearchOutcome::Feasible { plan: self.plan(c) },
            None => {
                let best = candidates
                    .iter()
                    .min_by(|a, b| self.cmp_leakage(a, b))
                    .expect("the empty plan is always within budget");
                SearchOutcome::NoFeasiblePlan { best: self.plan(best) }
            }
        };
        SearchResult {
            strategy: SearchStrategy::Exhaustive,
            plans_evaluated: space,
            outcome,
        }
    }

    /// Adds, one at a time, the pick that lowers leakage the most, until the
    /// stack is feasible or nothing more fits.
    fn greedy(&self) -> SearchResult {
        let mut current = self.assess(&vec![0; self.ids.len()]);
        let mut evaluated = 1;
        while !self.feasible(&current) {
            let next = (0..self.ids.len())
                .filter(|&i| current.counts[i] < self.max_counts[i])
                .map(|i| {
                    let mut counts = current.counts.clone();
                    counts[i] += 1;
                    self.assess(&counts)
                })
                .filter(|c| self.within_budget(c))
                .inspect(|_| evaluated += 1)
                .min_by(|a, b| {
                    a.worst_chi
                        .total_cmp(&b.worst_chi)
                        .then(a.sum_chi.total_cmp(&b.sum_chi))
                        .then(a.max_mu.total_cmp(&b.max_mu))
                        .then_with(|| self.cmp_minimal(a, b))
                });
            match next {
                Some(c) => current = c,
                None => break,
            }
        }
        let outcome = if self.feasible(&current) {
            SearchOutcome::Feasible {
                plan: self.plan(&current),
            }
        } else {
            SearchOutcome::NoFeasiblePlan {
                best: self.plan(&current),
            }
        };
        SearchResult {
            strategy: SearchStrategy::Greedy,
            plans_evaluated: evaluated,
            outcome,
        }
    }
}

/// Searches for a minimal feasible stack. `strategy = None` picks exhaustive
/// enumeration when the search space is at most [`EXHAUSTIVE_LIMIT`].
pub fn search_min_stack(
    catalog: &CountermeasureCatalog,
    scheme: &Scheme,
    budget: &ProbeBudget,
    constraints: &PlanConstraints,
    grid: &WavelengthGrid,
    strategy: Option<SearchStrategy>,
) -> Result<SearchResult> {
    constraints.validate()?;
    budget.validate()?;
    let ev = Evaluator::new(catalog, scheme, budget, constraints, grid)?;
    let space = catalog.search_space();
    let strategy = strategy.unwrap_or(if space <= EXHAUSTIVE_LIMIT {
        SearchStrategy::Exhaustive
    } else {
        SearchStrategy::Greedy
    });
    Ok(match strategy {
        SearchStrategy::Exhaustive => ev.exhaustive(space),
        SearchStrategy::Greedy => ev.greedy(),
    })
}

// --- manifests -----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntryManifest {
    /// Component manifest, relative to the catalog file.
    pub manifest: PathBuf,
    pub max_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operating_loss_db: Option<f64>,
}

/// `{"entries": [{"manifest": "isolator.json", "max_count": 2}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountermeasureCatalogManifest {
    pub entries: Vec<CatalogEntryManifest>,
}

pub fn load_countermeasure_catalog(path: &Path, grid: &WavelengthGrid) -> Result<CountermeasureCatalog> {
    let m: CountermeasureCatalogManifest = read_json(path)?;
    let base = base_dir(path);
    let entries = m
        .entries
        .iter()
        .map(|e| {
            Ok(CountermeasureEntry {
                component: load_manifest(&base.join(&e.manifest), grid)?,
                max_count: e.max_count,
                operating_loss_db: e.operating_loss_db,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CountermeasureCatalog::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{synth_attenuator, synth_isolator, Catalog, IsolatorParams};
    use crate::scheme::{build_double_pass, Reflection, ReflectionPoint, SchemeElement};
    use proptest::prelude::*;

    fn grid() -> WavelengthGrid {
        WavelengthGrid::uniform(1500.0, 2100.0, 10.0).unwrap()
    }

    /// Flat scheme: one attenuator of `loss` dB each way plus -40 dB reflection.
    fn flat_scheme(loss: f64) -> Scheme {
        let g = grid();
        let cat: Catalog = [synth_attenuator("voa", loss, &g).unwrap()].into_iter().collect::<Result<_>>().unwrap();
        let path = build_double_pass(
            vec![SchemeElement::new("voa", Leg::Forward)],
            Reflection::Flat(ReflectionPoint::new(-40.0).unwrap()),
            &[],
            &cat,
        )
        .unwrap();
        Scheme::new("s", path, cat).unwrap()
    }

    fn iso(id: &str, floor: f64) -> Component {
        synth_isolator(
            id,
            IsolatorParams {
                fwd_loss_db: 1.0,
                iso_floor_db: floor,
                degradation_rate_db_per_nm: 0.0,
                band_center_nm: 1550.0,
            },
            &grid(),
        )
        .unwrap()
    }

    fn catalog(entries: Vec<(Component, u32)>) -> CountermeasureCatalog {
        CountermeasureCatalog::new(entries.into_iter().map(|(c, n)| CountermeasureEntry::new(c, n)).collect()).unwrap()
    }

    #[test]
    fn compliant_scheme_gets_empty_plan() {
        let s = flat_scheme(60.0); // -160 dB composite
        let cat = catalog(vec![(iso("iso", 40.0), 2)]);
        let c = PlanConstraints::default();
        let b = ProbeBudget::default();
        let r = search_min_stack(&cat, &s, &b, &c, &grid(), None).unwrap();
        assert!(r.is_feasible());
        assert!(r.plan().picks.is_empty());
        let report = verify_plan(&Plan::from_picks([]), &cat, &s, &b, &c, &grid()).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn insufficient_catalog_reports_best() {
        let s = flat_scheme(20.0); // -80 dB
        let cat = catalog(vec![(iso("iso", 30.0), 1)]); // -31 dB double pass
        let r = search_min_stack(&cat, &s, &ProbeBudget::default(), &PlanConstraints::default(), &grid(), None).unwrap();
        match &r.outcome {
            SearchOutcome::NoFeasiblePlan { best } => {
                assert_eq!(best.picks.get("iso"), Some(&1));
                assert!(best.achieved_worst_chi > 0.01);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn exhaustive_prefers_fewer_then_cheaper() {
        let s = flat_scheme(20.0); // -80 dB; need another ~60 dB
        let g = grid();
        let cat = catalog(vec![
            (synth_attenuator("att20", 20.0, &g).unwrap(), 2), // -40 each, 20 dB op loss
            (iso("iso", 70.0), 1),                              // -71, 1 dB op loss
            (iso("iso_b", 70.0), 1),
        ]);
        let c = PlanConstraints {
            op_loss_budget_db: 100.0,
            ..Default::default()
        };
        let r = search_min_stack(&cat, &s, &ProbeBudget::default(), &c, &g, Some(SearchStrategy::Exhaustive)).unwrap();
        let plan = r.plan();
        assert!(r.is_feasible());
        assert_eq!(plan.total_count(), 1);
        // iso and iso_b tie on count and loss; lexicographic id wins
        assert_eq!(plan.picks.keys().collect::<Vec<_>>(), vec!["iso"]);
    }

    #[test]
    fn op_loss_budget_excludes_lossy_stacks() {
        let s = flat_scheme(20.0);
        let g = grid();
        let cat = catalog(vec![(synth_attenuator("att40", 40.0, &g).unwrap(), 1)]);
        let tight = PlanConstraints::default();
        let r = search_min_stack(&cat, &s, &ProbeBudget::default(), &tight, &g, None).unwrap();
        assert!(!r.is_feasible());
        let report = verify_plan(&Plan::from_picks([("att40".to_string(), 1)]), &cat, &s, &ProbeBudget::default(), &tight, &g).unwrap();
        assert!(report.chi_pass && !report.op_loss_pass && !report.pass);
        assert_eq!(report.operating_loss_db, 40.0);
    }

    #[test]
    fn verify_rejects_unknown_and_overcount() {
        let s = flat_scheme(20.0);
        let cat = catalog(vec![(iso("iso", 50.0), 1)]);
        let b = ProbeBudget::default();
        let c = PlanConstraints::default();
        let e = verify_plan(&Plan::from_picks([("nope".to_string(), 1)]), &cat, &s, &b, &c, &grid());
        assert!(matches!(e, Err(Error::UnknownComponent(_))));
        let r = verify_plan(&Plan::from_picks([("iso".to_string(), 2)]), &cat, &s, &b, &c, &grid()).unwrap();
        assert!(!r.counts_pass && !r.pass);
    }

    #[test]
    fn catalog_validation() {
        let dup = CountermeasureCatalog::new(vec![
            CountermeasureEntry::new(iso("a", 40.0), 1),
            CountermeasureEntry::new(iso("a", 40.0), 1),
        ]);
        assert!(matches!(dup, Err(Error::DuplicateComponent(_))));
        let cat = catalog(vec![(iso("a", 40.0), 2), (iso("b", 40.0), 4)]);
        assert_eq!(cat.search_space(), 15);
    }

    #[test]
    fn search_result_json_shape() {
        let s = flat_scheme(60.0);
        let cat = catalog(vec![(iso("iso", 40.0), 1)]);
        let r = search_min_stack(&cat, &s, &ProbeBudget::default(), &PlanConstraints::default(), &grid(), None).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["status"], "feasible");
        assert_eq!(v["strategy"], "exhaustive");
        assert!(v["plan"]["picks"].as_object().unwrap().is_empty());
    }
    fn entry_strategy() -> impl Strategy<Value = (bool, f64, f64, u32)> {
        (any::<bool>(), 1.0f64..40.0, 0.0f64..0.1, 0u32..=2)
    }

    fn random_catalog(specs: &[(bool, f64, f64, u32)]) -> CountermeasureCatalog {
        let g = grid();
        catalog(
            specs
                .iter()
                .enumerate()
                .map(|(k, &(is_iso, strength, rate, n))| {
                    let id = format!("c{k}");
                    let c = if is_iso {
                        synth_isolator(
                            &id,
                            IsolatorParams {
                                fwd_loss_db: 0.5,
                                iso_floor_db: strength,
                                degradation_rate_db_per_nm: rate,
                                band_center_nm: 1550.0,
                            },
                            &g,
                        )
                        .unwrap()
                    } else {
                        synth_attenuator(&id, strength / 4.0, &g).unwrap()
                    };
                    (c, n)
                })
                .collect(),
        )
    }

    fn all_plans(cat: &CountermeasureCatalog) -> Vec<Plan> {
        let mut plans = vec![Plan::from_picks([])];
        for e in cat.entries() {
            plans = plans
                .into_iter()
                .flat_map(|p| {
                    (0..=e.max_count).map(move |n| {
                        let mut q = p.clone();
                        if n > 0 {
                            q.picks.insert(e.id().to_string(), n);
                        }
                        q
                    })
                })
                .collect();
        }
        plans
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn supersets_of_passing_plans_pass(
            loss in 5.0f64..60.0,
            specs in prop::collection::vec(entry_strategy(), 1..=3),
            budget_db in 0.0f64..30.0,
        ) {
            let s = flat_scheme(loss);
            let cat = random_catalog(&specs);
            let c = PlanConstraints { op_loss_budget_db: budget_db, ..Default::default() };
            let b = ProbeBudget::default();
            let plans = all_plans(&cat);
            let reports: Vec<PlanReport> = plans.iter().map(|p| verify_plan(p, &cat, &s, &b, &c, &grid()).unwrap()).collect();
            for (p, rp) in plans.iter().zip(&reports) {
                if !rp.chi_pass {
                    continue;
                }
                for (q, rq) in plans.iter().zip(&reports) {
                    let superset = p.picks.iter().all(|(id, n)| q.picks.get(id).is_some_and(|m| m >= n));
                    if superset {
                        prop_assert!(rq.chi_pass, "{p:?} passes but superset {q:?} does not");
                    }
                }
            }
        }

        #[test]
        fn search_output_verifies_and_exhaustive_is_minimal(
            loss in 5.0f64..60.0,
            specs in prop::collection::vec(entry_strategy(), 1..=3),
            budget_db in 0.0f64..30.0,
        ) {
            let s = flat_scheme(loss);
            let cat = random_catalog(&specs);
            let c = PlanConstraints { op_loss_budget_db: budget_db, ..Default::default() };
            let b = ProbeBudget::default();
            let g = grid();
            let oracle = all_plans(&cat)
                .iter()
                .filter(|p| verify_plan(p, &cat, &s, &b, &c, &g).unwrap().pass)
                .map(Plan::total_count)
                .min();
            for strategy in [SearchStrategy::Exhaustive, SearchStrategy::Greedy] {
                let r = search_min_stack(&cat, &s, &b, &c, &g, Some(strategy)).unwrap();
                if r.is_feasible() {
                    prop_assert!(verify_plan(r.plan(), &cat, &s, &b, &c, &g).unwrap().pass);
                }
                if strategy == SearchStrategy::Exhaustive {
                    prop_assert_eq!(r.is_feasible().then(|| r.plan().total_count()), oracle);
                }
            }
        }
    }
}

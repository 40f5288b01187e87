//! Balanced regional panel of relative sizes and centered growth rates.
//!
//! For region `i` in year `t`, with `N` regions:
//!
//! ```text
//! s[i,t] = ln E[i,t]   - mean_j ln E[j,t]      r[i,t] = s[i,t] - s[i,t-1]
//! y[i,t] = ln GDP[i,t] - mean_j ln GDP[j,t]    g[i,t] = y[i,t] - y[i,t-1]
//! ```
//!
//! Centering removes any trend common to all regions, so every cross-section
//! of `s`, `y`, `r` and `g` has mean zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One region-year record. Emissions are tonnes CO2-eq, GDP is constant-price
/// output; both must be strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionYearObservation {
    pub region_id: String,
    pub year: i32,
    pub emissions: f64,
    pub gdp: f64,
    /// Development-level label (LDR/TER/DER), carried through untouched.
    pub dev_class: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Emissions,
    Gdp,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Emissions => "emissions",
            Field::Gdp => "gdp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanelError {
    #[error("unbalanced panel: {} region-years missing (first: {})", missing.len(), preview(missing))]
    UnbalancedPanel { missing: Vec<(String, i32)> },
    #[error("{field} for region {region_id} in {year} must be positive, got {value}")]
    NonPositiveValue {
        region_id: String,
        year: i32,
        field: Field,
        value: f64,
    },
    #[error("duplicate record for region {region_id} in {year}")]
    DuplicateRecord { region_id: String, year: i32 },
    #[error("panel needs at least two regions, got {0}")]
    TooFewRegions(usize),
    #[error("invalid period {name}: start {start} after end {end}")]
    InvalidPeriod { name: String, start: i32, end: i32 },
    #[error("period {name} ({start}-{end}) lies outside the panel years {panel_start}-{panel_end}")]
    PeriodOutOfRange {
        name: String,
        start: i32,
        end: i32,
        panel_start: i32,
        panel_end: i32,
    },
    #[error("period {0} contains no growth-rate years")]
    EmptyPeriod(String),
}

fn preview(missing: &[(String, i32)]) -> String {
    missing
        .iter()
        .take(5)
        .map(|(r, y)| format!("{r}/{y}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A named, inclusive range of calendar years.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodDefinition {
    pub name: String,
    pub start_year: i32,
    pub end_year: i32,
}

impl PeriodDefinition {
    pub fn new(name: impl Into<String>, start_year: i32, end_year: i32) -> Result<Self, PanelError> {
        let name = name.into();
        if start_year > end_year {
            return Err(PanelError::InvalidPeriod {
                name,
                start: start_year,
                end: end_year,
            });
        }
        Ok(Self {
            name,
            start_year,
            end_year,
        })
    }

    fn fixed(name: &str, start_year: i32, end_year: i32) -> Self {
        Self {
            name: name.to_owned(),
            start_year,
            end_year,
        }
    }

    pub fn full() -> Self {
        Self::fixed("full", 1990, 2022)
    }
    pub fn pre_ets() -> Self {
        Self::fixed("pre-ETS", 1990, 2004)
    }
    pub fn ets1() -> Self {
        Self::fixed("ETS-1", 2005, 2007)
    }
    pub fn ets2() -> Self {
        Self::fixed("ETS-2", 2008, 2012)
    }
    pub fn ets3() -> Self {
        Self::fixed("ETS-3", 2013, 2020)
    }

    /// Full sample plus the pre-ETS period and the first three ETS phases.
    pub fn canonical() -> Vec<Self> {
        vec![Self::full(), Self::pre_ets(), Self::ets1(), Self::ets2(), Self::ets3()]
    }

    /// Looks up a canonical period by name, case-insensitively.
    pub fn canonical_by_name(name: &str) -> Option<Self> {
        Self::canonical()
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.start_year..=self.end_year
    }
}

impl fmt::Display for PeriodDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}-{})", self.name, self.start_year, self.end_year)
    }
}

/// Relative sizes and growth rates on a balanced region × year grid.
///
/// Regions are sorted by identifier. Values are stored region-major; growth
/// rates exist from the second panel year on.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPanel {
    regions: Vec<String>,
    dev_class: Vec<Option<String>>,
    first_year: i32,
    n_years: usize,
    s: Vec<f64>,
    y: Vec<f64>,
    r: Vec<f64>,
    g: Vec<f64>,
}

fn center(log_levels: &mut [f64], n_regions: usize, n_years: usize) {
    for t in 0..n_years {
        let mean = (0..n_regions).map(|i| log_levels[i * n_years + t]).sum::<f64>() / n_regions as f64;
        for i in 0..n_regions {
            log_levels[i * n_years + t] -= mean;
        }
    }
}

/// First differences along years. The first-year slot holds 0.0 and is never
/// exposed through the accessors.
fn differences(levels: &[f64], n_regions: usize, n_years: usize) -> Vec<f64> {
    let mut out = vec![0.0; levels.len()];
    for i in 0..n_regions {
        for t in 1..n_years {
            out[i * n_years + t] = levels[i * n_years + t] - levels[i * n_years + t - 1];
        }
    }
    out
}

/// Builds the panel over `years` from raw observations.
///
/// Records outside `years` are ignored. Every region that appears must be
/// present in every year of the range.
pub fn build_panel(
    observations: &[RegionYearObservation],
    years: RangeInclusive<i32>,
) -> Result<GrowthPanel, PanelError> {
    let (first_year, last_year) = (*years.start(), *years.end());
    if first_year > last_year {
        return Err(PanelError::InvalidPeriod {
            name: "panel".into(),
            start: first_year,
            end: last_year,
        });
    }
    let mut cells: BTreeMap<(&str, i32), &RegionYearObservation> = BTreeMap::new();
    let mut regions: BTreeSet<&str> = BTreeSet::new();
    for obs in observations.iter().filter(|o| years.contains(&o.year)) {
        for (field, value) in [(Field::Emissions, obs.emissions), (Field::Gdp, obs.gdp)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PanelError::NonPositiveValue {
                    region_id: obs.region_id.clone(),
                    year: obs.year,
                    field,
                    value,
                });
            }
        }
        if cells.insert((obs.region_id.as_str(), obs.year), obs).is_some() {
            return Err(PanelError::DuplicateRecord {
                region_id: obs.region_id.clone(),
                year: obs.year,
            });
        }
        regions.insert(obs.region_id.as_str());
    }
    if regions.len() < 2 {
        return Err(PanelError::TooFewRegions(regions.len()));
    }

    let missing: Vec<(String, i32)> = regions
        .iter()
        .flat_map(|r| years.clone().map(move |y| (*r, y)))
        .filter(|key| !cells.contains_key(key))
        .map(|(r, y)| (r.to_owned(), y))
        .collect();
    if !missing.is_empty() {
        return Err(PanelError::UnbalancedPanel { missing });
    }

    let n_regions = regions.len();
    let n_years = (last_year - first_year + 1) as usize;
    let mut s = Vec::with_capacity(n_regions * n_years);
    let mut y = Vec::with_capacity(n_regions * n_years);
    let mut dev_class = Vec::with_capacity(n_regions);
    for region in &regions {
        let mut class = None;
        for year in years.clone() {
            let obs = cells[&(*region, year)];
            s.push(obs.emissions.ln());
            y.push(obs.gdp.ln());
            if class.is_none() {
                class = obs.dev_class.clone();
            }
        }
        dev_class.push(class);
    }
    center(&mut s, n_regions, n_years);
    center(&mut y, n_regions, n_years);
    let r = differences(&s, n_regions, n_years);
    let g = differences(&y, n_regions, n_years);

    Ok(GrowthPanel {
        regions: regions.into_iter().map(str::to_owned).collect(),
        dev_class,
        first_year,
        n_years,
        s,
        y,
        r,
        g,
    })
}

/// One growth observation with the lagged sizes the dynamic model needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRecord {
    /// Index into [`GrowthPanel::regions`].
    pub region: usize,
    pub year: i32,
    pub r: f64,
    pub g: f64,
    pub s_lag: f64,
    pub y_lag: f64,
}

impl GrowthPanel {
    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn dev_class(&self, region: usize) -> Option<&str> {
        self.dev_class[region].as_deref()
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.n_years as i32 - 1
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.first_year..=self.last_year()
    }

    fn idx(&self, region: usize, year: i32) -> usize {
        assert!(region < self.regions.len(), "region index {region} out of range");
        assert!(self.years().contains(&year), "year {year} outside panel");
        region * self.n_years + (year - self.first_year) as usize
    }

    /// Relative emission size.
    pub fn s(&self, region: usize, year: i32) -> f64 {
        self.s[self.idx(region, year)]
    }

    /// Relative GDP size.
    pub fn y(&self, region: usize, year: i32) -> f64 {
        self.y[self.idx(region, year)]
    }

    /// Emissions growth rate; `None` in the first panel year.
    pub fn r(&self, region: usize, year: i32) -> Option<f64> {
        (year > self.first_year).then(|| self.r[self.idx(region, year)])
    }

    /// GDP growth rate; `None` in the first panel year.
    pub fn g(&self, region: usize, year: i32) -> Option<f64> {
        (year > self.first_year).then(|| self.g[self.idx(region, year)])
    }

    pub fn full_view(&self) -> PanelView<'_> {
        PanelView {
            panel: self,
            period: PeriodDefinition::fixed("panel", self.first_year, self.last_year()),
        }
    }

    /// A view over `period`.
    ///
    /// Sizes are not re-centered. The first year of the slice keeps its growth
    /// rate when the prior year exists in this panel; at the panel start it is
    /// dropped.
    pub fn restrict(&self, period: &PeriodDefinition) -> Result<PanelView<'_>, PanelError> {
        if period.start_year < self.first_year || period.end_year > self.last_year() {
            return Err(PanelError::PeriodOutOfRange {
                name: period.name.clone(),
                start: period.start_year,
                end: period.end_year,
                panel_start: self.first_year,
                panel_end: self.last_year(),
            });
        }
        let view = PanelView {
            panel: self,
            period: period.clone(),
        };
        if view.growth_years().is_empty() {
            return Err(PanelError::EmptyPeriod(period.name.clone()));
        }
        Ok(view)
    }
}

/// A period slice of a [`GrowthPanel`].
#[derive(Debug, Clone)]
pub struct PanelView<'a> {
    panel: &'a GrowthPanel,
    period: PeriodDefinition,
}

impl<'a> PanelView<'a> {
    pub fn panel(&self) -> &'a GrowthPanel {
        self.panel
    }

    pub fn period(&self) -> &PeriodDefinition {
        &self.period
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.period.years()
    }

    /// Years with a growth rate inside this view.
    pub fn growth_years(&self) -> RangeInclusive<i32> {
        self.period.start_year.max(self.panel.first_year + 1)..=self.period.end_year
    }

    pub fn n_growth_years(&self) -> usize {
        let years = self.growth_years();
        (years.end() - years.start() + 1).max(0) as usize
    }

    /// Growth records, region-major and in year order.
    pub fn growth_records(&self) -> Vec<GrowthRecord> {
        let years = self.growth_years();
        let mut out = Vec::with_capacity(self.panel.n_regions() * self.n_growth_years());
        for region in 0..self.panel.n_regions() {
            for year in years.clone() {
                let i = self.panel.idx(region, year);
                out.push(GrowthRecord {
                    region,
                    year,
                    r: self.panel.r[i],
                    g: self.panel.g[i],
                    s_lag: self.panel.s[i - 1],
                    y_lag: self.panel.y[i - 1],
                });
            }
        }
        out
    }

    /// Pooled growth rates of one variable over the view.
    pub fn growth_rates(&self, variable: Variable) -> Vec<f64> {
        self.growth_records()
            .iter()
            .map(|rec| match variable {
                Variable::Emissions => rec.r,
                Variable::Gdp => rec.g,
            })
            .collect()
    }

    /// Per-region mean of `(g, r)` over the view's growth years.
    pub fn mean_growth_by_region(&self) -> Vec<(f64, f64)> {
        let years = self.growth_years();
        let n = self.n_growth_years() as f64;
        (0..self.panel.n_regions())
            .map(|region| {
                let (sg, sr) = years.clone().fold((0.0, 0.0), |(sg, sr), year| {
                    let i = self.panel.idx(region, year);
                    (sg + self.panel.g[i], sr + self.panel.r[i])
                });
                (sg / n, sr / n)
            })
            .collect()
    }
}

/// Which growth series an operation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// CO2 emissions growth `r`.
    Emissions,
    /// GDP growth `g`.
    Gdp,
}

impl Variable {
    /// Short label used in output file names.
    pub fn label(&self) -> &'static str {
        match self {
            Variable::Emissions => "co2",
            Variable::Gdp => "gdp",
        }
    }
}

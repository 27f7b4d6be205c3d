//! Numerical measurement of the constants in the linear and bilinear estimates.
//!
//! Every check draws a seeded ensemble of localized fields, evaluates both sides of an
//! inequality and reports the ratios. Support checks enumerate frequency pairs instead.

mod fnorm;
pub mod golden;
mod inclusion;
mod product;
pub mod selftest;
mod strichartz;
mod support;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FreqPoint, GridSpec, Rep, SpaceTimeField, SpatialField, SpatialRep};
use crate::multipliers::{Cutoffs, CutoffProfile, SymbolSpec};

pub use fnorm::{f_norm_oracle, f_proxy_fidelity, FOracleConfig, FOracleResult};
pub use inclusion::{
    angular_reconstruction_ratio, energy_ratio, inclusion_checks, y_in_z_ratio, y_l2_ratio, y_l2_single_mode,
    InclusionConfig, SingleModeCheck,
};
pub use product::{product_estimate_check, product_sides, ProductConfig, ProductKind};
pub use strichartz::{
    admissible, local_strichartz_ratio, strichartz_gamma, strichartz_ratio, LocalStrichartzMode,
};
pub use support::{
    bilinear_support_check, CheckMode, CheckStatus, FrequencyLattice, Lemma, MeasuredAngles, SupportCheckConfig,
    SupportCheckReport, Violation, ViolationKind, MAX_LISTED,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeLaw {
    #[default]
    GaussianComplex,
    UnimodularRandomPhase,
}

impl AmplitudeLaw {
    fn draw(self, rng: &mut ChaCha8Rng) -> Complex64 {
        match self {
            AmplitudeLaw::GaussianComplex => {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
            }
            AmplitudeLaw::UnimodularRandomPhase => {
                let th = Uniform::new(0.0, std::f64::consts::TAU).sample(rng);
                Complex64::from_polar(1.0, th)
            }
        }
    }
}

/// Seeded family of random fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: usize,
    /// Frequency cell to populate; `None` uses the natural localization of the estimate.
    #[serde(default)]
    pub localization: Option<SymbolSpec>,
    #[serde(default)]
    pub law: AmplitudeLaw,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        EnsembleSpec { count, localization: None, law: AmplitudeLaw::GaussianComplex, seed }
    }

    pub fn localized(mut self, spec: SymbolSpec) -> Self {
        self.localization = Some(spec);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 8 {
            return Err(Error::Config(format!("ensemble count {} is below 8", self.count)));
        }
        Ok(())
    }

    fn rng(&self, k: usize) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(k as u64);
        r
    }

    fn symbol_spec<'a>(&'a self, fallback: &'a SymbolSpec) -> &'a SymbolSpec {
        self.localization.as_ref().unwrap_or(fallback)
    }

    /// Sample `k`: law-distributed coefficients on the support of `spec`, weighted by the symbol.
    pub fn field(&self, grid: &GridSpec, spec: &SymbolSpec, k: usize) -> Result<SpaceTimeField> {
        self.field_with(grid, spec, k, |_, _| true)
    }

    fn field_with(
        &self,
        grid: &GridSpec,
        spec: &SymbolSpec,
        k: usize,
        keep: impl Fn(f64, &[f64]) -> bool,
    ) -> Result<SpaceTimeField> {
        let cut = Cutoffs::new(grid, CutoffProfile::Sharp)?;
        let sym = cut.build(self.symbol_spec(spec))?;
        let lat = grid.lattice();
        let mut rng = self.rng(k);
        let mut u = SpaceTimeField::zeros(grid, Rep::SpacetimeFourier);
        let n = grid.dim;
        for j in 0..grid.nt {
            let tau = grid.tau(j);
            let row = u.slice_mut(j);
            for (s, c) in row.iter_mut().enumerate() {
                let xi = lat.xi(s);
                let w = sym.eval(&FreqPoint::new(tau, &xi[..n]));
                if w != 0.0 && keep(tau, &xi[..n]) {
                    *c = self.law.draw(&mut rng) * w;
                }
            }
        }
        Ok(u)
    }

    /// Sample `k` of spatial data on the support of a spatial symbol.
    pub fn spatial_field(&self, grid: &GridSpec, spec: &SymbolSpec, k: usize) -> Result<SpatialField> {
        let cut = Cutoffs::new(grid, CutoffProfile::Sharp)?;
        let sym = cut.build(self.symbol_spec(spec))?;
        if sym.depends_on_tau() {
            return Err(Error::Config("spatial ensembles need a symbol independent of tau".into()));
        }
        let lat = grid.lattice();
        let mut rng = self.rng(k);
        let mut data = vec![Complex64::new(0.0, 0.0); lat.len()];
        for (s, c) in data.iter_mut().enumerate() {
            let xi = lat.xi(s);
            let w = sym.eval(&FreqPoint::new(0.0, &xi[..grid.dim]));
            if w != 0.0 {
                *c = self.law.draw(&mut rng) * w;
            }
        }
        SpatialField::from_data(grid, SpatialRep::Fourier, data)
    }

    /// Spatial data on `lo <= |xi| < hi`, ignoring the localization field.
    pub fn spatial_band(&self, grid: &GridSpec, lo: f64, hi: f64, k: usize) -> Result<SpatialField> {
        let lat = grid.lattice();
        let mut rng = self.rng(k);
        let mut data = vec![Complex64::new(0.0, 0.0); lat.len()];
        for (s, c) in data.iter_mut().enumerate() {
            let r2 = lat.norm2(s);
            if r2 > 0.0 && r2 >= lo * lo && r2 < hi * hi {
                *c = self.law.draw(&mut rng);
            }
        }
        SpatialField::from_data(grid, SpatialRep::Fourier, data)
    }
}

/// Parameters attached to an estimate report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub params: EstimateParams,
    pub grid: GridSpec,
    pub ratios: Vec<f64>,
    /// Samples dropped because the right side vanished.
    pub skipped: usize,
    pub max: f64,
    pub median: f64,
    pub ceiling: Option<f64>,
    pub status: CheckStatus,
    /// Set when the parameters fall outside the range where the estimate is claimed.
    #[serde(default)]
    pub outside_claimed_range: bool,
}

impl EstimateReport {
    pub(crate) fn from_ratios(
        id: impl Into<String>,
        params: EstimateParams,
        grid: &GridSpec,
        pairs: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        let mut ratios = Vec::new();
        let mut skipped = 0;
        for (num, den) in pairs {
            if den == 0.0 {
                skipped += 1;
                continue;
            }
            let q = num / den;
            if !q.is_finite() || q < 0.0 {
                return Err(Error::Contract(format!("ratio {num}/{den} is not a finite nonnegative number")));
            }
            ratios.push(q);
        }
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let max = sorted.last().copied().unwrap_or(0.0);
        let median = if sorted.is_empty() {
            0.0
        } else if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
        };
        Ok(EstimateReport {
            id: id.into(),
            params,
            grid: grid.clone(),
            ratios,
            skipped,
            max,
            median,
            ceiling: None,
            status: CheckStatus::Inconclusive,
            outside_claimed_range: false,
        })
    }

    /// Sets a ceiling and the resulting verdict.
    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = Some(ceiling);
        self.status = if self.ratios.is_empty() {
            CheckStatus::Inconclusive
        } else if self.max <= ceiling {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `sample, ratio`.
    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sample", "ratio"])?;
        for (k, r) in self.ratios.iter().enumerate() {
            out.write_record([k.to_string(), format!("{r}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Largest over smallest of a set of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

#[cfg(test)]
mod tests;

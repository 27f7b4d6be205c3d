use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{CheckStatus, EnsembleSpec, EstimateParams, EstimateReport};
use crate::error::{Error, Result};
use crate::grid::{mixed_norm, GridSpec, Rep, SpaceTimeField, SpatialField, SpatialRep};
use crate::multipliers::AngularSectorSet;

/// `gamma = n/2 - n/r - 1/q` after checking `1/q + sigma/r <= sigma/2`, `sigma = (n-1)/2`.
pub fn admissible(n: usize, q: f64, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::UnsupportedDimension { dim: n, reason: "Strichartz pairs need n >= 2".into() });
    }
    if !(q >= 2.0 && r >= 2.0) {
        return Err(Error::Inadmissible(format!("need q, r >= 2, got q={q} r={r}")));
    }
    let sigma = (n as f64 - 1.0) / 2.0;
    let lhs = 1.0 / q + sigma / r;
    if lhs > sigma / 2.0 + 1e-12 {
        return Err(Error::Inadmissible(format!(
            "1/q + sigma/r = {lhs} exceeds sigma/2 = {} (n={n}, q={q}, r={r})",
            sigma / 2.0
        )));
    }
    Ok(strichartz_gamma(n, q, r))
}

pub fn strichartz_gamma(n: usize, q: f64, r: f64) -> f64 {
    n as f64 / 2.0 - n as f64 / r - 1.0 / q
}

/// `e^{2 pi i t |D|} f` sampled on the grid times, in spatial Fourier representation.
fn half_wave(grid: &GridSpec, f: &SpatialField) -> Result<SpaceTimeField> {
    let f = f.to_rep(SpatialRep::Fourier);
    let lat = grid.lattice();
    let mut u = SpaceTimeField::zeros(grid, Rep::SpatialFourier);
    let dt = grid.dt();
    for j in 0..grid.nt {
        let t = j as f64 * dt;
        for (s, c) in u.slice_mut(j).iter_mut().enumerate() {
            let a = f.data()[s];
            if a != Complex64::new(0.0, 0.0) {
                *c = a * Complex64::from_polar(1.0, TAU * t * lat.norm(s));
            }
        }
    }
    Ok(u)
}

/// `||e^{2 pi i t|D|} P_{<=lambda} u||_{L^q L^r} / (lambda^gamma ||P_{<=lambda} u||_{L^2})`.
pub fn strichartz_ratio(grid: &GridSpec, q: f64, r: f64, lambda: f64, ens: &EnsembleSpec) -> Result<EstimateReport> {
    ens.validate()?;
    let gamma = admissible(grid.dim, q, r)?;
    let mut pairs = Vec::with_capacity(ens.count);
    for k in 0..ens.count {
        let f = match &ens.localization {
            Some(spec) => ens.spatial_field(grid, spec, k)?,
            None => ens.spatial_band(grid, 0.0, 2.0 * lambda, k)?,
        };
        let u = half_wave(grid, &f)?;
        let num = mixed_norm(&u, q, r)?;
        pairs.push((num, lambda.powf(gamma) * f.l2_norm()));
    }
    let params = EstimateParams { n: grid.dim, lambda: Some(lambda), q: Some(q), r: Some(r), ..Default::default() };
    let mut rep = EstimateReport::from_ratios("strichartz", params, grid, pairs)?;
    rep.outside_claimed_range = grid.dim <= 5;
    Ok(rep)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalStrichartzMode {
    /// One random nonempty sector per sample.
    #[default]
    SingleSector,
    /// `(sum_omega ||e^{it|D|} B^omega u||^2_{L^2 L^inf})^{1/2}` against `||u||_{L^2}`.
    SquareSum,
}

/// Local Strichartz constant for data on the spatial shell `[lambda, 2 lambda)` cut into
/// sectors of width `(lambda d)^{1/2}`.
pub fn local_strichartz_ratio(
    grid: &GridSpec,
    lambda: f64,
    d: f64,
    ens: &EnsembleSpec,
    mode: LocalStrichartzMode,
) -> Result<EstimateReport> {
    ens.validate()?;
    let n = grid.dim;
    if n < 2 {
        return Err(Error::UnsupportedDimension { dim: n, reason: "angular sectors need n >= 2".into() });
    }
    let delta = (lambda * d).sqrt();
    if delta > lambda {
        return Err(Error::Domain(format!("sector width (lambda d)^(1/2) = {delta} exceeds lambda = {lambda}")));
    }
    let set = AngularSectorSet::new(n, lambda, delta)?;
    let lat = grid.lattice();
    let ids: Vec<Option<usize>> = (0..lat.len())
        .map(|s| {
            let r = lat.norm(s);
            (r >= lambda / 2.0 && r < 4.0 * lambda).then(|| set.assign(&lat.xi(s)[..n])).flatten()
        })
        .collect();
    let scale = lambda.powf((n as f64 + 1.0) / 4.0) * d.powf((n as f64 - 3.0) / 4.0);
    let sector_norm = |f: &SpatialField, id: usize| -> Result<(f64, f64)> {
        let mut g = f.clone();
        for (s, c) in g.data_mut().iter_mut().enumerate() {
            if ids[s] != Some(id) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        let u = half_wave(grid, &g)?.into_rep(Rep::Physical);
        Ok((mixed_norm(&u, 2.0, f64::INFINITY)?, g.l2_norm()))
    };
    let mut pairs = Vec::with_capacity(ens.count);
    for k in 0..ens.count {
        let f = match &ens.localization {
            Some(spec) => ens.spatial_field(grid, spec, k)?,
            None => ens.spatial_band(grid, lambda, 2.0 * lambda, k)?,
        };
        let mut occupied: Vec<usize> = f
            .data()
            .iter()
            .zip(&ids)
            .filter_map(|(c, id)| if c.norm_sqr() > 0.0 { *id } else { None })
            .collect();
        occupied.sort_unstable();
        occupied.dedup();
        if occupied.is_empty() {
            pairs.push((0.0, 0.0));
            continue;
        }
        match mode {
            LocalStrichartzMode::SingleSector => {
                let pick = ens.rng(k.wrapping_add(1 << 32)).gen_range(0..occupied.len());
                let (num, den) = sector_norm(&f, occupied[pick])?;
                pairs.push((num, scale * den));
            }
            LocalStrichartzMode::SquareSum => {
                let mut sq = 0.0;
                for &id in &occupied {
                    sq += sector_norm(&f, id)?.0.powi(2);
                }
                pairs.push((sq.sqrt(), scale * f.l2_norm()));
            }
        }
    }
    let params = EstimateParams { n, lambda: Some(lambda), d: Some(d), ..Default::default() };
    let id = match mode {
        LocalStrichartzMode::SingleSector => "local-strichartz",
        LocalStrichartzMode::SquareSum => "local-strichartz-square-sum",
    };
    let mut rep = EstimateReport::from_ratios(id, params, grid, pairs)?;
    rep.status = CheckStatus::Inconclusive;
    Ok(rep)
}

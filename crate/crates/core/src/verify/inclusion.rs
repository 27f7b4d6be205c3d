use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{CheckStatus, EnsembleSpec, EstimateParams, EstimateReport};
use crate::error::{Error, Result};
use crate::grid::{mixed_norm, Dyadic, Rep, SpaceTimeField};
use crate::multipliers::{on_cone, AngularSectorSet, SymbolSpec};
use crate::spaces::{box_symbol, sobolev_norm, NormContext, PointClass};
use crate::wave::spectral_time_derivative;

fn sample(ctx: &NormContext, ens: &EnsembleSpec, lambda: f64, k: usize) -> Result<SpaceTimeField> {
    ens.field(ctx.grid(), &SymbolSpec::Shell { lambda }, k)
}

fn shell_index(ctx: &NormContext, lambda: f64) -> Result<usize> {
    let l = Dyadic::new(lambda)?;
    ctx.lambdas()
        .iter()
        .position(|x| *x == l)
        .ok_or_else(|| Error::Config(format!("lambda = {lambda} is not a resolvable shell")))
}

/// Sector id of every lattice point on the block annulus `[lambda/2, 4 lambda)`.
fn block_ids(ctx: &NormContext, set: &AngularSectorSet, lambda: f64) -> Vec<Option<usize>> {
    let lat = ctx.lattice();
    let n = ctx.grid().dim;
    (0..lat.len())
        .map(|s| {
            let r = lat.norm(s);
            (r >= lambda / 2.0 && r < 4.0 * lambda).then(|| set.assign(&lat.xi(s)[..n])).flatten()
        })
        .collect()
}

/// Per-sector `X_{lambda,1}` and `Y_lambda` norms of `B^omega u`.
fn sector_norms(ctx: &NormContext, u: &SpaceTimeField, lambda: f64, set: &AngularSectorSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let li = shell_index(ctx, lambda)?;
    let grid = ctx.grid().clone();
    let ids = block_ids(ctx, set, lambda);
    let spec = u.to_rep(Rep::SpacetimeFourier);
    let lat = ctx.lattice();
    let s_len = lat.len();
    let nd = ctx.cone_shells().len();
    let count = set.count();
    let mut energy = vec![0.0; count * nd];
    let mut boxed = SpaceTimeField::zeros(&grid, Rep::SpacetimeFourier);
    for j in 0..grid.nt {
        let tau = grid.tau(j);
        for s in 0..s_len {
            let Some(w) = ids[s] else { continue };
            let Some(PointClass { shell, band }) = ctx.classify(j, s) else { continue };
            if shell != li {
                continue;
            }
            let c = spec.slice(j)[s];
            if let Some(b) = band {
                energy[w * nd + b] += c.norm_sqr();
            }
            boxed.slice_mut(j)[s] = c * box_symbol(tau, lat.norm2(s));
        }
    }
    let measure = grid.dt() * grid.cell_volume();
    let ds = ctx.cone_shells();
    let x: Vec<f64> = (0..count)
        .map(|w| (0..nd).map(|b| (ds[b].value() * energy[w * nd + b] * measure).sqrt()).sum())
        .collect();
    boxed.convert(Rep::SpatialFourier);
    let mut y = vec![0.0; count];
    let mut acc = vec![0.0; count];
    for j in 0..grid.nt {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (s, c) in boxed.slice(j).iter().enumerate() {
            if let Some(w) = ids[s] {
                acc[w] += c.norm_sqr();
            }
        }
        for (yw, a) in y.iter_mut().zip(&acc) {
            *yw += (a * grid.cell_volume()).sqrt();
        }
    }
    y.iter_mut().for_each(|v| *v *= grid.dt() / lambda);
    Ok((x, y))
}

/// `(sum_omega ||B^omega u||^2)^{1/2} / ||u||` in the `X_{lambda,1}` and `Y_lambda` norms.
pub fn angular_reconstruction_ratio(
    ctx: &NormContext,
    lambda: f64,
    delta: f64,
    ens: &EnsembleSpec,
) -> Result<[EstimateReport; 2]> {
    ens.validate()?;
    let set = AngularSectorSet::new(ctx.grid().dim, lambda, delta)?;
    let mut px = Vec::new();
    let mut py = Vec::new();
    for k in 0..ens.count {
        let u = sample(ctx, ens, lambda, k)?;
        let (x, y) = sector_norms(ctx, &u, lambda, &set)?;
        let sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        px.push((sq(&x), ctx.x_half_norm(&u, lambda, 1.0)?));
        py.push((sq(&y), ctx.y_norm(&u, lambda)?));
    }
    let params = EstimateParams { n: ctx.grid().dim, lambda: Some(lambda), d: Some(delta), ..Default::default() };
    Ok([
        EstimateReport::from_ratios("angular-reconstruction-x", params.clone(), ctx.grid(), px)?,
        EstimateReport::from_ratios("angular-reconstruction-y", params, ctx.grid(), py)?,
    ])
}

/// `max_d d^{1/2} ||S_{lambda,d} u||_{L^2 L^2} / ||u||_{Y_lambda}`.
pub fn y_l2_ratio(ctx: &NormContext, lambda: f64, ens: &EnsembleSpec) -> Result<EstimateReport> {
    ens.validate()?;
    let mut pairs = Vec::new();
    for k in 0..ens.count {
        let u = sample(ctx, ens, lambda, k)?;
        let x = ctx.shell_rows(&u, lambda)?.iter().map(|r| r.x).fold(0.0, f64::max);
        pairs.push((x, ctx.y_norm(&u, lambda)?));
    }
    let params = EstimateParams { n: ctx.grid().dim, lambda: Some(lambda), ..Default::default() };
    EstimateReport::from_ratios("y-l2", params, ctx.grid(), pairs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleModeCheck {
    pub lambda: f64,
    pub d: f64,
    pub measured: f64,
    /// `lambda d^{1/2} / (4 pi^2 |tau^2 - |xi|^2| T^{1/2})`.
    pub closed_form: f64,
}

/// The `Y -> L^2` ratio of the single mode at time index `j`, spatial index `s`.
pub fn y_l2_single_mode(ctx: &NormContext, j: usize, s: usize) -> Result<SingleModeCheck> {
    let grid = ctx.grid();
    let Some(PointClass { shell, band: Some(b) }) = ctx.classify(j, s) else {
        return Err(Error::Domain("single-mode check needs an off-cone point inside a shell".into()));
    };
    let lambda = ctx.lambdas()[shell].value();
    let d = ctx.cone_shells()[b].value();
    let mut u = SpaceTimeField::zeros(grid, Rep::SpacetimeFourier);
    u.slice_mut(j)[s] = Complex64::new(1.0, 0.0);
    let rows = ctx.shell_rows(&u, lambda)?;
    let measured = rows[b].x / ctx.y_norm(&u, lambda)?;
    let bx = box_symbol(grid.tau(j), ctx.lattice().norm2(s)).abs();
    Ok(SingleModeCheck { lambda, d, measured, closed_form: lambda * d.sqrt() / (bx * grid.period.sqrt()) })
}

/// Per band `d <= lambda`, `(sum_omega ||Xi^{-1} S^omega_{lambda,d} F||^2_{L^1 L^inf})^{1/2}` over
/// `lambda^{(n-4)/2} (d/lambda)^{(n-5)/4} ||S_lambda F||_{L^1 L^2}`; the sample ratio is the max over bands.
pub fn y_in_z_ratio(ctx: &NormContext, lambda: f64, ens: &EnsembleSpec) -> Result<EstimateReport> {
    ens.validate()?;
    let grid = ctx.grid().clone();
    let n = grid.dim;
    if n < 2 {
        return Err(Error::UnsupportedDimension { dim: n, reason: "angular sectors need n >= 2".into() });
    }
    let li = shell_index(ctx, lambda)?;
    let lat = ctx.lattice();
    let s_len = lat.len();
    let ds: Vec<f64> = ctx.cone_shells().iter().map(|d| d.value()).filter(|&d| d <= lambda).collect();
    let sets = ds
        .iter()
        .map(|&d| AngularSectorSet::new(n, lambda, (lambda * d).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<Vec<Option<usize>>> = sets.iter().map(|set| block_ids(ctx, set, lambda)).collect();
    let mut pairs = Vec::new();
    let mut buf = SpaceTimeField::zeros(&grid, Rep::SpacetimeFourier);
    for k in 0..ens.count {
        let f = sample(ctx, ens, lambda, k)?;
        let l1l2 = mixed_norm(&ctx.shell_projection(&f, lambda)?, 1.0, 2.0)?;
        let mut worst: f64 = 0.0;
        for (b, &d) in ds.iter().enumerate() {
            let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); sets[b].count()];
            for j in 0..grid.nt {
                for s in 0..s_len {
                    let Some(w) = ids[b][s] else { continue };
                    if f.slice(j)[s].norm_sqr() == 0.0 {
                        continue;
                    }
                    if let Some(PointClass { shell, band: Some(bb) }) = ctx.classify(j, s) {
                        if shell == li && bb == b {
                            buckets[w].push(j * s_len + s);
                        }
                    }
                }
            }
            let mut sq = 0.0;
            for bucket in buckets.iter().filter(|v| !v.is_empty()) {
                buf = SpaceTimeField::zeros(&grid, Rep::SpacetimeFourier);
                for &i in bucket {
                    let (j, s) = (i / s_len, i % s_len);
                    let bx = box_symbol(grid.tau(j), lat.norm2(s));
                    buf.data_mut()[i] = f.data()[i] / bx;
                }
                buf.convert(Rep::Physical);
                let v = mixed_norm(&buf, 1.0, f64::INFINITY)?;
                sq += v * v;
            }
            let scale = lambda.powf((n as f64 - 4.0) / 2.0) * (d / lambda).powf((n as f64 - 5.0) / 4.0);
            if l1l2 > 0.0 {
                worst = worst.max(sq.sqrt() / (scale * l1l2));
            }
        }
        pairs.push((worst, if l1l2 > 0.0 { 1.0 } else { 0.0 }));
    }
    drop(buf);
    let params = EstimateParams { n, lambda: Some(lambda), ..Default::default() };
    let mut rep = EstimateReport::from_ratios("y-in-z", params, &grid, pairs)?;
    rep.outside_claimed_range = n <= 5;
    Ok(rep)
}

/// Energy bounds on the free-wave (cone residue) ensemble.
///
/// Returns the `(inf, 2)` component `max_lambda ||S_lambda u||_{L^inf L^2} / F_lambda` and
/// `sup_t (||u||_{H^s} + ||d_t u||_{H^{s-1}}) / ||u||_{F^s}`.
pub fn energy_ratio(ctx: &NormContext, s: f64, ens: &EnsembleSpec) -> Result<[EstimateReport; 2]> {
    ens.validate()?;
    let grid = ctx.grid().clone();
    let mut shell_pairs = Vec::new();
    let mut full_pairs = Vec::new();
    for k in 0..ens.count {
        let u = match &ens.localization {
            Some(spec) => ens.field(&grid, spec, k)?,
            None => ens.field_with(&grid, &SymbolSpec::Identity, k, |tau, xi| {
                let xi2: f64 = xi.iter().map(|x| x * x).sum();
                xi2 > 0.0 && on_cone(tau * tau, xi2)
            })?,
        };
        let mut shell = 0.0f64;
        for l in ctx.lambdas() {
            let f = ctx.f_lambda_norm(&u, l.value())?;
            if f > 0.0 {
                shell = shell.max(ctx.energy_norm(&u, l.value())? / f);
            }
        }
        shell_pairs.push((shell, if shell > 0.0 { 1.0 } else { 0.0 }));
        let du = spectral_time_derivative(&u).into_rep(Rep::SpatialFourier);
        let uu = u.to_rep(Rep::SpatialFourier);
        let mut sup = 0.0f64;
        for j in 0..grid.nt {
            let a = sobolev_norm(&uu.time_slice(j)?, s);
            let b = sobolev_norm(&du.time_slice(j)?, s - 1.0) / (2.0 * PI);
            sup = sup.max(a + b);
        }
        full_pairs.push((sup, ctx.fs_norm(&u, s)?));
    }
    let params = EstimateParams { n: grid.dim, ..Default::default() };
    let mut shell = EstimateReport::from_ratios("energy-shell", params.clone(), &grid, shell_pairs)?;
    shell.status = CheckStatus::Inconclusive;
    let full = EstimateReport::from_ratios("energy-fs", params, &grid, full_pairs)?;
    Ok([shell, full])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionConfig {
    pub lambda: f64,
    /// Sector width for the reconstruction check.
    pub delta: f64,
    /// Sobolev exponent for the energy check.
    pub s: f64,
    pub ensemble: EnsembleSpec,
}

/// Runs the reconstruction, `Y -> L^2`, `Y -> Z` (n >= 2) and energy checks on one grid.
pub fn inclusion_checks(ctx: &NormContext, cfg: &InclusionConfig) -> Result<Vec<EstimateReport>> {
    let mut out = Vec::new();
    out.extend(angular_reconstruction_ratio(ctx, cfg.lambda, cfg.delta, &cfg.ensemble)?);
    out.push(y_l2_ratio(ctx, cfg.lambda, &cfg.ensemble)?);
    if ctx.grid().dim >= 2 {
        out.push(y_in_z_ratio(ctx, cfg.lambda, &cfg.ensemble)?);
    }
    out.extend(energy_ratio(ctx, cfg.s, &cfg.ensemble)?);
    Ok(out)
}

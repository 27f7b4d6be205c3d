use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{EnsembleSpec, EstimateParams, EstimateReport};
use crate::error::{Error, Result};
use crate::grid::{Rep, SpaceTimeField};
use crate::multipliers::{Cutoffs, SymbolSpec};
use crate::spaces::NormContext;
use crate::wave::xi_inverse;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductKind {
    /// Both inputs at frequency `mu`, output at `lambda <= 4 mu`.
    HH,
    /// `lambda^{-1} ||S_lambda(S_mu u grad S_{lambda, c mu <=} v)||_{L^1 L^2}`.
    HlA,
    /// `sum_{d >= c mu} d^{1/2} ||Xi^{-1} S_{lambda,d}(S_mu u grad S_{lambda, < c mu} v)||_{L^2 L^2}`.
    HlB,
    /// `sum_{d < c mu} d^{1/2} ||Xi^{-1} S_{lambda,d}(S_{mu,<=d} u grad S_{lambda,<=d} v)||_{L^2 L^2}`.
    CI,
    /// `sum_{d < c mu} lambda^{-1} ||S_{lambda,<d}(S_{mu,<=d} u grad S_{lambda,d} v)||_{L^1 L^2}`.
    CII,
    /// `sum_{d <= mu} lambda^{-1} ||S_{lambda,<e}(S_{mu,d} u grad S_{lambda,<e} v)||_{L^1 L^2}`, `e = min(c mu, d)`.
    CIII,
}

impl ProductKind {
    pub fn name(self) -> &'static str {
        match self {
            ProductKind::HH => "HH",
            ProductKind::HlA => "HL-A",
            ProductKind::HlB => "HL-B",
            ProductKind::CI => "C_I",
            ProductKind::CII => "C_II",
            ProductKind::CIII => "C_III",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductConfig {
    pub kind: ProductKind,
    pub lambda: f64,
    pub mu: f64,
    pub c: f64,
    pub ensemble: EnsembleSpec,
}

impl ProductConfig {
    fn validate(&self) -> Result<()> {
        let (l, m) = (self.lambda, self.mu);
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::Precondition(format!("{}: need 0 < c < 1, got {}", self.kind.name(), self.c)));
        }
        let ok = match self.kind {
            ProductKind::HH => l <= 4.0 * m,
            _ => l >= 8.0 * m,
        };
        if !ok {
            return Err(Error::Precondition(format!(
                "{}: frequencies lambda={l}, mu={m} violate the case localization",
                self.kind.name()
            )));
        }
        Ok(())
    }
}

struct Kit<'a> {
    ctx: &'a NormContext,
    cut: Cutoffs,
}

impl Kit<'_> {
    fn apply(&self, spec: SymbolSpec, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.cut.build(&spec)?.apply(u)
    }

    /// Components of `u grad v`, in space-time Fourier representation.
    fn product(&self, u: &SpaceTimeField, v: &SpaceTimeField) -> Vec<SpaceTimeField> {
        let grid = self.ctx.grid();
        let lat = self.ctx.lattice();
        let up = u.to_rep(Rep::Physical);
        let vs = v.to_rep(Rep::SpatialFourier);
        (0..grid.dim)
            .map(|i| {
                let mut dv = vs.clone();
                for j in 0..grid.nt {
                    for (s, c) in dv.slice_mut(j).iter_mut().enumerate() {
                        *c *= Complex64::new(0.0, TAU * lat.xi(s)[i]);
                    }
                }
                let mut w = dv.into_rep(Rep::Physical);
                for (a, b) in w.data_mut().iter_mut().zip(up.data()) {
                    *a *= b;
                }
                w.into_rep(Rep::SpacetimeFourier)
            })
            .collect()
    }

    fn l1l2(&self, w: &[SpaceTimeField]) -> f64 {
        let grid = self.ctx.grid();
        let mut acc = vec![0.0; grid.nt];
        for c in w {
            let c = c.to_rep(Rep::SpatialFourier);
            for (j, a) in acc.iter_mut().enumerate() {
                *a += c.slice(j).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        acc.iter().map(|a| (a * grid.cell_volume()).sqrt()).sum::<f64>() * grid.dt()
    }

    fn l2l2(&self, w: &[SpaceTimeField]) -> f64 {
        let grid = self.ctx.grid();
        let e: f64 = w.iter().map(|c| c.coefficient_energy()).sum();
        (e * grid.dt() * grid.cell_volume()).sqrt()
    }

    fn project(&self, spec: &SymbolSpec, w: &[SpaceTimeField]) -> Result<Vec<SpaceTimeField>> {
        let sym = self.cut.build(spec)?;
        w.iter().map(|c| sym.apply(c)).collect()
    }

    fn xi_piece(&self, lambda: f64, d: f64, w: &[SpaceTimeField]) -> Result<f64> {
        let p = self.project(&SymbolSpec::ShellCone { lambda, d }, w)?;
        let q = p.iter().map(|c| xi_inverse(c, 0.0)).collect::<Result<Vec<_>>>()?;
        Ok(d.sqrt() * self.l2l2(&q))
    }
}

/// Left and right side of the case estimate for one pair of inputs.
///
/// The right side is `lambda^{-1} mu^{n/2} F_mu(u) F_mu(v)` for HH and
/// `mu^{(n-2)/2} G_mu(u) F_lambda(v)` otherwise.
pub fn product_sides(ctx: &NormContext, cfg: &ProductConfig, u: &SpaceTimeField, v: &SpaceTimeField) -> Result<(f64, f64)> {
    cfg.validate()?;
    let kit = Kit { ctx, cut: Cutoffs::sharp(ctx.grid())? };
    let (l, m, c) = (cfg.lambda, cfg.mu, cfg.c);
    let n = ctx.grid().dim as f64;
    let ds: Vec<f64> = ctx.cone_shells().iter().map(|d| d.value()).collect();
    let shell = SymbolSpec::Shell { lambda: l };
    let lhs = match cfg.kind {
        ProductKind::HH => {
            let w = kit.product(&kit.apply(SymbolSpec::Shell { lambda: m }, u)?, &kit.apply(SymbolSpec::Shell { lambda: m }, v)?);
            kit.l1l2(&kit.project(&shell, &w)?) / l
        }
        ProductKind::HlA => {
            let su = kit.apply(SymbolSpec::Shell { lambda: m }, u)?;
            let sv = kit.apply(SymbolSpec::AboveCone { lambda: l, d: c * m }, v)?;
            kit.l1l2(&kit.project(&shell, &kit.product(&su, &sv))?) / l
        }
        ProductKind::HlB => {
            let su = kit.apply(SymbolSpec::Shell { lambda: m }, u)?;
            let sv = kit.apply(SymbolSpec::BelowCone { lambda: l, d: c * m }, v)?;
            let w = kit.product(&su, &sv);
            let mut sum = 0.0;
            for &d in ds.iter().filter(|&&d| d >= c * m) {
                sum += kit.xi_piece(l, d, &w)?;
            }
            sum
        }
        ProductKind::CI => {
            let mut sum = 0.0;
            for &d in ds.iter().filter(|&&d| d < c * m) {
                let su = kit.apply(SymbolSpec::NearCone { lambda: m, d }, u)?;
                let sv = kit.apply(SymbolSpec::NearCone { lambda: l, d }, v)?;
                sum += kit.xi_piece(l, d, &kit.product(&su, &sv))?;
            }
            sum
        }
        ProductKind::CII => {
            let mut sum = 0.0;
            for &d in ds.iter().filter(|&&d| d < c * m) {
                let su = kit.apply(SymbolSpec::NearCone { lambda: m, d }, u)?;
                let sv = kit.apply(SymbolSpec::ShellCone { lambda: l, d }, v)?;
                let w = kit.product(&su, &sv);
                sum += kit.l1l2(&kit.project(&SymbolSpec::BelowCone { lambda: l, d }, &w)?) / l;
            }
            sum
        }
        ProductKind::CIII => {
            let mut sum = 0.0;
            for &d in ds.iter().filter(|&&d| d <= m) {
                let e = d.min(c * m);
                let su = kit.apply(SymbolSpec::ShellCone { lambda: m, d }, u)?;
                let sv = kit.apply(SymbolSpec::BelowCone { lambda: l, d: e }, v)?;
                let w = kit.product(&su, &sv);
                sum += kit.l1l2(&kit.project(&SymbolSpec::BelowCone { lambda: l, d: e }, &w)?) / l;
            }
            sum
        }
    };
    let rhs = match cfg.kind {
        ProductKind::HH => m.powf(n / 2.0) * ctx.f_lambda_norm(u, m)? * ctx.f_lambda_norm(v, m)? / l,
        _ => m.powf((n - 2.0) / 2.0) * ctx.g_lambda_norm(u, m)? * ctx.f_lambda_norm(v, l)?,
    };
    Ok((lhs, rhs))
}

/// Ratios of the case estimate over a seeded ensemble of input pairs.
pub fn product_estimate_check(ctx: &NormContext, cfg: &ProductConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    cfg.ensemble.validate()?;
    if ctx.grid().dim < 2 {
        return Err(Error::UnsupportedDimension { dim: ctx.grid().dim, reason: "product estimates need n >= 2".into() });
    }
    let ens = &cfg.ensemble;
    let (l, m) = (cfg.lambda, cfg.mu);
    let v_shell = if cfg.kind == ProductKind::HH { m } else { l };
    let mut pairs = Vec::with_capacity(ens.count);
    for k in 0..ens.count {
        let u = ens.field(ctx.grid(), &SymbolSpec::Shell { lambda: m }, 2 * k)?;
        let v = ens.field(ctx.grid(), &SymbolSpec::Shell { lambda: v_shell }, 2 * k + 1)?;
        pairs.push(product_sides(ctx, cfg, &u, &v)?);
    }
    let params = EstimateParams {
        n: ctx.grid().dim,
        lambda: Some(l),
        mu: Some(m),
        c: Some(cfg.c),
        ..Default::default()
    };
    EstimateReport::from_ratios(format!("product-{}", cfg.kind.name()), params, ctx.grid(), pairs)
}

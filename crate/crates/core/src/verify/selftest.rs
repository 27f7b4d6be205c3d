//! Quick consistency suite over the closed-form examples of every module.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    angular_reconstruction_ratio, bilinear_support_check, energy_ratio, local_strichartz_ratio, product_sides,
    strichartz_ratio, CheckMode, EnsembleSpec, Lemma, LocalStrichartzMode, ProductConfig, ProductKind,
    SupportCheckConfig,
};
use crate::error::{Error, Result};
use crate::grid::{mixed_norm, uncentered, GridSpec, Rep, SpaceTimeField, SpatialField, SpatialRep};
use crate::multipliers::{
    lattice_kernel_l1_norm, Cutoffs, CutoffProfile, KernelGrid, KernelVariant, Sign, Symbol, SymbolSpec,
};
use crate::solver::{data_scale, picard_solve, scale_transform, CauchyData, IterationConfig};
use crate::spaces::{NormContext, SchematicParams};
use crate::wave::{
    duhamel_inverse, propagate, spectral_box, trace_decompose, trace_reconstruct, xi_inverse, TimeAxis,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfTestOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn ensure(cond: bool, what: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Contract(what.into()))
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<()> {
    ensure((a - b).abs() <= tol * b.abs().max(1e-300), format!("{what}: {a} vs {b}"))
}

struct Fixture {
    grid: GridSpec,
    ctx: NormContext,
    cut: Cutoffs,
}

impl Fixture {
    fn mode(&self, tau: i64, xi: &[i64]) -> SpaceTimeField {
        let mut u = SpaceTimeField::zeros(&self.grid, Rep::SpacetimeFourier);
        let j = uncentered(tau, self.grid.nt).expect("tau on lattice");
        let s = self.grid.lattice().index_of(xi).expect("xi on lattice");
        u.slice_mut(j)[s] = Complex64::new(1.0, 0.0);
        u
    }

    fn spatial_mode(&self, xi: &[i64]) -> SpatialField {
        let mut f = SpatialField::zeros(&self.grid, SpatialRep::Fourier);
        f.data_mut()[self.grid.lattice().index_of(xi).expect("xi on lattice")] = Complex64::new(1.0, 0.0);
        f
    }
}

type Check = (&'static str, fn(&Fixture) -> Result<()>);

const CHECKS: &[Check] = &[
    ("dirac-flat-spectrum", |fx| {
        let mut u = SpaceTimeField::zeros(&fx.grid, Rep::Physical);
        u.data_mut()[0] = Complex64::new(1.0, 0.0);
        let want = (fx.grid.total_len() as f64).powf(-0.5);
        let s = u.into_rep(Rep::SpacetimeFourier);
        ensure(s.data().iter().all(|c| (c.norm() - want).abs() < 1e-14), "spectrum modulus")
    }),
    ("plane-wave-single-coefficient", |fx| {
        let u = fx.mode(3, &[2, -1]);
        let back = u.to_rep(Rep::Physical).into_rep(Rep::SpacetimeFourier);
        ensure(back.max_abs_diff(&u)? < 1e-13, "round trip")
    }),
    ("constant-field-norms", |fx| {
        let u = SpaceTimeField::from_fn(&fx.grid, |_, _| Complex64::new(1.0, 0.0));
        let g = &fx.grid;
        close(mixed_norm(&u, 2.0, 2.0)?, g.period.sqrt() * g.length.powf(g.dim as f64 / 2.0), 1e-12, "L2L2")?;
        close(mixed_norm(&u, f64::INFINITY, f64::INFINITY)?, 1.0, 1e-12, "LinfLinf")
    }),
    ("degenerate-grid-rejected", |_| {
        let g = GridSpec::new(2, 2, 1.0, 8, 1.0)?;
        ensure(g.frequency_shells().is_err(), "N_x = 2 has no shell")
    }),
    ("doubling-length-halves-shells", |fx| {
        let g = &fx.grid;
        let a = g.frequency_shells()?;
        let b = GridSpec::new(g.dim, g.nx, 2.0 * g.length, g.nt, 2.0 * g.period)?.frequency_shells()?;
        ensure(a.iter().zip(&b).all(|(x, y)| x.half() == *y), "shell lists")
    }),
    ("shell-partition-of-unity", |fx| {
        let one = SpaceTimeField::from_fn(&fx.grid, |_, _| Complex64::new(0.0, 0.0));
        let mut sum = one.to_rep(Rep::SpacetimeFourier);
        let mut all = SpaceTimeField::zeros(&fx.grid, Rep::SpacetimeFourier);
        all.data_mut().iter_mut().for_each(|c| *c = Complex64::new(1.0, 0.0));
        for l in fx.cut.lambdas() {
            sum.axpy(Complex64::new(1.0, 0.0), &fx.cut.shell_symbol(l.value())?.apply(&all)?)?;
        }
        ensure(sum.data().iter().skip(1).all(|c| (c.re - 1.0).abs() < 1e-15) && sum.data()[0].norm() == 0.0, "sum")
    }),
    ("cone-symbol-band", |fx| {
        let s = fx.cut.cone_symbol(2.0)?;
        ensure(s.eval(&crate::grid::FreqPoint::new(3.0, &[0.0, 0.0])) == 1.0, "1.5 d lies in [d, 2d)")
    }),
    ("coarsest-sector-set", |fx| {
        let set = fx.cut.sector_set(4.0, 4.0)?;
        ensure(set.count() <= 8, format!("{} sectors", set.count()))
    }),
    ("sectors-partition-annulus", |fx| {
        let set = fx.cut.sector_set(4.0, 1.0)?;
        let lat = fx.grid.lattice();
        ensure((0..lat.len()).filter(|&s| lat.norm(s) >= 2.0).all(|s| set.assign(&lat.xi(s)[..2]).is_some()), "claim")
    }),
    ("projector-idempotent", |fx| {
        let u = EnsembleSpec::new(8, 1).field(&fx.grid, &SymbolSpec::Identity, 0)?;
        let s = fx.cut.shell_cone_symbol(4.0, 1.0)?;
        let once = s.apply(&u)?;
        ensure(s.apply(&once)?.max_abs_diff(&once)? == 0.0, "S S = S")
    }),
    ("sign-partition", |fx| {
        let u = EnsembleSpec::new(8, 2).field(&fx.grid, &SymbolSpec::ShellCone { lambda: 4.0, d: 1.0 }, 0)?;
        let p = fx.cut.sign_symbol(Sign::Plus)?.apply(&u)?;
        let m = fx.cut.sign_symbol(Sign::Minus)?.apply(&u)?;
        let mut rest = u.sub(&p.add(&m)?)?;
        rest.data_mut()[..fx.grid.spatial_len()].iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        ensure(rest.max_abs() == 0.0, "S+ + S- = S off tau = 0")
    }),
    ("shell-keeps-and-kills-modes", |fx| {
        let s = fx.cut.shell_symbol(2.0)?;
        let inside = fx.mode(2, &[1, 1]);
        let far = fx.mode(6, &[5, 5]);
        ensure(s.apply(&inside)?.max_abs_diff(&inside)? == 0.0 && s.apply(&far)?.max_abs() == 0.0, "shell")
    }),
    ("identity-kernel-is-delta", |fx| {
        let id = Symbol::identity(2, CutoffProfile::Sharp);
        close(lattice_kernel_l1_norm(&id, KernelVariant::Plain, &KernelGrid::centered(fx.grid.clone()))?, 1.0, 1e-12, "L1")
    }),
    ("x-norm-single-mode", |fx| {
        let u = fx.mode(5, &[2, 0]);
        let meas = fx.grid.dt() * fx.grid.cell_volume();
        close(fx.ctx.x_half_norm(&u, 4.0, 1.0)?, (2.0 * meas).sqrt(), 1e-12, "d^{1/2} |c|")
    }),
    ("x-norm-vanishes-on-residue", |fx| ensure(fx.ctx.x_half_norm(&fx.mode(5, &[3, 4]), 4.0, 1.0)? == 0.0, "X")),
    ("y-norm-vanishes-on-free-wave", |fx| ensure(fx.ctx.y_norm(&fx.mode(5, &[3, 4]), 4.0)? < 1e-12, "Y")),
    ("z-norm-homogeneous", |fx| {
        let u = EnsembleSpec::new(8, 3).field(&fx.grid, &SymbolSpec::Shell { lambda: 4.0 }, 0)?;
        let mut v = u.clone();
        v.scale(-2.5);
        close(fx.ctx.z_norm(&v, 4.0)?, 2.5 * fx.ctx.z_norm(&u, 4.0)?, 1e-12, "Z")
    }),
    ("f-norm-of-free-wave-is-energy", |fx| {
        let u = fx.mode(5, &[3, 4]);
        close(fx.ctx.f_lambda_norm(&u, 4.0)?, mixed_norm(&fx.ctx.shell_projection(&u, 4.0)?, f64::INFINITY, 2.0)?, 1e-12, "F")
    }),
    ("fs-norm-single-shell", |fx| {
        let u = fx.mode(5, &[3, 4]);
        close(fx.ctx.fs_norm(&u, 1.5)?, 4f64.powf(1.5) * fx.ctx.f_lambda_norm(&u, 4.0)?, 1e-12, "F^s")
    }),
    ("besov-single-mode", |fx| {
        let f = fx.spatial_mode(&[3, 0]);
        let g = SpatialField::zeros(&fx.grid, SpatialRep::Fourier);
        close(fx.ctx.besov_data_norm(&f, &g, 1.0)?, 2.0 * f.l2_norm(), 1e-12, "B")
    }),
    ("propagate-plane-waves", |fx| {
        let axis = TimeAxis::forward(&fx.grid);
        let zero = SpatialField::zeros(&fx.grid, SpatialRep::Fourier);
        let f = fx.spatial_mode(&[2, 0]);
        let s = fx.grid.lattice().index_of(&[2, 0]).expect("on lattice");
        let om = std::f64::consts::TAU * 2.0;
        let a = propagate(&fx.grid, &f, &zero, &axis)?;
        let b = propagate(&fx.grid, &zero, &f, &axis)?;
        for j in 0..fx.grid.nt {
            let t = axis.time(j);
            ensure((a.field.slice(j)[s].re - (om * t).cos()).abs() < 1e-12, "cos")?;
            ensure((b.field.slice(j)[s].re - (om * t).sin() / om).abs() < 1e-12, "sin")?;
        }
        Ok(())
    }),
    ("duhamel-of-zero", |fx| {
        let st = duhamel_inverse(&SpaceTimeField::zeros(&fx.grid, Rep::SpatialFourier), &TimeAxis::forward(&fx.grid))?;
        ensure(st.field.max_abs() == 0.0 && st.rate.max_abs() == 0.0, "zero")
    }),
    ("box-inverse-pair", |fx| {
        let f = EnsembleSpec::new(8, 4).field(&fx.grid, &SymbolSpec::AboveCone { lambda: 4.0, d: 1.0 }, 0)?;
        let back = xi_inverse(&spectral_box(&f), 0.5)?;
        ensure(back.max_abs_diff(&f)? <= 1e-10 * f.max_abs(), "inverse")
    }),
    ("box-inverse-refuses-cone", |fx| ensure(xi_inverse(&fx.mode(5, &[3, 4]), 0.5).is_err(), "guard")),
    ("trace-bijection", |fx| {
        let u = EnsembleSpec::new(8, 5).field(&fx.grid, &SymbolSpec::Product {
            factors: vec![SymbolSpec::Shell { lambda: 4.0 }, SymbolSpec::HalfSpace { sign: Sign::Plus }],
        }, 0)?;
        let back = trace_reconstruct(&trace_decompose(&u, 4.0, Sign::Plus)?)?.into_rep(Rep::SpacetimeFourier);
        ensure(back.max_abs_diff(&u)? <= 1e-12 * u.max_abs(), "reconstruct")
    }),
    ("solve-zero-data", |fx| {
        let sol = picard_solve(&fx.grid, &[CauchyData::zeros(&fx.grid)], &IterationConfig::default())?;
        ensure(sol.trace.converged && sol.trace.steps.len() == 1, format!("{} steps", sol.trace.steps.len()))
    }),
    ("solve-linear-hook", |fx| {
        let data = CauchyData { f: fx.spatial_mode(&[1, 0]), g: SpatialField::zeros(&fx.grid, SpatialRep::Fourier) };
        let cfg = IterationConfig { linear: true, ..Default::default() };
        let sol = picard_solve(&fx.grid, &[data.clone()], &cfg)?;
        let w = propagate(&fx.grid, &data.f, &data.g, &cfg.axis(&fx.grid))?;
        ensure(sol.trace.converged && sol.states[0].field.max_abs_diff(&w.field)? <= 1e-14, "free wave")
    }),
    ("unit-scale-is-identity", |fx| {
        let u = EnsembleSpec::new(8, 6).field(&fx.grid, &SymbolSpec::Identity, 0)?;
        ensure(scale_transform(&u, 1.0, 1.0)?.max_abs_diff(&u)? == 0.0, "field")?;
        let d = CauchyData { f: fx.spatial_mode(&[1, 2]), g: fx.spatial_mode(&[0, 1]) };
        let e = data_scale(&d, 1.0, 1.0)?;
        ensure(e.f.sub(&d.f)?.l2_norm() == 0.0 && e.g.sub(&d.g)?.l2_norm() == 0.0, "data")
    }),
    ("strichartz-energy-pair", |fx| {
        let r = strichartz_ratio(&fx.grid, f64::INFINITY, 2.0, 2.0, &EnsembleSpec::new(8, 7))?;
        ensure(r.ratios.iter().all(|x| (x - 1.0).abs() < 1e-12), "ratio 1")
    }),
    ("local-strichartz-single-sector", |fx| {
        let e = EnsembleSpec::new(8, 8).localized(SymbolSpec::Block { lambda: 4.0, delta: 4.0, sector: 0 });
        let a = local_strichartz_ratio(&fx.grid, 4.0, 1.0, &e, LocalStrichartzMode::SingleSector)?;
        ensure(a.ratios.iter().all(|x| x.is_finite()), "finite")
    }),
    ("angular-reconstruction-contractive", |fx| {
        let [x, y] = angular_reconstruction_ratio(&fx.ctx, 4.0, 2.0, &EnsembleSpec::new(8, 9))?;
        ensure(x.max <= 1.0 + 1e-10 && y.max <= 1.0 + 1e-10, format!("{} {}", x.max, y.max))
    }),
    ("free-wave-energy-ratio", |fx| {
        let [shell, _] = energy_ratio(&fx.ctx, 1.0, &EnsembleSpec::new(8, 10))?;
        ensure(shell.ratios.iter().all(|x| (x - 1.0).abs() < 1e-12), "ratio 1")
    }),
    ("wide-lemma-rejects-large-d", |_| {
        let cfg = SupportCheckConfig::new(Lemma::Wide, 2, 64.0, 8.0, 8.0, 0.125, CheckMode::Exhaustive);
        ensure(matches!(bilinear_support_check(&cfg), Err(Error::Precondition(_))), "precondition")
    }),
    ("product-zero-input-skipped", |fx| {
        let cfg = ProductConfig { kind: ProductKind::HlA, lambda: 8.0, mu: 1.0, c: 0.125, ensemble: EnsembleSpec::new(8, 0) };
        let zero = SpaceTimeField::zeros(&fx.grid, Rep::SpacetimeFourier);
        ensure(product_sides(&fx.ctx, &cfg, &fx.mode(0, &[1, 0]), &zero)?.1 == 0.0, "rhs")
    }),
];

/// Runs every check on the default `n = 2` grid.
pub fn run_selftest() -> Result<Vec<SelfTestOutcome>> {
    run_selftest_on(&GridSpec::new(2, 16, 1.0, 16, 1.0)?)
}

pub fn run_selftest_on(grid: &GridSpec) -> Result<Vec<SelfTestOutcome>> {
    if grid.dim != 2 {
        return Err(Error::UnsupportedDimension { dim: grid.dim, reason: "the self-test fixtures are two-dimensional".into() });
    }
    // Fixture modes are given in integer frequencies on the unit cell.
    if grid.length != 1.0 || grid.period != 1.0 || grid.nx < 16 || grid.nt < 16 {
        return Err(Error::Precondition(format!(
            "self-test needs L = T = 1 and N_x, N_t >= 16 (got L = {}, T = {}, N_x = {}, N_t = {})",
            grid.length, grid.period, grid.nx, grid.nt
        )));
    }
    let fx = Fixture {
        grid: grid.clone(),
        ctx: NormContext::new(grid, SchematicParams::default())?,
        cut: Cutoffs::sharp(grid)?,
    };
    Ok(CHECKS
        .iter()
        .map(|(name, f)| {
            let r = f(&fx);
            SelfTestOutcome {
                name: name.to_string(),
                passed: r.is_ok(),
                detail: r.err().map(|e| e.to_string()).unwrap_or_default(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    #[test]
    fn default_selftest_passes() {
        let out = super::run_selftest().unwrap();
        let bad: Vec<_> = out.iter().filter(|o| !o.passed).collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn non_unit_cell_is_refused() {
        let g = crate::grid::GridSpec::new(2, 16, 1.0, 32, 2.0).unwrap();
        assert!(matches!(super::run_selftest_on(&g), Err(crate::error::Error::Precondition(_))));
    }
}

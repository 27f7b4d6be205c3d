use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{CheckStatus, EnsembleSpec, EstimateParams, EstimateReport};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Rep, SpaceTimeField};
use crate::multipliers::SymbolSpec;
use crate::spaces::{box_symbol, NormContext, PointClass, SchematicParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FOracleConfig {
    pub grid: GridSpec,
    pub lambda: f64,
    pub ensemble: EnsembleSpec,
    pub max_iterations: usize,
    /// Stop once the duality gap falls below this fraction of the primal value.
    pub gap_tol: f64,
}

impl FOracleConfig {
    pub fn tiny(seed: u64) -> Result<Self> {
        Ok(FOracleConfig {
            grid: GridSpec::new(1, 8, 1.0, 8, 1.0)?,
            lambda: 2.0,
            ensemble: EnsembleSpec::new(100, seed),
            max_iterations: 200_000,
            gap_tol: 1e-9,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FOracleResult {
    pub energy: f64,
    /// Best primal value of `inf_v X(v) + Y(u - v)`.
    pub primal: f64,
    /// Certified lower bound on the infimum.
    pub dual: f64,
    pub iterations: usize,
    /// `max(energy, primal)`.
    pub oracle: f64,
    /// Per-shell minimum `max(energy, sum_d min(X_d, Y_d))`.
    pub proxy: f64,
}

/// Sparse description of the split problem on one shell.
struct Split {
    nt: usize,
    nx: usize,
    /// `(j, s, box, band)` per unknown.
    pts: Vec<(usize, usize, f64, usize)>,
    alpha: Vec<f64>,
    beta: f64,
    /// `e^{2 pi i j t / N_t} / N_t^{1/2}` indexed `t * nt + j`.
    tw: Vec<Complex64>,
}

impl Split {
    fn new(ctx: &NormContext, lambda: f64) -> Result<Self> {
        let grid = ctx.grid();
        let li = ctx
            .lambdas()
            .iter()
            .position(|l| l.value() == lambda)
            .ok_or_else(|| Error::Config(format!("lambda = {lambda} is not a resolvable shell")))?;
        let s_len = ctx.lattice().len();
        let mut pts = Vec::new();
        for j in 0..grid.nt {
            for s in 0..s_len {
                if let Some(PointClass { shell, band: Some(b) }) = ctx.classify(j, s) {
                    if shell == li {
                        pts.push((j, s, box_symbol(grid.tau(j), ctx.lattice().norm2(s)), b));
                    }
                }
            }
        }
        let meas = grid.dt() * grid.cell_volume();
        let alpha = ctx.cone_shells().iter().map(|d| (d.value() * meas).sqrt()).collect();
        let beta = grid.dt() * grid.cell_volume().sqrt() / lambda;
        let nt = grid.nt;
        let tw = (0..nt * nt)
            .map(|i| Complex64::from_polar(1.0 / (nt as f64).sqrt(), TAU * ((i / nt) * (i % nt)) as f64 / nt as f64))
            .collect();
        Ok(Split { nt, nx: s_len, pts, alpha, beta, tw })
    }

    /// `(K v)_{t,s}`.
    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (p, &(j, s, bx, _)) in self.pts.iter().enumerate() {
            let a = v[p] * bx;
            for t in 0..self.nt {
                out[t * self.nx + s] += a * self.tw[t * self.nt + j];
            }
        }
    }

    fn adjoint(&self, y: &[Complex64], out: &mut [Complex64]) {
        for (p, &(j, s, bx, _)) in self.pts.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..self.nt {
                acc += y[t * self.nx + s] * self.tw[t * self.nt + j].conj();
            }
            out[p] = acc * bx;
        }
    }

    fn band_norms(&self, v: &[Complex64]) -> Vec<f64> {
        let mut e = vec![0.0; self.alpha.len()];
        for (p, &(_, _, _, b)) in self.pts.iter().enumerate() {
            e[b] += v[p].norm_sqr();
        }
        e.into_iter().map(f64::sqrt).collect()
    }

    fn time_norms(&self, z: &[Complex64]) -> Vec<f64> {
        z.chunks(self.nx).map(|r| r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()).collect()
    }

    fn primal(&self, u: &[Complex64], v: &[Complex64], buf: &mut [Complex64]) -> f64 {
        let x: f64 = self.band_norms(v).iter().zip(&self.alpha).map(|(n, a)| a * n).sum();
        let r: Vec<Complex64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        self.apply(&r, buf);
        x + self.beta * self.time_norms(buf).iter().sum::<f64>()
    }

    /// Lower bound `-Re <y', K u>` after scaling `y` into the dual feasible set.
    fn dual(&self, y: &[Complex64], ku: &[Complex64], buf: &mut [Complex64]) -> f64 {
        self.adjoint(y, buf);
        let mut scale: f64 = 1.0;
        for (n, a) in self.band_norms(&buf[..self.pts.len()]).iter().zip(&self.alpha) {
            if *n > *a {
                scale = scale.min(a / n);
            }
        }
        for n in self.time_norms(y) {
            if n > self.beta {
                scale = scale.min(self.beta / n);
            }
        }
        -scale * y.iter().zip(ku).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
    }

    /// Primal-dual iteration for `min_v sum_d alpha_d ||v_d|| + beta sum_t ||K_t (u - v)||`.
    fn solve(&self, u: &[Complex64], max_iter: usize, gap_tol: f64) -> (f64, f64, usize) {
        let np = self.pts.len();
        let nz = self.nt * self.nx;
        if np == 0 {
            return (0.0, 0.0, 0);
        }
        let knorm = self.pts.iter().map(|p| p.2.abs()).fold(0.0, f64::max);
        let step = 0.99 / knorm;
        let mut ku = vec![Complex64::new(0.0, 0.0); nz];
        self.apply(u, &mut ku);
        let mut v = u.to_vec();
        let mut y = vec![Complex64::new(0.0, 0.0); nz];
        let mut kty = vec![Complex64::new(0.0, 0.0); nz.max(np)];
        let mut kv = vec![Complex64::new(0.0, 0.0); nz];
        let mut scratch = vec![Complex64::new(0.0, 0.0); nz.max(np)];
        let mut best_p = self.primal(u, &v, &mut scratch);
        let mut best_d = 0.0f64;
        let mut it = 0;
        while it < max_iter {
            it += 1;
            self.adjoint(&y, &mut kty);
            let mut vn: Vec<Complex64> = v.iter().zip(&kty).map(|(a, b)| a - step * b).collect();
            let norms = self.band_norms(&vn);
            for (p, &(_, _, _, b)) in self.pts.iter().enumerate() {
                let n = norms[b];
                let f = if n > 0.0 { (1.0 - step * self.alpha[b] / n).max(0.0) } else { 0.0 };
                vn[p] *= f;
            }
            let bar: Vec<Complex64> = vn.iter().zip(&v).map(|(a, b)| 2.0 * a - b).collect();
            v = vn;
            self.apply(&bar, &mut kv);
            for i in 0..nz {
                y[i] += step * (kv[i] - ku[i]);
            }
            for row in y.chunks_mut(self.nx) {
                let n = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if n > self.beta {
                    let f = self.beta / n;
                    row.iter_mut().for_each(|c| *c *= f);
                }
            }
            if it % 200 == 0 || it == max_iter {
                best_p = best_p.min(self.primal(u, &v, &mut scratch));
                best_d = best_d.max(self.dual(&y, &ku, &mut scratch));
                if best_p - best_d <= gap_tol * best_p {
                    break;
                }
            }
        }
        (best_p, best_d, it)
    }
}

/// Brute-force `F_lambda` by convex minimization over all splittings `u = v + (u - v)`.
pub fn f_norm_oracle(ctx: &NormContext, u: &SpaceTimeField, lambda: f64, cfg: &FOracleConfig) -> Result<FOracleResult> {
    let split = Split::new(ctx, lambda)?;
    let spec = u.to_rep(Rep::SpacetimeFourier);
    let coeffs: Vec<Complex64> = split.pts.iter().map(|&(j, s, _, _)| spec.slice(j)[s]).collect();
    let (primal, dual, iterations) = split.solve(&coeffs, cfg.max_iterations, cfg.gap_tol);
    let energy = ctx.energy_norm(u, lambda)?;
    Ok(FOracleResult {
        energy,
        primal,
        dual,
        iterations,
        oracle: energy.max(primal),
        proxy: ctx.f_lambda_norm(u, lambda)?,
    })
}

/// Proxy over oracle on a seeded ensemble of shell-localized fields.
pub fn f_proxy_fidelity(cfg: &FOracleConfig) -> Result<(EstimateReport, Vec<FOracleResult>)> {
    cfg.ensemble.validate()?;
    let ctx = NormContext::new(&cfg.grid, SchematicParams::default())?;
    let results = (0..cfg.ensemble.count)
        .into_par_iter()
        .map(|k| {
            let u = cfg.ensemble.field(&cfg.grid, &SymbolSpec::Shell { lambda: cfg.lambda }, k)?;
            f_norm_oracle(&ctx, &u, cfg.lambda, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let params = EstimateParams { n: cfg.grid.dim, lambda: Some(cfg.lambda), ..Default::default() };
    let mut rep = EstimateReport::from_ratios(
        "f-proxy-fidelity",
        params,
        &cfg.grid,
        results.iter().map(|r| (r.proxy, r.oracle)),
    )?
    .with_ceiling(2.0);
    if results.iter().any(|r| r.proxy < r.energy.max(r.dual) * (1.0 - 1e-9)) {
        rep.status = CheckStatus::Fail;
    }
    Ok((rep, results))
}

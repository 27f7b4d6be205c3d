//! Convolution-kernel bounds for frequency cutoffs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::symbol::{on_cone, Symbol};
use crate::error::{Error, Result};
use crate::grid::{transform_axes, transform_line, Direction, FreqPoint, GridSpec, MAX_DIM};

/// Which multiplier built from the symbol is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelVariant {
    /// The symbol itself.
    Plain,
    /// `lambda^{-1} grad`, reported as the largest component norm.
    Gradient { lambda: f64 },
    /// `(lambda d) / (4 pi^2 (tau^2 - |xi|^2))` times the symbol.
    Resolvent { lambda: f64, d: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Torus period as a multiple of the inverse of the narrowest support width.
    pub oversample: f64,
    pub max_points: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { oversample: 4.0, max_points: 1 << 24 }
    }
}

/// Work grid for a kernel together with the frequency it is centered at.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrid {
    pub grid: GridSpec,
    pub center_tau: f64,
    pub center_xi: [f64; MAX_DIM],
}

impl KernelGrid {
    /// Plain grid centered at the frequency origin.
    pub fn centered(grid: GridSpec) -> Self {
        KernelGrid { grid, center_tau: 0.0, center_xi: [0.0; MAX_DIM] }
    }
}

fn next_pow2(x: f64) -> usize {
    (x.max(2.0).ceil() as usize).next_power_of_two()
}

/// Lattice whose period is `oversample / min_width` and whose window covers the support box.
pub fn kernel_grid_for(symbol: &Symbol, opts: &KernelOptions) -> Result<KernelGrid> {
    let b = symbol.support_box();
    let bounded = b.tau.0.is_finite()
        && b.tau.1.is_finite()
        && b.xi.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite());
    if !bounded || !b.min_width.is_finite() {
        return Err(Error::Domain("symbol support is unbounded; no finite kernel grid".into()));
    }
    let period = opts.oversample / b.min_width;
    let snap = |v: f64| (v * period).round() / period;
    let ct = snap(0.5 * (b.tau.0 + b.tau.1));
    let mut cx = [0.0; MAX_DIM];
    let mut hx = 0.0f64;
    for (i, (lo, hi)) in b.xi.iter().enumerate() {
        cx[i] = snap(0.5 * (lo + hi));
        hx = hx.max((hi - cx[i]).abs()).max((lo - cx[i]).abs());
    }
    let ht = (b.tau.1 - ct).abs().max((b.tau.0 - ct).abs());
    let nt = next_pow2(2.0 * (ht * period).ceil() + 4.0);
    let nx = next_pow2(2.0 * (hx * period).ceil() + 4.0);
    let grid = GridSpec::with_budget(symbol.dim(), nx, period, nt, period, opts.max_points)?;
    Ok(KernelGrid { grid, center_tau: ct, center_xi: cx })
}

fn spectrum(symbol: &Symbol, kg: &KernelGrid, weight: impl Fn(&FreqPoint) -> Result<Complex64>) -> Result<Vec<Complex64>> {
    let g = &kg.grid;
    let n = g.dim;
    let lat = g.lattice();
    let mut out = Vec::with_capacity(g.total_len());
    let mut xi = [0.0; MAX_DIM];
    for j in 0..g.nt {
        let tau = kg.center_tau + g.tau(j);
        for s in 0..lat.len() {
            let k = lat.xi(s);
            for a in 0..n {
                xi[a] = kg.center_xi[a] + k[a];
            }
            let p = FreqPoint::new(tau, &xi[..n]);
            let v = symbol.eval(&p);
            out.push(if v == 0.0 { Complex64::new(0.0, 0.0) } else { weight(&p)? * v });
        }
    }
    Ok(out)
}

fn l1_of_inverse(mut data: Vec<Complex64>, g: &GridSpec) -> f64 {
    transform_axes(&mut data, &g.spacetime_dims(), 0..g.dim + 1, Direction::Inverse);
    data.iter().map(|c| c.norm()).sum::<f64>() / (g.total_len() as f64).sqrt()
}

fn resolvent_factor(lambda: f64, d: f64) -> impl Fn(&FreqPoint) -> Result<Complex64> {
    move |p: &FreqPoint| {
        let xi2: f64 = p.xi().iter().map(|v| v * v).sum();
        if on_cone(p.tau * p.tau, xi2) {
            return Err(Error::ConeContact { tau: p.tau, xi: xi2.sqrt() });
        }
        Ok(Complex64::new(lambda * d / (4.0 * PI * PI * (p.tau * p.tau - xi2)), 0.0))
    }
}

/// `||K||_{L^1}` of the kernel on a prescribed lattice, without checking the profile.
pub fn lattice_kernel_l1_norm(symbol: &Symbol, variant: KernelVariant, kg: &KernelGrid) -> Result<f64> {
    if symbol.dim() != kg.grid.dim {
        return Err(Error::Contract("symbol and kernel grid differ in dimension".into()));
    }
    let g = &kg.grid;
    match variant {
        KernelVariant::Plain => {
            let spec = spectrum(symbol, kg, |_| Ok(Complex64::new(1.0, 0.0)))?;
            Ok(l1_of_inverse(spec, g))
        }
        KernelVariant::Resolvent { lambda, d } => {
            let spec = spectrum(symbol, kg, resolvent_factor(lambda, d))?;
            Ok(l1_of_inverse(spec, g))
        }
        KernelVariant::Gradient { lambda } => {
            let mut worst = 0.0f64;
            for a in 0..g.dim {
                let spec = spectrum(symbol, kg, |p| Ok(Complex64::new(0.0, 2.0 * PI * p.xi[a] / lambda)))?;
                worst = worst.max(l1_of_inverse(spec, g));
            }
            Ok(worst)
        }
    }
}

/// `||K||_{L^1(R^{1+n})}` for a smooth cutoff, on an automatically sized lattice.
pub fn kernel_l1_norm(symbol: &Symbol, variant: KernelVariant) -> Result<f64> {
    kernel_l1_norm_with(symbol, variant, &KernelOptions::default())
}

pub fn kernel_l1_norm_with(symbol: &Symbol, variant: KernelVariant, opts: &KernelOptions) -> Result<f64> {
    if symbol.profile().is_sharp() {
        return Err(Error::UnboundedKernel(
            "sharp cutoffs have kernels whose L^1 norm grows with the grid".into(),
        ));
    }
    let kg = kernel_grid_for(symbol, opts)?;
    lattice_kernel_l1_norm(symbol, variant, &kg)
}

/// `int sup_xi |K(t, xi)| dt` for the partial (time-only) kernel on a prescribed lattice.
pub fn lattice_l1tau_linf(symbol: &Symbol, kg: &KernelGrid) -> Result<f64> {
    let g = &kg.grid;
    let n = g.dim;
    let lat = g.lattice();
    let mut sup = vec![0.0f64; g.nt];
    let mut line = vec![Complex64::new(0.0, 0.0); g.nt];
    let mut xi = [0.0; MAX_DIM];
    for s in 0..lat.len() {
        let k = lat.xi(s);
        for a in 0..n {
            xi[a] = kg.center_xi[a] + k[a];
        }
        let mut any = false;
        for (j, c) in line.iter_mut().enumerate() {
            let v = symbol.eval(&FreqPoint::new(kg.center_tau + g.tau(j), &xi[..n]));
            any |= v != 0.0;
            *c = Complex64::new(v, 0.0);
        }
        if !any {
            continue;
        }
        transform_line(&mut line, Direction::Inverse);
        for (m, c) in sup.iter_mut().zip(&line) {
            *m = m.max(c.norm());
        }
    }
    Ok(sup.iter().sum::<f64>() / (g.nt as f64).sqrt())
}

/// `||K^hat||_{L^1_t L^inf_xi}` bound behind the near-cone multiplier estimates.
pub fn l1tau_linf_bound(symbol: &Symbol) -> Result<f64> {
    if symbol.profile().is_sharp() && symbol.depends_on_tau() {
        return Err(Error::UnboundedKernel(
            "sharp cutoffs in tau have time kernels outside L^1".into(),
        ));
    }
    let opts = KernelOptions::default();
    let kg = if symbol.depends_on_tau() {
        kernel_grid_for(symbol, &opts)?
    } else {
        let b = symbol.support_box();
        let r = b.xi.iter().map(|(lo, hi)| lo.abs().max(hi.abs())).fold(0.0, f64::max);
        if !r.is_finite() {
            return Err(Error::Domain("symbol support is unbounded in xi".into()));
        }
        let width = if b.min_width.is_finite() { b.min_width } else { r };
        let period = opts.oversample / width;
        let nx = next_pow2(2.0 * (r * period).ceil() + 4.0);
        KernelGrid::centered(GridSpec::with_budget(symbol.dim(), nx, period, 8, 1.0, opts.max_points)?)
    };
    lattice_l1tau_linf(symbol, &kg)
}

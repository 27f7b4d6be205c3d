//! Picard iteration for small-data quadratic wave systems and scattering data.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{uncentered, GridSpec, Rep, SpaceTimeField, SpatialField, SpatialRep};
use crate::spaces::{sobolev_norm, NormContext, SchematicParams};
use crate::verify::EnsembleSpec;
use crate::wave::{duhamel_inverse, propagate, spectral_box, spectral_time_derivative, TimeAxis, WaveState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    /// `box phi = phi d phi`.
    Scalar,
    /// `box phi = (d_t phi)^2 + |grad phi|^2`.
    WaveMap,
    /// `box A = A dA + A^3`.
    YangMills,
    /// `box u = A du`, `box A = (d_t u)^2 + |grad u|^2`.
    MaxwellDirac,
}

/// Spatial derivative used in first-order terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Derivative {
    Axis(usize),
    /// `sum_j d_j`.
    Gradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dealias {
    TwoThirds,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schematic {
    pub system: System,
    pub derivative: Derivative,
}

impl Default for Schematic {
    fn default() -> Self {
        Schematic { system: System::Scalar, derivative: Derivative::Axis(0) }
    }
}

impl Schematic {
    pub fn components(&self) -> usize {
        match self.system {
            System::MaxwellDirac => 2,
            _ => 1,
        }
    }

    /// Scaling exponents making the system invariant under `phi -> lambda^sigma phi(lambda .)`.
    pub fn sigma(&self) -> Vec<f64> {
        match self.system {
            System::Scalar | System::YangMills => vec![1.0],
            System::WaveMap => vec![0.0],
            System::MaxwellDirac => vec![0.5, 1.0],
        }
    }

    /// `s_c = n/2 - sigma` per component.
    pub fn critical_exponents(&self, dim: usize) -> Vec<f64> {
        self.sigma().into_iter().map(|s| dim as f64 / 2.0 - s).collect()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Derivative::Axis(a) = self.derivative {
            if a >= dim {
                return Err(Error::Config(format!("derivative axis {a} out of range for n = {dim}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    pub params: SchematicParams,
    pub schematic: Schematic,
    pub epsilon0: f64,
    pub max_iter: usize,
    /// Absolute tolerance on the `G^s` norm of successive differences.
    pub contraction_tol: f64,
    pub dealias: Dealias,
    /// Iterate on `[-T/2, T/2)` with the data at the middle sample.
    pub two_sided: bool,
    /// Source set to zero for `t > source_cutoff`.
    pub source_cutoff: Option<f64>,
    /// Solution norms include the angular `Z` part (requires n >= 2).
    pub angular: bool,
    /// Drop the nonlinearity (iterates reduce to the free wave).
    pub linear: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            params: SchematicParams::default(),
            schematic: Schematic::default(),
            epsilon0: 1e-3,
            max_iter: 12,
            contraction_tol: 1e-14,
            dealias: Dealias::TwoThirds,
            two_sided: false,
            source_cutoff: None,
            angular: true,
            linear: false,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.epsilon0 > 0.0) {
            return Err(Error::Config("epsilon0 must be positive".into()));
        }
        if self.max_iter < 2 {
            return Err(Error::Config("max_iter must be at least 2".into()));
        }
        if !(self.contraction_tol > 0.0) {
            return Err(Error::Config("contraction_tol must be positive".into()));
        }
        self.schematic.validate(grid.dim)
    }

    pub fn axis(&self, grid: &GridSpec) -> TimeAxis {
        if self.two_sided {
            TimeAxis::two_sided(grid)
        } else {
            TimeAxis::forward(grid)
        }
    }
}

/// Cauchy data of one component.
#[derive(Clone, Debug)]
pub struct CauchyData {
    pub f: SpatialField,
    pub g: SpatialField,
}

impl CauchyData {
    pub fn zeros(grid: &GridSpec) -> Self {
        CauchyData {
            f: SpatialField::zeros(grid, SpatialRep::Fourier),
            g: SpatialField::zeros(grid, SpatialRep::Fourier),
        }
    }

    /// Real random data with `f` and `g` supported on `lo <= |xi| < hi`; sample `k` uses streams `2k, 2k+1`.
    pub fn random_band(grid: &GridSpec, ens: &EnsembleSpec, lo: f64, hi: f64, k: usize) -> Result<Self> {
        let lat = grid.lattice();
        let n = grid.dim;
        let real = |f: SpatialField| -> Result<SpatialField> {
            let a = f.data();
            let data = (0..lat.len())
                .map(|s| {
                    let neg: Vec<i64> = lat.digits(s)[..n].iter().map(|k| -k).collect();
                    lat.index_of(&neg).map_or(Complex64::new(0.0, 0.0), |sn| 0.5 * (a[s] + a[sn].conj()))
                })
                .collect();
            SpatialField::from_data(grid, SpatialRep::Fourier, data)
        };
        Ok(CauchyData {
            f: real(ens.spatial_band(grid, lo, hi, 2 * k)?)?,
            g: real(ens.spatial_band(grid, lo, hi, 2 * k + 1)?)?,
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.f.scale(Complex64::new(a, 0.0));
        out.g.scale(Complex64::new(a, 0.0));
        out
    }
}

fn mask_of(grid: &GridSpec, dealias: Dealias) -> Option<Vec<bool>> {
    match dealias {
        Dealias::TwoThirds => {
            let lat = grid.lattice();
            Some((0..lat.len()).map(|s| lat.dealiased(s)).collect())
        }
        Dealias::None => None,
    }
}

fn apply_mask(u: &mut SpaceTimeField, mask: Option<&[bool]>) {
    if let Some(m) = mask {
        let s_len = m.len();
        for block in u.data_mut().chunks_mut(s_len) {
            for (c, keep) in block.iter_mut().zip(m) {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
}

/// `d_a u` for a field with spatial Fourier representation.
fn spatial_derivative(u: &SpaceTimeField, axis: Derivative) -> SpaceTimeField {
    let g = u.grid().clone();
    let lat = g.lattice();
    let s_len = lat.len();
    let weights: Vec<Complex64> = (0..s_len)
        .map(|s| {
            let xi = lat.xi(s);
            let k = match axis {
                Derivative::Axis(a) => xi[a],
                Derivative::Gradient => xi[..g.dim].iter().sum(),
            };
            Complex64::new(0.0, 2.0 * PI * k)
        })
        .collect();
    let mut out = u.clone();
    for block in out.data_mut().chunks_mut(s_len) {
        for (c, w) in block.iter_mut().zip(&weights) {
            *c *= w;
        }
    }
    out
}

/// Physical values of a masked copy.
fn physical(u: &SpaceTimeField, mask: Option<&[bool]>) -> SpaceTimeField {
    let mut v = u.to_rep(Rep::SpatialFourier);
    apply_mask(&mut v, mask);
    v.into_rep(Rep::Physical)
}

fn mul_into(acc: &mut SpaceTimeField, a: &SpaceTimeField, b: &SpaceTimeField) {
    for ((o, x), y) in acc.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *o += x * y;
    }
}

/// `|Du|^2 = (d_t u)^2 + sum_j (d_j u)^2` (no conjugation, so the map stays quadratic).
fn gradient_square(state: &WaveState, mask: Option<&[bool]>, acc: &mut SpaceTimeField) {
    let ut = physical(&state.rate, mask);
    mul_into(acc, &ut, &ut);
    drop(ut);
    for a in 0..state.field.grid().dim {
        let d = physical(&spatial_derivative(&state.field, Derivative::Axis(a)), mask);
        mul_into(acc, &d, &d);
    }
}

/// Nonlinearity with the time derivative supplied by each state.
pub fn nonlinearity_with_rate(
    states: &[WaveState],
    schematic: &Schematic,
    dealias: Dealias,
) -> Result<Vec<SpaceTimeField>> {
    if states.len() != schematic.components() {
        return Err(Error::Config(format!(
            "{:?} has {} components, got {}",
            schematic.system,
            schematic.components(),
            states.len()
        )));
    }
    let grid = states[0].field.grid().clone();
    schematic.validate(grid.dim)?;
    let mask = mask_of(&grid, dealias);
    let mask = mask.as_deref();
    let zero = || SpaceTimeField::zeros(&grid, Rep::Physical);
    let mut out = match schematic.system {
        System::Scalar => {
            let p = physical(&states[0].field, mask);
            let d = physical(&spatial_derivative(&states[0].field, schematic.derivative), mask);
            let mut acc = zero();
            mul_into(&mut acc, &p, &d);
            vec![acc]
        }
        System::WaveMap => {
            let mut acc = zero();
            gradient_square(&states[0], mask, &mut acc);
            vec![acc]
        }
        System::YangMills => {
            let p = physical(&states[0].field, mask);
            let d = physical(&spatial_derivative(&states[0].field, schematic.derivative), mask);
            let mut acc = zero();
            for ((o, a), da) in acc.data_mut().iter_mut().zip(p.data()).zip(d.data()) {
                *o = a * da + a * a * a;
            }
            vec![acc]
        }
        System::MaxwellDirac => {
            let a = physical(&states[1].field, mask);
            let du = physical(&spatial_derivative(&states[0].field, schematic.derivative), mask);
            let mut nu = zero();
            mul_into(&mut nu, &a, &du);
            drop((a, du));
            let mut na = zero();
            gradient_square(&states[0], mask, &mut na);
            vec![nu, na]
        }
    };
    for f in out.iter_mut() {
        f.convert(Rep::SpatialFourier);
        apply_mask(f, mask);
    }
    Ok(out)
}

/// Nonlinearity of time-periodic fields, with spectral `d_t`.
pub fn nonlinearity(fields: &[SpaceTimeField], schematic: &Schematic, dealias: Dealias) -> Result<Vec<SpaceTimeField>> {
    let states: Vec<WaveState> = fields
        .iter()
        .map(|u| WaveState {
            field: u.to_rep(Rep::SpatialFourier),
            rate: spectral_time_derivative(u).into_rep(Rep::SpatialFourier),
        })
        .collect();
    nonlinearity_with_rate(&states, schematic, dealias)
}

/// `box phi - N(phi)` with periodic spectral `box` and `d_t`, in spatial Fourier representation.
pub fn periodic_residual(fields: &[SpaceTimeField], schematic: &Schematic, dealias: Dealias) -> Result<Vec<SpaceTimeField>> {
    let n = nonlinearity(fields, schematic, dealias)?;
    fields
        .iter()
        .zip(n)
        .map(|(u, nu)| spectral_box(u).into_rep(Rep::SpatialFourier).sub(&nu))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// `G^{s_c}` norm of the new iterate (summed over components).
    pub iterate_norm: f64,
    /// `G^{s_c}` norm of the new iterate minus the previous one.
    pub difference_norm: f64,
    /// Ratio to the previous difference norm.
    pub contraction: Option<f64>,
    /// `||box phi_k - N(phi_k)||_{L^2}` for the previous iterate, with the finite-difference `box`.
    pub residual: f64,
    /// `t -> ||(phi, d_t phi)(t)||` in `B^{s_c,1} x B^{s_c-1,1}`.
    pub besov_profile: Vec<f64>,
    /// `t -> ||(phi, d_t phi)(t)||` in `H^{s_c+1} x H^{s_c}`.
    pub sobolev_profile: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationTrace {
    pub grid: GridSpec,
    pub config: IterationConfig,
    pub critical_exponents: Vec<f64>,
    pub data_besov: f64,
    pub data_sobolev: f64,
    pub above_smallness: bool,
    pub times: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub converged: bool,
    pub diverged: bool,
    pub scattering: Option<ScatteringSummary>,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&StepRecord> {
        self.steps.last()
    }

    /// `sup_t` Besov norm of the final iterate over the data norm.
    pub fn continuity_constant(&self) -> Option<f64> {
        let p = &self.last()?.besov_profile;
        Some(p.iter().cloned().fold(0.0, f64::max) / self.data_besov)
    }

    /// `sup_t` Sobolev norm at `s_c + 1` of the final iterate over the data norm.
    pub fn persistence_constant(&self) -> Option<f64> {
        let p = &self.last()?.sobolev_profile;
        Some(p.iter().cloned().fold(0.0, f64::max) / self.data_sobolev)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per step: step, iterate_norm, difference_norm, contraction, residual, sup_besov, sup_sobolev.
    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["step", "iterate_norm", "difference_norm", "contraction", "residual", "sup_besov", "sup_sobolev"])?;
        for s in &self.steps {
            let sup = |p: &[f64]| p.iter().cloned().fold(0.0, f64::max);
            wr.write_record([
                s.step.to_string(),
                format!("{:e}", s.iterate_norm),
                format!("{:e}", s.difference_norm),
                s.contraction.map(|c| format!("{c:e}")).unwrap_or_default(),
                format!("{:e}", s.residual),
                format!("{:e}", sup(&s.besov_profile)),
                format!("{:e}", sup(&s.sobolev_profile)),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Result of [`picard_solve`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub trace: IterationTrace,
    pub data: Vec<CauchyData>,
    pub free: Vec<WaveState>,
    pub states: Vec<WaveState>,
    /// Source that generated the final iterate.
    pub source: Vec<SpaceTimeField>,
}

fn data_norms(ctx: &NormContext, data: &[CauchyData], sc: &[f64]) -> Result<(f64, f64)> {
    let mut b = 0.0;
    let mut h = 0.0;
    for (d, s) in data.iter().zip(sc) {
        b += ctx.besov_data_norm(&d.f, &d.g, *s)?;
        h += sobolev_norm(&d.f, s + 1.0) + sobolev_norm(&d.g, *s);
    }
    Ok((b, h))
}

fn solution_norm(ctx: &NormContext, fields: &[&SpaceTimeField], sc: &[f64], angular: bool) -> Result<f64> {
    let mut total = 0.0;
    for (u, s) in fields.iter().zip(sc) {
        total += if angular { ctx.gs_norm(u, *s)? } else { ctx.fs_norm(u, *s)? };
    }
    Ok(total)
}

fn profiles(ctx: &NormContext, states: &[WaveState], sc: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nt = ctx.grid().nt;
    let mut b = vec![0.0; nt];
    let mut h = vec![0.0; nt];
    for (st, s) in states.iter().zip(sc) {
        for j in 0..nt {
            let (u, ut) = st.data_at(j)?;
            b[j] += ctx.besov_data_norm(&u, &ut, *s)?;
            h[j] += sobolev_norm(&u, s + 1.0) + sobolev_norm(&ut, *s);
        }
    }
    Ok((b, h))
}

/// Interior `L^2` norm of `fd_box(phi - W) - N(phi)`.
fn fd_residual(states: &[WaveState], free: &[WaveState], source: &[SpaceTimeField]) -> Result<f64> {
    let mut total = 0.0;
    for ((st, w), f) in states.iter().zip(free).zip(source) {
        let (bx, range) = crate::wave::fd_box(&st.field.sub(&w.field)?)?;
        let g = bx.grid().clone();
        let mut sum = 0.0;
        for j in range {
            for (a, b) in bx.slice(j).iter().zip(f.slice(j)) {
                sum += (a - b).norm_sqr();
            }
        }
        total += sum * g.dt() * g.cell_volume();
    }
    Ok(total.sqrt())
}

fn cut_source(src: &mut [SpaceTimeField], axis: &TimeAxis, cutoff: Option<f64>) {
    if let Some(tc) = cutoff {
        for f in src.iter_mut() {
            for j in 0..axis.len {
                if axis.time(j) > tc {
                    f.slice_mut(j).fill(Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}

/// Picard iteration `phi_{k+1} = W(f, g) + box^{-1} N(phi_k)`, starting from the free wave.
pub fn picard_solve(grid: &GridSpec, data: &[CauchyData], config: &IterationConfig) -> Result<Solution> {
    config.validate(grid)?;
    let schem = &config.schematic;
    if data.len() != schem.components() {
        return Err(Error::Config(format!("expected {} data components, got {}", schem.components(), data.len())));
    }
    let angular = config.angular && grid.dim >= 2;
    let ctx = NormContext::new(grid, config.params)?;
    let sc = schem.critical_exponents(grid.dim);
    let (data_besov, data_sobolev) = data_norms(&ctx, data, &sc)?;
    let above = data_besov > config.epsilon0;
    if above {
        log::warn!("data norm {data_besov:e} exceeds epsilon0 = {:e}", config.epsilon0);
    }
    let axis = config.axis(grid);
    let free: Vec<WaveState> = data.iter().map(|d| propagate(grid, &d.f, &d.g, &axis)).collect::<Result<_>>()?;
    let mut states = free.clone();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut source = Vec::new();
    let (mut converged, mut diverged) = (false, false);
    for step in 1..=config.max_iter {
        source = if config.linear {
            (0..free.len()).map(|_| SpaceTimeField::zeros(grid, Rep::SpatialFourier)).collect()
        } else {
            nonlinearity_with_rate(&states, schem, config.dealias)?
        };
        cut_source(&mut source, &axis, config.source_cutoff);
        let residual = fd_residual(&states, &free, &source)?;
        let mut next = Vec::with_capacity(free.len());
        for (w, f) in free.iter().zip(&source) {
            next.push(w.add(&duhamel_inverse(f, &axis)?)?);
        }
        let diffs: Vec<SpaceTimeField> =
            next.iter().zip(&states).map(|(a, b)| a.field.sub(&b.field)).collect::<Result<_>>()?;
        let difference_norm = solution_norm(&ctx, &diffs.iter().collect::<Vec<_>>(), &sc, angular)?;
        drop(diffs);
        let iterate_norm = solution_norm(&ctx, &next.iter().map(|s| &s.field).collect::<Vec<_>>(), &sc, angular)?;
        let (besov_profile, sobolev_profile) = profiles(&ctx, &next, &sc)?;
        let contraction = steps.last().map(|p| difference_norm / p.difference_norm);
        log::info!("step {step}: |phi| = {iterate_norm:e}, |diff| = {difference_norm:e}, residual = {residual:e}");
        states = next;
        steps.push(StepRecord {
            step,
            iterate_norm,
            difference_norm,
            contraction,
            residual,
            besov_profile,
            sobolev_profile,
        });
        if difference_norm <= config.contraction_tol {
            converged = true;
            break;
        }
        let k = steps.len();
        if k >= 3
            && steps[k - 1].difference_norm > steps[k - 2].difference_norm
            && steps[k - 2].difference_norm > steps[k - 3].difference_norm
        {
            diverged = true;
            break;
        }
    }
    let trace = IterationTrace {
        grid: grid.clone(),
        config: config.clone(),
        critical_exponents: sc,
        data_besov,
        data_sobolev,
        above_smallness: above,
        times: (0..grid.nt).map(|j| axis.time(j)).collect(),
        steps,
        converged,
        diverged,
        scattering: None,
    };
    Ok(Solution { trace, data: data.to_vec(), free, states, source })
}

/// Asymptotic free data at the ends of the window.
#[derive(Clone, Debug)]
pub struct ScatteringData {
    pub plus: Vec<CauchyData>,
    pub minus: Vec<CauchyData>,
    /// Grid times and `delta(t) = ||phi(t) - W(f^pm, g^pm)(t)||_{H^1}` summed over components.
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    /// `(2 pi)^{-1} int_t^{T^pm} ||F(s)||_{L^2} ds` (trapezoid).
    pub tail_bound: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSummary {
    pub plus_data_norm: f64,
    pub minus_data_norm: f64,
    /// Over times with a nonzero tail.
    pub max_delta_over_bound: f64,
    pub final_delta: f64,
}

impl ScatteringData {
    pub fn summary(&self, ctx: &NormContext, sc: &[f64]) -> Result<ScatteringSummary> {
        let norm = |d: &[CauchyData]| -> Result<f64> {
            let mut t = 0.0;
            for (c, s) in d.iter().zip(sc) {
                t += ctx.besov_data_norm(&c.f, &c.g, *s)?;
            }
            Ok(t)
        };
        let ratio = self
            .delta
            .iter()
            .zip(&self.tail_bound)
            .filter(|(_, b)| **b > 0.0)
            .map(|(d, b)| d / b)
            .fold(0.0, f64::max);
        Ok(ScatteringSummary {
            plus_data_norm: norm(&self.plus)?,
            minus_data_norm: norm(&self.minus)?,
            max_delta_over_bound: ratio,
            final_delta: *self.delta.last().unwrap_or(&0.0),
        })
    }

    /// `(t, delta, bound)` rows.
    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "delta", "tail_bound"])?;
        for ((t, d), b) in self.times.iter().zip(&self.delta).zip(&self.tail_bound) {
            wr.write_record([format!("{t:e}"), format!("{d:e}"), format!("{b:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Trapezoidal moments `int_0^{T^pm} (cos, sin)(omega s) F(s) ds` over one side of the axis.
fn tail_moments(src: &SpaceTimeField, axis: &TimeAxis, forward: bool) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = src.grid();
    let lat = grid.lattice();
    let s_len = lat.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; s_len];
    let mut b = vec![zero; s_len];
    let idx: Vec<usize> = if forward { (axis.origin..axis.len).collect() } else { (0..=axis.origin).rev().collect() };
    if idx.len() < 2 {
        return (a, b);
    }
    let sigma = if forward { 1.0 } else { -1.0 };
    for (pos, &j) in idx.iter().enumerate() {
        let w = if pos == 0 || pos == idx.len() - 1 { 0.5 } else { 1.0 } * sigma * axis.dt;
        let t = axis.time(j);
        for s in 0..s_len {
            let om = 2.0 * PI * lat.norm(s);
            let (sn, cs) = if om == 0.0 { (t, 1.0) } else { (om * t).sin_cos() };
            let f = src.slice(j)[s] * w;
            a[s] += f * cs;
            b[s] += f * sn;
        }
    }
    (a, b)
}

fn asymptotic_data(d: &CauchyData, src: &SpaceTimeField, axis: &TimeAxis, forward: bool) -> Result<CauchyData> {
    let grid = src.grid();
    let lat = grid.lattice();
    let (a, b) = tail_moments(src, axis, forward);
    let mut f = d.f.to_rep(SpatialRep::Fourier);
    let mut g = d.g.to_rep(SpatialRep::Fourier);
    for s in 0..lat.len() {
        let om = 2.0 * PI * lat.norm(s);
        // u(t) = -(sin(om t) A - cos(om t) B) / om; at om = 0 the kernel is t - s.
        if om == 0.0 {
            f.data_mut()[s] += b[s];
        } else {
            f.data_mut()[s] += b[s] / om;
        }
        g.data_mut()[s] -= a[s];
    }
    Ok(CauchyData { f, g })
}

/// `(f^pm, g^pm)` with `W(f^pm, g^pm) = W(f, g) - int_0^{T^pm} K(t - s) F(s) ds`.
pub fn scattering_data(sol: &Solution) -> Result<ScatteringData> {
    if !sol.trace.converged {
        return Err(Error::Precondition("scattering data needs a converged iteration".into()));
    }
    let grid = &sol.trace.grid;
    let axis = sol.trace.config.axis(grid);
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (d, src) in sol.data.iter().zip(&sol.source) {
        plus.push(asymptotic_data(d, src, &axis, true)?);
        minus.push(if axis.origin > 0 { asymptotic_data(d, src, &axis, false)? } else { d.clone() });
    }
    let mut delta = vec![0.0; grid.nt];
    let mut bound = vec![0.0; grid.nt];
    for (k, st) in sol.states.iter().enumerate() {
        let wp = propagate(grid, &plus[k].f, &plus[k].g, &axis)?;
        let wm = propagate(grid, &minus[k].f, &minus[k].g, &axis)?;
        let norms: Vec<f64> = (0..grid.nt)
            .map(|j| {
                let v: f64 = sol.source[k].slice(j).iter().map(|c| c.norm_sqr()).sum();
                (v * grid.cell_volume()).sqrt()
            })
            .collect();
        for j in 0..grid.nt {
            let w = if j >= axis.origin { &wp } else { &wm };
            let diff = st.field.time_slice(j)?.sub(&w.field.time_slice(j)?)?;
            delta[j] += sobolev_norm(&diff, 1.0);
        }
        // Trapezoidal tails from t_j outward.
        let mut acc = 0.0;
        for j in (axis.origin..grid.nt).rev() {
            if j + 1 < grid.nt {
                acc += 0.5 * axis.dt * (norms[j] + norms[j + 1]);
            }
            bound[j] += acc / (2.0 * PI);
        }
        let mut acc = 0.0;
        for j in 0..axis.origin {
            if j > 0 {
                acc += 0.5 * axis.dt * (norms[j] + norms[j - 1]);
            }
            bound[j] += acc / (2.0 * PI);
        }
    }
    Ok(ScatteringData { plus, minus, times: (0..grid.nt).map(|j| axis.time(j)).collect(), delta, tail_bound: bound })
}

/// Solves and, on convergence, attaches the scattering summary to the trace.
pub fn solve_with_scattering(grid: &GridSpec, data: &[CauchyData], config: &IterationConfig) -> Result<(Solution, Option<ScatteringData>)> {
    let mut sol = picard_solve(grid, data, config)?;
    if !sol.trace.converged {
        return Ok((sol, None));
    }
    let sc = scattering_data(&sol)?;
    let ctx = NormContext::new(grid, config.params)?;
    sol.trace.scattering = Some(sc.summary(&ctx, &sol.trace.critical_exponents)?);
    Ok((sol, Some(sc)))
}

fn check_scale(lambda: f64) -> Result<u32> {
    if !(lambda >= 1.0) || lambda.log2().fract() != 0.0 {
        return Err(Error::Domain(format!("scale {lambda} must be a power of two >= 1")));
    }
    Ok(lambda.log2() as u32)
}

fn remap_axis(k: i64, lambda: i64, n: usize) -> Option<usize> {
    let m = k * lambda;
    if 2 * m.abs() >= n as i64 && m != -(n as i64) / 2 {
        return None;
    }
    uncentered(m, n)
}

/// `lambda^sigma phi(lambda t, lambda x)` by exact regrouping of a time-periodic spectrum.
pub fn scale_transform(u: &SpaceTimeField, lambda: f64, sigma: f64) -> Result<SpaceTimeField> {
    let l = 1i64 << check_scale(lambda)?;
    let grid = u.grid().clone();
    let spec = u.to_rep(Rep::SpacetimeFourier);
    let lat = grid.lattice();
    let s_len = lat.len();
    let tol = 1e-13 * spec.max_abs();
    let amp = lambda.powf(sigma);
    let mut out = SpaceTimeField::zeros(&grid, Rep::SpacetimeFourier);
    for j in 0..grid.nt {
        let jc = crate::grid::centered(j, grid.nt);
        for s in 0..s_len {
            let c = spec.data()[j * s_len + s];
            if c.norm() <= tol {
                continue;
            }
            let range_err = || Error::Range(format!("scale {lambda} pushes mode ({jc}, {:?}) past Nyquist", &lat.digits(s)[..grid.dim]));
            let jm = remap_axis(jc, l, grid.nt).ok_or_else(range_err)?;
            let d = lat.digits(s);
            let mut sm = 0usize;
            for a in 0..grid.dim {
                sm = sm * grid.nx + remap_axis(d[a], l, grid.nx).ok_or_else(range_err)?;
            }
            out.data_mut()[jm * s_len + sm] = c * amp;
        }
    }
    Ok(out.into_rep(u.rep()))
}

fn scale_spatial(f: &SpatialField, lambda: f64, amp: f64) -> Result<SpatialField> {
    let l = 1i64 << check_scale(lambda)?;
    let lat = crate::grid::SpatialLattice::new(f.dim(), f.nx(), f.length());
    let src = f.to_rep(SpatialRep::Fourier);
    let tol = 1e-13 * src.data().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut out = src.clone();
    out.data_mut().fill(Complex64::new(0.0, 0.0));
    for s in 0..lat.len() {
        let c = src.data()[s];
        if c.norm() <= tol {
            continue;
        }
        let d = lat.digits(s);
        let mut sm = 0usize;
        for a in 0..f.dim() {
            sm = sm * f.nx()
                + remap_axis(d[a], l, f.nx()).ok_or_else(|| {
                    Error::Range(format!("scale {lambda} pushes mode {:?} past Nyquist", &d[..f.dim()]))
                })?;
        }
        out.data_mut()[sm] = c * amp;
    }
    Ok(out.into_rep(f.rep()))
}

/// Data of `scale_transform`: `(lambda^sigma f(lambda .), lambda^{sigma+1} g(lambda .))` times `lambda^{-n/2}`.
///
/// The factor `lambda^{-n/2}` restores the scaling of `L^2` norms lost on the torus, where
/// `f(lambda .)` has the same `L^2(T^n)` norm as `f`.
pub fn data_scale(d: &CauchyData, lambda: f64, sigma: f64) -> Result<CauchyData> {
    let m = lambda.powf(-(d.f.dim() as f64) / 2.0);
    Ok(CauchyData {
        f: scale_spatial(&d.f, lambda, lambda.powf(sigma) * m)?,
        g: scale_spatial(&d.g, lambda, lambda.powf(sigma + 1.0) * m)?,
    })
}

#[cfg(test)]
mod tests;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profile::CutoffProfile;
use super::sectors::{angle_between, AngularSectorSet};
use crate::error::{Error, Result};
use crate::grid::{Dyadic, FreqPoint, GridSpec, Rep, SpaceTimeField, SpatialLattice, MAX_DIM};

/// Half-space selector `tau > 0` or `tau < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn both() -> [Sign; 2] {
        [Sign::Plus, Sign::Minus]
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn contains(self, tau: f64) -> bool {
        match self {
            Sign::Plus => tau > 0.0,
            Sign::Minus => tau < 0.0,
        }
    }
}

/// Relative tolerance deciding that a lattice point sits on `|tau| = |xi|`.
pub const CONE_TOLERANCE: f64 = 1e-12;

#[inline]
pub fn on_cone(tau2: f64, xi2: f64) -> bool {
    let s = tau2.max(xi2);
    s == 0.0 || (tau2 - xi2).abs() <= CONE_TOLERANCE * s
}

/// Modulation `||tau| - |xi||`, forced to zero on the cone residue.
#[inline]
pub fn modulation(tau: f64, xi_norm: f64, xi2: f64) -> f64 {
    if on_cone(tau * tau, xi2) {
        0.0
    } else {
        (tau.abs() - xi_norm).abs()
    }
}

/// Lower edge of a radial band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lower {
    /// No lower cutoff; the origin is included.
    Free,
    /// Everything except the exact zero set.
    ExcludeZero,
    /// `1 - phi(r / l)`.
    At(f64),
}

/// Radial band `phi(r/h) - phi(r/l)` on a nonnegative variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub lower: Lower,
    /// `None` means no upper cutoff.
    pub upper: Option<f64>,
}

impl Band {
    /// Dyadic shell `[l, 2l)` in the sharp case.
    pub fn shell(l: f64) -> Self {
        Band { lower: Lower::At(l), upper: Some(2.0 * l) }
    }

    pub fn below(h: f64) -> Self {
        Band { lower: Lower::Free, upper: Some(h) }
    }

    pub fn above(l: f64) -> Self {
        Band { lower: Lower::At(l), upper: None }
    }

    pub fn between(l: f64, h: f64) -> Self {
        Band { lower: Lower::At(l), upper: Some(h) }
    }

    /// Value at radius `r` with `r2 = r^2` (squares make sharp edges exact on dyadic lattices).
    #[inline]
    pub fn eval(&self, r: f64, r2: f64, is_zero: bool, p: &CutoffProfile) -> f64 {
        let phi = |h: f64| -> f64 {
            if p.is_sharp() {
                if r2 < h * h {
                    1.0
                } else {
                    0.0
                }
            } else {
                p.bump(r / h)
            }
        };
        let up = match self.upper {
            None => 1.0,
            Some(h) => phi(h),
        };
        if up == 0.0 {
            return 0.0;
        }
        let low = match self.lower {
            Lower::Free => 0.0,
            Lower::ExcludeZero => f64::from(u8::from(is_zero)),
            Lower::At(l) => phi(l),
        };
        (up - low).max(0.0)
    }

    /// `[lo, hi)` outside of which the band vanishes.
    pub fn support(&self, p: &CutoffProfile) -> (f64, f64) {
        let lo = match self.lower {
            Lower::At(l) => l,
            _ => 0.0,
        };
        let hi = self.upper.map_or(f64::INFINITY, |h| h * p.reach());
        (lo, hi)
    }
}

/// One multiplicative piece of a symbol.
#[derive(Clone, Debug)]
pub enum Factor {
    /// Band in `|(tau, xi)|`.
    SpaceTime(Band),
    /// Band in `|xi|`.
    Spatial(Band),
    /// Band in `||tau| - |xi||`; the cone residue counts as modulation zero.
    Modulation(Band),
    /// Indicator of the cone residue.
    Residue,
    HalfSpace(Sign),
    /// Indicator of one cell of an angular partition.
    Sector { set: Arc<AngularSectorSet>, id: usize },
    /// Smooth angular bump `phi(angle / width)` around a unit direction.
    SmoothSector { center: [f64; MAX_DIM], width: f64 },
}

impl Factor {
    fn depends_on_tau(&self) -> bool {
        matches!(
            self,
            Factor::SpaceTime(_) | Factor::Modulation(_) | Factor::Residue | Factor::HalfSpace(_)
        )
    }

    fn is_spatial(&self) -> bool {
        matches!(self, Factor::Spatial(_) | Factor::Sector { .. } | Factor::SmoothSector { .. })
    }
}

/// Serializable description of a multiplier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SymbolSpec {
    Identity,
    /// `s_lambda`.
    Shell { lambda: f64 },
    /// `p_lambda`.
    Spatial { lambda: f64 },
    /// `c_d`.
    Cone { d: f64 },
    /// `s_{lambda,d}`.
    ShellCone { lambda: f64, d: f64 },
    /// `s_{lambda, <=d}`: modulation below `2d`, cone residue included.
    NearCone { lambda: f64, d: f64 },
    /// `s_{lambda, <d}`: modulation below `d`, cone residue included.
    BelowCone { lambda: f64, d: f64 },
    /// `s_{lambda, d<=}`: modulation at least `d`.
    AboveCone { lambda: f64, d: f64 },
    /// Cone residue inside shell `lambda`.
    Residue { lambda: f64 },
    HalfSpace { sign: Sign },
    /// Angular block `b^omega_{lambda,delta}` on the annulus `[lambda/2, 4 lambda)`.
    Block { lambda: f64, delta: f64, sector: usize },
    /// `S^omega_{lambda,d}` with sectors of width `(lambda d)^{1/2}`.
    SectorCone { lambda: f64, d: f64, sector: usize },
    Product { factors: Vec<SymbolSpec> },
}

/// A Fourier multiplier on space-time frequencies.
#[derive(Clone, Debug)]
pub struct Symbol {
    dim: usize,
    profile: CutoffProfile,
    factors: Vec<Factor>,
    spec: SymbolSpec,
}

#[derive(Serialize)]
struct CanonicalSymbol<'a> {
    dim: usize,
    profile: &'a CutoffProfile,
    spec: &'a SymbolSpec,
}

/// Axis-aligned superset of a symbol's support.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportBox {
    pub tau: (f64, f64),
    pub xi: Vec<(f64, f64)>,
    /// Narrowest radial or modulation width among the factors.
    pub min_width: f64,
}

impl Symbol {
    pub fn identity(dim: usize, profile: CutoffProfile) -> Self {
        Symbol { dim, profile, factors: Vec::new(), spec: SymbolSpec::Identity }
    }

    pub fn from_factors(dim: usize, profile: CutoffProfile, factors: Vec<Factor>, spec: SymbolSpec) -> Self {
        Symbol { dim, profile, factors, spec }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> &CutoffProfile {
        &self.profile
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    /// Canonical JSON (profile, dimension and composition tree).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CanonicalSymbol { dim: self.dim, profile: &self.profile, spec: &self.spec })
            .expect("symbol serializes")
    }

    pub fn product(&self, other: &Symbol) -> Result<Symbol> {
        if self.dim != other.dim || self.profile != other.profile {
            return Err(Error::Contract("symbols differ in dimension or profile".into()));
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        let mut specs = Vec::new();
        for s in [&self.spec, &other.spec] {
            match s {
                SymbolSpec::Product { factors } => specs.extend(factors.iter().cloned()),
                SymbolSpec::Identity => {}
                other => specs.push(other.clone()),
            }
        }
        Ok(Symbol { dim: self.dim, profile: self.profile, factors, spec: SymbolSpec::Product { factors: specs } })
    }

    pub fn depends_on_tau(&self) -> bool {
        self.factors.iter().any(Factor::depends_on_tau)
    }

    fn eval_factor(&self, f: &Factor, tau: f64, xi: &[f64], xi2: f64) -> f64 {
        let p = &self.profile;
        match f {
            Factor::SpaceTime(b) => {
                let r2 = tau * tau + xi2;
                b.eval(r2.sqrt(), r2, r2 == 0.0, p)
            }
            Factor::Spatial(b) => b.eval(xi2.sqrt(), xi2, xi2 == 0.0, p),
            Factor::Modulation(b) => {
                let m = modulation(tau, xi2.sqrt(), xi2);
                b.eval(m, m * m, m == 0.0, p)
            }
            Factor::Residue => f64::from(u8::from(on_cone(tau * tau, xi2))),
            Factor::HalfSpace(s) => f64::from(u8::from(s.contains(tau))),
            Factor::Sector { set, id } => {
                f64::from(u8::from(set.assign(xi) == Some(*id)))
            }
            Factor::SmoothSector { center, width } => {
                if xi2 == 0.0 {
                    return 0.0;
                }
                let a = angle_between(xi, &center[..self.dim]);
                p.bump(a / width)
            }
        }
    }

    /// Symbol value at a frequency point.
    pub fn eval(&self, p: &FreqPoint) -> f64 {
        let xi = p.xi();
        let xi2: f64 = xi.iter().map(|v| v * v).sum();
        let mut w = 1.0;
        for f in &self.factors {
            w *= self.eval_factor(f, p.tau, xi, xi2);
            if w == 0.0 {
                break;
            }
        }
        w
    }

    /// Multiplies space-time Fourier coefficients in place.
    pub fn multiply_spectrum(&self, u: &mut SpaceTimeField) -> Result<()> {
        u.require(Rep::SpacetimeFourier)?;
        let plan = SymbolPlan::new(self, u.grid())?;
        let s_len = u.grid().spatial_len();
        for (j, block) in u.data_mut().chunks_mut(s_len).enumerate() {
            for (s, c) in block.iter_mut().enumerate() {
                let w = plan.weight(j, s);
                if w != 1.0 {
                    *c *= w;
                }
            }
        }
        Ok(())
    }

    /// `S u`, returned in the representation of `u`.
    pub fn apply(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        let rep = u.rep();
        let mut v = u.to_rep(Rep::SpacetimeFourier);
        self.multiply_spectrum(&mut v)?;
        Ok(v.into_rep(rep))
    }

    /// Superset of the support, used to size kernel grids.
    pub fn support_box(&self) -> SupportBox {
        let p = &self.profile;
        let mut zeta = (0.0f64, f64::INFINITY);
        let mut xr = (0.0f64, f64::INFINITY);
        let mut m = (0.0f64, f64::INFINITY);
        let mut sign: Option<Sign> = None;
        let mut cone: Option<([f64; MAX_DIM], f64)> = None;
        let mut widths = Vec::new();
        for f in &self.factors {
            match f {
                Factor::SpaceTime(b) => {
                    let (lo, hi) = b.support(p);
                    zeta = (zeta.0.max(lo), zeta.1.min(hi));
                    widths.push(hi - lo);
                }
                Factor::Spatial(b) => {
                    let (lo, hi) = b.support(p);
                    xr = (xr.0.max(lo), xr.1.min(hi));
                    widths.push(hi - lo);
                }
                Factor::Modulation(b) => {
                    let (lo, hi) = b.support(p);
                    m = (m.0.max(lo), m.1.min(hi));
                    widths.push(hi - lo);
                }
                Factor::Residue => m = (0.0, 0.0),
                Factor::HalfSpace(s) => sign = Some(*s),
                Factor::Sector { set, id } => cone = Some((set.center(*id), set.angular_radius(*id))),
                Factor::SmoothSector { center, width } => cone = Some((*center, width * p.reach())),
            }
        }
        let r_hi = xr.1.min(zeta.1);
        let r_lo = xr.0.max(if m.1.is_finite() { (zeta.0 - m.1) / 2f64.sqrt() } else { 0.0 }).max(0.0);
        let mut tau_hi = zeta.1;
        if m.1.is_finite() {
            tau_hi = tau_hi.min(r_hi + m.1);
        }
        let tau_lo_abs = if m.1.is_finite() { (r_lo - m.1).max(0.0) } else { 0.0 };
        let tau = match sign {
            Some(Sign::Plus) => (tau_lo_abs, tau_hi),
            Some(Sign::Minus) => (-tau_hi, -tau_lo_abs),
            None => (-tau_hi, tau_hi),
        };
        let xi = (0..self.dim)
            .map(|i| match cone {
                Some((c, alpha)) if alpha < std::f64::consts::FRAC_PI_2 => {
                    let theta = c[i].clamp(-1.0, 1.0).acos();
                    let vmax = (theta - alpha).max(0.0).cos();
                    let vmin = (theta + alpha).min(std::f64::consts::PI).cos();
                    let cands = [r_lo * vmin, r_hi * vmin, r_lo * vmax, r_hi * vmax];
                    let lo = cands.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                }
                _ => (-r_hi, r_hi),
            })
            .collect();
        let min_width = widths.into_iter().filter(|w| w.is_finite() && *w > 0.0).fold(f64::INFINITY, f64::min);
        SupportBox { tau, xi, min_width }
    }
}

/// Precomputed evaluation of a symbol on one grid.
pub(crate) struct SymbolPlan<'a> {
    symbol: &'a Symbol,
    spatial: Option<Vec<f64>>,
    time: Option<Vec<f64>>,
    mixed: Vec<&'a Factor>,
    taus: Vec<f64>,
    lattice: SpatialLattice,
}

impl<'a> SymbolPlan<'a> {
    pub(crate) fn new(symbol: &'a Symbol, grid: &GridSpec) -> Result<Self> {
        if symbol.dim != grid.dim {
            return Err(Error::Contract(format!(
                "symbol dimension {} does not match grid dimension {}",
                symbol.dim, grid.dim
            )));
        }
        let lattice = grid.lattice();
        let taus = grid.taus();
        let spatial_factors: Vec<&Factor> = symbol.factors.iter().filter(|f| f.is_spatial()).collect();
        let spatial = if spatial_factors.is_empty() {
            None
        } else {
            Some(
                (0..lattice.len())
                    .map(|s| {
                        let xi = lattice.xi(s);
                        let xi2 = lattice.norm2(s);
                        spatial_factors
                            .iter()
                            .map(|f| symbol.eval_factor(f, 0.0, &xi[..grid.dim], xi2))
                            .product()
                    })
                    .collect(),
            )
        };
        let time_factors: Vec<&Factor> =
            symbol.factors.iter().filter(|f| matches!(f, Factor::HalfSpace(_))).collect();
        let time = if time_factors.is_empty() {
            None
        } else {
            Some(
                taus.iter()
                    .map(|&t| time_factors.iter().map(|f| symbol.eval_factor(f, t, &[], 0.0)).product())
                    .collect(),
            )
        };
        let mixed = symbol
            .factors
            .iter()
            .filter(|f| matches!(f, Factor::SpaceTime(_) | Factor::Modulation(_) | Factor::Residue))
            .collect();
        Ok(SymbolPlan { symbol, spatial, time, mixed, taus, lattice })
    }

    #[inline]
    pub(crate) fn weight(&self, j: usize, s: usize) -> f64 {
        let mut w = 1.0;
        if let Some(t) = &self.time {
            w = t[j];
            if w == 0.0 {
                return 0.0;
            }
        }
        if let Some(sp) = &self.spatial {
            w *= sp[s];
            if w == 0.0 {
                return 0.0;
            }
        }
        if self.mixed.is_empty() {
            return w;
        }
        let tau = self.taus[j];
        let xi2 = self.lattice.norm2(s);
        for f in &self.mixed {
            w *= self.symbol.eval_factor(f, tau, &[], xi2);
            if w == 0.0 {
                return 0.0;
            }
        }
        w
    }
}

/// Grid-bound factory of the standard multipliers.
#[derive(Clone, Debug)]
pub struct Cutoffs {
    grid: GridSpec,
    profile: CutoffProfile,
    lambdas: Vec<Dyadic>,
    ds: Vec<Dyadic>,
    spatial: Vec<Dyadic>,
}

fn dyadic(v: f64, what: &str) -> Result<Dyadic> {
    Dyadic::new(v).map_err(|_| Error::Config(format!("{what} = {v} is not a dyadic number")))
}

impl Cutoffs {
    pub fn new(grid: &GridSpec, profile: CutoffProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Cutoffs {
            grid: grid.clone(),
            profile,
            lambdas: grid.frequency_shells()?,
            ds: grid.cone_shells()?,
            spatial: grid.spatial_shells()?,
        })
    }

    pub fn sharp(grid: &GridSpec) -> Result<Self> {
        Self::new(grid, CutoffProfile::Sharp)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn profile(&self) -> &CutoffProfile {
        &self.profile
    }

    pub fn lambdas(&self) -> &[Dyadic] {
        &self.lambdas
    }

    pub fn cone_shells(&self) -> &[Dyadic] {
        &self.ds
    }

    pub fn spatial_shells(&self) -> &[Dyadic] {
        &self.spatial
    }

    fn check_lambda(&self, lambda: f64) -> Result<Dyadic> {
        let l = dyadic(lambda, "lambda")?;
        if !self.lambdas.contains(&l) {
            return Err(Error::Config(format!("lambda = {lambda} is not a resolvable shell on this grid")));
        }
        Ok(l)
    }

    fn check_d(&self, d: f64) -> Result<Dyadic> {
        let dd = dyadic(d, "d")?;
        if !self.ds.contains(&dd) {
            return Err(Error::Config(format!("d = {d} is not a resolvable modulation shell on this grid")));
        }
        Ok(dd)
    }

    /// Modulation band of `d`; the lowest band absorbs `(0, d)`.
    pub fn modulation_band(&self, d: f64) -> Result<Band> {
        let dd = self.check_d(d)?;
        let lower = if dd == self.ds[0] { Lower::ExcludeZero } else { Lower::At(d) };
        Ok(Band { lower, upper: Some(2.0 * d) })
    }

    pub fn sector_set(&self, lambda: f64, delta: f64) -> Result<Arc<AngularSectorSet>> {
        Ok(Arc::new(AngularSectorSet::new(self.grid.dim, lambda, delta)?))
    }

    /// Sectors of width `(lambda d)^{1/2}`.
    pub fn cone_sector_set(&self, lambda: f64, d: f64) -> Result<Arc<AngularSectorSet>> {
        if d > lambda {
            return Err(Error::Domain(format!("modulation d={d} exceeds lambda={lambda}")));
        }
        self.sector_set(lambda, (lambda * d).sqrt())
    }

    fn block_factors(&self, set: &Arc<AngularSectorSet>, sector: usize) -> Result<Vec<Factor>> {
        if sector >= set.count() {
            return Err(Error::Config(format!("sector {sector} out of range 0..{}", set.count())));
        }
        let lambda = set.lambda();
        let radial = Factor::Spatial(Band::between(lambda / 2.0, 4.0 * lambda));
        let angular = if self.profile.is_sharp() || set.count() == 1 {
            Factor::Sector { set: set.clone(), id: sector }
        } else {
            Factor::SmoothSector { center: set.center(sector), width: set.delta() / set.lambda() }
        };
        Ok(vec![radial, angular])
    }

    fn factors(&self, spec: &SymbolSpec) -> Result<Vec<Factor>> {
        use SymbolSpec::*;
        Ok(match spec {
            Identity => vec![],
            Shell { lambda } => {
                self.check_lambda(*lambda)?;
                vec![Factor::SpaceTime(Band::shell(*lambda))]
            }
            Spatial { lambda } => {
                let l = dyadic(*lambda, "lambda")?;
                if !self.spatial.contains(&l) {
                    return Err(Error::Config(format!("lambda = {lambda} is not a resolvable spatial shell")));
                }
                vec![Factor::Spatial(Band::shell(*lambda))]
            }
            Cone { d } => vec![Factor::Modulation(self.modulation_band(*d)?)],
            ShellCone { lambda, d } => {
                let mut f = self.factors(&Shell { lambda: *lambda })?;
                f.push(Factor::Modulation(self.modulation_band(*d)?));
                f
            }
            NearCone { lambda, d } => {
                dyadic(*d, "d")?;
                let mut f = self.factors(&Shell { lambda: *lambda })?;
                f.push(Factor::Modulation(Band::below(2.0 * d)));
                f
            }
            BelowCone { lambda, d } => {
                dyadic(*d, "d")?;
                let mut f = self.factors(&Shell { lambda: *lambda })?;
                f.push(Factor::Modulation(Band::below(*d)));
                f
            }
            AboveCone { lambda, d } => {
                dyadic(*d, "d")?;
                let mut f = self.factors(&Shell { lambda: *lambda })?;
                f.push(Factor::Modulation(Band::above(*d)));
                f
            }
            Residue { lambda } => {
                let mut f = self.factors(&Shell { lambda: *lambda })?;
                f.push(Factor::Residue);
                f
            }
            HalfSpace { sign } => vec![Factor::HalfSpace(*sign)],
            Block { lambda, delta, sector } => {
                dyadic(*lambda, "lambda")?;
                let set = self.sector_set(*lambda, *delta)?;
                self.block_factors(&set, *sector)?
            }
            SectorCone { lambda, d, sector } => {
                let set = self.cone_sector_set(*lambda, *d)?;
                let mut f = self.block_factors(&set, *sector)?;
                f.extend(self.factors(&ShellCone { lambda: *lambda, d: *d })?);
                f
            }
            Product { factors } => {
                let mut out = Vec::new();
                for s in factors {
                    out.extend(self.factors(s)?);
                }
                out
            }
        })
    }

    pub fn build(&self, spec: &SymbolSpec) -> Result<Symbol> {
        let factors = self.factors(spec)?;
        Ok(Symbol { dim: self.grid.dim, profile: self.profile, factors, spec: spec.clone() })
    }

    pub fn shell_symbol(&self, lambda: f64) -> Result<Symbol> {
        self.build(&SymbolSpec::Shell { lambda })
    }

    pub fn spatial_symbol(&self, lambda: f64) -> Result<Symbol> {
        self.build(&SymbolSpec::Spatial { lambda })
    }

    pub fn cone_symbol(&self, d: f64) -> Result<Symbol> {
        self.build(&SymbolSpec::Cone { d })
    }

    pub fn shell_cone_symbol(&self, lambda: f64, d: f64) -> Result<Symbol> {
        self.build(&SymbolSpec::ShellCone { lambda, d })
    }

    pub fn sign_symbol(&self, sign: Sign) -> Result<Symbol> {
        self.build(&SymbolSpec::HalfSpace { sign })
    }

    pub fn block_symbol(&self, lambda: f64, delta: f64, sector: usize) -> Result<Symbol> {
        self.build(&SymbolSpec::Block { lambda, delta, sector })
    }

    pub fn sector_cone_symbol(&self, lambda: f64, d: f64, sector: usize) -> Result<Symbol> {
        self.build(&SymbolSpec::SectorCone { lambda, d, sector })
    }
}

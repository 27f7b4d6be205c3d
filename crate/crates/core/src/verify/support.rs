//! Frequency-support enumerator for the bilinear angular decompositions.
//!
//! For a low shell `mu`, a high shell `lambda` and a modulation `d`, every pair of lattice
//! frequencies `(tau', xi')`, `(tau, xi)` whose sum lands in the output region is classified
//! by the angle between `±xi'` and `xi` and by the sectors of `xi + xi'`, `xi'` and `xi`.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;
use crate::multipliers::{angle_between, modulation, AngularSectorSet, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    Wide,
    Small,
    BTerm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckMode {
    Exhaustive,
    Sampled { pairs: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Unbounded frequency lattice `(tau_step Z) x (xi_step Z)^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLattice {
    pub dim: usize,
    pub tau_step: f64,
    pub xi_step: f64,
}

impl FrequencyLattice {
    pub fn unit(dim: usize) -> Self {
        FrequencyLattice { dim, tau_step: 1.0, xi_step: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCheckConfig {
    pub lemma: Lemma,
    pub lattice: FrequencyLattice,
    pub lambda: f64,
    pub mu: f64,
    pub d: f64,
    pub c: f64,
    pub mode: CheckMode,
    /// Ceiling for `Theta / (d/mu)^{1/2}`.
    pub c_ang: f64,
    /// Ceiling for sector multiplicities on the diagonal.
    pub c_diag: usize,
    /// Output modulation must stay below `2 c_range mu` in the B-term.
    pub c_range: f64,
    /// Exhaustive runs above this many pairs are refused.
    pub exhaustive_cap: u64,
}

impl SupportCheckConfig {
    pub fn new(lemma: Lemma, dim: usize, lambda: f64, mu: f64, d: f64, c: f64, mode: CheckMode) -> Self {
        SupportCheckConfig {
            lemma,
            lattice: FrequencyLattice::unit(dim),
            lambda,
            mu,
            d,
            c,
            mode,
            c_ang: 4.0,
            c_diag: 16,
            c_range: 4.0,
            exhaustive_cap: 1 << 31,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.lattice.dim;
        if n < 2 || n > MAX_DIM {
            return Err(Error::UnsupportedDimension { dim: n, reason: "support checks need 2 <= n <= 6".into() });
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::Precondition(format!("c = {} must lie in (0, 1)", self.c)));
        }
        if !(self.mu > 0.0 && self.lambda >= 8.0 * self.mu) {
            return Err(Error::Precondition(format!(
                "need lambda/mu >= 8, got lambda={} mu={}",
                self.lambda, self.mu
            )));
        }
        let cmu = self.c * self.mu;
        match self.lemma {
            Lemma::Wide | Lemma::Small => {
                if !(self.d > 0.0 && self.d <= cmu) {
                    return Err(Error::Precondition(format!(
                        "{:?} lemma needs 0 < d <= c mu = {cmu}, got d={}",
                        self.lemma, self.d
                    )));
                }
            }
            Lemma::BTerm => {
                if !(self.d >= cmu && self.d <= self.mu) {
                    return Err(Error::Precondition(format!(
                        "B-term needs c mu = {cmu} <= d <= mu = {}, got d={}",
                        self.mu, self.d
                    )));
                }
            }
        }
        if !(self.lattice.tau_step > 0.0 && self.lattice.xi_step > 0.0) {
            return Err(Error::Config("lattice steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Angle,
    Diagonality,
    Range,
    SignFact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// `(tau', xi')`.
    pub low: Vec<f64>,
    /// `(tau, xi)`.
    pub high: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasuredAngles {
    /// `max Theta(±xi', xi) / (d/mu)^{1/2}`.
    pub c_ang: f64,
    /// `max Theta(xi + xi', xi) / (d/lambda)^{1/2}`.
    pub c_out: f64,
    pub omega2_per_omega1: usize,
    pub omega3_per_omega1: usize,
    pub omega1_per_omega2: usize,
    /// B-term: largest output modulation over `mu`.
    pub max_output_modulation_over_mu: f64,
    /// B-term: pairs tested for the sign of `tau' ∓ |xi'|`.
    pub sign_fact_pairs: u64,
    pub sign_fact_checked: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCheckReport {
    pub config: SupportCheckConfig,
    pub pairs_examined: u64,
    pub valid_pairs: u64,
    pub violation_count: u64,
    /// First violations found (at most `MAX_LISTED`).
    pub violations: Vec<Violation>,
    pub measured: MeasuredAngles,
    pub status: CheckStatus,
}

impl SupportCheckReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per listed violation.
    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["kind", "low", "high", "value"])?;
        for v in &self.violations {
            let join = |p: &[f64]| p.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
            out.write_record([format!("{:?}", v.kind), join(&v.low), join(&v.high), format!("{}", v.value)])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub const MAX_LISTED: usize = 64;

#[derive(Clone, Copy, Debug)]
struct Pt {
    tau: f64,
    xi: [f64; MAX_DIM],
    r: f64,
    r2: f64,
}

impl Pt {
    fn new(tau: f64, xi: [f64; MAX_DIM], dim: usize) -> Self {
        let r2: f64 = xi[..dim].iter().map(|x| x * x).sum();
        Pt { tau, xi, r: r2.sqrt(), r2 }
    }

    fn coords(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![self.tau];
        v.extend_from_slice(&self.xi[..dim]);
        v
    }
}

/// `s^{sign}_{lambda, m in [lo, hi)}`; `lo = 0` includes the cone residue.
#[derive(Clone, Copy, Debug)]
struct Region {
    lambda: f64,
    lo: f64,
    hi: f64,
    sign: Option<Sign>,
}

impl Region {
    fn contains(&self, tau: f64, r: f64, r2: f64) -> bool {
        let q = tau * tau + r2;
        let l2 = self.lambda * self.lambda;
        if q < l2 || q >= 4.0 * l2 {
            return false;
        }
        if let Some(s) = self.sign {
            if !s.contains(tau) {
                return false;
            }
        }
        let m = modulation(tau, r, r2);
        m >= self.lo && m < self.hi
    }

    /// Lattice `tau` values that may lie in the region for this `|xi|`.
    fn taus(&self, r: f64, step: f64, out: &mut Vec<f64>) {
        out.clear();
        let top = 2.0 * self.lambda;
        let mut push_range = |a: f64, b: f64| {
            let (a, b) = (a.max(-top), b.min(top));
            if a > b {
                return;
            }
            let (ka, kb) = ((a / step).floor() as i64, (b / step).ceil() as i64);
            for k in ka..=kb {
                let t = k as f64 * step;
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        };
        let signs: &[f64] = match self.sign {
            Some(Sign::Plus) => &[1.0],
            Some(Sign::Minus) => &[-1.0],
            None => &[1.0, -1.0],
        };
        if self.hi.is_finite() {
            for &s in signs {
                push_range(s * r - self.hi, s * r + self.hi);
            }
        } else {
            let (a, b) = match self.sign {
                Some(Sign::Plus) => (0.0, top),
                Some(Sign::Minus) => (-top, 0.0),
                None => (-top, top),
            };
            push_range(a, b);
        }
    }
}

/// Lattice vectors `xi` with `|xi| < bound`.
fn xi_ball(dim: usize, step: f64, bound: f64) -> Vec<[f64; MAX_DIM]> {
    let k = (bound / step).ceil() as i64;
    let side = (2 * k + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        let mut xi = [0.0; MAX_DIM];
        let mut r2 = 0.0;
        for slot in xi.iter_mut().take(dim) {
            *slot = ((rem % side) as i64 - k) as f64 * step;
            rem /= side;
            r2 += *slot * *slot;
        }
        if r2 < bound * bound {
            out.push(xi);
        }
    }
    out
}

/// All lattice points of a region, grouped by `xi`.
fn enumerate(region: &Region, lat: &FrequencyLattice) -> Vec<(Pt, Vec<f64>)> {
    let mut buf = Vec::new();
    xi_ball(lat.dim, lat.xi_step, 2.0 * region.lambda)
        .into_iter()
        .filter_map(|xi| {
            let p = Pt::new(0.0, xi, lat.dim);
            region.taus(p.r, lat.tau_step, &mut buf);
            let taus: Vec<f64> = buf.iter().copied().filter(|&t| region.contains(t, p.r, p.r2)).collect();
            (!taus.is_empty()).then_some((p, taus))
        })
        .collect()
}

fn random_xi(rng: &mut ChaCha8Rng, dim: usize, step: f64, bound: f64) -> [f64; MAX_DIM] {
    let k = (bound / step).ceil() as i64;
    loop {
        let mut xi = [0.0; MAX_DIM];
        let mut r2 = 0.0;
        for slot in xi.iter_mut().take(dim) {
            *slot = rng.gen_range(-k..=k) as f64 * step;
            r2 += *slot * *slot;
        }
        if r2 < bound * bound {
            return xi;
        }
    }
}

/// Random point of a region: uniform `xi`, then uniform among admissible `tau`.
fn random_point(rng: &mut ChaCha8Rng, region: &Region, lat: &FrequencyLattice, buf: &mut Vec<f64>) -> Pt {
    loop {
        let xi = random_xi(rng, lat.dim, lat.xi_step, 2.0 * region.lambda);
        let p = Pt::new(0.0, xi, lat.dim);
        region.taus(p.r, lat.tau_step, buf);
        buf.retain(|&t| region.contains(t, p.r, p.r2));
        if !buf.is_empty() {
            let t = buf[rng.gen_range(0..buf.len())];
            return Pt { tau: t, ..p };
        }
    }
}

struct Plan {
    cfg: SupportCheckConfig,
    low: Region,
    high: Region,
    out: Region,
    /// Sectors of `xi + xi'`, `±xi'`, `xi`.
    sets: [AngularSectorSet; 3],
    /// Output band used for sector bookkeeping in the B-term.
    band: (f64, f64),
}

#[derive(Default)]
struct Acc {
    pairs: u64,
    valid: u64,
    c_ang: f64,
    c_out: f64,
    max_mod: f64,
    w12: HashSet<(u32, u32)>,
    w13: HashSet<(u32, u32)>,
    violations: Vec<Violation>,
    violation_count: u64,
}

impl Acc {
    fn flag(&mut self, kind: ViolationKind, u: &Pt, v: &Pt, dim: usize, value: f64) {
        self.violation_count += 1;
        if self.violations.len() < MAX_LISTED {
            self.violations.push(Violation { kind, low: u.coords(dim), high: v.coords(dim), value });
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.pairs += o.pairs;
        self.valid += o.valid;
        self.c_ang = self.c_ang.max(o.c_ang);
        self.c_out = self.c_out.max(o.c_out);
        self.max_mod = self.max_mod.max(o.max_mod);
        self.w12.extend(o.w12);
        self.w13.extend(o.w13);
        self.violation_count += o.violation_count;
        for v in o.violations {
            if self.violations.len() < MAX_LISTED {
                self.violations.push(v);
            }
        }
        self
    }
}

impl Plan {
    fn new(cfg: &SupportCheckConfig) -> Result<Self> {
        let (lam, mu, d, c) = (cfg.lambda, cfg.mu, cfg.d, cfg.c);
        let n = cfg.lattice.dim;
        let plus = Some(Sign::Plus);
        Ok(match cfg.lemma {
            Lemma::Wide | Lemma::Small => {
                let low = Region { lambda: mu, lo: 0.0, hi: 2.0 * d, sign: None };
                let high = Region { lambda: lam, lo: 0.0, hi: 2.0 * d, sign: plus };
                let out = Region { lambda: lam, lo: d, hi: 2.0 * d, sign: plus };
                let w = (d / mu).sqrt();
                let sets = if cfg.lemma == Lemma::Wide {
                    [
                        AngularSectorSet::new(n, lam, lam * w)?,
                        AngularSectorSet::new(n, mu, mu * w)?,
                        AngularSectorSet::new(n, lam, lam * w)?,
                    ]
                } else {
                    [
                        AngularSectorSet::new(n, lam, (lam * d).sqrt())?,
                        AngularSectorSet::new(n, mu, (mu * d).sqrt())?,
                        AngularSectorSet::new(n, lam, (lam * d).sqrt())?,
                    ]
                };
                Plan { cfg: cfg.clone(), low, high, out, sets, band: (d, 2.0 * d) }
            }
            Lemma::BTerm => {
                let low = Region { lambda: mu, lo: 0.0, hi: f64::INFINITY, sign: None };
                let high = Region { lambda: lam, lo: 0.0, hi: 2.0 * c * mu, sign: plus };
                let out = Region { lambda: lam, lo: c * mu, hi: f64::INFINITY, sign: plus };
                let sets = [
                    AngularSectorSet::new(n, lam, (lam * d).sqrt())?,
                    AngularSectorSet::new(n, mu, (mu * d).sqrt().min(mu))?,
                    AngularSectorSet::new(n, lam, (lam * d).sqrt())?,
                ];
                Plan { cfg: cfg.clone(), low, high, out, sets, band: (d, 2.0 * d) }
            }
        })
    }

    /// Processes `u` against every admissible `tau` over a fixed `xi`.
    fn visit(&self, acc: &mut Acc, u: &Pt, xi: &Pt, taus: &[f64]) {
        let n = self.cfg.lattice.dim;
        acc.pairs += taus.len() as u64;
        let mut s = [0.0; MAX_DIM];
        for a in 0..n {
            s[a] = xi.xi[a] + u.xi[a];
        }
        let sum = Pt::new(0.0, s, n);
        let mut geometry: Option<(f64, f64, [f64; MAX_DIM])> = None;
        for &t in taus {
            let to = t + u.tau;
            if !self.out.contains(to, sum.r, sum.r2) {
                continue;
            }
            acc.valid += 1;
            let v = Pt { tau: t, ..*xi };
            let (theta, theta_out, su) = *geometry.get_or_insert_with(|| {
                let sgn = if u.tau < 0.0 { -1.0 } else { 1.0 };
                let mut su = [0.0; MAX_DIM];
                for a in 0..n {
                    su[a] = sgn * u.xi[a];
                }
                (angle_between(&su[..n], &xi.xi[..n]), angle_between(&s[..n], &xi.xi[..n]), su)
            });
            let (lam, mu, d) = (self.cfg.lambda, self.cfg.mu, self.cfg.d);
            let m_out = modulation(to, sum.r, sum.r2);
            let in_band = m_out >= self.band.0 && m_out < self.band.1;
            match self.cfg.lemma {
                Lemma::Wide | Lemma::Small => {
                    let ratio = theta / (d / mu).sqrt();
                    acc.c_ang = acc.c_ang.max(ratio);
                    if ratio > self.cfg.c_ang {
                        acc.flag(ViolationKind::Angle, u, &v, n, ratio);
                    }
                }
                Lemma::BTerm => {
                    acc.max_mod = acc.max_mod.max(m_out / mu);
                    if m_out >= 2.0 * self.cfg.c_range * mu {
                        acc.flag(ViolationKind::Range, u, &v, n, m_out / mu);
                    }
                    if !in_band {
                        continue;
                    }
                }
            }
            acc.c_out = acc.c_out.max(theta_out / (d / lam).sqrt());
            let w1 = self.sets[0].assign(&s[..n]).map_or(u32::MAX, |x| x as u32);
            let w2 = self.sets[1].assign(&su[..n]).map_or(u32::MAX, |x| x as u32);
            let w3 = self.sets[2].assign(&xi.xi[..n]).map_or(u32::MAX, |x| x as u32);
            acc.w12.insert((w1, w2));
            acc.w13.insert((w1, w3));
        }
    }
}

fn max_multiplicity(pairs: &HashSet<(u32, u32)>, by_first: bool) -> usize {
    let mut m: HashMap<u32, usize> = HashMap::new();
    for &(a, b) in pairs {
        *m.entry(if by_first { a } else { b }).or_default() += 1;
    }
    m.values().copied().max().unwrap_or(0)
}

fn run_pairs(plan: &Plan, low: &Region, high: &Region, cfg: &SupportCheckConfig) -> Result<Acc> {
    let lat = &cfg.lattice;
    Ok(match cfg.mode {
        CheckMode::Exhaustive => {
            let us = enumerate(low, lat);
            let vs = enumerate(high, lat);
            let nu: u64 = us.iter().map(|(_, t)| t.len() as u64).sum();
            let nv: u64 = vs.iter().map(|(_, t)| t.len() as u64).sum();
            if nu.saturating_mul(nv) > cfg.exhaustive_cap {
                return Err(Error::Precondition(format!(
                    "exhaustive enumeration needs {} pairs, above the cap {}; use sampled mode",
                    nu.saturating_mul(nv),
                    cfg.exhaustive_cap
                )));
            }
            let flat: Vec<Pt> =
                us.iter().flat_map(|(p, ts)| ts.iter().map(move |&t| Pt { tau: t, ..*p })).collect();
            flat.par_iter()
                .fold(Acc::default, |mut acc, u| {
                    for (xi, taus) in &vs {
                        plan.visit(&mut acc, u, xi, taus);
                    }
                    acc
                })
                .reduce(Acc::default, Acc::merge)
        }
        CheckMode::Sampled { pairs, seed } => {
            let chunks = 64u64;
            let per = pairs.div_ceil(chunks);
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
                    let mut acc = Acc::default();
                    let mut buf = Vec::new();
                    while acc.pairs < per {
                        let u = random_point(&mut rng, low, lat, &mut buf);
                        let xi = Pt::new(0.0, random_xi(&mut rng, lat.dim, lat.xi_step, 2.0 * high.lambda), lat.dim);
                        high.taus(xi.r, lat.tau_step, &mut buf);
                        buf.retain(|&t| high.contains(t, xi.r, xi.r2));
                        if buf.is_empty() {
                            continue;
                        }
                        let taus = std::mem::take(&mut buf);
                        plan.visit(&mut acc, &u, &xi, &taus);
                        buf = taus;
                    }
                    acc
                })
                .reduce(Acc::default, Acc::merge)
        }
    })
}

/// Sign of `tau' ∓ |xi'|` for low frequencies at modulation `d` against near-cone high ones.
fn sign_fact(cfg: &SupportCheckConfig, acc: &mut Acc) -> Result<u64> {
    let (lam, mu, d, c) = (cfg.lambda, cfg.mu, cfg.d, cfg.c);
    let k = (c * mu).min(d);
    let checker = SignChecker {
        low: Region { lambda: mu, lo: d, hi: 2.0 * d, sign: None },
        high: Region { lambda: lam, lo: 0.0, hi: 2.0 * k, sign: Some(Sign::Plus) },
        out: Region { lambda: lam, lo: 0.0, hi: 2.0 * k, sign: Some(Sign::Plus) },
    };
    let found = checker.run(cfg)?;
    for v in found.violations {
        acc.violation_count += 1;
        if acc.violations.len() < MAX_LISTED {
            acc.violations.push(v);
        }
    }
    acc.violation_count += found.extra;
    Ok(found.valid)
}

struct SignChecker {
    low: Region,
    high: Region,
    out: Region,
}

struct SignResult {
    valid: u64,
    violations: Vec<Violation>,
    extra: u64,
}

impl SignChecker {
    fn run(&self, cfg: &SupportCheckConfig) -> Result<SignResult> {
        let (low, high) = (&self.low, &self.high);
        let lat = &cfg.lattice;
        let n = lat.dim;
        let check = |u: &Pt, xi: &Pt, taus: &[f64], res: &mut (u64, Vec<Violation>, u64)| {
            let mut s = [0.0; MAX_DIM];
            for a in 0..n {
                s[a] = xi.xi[a] + u.xi[a];
            }
            let sum = Pt::new(0.0, s, n);
            for &t in taus {
                if !self.out.contains(t + u.tau, sum.r, sum.r2) {
                    continue;
                }
                res.0 += 1;
                if u.tau.abs() >= u.r {
                    if res.1.len() < MAX_LISTED {
                        res.1.push(Violation {
                            kind: ViolationKind::SignFact,
                            low: u.coords(n),
                            high: Pt { tau: t, ..*xi }.coords(n),
                            value: u.tau.abs() - u.r,
                        });
                    } else {
                        res.2 += 1;
                    }
                }
            }
        };
        let merge = |mut a: (u64, Vec<Violation>, u64), b: (u64, Vec<Violation>, u64)| {
            a.0 += b.0;
            a.2 += b.2;
            for v in b.1 {
                if a.1.len() < MAX_LISTED {
                    a.1.push(v);
                } else {
                    a.2 += 1;
                }
            }
            a
        };
        let res = match cfg.mode {
            CheckMode::Exhaustive => {
                let us = enumerate(low, lat);
                let vs = enumerate(high, lat);
                let flat: Vec<Pt> =
                    us.iter().flat_map(|(p, ts)| ts.iter().map(move |&t| Pt { tau: t, ..*p })).collect();
                flat.par_iter()
                    .fold(
                        || (0, Vec::new(), 0),
                        |mut r, u| {
                            for (xi, taus) in &vs {
                                check(u, xi, taus, &mut r);
                            }
                            r
                        },
                    )
                    .reduce(|| (0, Vec::new(), 0), merge)
            }
            CheckMode::Sampled { pairs, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
                let mut r = (0, Vec::new(), 0);
                let mut buf = Vec::new();
                let mut seen = 0u64;
                while seen < pairs {
                    let u = random_point(&mut rng, low, lat, &mut buf);
                    let xi = Pt::new(0.0, random_xi(&mut rng, n, lat.xi_step, 2.0 * high.lambda), n);
                    high.taus(xi.r, lat.tau_step, &mut buf);
                    buf.retain(|&t| high.contains(t, xi.r, xi.r2));
                    seen += buf.len().max(1) as u64;
                    let taus = std::mem::take(&mut buf);
                    check(&u, &xi, &taus, &mut r);
                    buf = taus;
                }
                r
            }
        };
        Ok(SignResult { valid: res.0, violations: res.1, extra: res.2 })
    }
}

/// Enumerates (or samples) frequency pairs and checks the lemma's support geometry.
pub fn bilinear_support_check(cfg: &SupportCheckConfig) -> Result<SupportCheckReport> {
    cfg.validate()?;
    let plan = Plan::new(cfg)?;
    let mut acc = run_pairs(&plan, &plan.low, &plan.high, cfg)?;
    let mut measured = MeasuredAngles {
        c_ang: acc.c_ang,
        c_out: acc.c_out,
        omega2_per_omega1: max_multiplicity(&acc.w12, true),
        omega3_per_omega1: max_multiplicity(&acc.w13, true),
        omega1_per_omega2: max_multiplicity(&acc.w12, false),
        max_output_modulation_over_mu: acc.max_mod,
        ..MeasuredAngles::default()
    };
    let diag = cfg.c_diag;
    let mut diag_breaks: Vec<f64> = Vec::new();
    match cfg.lemma {
        Lemma::Wide => {
            for m in [measured.omega2_per_omega1, measured.omega3_per_omega1, measured.omega1_per_omega2] {
                if m > diag {
                    diag_breaks.push(m as f64);
                }
            }
        }
        Lemma::Small | Lemma::BTerm => {
            if measured.omega3_per_omega1 > diag {
                diag_breaks.push(measured.omega3_per_omega1 as f64);
            }
        }
    }
    for m in diag_breaks {
        acc.violation_count += 1;
        if acc.violations.len() < MAX_LISTED {
            acc.violations.push(Violation { kind: ViolationKind::Diagonality, low: vec![], high: vec![], value: m });
        }
    }
    if cfg.lemma == Lemma::BTerm && cfg.d >= 4.0 * cfg.c * cfg.mu {
        measured.sign_fact_checked = true;
        measured.sign_fact_pairs = sign_fact(cfg, &mut acc)?;
    }
    let status = if acc.valid == 0 || (measured.sign_fact_checked && measured.sign_fact_pairs == 0) {
        CheckStatus::Inconclusive
    } else if acc.violation_count == 0 {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(SupportCheckReport {
        config: cfg.clone(),
        pairs_examined: acc.pairs,
        valid_pairs: acc.valid,
        violation_count: acc.violation_count,
        violations: acc.violations,
        measured,
        status,
    })
}

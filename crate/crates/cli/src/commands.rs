use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use conewave_core::grid::io::{content_hash, load_field, load_spatial, save_spatial};
use conewave_core::grid::{GridSpec, Rep, SpaceTimeField};
use conewave_core::multipliers::{AngularSectorSet, CutoffProfile, Cutoffs, SymbolSpec};
use conewave_core::solver::{picard_solve, solve_with_scattering, CauchyData};
use conewave_core::spaces::NormContext;
use conewave_core::verify::golden::{GoldenMismatch, GoldenSet};
use conewave_core::verify::{self as v, CheckMode, CheckStatus, EnsembleSpec, EstimateReport, Lemma};

use crate::config::{DataSource, RunConfig, SupportMode};
use crate::report::Writer;

/// Reports whose verdict failed.
#[derive(Default)]
pub struct Outcome {
    pub failed: Vec<PathBuf>,
}

fn ensemble(cfg: &RunConfig, count: usize) -> EnsembleSpec {
    EnsembleSpec { law: cfg.data.law, ..EnsembleSpec::new(count, cfg.seed) }
}

fn spacetime_input(cfg: &RunConfig, grid: &GridSpec) -> Result<SpaceTimeField> {
    let u = match cfg.data.source {
        DataSource::Zero => SpaceTimeField::zeros(grid, Rep::SpacetimeFourier),
        DataSource::Random => {
            let spec = cfg.data.lambda.map_or(SymbolSpec::Identity, |lambda| SymbolSpec::Shell { lambda });
            ensemble(cfg, 8).field(grid, &spec, 0)?
        }
        DataSource::Files => {
            let p = cfg.data.field.as_ref().ok_or_else(|| anyhow!("data.field: required when data.source = \"files\""))?;
            let u = load_field(p).with_context(|| format!("reading {}", p.display()))?;
            if u.grid() != grid {
                bail!("data.field: {} was written on a different grid", p.display());
            }
            u
        }
    };
    Ok(u.into_rep(Rep::SpacetimeFourier))
}

fn cauchy_input(cfg: &RunConfig, grid: &GridSpec) -> Result<Vec<CauchyData>> {
    let schem = cfg.schematic();
    let comps = schem.components();
    match cfg.data.source {
        DataSource::Zero => Ok(vec![CauchyData::zeros(grid); comps]),
        DataSource::Random => {
            let lambda = cfg.data.lambda.unwrap_or(1.0);
            let ens = ensemble(cfg, 8);
            let mut data = (0..comps)
                .map(|k| CauchyData::random_band(grid, &ens, lambda, 2.0 * lambda, k))
                .collect::<conewave_core::error::Result<Vec<_>>>()?;
            let ctx = NormContext::new(grid, cfg.params())?;
            let mut norm = 0.0;
            for (d, s) in data.iter().zip(schem.critical_exponents(grid.dim)) {
                norm += ctx.besov_data_norm(&d.f, &d.g, s)?;
            }
            if norm == 0.0 {
                bail!("data.lambda: no lattice points with {lambda} <= |xi| < {} on this grid", 2.0 * lambda);
            }
            for d in data.iter_mut() {
                *d = d.scaled(cfg.solver.epsilon0 / norm);
            }
            Ok(data)
        }
        DataSource::Files => {
            if cfg.data.f.len() != comps {
                bail!("data.f: {} paths for {comps} components", cfg.data.f.len());
            }
            let mut out = Vec::new();
            for (fp, gp) in cfg.data.f.iter().zip(&cfg.data.g) {
                let (gf, f) = load_spatial(fp).with_context(|| format!("reading {}", fp.display()))?;
                let (gg, g) = load_spatial(gp).with_context(|| format!("reading {}", gp.display()))?;
                if gf.dim != grid.dim || gf.nx != grid.nx || gf.length != grid.length || gg != gf {
                    bail!("data.f/data.g: {} or {} does not match the spatial grid", fp.display(), gp.display());
                }
                out.push(CauchyData { f, g });
            }
            Ok(out)
        }
    }
}

fn data_hash(data: &[CauchyData]) -> String {
    let mut all = Vec::new();
    for d in data {
        all.extend_from_slice(d.f.data());
        all.extend_from_slice(d.g.data());
    }
    content_hash(&all)
}

#[derive(Serialize)]
struct MassRow {
    lambda: f64,
    /// Zero for the cone residue.
    d: f64,
    sector: Option<usize>,
    mass: f64,
}

#[derive(Serialize)]
struct Decomposition {
    total_mass: f64,
    rows: Vec<MassRow>,
}

fn sharp_masses(ctx: &NormContext, u: &SpaceTimeField) -> Result<Vec<MassRow>> {
    let grid = ctx.grid();
    let lat = ctx.lattice();
    let (lambdas, ds) = (ctx.lambdas(), ctx.cone_shells());
    let w = grid.dt() * grid.cell_volume();
    let mut sets: BTreeMap<(usize, usize), Option<Arc<AngularSectorSet>>> = BTreeMap::new();
    let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for j in 0..grid.nt {
        for (s, c) in u.slice(j).iter().enumerate() {
            let Some(pc) = ctx.classify(j, s) else { continue };
            // Residue sorts first within its shell.
            let key = match pc.band {
                None => (pc.shell, 0, usize::MAX),
                Some(b) => {
                    let (l, d) = (lambdas[pc.shell].value(), ds[b].value());
                    let set = sets
                        .entry((pc.shell, b))
                        .or_insert_with(|| (d <= l).then(|| AngularSectorSet::new(grid.dim, l, (l * d).sqrt()).ok().map(Arc::new)).flatten());
                    let id = set.as_ref().and_then(|st| st.assign(&lat.xi(s)[..grid.dim])).unwrap_or(usize::MAX);
                    (pc.shell, b + 1, id)
                }
            };
            *acc.entry(key).or_default() += c.norm_sqr() * w;
        }
    }
    Ok(acc
        .into_iter()
        .map(|((li, b, id), mass)| MassRow {
            lambda: lambdas[li].value(),
            d: if b == 0 { 0.0 } else { ds[b - 1].value() },
            sector: (id != usize::MAX).then_some(id),
            mass,
        })
        .collect())
}

fn smooth_masses(ctx: &NormContext, profile: CutoffProfile, u: &SpaceTimeField) -> Result<Vec<MassRow>> {
    let grid = ctx.grid();
    let cut = Cutoffs::new(grid, profile)?;
    let w = grid.dt() * grid.cell_volume();
    let mass = |sym: conewave_core::multipliers::Symbol| -> Result<f64> {
        Ok(sym.apply(u)?.data().iter().map(|c| c.norm_sqr()).sum::<f64>() * w)
    };
    let mut rows = Vec::new();
    for l in cut.lambdas().to_vec() {
        for d in cut.cone_shells().to_vec() {
            let (l, d) = (l.value(), d.value());
            if d <= l {
                let set = cut.cone_sector_set(l, d)?;
                for id in 0..set.count() {
                    let m = mass(cut.sector_cone_symbol(l, d, id)?)?;
                    if m > 0.0 {
                        rows.push(MassRow { lambda: l, d, sector: Some(id), mass: m });
                    }
                }
            } else {
                let m = mass(cut.shell_cone_symbol(l, d)?)?;
                if m > 0.0 {
                    rows.push(MassRow { lambda: l, d, sector: None, mass: m });
                }
            }
        }
    }
    Ok(rows)
}

pub fn decompose(cfg: &RunConfig, out: &mut Writer) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let ctx = NormContext::new(&grid, cfg.params())?;
    let u = spacetime_input(cfg, &grid)?;
    let rows = if cfg.profile.is_sharp() { sharp_masses(&ctx, &u)? } else { smooth_masses(&ctx, cfg.profile, &u)? };
    let rep = Decomposition { total_mass: u.coefficient_energy() * grid.dt() * grid.cell_volume(), rows };
    let hash = content_hash(u.data());
    if cfg.output.json() {
        out.json("decompose", &rep, Some(&hash))?;
    }
    if cfg.output.csv() {
        out.csv("decompose", |w| {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(["lambda", "d", "sector", "mass"])?;
            for r in &rep.rows {
                wr.write_record([
                    format!("{}", r.lambda),
                    format!("{}", r.d),
                    r.sector.map(|s| s.to_string()).unwrap_or_default(),
                    format!("{:e}", r.mass),
                ])?;
            }
            wr.flush()?;
            Ok(())
        })?;
    }
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct NormsReport {
    critical_exponents: Vec<f64>,
    fs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gs: Option<f64>,
    table: conewave_core::spaces::DyadicNormTable,
}

pub fn norms(cfg: &RunConfig, out: &mut Writer) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let ctx = NormContext::new(&grid, cfg.params())?;
    let u = spacetime_input(cfg, &grid)?;
    let sc = cfg.critical_exponents();
    let with_z = grid.dim >= 2;
    let rep = NormsReport {
        fs: ctx.fs_norm(&u, sc[0])?,
        gs: if with_z { Some(ctx.gs_norm(&u, sc[0])?) } else { None },
        table: ctx.table(&u, with_z)?,
        critical_exponents: sc,
    };
    let hash = content_hash(u.data());
    if cfg.output.json() {
        out.json("norms", &rep, Some(&hash))?;
    }
    if cfg.output.csv() {
        out.csv("norms", |w| Ok(rep.table.write_csv(w)?))?;
    }
    Ok(Outcome::default())
}

pub fn solve(cfg: &RunConfig, out: &mut Writer) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let data = cauchy_input(cfg, &grid)?;
    let sol = picard_solve(&grid, &data, &cfg.iteration())?;
    let hash = data_hash(&data);
    let mut res = Outcome::default();
    let trace = &sol.trace;
    let mut primary = None;
    if cfg.output.json() {
        primary = Some(out.json("trace", trace, Some(&hash))?);
    }
    if cfg.output.csv() {
        let p = out.csv("trace", |w| Ok(trace.write_csv(w)?))?;
        primary.get_or_insert(p);
    }
    if !trace.converged {
        res.failed.extend(primary);
    }
    Ok(res)
}

#[derive(Serialize)]
struct ScatterReport<'a> {
    converged: bool,
    summary: Option<&'a conewave_core::solver::ScatteringSummary>,
    fields: Vec<String>,
}

pub fn scatter(cfg: &RunConfig, out: &mut Writer) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let data = cauchy_input(cfg, &grid)?;
    let (sol, sc) = solve_with_scattering(&grid, &data, &cfg.iteration())?;
    let hash = data_hash(&data);
    let mut fields = Vec::new();
    if let Some(sc) = &sc {
        for (side, list) in [("plus", &sc.plus), ("minus", &sc.minus)] {
            for (k, d) in list.iter().enumerate() {
                for (name, f) in [("f", &d.f), ("g", &d.g)] {
                    let file = format!("{name}_{side}_{k}.cwf");
                    save_spatial(out.path(&file), &grid, f)?;
                    out.written.push(out.path(&file));
                    fields.push(file);
                }
            }
        }
    }
    let rep = ScatterReport { converged: sol.trace.converged, summary: sol.trace.scattering.as_ref(), fields };
    let mut primary = None;
    if cfg.output.json() {
        primary = Some(out.json("scatter", &rep, Some(&hash))?);
    }
    if let (true, Some(sc)) = (cfg.output.csv(), &sc) {
        let p = out.csv("delta", |w| Ok(sc.write_csv(w)?))?;
        primary.get_or_insert(p);
    }
    let mut res = Outcome::default();
    if sc.is_none() {
        res.failed.extend(primary);
    }
    Ok(res)
}

/// One verification result ready to be written.
enum Item {
    Estimate(EstimateReport),
    Support(v::SupportCheckReport),
    Oracle(EstimateReport, Vec<v::FOracleResult>),
}

#[derive(Serialize)]
struct OracleReport<'a> {
    estimate: &'a EstimateReport,
    fields: &'a [v::FOracleResult],
}

impl Item {
    fn status(&self) -> CheckStatus {
        match self {
            Item::Estimate(r) | Item::Oracle(r, _) => r.status,
            Item::Support(r) => r.status,
        }
    }

    /// Value compared against a golden interval.
    fn value(&self) -> f64 {
        match self {
            Item::Estimate(r) | Item::Oracle(r, _) => r.max,
            Item::Support(r) if r.config.lemma == Lemma::BTerm => r.measured.c_out,
            Item::Support(r) => r.measured.c_ang,
        }
    }
}

fn tag(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn estimate_items(cfg: &RunConfig, id: &str) -> Result<Vec<(String, Item)>> {
    let vb = &cfg.verify;
    let n = cfg.grid.n;
    let ens = EnsembleSpec { law: vb.law, ..EnsembleSpec::new(vb.ensemble, cfg.seed) };
    let mut items = Vec::new();
    if id == "support" {
        let mode = match vb.mode {
            SupportMode::Exhaustive => CheckMode::Exhaustive,
            SupportMode::Sampled => CheckMode::Sampled { pairs: vb.pairs, seed: cfg.seed },
        };
        for &lemma in &vb.lemmas {
            for &l in &vb.lambdas {
                for &m in &vb.mus {
                    for &d in &vb.ds {
                        let sc = v::SupportCheckConfig::new(lemma, n, l, m, d, vb.c, mode);
                        let name = serde_json::to_value(lemma)?.as_str().unwrap_or("lemma").to_string();
                        let key = format!("support-{name}-n{n}-l{}-mu{}-d{}", tag(l), tag(m), tag(d));
                        items.push((key, Item::Support(v::bilinear_support_check(&sc)?)));
                    }
                }
            }
        }
        return Ok(items);
    }
    let grid = cfg.grid()?;
    if id == "f-proxy" {
        let oc = v::FOracleConfig {
            grid: grid.clone(),
            lambda: vb.lambdas[0],
            ensemble: ens,
            max_iterations: vb.oracle_iterations,
            gap_tol: vb.oracle_gap,
        };
        let (rep, res) = v::f_proxy_fidelity(&oc)?;
        items.push((format!("f-proxy-n{n}-l{}", tag(oc.lambda)), Item::Oracle(rep, res)));
        return Ok(items);
    }
    let ctx = NormContext::new(&grid, cfg.params())?;
    for &l in &vb.lambdas {
        match id {
            "strichartz" => {
                for [q, r] in &vb.exponents {
                    let rep = v::strichartz_ratio(&grid, q.0, r.0, l, &ens)?;
                    items.push((format!("strichartz-n{n}-q{}-r{}-l{}", tag(q.0), tag(r.0), tag(l)), Item::Estimate(rep)));
                }
            }
            "local-strichartz" => {
                for &d in &vb.ds {
                    let rep = v::local_strichartz_ratio(&grid, l, d, &ens, vb.local_mode)?;
                    items.push((format!("local-strichartz-n{n}-l{}-d{}", tag(l), tag(d)), Item::Estimate(rep)));
                }
            }
            "angular-reconstruction" => {
                for rep in v::angular_reconstruction_ratio(&ctx, l, vb.delta, &ens)? {
                    items.push((format!("{}-n{n}-l{}", rep.id, tag(l)), Item::Estimate(rep)));
                }
            }
            "y-l2" => items.push((format!("y-l2-n{n}-l{}", tag(l)), Item::Estimate(v::y_l2_ratio(&ctx, l, &ens)?))),
            "y-in-z" => {
                items.push((format!("y-in-z-n{n}-l{}", tag(l)), Item::Estimate(v::y_in_z_ratio(&ctx, l, &ens)?)))
            }
            "product" => {
                for &kind in &vb.products {
                    for &m in &vb.mus {
                        let pc = v::ProductConfig { kind, lambda: l, mu: m, c: vb.c, ensemble: ens.clone() };
                        let rep = v::product_estimate_check(&ctx, &pc)?;
                        items.push((format!("{}-n{n}-l{}-mu{}", rep.id, tag(l), tag(m)), Item::Estimate(rep)));
                    }
                }
            }
            "energy" => {
                // Independent of lambda; run once.
                if items.is_empty() {
                    for rep in v::energy_ratio(&ctx, cfg.critical_exponents()[0], &ens)? {
                        items.push((format!("{}-n{n}", rep.id), Item::Estimate(rep)));
                    }
                }
            }
            _ => bail!("verify.estimates: unknown estimate id '{id}'"),
        }
    }
    Ok(items)
}

#[derive(Serialize)]
struct VerifySummary {
    reports: Vec<SummaryRow>,
    golden_mismatches: Vec<GoldenMismatch>,
}

#[derive(Serialize)]
struct SummaryRow {
    key: String,
    status: CheckStatus,
    value: f64,
}

pub fn verify(cfg: &RunConfig, out: &mut Writer) -> Result<Outcome> {
    let golden = match &cfg.verify.golden {
        Some(p) => Some(GoldenSet::load(p).with_context(|| format!("verify.golden: {}", p.display()))?),
        None => None,
    };
    let mut res = Outcome::default();
    let mut summary = VerifySummary { reports: vec![], golden_mismatches: vec![] };
    for id in &cfg.verify.estimates {
        for (key, item) in estimate_items(cfg, id)? {
            log::info!("{key}: {:?}", item.status());
            let mut primary = None;
            if cfg.output.json() {
                primary = Some(match &item {
                    Item::Estimate(r) => out.json(&key, r, None)?,
                    Item::Support(r) => out.json(&key, r, None)?,
                    Item::Oracle(r, f) => out.json(&key, &OracleReport { estimate: r, fields: f }, None)?,
                });
            }
            if cfg.output.csv() {
                let p = match &item {
                    Item::Estimate(r) | Item::Oracle(r, _) => out.csv(&key, |w| Ok(r.write_csv(w)?))?,
                    Item::Support(r) => out.csv(&key, |w| Ok(r.write_csv(w)?))?,
                };
                primary.get_or_insert(p);
            }
            let (status, value) = (item.status(), item.value());
            let mismatch = match &golden {
                Some(g) if g.get(&key).is_some() => g.check(&key, status, value)?,
                _ => None,
            };
            // With a golden entry the pinned verdict decides; otherwise a failing verdict does.
            let failed = match (&golden, &mismatch) {
                (_, Some(_)) => true,
                (Some(g), None) if g.get(&key).is_some() => false,
                _ => status == CheckStatus::Fail,
            };
            if failed {
                res.failed.extend(primary);
            }
            summary.golden_mismatches.extend(mismatch);
            summary.reports.push(SummaryRow { key, status, value });
        }
    }
    out.json("verify-summary", &summary, None)?;
    Ok(res)
}

pub fn selftest(cfg: &RunConfig, out: &mut Writer) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let outcomes = v::selftest::run_selftest_on(&grid)?;
    let p = out.json("selftest", &outcomes, None)?;
    let mut res = Outcome::default();
    for o in outcomes.iter().filter(|o| !o.passed) {
        log::error!("{}: {}", o.name, o.detail);
    }
    if outcomes.iter().any(|o| !o.passed) {
        res.failed.push(p);
    }
    Ok(res)
}

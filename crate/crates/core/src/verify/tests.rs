use super::*;
use crate::spaces::{NormContext, SchematicParams};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn ctx(grid: &GridSpec) -> NormContext {
    NormContext::new(grid, SchematicParams::default()).unwrap()
}

#[test]
fn admissibility_boundary() {
    assert_eq!(admissible(6, f64::INFINITY, 2.0).unwrap(), 0.0);
    assert_relative_eq!(admissible(6, 2.0, 10.0 / 3.0).unwrap(), 3.0 - 1.8 - 0.5, epsilon = 1e-12);
    assert!(matches!(admissible(6, 2.0, 2.0), Err(Error::Inadmissible(_))));
    assert!(matches!(admissible(3, 2.0, 3.0), Err(Error::Inadmissible(_))));
    assert!(matches!(admissible(1, 4.0, 4.0), Err(Error::UnsupportedDimension { .. })));
}

#[test]
fn energy_pair_ratio_is_one() {
    let g = GridSpec::new(2, 16, 1.0, 16, 1.0).unwrap();
    let rep = strichartz_ratio(&g, f64::INFINITY, 2.0, 4.0, &EnsembleSpec::new(8, 3)).unwrap();
    assert_eq!(rep.ratios.len(), 8);
    for r in &rep.ratios {
        assert_relative_eq!(*r, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn ensembles_are_seeded_and_bounded_below() {
    let g = GridSpec::new(2, 8, 1.0, 8, 1.0).unwrap();
    let e = EnsembleSpec::new(8, 11);
    let spec = SymbolSpec::Shell { lambda: 2.0 };
    assert_eq!(e.field(&g, &spec, 3).unwrap().data(), e.field(&g, &spec, 3).unwrap().data());
    assert_ne!(e.field(&g, &spec, 3).unwrap().data(), e.field(&g, &spec, 4).unwrap().data());
    assert!(EnsembleSpec::new(7, 0).validate().is_err());
}

#[test]
fn vanishing_denominators_are_skipped() {
    let g = GridSpec::new(1, 8, 1.0, 8, 1.0).unwrap();
    let r = EstimateReport::from_ratios("x", EstimateParams::default(), &g, [(1.0, 2.0), (3.0, 0.0), (3.0, 1.0)]).unwrap();
    assert_eq!(r.skipped, 1);
    assert_eq!(r.ratios, vec![0.5, 3.0]);
    assert_eq!(r.median, 1.75);
    assert_eq!(r.clone().with_ceiling(2.0).status, CheckStatus::Fail);
    assert_eq!(r.with_ceiling(3.0).status, CheckStatus::Pass);
    assert!(EstimateReport::from_ratios("x", EstimateParams::default(), &g, [(f64::NAN, 1.0)]).is_err());
}

#[test]
fn y_l2_single_mode_matches_closed_form() {
    let g = GridSpec::new(2, 16, 1.0, 32, 2.0).unwrap();
    let c = ctx(&g);
    let s = g.lattice().index_of(&[2, 0]).unwrap();
    let chk = y_l2_single_mode(&c, 5, s).unwrap();
    assert_eq!((chk.lambda, chk.d), (2.0, 1.0));
    assert_relative_eq!(chk.measured, chk.closed_form, max_relative = 1e-8);
}

#[test]
fn angular_reconstruction_is_contractive() {
    let g = GridSpec::new(2, 32, 1.0, 32, 1.0).unwrap();
    let c = ctx(&g);
    let [x, y] = angular_reconstruction_ratio(&c, 8.0, 2.0, &EnsembleSpec::new(8, 5)).unwrap();
    assert!(x.max <= 1.0 + 1e-10, "{}", x.max);
    assert!(y.max <= 1.0 + 1e-10, "{}", y.max);
    assert!(x.max > 0.2 && y.max > 0.2);
}

#[test]
fn free_waves_saturate_the_energy_component() {
    let g = GridSpec::new(2, 16, 1.0, 32, 2.0).unwrap();
    let c = ctx(&g);
    let [shell, full] = energy_ratio(&c, 1.0, &EnsembleSpec::new(8, 2)).unwrap();
    for r in &shell.ratios {
        assert_relative_eq!(*r, 1.0, epsilon = 1e-12);
    }
    assert!(full.max.is_finite() && full.max > 0.0);
}

#[test]
fn y_in_z_is_outside_the_claimed_range_below_six() {
    let g = GridSpec::new(2, 16, 1.0, 16, 2.0).unwrap();
    let rep = y_in_z_ratio(&ctx(&g), 4.0, &EnsembleSpec::new(8, 9)).unwrap();
    assert!(rep.outside_claimed_range);
    assert!(rep.max.is_finite() && rep.max > 0.0);
}

fn product_grid() -> (GridSpec, NormContext) {
    let g = GridSpec::new(2, 32, 1.0, 32, 1.0).unwrap();
    let c = ctx(&g);
    (g, c)
}

fn mode(g: &GridSpec, tau: i64, xi: [i64; 2]) -> SpaceTimeField {
    let mut u = SpaceTimeField::zeros(g, Rep::SpacetimeFourier);
    let j = crate::grid::uncentered(tau, g.nt).unwrap();
    let s = g.lattice().index_of(&xi).unwrap();
    u.slice_mut(j)[s] = Complex64::new(1.0, 0.0);
    u
}

#[test]
fn product_single_mode_arithmetic() {
    let (g, c) = product_grid();
    let cfg = ProductConfig { kind: ProductKind::HlA, lambda: 8.0, mu: 1.0, c: 0.125, ensemble: EnsembleSpec::new(8, 0) };
    let (l, r) = product_sides(&c, &cfg, &mode(&g, 0, [1, 0]), &mode(&g, 10, [8, 0])).unwrap();
    // A = (N_t N_x^2)^{-1/2}; left 2 pi A^2, right G_1(u) F_8(v) = A * 2^{1/2} A.
    let a2 = 1.0 / (32.0 * 32.0 * 32.0);
    assert_relative_eq!(l, std::f64::consts::TAU * a2, max_relative = 1e-10);
    assert_relative_eq!(r, 2f64.sqrt() * a2, max_relative = 1e-10);
}

#[test]
fn product_rejects_misplaced_frequencies() {
    let (_, c) = product_grid();
    let cfg = ProductConfig { kind: ProductKind::CII, lambda: 4.0, mu: 1.0, c: 0.125, ensemble: EnsembleSpec::new(8, 0) };
    let err = product_estimate_check(&c, &cfg).unwrap_err();
    assert!(err.to_string().contains("C_II"), "{err}");
}

#[test]
fn product_zero_input_is_skipped() {
    let (g, c) = product_grid();
    let cfg = ProductConfig { kind: ProductKind::HlB, lambda: 8.0, mu: 1.0, c: 0.5, ensemble: EnsembleSpec::new(8, 0) };
    let zero = SpaceTimeField::zeros(&g, Rep::SpacetimeFourier);
    let (_, r) = product_sides(&c, &cfg, &mode(&g, 0, [1, 0]), &zero).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn product_ratios_are_homogeneous() {
    let (g, c) = product_grid();
    let e = EnsembleSpec::new(8, 4);
    let u = e.field(&g, &SymbolSpec::Shell { lambda: 1.0 }, 0).unwrap();
    let v = e.field(&g, &SymbolSpec::Shell { lambda: 8.0 }, 1).unwrap();
    for kind in [ProductKind::HlA, ProductKind::HlB, ProductKind::CI, ProductKind::CII, ProductKind::CIII] {
        let cfg = ProductConfig { kind, lambda: 8.0, mu: 1.0, c: 0.5, ensemble: e.clone() };
        let (l0, r0) = product_sides(&c, &cfg, &u, &v).unwrap();
        let mut u3 = u.clone();
        u3.scale(3.0);
        let mut v7 = v.clone();
        v7.scale(-0.25);
        let (l1, r1) = product_sides(&c, &cfg, &u3, &v7).unwrap();
        assert_relative_eq!(l0 / r0, l1 / r1, max_relative = 1e-12);
    }
}

fn formula_field(g: &GridSpec, w: f64) -> SpaceTimeField {
    let n = g.spatial_len();
    let data = (0..g.nt * n)
        .map(|i| {
            let (j, s) = ((i / n) as f64, (i % n) as f64);
            Complex64::new((w * j + 0.7 * s + 0.1 * j * s).cos(), (0.9 * j - w * s).sin())
        })
        .collect();
    SpaceTimeField::from_data(g, Rep::SpacetimeFourier, data).unwrap()
}

#[test]
fn f_oracle_matches_conic_solver() {
    // Infimum of the split problem from an interior-point conic solver.
    let frozen = [(1.3, 1.2030878618577083), (0.37, 1.2223662575139125), (2.9, 1.214241207481622)];
    let cfg = FOracleConfig::tiny(0).unwrap();
    let c = ctx(&cfg.grid);
    for (w, want) in frozen {
        let r = f_norm_oracle(&c, &formula_field(&cfg.grid, w), 2.0, &cfg).unwrap();
        assert!(r.dual <= want * (1.0 + 1e-9) && r.primal >= want * (1.0 - 1e-9));
        assert_relative_eq!(r.primal, want, max_relative = 1e-7);
        assert!(r.proxy >= r.oracle * (1.0 - 1e-9));
    }
}

#[test]
fn f_proxy_within_factor_two_on_small_ensemble() {
    let mut cfg = FOracleConfig::tiny(21).unwrap();
    cfg.ensemble.count = 12;
    let (rep, res) = f_proxy_fidelity(&cfg).unwrap();
    assert_eq!(rep.status, CheckStatus::Pass, "{:?}", rep.ratios);
    assert!(res.iter().all(|r| r.primal - r.dual <= 1e-6 * r.primal));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn y_l2_ratio_is_scale_invariant(seed in 0u64..1000, a in 0.01f64..100.0) {
        let g = GridSpec::new(2, 8, 1.0, 16, 2.0).unwrap();
        let c = ctx(&g);
        let e = EnsembleSpec::new(8, seed);
        let plain = y_l2_ratio(&c, 2.0, &e).unwrap();
        let u = e.field(&g, &SymbolSpec::Shell { lambda: 2.0 }, 0).unwrap();
        let mut ua = u.clone();
        ua.scale(a);
        let num: f64 = c.shell_rows(&ua, 2.0).unwrap().iter().map(|r| r.x).fold(0.0, f64::max);
        prop_assert!((num / c.y_norm(&ua, 2.0).unwrap() - plain.ratios[0]).abs() <= 1e-12 * plain.ratios[0]);
    }
}

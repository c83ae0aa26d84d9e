use efpr_core::diagnostics::{a_priori_bounds, admissible_interval, discrete_energy};
use efpr_core::ef_scheme::{scheme_coefficients, EfParams, SchemeCoefficients};
use efpr_core::eos::{derive_eos_params, EosParams, Substance, GAS_CONSTANT};
use efpr_core::grid::{CellField, Grid2D};
use efpr_core::solver::{apply_operator, run, solve_spd, SolverConfig, Stepper};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C_GAS: f64 = 249.1123;
const C_LIQ: f64 = 9526.8428;

fn butane() -> (EosParams, EfParams) {
    let eos = derive_eos_params(&Substance::n_butane(), 330.0, 0.0, GAS_CONSTANT).unwrap();
    let ef = EfParams::new(0.9 * C_GAS, 1.1 * C_LIQ, &eos, None).unwrap();
    (eos, ef)
}

fn random_state(g: &Grid2D, ef: &EfParams, seed: u64) -> CellField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CellField::from_fn(g, |_, _| rng.random_range(ef.c_min..ef.c_max))
}

fn square_droplet(g: &Grid2D) -> CellField {
    let half = 0.25 * g.lx();
    CellField::from_fn(g, |i, j| {
        let (x, y) = g.center(i, j);
        if x.abs() <= half && y.abs() <= half {
            C_LIQ
        } else {
            C_GAS
        }
    })
}

/// Five-point stencil written out entry by entry.
fn dense_operator(g: &Grid2D, coeffs: &SchemeCoefficients, kappa: f64, shift: f64) -> DMatrix<f64> {
    let n = g.cells();
    let w = kappa / (g.h * g.h);
    let mut a = DMatrix::zeros(n, n);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = i + g.nx * j;
            a[(k, k)] += shift + coeffs.nu.values()[k];
            let mut link = |other: usize| {
                a[(k, k)] += w;
                a[(k, other)] -= w;
            };
            if i > 0 {
                link(k - 1);
            }
            if i + 1 < g.nx {
                link(k + 1);
            }
            if j > 0 {
                link(k - g.nx);
            }
            if j + 1 < g.ny {
                link(k + g.nx);
            }
        }
    }
    a
}

fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = y.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

#[test]
fn three_by_three_solve_matches_dense_lu() {
    let (eos, ef) = butane();
    let g = Grid2D::new(3, 3, 3e-10).unwrap();
    let c = random_state(&g, &ef, 11);
    let coeffs = scheme_coefficients(&c, &ef, &eos).unwrap();
    for tau in [1e-2, 1.0, 1e10] {
        let cfg = SolverConfig {
            tau,
            cg_rel_tol: 1e-13,
            ..SolverConfig::default()
        };
        let a = dense_operator(&g, &coeffs, eos.kappa, cfg.shift());
        let rhs = random_state(&g, &ef, 12);
        let exact = a
            .clone()
            .lu()
            .solve(&DVector::from_column_slice(rhs.values()))
            .unwrap();
        let cg = solve_spd(&rhs, &coeffs, &cfg, eos.kappa, &g, None).unwrap();
        assert!(rel_err(cg.solution.values(), exact.as_slice()) <= 1e-8);

        let applied = apply_operator(&c, &coeffs, &cfg, eos.kappa, &g).unwrap();
        let dense = &a * DVector::from_column_slice(c.values());
        assert!(rel_err(applied.values(), dense.as_slice()) <= 1e-14);
    }
}

#[test]
fn step_matches_dense_bordered_system() {
    let (eos, ef) = butane();
    let g = Grid2D::new(3, 3, 3e-10).unwrap();
    let c_old = random_state(&g, &ef, 21);
    let coeffs = scheme_coefficients(&c_old, &ef, &eos).unwrap();
    let cfg = SolverConfig {
        tau: 1e3,
        cg_rel_tol: 1e-13,
        ..SolverConfig::default()
    };
    let n = g.cells();
    let h2 = g.h * g.h;
    let a = dense_operator(&g, &coeffs, eos.kappa, cfg.shift());
    let mut big = DMatrix::zeros(n + 1, n + 1);
    big.view_mut((0, 0), (n, n)).copy_from(&a);
    let mut b = DVector::zeros(n + 1);
    for k in 0..n {
        big[(k, n)] = -1.0;
        big[(n, k)] = h2;
        b[k] = cfg.shift() * c_old.values()[k] + coeffs.source.values()[k];
    }
    let c_t = g.total(&c_old).unwrap();
    b[n] = c_t;
    let sol = big.lu().solve(&b).unwrap();

    let mut stepper = Stepper::new(&c_old, &g, &eos, &ef, cfg).unwrap();
    let (c_new, report) = stepper.step(&c_old).unwrap();
    assert!(rel_err(c_new.values(), &sol.as_slice()[..n]) <= 1e-8);
    assert!((report.mu_e - sol[n]).abs() <= 1e-8 * sol[n].abs());
    assert!((report.mass - c_t).abs() <= 1e-12 * c_t);
}

#[test]
fn manufactured_solution_is_recovered() {
    let (eos, ef) = butane();
    let g = Grid2D::new(40, 30, 3e-10).unwrap();
    let c = random_state(&g, &ef, 31);
    let coeffs = scheme_coefficients(&c, &ef, &eos).unwrap();
    let cfg = SolverConfig {
        tau: 1e10,
        cg_rel_tol: 1e-12,
        ..SolverConfig::default()
    };
    let x_star = random_state(&g, &ef, 32);
    let rhs = apply_operator(&x_star, &coeffs, &cfg, eos.kappa, &g).unwrap();
    let sol = solve_spd(&rhs, &coeffs, &cfg, eos.kappa, &g, None).unwrap();
    assert!(sol.residual <= cfg.cg_rel_tol);
    let err = rel_err(sol.solution.values(), x_star.values());
    assert!(err <= 10.0 * cfg.cg_rel_tol, "relative error {err}");
}

#[test]
fn operator_is_symmetric_and_coercive() {
    let (eos, ef) = butane();
    let g = Grid2D::new(17, 13, 3e-10).unwrap();
    let c = random_state(&g, &ef, 41);
    let coeffs = scheme_coefficients(&c, &ef, &eos).unwrap();
    let nu_min = coeffs.nu.min();
    for tau in [1e-2, 1.0, 1e10] {
        let cfg = SolverConfig {
            tau,
            ..SolverConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let a = CellField::from_fn(&g, |_, _| rng.random_range(-1.0..1.0));
            let b = CellField::from_fn(&g, |_, _| rng.random_range(-1.0..1.0));
            let aa = apply_operator(&a, &coeffs, &cfg, eos.kappa, &g).unwrap();
            let ab = apply_operator(&b, &coeffs, &cfg, eos.kappa, &g).unwrap();
            let lhs = g.inner(&aa, &b).unwrap();
            let rhs = g.inner(&a, &ab).unwrap();
            let scale = (g.inner(&aa, &aa).unwrap() * g.inner(&b, &b).unwrap()).sqrt();
            assert!((lhs - rhs).abs() <= 1e-13 * scale);
            let quad = g.inner(&aa, &a).unwrap();
            let norm2 = g.inner(&a, &a).unwrap();
            assert!(quad >= (cfg.shift() + nu_min) * norm2 * (1.0 - 1e-14));
        }
    }
}

#[test]
fn fifty_step_run_keeps_its_invariants() {
    let (eos, ef) = butane();
    let g = Grid2D::new(32, 32, 30e-9 / 32.0)
        .unwrap()
        .with_origin(-15e-9, -15e-9);
    let c0 = square_droplet(&g);
    let c_t = g.total(&c0).unwrap();
    let (mu_lo, mu_hi) = a_priori_bounds(&ef, &eos, c_t, g.area()).unwrap();
    let interval = admissible_interval(&ef, &eos).unwrap();
    let cfg = SolverConfig::default();
    let mut previous = discrete_energy(&c0, &eos, &g).unwrap().total;
    let out = run(&c0, 50, &ef, &eos, &cfg, &g, |r, state| {
        assert!((r.mass - c_t).abs() <= 1e-8 * c_t, "step {}", r.step_index);
        assert!(
            mu_lo <= r.mu_e && r.mu_e <= mu_hi,
            "step {}: {}",
            r.step_index,
            r.mu_e
        );
        assert!(r.energy.total <= previous, "step {}", r.step_index);
        previous = r.energy.total;
        if r.admissibility_ok {
            let slack = 1e-10 * ef.c_max;
            assert!(state.min() >= ef.c_min - slack && state.max() <= ef.c_max + slack);
        }
        Ok(())
    })
    .unwrap();
    assert_eq!(out.reports.len(), 50);
    assert!(out.reports.iter().all(|r| r.all_ok()));
    assert!(mu_lo <= interval.mu_lower && interval.mu_upper <= mu_hi);
}

#[test]
fn identical_runs_are_bit_identical() {
    let (eos, ef) = butane();
    let g = Grid2D::new(24, 24, 30e-9 / 24.0)
        .unwrap()
        .with_origin(-15e-9, -15e-9);
    let c0 = square_droplet(&g);
    let cfg = SolverConfig::default();
    let a = run(&c0, 10, &ef, &eos, &cfg, &g, |_, _| Ok(())).unwrap();
    let b = run(&c0, 10, &ef, &eos, &cfg, &g, |_, _| Ok(())).unwrap();
    assert_eq!(a.reports, b.reports);
    let bits = |f: &CellField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.final_state), bits(&b.final_state));
}

#[test]
fn uniform_state_is_a_fixed_point_at_any_tau() {
    let (eos, ef) = butane();
    let g = Grid2D::new(8, 8, 3e-10).unwrap();
    for c_bar in [300.0, 4000.0, 10_000.0] {
        for tau in [1e-2, 1.0, 1e10] {
            let c0 = CellField::constant(8, 8, c_bar);
            let cfg = SolverConfig {
                tau,
                ..SolverConfig::default()
            };
            let mut stepper = Stepper::new(&c0, &g, &eos, &ef, cfg).unwrap();
            let (c1, r) = stepper.step(&c0).unwrap();
            let mu_b = eos.bulk_chemical_potential(c_bar).unwrap();
            assert!((r.mu_e - mu_b).abs() <= 1e-9 * mu_b.abs());
            assert!(c1
                .values()
                .iter()
                .all(|&v| (v - c_bar).abs() <= 1e-9 * c_bar));
        }
    }
}

use isofactor::darboux::{map_eigenfunction, oscillator_mielnik};
use isofactor::eigensolve::{build_hamiltonian, eigenpairs};
use isofactor::grid::{cumulative_integral, derivative, integral, Grid, GridFunction};
use isofactor::seeds::{hydrogen_seed, oscillator_seed, oscillator_gamma_bound};
use isofactor::specfun::{gamma_ratio, hyp1f1, pochhammer};
use isofactor::Error;
use proptest::prelude::*;

/// mpmath at 40 digits.
const HYP1F1_REFERENCE: &[(f64, f64, f64, f64)] = &[
    (0.25, 0.5, 4.0, 20.420939405034179244),
    (0.25, 0.5, -4.0, 0.37402255191132824763),
    (-0.5, 0.5, 9.0, -564.18680978090092057),
    (0.75, 1.5, 16.0, 813471.62639271129071),
    (1.3, 2.7, -12.5, 0.062389385220879450409),
    (-2.5, 1.5, 7.0, 2.9688305989962477239),
    (3.0, 4.0, -20.0, 0.00074999965836378708081),
    (3.0, 4.0, -150.0, 1.7777777777777777778e-6),
    (1.0, 6.0, -300.0, 0.016446651901234567901),
    (0.2, 0.5, 64.0, 6.9395537474498291652e+26),
    (0.7, 1.5, 64.0, 1.5339487984584927956e+26),
    (-1.0, -2.0, 5.0, 3.5),
    (4.5, 0.3, 19.0, 20978448987444.960559),
    (-3.7, 2.2, -18.0, 1117.7436842613969782),
    (0.5, 1.5, -1.0, 0.7468241328124270254),
    (5.0, 6.0, -240.0, 1.5070408950617283951e-10),
    (1.25, 0.5, -70.0, -0.0018700971352212787754),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn hyp1f1_matches_reference_table() {
    for &(a, b, z, want) in HYP1F1_REFERENCE {
        let got = hyp1f1(a, b, z).unwrap();
        assert!(rel(got, want) < 1e-11, "M({a}, {b}, {z}) = {got}, want {want}");
    }
}

#[test]
fn gamma_ratio_never_hits_a_pole_on_coulomb_grid() {
    for l in 1..=12u32 {
        let z = -2.0 * l as f64;
        for m in 0..=2 * l {
            let r = gamma_ratio(z, m).unwrap();
            assert!(r.is_finite() && r != 0.0, "l = {l}, m = {m}");
        }
        for m in 2 * l + 1..2 * l + 4 {
            assert!(matches!(gamma_ratio(z, m), Err(Error::GammaPole { .. })));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kummer_transformation(a in 0.05f64..5.0, gap in 0.05f64..6.0, z in -20.0f64..20.0) {
        let b = a + gap;
        let lhs = hyp1f1(a, b, z).unwrap();
        let rhs = z.exp() * hyp1f1(b - a, b, -z).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn equal_parameters_give_exponential(a in 0.1f64..10.0, z in -20.0f64..20.0) {
        prop_assert!(rel(hyp1f1(a, a, z).unwrap(), z.exp()) < 1e-12);
    }

    #[test]
    fn contiguous_relation_in_a(a in 0.5f64..4.0, b in 0.5f64..5.0, z in -20.0f64..20.0) {
        // (b - a) M(a-1) + (2a - b + z) M(a) - a M(a+1) = 0
        let m0 = hyp1f1(a - 1.0, b, z).unwrap();
        let m1 = hyp1f1(a, b, z).unwrap();
        let m2 = hyp1f1(a + 1.0, b, z).unwrap();
        let terms = [(b - a) * m0, (2.0 * a - b + z) * m1, -a * m2];
        let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
        prop_assert!(terms.iter().sum::<f64>().abs() <= 1e-10 * scale);
    }

    #[test]
    fn gamma_ratio_inverts_pochhammer(z in -10.0f64..10.0, m in 0u32..12) {
        prop_assume!((0..m).all(|j| (z + j as f64).abs() > 1e-6));
        let r = gamma_ratio(z, m).unwrap();
        prop_assert!((r * pochhammer(z, m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn integral_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, w in 0.1f64..4.0, n in 11usize..400) {
        let grid = Grid::new(-2.0, 3.0, n).unwrap();
        let f = GridFunction::from_fn(grid, |x| (w * x).sin()).unwrap();
        let g = GridFunction::from_fn(grid, |x| x * x - 1.0).unwrap();
        let combo = f.scale(a).add(&g.scale(b)).unwrap();
        let lhs = integral(&combo);
        let rhs = a * integral(&f) + b * integral(&g);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + a.abs() + b.abs()) * 10.0);
    }

    #[test]
    fn cumulative_integral_inverts_derivative(w in 0.2f64..3.0, c in -2.0f64..2.0, anchor in -1.9f64..2.9) {
        let grid = Grid::new(-2.0, 3.0, 2001).unwrap();
        let f = GridFunction::from_fn(grid, |x| (w * x).cos() + c).unwrap();
        let back = derivative(&cumulative_integral(&f, anchor).unwrap());
        let h = grid.spacing();
        let err = (1..grid.len() - 1)
            .map(|i| (back.get(i) - f.get(i)).abs())
            .fold(0.0, f64::max);
        prop_assert!(err <= (w.powi(3) + 1.0) * h * h, "err {err}");
    }

    #[test]
    fn accepted_oscillator_seeds_are_single_signed(eps in -7.0f64..0.95, nu in -0.95f64..0.95) {
        let grid = Grid::new(-6.0, 6.0, 1201).unwrap();
        let seed = oscillator_seed(eps, nu, &grid).unwrap();
        let m = seed.mantissa().values();
        prop_assert!(m.iter().all(|v| *v > 0.0) || m.iter().all(|v| *v < 0.0));
    }

    #[test]
    fn oscillator_seed_solves_schrodinger(eps in -5.0f64..0.9, nu in -0.9f64..0.9) {
        let grid = Grid::new(-3.0, 3.0, 4001).unwrap();
        let u = oscillator_seed(eps, nu, &grid).unwrap().values().unwrap();
        let h = grid.spacing();
        let mut worst = 0.0f64;
        for i in 1..grid.len() - 1 {
            let x = grid.x(i);
            let upp = (u.get(i + 1) - 2.0 * u.get(i) + u.get(i - 1)) / (h * h);
            worst = worst.max((-upp + (x * x - eps) * u.get(i)).abs());
        }
        prop_assert!(worst / u.max_abs() <= 1e-4, "{}", worst / u.max_abs());
    }

    #[test]
    fn accepted_hydrogen_seeds_are_single_signed(l in 1u32..4, j in 0u32..3, lambda in -4.0f64..6.0) {
        prop_assume!(j < l);
        let k = -(j as i64);
        let ok = if j % 2 == 0 { lambda < 1.0 } else { lambda > 1.0 };
        prop_assume!(ok);
        let grid = Grid::radial(40.0, 4000).unwrap();
        let seed = hydrogen_seed(l, k, lambda, &grid).unwrap();
        let m = seed.mantissa().values();
        prop_assert!(m.iter().all(|v| *v > 0.0) || m.iter().all(|v| *v < 0.0));
    }

    #[test]
    fn mielnik_residual_and_norm_identity(g in 0.9f64..10.0, negative in any::<bool>()) {
        let gamma = if negative { -g } else { g };
        prop_assume!(gamma.abs() > oscillator_gamma_bound());
        let grid = Grid::new(-8.0, 8.0, 2001).unwrap();
        let t = oscillator_mielnik(gamma, &grid).unwrap();
        prop_assert!(t.residual().unwrap().max_abs() <= 1e-6);
        // ⟨Aψ, Aψ⟩ = (E - ε)⟨ψ, ψ⟩
        let pairs = eigenpairs(&build_hamiltonian(&t.source_potential).unwrap(), 4).unwrap();
        for (e, psi) in &pairs {
            let mapped = map_eigenfunction(&t.scheme, psi, *e).unwrap();
            prop_assert!((mapped.raw_norm.powi(2) - 1.0).abs() <= 1e-4, "{}", mapped.raw_norm);
        }
    }
}

use floqdyn_core::floquet::{
    assemble_floquet_hamiltonian, evolve_density, floquet_evolution, quasi_eigensystem, FourierHamiltonian,
};
use floqdyn_core::friction::split;
use floqdyn_core::linalg::{self, c, CMat};
use floqdyn_core::qme::{build_context, dissipator_floquet, dissipator_hilbert, Flavor, ReducedDensityMatrix};
use floqdyn_core::surface_hopping::{bessel_fermi, hop_rates, AhParams};
use floqdyn_core::LeadSpec;
use proptest::prelude::*;

fn hermitian(d: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |v| {
        let m = CMat::from_fn(d, d, |i, j| c(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        (&m + m.adjoint()) * c(0.5, 0.0)
    })
}

fn density(d: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |v| {
        let a = CMat::from_fn(d, d, |i, j| c(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        let rho = &a * a.adjoint() + linalg::identity(d) * c(1e-3, 0.0);
        let tr = linalg::trace(&rho);
        rho / tr
    })
}

fn driven(d: usize) -> impl Strategy<Value = FourierHamiltonian> {
    (hermitian(d), hermitian(d), 0.5f64..3.0)
        .prop_map(|(h0, v, w)| FourierHamiltonian::cosine_drive(h0, v, w).unwrap())
}

fn lead(d: usize) -> impl Strategy<Value = LeadSpec> {
    (prop::collection::vec(-1.0f64..1.0, 2 * d * d), -1.0f64..1.0, 0.5f64..5.0).prop_map(move |(v, mu, beta)| {
        let a = CMat::from_fn(d, d, |i, j| c(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        LeadSpec::new(&a * a.adjoint() * c(0.3, 0.0), mu, beta).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn undriven_quasienergies_form_a_ladder(h in hermitian(3), omega in 0.3f64..4.0, n_max in 0usize..4) {
        let fh = FourierHamiltonian::time_independent(h.clone(), omega).unwrap();
        let eig = quasi_eigensystem(&assemble_floquet_hamiltonian(&fh, n_max)).unwrap();
        let (e, _) = linalg::eigh(&h);
        let mut expected: Vec<f64> = (-(n_max as i32)..=n_max as i32)
            .flat_map(|n| e.iter().map(move |&x| x + n as f64 * omega))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.quasienergies().iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn eigensystem_reconstructs_floquet_hamiltonian(h in driven(2), n_max in 1usize..6) {
        let hf = assemble_floquet_hamiltonian(&h, n_max);
        let eig = quasi_eigensystem(&hf).unwrap();
        prop_assert!(linalg::frobenius(&(eig.reconstruct() - hf.matrix())) <= 1e-10);
        prop_assert!(eig.orthonormality_defect() <= 1e-10);
    }

    #[test]
    fn floquet_evolution_keeps_densities_physical(h in driven(2), rho in density(2), t in 0.0f64..10.0) {
        let eig = quasi_eigensystem(&assemble_floquet_hamiltonian(&h, 6)).unwrap();
        let r = evolve_density(&eig, &rho, t, 0.0).unwrap();
        prop_assert!(linalg::hermitian_deviation(&r) <= 1e-10);
        // trace drift is bounded by the unitarity defect of the truncated U
        let defect = floquet_evolution(&eig, t, 0.0).unwrap().unitarity_defect;
        prop_assert!((linalg::trace(&r).re - 1.0).abs() <= 2.0 * defect + 1e-10);
    }

    #[test]
    fn stroboscopic_evolution_is_invariant_under_period_shifts(h in driven(2), rho in density(2), t0 in -3.0f64..3.0, k in 1usize..4) {
        let eig = quasi_eigensystem(&assemble_floquet_hamiltonian(&h, 6)).unwrap();
        let period = h.period();
        let a = evolve_density(&eig, &rho, t0 + k as f64 * period, t0).unwrap();
        let b = evolve_density(&eig, &rho, t0 + (k + 1) as f64 * period, t0 + period).unwrap();
        prop_assert!(linalg::frobenius(&(a - b)) <= 1e-8);
    }

    #[test]
    fn dissipators_are_trace_free_hermitian_and_linear(
        h in driven(2), l in lead(2), x in hermitian(4), y in hermitian(4), a in -2.0f64..2.0, b in -2.0f64..2.0, t in 0.0f64..5.0,
    ) {
        let ctx = build_context(&h, &[l], 2).unwrap();
        let rx = ReducedDensityMatrix::from_hermitian(Flavor::Hilbert, x.clone(), t).unwrap();
        let ry = ReducedDensityMatrix::from_hermitian(Flavor::Hilbert, y.clone(), t).unwrap();
        let dx = dissipator_hilbert(&rx, t, &ctx).unwrap();
        let dy = dissipator_hilbert(&ry, t, &ctx).unwrap();
        prop_assert!(linalg::trace(&dx).norm() <= 1e-12 * (1.0 + linalg::frobenius(&x)));
        prop_assert!(linalg::hermitian_deviation(&dx) <= 1e-12);
        let mix = &x * c(a, 0.0) + &y * c(b, 0.0);
        let dm = dissipator_hilbert(&ReducedDensityMatrix::from_hermitian(Flavor::Hilbert, mix, t).unwrap(), t, &ctx).unwrap();
        prop_assert!(linalg::frobenius(&(dm - (dx * c(a, 0.0) + dy * c(b, 0.0)))) <= 1e-12);

        let big = linalg::kron(&linalg::identity(5), &x);
        let rf = ReducedDensityMatrix::from_hermitian(Flavor::Floquet, big, t).unwrap();
        let df = dissipator_floquet(&rf, &ctx).unwrap();
        prop_assert!(linalg::trace(&df).norm() <= 1e-12 * (1.0 + linalg::frobenius(&x)) * 5.0);
        prop_assert!(linalg::hermitian_deviation(&df) <= 1e-12);
    }

    #[test]
    fn friction_split_reconstructs(g in prop::array::uniform2(prop::array::uniform2(-10.0f64..10.0))) {
        let (s, a) = split(&g);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(s[i][j], s[j][i]);
                prop_assert_eq!(a[i][j], -a[j][i]);
                prop_assert!((s[i][j] + a[i][j] - g[i][j]).abs() <= 4.0 * f64::EPSILON * g[i][j].abs().max(g[j][i].abs()));
            }
        }
    }

    #[test]
    fn hopping_rates_are_bounded_and_complementary(a in 0.0f64..0.05, omega in 0.005f64..0.05, x in -50.0f64..50.0, kt in 0.001f64..0.1) {
        let prm = AhParams::new(0.01, a, omega, 0.0075, 0.003, kt, 0.01, 0.0).unwrap();
        let (up, down) = hop_rates(x, &prm);
        prop_assert!((0.0..=prm.gamma).contains(&up) && (0.0..=prm.gamma).contains(&down));
        prop_assert!((up + down - prm.gamma).abs() <= 1e-15);
    }

    #[test]
    fn bessel_fermi_is_monotone(a in 0.0f64..0.05, omega in 0.005f64..0.05, e in -0.2f64..0.2, de in 0.0f64..0.05) {
        let prm = AhParams::new(0.0, a, omega, 0.0, 0.003, 0.01, 0.01, 0.0).unwrap();
        let lo = bessel_fermi(e, &prm);
        let hi = bessel_fermi(e + de, &prm);
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi <= lo + 1e-15);
    }
}

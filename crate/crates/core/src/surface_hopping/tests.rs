use super::*;
use crate::thermal::fermi;
use rand::{RngCore, SeedableRng};
use std::vec::Vec;

fn params(a: f64, g: f64) -> AhParams {
    AhParams::new(0.02, a, 0.01, g, 0.003, 0.01, 0.01, 0.0).unwrap()
}

/// Always yields zero, so every rate test succeeds.
struct Zeros;

impl RngCore for Zeros {
    fn next_u32(&mut self) -> u32 {
        0
    }
    fn next_u64(&mut self) -> u64 {
        0
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        dst.fill(0);
    }
}

/// `J_n(z)` from its power series, accumulated in order of increasing `k`.
fn bessel_series(n: u32, z: f64) -> f64 {
    let mut term = (0.5 * z).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
    let mut sum = term;
    for k in 1..60 {
        term *= -(0.25 * z * z) / (k as f64 * (k + n) as f64);
        sum += term;
    }
    sum
}

#[test]
fn undriven_bessel_fermi_is_plain_fermi() {
    let prm = params(0.0, 0.0);
    for k in -50..=50 {
        let e = k as f64 * 0.002;
        assert!((bessel_fermi(e, &prm) - fermi(e, 0.0, 100.0)).abs() <= 1e-12);
    }
}

#[test]
fn bessel_weights_obey_the_sum_rule() {
    for ratio in [0.1, 1.0, 3.0, 5.0] {
        let prm = AhParams::new(0.0, ratio * 0.01, 0.01, 0.0, 0.003, 0.01, 0.01, 0.0).unwrap();
        assert!((prm.weights().sum_rule() - 1.0).abs() <= 1e-10, "A/Ω = {ratio}");
    }
}

#[test]
fn bessel_fermi_matches_an_independent_series_at_unit_ratio() {
    let prm = params(0.01, 0.0);
    let mut expected = 0.0;
    for n in (-100i32..=100).rev() {
        let j = bessel_series(n.unsigned_abs(), 1.0);
        let x = -(n as f64) * 0.01 / 0.01;
        expected += j * j / (1.0 + x.exp());
    }
    assert!((bessel_fermi(0.0, &prm) - expected).abs() < 1e-13, "{} vs {expected}", bessel_fermi(0.0, &prm));
}

#[test]
fn bessel_fermi_is_a_monotone_occupation() {
    let prm = params(0.03, 0.0);
    let mut prev = 1.0;
    for k in -400..=400 {
        let v = bessel_fermi(k as f64 * 0.001, &prm);
        assert!((0.0..=1.0).contains(&v));
        assert!(v <= prev + 1e-15);
        prev = v;
    }
    assert!(bessel_fermi(-10.0, &prm) > 1.0 - 1e-12);
    assert!(bessel_fermi(10.0, &prm) < 1e-12);
}

#[test]
fn vanishing_drive_recovers_fermi() {
    let prm = params(1e-12, 0.0);
    let sup = (-200..=200)
        .map(|k| (bessel_fermi(k as f64 * 5e-4, &prm) - fermi(k as f64 * 5e-4, 0.0, 100.0)).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 1e-10);
}

#[test]
fn short_bessel_truncation_is_rejected() {
    let prm = params(0.05, 0.0);
    assert_eq!(prm.n_bessel, 25);
    assert!(prm.clone().with_n_bessel(24).is_err());
    assert!(AhParams::new(0.0, 0.0, 0.01, 0.0, 0.003, 0.0, 0.01, 0.0).is_err());
}

#[test]
fn rates_sum_to_gamma() {
    let prm = params(0.02, 0.0075);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let x = (rng.next_u64() as f64 / u64::MAX as f64 - 0.5) * 40.0;
        let (up, down) = hop_rates(x, &prm);
        assert!((0.0..=prm.gamma).contains(&up) && (0.0..=prm.gamma).contains(&down));
        assert!((up + down - prm.gamma).abs() <= 4.0 * f64::EPSILON * prm.gamma);
    }
    let (up, down) = hop_rates(1e4, &prm);
    assert!(up < 1e-300 && (down - prm.gamma).abs() < 1e-12 * prm.gamma);
}

#[test]
fn undriven_rates_satisfy_detailed_balance() {
    let prm = params(0.0, 0.0075);
    for k in -20..=20 {
        let x = k as f64 * 0.7;
        let (up, down) = hop_rates(x, &prm);
        let expected = (-prm.gap(x) / prm.kt).exp();
        assert!(((up / down) / expected - 1.0).abs() < 1e-12);
    }
}

#[test]
fn step_size_limits_are_enforced() {
    let prm = params(0.0, 0.0075);
    assert_eq!(max_dt(&prm), 2.0);
    let s = TrajectoryState::new(0.0, 0.0, 0).unwrap();
    let mut rng = trajectory_rng(1, 0);
    assert!(sh_step(s, 2.0, &prm, &mut rng).is_ok());
    assert!(sh_step(s, 2.01, &prm, &mut rng).is_err());
    assert!(TrajectoryState::new(0.0, 0.0, 2).is_err());
}

#[test]
fn uncoupled_motion_conserves_surface_energy() {
    let prm = AhParams { gamma: 0.0, ..params(0.0, 0.0075) };
    let period = 2.0 * core::f64::consts::PI / prm.hbar_omega;
    let dt = period / 400.0;
    let mut rng = trajectory_rng(3, 0);
    let mut s = TrajectoryState::new(1.5, -0.5, 1).unwrap();
    let mut prev = s.energy(&prm);
    for _ in 0..20 {
        for _ in 0..400 {
            s = sh_step(s, dt, &prm, &mut rng).unwrap();
        }
        assert_eq!(s.surface, 1);
        let e = s.energy(&prm);
        assert!((e - prev).abs() <= 1e-8, "{}", e - prev);
        prev = e;
    }
}

#[test]
fn hops_keep_phase_space_point() {
    let prm = params(0.01, 0.0075);
    let s = TrajectoryState::new(0.3, 0.8, 0).unwrap();
    let dt = 1.0;
    let hopped = sh_step(s, dt, &prm, &mut Zeros).unwrap();
    // plain Verlet on the empty surface
    let w = prm.hbar_omega;
    let ph = s.p - 0.5 * dt * w * s.x;
    let x = s.x + dt * w * ph;
    let p = ph - 0.5 * dt * w * x;
    assert_eq!(hopped.surface, 1);
    assert_eq!((hopped.x, hopped.p), (x, p));
}

#[test]
fn flat_surfaces_hop_like_a_two_state_chain() {
    let prm = params(0.01, 0.0);
    let (up, down) = hop_rates(0.0, &prm);
    let dt = 2.0;
    let mut rng = trajectory_rng(5, 0);
    let mut s = TrajectoryState::new(0.0, 0.0, 0).unwrap();
    let (mut on0, mut on1, mut n01, mut n10) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let before = s.surface;
        s = sh_step(s, dt, &prm, &mut rng).unwrap();
        match (before, s.surface) {
            (0, 1) => n01 += 1.0,
            (1, 0) => n10 += 1.0,
            _ => {}
        }
        if before == 0 {
            on0 += 1.0
        } else {
            on1 += 1.0
        }
    }
    for (count, trials, p) in [(n01, on0, up * dt), (n10, on1, down * dt)] {
        let mean = trials * p;
        let sd = (trials * p * (1.0 - p)).sqrt();
        assert!((count - mean).abs() <= 3.0 * sd, "{count} vs {mean} ± {sd}");
    }
}

#[test]
fn analytic_population_limits() {
    let prm = params(0.01, 0.0);
    assert_eq!(analytic_population(&prm, 0.0).unwrap(), 0.0);
    let f = bessel_fermi(prm.e_d, &prm);
    assert!((analytic_population(&prm, 1e6).unwrap() - f).abs() < 1e-15);
    let half = AhParams::new(0.0, 0.0, 0.01, 0.0, 0.003, 0.03, 0.01, 0.0).unwrap();
    let t = 37.0;
    assert!((analytic_population(&half, t).unwrap() - 0.5 * (1.0 - (-0.01f64 * t).exp())).abs() < 1e-15);
    assert!(analytic_population(&params(0.0, 0.0075), 1.0).is_err());
}

#[test]
fn uncoupled_ensemble_follows_two_state_relaxation() {
    let prm = params(0.01, 0.0);
    let mut opts = EnsembleOptions::new(2000, 400.0, 21);
    opts.output_interval = Some(20.0);
    let s = run_ensemble(&prm, &opts).unwrap();
    for (k, &t) in s.t_grid.iter().enumerate() {
        let n = analytic_population(&prm, t).unwrap();
        let sd = (n * (1.0 - n) / 2000.0).sqrt();
        assert!((s.n_mean[k] - n).abs() <= 3.0 * sd.max(1e-12), "t = {t}: {} vs {n}", s.n_mean[k]);
        assert!((0.0..=1.0).contains(&s.n_mean[k]) && s.ek_mean[k] >= 0.0);
    }
}

#[test]
fn ensembles_are_reproducible_and_seed_dependent() {
    let prm = params(0.02, 0.0075);
    let mut opts = EnsembleOptions::new(20, 2000.0, 99);
    opts.steady_window = Some((1000.0, 2000.0));
    let a = run_ensemble(&prm, &opts).unwrap();
    let b = run_ensemble(&prm, &opts).unwrap();
    assert_eq!(a, b);
    opts.seed = 100;
    let c = run_ensemble(&prm, &opts).unwrap();
    assert_ne!(a.n_mean, c.n_mean);
    assert!(a.steady.is_some());
}

#[test]
fn standard_error_scales_with_ensemble_size() {
    let prm = params(0.01, 0.0);
    let run = |n| {
        let mut opts = EnsembleOptions::new(n, 100.0, 8);
        opts.output_interval = Some(100.0);
        *run_ensemble(&prm, &opts).unwrap().n_stderr.last().unwrap()
    };
    let ratio = run(400) / run(1600);
    assert!((ratio - 2.0).abs() <= 0.3, "{ratio}");
}

#[test]
fn thermal_start_has_equipartition_energy() {
    let prm = params(0.0, 0.0075);
    let mut opts = EnsembleOptions::new(4000, 2.0, 4);
    opts.initial = Initial::Boltzmann;
    let s = run_ensemble(&prm, &opts).unwrap();
    assert!((s.ek_mean[0] / (0.5 * prm.kt) - 1.0).abs() < 0.05);
    let schedule = Schedule::resolve(&prm, &opts).unwrap();
    let times: Vec<f64> = schedule.times();
    assert_eq!(times.first(), Some(&0.0));
    assert_eq!(s.t_grid, times);
}

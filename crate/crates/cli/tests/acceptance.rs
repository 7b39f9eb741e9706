//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use floqdyn::config::{load, parse_config, Overrides, RunConfig};
use floqdyn::output::csv_bytes;
use floqdyn::run::{compute, execute, FRICTION_COLUMNS, SH_COLUMNS};
use floqdyn::{presets, Report};
use floqdyn_core::floquet::{assemble_floquet_hamiltonian, quasi_eigensystem, FourierHamiltonian};
use floqdyn_core::friction::{scan_row, EnergyGrid, JunctionModel};
use floqdyn_core::linalg::{self, c, real_matrix, CMat};
use floqdyn_core::qme::{
    build_context, dissipator_floquet, dissipator_hilbert, propagate_qme, DissipatorContext, Flavor, QmeOptions,
    ReducedDensityMatrix,
};
use floqdyn_core::surface_hopping::{bessel_fermi, AhParams};
use floqdyn_core::LeadSpec;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Datasets shared between criteria.
struct Shared {
    dir: tempfile::TempDir,
    fig1a: Option<(Vec<u8>, Report)>,
    fig2: Vec<(String, Vec<u8>)>,
}

impl Shared {
    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn preset_run(sh: &Shared, name: &str, file: &str) -> (Report, Vec<u8>, f64) {
    let over = Overrides { out: Some(sh.out(file)), ..Default::default() };
    let cfg = load(Some(name), None, &over).unwrap();
    let start = Instant::now();
    let report = execute(&cfg, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let bytes = std::fs::read(&report.csv).unwrap();
    (report, bytes, secs)
}

/// Deterministic uniform numbers in `[-0.5, 0.5)`.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn hermitian(&mut self, n: usize) -> CMat {
        let m = CMat::from_fn(n, n, |_, _| c(self.next(), self.next()));
        (&m + m.adjoint()) * c(0.5, 0.0)
    }

    /// `AA†/Tr(AA†)` for a random complex `A`.
    fn density(&mut self, n: usize) -> CMat {
        let a = CMat::from_fn(n, n, |_, _| c(self.next(), self.next()));
        let mut rho = &a * a.adjoint();
        let tr = linalg::trace(&rho).re;
        rho *= c(1.0 / tr, 0.0);
        linalg::hermitize(&mut rho);
        rho
    }
}

/// Driven two-level junction at fixed nuclei, one lead per orbital.
fn junction_context(n_max: usize) -> DissipatorContext {
    let (x, y, a, b, delta) = (-1.0, 1.0, 1.0, 1.0, 2.0);
    let h = FourierHamiltonian::cosine_drive(
        real_matrix(2, &[x + delta, a * y, a * y, -x - delta]),
        real_matrix(2, &[0.0, b, b, 0.0]),
        1.0,
    )
    .unwrap();
    let leads = [
        LeadSpec::diagonal(&[1.0, 0.0], 0.0, 2.0).unwrap(),
        LeadSpec::diagonal(&[0.0, 1.0], 0.0, 2.0).unwrap(),
    ];
    build_context(&h, &leads, n_max).unwrap()
}

/// `J_n(z)` by its power series.
fn bessel_j(n: i32, z: f64) -> f64 {
    let m = n.unsigned_abs();
    let mut term = (0.5 * z).powi(m as i32) / (1..=m).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..80 {
        term *= -(0.25 * z * z) / (k as f64 * (k + m) as f64);
        sum += term;
    }
    if n < 0 && m % 2 == 1 {
        -sum
    } else {
        sum
    }
}

fn column(bytes: &[u8], name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_reader(bytes);
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[k].parse().unwrap()).collect()
}

fn header(bytes: &[u8]) -> Vec<String> {
    csv::Reader::from_reader(bytes).headers().unwrap().iter().map(String::from).collect()
}

// 1
fn floquet_direct(_: &mut Shared) -> Outcome {
    let doc = r#"
workflow = "floquet-propagate"
[model]
hamiltonian = { kind = "junction", a = 1.0, b = 1.0, delta = 2.0, omega = 1.0, x = -1.0, y = 1.0 }
initial_populations = [1.0, 0.0]
[numerics]
periods = 5
samples_per_period = 20
"#;
    let start = Instant::now();
    let d = compute(&parse_config(doc).unwrap(), None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rel = d.diagnostics["reference"]["max_rel_error"].as_f64().unwrap();
    let n_max = &d.diagnostics["n_max"];
    verdict(rel <= 1e-6 && secs < 10.0, format!("max relative error {rel:.2e} at n_max {n_max} (<= 1e-6), {secs:.2} s (< 10 s)"))
}

// 2
fn quasienergy_ladder(_: &mut Shared) -> Outcome {
    let (n_max, omega) = (6usize, 1.0);
    let h0 = real_matrix(2, &[1.0, 1.0, 1.0, -1.0]);
    let e = 2f64.sqrt();
    let undriven = FourierHamiltonian::time_independent(h0.clone(), omega).unwrap();
    let eig = quasi_eigensystem(&assemble_floquet_hamiltonian(&undriven, n_max)).unwrap();
    let mut want: Vec<f64> = (-(n_max as i32)..=n_max as i32)
        .flat_map(|n| [-e + n as f64 * omega, e + n as f64 * omega])
        .collect();
    want.sort_by(f64::total_cmp);
    let ladder = eig.quasienergies().iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let driven = FourierHamiltonian::cosine_drive(h0, real_matrix(2, &[0.0, 1.0, 1.0, 0.0]), omega).unwrap();
    let f = assemble_floquet_hamiltonian(&driven, n_max);
    let eig = quasi_eigensystem(&f).unwrap();
    let tr: f64 = eig.quasienergies().iter().sum();
    let trace = (tr - linalg::trace(f.matrix()).re).abs();
    let recon = linalg::frobenius(&(eig.reconstruct() - f.matrix())) / linalg::frobenius(f.matrix());
    let ortho = eig.orthonormality_defect();
    let pass = ladder <= 1e-12 && trace <= 1e-10 && recon <= 1e-10 && ortho <= 1e-10;
    verdict(
        pass,
        format!("ladder {ladder:.1e} (<= 1e-12); trace {trace:.1e}, reconstruction {recon:.1e}, orthonormality {ortho:.1e} (<= 1e-10)"),
    )
}

// 3
fn qme_conservation(_: &mut Shared) -> Outcome {
    let ctx = junction_context(4);
    let mut rng = Lcg(17);
    let (mut tr, mut herm) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let rho = ReducedDensityMatrix::hilbert(rng.density(4), 0.0).unwrap();
        let d = dissipator_hilbert(&rho, 0.37 * k as f64, &ctx).unwrap();
        tr = tr.max(linalg::trace(&d).norm());
        herm = herm.max(linalg::hermitian_deviation(&d));
        let rf = ReducedDensityMatrix::from_hermitian(Flavor::Floquet, rng.hermitian(ctx.floquet_dim()), 0.0).unwrap();
        let df = dissipator_floquet(&rf, &ctx).unwrap();
        tr = tr.max(linalg::trace(&df).norm());
        herm = herm.max(linalg::hermitian_deviation(&df));
    }
    let rho0 = ctx.fock().product_state(&[1.0, 0.0]).unwrap();
    let period = 2.0 * std::f64::consts::PI;
    let ts: Vec<f64> = (0..=20).map(|k| k as f64 * period / 4.0).collect();
    let mut drift = 0.0f64;
    for rho in [
        ReducedDensityMatrix::hilbert(rho0.clone(), 0.0).unwrap(),
        ReducedDensityMatrix::floquet_from(&rho0, 0.0, &ctx).unwrap(),
    ] {
        let out = propagate_qme(&rho, &ts, &ctx, &[], QmeOptions::default()).unwrap();
        drift = drift.max(out.trace_drift_per_period);
    }
    verdict(
        tr <= 1e-12 && herm <= 1e-12 && drift <= 1e-8,
        format!("trace {tr:.1e}, Hermiticity {herm:.1e} (<= 1e-12) over 2x100 states; drift {drift:.1e}/period (<= 1e-8)"),
    )
}

// 4
fn one_level_oracle(_: &mut Shared) -> Outcome {
    let (e_d, gamma, beta) = (0.3f64, 0.5f64, 2.0f64);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for flavor in ["hilbert", "floquet"] {
        let doc = format!(
            "workflow = \"qme-run\"\n[model]\nhamiltonian = {{ kind = \"matrix\", omega = 1.0, harmonics = [{{ n = 0, re = [[{e_d:?}]] }}] }}\n\
             leads = [{{ gamma = [{gamma:?}], mu = 0.0, beta = {beta:?} }}]\ninitial_occupations = [0.0]\n\
             [numerics]\nflavor = \"{flavor}\"\nn_max = 2\nt_max = 20.0\noutput_interval = 0.25\n"
        );
        let d = compute(&parse_config(&doc).unwrap(), None).unwrap();
        let f = 1.0 / (1.0 + (beta * e_d).exp());
        for r in &d.table.rows {
            worst = worst.max((r[2] - f * (1.0 - (-gamma * r[0]).exp())).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-6 && secs < 5.0, format!("max error {worst:.1e} (<= 1e-6) in both flavours, {secs:.2} s (< 5 s)"))
}

// 5
fn flavour_cross_validation(_: &mut Shared) -> Outcome {
    let period = 2.0 * std::f64::consts::PI;
    let ts: Vec<f64> = (0..=3).map(|k| k as f64 * period).collect();
    let run = |n_max: usize, flavor: Flavor| -> Vec<Vec<f64>> {
        let ctx = junction_context(n_max);
        let rho0 = ctx.fock().product_state(&[1.0, 0.0]).unwrap();
        let rho = match flavor {
            Flavor::Hilbert => ReducedDensityMatrix::hilbert(rho0, 0.0).unwrap(),
            Flavor::Floquet => ReducedDensityMatrix::floquet_from(&rho0, 0.0, &ctx).unwrap(),
        };
        propagate_qme(&rho, &ts, &ctx, &[ctx.number(0), ctx.number(1)], QmeOptions::default()).unwrap().observables
    };
    let diff = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let (f_lo, f_hi) = (run(5, Flavor::Floquet), run(10, Flavor::Floquet));
    let (h_lo, h_hi) = (run(5, Flavor::Hilbert), run(10, Flavor::Hilbert));
    let truncation = diff(&f_lo, &f_hi).max(diff(&h_lo, &h_hi));
    let gap = diff(&h_hi, &f_hi);
    verdict(gap <= 1e-4, format!("max stroboscopic population difference {gap:.1e} (<= 1e-4) at n_max 10; n_max 5 -> 10 change {truncation:.1e}"))
}

// 6
fn friction_reproduction(sh: &mut Shared) -> Outcome {
    let (report, bytes, secs) = preset_run(sh, "fig1a", "fig1a.csv");
    let header_ok = header(&bytes) == FRICTION_COLUMNS;
    let (b, ga) = (column(&bytes, "B"), column(&bytes, "gamma_A_xy"));
    let grid_points = b.iter().filter(|&&v| v == 0.0).count();
    let a0 = b.iter().zip(&ga).filter(|(b, _)| **b == 0.0).fold(0.0f64, |m, (_, g)| m.max(g.abs()));
    let a1 = b.iter().zip(&ga).filter(|(b, _)| **b == 1.0).fold(0.0f64, |m, (_, g)| m.max(g.abs()));
    sh.fig1a = Some((bytes, report));

    let (x, y) = (-1.0, 1.0);
    let m = JunctionModel::with_orbital_leads(1.0, 0.0, 2.0, 1.0, [1.0, 1.0], 0.0, 2.0, 8).unwrap();
    let grid = EnergyGrid::default();
    let series: Vec<f64> = [0.0, 0.5, 1.0, 2.0]
        .iter()
        .map(|&b| scan_row(&m, x, y, b, &grid).unwrap().antisymmetric_xy().abs())
        .collect();
    let monotone = series.windows(2).all(|w| w[1] > w[0]);
    let per_grid = secs / 2.0;
    let pass = header_ok && grid_points == 441 && a0 <= 1e-8 && a1 > 1e-3 && monotone && per_grid < 120.0;
    verdict(
        pass,
        format!(
            "(a) B=0 max |gA_xy| {a0:.1e} (<= 1e-8); (b) B=1 max {a1:.3e} (> 1e-3); (c) |gA_xy(-1,1)| over B=0,0.5,1,2: \
             {:.2e} {:.2e} {:.2e} {:.2e}; 21x21 at n_max 8: {per_grid:.1} s per B (< 120 s)",
            series[0], series[1], series[2], series[3]
        ),
    )
}

// 7
fn friction_integrity(sh: &mut Shared) -> Outcome {
    let Some((bytes, report)) = &sh.fig1a else {
        return verdict(false, "no friction scan available".into());
    };
    let diag = &report.dataset.diagnostics;
    let imag = diag["max_imag_residue"].as_f64().unwrap();
    let grid_change = diag["max_grid_change"].as_f64().unwrap();
    let unconverged = diag["unconverged_points"].as_u64().unwrap();
    let cols: Vec<Vec<f64>> = ["B", "gamma_xx", "gamma_S_xy", "gamma_yy"].iter().map(|n| column(bytes, n)).collect();
    let mut floor = f64::INFINITY;
    for k in 0..cols[0].len() {
        if cols[0][k] != 0.0 {
            continue;
        }
        let (a, b, d) = (cols[1][k], cols[2][k], cols[3][k]);
        let lo = 0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt();
        floor = floor.min(lo);
    }
    let grid = EnergyGrid::default();
    let mut replica = 0.0f64;
    for (x, y) in [(-1.0, 1.0), (0.0, 0.0), (1.0, -2.0), (2.5, 2.0)] {
        let at = |n_max| {
            let m = JunctionModel::with_orbital_leads(1.0, 1.0, 2.0, 1.0, [1.0, 1.0], 0.0, 2.0, n_max).unwrap();
            scan_row(&m, x, y, 1.0, &grid).unwrap().gamma
        };
        let (g8, g16) = (at(8), at(16));
        let scale = g16.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let change = g8.iter().flatten().zip(g16.iter().flatten()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        replica = replica.max(change / scale);
    }
    let pass = imag <= 1e-10 && floor >= -1e-8 && grid_change < 1e-4 && unconverged == 0 && replica < 1e-3;
    verdict(
        pass,
        format!(
            "imaginary residue {imag:.1e} (<= 1e-10); B=0 min eig(gS) {floor:.3e} (>= -1e-8); grid change {grid_change:.1e} \
             (< 1e-4, {unconverged} unconverged); replica n_max 8 -> 16 change {replica:.1e} (< 1e-3)"
        ),
    )
}

// 8
fn bessel_sum_rule(_: &mut Shared) -> Outcome {
    let mut defect = 0.0f64;
    for ratio in [0.1, 1.0, 3.0, 5.0] {
        let prm = AhParams::new(0.0, ratio * 0.01, 0.01, 0.0075, 0.003, 0.01, 0.01, 0.0).unwrap();
        defect = defect.max((prm.weights().sum_rule() - 1.0).abs());
    }
    let prm = AhParams::new(0.0, 0.0, 0.01, 0.0075, 0.003, 0.01, 0.01, 0.0).unwrap();
    let mut plain = 0.0f64;
    for k in -300..=300 {
        let e = k as f64 * 2e-4;
        plain = plain.max((bessel_fermi(e, &prm) - 1.0 / (1.0 + (e / 0.01).exp())).abs());
    }
    verdict(defect <= 1e-10 && plain <= 1e-12, format!("sum-rule defect {defect:.1e} (<= 1e-10); |f~ - f| at A=0 {plain:.1e} (<= 1e-12)"))
}

// 9
fn sh_uncoupled_oracle(_: &mut Shared) -> Outcome {
    let (e_d, a, big_omega, kt, gamma) = (0.0075f64.powi(2) / 0.003, 0.01, 0.01, 0.01, 0.01);
    let doc = format!(
        "workflow = \"sh-run\"\nseed = 99\n[model]\na = {a:?}\nomega = {big_omega:?}\ng = 0.0\nhbar_omega = 0.003\nkt = {kt:?}\n\
         gamma = {gamma:?}\ne_d = {e_d:?}\n[numerics]\nn_traj = 10000\nt_max = 500.0\noutput_interval = 10.0\n"
    );
    let start = Instant::now();
    let d = compute(&parse_config(&doc).unwrap(), None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let f_tilde: f64 = (-60..=60)
        .map(|n| bessel_j(n, a / big_omega).powi(2) / (1.0 + ((e_d - n as f64 * big_omega) / kt).exp()))
        .sum();
    let mut worst = 0.0f64;
    for r in &d.table.rows {
        let exact = f_tilde * (1.0 - (-gamma * r[0]).exp());
        let dev = (r[1] - exact).abs();
        let z = if r[2] > 0.0 { dev / r[2] } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
    }
    verdict(
        worst <= 3.0 && secs < 60.0,
        format!("{} output times, worst deviation {worst:.2} standard errors (<= 3), {secs:.1} s (< 60 s)", d.table.rows.len()),
    )
}

// 10
fn sh_steady_state(sh: &mut Shared) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, a) in [("fig2-A0.001", 0.001), ("fig2-A0.01", 0.01), ("fig2-A0.02", 0.02)] {
        let (report, bytes, secs) = preset_run(sh, name, &format!("{name}.csv"));
        pass &= header(&bytes) == SH_COLUMNS;
        let st: &Value = &report.dataset.diagnostics["steady_state"];
        let (ek, se) = (st["Ek_mean"].as_f64().unwrap(), st["Ek_stderr"].as_f64().unwrap());
        let ok = if a == 0.001 { (ek - 0.005).abs() <= 0.1 * 0.005 } else { ek - 0.005 > 3.0 * se };
        pass &= ok && secs < 300.0;
        parts.push(format!("A={a}: Ek {ek:.5} +- {se:.1e} ({secs:.0} s)"));
        sh.fig2.push((name.to_string(), bytes));
    }
    verdict(pass, format!("{} (A=0.001 within 10% of 0.005; larger A > 0.005 + 3 se; < 300 s each)", parts.join("; ")))
}

// 11
fn reproducibility(sh: &mut Shared) -> Outcome {
    let mut same = Vec::new();
    let mut pass = true;
    if let Some((first, _)) = &sh.fig1a {
        let (_, again, _) = preset_run(sh, "fig1a", "fig1a-rerun.csv");
        pass &= *first == again;
        same.push(format!("fig1a {}", if *first == again { "identical" } else { "DIFFERS" }));
    } else {
        pass = false;
    }
    match sh.fig2.iter().find(|(n, _)| n == "fig2-A0.001") {
        Some((_, first)) => {
            let (_, again, _) = preset_run(sh, "fig2-A0.001", "fig2-rerun.csv");
            pass &= *first == again;
            same.push(format!("fig2-A0.001 {}", if *first == again { "identical" } else { "DIFFERS" }));
        }
        None => pass = false,
    }
    // every preset at reduced size, serial against two workers
    let small = |name: &str| -> RunConfig {
        let doc = if name.starts_with("fig1") {
            "[numerics]\nx = { min = -1.0, max = 1.0, points = 2 }\ny = { min = 0.0, max = 1.0, points = 2 }\n"
        } else {
            "[numerics]\nn_traj = 50\nt_max = 2000.0\nsteady_window = [1000.0, 2000.0]\n"
        };
        load(Some(name), Some(doc), &Overrides::default()).unwrap()
    };
    let mut reduced = 0;
    for name in presets::names() {
        let cfg = small(name);
        let a = csv_bytes(&compute(&cfg, Some(1)).unwrap().table).unwrap();
        let b = csv_bytes(&compute(&cfg, Some(2)).unwrap().table).unwrap();
        pass &= a == b;
        reduced += usize::from(a == b);
    }
    verdict(pass, format!("full reruns: {}; reduced presets identical across 1/2 workers: {reduced}/6", same.join(", ")))
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria: [(&str, fn(&mut Shared) -> Outcome); 11] = [
        ("Floquet-direct equivalence", floquet_direct),
        ("quasienergy ladder", quasienergy_ladder),
        ("QME conservation", qme_conservation),
        ("QME one-level oracle", one_level_oracle),
        ("flavour cross-validation", flavour_cross_validation),
        ("friction reproduction", friction_reproduction),
        ("friction integrity", friction_integrity),
        ("Bessel sum rule", bessel_sum_rule),
        ("surface hopping g=0 oracle", sh_uncoupled_oracle),
        ("surface hopping steady state", sh_steady_state),
        ("reproducibility", reproducibility),
    ];
    let mut shared = Shared { dir: tempfile::tempdir().unwrap(), fig1a: None, fig2: Vec::new() };
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut shared)))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        failed += usize::from(!outcome.pass);
        println!(
            "{} {:>2} {name}: {} [{:.1} s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

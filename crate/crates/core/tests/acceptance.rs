// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion. Runs the two 30×30
//! desk sweeps, so it takes a minute or two on a single core.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinboson::bath::{
    self, quadrature, resonance_cutoff, MatsubaraExpansion, ModelParams, QuadratureConfig,
};
use spinboson::dynamics::{propagate, BlochVector, IntegratorConfig};
use spinboson::measure::{estimate_measure, estimate_with_table, MeasureOptions};
use spinboson::sweep::{
    local_spacing, minimum_locus, run_sweep, sweep_correlation, GridSpec, SweepOptions, SweepResult,
};
use spinboson::tcl::{self, CoefficientSet, CoefficientTable, RateMode};

const BASE_SEED: u64 = 2024;
const LOCUS_T_MIN: f64 = 0.3;
const LOCUS_T_MAX: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn params(gamma: f64, cutoff: f64, temperature: f64) -> ModelParams {
    ModelParams::new(gamma, cutoff, temperature).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng) -> BlochVector {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if let Ok(b) = BlochVector::new(v[0], v[1], v[2]) {
            return b;
        }
    }
}

fn criterion_1() -> Outcome {
    let r = resonance_cutoff(0.4);
    outcome((1.545..=1.560).contains(&r), format!("Ω_res(0.4) = {r:.5}"))
}

/// Locus rows inside the temperature window with their deviation in units of
/// the local Ω spacing at Ω_res; missing rows count as infinitely far.
fn locus_deviations(result: &SweepResult) -> Vec<(f64, Option<f64>, f64)> {
    let locus = minimum_locus(result);
    let axis = &result.spec.omega_c_values;
    result
        .spec
        .temperature_values
        .iter()
        .filter(|&&t| (LOCUS_T_MIN..=LOCUS_T_MAX).contains(&t))
        .map(|&t| {
            let res = resonance_cutoff(t);
            let found = locus.iter().find(|p| p.temperature == t).map(|p| p.omega_c);
            let dev = found.map_or(f64::INFINITY, |o| {
                (o - res).abs() / local_spacing(axis, res)
            });
            (t, found, dev)
        })
        .collect()
}

fn locus_report(devs: &[(f64, Option<f64>, f64)], limit: f64) -> (bool, String) {
    let missing: Vec<String> = devs
        .iter()
        .filter(|d| d.1.is_none())
        .map(|d| format!("{:.2}", d.0))
        .collect();
    let over: Vec<String> = devs
        .iter()
        .filter(|d| d.1.is_some() && d.2 > limit)
        .map(|d| format!("{:.2}:{:.1}", d.0, d.2))
        .collect();
    let pass = missing.is_empty() && over.is_empty();
    let worst = devs
        .iter()
        .filter(|d| d.1.is_some())
        .map(|d| d.2)
        .fold(0.0, f64::max);
    let detail = format!(
        "{} rows in T∈[{LOCUS_T_MIN},{LOCUS_T_MAX}], worst located deviation {worst:.2} spacings; \
         beyond {limit} spacings (T:spacings) [{}]; no interior minimum at T [{}]",
        devs.len(),
        over.join(" "),
        missing.join(" ")
    );
    (pass, detail)
}

fn criterion_2(tcl2: &SweepResult, secs: f64) -> Outcome {
    if !tcl2.is_complete() {
        return outcome(false, "sweep incomplete");
    }
    let (pass, detail) = locus_report(&locus_deviations(tcl2), 1.0);
    outcome(pass, format!("{detail}; sweep {secs:.0} s"))
}

fn criterion_3() -> Outcome {
    let est = estimate_measure(
        &params(0.1, 50.0, 50.0),
        RateMode::Tcl2,
        &MeasureOptions::default(),
    )
    .unwrap();
    outcome(
        est.value <= est.noise_floor && est.floored() == 0.0,
        format!(
            "N = {:e}, floor = {:e}, reported {}",
            est.value,
            est.noise_floor,
            est.floored()
        ),
    )
}

fn criterion_4() -> Outcome {
    let est = estimate_measure(
        &params(0.1, 0.5, 0.5),
        RateMode::Tcl2,
        &MeasureOptions::default(),
    )
    .unwrap();
    outcome(
        est.value >= 10.0 * est.noise_floor && est.value > 0.0,
        format!("N = {:.4e}, floor = {:e}", est.value, est.noise_floor),
    )
}

fn criterion_5(tcl2: &SweepResult, redfield: &SweepResult) -> Outcome {
    let rho = sweep_correlation(tcl2, redfield);
    let rho_ok = rho.is_some_and(|r| r > 0.8);
    let (locus_ok, detail) = locus_report(&locus_deviations(redfield), 2.0);
    outcome(
        rho_ok && locus_ok,
        format!(
            "Spearman = {:.4}; Redfield locus: {detail}",
            rho.unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut worst_d: f64 = 0.0;
    for cutoff in [0.3, 1.0, 4.0] {
        let p = params(0.1, cutoff, 1.0);
        let q = QuadratureConfig::for_params(&p);
        for i in 1..=40 {
            let s = 20.0 / cutoff * i as f64 / 40.0;
            let quad = bath::dissipation_kernel_quadrature(s, &p, &q).unwrap();
            worst_d = worst_d.max((quad - bath::dissipation_kernel(s, &p)).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED);
    let mut worst_d1: f64 = 0.0;
    let mut checked = 0;
    while checked < 50 {
        let s = rng.gen_range(0.05..10.0);
        let p = params(0.1, rng.gen_range(0.2..10.0), rng.gen_range(0.1..5.0));
        let Ok(series) = MatsubaraExpansion::new(&p) else {
            continue;
        };
        let q = QuadratureConfig::for_params(&p);
        let quad = bath::noise_kernel_quadrature(s, &p, &q).unwrap();
        worst_d1 = worst_d1.max((quad - series.noise_kernel(s)).abs());
        checked += 1;
    }
    outcome(
        worst_d <= 1e-8 && worst_d1 <= 1e-6,
        format!(
            "max |ΔD| = {worst_d:.2e} (≤1e-8), max |ΔD1| = {worst_d1:.2e} at 50 points (≤1e-6)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let series = MatsubaraExpansion::new(&p).unwrap();
    let kernel = |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            series.noise_kernel(s)
        }
    };
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let azz = quadrature::integrate(|s| -0.5 * kernel(s) * s.cos(), 0.0, t, &q)
            .unwrap()
            .value;
        let ayx = quadrature::integrate(|s| 0.5 * kernel(s) * s.sin(), 0.0, t, &q)
            .unwrap()
            .value;
        worst = worst
            .max((tcl::coeff_azz(t, &p, &q).unwrap() - azz).abs())
            .max((tcl::coeff_ayx(t, &p, &q).unwrap() - ayx).abs());
    }
    let st = tcl::stationary_coeffs(&p, &q).unwrap();
    let azz_ok = (st.a_zz + 0.054100).abs() <= 1e-4;
    let bz_ok = (st.b_z + 0.025).abs() <= 1e-10;
    outcome(
        worst <= 1e-6 && azz_ok && bz_ok,
        format!(
            "max nested deviation {worst:.2e}; a_zz(∞) = {:.6}; b_z(∞) = {:.12}",
            st.a_zz, st.b_z
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let table = CoefficientTable::for_params(&p, &q).unwrap();
    let cfg = IntegratorConfig::default();
    let z_star = -(0.5 / p.temperature).tanh();
    let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED);
    let (mut dz, mut dxy): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let tr = propagate(
            random_state(&mut rng),
            200.0,
            &table,
            RateMode::Redfield,
            &cfg,
        )
        .unwrap();
        let v = tr.states.last().unwrap();
        dz = dz.max((v.z - z_star).abs());
        dxy = dxy.max(v.x.abs()).max(v.y.abs());
    }
    outcome(
        dz <= 1e-4 && dxy <= 1e-4,
        format!("max |z − z*| = {dz:.2e}, max |x|,|y| = {dxy:.2e} at t = 200 (both ≤1e-4)"),
    )
}

fn criterion_9() -> Outcome {
    let p = params(0.1, 1.0, 1.0);
    let set = CoefficientSet {
        t: f64::INFINITY,
        a_yx: 0.0,
        a_zz: -0.054,
        b_z: -0.025,
    };
    let table = CoefficientTable::constant(&p, set, 1.0);
    let opts = MeasureOptions {
        n_pairs: 100,
        seed: BASE_SEED,
        t_end: Some(100.0),
        ..MeasureOptions::default()
    };
    let est = estimate_with_table(&table, RateMode::Tcl2, &opts).unwrap();
    outcome(
        est.value <= est.noise_floor,
        format!(
            "max backflow = {:e}, floor = {:e}",
            est.value, est.noise_floor
        ),
    )
}

fn criterion_10(uninterrupted: &SweepResult, spec: &GridSpec, cfg: &IntegratorConfig) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.json");
    let half = spec.len() / 2;
    let opts = SweepOptions::default();
    let first = run_sweep(
        spec,
        cfg,
        Some(&path),
        &SweepOptions {
            stop_after: Some(half),
            ..opts
        },
    )
    .unwrap();
    let pending = spec.len() - first.count(spinboson::sweep::CellStatus::Completed);
    let resumed = run_sweep(spec, cfg, Some(&path), &opts).unwrap();
    let bitwise = resumed
        .cells
        .iter()
        .zip(&uninterrupted.cells)
        .all(|(a, b)| {
            let bits = |v: Option<f64>| v.map(f64::to_bits);
            bits(a.value) == bits(b.value)
                && bits(a.noise_floor) == bits(b.noise_floor)
                && bits(a.t_end) == bits(b.t_end)
                && bits(a.max_excess) == bits(b.max_excess)
                && a.status == b.status
                && a.seed == b.seed
        });
    outcome(
        bitwise && resumed == *uninterrupted && pending > 0,
        format!(
            "{} mode {}-cell sweep stopped with {pending} pending, resumed; bitwise equal: {bitwise}",
            spec.mode,
            spec.len()
        ),
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let cfg = IntegratorConfig::default();
    let opts = SweepOptions::default();
    let tcl2_spec = GridSpec::desk_default(RateMode::Tcl2, BASE_SEED);
    let redfield_spec = GridSpec::desk_default(RateMode::Redfield, BASE_SEED);

    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "resonance formula", criterion_1()));
    let clock = Instant::now();
    let tcl2 = run_sweep(&tcl2_spec, &cfg, None, &opts).unwrap();
    let tcl2_secs = clock.elapsed().as_secs_f64();
    let redfield = run_sweep(&redfield_spec, &cfg, None, &opts).unwrap();
    results.push((
        2,
        "resonance locus (TCL2 sweep)",
        criterion_2(&tcl2, tcl2_secs),
    ));
    results.push((3, "quantum optical limit", criterion_3()));
    results.push((4, "strong non-Markovian regime", criterion_4()));
    results.push((5, "Redfield similarity", criterion_5(&tcl2, &redfield)));
    results.push((6, "kernel oracles", criterion_6()));
    results.push((7, "coefficient oracles", criterion_7()));
    results.push((8, "thermalization", criterion_8()));
    results.push((9, "contraction sanity", criterion_9()));
    results.push((
        10,
        "determinism and resume",
        criterion_10(&redfield, &redfield_spec, &cfg),
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag}: {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

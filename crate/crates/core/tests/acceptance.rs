//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! for its criterion, followed by the numbers it was judged on.

use std::io::Write;

use amp_core::drives::{terms_at, DriveScheme, SchemeFamily};
use amp_core::evolve::{integrate, integrate_in, tts, EvolutionConfig, Representation};
use amp_core::experiments::{fit_exponential, gap_scaling, scaling_study, RunConfig, ScalingFit, SchemeSpec, StudyRow};
use amp_core::hilbert::Kernel;
use amp_core::problem::{density_of_states, DifficultyEnsemble, ProblemSet};
use amp_core::spectrum::{
    critical_kappa, forward_gap_sweep_units, gap_profile, level_diagram, local_minima, lowest_levels, SpectrumOptions,
};
use amp_core::{HamiltonianTerms, C64};

const SET_NAMES: [&str; 4] = ["hardest", "hard", "easy", "easiest"];

/// Published exponents per set, hardest first.
const GAP_SLOPE: [f64; 4] = [-1.12, -0.74, -0.52, -0.31];
const GAP_SLOPE_TOL: f64 = 0.05;
const KAPPA_C_EASIEST: f64 = 1.73;
const KAPPA_C_TOL: f64 = 0.1;
const RATIO_BOUNDS: (f64, f64) = (0.5, 2.0);
const INV_GAP2: [f64; 4] = [2.25, 1.48, 1.04, 0.61];
const UNIFORM: [f64; 4] = [2.12, 1.39, 1.06, 0.52];
const UNIFORM_TOL: f64 = 0.2;
const TRACK_TOL: f64 = 0.3;
const INHOMOGENEOUS: f64 = 0.7;
const INHOMOGENEOUS_TOL: f64 = 0.15;
const FERRO: f64 = 1.77;
const ANTIFERRO: f64 = 2.09;
const MIXED: f64 = 2.50;
const COUPLER_TOL: f64 = 0.2;
const MIXED_TOL: f64 = 0.25;
const MIXED_DRAWS: usize = 20;
const RFQA_COLUMNS: [&str; 5] = ["M", "CM", "SyncM", "SyncMC", "D"];
const RFQA: [[f64; 5]; 4] = [
    [1.48, 1.31, 1.28, 0.86, 1.56],
    [0.89, 0.86, 0.84, 0.64, 1.05],
    [0.62, 0.62, 0.64, 0.62, 0.50],
    [0.45, 0.45, 0.45, 0.51, 0.40],
];
const RFQA_TOL: f64 = 0.2;
const RFQA_DRAWS: usize = 200;
const REVERSE_TOL: f64 = 0.15;
const REVERSE_DRAWS: usize = 200;

fn ensemble() -> Vec<ProblemSet> {
    DifficultyEnsemble::default().sets
}

/// Written straight to the process stdout so the lines survive the test
/// harness's output capture.
fn report(id: u32, title: &str, pass: bool, details: &[String]) {
    let mut text = format!("\ncriterion {id} [{}] {title}\n", if pass { "PASS" } else { "FAIL" });
    for d in details {
        text.push_str(&format!("    {d}\n"));
    }
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn uniform_tts_fits(sizes: (usize, usize)) -> Vec<ScalingFit> {
    let cfg = RunConfig {
        schemes: vec![SchemeSpec::Name("uniform".into())],
        n_range: sizes,
        ..RunConfig::default()
    };
    let res = scaling_study(&cfg).unwrap();
    SET_NAMES.iter().map(|s| res.fit(s, "uniform").cloned().unwrap()).collect()
}

#[test]
fn criterion_1_gap_scaling() {
    let sizes: Vec<usize> = (5..=12).collect();
    let mut pass = true;
    let mut details = Vec::new();
    for (i, set) in ensemble().iter().enumerate() {
        let (points, _) = gap_scaling(set, &sizes, &SpectrumOptions::default()).unwrap();
        let fit = fit_exponential(&points.iter().map(|g| (g.n, g.delta_min)).collect::<Vec<_>>()).unwrap();
        let ok = within(fit.gamma, GAP_SLOPE[i], GAP_SLOPE_TOL);
        pass &= ok;
        details.push(format!(
            "{:<8} slope {:+.3} (target {:+.2} +/- {GAP_SLOPE_TOL}) {}",
            set.name,
            fit.gamma,
            GAP_SLOPE[i],
            if ok { "ok" } else { "out of tolerance" }
        ));
    }
    report(1, "minimum-gap scaling, N = 5..12", pass, &details);
    assert!(pass);
}

#[test]
fn criterion_2_forward_approximation() {
    let mut pass = true;
    let mut details = Vec::new();
    let kc_easiest = critical_kappa(&ensemble()[3].params(10).unwrap()).unwrap();
    let kc_ok = within(kc_easiest, KAPPA_C_EASIEST, KAPPA_C_TOL);
    pass &= kc_ok;
    details.push(format!("critical field, easiest set: {kc_easiest:.4} (target {KAPPA_C_EASIEST} +/- {KAPPA_C_TOL})"));
    for set in ensemble() {
        let mut ratios = Vec::new();
        for n in 5..=12 {
            let p = set.params(n).unwrap();
            let kc = critical_kappa(&p).unwrap();
            let predicted = forward_gap_sweep_units(&p, kc, true).unwrap();
            let exact = gap_profile(&DriveScheme::Uniform, &p, &SpectrumOptions::default()).unwrap().delta_min;
            ratios.push(predicted / exact);
        }
        let ok = ratios.iter().all(|r| (RATIO_BOUNDS.0..=RATIO_BOUNDS.1).contains(r));
        pass &= ok;
        details.push(format!(
            "{:<8} predicted/exact for N = 5..12: [{}] {}",
            set.name,
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", "),
            if ok { "ok" } else { "outside [0.5, 2]" }
        ));
    }
    report(2, "forward-approximation gap with 2 pi / N correction", pass, &details);
    assert!(pass);
}

#[test]
fn criterion_3_uniform_tts() {
    let fits = uniform_tts_fits((5, 12));
    let sizes: Vec<usize> = (5..=12).collect();
    let mut pass = true;
    let mut details = Vec::new();
    for (i, set) in ensemble().iter().enumerate() {
        let g = fits[i].gamma;
        let (_, gap_fit) = gap_scaling(set, &sizes, &SpectrumOptions::default()).unwrap();
        let ok_s = within(g, UNIFORM[i], UNIFORM_TOL);
        let ok_track = within(g, INV_GAP2[i], TRACK_TOL);
        pass &= ok_s && ok_track;
        details.push(format!(
            "{:<8} TTS gamma {:.3} (target {:.2} +/- {UNIFORM_TOL}); 1/gap^2 gamma {:.3}; vs published 1/gap^2 {:.2} +/- {TRACK_TOL}: {}",
            set.name,
            g,
            UNIFORM[i],
            gap_fit.gamma,
            INV_GAP2[i],
            if ok_s && ok_track { "ok" } else { "out of tolerance" }
        ));
    }
    report(3, "uniform-sweep TTS scaling", pass, &details);
    assert!(pass);
}

#[test]
fn criterion_4_inhomogeneous_driving() {
    let cfg = RunConfig {
        schemes: vec![SchemeSpec::Name("inhomogeneous".into())],
        n_range: (5, 12),
        ..RunConfig::default()
    };
    let res = scaling_study(&cfg).unwrap();
    let uniform = uniform_tts_fits((5, 12));
    let mut pass = true;
    let mut details = Vec::new();
    let mut gammas = Vec::new();
    for (i, name) in SET_NAMES.iter().enumerate() {
        let g = res.fit(name, "inhomogeneous").unwrap().gamma;
        gammas.push(g);
        let ok = within(g, INHOMOGENEOUS, INHOMOGENEOUS_TOL);
        pass &= ok;
        details.push(format!(
            "{name:<8} gamma {g:.3} (target {INHOMOGENEOUS} +/- {INHOMOGENEOUS_TOL}), uniform {:.3} {}",
            uniform[i].gamma,
            if ok { "ok" } else { "out of tolerance" }
        ));
    }
    let below_on_hard = gammas[0] < uniform[0].gamma && gammas[1] < uniform[1].gamma;
    let above_on_easiest = gammas[3] > uniform[3].gamma;
    pass &= below_on_hard && above_on_easiest;
    details.push(format!("below uniform on the two hardest sets: {below_on_hard}; above on the easiest: {above_on_easiest}"));

    let n = 10;
    let p = ensemble()[0].params(n).unwrap();
    let scheme = SchemeFamily::from_name("inhomogeneous").unwrap().instantiate(n, 0, 1.0).unwrap();
    let diagram = level_diagram(&scheme, &p, 20, &SpectrumOptions::default()).unwrap();
    let minima = local_minima(&diagram.first_gap());
    let dips = minima.len() >= 2;
    pass &= dips;
    details.push(format!(
        "hardest set, N = 10: {} local minima of E1 - E0 at s = [{}]",
        minima.len(),
        minima.iter().map(|&j| format!("{:.3}", diagram.s_grid[j])).collect::<Vec<_>>().join(", ")
    ));
    report(4, "inhomogeneous driving", pass, &details);
    assert!(pass);
}

#[test]
fn criterion_5_transverse_couplers() {
    let cfg = RunConfig {
        sets: vec!["hardest".into()],
        schemes: ["uniform", "ferro", "antiferro", "mixed"].iter().map(|s| SchemeSpec::Name(s.to_string())).collect(),
        n_range: (5, 12),
        draws: MIXED_DRAWS,
        ..RunConfig::default()
    };
    let res = scaling_study(&cfg).unwrap();
    let g = |s: &str| res.fit("hardest", s).unwrap().gamma;
    let (s, f, a, m) = (g("uniform"), g("ferro"), g("antiferro"), g("mixed"));
    let ok_f = within(f, FERRO, COUPLER_TOL);
    let ok_a = within(a, ANTIFERRO, COUPLER_TOL);
    let ok_m = within(m, MIXED, MIXED_TOL);
    let order = f < s && a < s && m > s;
    let pass = ok_f && ok_a && ok_m && order;
    let mark = |ok: bool| if ok { "ok" } else { "out of tolerance" };
    let details = vec![
        format!("uniform    gamma {s:.3}"),
        format!("ferro      gamma {f:.3} (target {FERRO} +/- {COUPLER_TOL}) {}", mark(ok_f)),
        format!("antiferro  gamma {a:.3} (target {ANTIFERRO} +/- {COUPLER_TOL}) {}", mark(ok_a)),
        format!("mixed      gamma {m:.3} (target {MIXED} +/- {MIXED_TOL}, {MIXED_DRAWS} sign draws) {}", mark(ok_m)),
        format!("ferro < uniform: {}; antiferro < uniform: {}; mixed > uniform: {}", f < s, a < s, m > s),
    ];
    report(5, "transverse couplers on the hardest set", pass, &details);
    assert!(pass);
}

/// Standard error of the fitted exponent implied by the per-size standard
/// errors of the draw-averaged success probability.
fn gamma_std_err(rows: &[&StudyRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let var: f64 = rows
        .iter()
        .zip(&xs)
        .map(|(r, x)| {
            let l = -(-r.p_success).ln_1p();
            let sigma = r.p_std_err / ((1.0 - r.p_success) * l * std::f64::consts::LN_2);
            (x - mean).powi(2) * sigma * sigma
        })
        .sum();
    var.sqrt() / sxx
}

#[test]
fn criterion_6_rfqa() {
    let schemes = ["uniform", "rfqa-m", "rfqa-cm", "sync-m", "sync-mc", "rfqa-d"];
    let cfg = RunConfig {
        schemes: schemes.iter().map(|s| SchemeSpec::Name(s.to_string())).collect(),
        n_range: (5, 10),
        draws: RFQA_DRAWS,
        ..RunConfig::default()
    };
    let res = scaling_study(&cfg).unwrap();
    let mut details = Vec::new();
    let mut cells_ok = true;
    let mut noisy = false;
    let mut order_ok = true;
    for (i, set) in SET_NAMES.iter().enumerate() {
        let s = res.fit(set, "uniform").unwrap().gamma;
        let mut gammas = Vec::new();
        let mut line = format!("{set:<8} S {s:.3} |");
        for (j, scheme) in schemes[1..].iter().enumerate() {
            let g = res.fit(set, scheme).unwrap().gamma;
            let rows: Vec<&StudyRow> = res.rows.iter().filter(|r| r.set == *set && r.scheme == *scheme).collect();
            let err = gamma_std_err(&rows);
            let ok = within(g, RFQA[i][j], RFQA_TOL);
            cells_ok &= ok;
            noisy |= 2.0 * err > RFQA_TOL;
            gammas.push(g);
            line.push_str(&format!(
                " {} {g:.3}+/-{err:.3} (target {:.2}){}",
                RFQA_COLUMNS[j],
                RFQA[i][j],
                if ok { "" } else { " X" }
            ));
        }
        details.push(line);
        if i < 2 {
            let ok = gammas.iter().all(|&g| g <= s);
            order_ok &= ok;
            details.push(format!("{set:<8} every RFQA gamma <= uniform: {ok}"));
        } else {
            let d = gammas[4];
            let ok = gammas[..4].iter().all(|&g| d <= g);
            order_ok &= ok;
            details.push(format!("{set:<8} D is the smallest RFQA gamma: {ok}"));
        }
    }
    let pass = order_ok && (cells_ok || noisy);
    details.push(format!(
        "per-cell +/- {RFQA_TOL}: {}; draw noise exceeds tolerance: {noisy}; ordering: {order_ok}",
        if cells_ok { "all within" } else { "some outside" }
    ));
    report(6, "RFQA variants, N = 5..10", pass, &details);
    assert!(pass);
}

#[test]
fn criterion_7_property_suite() {
    let start = std::time::Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        pass &= ok;
        details.push(format!("{name}: {detail} {}", if ok { "ok" } else { "FAILED" }));
    };

    let n = 6;
    let p = ensemble()[0].params(n).unwrap();
    let kernel = Kernel::full(&p);
    let mut worst = 0.0f64;
    for name in ["inhomogeneous", "mixed", "rfqa-cm", "sync-mc", "rfqa-d"] {
        let scheme = SchemeFamily::from_name(name).unwrap().instantiate(n, 5, 100.0).unwrap();
        for (s, t) in [(0.1, 3.0), (0.5, 40.0), (0.9, 77.0)] {
            let terms = terms_at(&scheme, &p, s, t).unwrap();
            let h = dense(&kernel, &terms);
            for i in 0..h.len() {
                for j in 0..h.len() {
                    worst = worst.max((h[i][j] - h[j][i].conj()).norm());
                }
            }
        }
    }
    check("hermiticity", worst <= 1e-12, format!("max |H - H^dagger| = {worst:.1e} (N = 6)"));

    let mut drift = 0.0f64;
    for name in ["uniform", "inhomogeneous", "mixed", "rfqa-m", "sync-mc", "rfqa-d", "reverse"] {
        let cfg = EvolutionConfig::default();
        let scheme = SchemeFamily::from_name(name).unwrap().instantiate(8, 2, cfg.sweep_time(8)).unwrap();
        drift = drift.max(integrate(&scheme, &ensemble()[1].params(8).unwrap(), &cfg).unwrap().norm_drift);
    }
    check("norm drift", drift <= 1e-9, format!("max {drift:.1e} over seven schemes at N = 8"));

    let mut diff = 0.0f64;
    for name in ["uniform", "ferro", "antiferro"] {
        let scheme = SchemeFamily::from_name(name).unwrap().instantiate(8, 0, 1.0).unwrap();
        let p8 = ensemble()[2].params(8).unwrap();
        let cfg = EvolutionConfig::default();
        let a = integrate_in(&scheme, &p8, &cfg, Representation::Auto).unwrap().success_probability();
        let b = integrate_in(&scheme, &p8, &cfg, Representation::Full).unwrap().success_probability();
        diff = diff.max((a - b).abs());
    }
    check("symmetric vs full", diff <= 1e-8, format!("max |dp| = {diff:.1e} at N = 8"));

    let p8 = ensemble()[0].params(8).unwrap();
    let k8 = Kernel::full(&p8);
    let scheme = SchemeFamily::from_name("rfqa-d").unwrap().instantiate(8, 11, 256.0).unwrap();
    let mut shift = 0.0f64;
    for s in [0.2, 0.6] {
        let base = lowest_levels(&k8, &terms_at(&scheme, &p8, s, 0.0).unwrap(), 256, false, s).unwrap().0;
        for t in [13.0, 170.0, 1234.5] {
            let other = lowest_levels(&k8, &terms_at(&scheme, &p8, s, t).unwrap(), 256, false, s).unwrap().0;
            for (a, b) in base.iter().zip(&other) {
                shift = shift.max((a - b).abs());
            }
        }
    }
    check("RFQA-D spectrum invariance", shift <= 1e-9, format!("max level shift {shift:.1e} at N = 8"));

    let mut dos_ok = true;
    for n in 1..=12 {
        let mut counts = vec![0usize; n + 1];
        for b in 0..1usize << n {
            counts[b.count_ones() as usize] += 1;
        }
        let dos = density_of_states(n).unwrap();
        dos_ok &= counts.iter().enumerate().all(|(k, &c)| dos[&k] == c as f64 / (1usize << n) as f64);
    }
    check("density of states", dos_ok, "matches bit-count histogram for N = 1..12".into());

    let ok = within(tts(37.0, 0.99), 37.0, 1e-12) && tts(37.0, 1.0) == 37.0 && tts(37.0, 0.0).is_infinite();
    check("TTS identities", ok, format!("tts(37, 0.99) = {}", tts(37.0, 0.99)));

    let mut fit_err = 0.0f64;
    for (beta, gamma) in [(0.0, 1.0), (-3.5, 0.31), (2.0, 2.12), (1.0, -1.12)] {
        let pts: Vec<(usize, f64)> = (5..=12).map(|n| (n, 2f64.powf(beta + gamma * n as f64))).collect();
        let f = fit_exponential(&pts).unwrap();
        fit_err = fit_err.max((f.gamma - gamma).abs()).max((f.beta - beta).abs());
    }
    check("exact exponential fit", fit_err <= 1e-10, format!("max parameter error {fit_err:.1e}"));

    let cfg = RunConfig {
        sets: vec!["hard".into()],
        schemes: vec![SchemeSpec::Name("rfqa-m".into()), SchemeSpec::Name("reverse".into())],
        n_range: (4, 6),
        draws: 3,
        seed: 42,
        ..RunConfig::default()
    };
    let a = scaling_study(&cfg).unwrap();
    let b = scaling_study(&cfg).unwrap();
    let c = scaling_study(&RunConfig { seed: 43, ..cfg.clone() }).unwrap();
    let ok = a == b && a.rows != c.rows;
    check("determinism", ok, "same seed reproduces every draw; a different seed does not".into());

    let elapsed = start.elapsed();
    let fast = elapsed.as_secs_f64() < 60.0;
    pass &= fast;
    details.push(format!("elapsed {:.1} s (limit 60 s)", elapsed.as_secs_f64()));
    report(7, "property suite", pass, &details);
    assert!(pass);
}

fn dense(kernel: &Kernel, terms: &HamiltonianTerms) -> Vec<Vec<C64>> {
    let dim = kernel.dim();
    let mut cols = vec![vec![C64::default(); dim]; dim];
    let mut e = vec![C64::default(); dim];
    for (j, col) in cols.iter_mut().enumerate() {
        e[j] = C64::new(1.0, 0.0);
        kernel.apply(terms, &e, col);
        e[j] = C64::default();
    }
    (0..dim).map(|i| (0..dim).map(|j| cols[j][i]).collect()).collect()
}

#[test]
fn criterion_8_reverse_annealing() {
    let cfg = RunConfig {
        schemes: vec![SchemeSpec::Name("uniform".into()), SchemeSpec::Name("reverse".into())],
        n_range: (5, 12),
        draws: REVERSE_DRAWS,
        ..RunConfig::default()
    };
    let res = scaling_study(&cfg).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for set in SET_NAMES {
        let s = res.fit(set, "uniform").unwrap().gamma;
        let r = res.fit(set, "reverse").unwrap().gamma;
        let ok = within(r, s, REVERSE_TOL);
        pass &= ok;
        details.push(format!(
            "{set:<8} reverse gamma {r:.3}, uniform {s:.3}, difference {:+.3} (tolerance {REVERSE_TOL}) {}",
            r - s,
            if ok { "ok" } else { "out of tolerance" }
        ));
    }
    report(8, "reverse annealing tracks the uniform sweep", pass, &details);
    assert!(pass);
}

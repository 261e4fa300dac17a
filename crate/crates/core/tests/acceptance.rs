//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 5 7`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use cubiclab::cli::config::Config;
use cubiclab::cli::{execute, Command};
use cubiclab::dimension::{
    box_dimension, box_dimension_with, build_branch_system, is_non_increasing, julia_raster,
    julia_window, pressure_dimension, area_decay_diagnostic, BranchSystem, MembershipRaster,
};
use cubiclab::hunt::{certify, run_hunt, CantorVerdict, HuntBudget};
use cubiclab::omega::{omega_disks, omega_membership, pick_target_alpha, OmegaSpec};
use cubiclab::potential::{boettcher, critical_potentials, potential, potential_value, zeta_of, DEFAULT_MAX_DEPTH, DEFAULT_TOL};
use cubiclab::slice::{
    auto_windows, find_anchor, find_parabolic_root, label_components, render_slice, rotation, solve_slice,
    tune_multiplier, RenderSettings, SliceSpec, Window,
};
use cubiclab::{Complex, FamilyInstance};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

// pinned tolerances
const FUNCTIONAL_REL: f64 = 1e-9;
const BOETTCHER_RESIDUAL: f64 = 1e-8;
const COCRITICAL_REL: f64 = 1e-12;
const Q_QUADRATURE: f64 = 1e-10;
const ROUND_TRIP_DB: f64 = 1e-6;
const SLICE_RESIDUAL: f64 = 1e-8;
const RECONSTRUCTION: f64 = 1e-12;
const IFS_PRESSURE: f64 = 1e-4;
const CIRCLE_BOX: f64 = 0.05;
const SQUARE_BOX: f64 = 0.02;
const ESTIMATOR_GAP: f64 = 0.05;
const CALIBRATION_FIT: f64 = 0.02;
const MULTIPLIER: f64 = 1e-9;
const STAGE_SLACK: f64 = 0.1;
const BOUNDED_FRACTION: f64 = 0.01;
const MIN_COMPONENTS: u32 = 100;
const AREA_SLACK: f64 = 0.01;

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn random_disk(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex {
    let r = rng.random_range(lo..hi);
    Complex::from_polar(r, rng.random_range(0.0..2.0 * PI))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> FamilyInstance {
    let a = random_disk(rng, 0.1, 1.5);
    let b = random_disk(rng, 0.1, 3.0);
    match k % 4 {
        0 | 1 => FamilyInstance::cubic(a, b).unwrap(),
        2 => FamilyInstance::degree_d(4 + (k as u32 / 4) % 3, a, b).unwrap(),
        _ => FamilyInstance::mcmullen(2 + (k as u32 / 4) % 2, a * 0.3, b).unwrap(),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut points = 0;
    let mut worst_fe: f64 = 0.0;
    let mut boett_ok = 0;
    let mut worst_b: f64 = 0.0;
    for k in 0..20 {
        let f = random_instance(&mut rng, k);
        let radius = cubiclab::potential::escape_radius(&f);
        let mut taken = 0;
        while taken < 60 {
            let z = random_disk(&mut rng, 0.3 * radius, 3.0 * radius);
            let rec = potential(&f, z, DEFAULT_TOL, DEFAULT_MAX_DEPTH).unwrap();
            if !rec.escaped || rec.inner_captured || rec.value.is_nan() || rec.value <= 0.0 {
                continue;
            }
            let fz = f.eval(z).unwrap();
            let hf = potential_value(&f, fz);
            let err = (hf - f64::from(f.degree()) * rec.value).abs() / rec.value.max(1.0);
            worst_fe = worst_fe.max(err);
            if let Ok(b) = boettcher(&f, z, DEFAULT_TOL) {
                boett_ok += 1;
                worst_b = worst_b.max(b.residual);
            }
            taken += 1;
            points += 1;
        }
    }
    outcome(
        points >= 1000 && worst_fe <= FUNCTIONAL_REL && boett_ok > 0 && worst_b <= BOETTCHER_RESIDUAL,
        format!(
            "{points} points on 20 instances, max |h(f)-d h|/max(1,h) = {worst_fe:.2e}; \
             Böttcher on {boett_ok} points, max residual {worst_b:.2e}"
        ),
    )
}

/// `d ∫_0^z (w-a)^(d-2) (w+(d-2)a) dw` by composite Simpson along the segment.
fn q_by_quadrature(d: u32, a: Complex, z: Complex) -> Complex {
    let n = 2000;
    let h = z / n as f64;
    let g = |w: Complex| (w - a).powu(d - 2) * (w + a * f64::from(d - 2)) * f64::from(d);
    let mut sum = g(c(0.0, 0.0)) + g(z);
    for k in 1..n {
        sum += g(h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_co: f64 = 0.0;
    for _ in 0..1000 {
        let a = random_disk(&mut rng, 0.01, 10.0);
        let b = random_disk(&mut rng, 0.01, 10.0);
        let f = FamilyInstance::cubic(a, b).unwrap();
        let (p1, p2) = (f.eval(-a * 2.0).unwrap(), f.eval(a).unwrap());
        worst_co = worst_co.max((p1 - p2).norm() / p2.norm().max(f64::MIN_POSITIVE));
    }
    let mut worst_q: f64 = 0.0;
    for d in 3..=6 {
        for _ in 0..50 {
            let a = random_disk(&mut rng, 0.01, 1.5);
            let b = random_disk(&mut rng, 0.01, 2.0);
            let z = random_disk(&mut rng, 0.0, 2.0);
            let f = FamilyInstance::degree_d(d, a, b).unwrap();
            let got = f.eval(z).unwrap() - b;
            let want = q_by_quadrature(d, a, z);
            worst_q = worst_q.max((got - want).norm() / want.norm().max(1.0));
        }
    }
    outcome(
        worst_co <= COCRITICAL_REL && worst_q <= Q_QUADRATURE,
        format!("co-critical rel err {worst_co:.2e} over 1000 (a,b); Q vs quadrature {worst_q:.2e} for d = 3..6"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    let mut failures = Vec::new();
    let mut worst_db: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    while done < 200 {
        let a = random_disk(&mut rng, 0.2, 1.5);
        let b = random_disk(&mut rng, 1.0, 20.0);
        let f = FamilyInstance::cubic(a, b).unwrap();
        let (active, passive) = critical_potentials(&f);
        if passive.partial_cmp(&active) != Some(std::cmp::Ordering::Less) {
            continue;
        }
        let Ok(zeta) = zeta_of(&f) else { continue };
        let Ok(spec) = SliceSpec::cubic(zeta) else { continue };
        done += 1;
        let seed = b * (c(1.0, 0.0) + random_disk(&mut rng, 0.0, 1e-3));
        match solve_slice(&spec, a, seed) {
            Ok(p) => {
                let db = (p.b - b).norm();
                worst_db = worst_db.max(db);
                worst_res = worst_res.max(p.residual);
                if db > ROUND_TRIP_DB || p.residual > SLICE_RESIDUAL {
                    failures.push(format!("a={a} b={b}: |Δb|={db:.2e}"));
                }
            }
            Err(e) => failures.push(format!("a={a} b={b}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{done} members, max |Δb| {worst_db:.2e}, max residual {worst_res:.2e}, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let specs = [
        OmegaSpec::new(0, 1, 3, 3, 1.0).unwrap(),
        OmegaSpec::new(1, 2, 5, 4, 0.5).unwrap(),
        OmegaSpec::new(2, 5, 10, 10, 1.0).unwrap(),
    ];
    let mut rejected = 0;
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let spec = &specs[k % specs.len()];
        let s1: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let s2: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let a1 = spec.n1 + rng.random_range(0..40);
        let a2 = spec.n2 + rng.random_range(0..40);
        let beta = c(rng.random_range(0.0..1.0), rng.random_range(-spec.beta_im_bound..spec.beta_im_bound));
        let alpha = spec.alpha_of(s1, a1, s2, c(a2 as f64, 0.0) + beta);
        match omega_membership(spec, alpha) {
            Ok(Some(w)) => worst = worst.max((w.reconstruct(spec) - alpha).norm()),
            _ => rejected += 1,
        }
    }
    // disk trends and real symmetry for (0, 1)
    let spec = OmegaSpec::new(0, 1, 3, 3, 1.0).unwrap();
    let disks = omega_disks(&spec, 12).unwrap();
    let mut trends = true;
    for sign in [1i8, -1] {
        let chain: Vec<_> = disks.iter().filter(|d| d.sign1 == sign).collect();
        for w in chain.windows(2) {
            trends &= w[1].radius < w[0].radius && w[1].center().norm() < w[0].center().norm();
        }
    }
    let (mut asym, mut inside) = (0, 0);
    for _ in 0..1000 {
        let x = c(rng.random_range(-0.4..0.4), rng.random_range(-0.05..0.05));
        let here = matches!(omega_membership(&spec, x), Ok(Some(_)));
        let there = matches!(omega_membership(&spec, -x.conj()), Ok(Some(_)));
        asym += usize::from(here != there);
        inside += usize::from(here);
    }
    outcome(
        rejected == 0 && worst <= RECONSTRUCTION && trends && asym == 0 && inside > 0,
        format!(
            "10000 members, {rejected} rejected, max reconstruction error {worst:.2e}; \
             radii and centre distances decreasing: {trends}; symmetry mismatches {asym}/1000 ({inside} inside)"
        ),
    )
}

fn square_raster(n: usize) -> MembershipRaster {
    let bits = (0..n * n)
        .map(|i| {
            let (r, c) = (i / n, i % n);
            r >= n / 4 && r < 3 * n / 4 && c >= n / 4 && c < 3 * n / 4
        })
        .collect();
    MembershipRaster::from_bits(n, Window::new(c(0.0, 0.0), 1.0).unwrap(), bits).unwrap()
}

/// Product Cantor dust of 4 similarities with ratio `1/m`, digits in {0, m-1}.
fn cantor_dust(m: usize, levels: u32) -> MembershipRaster {
    let n = m.pow(levels);
    let keep = |mut x: usize| {
        for _ in 0..levels {
            let d = x % m;
            if d != 0 && d != m - 1 {
                return false;
            }
            x /= m;
        }
        true
    };
    let bits = (0..n * n).map(|i| keep(i / n) && keep(i % n)).collect();
    MembershipRaster::from_bits(n, Window::new(c(0.0, 0.0), 1.0).unwrap(), bits).unwrap()
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;

    let ifs = pressure_dimension(&BranchSystem::synthetic(2, 1.0 / 3.0).unwrap(), 5).unwrap();
    let exact = 2f64.ln() / 3f64.ln();
    pass &= (ifs.value - exact).abs() <= IFS_PRESSURE;
    lines.push(format!("IFS(2,1/3) {:.6} vs {exact:.6}", ifs.value));

    let circle = FamilyInstance::cubic(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
    let e = box_dimension(&julia_raster(&circle, &Window::new(c(0.0, 0.0), 1.25).unwrap(), 2048, 200).unwrap()).unwrap();
    pass &= (e.value - 1.0).abs() <= CIRCLE_BOX && e.fit_residual.unwrap() <= CALIBRATION_FIT;
    lines.push(format!("circle {:.4} (fit {:.3})", e.value, e.fit_residual.unwrap()));

    let e = box_dimension(&square_raster(4096)).unwrap();
    pass &= (e.value - 2.0).abs() <= SQUARE_BOX && e.fit_residual.unwrap() <= CALIBRATION_FIT;
    lines.push(format!("square {:.4} (fit {:.3})", e.value, e.fit_residual.unwrap()));

    for (m, levels) in [(4usize, 6u32), (3, 7)] {
        let dust = cantor_dust(m, levels);
        let scales: Vec<u32> = (0..levels - 1).map(|k| m.pow(k) as u32).collect();
        let e = box_dimension_with(&dust, &scales).unwrap();
        let exact = 4f64.ln() / (m as f64).ln();
        pass &= (e.value - exact).abs() <= 1e-9 && e.fit_residual.unwrap() <= CALIBRATION_FIT;
        lines.push(format!("dust 4×1/{m} {:.4} vs {exact:.4} (fit {:.1e})", e.value, e.fit_residual.unwrap()));
    }

    for (a, b) in [(0.0, 10.0), (1.05, 0.0), (1.2, 0.0), (1.1, 0.3)] {
        let f = FamilyInstance::cubic(c(a, 0.0), c(b, 0.0)).unwrap();
        assert_eq!(certify(&f, 100), CantorVerdict::CertifiedCantor);
        let boxd = box_dimension(&julia_raster(&f, &julia_window(&f), 4096, 300).unwrap()).unwrap();
        let pres = pressure_dimension(&build_branch_system(&f).unwrap(), 5).unwrap();
        let gap = (boxd.value - pres.value).abs();
        pass &= gap <= ESTIMATOR_GAP;
        lines.push(format!("({a},{b}) box {:.4} pressure {:.4} gap {gap:.4}", boxd.value, pres.value));
    }

    let along: Vec<f64> = [6.0, 10.0, 20.0, 50.0]
        .iter()
        .map(|&b| {
            let f = FamilyInstance::cubic(c(0.0, 0.0), c(b, 0.0)).unwrap();
            pressure_dimension(&build_branch_system(&f).unwrap(), 5).unwrap().value
        })
        .collect();
    let decreasing = along.windows(2).all(|w| w[1] < w[0]);
    pass &= decreasing;
    lines.push(format!("a=0, b=6,10,20,50: {:.4?}", along));
    outcome(pass, lines.join("; "))
}

fn copy_raster(spec: &SliceSpec) -> cubiclab::slice::SliceRaster {
    let anchor = find_anchor(spec).unwrap();
    let win = Window::new(c(-1.2, 0.0), 0.03).unwrap();
    render_slice(spec, &win, &RenderSettings { width: 64, height: 64, classify_iter: 500 }, &anchor).unwrap()
}

fn criterion_6() -> Outcome {
    let spec = SliceSpec::cubic(c(2.0, 0.0)).unwrap();
    let raster = copy_raster(&spec);
    let mut lines = Vec::new();
    let mut pass = true;
    for (p, q, closeness) in [(0i64, 1i64, 0.1), (1, 2, 0.05)] {
        let root = match find_parabolic_root(&spec, &raster, p, q, 1, 500) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                lines.push(format!("{p}/{q}: {e}"));
                continue;
            }
        };
        let target = rotation(c(p as f64 / q as f64, 0.0));
        let err = (root.1.multiplier - target).norm();
        pass &= err <= MULTIPLIER;
        lines.push(format!("{p}/{q} root a={:.6} err {err:.1e}", root.0.a));

        let omega = OmegaSpec::with_defaults(p, q).unwrap();
        for k in 0..2 {
            let alpha = pick_target_alpha(&omega, closeness / 4f64.powi(k)).unwrap();
            let member = matches!(omega_membership(&omega, c(alpha, 0.0)), Ok(Some(_)));
            match tune_multiplier(&spec, &root, c(alpha, 0.0)) {
                Ok(t) => {
                    let err = (t.1.multiplier - rotation(c(alpha, 0.0))).norm();
                    pass &= member && err <= MULTIPLIER;
                    lines.push(format!("tune α={alpha:.6} in Ω: {member}, err {err:.1e}"));
                }
                Err(e) => {
                    pass = false;
                    lines.push(format!("tune α={alpha:.6}: {e}"));
                }
            }
        }
    }
    outcome(pass, lines.join("; "))
}

fn criterion_7() -> Outcome {
    let spec = SliceSpec::cubic(c(2.0, 0.0)).unwrap();
    let anchor = find_anchor(&spec).unwrap();
    let (_, bounded) = auto_windows(&spec, &anchor, 128, 500).unwrap();
    let window = bounded.unwrap();
    let omega = OmegaSpec::with_defaults(0, 1).unwrap();
    let budget = HuntBudget::default();
    let first = run_hunt(&spec, &omega, 3, &budget, &window, &anchor).unwrap();
    let second = run_hunt(&spec, &omega, 3, &budget, &window, &anchor).unwrap();
    let same = serde_json::to_vec(&first).unwrap() == serde_json::to_vec(&second).unwrap();
    let membership = first
        .stages
        .iter()
        .all(|s| matches!(omega_membership(&OmegaSpec { p: s.p, q: s.q, ..omega }, c(s.alpha, 0.0)), Ok(Some(_))));
    let boxes: Vec<f64> = first.stages.iter().filter_map(|s| s.box_dimension.as_ref().map(|e| e.value)).collect();
    let trend_ok = boxes.len() == first.stages.len() && boxes.iter().all(|&v| v >= boxes[0] - STAGE_SLACK);
    let nondecreasing = boxes.windows(2).all(|w| w[1] >= w[0] - STAGE_SLACK);
    let final_inside = first
        .final_parameter
        .is_some_and(|p| first.stages.iter().all(|s| s.neighbourhood.contains(p.a())));
    let disjoint = first.stages.iter().all(|s| s.distance_to_used.is_none_or(|d| d > 0.0));
    let pass = first.completed() && first.nesting_holds() && membership && same && trend_ok && final_inside && disjoint;
    outcome(
        pass,
        format!(
            "stages {} (truncated: {:?}), nested {}, Ω membership {membership}, deterministic {same}, \
             final in every U_n {final_inside}, disjoint {disjoint}, box per stage {:.4?} \
             (non-decreasing within slack: {nondecreasing}), certificate {:?}",
            first.stages.len(),
            first.truncated,
            first.nesting_holds(),
            boxes,
            first.final_certificate
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = Config::default();
    let a = execute(Command::RenderSlice, &cfg).unwrap();
    let b = execute(Command::RenderSlice, &cfg).unwrap();
    let identical = a.files == b.files;
    let img = &a.summary["images"][0];
    let fraction = img["bounded_fraction_of_solved"].as_f64().unwrap();
    let attracting = img["counts"]["attracting"].as_u64().unwrap();

    // a window meeting the copy's boundary in the valley between the main body and the period-2 bulb
    let spec = SliceSpec::cubic(c(2.0, 0.0)).unwrap();
    let anchor = find_anchor(&spec).unwrap();
    let zoom = Window::new(c(-1.2146, 0.00159), 0.00159).unwrap();
    let raster = render_slice(&spec, &zoom, &RenderSettings { width: 512, height: 512, classify_iter: 500 }, &anchor).unwrap();
    let counts = raster.counts();
    let (_, components) = label_components(&raster.bounded_mask(), 512, 512);
    let meets_boundary = counts.escaped > 0 && counts.attracting > 0;
    outcome(
        fraction >= BOUNDED_FRACTION && attracting >= 1 && components >= MIN_COMPONENTS && meets_boundary && identical,
        format!(
            "default window: bounded {:.2}% of solved, {attracting} attracting pixels, byte-identical rerun {identical}; \
             zoom window: {components} bounded components ({} escaped, {} attracting)",
            100.0 * fraction,
            counts.escaped,
            counts.attracting
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (a, b) in [(0.5, 20.0), (0.0, 10.0), (1.2, 0.0)] {
        let f = FamilyInstance::cubic(c(a, 0.0), c(b, 0.0)).unwrap();
        let certified = certify(&f, 100) == CantorVerdict::CertifiedCantor;
        let win = julia_window(&f);
        let rasters: Vec<MembershipRaster> = [512, 1024, 2048].iter().map(|&n| julia_raster(&f, &win, n, 300).unwrap()).collect();
        let fractions = area_decay_diagnostic(&rasters);
        let decays = fractions.windows(2).all(|w| w[1] <= w[0] * (1.0 + AREA_SLACK));
        pass &= certified && decays && decays == is_non_increasing(&fractions);
        let shown: Vec<String> = fractions.iter().map(|f| format!("{f:.3e}")).collect();
        lines.push(format!("({a},{b}) certified {certified}, fractions {}", shown.join(" > ")));
    }
    outcome(pass, lines.join("; "))
}

type Criterion = (usize, &'static str, fn() -> Outcome, Duration);

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 9] = [
        (1, "functional equations", criterion_1, Duration::from_secs(10)),
        (2, "co-critical identity and Q expansion", criterion_2, Duration::from_secs(5)),
        (3, "slice round trip", criterion_3, Duration::from_secs(60)),
        (4, "Ω membership suite", criterion_4, Duration::from_secs(30)),
        (5, "dimension calibration", criterion_5, Duration::from_secs(600)),
        (6, "parabolic tooling", criterion_6, Duration::from_secs(120)),
        (7, "hunt structure at depth 3", criterion_7, Duration::from_secs(1800)),
        (8, "figure reproduction", criterion_8, Duration::from_secs(900)),
        (9, "area decay", criterion_9, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (n, name, run, budget) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let out = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let pass = out.pass && took <= budget;
        failed += usize::from(!pass);
        println!(
            "criterion {n} {}: {name} [{:.1}s of {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use steklov_cli::{replay_bundle, run_scan, run_verify, ExperimentConfig, Family, ResultRecord, Status};
use steklov_core::spectrum::disk_eigenvalue;
use steklov_core::zeta::growth_certificate;
use steklov_core::{
    asymptotic_residuals, conformal_defect, edward_z1, moebius_pullback, normalize, random_moebius,
    random_weight, riemann_zeta, steklov_spectrum, trace_r, zeta_invariant, Estimator, Gallery,
    MoebiusMap, WeightFunction,
};

type Outcome = Result<(bool, String), String>;

fn all_pass(record: &ResultRecord, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &name in names {
        let checks: Vec<_> = record.named(name).collect();
        let failed = checks.iter().filter(|c| c.status != Status::Pass).count();
        ok &= !checks.is_empty() && failed == 0;
        let margin = record
            .min_margin(name)
            .map(|m| format!(", min margin {m:.3e}"))
            .unwrap_or_default();
        parts.push(format!("{name}: {}/{} pass{margin}", checks.len() - failed, checks.len()));
    }
    (ok, parts.join("; "))
}

fn disk_spectrum() -> Outcome {
    let sp = steklov_spectrum(&WeightFunction::constant(1.0).map_err(|e| e.to_string())?, 128)
        .map_err(|e| e.to_string())?;
    let worst = (0..64)
        .map(|n| (sp.values()[n] - disk_eigenvalue(n)).abs())
        .fold(0.0, f64::max);
    Ok((worst < 1e-10, format!("max |λ_n − λ_n(disk)|, n < 64: {worst:.2e}")))
}

fn conformal_triviality() -> Outcome {
    let m = MoebiusMap::preserving(Complex64::new(0.5, 0.0), 0.0).map_err(|e| e.to_string())?;
    let b = moebius_pullback(&WeightFunction::constant(1.0).unwrap(), &m).map_err(|e| e.to_string())?;
    let sp = steklov_spectrum(&b, 128).map_err(|e| e.to_string())?;
    let spec_err = sp
        .trusted()
        .iter()
        .enumerate()
        .map(|(n, l)| (l - disk_eigenvalue(n)).abs())
        .fold(0.0, f64::max);
    let defect = conformal_defect(&b).map_err(|e| e.to_string())?;
    let mut trace = 0.0f64;
    for s in [1.0, 2.0, 3.0] {
        trace = trace.max(trace_r(&b, s, 128, Estimator::PhiTrace).map_err(|e| e.to_string())?.value.abs());
    }
    Ok((
        spec_err < 1e-6 && defect.abs() < 1e-8 && trace < 1e-7,
        format!("spectrum {spec_err:.2e}, defect {defect:.2e}, max |ψ(s)| {trace:.2e}"),
    ))
}

fn edward_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let a = random_weight(seed, 6, 0.3, 0.7).map_err(|e| e.to_string())?;
        let z = zeta_invariant(&a, 1).map_err(|e| e.to_string())?;
        let e = edward_z1(a.series()).map_err(|e| e.to_string())?;
        worst = worst.max((z.re - e).abs() / e.abs()).max(z.im.abs() / e.abs());
    }
    Ok((worst <= 1e-12, format!("100 weights, max relative difference {worst:.2e}")))
}

fn null_space() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let a = random_weight(seed, 1, 0.4, 0.9).map_err(|e| e.to_string())?;
        for k in 1..=3 {
            worst = worst.max(zeta_invariant(&a, k).map_err(|e| e.to_string())?.norm());
        }
    }
    Ok((worst <= 1e-10, format!("20 weights, k = 1..3, max |Z_k| {worst:.2e}")))
}

fn invariant_under_pullback() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let a = random_weight(seed, 6, 0.2, 0.5).map_err(|e| e.to_string())?;
        let m = random_moebius(seed, 0.3).map_err(|e| e.to_string())?;
        let b = moebius_pullback(&a, &m).map_err(|e| e.to_string())?;
        for k in 1..=2 {
            let za = zeta_invariant(&a, k).map_err(|e| e.to_string())?;
            let zb = zeta_invariant(&b, k).map_err(|e| e.to_string())?;
            worst = worst.max((za - zb).norm() / (1.0 + za.norm()));
        }
    }
    Ok((worst <= 1e-8, format!("20 pairs, k = 1, 2, max |ΔZ_k|/(1 + |Z_k|) {worst:.2e}")))
}

fn growth() -> Outcome {
    let a = normalize(&WeightFunction::cosine(0.5, 2).unwrap()).map_err(|e| e.to_string())?;
    let c = growth_certificate(&a, &[1.0, 2.0, 3.0, 4.0], 128).map_err(|e| e.to_string())?;
    Ok((
        c.verified(1e-9, 1e-8),
        format!(
            "n0 = {}, defect {:.3e}, lower-bound margin {:.3e}, increment margin {:.3e}",
            c.n0, c.defect, c.lower_bound_margin, c.increment_margin
        ),
    ))
}

fn riemann() -> Outcome {
    let e2 = (riemann_zeta(2.0).unwrap() - PI * PI / 6.0).abs();
    let em1 = (riemann_zeta(-1.0).unwrap() + 1.0 / 12.0).abs();
    let zeros = (1..=3)
        .map(|k| riemann_zeta(-2.0 * k as f64).unwrap().abs())
        .fold(0.0, f64::max);
    Ok((
        e2 < 1e-12 && em1 < 1e-12 && zeros < 1e-12,
        format!("ζ(2) {e2:.1e}, ζ(−1) {em1:.1e}, trivial zeros {zeros:.1e}"),
    ))
}

fn asymptotics() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for g in Gallery::standard() {
        let a = normalize(&g.weight().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let sp = steklov_spectrum(&a, 128).map_err(|e| e.to_string())?;
        let r = asymptotic_residuals(&sp);
        let worst = r.max_abs_from(30);
        ok &= worst < 1e-8;
        let slope = r
            .log_linear_slope
            .map(|s| format!("{s:.2}"))
            .unwrap_or_else(|| "exact".into());
        parts.push(format!("{g}: {worst:.1e} (slope {slope})"));
    }
    Ok((ok, format!("max |δ_n|, n ≥ 30: {}", parts.join(", "))))
}

fn scan(dir: &std::path::Path) -> Outcome {
    let mut cfg = ExperimentConfig::random_suite(0, 200, dir);
    cfg.m = 6;
    cfg.k_list = vec![2];
    let (record, rows) = run_scan(&cfg).map_err(|e| e.to_string())?;
    let skipped = record.checks.iter().filter(|c| c.name == "z2").count();
    let failed = record.count(Status::Fail);
    let min = rows.iter().map(|r| r.z_k).fold(f64::INFINITY, f64::min);
    let bundles: Vec<_> = record
        .artifacts
        .iter()
        .filter(|p| p.join("bundle.json").is_file())
        .collect();
    let mut replay_ok = true;
    for b in &bundles {
        let (bundle, z) = replay_bundle(b).map_err(|e| e.to_string())?;
        replay_ok &= (z - bundle.z_k).abs() <= 1e-12 * (1.0 + bundle.z_k.abs());
    }
    let ok = rows.len() == 200 && skipped == 0 && failed == 0 && (min >= -1e-8 || (!bundles.is_empty() && replay_ok));
    Ok((
        ok,
        format!(
            "{} weights in {:.1}s, min Z_2 {min:.3e}, {} bundle(s), {skipped} over budget",
            rows.len(),
            record.wall_clock_s,
            bundles.len()
        ),
    ))
}

fn main() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().expect("temporary directory");

    let random_cfg = ExperimentConfig::random_suite(1000, 50, tmp.path().join("random"));
    let mut gallery_cfg = ExperimentConfig::random_suite(0, 0, tmp.path().join("gallery"));
    gallery_cfg.family = Family::Gallery { names: vec![] };
    gallery_cfg.cross_check_s = vec![1.0, 2.0, 3.0];
    let random = run_verify(&random_cfg);
    let gallery = run_verify(&gallery_cfg);

    let from_records = |names: &[&str], with_gallery: bool| -> Outcome {
        let r = random.as_ref().map_err(|e| e.to_string())?;
        let (mut ok, mut text) = all_pass(r, names);
        text = format!("random: {text}");
        if with_gallery {
            let g = gallery.as_ref().map_err(|e| e.to_string())?;
            let (gok, gtext) = all_pass(g, names);
            ok &= gok;
            text = format!("{text} | gallery: {gtext}");
        }
        Ok((ok, text))
    };

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("disk spectrum", Box::new(disk_spectrum)),
        ("conformal triviality of a Moebius pullback", Box::new(conformal_triviality)),
        ("lattice Z_1 equals the closed form", Box::new(edward_oracle)),
        ("Z_k vanishes on span{1, e^{±iθ}}", Box::new(null_space)),
        ("Z_k invariant under pullback", Box::new(invariant_under_pullback)),
        ("ψ(s) ≥ 0 for s ≥ 1", Box::new(|| from_records(&["psi_nonnegative"], false))),
        ("ψ monotone and sandwich ordered", Box::new(|| from_records(&["psi_monotone", "sandwich"], false))),
        ("ψ(0) = 0", Box::new(|| from_records(&["psi_zero"], true))),
        ("Rayleigh bound and chain", Box::new(|| from_records(&["rayleigh_bound", "rayleigh_chain"], false))),
        ("estimators agree on the gallery", Box::new(|| {
            let g = gallery.as_ref().map_err(|e| e.to_string())?;
            Ok(all_pass(g, &["estimator_agreement"]))
        })),
        ("Weinstock and Hersch-Payne-Schiffer", Box::new(|| {
            let (ok, text) = from_records(&["weinstock", "hersch_payne_schiffer"], true)?;
            let g = gallery.as_ref().map_err(|e| e.to_string())?;
            let disk = g
                .checks
                .iter()
                .find(|c| c.name == "weinstock" && c.weight == "disk")
                .and_then(|c| c.margin)
                .ok_or("no disk Weinstock record")?;
            Ok((ok && disk.abs() <= 1e-10, format!("{text} | disk equality {disk:.1e}")))
        })),
        ("growth certificate for 1 + cos(2θ)/2", Box::new(growth)),
        ("Riemann zeta values", Box::new(riemann)),
        ("spectral asymptotics on the gallery", Box::new(asymptotics)),
        ("Z_2 scan smoke test", Box::new(|| scan(&tmp.path().join("scan")))),
    ];

    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failures += 1;
        }
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    for (label, rec) in [("random", &random), ("gallery", &gallery)] {
        if let Ok(r) = rec {
            println!("verify[{label}] {}", r.summary());
            for c in r.checks.iter().filter(|c| c.status != Status::Pass) {
                println!("  {:?} {} {}: {}", c.status, c.name, c.weight, c.detail);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass ({:.1}s)", criteria.len() - failures, criteria.len(), start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}

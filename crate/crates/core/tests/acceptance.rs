//! Acceptance criteria. Each check prints one `PASS` or `FAIL` line; the
//! process exits non-zero if any check fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use fringephase::cli::{compute, run_pipeline, Mask, PipelineConfig, QuadratureSource};
use fringephase::demod::{RidgePhase, RidgeSearch};
use fringephase::fields::{gaussian_smooth, Axis, ComplexSignal, PhaseMap, ScalarField, Units, TWO_PI};
use fringephase::quadrature::{
    corrected_quadrature, direction_unwrap, hilbert_row, orientation_map, sign_map, QuadratureConfig,
    ScanAxes,
};
use fringephase::synth::{fringe_from_model, test_phase, FringeModel};
use fringephase::unwrap::unwrap_2d;
use fringephase::wavelet::{
    cwt_row_direct, cwt_row_spectral, morlet, morlet_spectrum, CwtMatrix, CwtPlan, Spacing,
    WaveletParams, TRUNCATION_RADIUS,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn benchmark() -> (ScalarField, PhaseMap) {
    let p = test_phase(512, 512).unwrap();
    let i = fringe_from_model(&FringeModel::uniform(p.clone(), 1.0, 0.5).unwrap()).unwrap();
    (i, p)
}

fn region(border: usize, radius: f64) -> Mask {
    Mask::border_and_disk(512, 512, border, radius, (256.0, 256.0))
}

/// RMS of `est − target` over `mask`, allowing one global sign flip of `est`.
fn flip_rms(est: &ScalarField, target: &ScalarField, mask: &Mask) -> f64 {
    let mut se = [0.0, 0.0];
    for ((e, t), &k) in est.data().iter().zip(target.data()).zip(mask.as_slice()) {
        if k {
            se[0] += (e - t).powi(2);
            se[1] += (e + t).powi(2);
        }
    }
    (se[0].min(se[1]) / mask.count() as f64).sqrt()
}

fn frobenius(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn end_to_end(runs: &[(usize, fringephase::cli::RunReport)]) -> Outcome {
    let r = &runs[0].1;
    let (rms, max) = (r.rms_error.unwrap(), r.max_abs_error.unwrap());
    outcome(
        rms <= 0.1 && max <= 0.5 && r.wall_time <= 120.0,
        format!("rms {rms:.4} rad, max {max:.4} rad, {:.2} s on 1 thread", r.wall_time),
    )
}

fn literal_method() -> String {
    let mut parts = Vec::new();
    for (name, quad) in [("hilbert", QuadratureSource::Hilbert), ("exact", QuadratureSource::Exact)] {
        let cfg = PipelineConfig {
            quadrature: quad,
            scan_axis: ScanAxes::Rows,
            ridge_search: RidgeSearch::OneSided,
            ridge_phase: RidgePhase::Raw,
            ..PipelineConfig::default()
        };
        let s = compute(&cfg).unwrap().stats.unwrap();
        parts.push(format!("{name} quadrature rms {:.3} rad", s.rms));
    }
    format!("rows only, one-sided ridge, raw ridge phase: {}", parts.join(", "))
}

fn ideal_quadrature() -> (Outcome, fringephase::cli::PipelineOutput) {
    let cfg = PipelineConfig {
        quadrature: QuadratureSource::Exact,
        ..PipelineConfig::default()
    };
    let out = compute(&cfg).unwrap();
    let s = out.stats.unwrap();
    (
        outcome(s.rms <= 0.05, format!("rms {:.4} rad, max {:.4} rad", s.rms, s.max_abs)),
        out,
    )
}

fn quadrature_fidelity() -> Outcome {
    let (i, p) = benchmark();
    let target = p.field().map(|v| -0.5 * v.sin()).unwrap();
    let mask = region(32, 32.0);
    let with = corrected_quadrature(&i, &QuadratureConfig::default()).unwrap();
    let without = corrected_quadrature(
        &i,
        &QuadratureConfig {
            sign_correction: false,
            ..QuadratureConfig::default()
        },
    )
    .unwrap();
    let a = flip_rms(&with.pattern, &target, &mask);
    let b = flip_rms(&without.pattern, &target, &mask);
    outcome(
        a <= 0.05 && b > 0.4,
        format!("rms {a:.4}, without sign correction {b:.4}"),
    )
}

fn cwt_equivalence() -> Outcome {
    let n = 256;
    let p = WaveletParams {
        center_frequency: 1.0,
        min_scale: 4.0,
        max_scale: 16.0,
        n_scales: 20,
        spacing: Spacing::Logarithmic,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut signal = || -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let supported = |w: &CwtMatrix| -> Vec<Complex64> {
        let mut v = Vec::new();
        for (k, &s) in w.scales().iter().enumerate() {
            let reach = (TRUNCATION_RADIUS * s).ceil() as usize;
            v.extend_from_slice(&w.row(k)[reach..n - reach]);
        }
        v
    };
    let cs = |v: &[f64]| ComplexSignal::from_real(v).unwrap();
    let mut worst_dev = 0.0f64;
    let mut worst_lin = 0.0f64;
    for _ in 0..20 {
        let (f, g) = (signal(), signal());
        let (a, b) = (1.7, -0.6);
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        for transform in [cwt_row_spectral, cwt_row_direct] {
            let wf = transform(&cs(&f), &p).unwrap();
            let wg = transform(&cs(&g), &p).unwrap();
            let wm = transform(&cs(&mix), &p).unwrap();
            let diff: Vec<Complex64> = wm
                .coefficients()
                .iter()
                .zip(wf.coefficients())
                .zip(wg.coefficients())
                .map(|((m, x), y)| m - (x * a + y * b))
                .collect();
            worst_lin = worst_lin.max(frobenius(&diff) / frobenius(wm.coefficients()));
        }
        let spectral = supported(&cwt_row_spectral(&cs(&f), &p).unwrap());
        let direct = supported(&cwt_row_direct(&cs(&f), &p).unwrap());
        let diff: Vec<Complex64> = spectral.iter().zip(&direct).map(|(u, v)| u - v).collect();
        worst_dev = worst_dev.max(frobenius(&diff) / frobenius(&direct));
    }
    outcome(
        worst_dev <= 2e-3 && worst_lin <= 1e-10,
        format!("max relative deviation {worst_dev:.2e}, max linearity residual {worst_lin:.2e}"),
    )
}

fn ridge_scale_law() -> Outcome {
    let n = 4096;
    let p = WaveletParams::default();
    let plan = CwtPlan::new(n, &p).unwrap();
    let scales = plan.scales().to_vec();
    let mut pass = true;
    let mut parts = Vec::new();
    for omega in [0.1, 0.2, 0.3, 0.5] {
        let line: Vec<Complex64> = (0..n).map(|y| Complex64::new((omega * y as f64).cos(), 0.0)).collect();
        let w = plan.transform(&line).unwrap();
        let target = TWO_PI / omega;
        let nearest = (0..scales.len())
            .min_by(|&a, &b| (scales[a] - target).abs().total_cmp(&(scales[b] - target).abs()))
            .unwrap();
        let mut steps = 0usize;
        for col in n / 4..3 * n / 4 {
            let k = (0..w.n_scales())
                .max_by(|&a, &b| w.get(a, col).norm().total_cmp(&w.get(b, col).norm()).then(b.cmp(&a)))
                .unwrap();
            steps = steps.max(k.abs_diff(nearest));
        }
        pass &= steps <= 1;
        parts.push(format!("ω₀ = {omega}: {steps} step(s)"));
    }
    outcome(pass, parts.join(", "))
}

fn hilbert_exactness() -> Outcome {
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for (n, m) in [(64, 3), (256, 12), (512, 100), (1000, 37)] {
        let t: Vec<f64> = (0..n).map(|x| TWO_PI * (m * x) as f64 / n as f64).collect();
        let c: Vec<f64> = t.iter().map(|v| v.cos()).collect();
        let s: Vec<f64> = t.iter().map(|v| v.sin()).collect();
        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        worst = worst.max(max_diff(&hilbert_row(&c).unwrap(), &s));
        worst = worst.max(max_diff(&hilbert_row(&s).unwrap(), &neg_c));
    }
    let constant_zero = hilbert_row(&[2.75; 128]).unwrap().iter().all(|&v| v == 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_hh = 0.0f64;
    for _ in 0..20 {
        let n = 512;
        let mut f = vec![0.0; n];
        for m in 1..60 {
            let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for (x, v) in f.iter_mut().enumerate() {
                let t = TWO_PI * (m * x) as f64 / n as f64;
                *v += a * t.cos() + b * t.sin();
            }
        }
        let hh = hilbert_row(&hilbert_row(&f).unwrap()).unwrap();
        worst_hh = worst_hh.max(hh.iter().zip(&f).map(|(u, v)| (u + v).abs()).fold(0.0, f64::max));
    }
    outcome(
        worst <= 1e-10 && constant_zero && worst_hh <= 1e-10,
        format!("tones {worst:.1e}, H(const) = 0: {constant_zero}, H(H f) + f {worst_hh:.1e}"),
    )
}

fn orientation_accuracy() -> Outcome {
    let (i, _) = benchmark();
    let o = orientation_map(&i, 8.0).unwrap();
    let mask = region(16, 16.0);
    let mut worst = 0.0f64;
    for x in 0..512 {
        for y in 0..512 {
            if !mask.contains(x, y) {
                continue;
            }
            // tangent of the circle through (x, y), measured from the row-index axis
            let (dx, dy) = (x as f64 - 256.0, y as f64 - 256.0);
            let truth = (-dx).atan2(dy).rem_euclid(PI);
            let d = (o.angle().get(x, y) - truth).rem_euclid(PI);
            worst = worst.max(d.min(PI - d));
        }
    }
    let s = sign_map(&direction_unwrap(&o).unwrap(), Axis::Rows).unwrap();
    let mut agree = 0usize;
    for x in 0..512 {
        for y in 0..512 {
            if mask.contains(x, y) {
                let truth = if y >= 256 { 1.0 } else { -1.0 };
                agree += (s.field().get(x, y) == truth) as usize;
            }
        }
    }
    let total = mask.count();
    let frac = agree.max(total - agree) as f64 / total as f64;
    let deg = worst.to_degrees();
    outcome(
        deg <= 5.0 && frac >= 0.99,
        format!("max tangent error {deg:.3}°, sign agreement {:.3}%", 100.0 * frac),
    )
}

/// Largest deviation of `u − φ` from its value at pixel 0, and the distance
/// of that value from a multiple of 2π.
fn round_trip_error(phi: &ScalarField, quality: &ScalarField) -> f64 {
    let u = unwrap_2d(&PhaseMap::wrap(phi), quality).unwrap().phase;
    let offset = u.field().data()[0] - phi.data()[0];
    let k = (offset / TWO_PI).round();
    let spread = u
        .field()
        .data()
        .iter()
        .zip(phi.data())
        .map(|(a, b)| (a - b - offset).abs())
        .fold(0.0, f64::max);
    spread.max((offset - TWO_PI * k).abs())
}

fn unwrap_round_trip(quality: &ScalarField) -> Outcome {
    let phi = test_phase(512, 512).unwrap();
    let bench = round_trip_error(phi.field(), quality);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let (w, h) = (96 + 8 * trial, 80);
        let noise = ScalarField::from_fn(w, h, Units::Radians, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let smooth = gaussian_smooth(&noise, 4.0).unwrap();
        let mut step = 0.0f64;
        for x in 0..h {
            for y in 0..w {
                if x + 1 < h {
                    step = step.max((smooth.get(x + 1, y) - smooth.get(x, y)).abs());
                }
                if y + 1 < w {
                    step = step.max((smooth.get(x, y + 1) - smooth.get(x, y)).abs());
                }
            }
        }
        // largest neighbour step becomes 2.5 rad, inside the Itoh bound
        let phi = smooth.map(|v| v * 2.5 / step).unwrap();
        let q = ScalarField::from_fn(w, h, Units::Quality, |_, _| rng.random_range(0.0..1.0)).unwrap();
        worst = worst.max(round_trip_error(&phi, &q));
    }
    outcome(
        bench <= 1e-9 && worst <= 1e-9,
        format!("benchmark {bench:.1e} rad, random smooth fields {worst:.1e} rad"),
    )
}

fn morlet_spectrum_check() -> Outcome {
    let fc = 1.0;
    let dx = 1e-3;
    let xs: Vec<f64> = (-12_000..=12_000).map(|k| k as f64 * dx).collect();
    let psi: Vec<Complex64> = xs.iter().map(|&x| morlet(x, fc)).collect();
    let mut worst = 0.0f64;
    for j in 0..=300 {
        let omega = -10.0 + 0.1 * j as f64;
        let ft: Complex64 = xs
            .iter()
            .zip(&psi)
            .map(|(&x, p)| p * Complex64::from_polar(1.0, -omega * x))
            .sum::<Complex64>()
            * dx;
        worst = worst.max((ft - morlet_spectrum(omega, fc)).norm());
    }
    let dc = morlet_spectrum(0.0, fc);
    outcome(
        worst <= 1e-6 && (dc - 5.17e-5).abs() <= 5e-8,
        format!("max deviation {worst:.1e}, ψ̂(0) = {dc:.4e}"),
    )
}

fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "report.txt")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn report_without_timing(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("report.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("wall_time_s") && !l.starts_with("output_dir"))
        .map(str::to_owned)
        .collect()
}

fn determinism(root: &Path, runs: &[(usize, fringephase::cli::RunReport)]) -> Outcome {
    let dir = |t: usize| root.join(format!("threads{t}"));
    let base_report = report_without_timing(&dir(runs[0].0));
    let base_files = artifact_bytes(&dir(runs[0].0));
    let mut pass = base_files.len() >= 8;
    for (t, _) in &runs[1..] {
        pass &= report_without_timing(&dir(*t)) == base_report;
        pass &= artifact_bytes(&dir(*t)) == base_files;
    }
    let threads: Vec<String> = runs.iter().map(|(t, _)| t.to_string()).collect();
    outcome(
        pass,
        format!("{} artifacts and the report compared across {} threads", base_files.len(), threads.join("/")),
    )
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let runs: Vec<(usize, fringephase::cli::RunReport)> = [1, 4, 8]
        .into_iter()
        .map(|t| {
            let cfg = PipelineConfig {
                output_dir: root.path().join(format!("threads{t}")),
                ..PipelineConfig::default()
            };
            (t, pool(t).install(|| run_pipeline(&cfg)).unwrap())
        })
        .collect();

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 end-to-end Hilbert pipeline", end_to_end(&runs)));
    let (ideal, ideal_out) = ideal_quadrature();
    results.push(("2 ideal-quadrature upper bound", ideal));
    results.push(("3 quadrature fidelity and sign ablation", quadrature_fidelity()));
    results.push(("4 spectral vs direct wavelet transform", cwt_equivalence()));
    results.push(("5 ridge scale law", ridge_scale_law()));
    results.push(("6 Hilbert exactness", hilbert_exactness()));
    results.push(("7 orientation and sign map", orientation_accuracy()));
    results.push(("8 unwrapping round trip", unwrap_round_trip(&ideal_out.demod.quality)));
    results.push(("9 Morlet spectrum", morlet_spectrum_check()));
    results.push(("10 thread-count determinism", determinism(root.path(), &runs)));

    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as usize;
    }
    println!("info literal single-axis method: {}", literal_method());
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Seeds are fixed here and were not tuned.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use kkq_core::analysis::basel_sum_check;
use kkq_core::experiment::{
    run_experiment, write_outputs, ConfigFile, ExperimentConfig, ExperimentKind, ExperimentOutcome,
    GridProfile,
};
use kkq_core::heterodyne::{balanced_snr, kk_snr_limit, HeterodyneParams};
use kkq_core::kk_receiver::{hilbert_phase, simulate_symbol};
use kkq_core::quantum_noise::{
    sample_noisy_current, NoiseLaw, NoiseStream, PhotocurrentTrace, TraceKind,
};
use kkq_core::signal_model::{map_qpsk, ModulationSymbol, SamplingGrid, SignalParams};

const SEED: u64 = 1;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

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

fn rel(measured: f64, predicted: f64) -> f64 {
    (measured - predicted) / predicted
}

fn experiment(
    kind: ExperimentKind,
    n_s: &[f64],
    cspr_db: &[f64],
    symbols: usize,
) -> ExperimentOutcome {
    let config = ExperimentConfig::resolve(ConfigFile {
        kind: Some(kind),
        profile: Some(GridProfile::Reduced),
        n_s: Some(n_s.to_vec()),
        cspr_db: Some(cspr_db.to_vec()),
        symbols: Some(symbols),
        seed: Some(SEED),
        ..Default::default()
    })
    .expect("acceptance config is valid");
    run_experiment(&config).expect("acceptance experiment runs")
}

fn snr_law(table: &ExperimentOutcome) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for run in &table.report.runs {
        let e = rel(run.snr, 1.5 * run.n_s);
        worst = worst.max(e.abs());
        parts.push(format!(
            "n_s {}: {:.2} ({:+.2}%)",
            run.n_s,
            run.snr,
            100.0 * e
        ));
    }
    outcome(
        worst <= 0.07,
        format!(
            "{}; worst {:.2}% (limit 7%)",
            parts.join(", "),
            100.0 * worst
        ),
    )
}

fn ellipse_ratio(table: &ExperimentOutcome) -> Outcome {
    let rhos: Vec<f64> = table
        .report
        .runs
        .iter()
        .flat_map(|r| r.clusters.iter().map(|c| c.ellipse.rho))
        .collect();
    let outside = rhos.iter().filter(|r| !(2.6..=3.4).contains(*r)).count();
    let lo = rhos.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rhos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        outside == 0,
        format!(
            "{} clusters, rho range [{lo:.3}, {hi:.3}], {outside} outside [2.6, 3.4]",
            rhos.len()
        ),
    )
}

fn radial_tangential() -> Outcome {
    let run = experiment(ExperimentKind::SingleRun, &[100.0], &[20.0], 4000);
    let mut pass = true;
    let mut parts = Vec::new();
    for c in &run.report.runs[0].clusters {
        let [major, minor] = c.axis_variances;
        let (e1, e2, e3) = (
            rel(major, 0.5),
            rel(minor, 1.0 / 6.0),
            rel(major + minor, 2.0 / 3.0),
        );
        pass &= e1.abs() <= 0.12 && e2.abs() <= 0.12 && e3.abs() <= 0.08;
        parts.push(format!(
            "q{}: {major:.3}/{minor:.3}/{:.3}",
            c.stats.symbol.index() + 1,
            major + minor
        ));
    }
    outcome(
        pass,
        format!(
            "major/minor/sum vs 0.5/0.167/0.667 (12%, 12%, 8%): {}",
            parts.join(", ")
        ),
    )
}

fn iq_noise() -> Outcome {
    // 2000 points per quadrant keep the sampling error of each variance near
    // 3%, so the 15% band tests the model rather than the sample size.
    let sweep = experiment(ExperimentKind::DecisionPhaseSweep, &[100.0], &[30.0], 8000);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for run in &sweep.report.runs {
        let mut run_worst: f64 = 0.0;
        for c in &run.clusters {
            for i in 0..2 {
                run_worst = run_worst.max(rel(c.iq_measured[i], c.iq_predicted[i]).abs());
            }
        }
        worst = worst.max(run_worst);
        parts.push(format!(
            "phase {:.1} deg: worst {:.1}%",
            run.decision_phase.to_degrees(),
            100.0 * run_worst
        ));
    }
    outcome(worst <= 0.15, format!("{} (limit 15%)", parts.join(", ")))
}

fn noise_law() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, level) in [(1.0, 1000.0), (0.5, 250.0)] {
        let expected = PhotocurrentTrace {
            values: vec![level; 1_000_000],
            k,
            kind: TraceKind::Expected,
        };
        let law = NoiseLaw::kk(k).unwrap();
        let noisy = sample_noisy_current(&expected, &law, NoiseStream::new(SEED, 0)).unwrap();
        let n = noisy.values.len() as f64;
        let mean = noisy.mean();
        let var = noisy.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let e = rel(var / mean, 2.0 * k);
        pass &= e.abs() <= 0.01;
        parts.push(format!(
            "k {k}: ratio {:.4} ({:+.2}%)",
            var / mean,
            100.0 * e
        ));
    }
    outcome(pass, format!("{} (limit 1%)", parts.join(", ")))
}

fn round_trip_error(grid: &SamplingGrid) -> (f64, f64, f64) {
    let law = NoiseLaw::noiseless(1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut offsets = Vec::new();
    for cspr in [5.0, 10.0, 15.0, 20.0, 30.0] {
        let params = SignalParams::new(100.0, cspr).unwrap();
        for symbol in ModulationSymbol::ALL {
            let r =
                simulate_symbol(&params, grid, symbol, &law, NoiseStream::new(SEED, 0)).unwrap();
            let alpha = map_qpsk(symbol.index(), 100.0).unwrap();
            worst = worst.max((r.alpha_prime - alpha).norm() / alpha.norm());
            offsets.push((r.alpha_prime / alpha).arg());
        }
    }
    let mean_offset = offsets.iter().sum::<f64>() / offsets.len() as f64;
    let max_offset = offsets.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    (worst, mean_offset, max_offset)
}

fn hilbert_oracle() -> Outcome {
    let (paper, paper_offset, paper_max) = round_trip_error(&SamplingGrid::paper());
    let (reduced, reduced_offset, reduced_max) = round_trip_error(&SamplingGrid::reduced());

    let grid = SamplingGrid::reduced();
    let law = NoiseLaw::kk(1.0).unwrap();
    let params = SignalParams::new(100.0, 10.0).unwrap();
    let frame =
        kkq_core::signal_model::synthesize_mp_envelope(&params, &grid, ModulationSymbol::ALL[2]);
    let expected = kkq_core::quantum_noise::expected_current(&frame, 1.0);
    let noisy = sample_noisy_current(&expected, &law, NoiseStream::new(SEED, 3)).unwrap();
    let base = hilbert_phase(&noisy, grid.decision_index).unwrap().phi;
    let mut scale_dev: f64 = 0.0;
    for c in [1e-6, 0.37, 3.0, 1e9] {
        let mut scaled = noisy.clone();
        scaled.values.iter_mut().for_each(|v| *v *= c);
        scale_dev =
            scale_dev.max((hilbert_phase(&scaled, grid.decision_index).unwrap().phi - base).abs());
    }

    outcome(
        paper <= 1e-3 && reduced <= 1e-2 && scale_dev < 1e-12,
        format!(
            "round trip paper {paper:.2e} (limit 1e-3), reduced {reduced:.2e} (limit 1e-2); \
             residual phase offset mean/max paper {paper_offset:.1e}/{paper_max:.2e} rad, \
             reduced {reduced_offset:.1e}/{reduced_max:.2e} rad; \
             scale invariance {scale_dev:.1e} (limit 1e-12)"
        ),
    )
}

fn heterodyne() -> Outcome {
    let limit = balanced_snr(&HeterodyneParams::new(100.0, 1e8, 1.0, 0.0).unwrap()).unwrap();
    let limit_err = rel(limit, 100.0).abs();
    let mut min_ratio = f64::INFINITY;
    let mut tested = 0;
    for n_s in [1.0, 20.0, 100.0, 200.0, 1e3, 1e4] {
        for factor in [10.0, 30.0, 100.0, 1e3, 1e6] {
            let p = HeterodyneParams::new(n_s, factor * n_s, 1.0, 0.0).unwrap();
            min_ratio = min_ratio.min(kk_snr_limit(n_s) / balanced_snr(&p).unwrap());
            tested += 1;
        }
    }
    outcome(
        limit_err <= 1e-5 && min_ratio >= 1.5,
        format!(
            "snr(100, 1e8) = {limit:.8} (rel {limit_err:.1e}, limit 1e-5); \
             min KK/heterodyne ratio {min_ratio:.4} over {tested} points (limit 1.5)"
        ),
    )
}

fn basel() -> Outcome {
    let s = basel_sum_check(1_000_000).unwrap();
    let err = (s - PI * PI / 6.0).abs();
    outcome(
        err <= 1e-6,
        format!("partial sum {s:.12}, error {err:.3e} (limit 1e-6)"),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut snapshots = Vec::new();
    let mut manifests = Vec::new();
    // Same output path every time: config.toml echoes it.
    let out = root.path().join("out");
    for threads in [1, 1, 3] {
        if out.exists() {
            fs::remove_dir_all(&out).unwrap();
        }
        let config = ExperimentConfig::resolve(ConfigFile {
            kind: Some(ExperimentKind::Table1Sweep),
            profile: Some(GridProfile::Reduced),
            n_s: Some(vec![20.0, 100.0]),
            symbols: Some(1000),
            seed: Some(SEED),
            out: Some(out.clone()),
            svg: Some(true),
            ..Default::default()
        })
        .unwrap();
        let outcome = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&config).unwrap());
        let manifest = write_outputs(&outcome, 0.0).unwrap();
        manifests.push(manifest.outputs);
        snapshots.push(snapshot(&out));
    }
    let reruns = snapshots[0] == snapshots[1] && manifests[0] == manifests[1];
    let threads = snapshots[0] == snapshots[2] && manifests[0] == manifests[2];
    outcome(
        reruns && threads,
        format!(
            "{} files; rerun identical: {reruns}; 1 vs 3 threads identical: {threads}",
            snapshots[0].len()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let table = experiment(
        ExperimentKind::Table1Sweep,
        &[20.0, 60.0, 100.0, 160.0, 200.0],
        &[10.0],
        2000,
    );
    let criteria: Vec<Criterion> = vec![
        ("1 snr law", Box::new(|| snr_law(&table))),
        ("2 ellipse ratio", Box::new(|| ellipse_ratio(&table))),
        ("3 radial/tangential split", Box::new(radial_tangential)),
        ("4 phase-controlled i/q noise", Box::new(iq_noise)),
        ("5 noise law", Box::new(noise_law)),
        ("6 hilbert oracle", Box::new(hilbert_oracle)),
        ("7 heterodyne baseline", Box::new(heterodyne)),
        ("8 basel convergence", Box::new(basel)),
        ("9 reproducibility", Box::new(reproducibility)),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed ({:.1} s)",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance suite: one pass/fail line per criterion.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use cars_infer::config::PipelineConfig;
use cars_infer::io::write_posterior;
use cars_infer::model::{
    cars_signal, gaussian, hilbert_transform, lorentzian, unit_voigt, HilbertBoundary,
};
use cars_infer::narrowing::{linspace, narrow, NarrowingConfig};
use cars_infer::pipeline::run_pipeline;
use cars_infer::priors::{LinePrior, LogNormalPrior, NormalPrior, PositiveNormalPrior, PriorSpec, UniformPrior};
use cars_infer::rng::{substream, SIMULATE};
use cars_infer::smc::{ess, next_kappa, residual_resample, ParticleEnsemble, Target};
use cars_infer::synthetic::simulate;
use cars_infer::wavelet::{dwt_multilevel, BoundaryMode, LevelInterpolation, Symlet};
use cars_infer::{ErrorFunctionEngine, ModelParams, VoigtLine, WavenumberGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Collects the individual checks of one criterion.
struct Report {
    name: &'static str,
    start: Instant,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Report {
    fn new(name: &'static str) -> Self {
        Self { name, start: Instant::now(), failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    /// Prints the verdict, bypassing the test harness capture, and fails the
    /// test if any check failed or the time budget was exceeded.
    fn finish(mut self, budget: Duration) {
        let elapsed = self.start.elapsed();
        self.check(elapsed <= budget, format!("runtime {:.1}s exceeds {}s", elapsed.as_secs_f64(), budget.as_secs()));
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let mut line = format!("[acceptance] {verdict} {} ({:.1}s)", self.name, elapsed.as_secs_f64());
        for n in &self.notes {
            line.push_str(&format!("\n[acceptance]     {n}"));
        }
        for f in &self.failures {
            line.push_str(&format!("\n[acceptance]     failed: {f}"));
        }
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        assert!(self.failures.is_empty(), "{}: {:?}", self.name, self.failures);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h)).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn analytic_oracles() {
    let mut r = Report::new("analytic oracles");
    r.check((unit_voigt(0.0, 0.0, 1.0) - 1.0 / PI).abs() < 1e-15, "Lorentzian peak 1/pi");
    r.check((unit_voigt(0.0, 1.0, 0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15, "Gaussian peak 1/sqrt(2 pi)");

    let mut worst = 0.0f64;
    for &(x, s, g) in &[(0.0, 1.0, 1.0), (1.5, 1.0, 1.0), (4.0, 2.0, 0.5), (-3.0, 0.7, 2.5)] {
        let quad = simpson(|t| gaussian(t, s) * lorentzian(x - t, g), -14.0 * s, 14.0 * s, 400_000);
        worst = worst.max(rel(unit_voigt(x, s, g), quad));
    }
    r.note(format!("Voigt vs quadrature convolution: {worst:.2e}"));
    r.check(worst <= 1e-6, "Voigt vs quadrature convolution <= 1e-6");

    let k = 4096;
    let grid = WavenumberGrid::new(-102.4, 0.05, k).unwrap();
    let central = k / 4..3 * k / 4;
    let l: Vec<f64> = (0..k).map(|i| lorentzian(grid.at(i), 1.0)).collect();
    let h = hilbert_transform(&l, HilbertBoundary::ZeroPadded).unwrap();
    let conj = |x: f64| x / (PI * (x * x + 1.0));
    let scale = central.clone().map(|i| conj(grid.at(i)).abs()).fold(0.0, f64::max);
    let err = central.clone().map(|i| (h[i] - conj(grid.at(i))).abs()).fold(0.0, f64::max) / scale;
    r.note(format!("Hilbert of Lorentzian: {err:.2e}"));
    r.check(err <= 1e-3, "Hilbert of Lorentzian <= 1e-3");

    let (a, gamma, nr) = (2.0, 1.0, 0.3);
    let s = cars_signal(&grid, &[VoigtLine::new(a, 0.0, 0.0, gamma).unwrap()], nr).unwrap();
    let err = central
        .map(|i| {
            let x = grid.at(i);
            let d = x * x + gamma * gamma;
            let re = (0.5 * nr).exp() - a / PI * x / d;
            let im = a / PI * gamma / d;
            rel(s[i], re * re + im * im)
        })
        .fold(0.0, f64::max);
    r.note(format!("single-Lorentzian CARS signal: {err:.2e}"));
    r.check(err <= 1e-3, "single-Lorentzian CARS signal <= 1e-3");
    r.finish(Duration::from_secs(10));
}

#[test]
fn wavelet_suite() {
    let mut r = Report::new("wavelet suite");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
    let energy = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    for order in [8, 34] {
        for mode in [BoundaryMode::Periodic, BoundaryMode::Symmetric] {
            let back = dwt_multilevel(&x, order, 8, mode).unwrap().reconstruct();
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            r.check(err <= 1e-10, format!("perfect reconstruction sym{order} {mode:?}: {err:.1e}"));
        }
        let dec = dwt_multilevel(&x, order, 8, BoundaryMode::Periodic).unwrap();
        let e = dec.approximation_energy() + dec.detail_energy();
        r.check(rel(e, energy(&x)) <= 1e-8, format!("Parseval sym{order}"));
        let h = Symlet::new(order).unwrap().lowpass().to_vec();
        r.check((energy(&h) - 1.0).abs() <= 1e-10, format!("sym{order} unit norm"));
        r.check((h.iter().sum::<f64>() - 2f64.sqrt()).abs() <= 1e-10, format!("sym{order} sum sqrt 2"));
    }

    let grid = WavenumberGrid::new(0.0, 1.0, 1024).unwrap();
    let log: Vec<f64> = (0..1024).map(|k| 0.3 * (k as f64 / 170.0).sin() + 0.05 * (k as f64 / 9.0).cos()).collect();
    let engine = ErrorFunctionEngine::from_log_signal(grid, &log, 34, 8, LevelInterpolation::Floor).unwrap();
    let mut jump = 0.0f64;
    for _ in 0..1000 {
        let p = rng.random_range(1.0..8.0 - 1e-6);
        let a = engine.modulating_error(p).unwrap();
        let b = engine.modulating_error(p + 1e-6).unwrap();
        jump = jump.max(a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
    }
    r.note(format!("largest change over dp = 1e-6 at 1000 points: {jump:.2e}"));
    r.check(jump < 1e-5, "eps_m continuity in p");
    for p in 1..=8 {
        let got = engine.log_modulation(p as f64).unwrap();
        let ok = (0..1024).all(|k| (got[k] - (p..=8).map(|j| engine.detail(j)[k]).sum::<f64>()).abs() <= 1e-12);
        r.check(ok, format!("integer p = {p} equals the sum of D_j, j >= p"));
    }
    r.finish(Duration::from_secs(10));
}

struct Quadratic;

impl Target for Quadratic {
    type Workspace = ();

    fn workspace(&self) -> cars_infer::Result<()> {
        Ok(())
    }

    fn log_likelihood(&self, _: &mut (), p: &ModelParams) -> cars_infer::Result<f64> {
        Ok(-0.5 * ((p.lines[0].location - 51.0) / 0.7).powi(2))
    }
}

#[test]
fn smc_unit_suite() {
    let mut r = Report::new("SMC unit suite");
    r.check(ess(&[0.1; 10]) == 10.0 || (ess(&[0.1; 10]) - 10.0).abs() < 1e-12, "ESS of uniform weights is Q");
    r.check(ess(&[0.0, 1.0, 0.0]) == 1.0, "ESS of a point mass is 1");
    r.check((ess(&[0.5, 0.25, 0.25]) - 8.0 / 3.0).abs() < 1e-12, "ESS (0.5, 0.25, 0.25) is 8/3");

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let idx = residual_resample(&[0.5, 0.3, 0.2], 10, &mut rng);
    let counts: Vec<usize> = (0..3).map(|k| idx.iter().filter(|&&i| i == k).count()).collect();
    r.check(counts == [5, 3, 2], format!("residual resampling counts {counts:?}"));
    let trials = 100_000;
    let copies: Vec<f64> = (0..trials)
        .map(|_| residual_resample(&[0.55, 0.45], 10, &mut rng).iter().filter(|&&i| i == 0).count() as f64)
        .collect();
    let mean = copies.iter().sum::<f64>() / trials as f64;
    let se = 0.5 / (trials as f64).sqrt();
    r.note(format!("mean copies of particle 0: {mean:.4} (expected 5.5, se {se:.4})"));
    r.check((mean - 5.5).abs() < 3.0 * se, "resampling expectation within 3 se");

    let spec = PriorSpec {
        lines: vec![LinePrior {
            location: NormalPrior { mean: 50.0, variance: 4.0 },
            amplitude: PositiveNormalPrior { mean: 2.0, sd: 0.5 },
        }],
        gamma: LogNormalPrior { log_mean: 1.0, log_variance: 0.2 },
        sigma: LogNormalPrior { log_mean: 0.5, log_variance: 0.2 },
        background: UniformPrior { min: 1.0, max: 6.0 },
    };
    let mut e = ParticleEnsemble::from_prior(&spec, &Quadratic, 200, 3).unwrap();
    let mut kappa_err = 0.0f64;
    while e.kappa < 1.0 {
        let lw = e.log_weights();
        let ll = e.log_likelihoods();
        let next = e.next_kappa(0.9);
        if next < 1.0 {
            // scalar bisection on ESS(kappa) = eta * ESS(current)
            let ess_at = |k: f64| {
                let w: Vec<f64> = lw.iter().zip(&ll).map(|(a, b)| (a + (k - e.kappa) * b).exp()).collect();
                let s: f64 = w.iter().sum();
                s * s / w.iter().map(|v| v * v).sum::<f64>()
            };
            let goal = 0.9 * ess_at(e.kappa);
            let (mut lo, mut hi) = (e.kappa, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ess_at(mid) > goal { lo = mid } else { hi = mid }
            }
            kappa_err = kappa_err.max((next - 0.5 * (lo + hi)).abs());
        }
        assert_eq!(next_kappa(&lw, &ll, e.kappa, 0.9), next);
        e.reweight(next - e.kappa).unwrap();
    }
    r.note(format!("kappa vs bisection oracle: {kappa_err:.2e}"));
    r.check(kappa_err <= 1e-8, "adaptive kappa within 1e-8 of bisection");
    let q = e.len() as f64;
    let tele = e
        .particles
        .iter()
        .map(|p| (p.log_weight + e.log_normalizer - (p.log_likelihood - q.ln())).abs())
        .fold(0.0, f64::max);
    r.note(format!("telescoped weights vs full likelihood: {tele:.2e}"));
    r.check(tele <= 1e-9, "telescoped weights equal the full likelihood");
    r.finish(Duration::from_secs(30));
}

fn quantile(mut v: Vec<f64>, p: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    cars_infer::smc::quantile_sorted(&v, p)
}

/// One seed of the synthetic recovery; returns (passed, summary).
fn recovery_seed(seed: u64) -> (bool, String) {
    let mut cfg = PipelineConfig::default();
    cfg.seed = seed;
    cfg.threads = Some(1);
    cfg.smc.particles = 500;
    cfg.smc.resample_threshold = 250;
    cfg.smc.n_moves = 50;
    let start = Instant::now();
    let sim = simulate(&cfg.synthetic, seed).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let out = match pool.install(|| run_pipeline(&cfg, sim.grid, &sim.values, Some(&sim.reference))) {
        Ok(o) => o,
        Err(e) => return (false, format!("seed {seed}: pipeline error {e}")),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let h = sim.grid.step();
    let draws = &out.summary.draws;
    let mut ok = elapsed < 600.0;
    let mut parts = vec![format!("seed {seed}: {elapsed:.0}s, {} lines, {} iterations", draws[0].n_lines(), out.summary.trace.len())];
    for truth in &sim.truth.params.lines {
        // the posterior line whose prior location is closest to the truth
        let idx = (0..out.priors.spec.n_lines())
            .min_by(|&a, &b| {
                let d = |i: usize| (out.priors.spec.lines[i].location.mean - truth.location).abs();
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        let loc: Vec<f64> = draws.iter().map(|d| d.lines[idx].location).collect();
        let amp: Vec<f64> = draws.iter().map(|d| d.lines[idx].amplitude).collect();
        let (lo, med, hi) = (quantile(loc.clone(), 0.025), quantile(loc.clone(), 0.5), quantile(loc, 0.975));
        let a_med = quantile(amp, 0.5);
        let inside = lo <= truth.location && truth.location <= hi;
        let near = (med - truth.location).abs() <= 2.0 * h;
        let amp_ok = rel(a_med, truth.amplitude) <= 0.15;
        ok &= inside && near && amp_ok;
        parts.push(format!(
            "line {:.0}: CI [{lo:.2}, {hi:.2}] {}, median {med:.2} {}, amplitude {a_med:.2} vs {} {}",
            truth.location,
            if inside { "ok" } else { "MISS" },
            if near { "ok" } else { "MISS" },
            truth.amplitude,
            if amp_ok { "ok" } else { "MISS" },
        ));
    }
    let replicate = sim.replicate(seed, 1).unwrap();
    let band = out.summary.band("y").unwrap();
    let coverage = band.coverage(&replicate, out.measured.active_range());
    let cov_ok = (0.88..=0.99).contains(&coverage);
    ok &= cov_ok;
    parts.push(format!("y-band coverage {:.3} {}", coverage, if cov_ok { "ok" } else { "MISS" }));
    (ok, parts.join("; "))
}

#[test]
fn end_to_end_synthetic_recovery() {
    let mut r = Report::new("end-to-end synthetic recovery");
    let mut passed = 0;
    for seed in 1..=3 {
        let (ok, summary) = recovery_seed(seed);
        passed += ok as usize;
        r.note(format!("{} {summary}", if ok { "pass" } else { "fail" }));
    }
    r.check(passed >= 2, format!("{passed} of 3 seeds passed"));
    r.finish(Duration::from_secs(3 * 600));
}

#[test]
fn line_narrowing_recovery() {
    let mut r = Report::new("line-narrowing recovery");
    let cfg = NarrowingConfig::default();
    r.check(cfg.candidate_count() == 4950, "33 x 150 candidates configured");
    let grid = WavenumberGrid::new(0.0, 1.0, 1024).unwrap();
    let gamma = 4.0;
    let lines = [(10.0, 300.0), (6.0, 500.0), (8.0, 660.0)];
    let clean: Vec<f64> = (0..1024)
        .map(|k| lines.iter().map(|(a, c)| a * lorentzian(grid.at(k) - c, gamma)).sum())
        .collect();
    let sd = clean.iter().cloned().fold(0.0, f64::max) / 100.0;
    let mut rng = substream(1, SIMULATE, 0, 0);
    let noise = Normal::new(0.0, sd).unwrap();
    let noisy: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
    let out = narrow(&noisy, &grid, &cfg).unwrap();
    r.check(out.n_evaluated == 4950, format!("{} candidates evaluated", out.n_evaluated));
    let n = &out.narrowed;
    for (_, c) in lines {
        let ci = c as usize;
        let win = ci - 12..ci + 13;
        let peak = win.clone().max_by(|&a, &b| n[a].total_cmp(&n[b])).unwrap();
        let half = 0.5 * n[peak];
        let mut left = peak as f64;
        for k in (1..=peak).rev() {
            if n[k - 1] < half {
                left = (k - 1) as f64 + (half - n[k - 1]) / (n[k] - n[k - 1]);
                break;
            }
        }
        let mut right = peak as f64;
        for k in peak..1023 {
            if n[k + 1] < half {
                right = k as f64 + (n[k] - half) / (n[k] - n[k + 1]);
                break;
            }
        }
        let fwhm = right - left;
        r.note(format!("line {c}: maximum at {peak}, FWHM {fwhm:.2} (input {})", 2.0 * gamma));
        r.check((peak as f64 - c).abs() <= 1.0, format!("maximum of line {c} within one channel"));
        r.check(fwhm <= 0.5 * 2.0 * gamma, format!("FWHM of line {c} at most half the input"));
    }
    let trap = |v: &[f64]| grid.step() * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]));
    let (a_in, a_rec) = (trap(&clean), trap(&out.reconstruction));
    r.note(format!("reconstruction area {a_rec:.4} vs input {a_in:.4}"));
    r.check(rel(a_rec, a_in) <= 0.05, "reconstruction area within 5%");
    r.finish(Duration::from_secs(120));
}

#[test]
fn configuration_fidelity() {
    let mut r = Report::new("configuration fidelity");
    for text in ["", "{}"] {
        let cfg = PipelineConfig::from_json(text).unwrap();
        r.check(cfg == PipelineConfig::default(), "empty config equals the defaults");
        r.check(cfg.smc.particles == 2000, "Q = 2000");
        r.check(cfg.smc.resample_threshold == 1000, "Q_min = 1000");
        r.check(cfg.smc.learning_rate == 0.9, "eta = 0.9");
        r.check(cfg.smc.n_moves == 200, "200 MCMC updates");
        r.check(cfg.smc.target_acceptance == 0.23, "acceptance target 0.23");
        let g = &cfg.narrowing.gamma_grid;
        r.check(g.len() == 33 && g[0] == 1.0 && g[32] == 35.0, "gamma grid [1, 35] with 33 points");
        r.check(*g == linspace(1.0, 35.0, 33), "gamma grid linearly spaced");
        r.check(g.windows(2).all(|w| ((w[1] - w[0]) - 34.0 / 32.0).abs() < 1e-12), "uniform gamma spacing");
        r.check(cfg.narrowing.max_fir == 150, "N_FIR up to 150");
        r.check(cfg.narrowing.extrapolation_len.is_none(), "extrapolation length equals the record length");
        r.check(cfg.narrowing.p_we == 0.5, "p_we = 50%");
        r.check(cfg.narrowing.p_fc == 0.025, "p_fc = 2.5%");
        r.check(cfg.narrowing.p_fc_step == 0.025, "p_fc increment 2.5%");
        r.check(cfg.narrowing.min_intersection == 50, "intersection size at least 50");
        r.check(cfg.model.wavelet_order == 34, "symlet 34 for the error function");
        r.check(cfg.narrowing.wavelet_order == 8, "symlet 8 for C_we");
    }
    r.finish(Duration::from_secs(5));
}

#[test]
fn determinism() {
    let mut r = Report::new("determinism");
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.seed = 11;
    cfg.smc.particles = 100;
    cfg.smc.resample_threshold = 50;
    cfg.smc.n_moves = 5;
    let sim = simulate(&cfg.synthetic, cfg.seed).unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let out = pool.install(|| run_pipeline(&cfg, sim.grid, &sim.values, Some(&sim.reference))).unwrap();
        let path = dir.path().join(format!("posterior_{run}.csv"));
        write_posterior(&path, &out.summary.draws).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    r.note(format!("{} bytes per posterior file", files[0].len()));
    r.check(files[0] == files[1], "posterior CSV files are bit-identical");
    r.finish(Duration::from_secs(300));
}

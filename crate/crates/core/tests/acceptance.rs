//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::time::Instant;

use lii_core::denoise::tv;
use lii_core::illum::srr_objective;
use lii_core::metrics::{loe, ssim};
use lii_core::rng::SplitMix64;
use lii_core::synth::{scene, textured_scene};
use lii_core::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn random_image(rng: &mut SplitMix64, h: usize, w: usize, c: usize, lo: f64, hi: f64) -> ImageF {
    ImageF::from_fn(h, w, c, |_, _, _| lo + (hi - lo) * rng.next_open01()).unwrap()
}

fn row(rows: &[ValidationRow], sigma_255: f64, order: usize) -> f64 {
    rows.iter()
        .find(|r| (r.sigma_ref - sigma_255).abs() < 1e-9 && r.order == order)
        .map(|r| r.mean_rel_error)
        .expect("row present")
}

fn dark_corpus() -> Vec<ImageF> {
    (0..10)
        .map(|i| degrade(&scene(100 + i, 160, 200), &DegradeSettings::default()).unwrap())
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let sigmas = [20.0, 30.0, 40.0];
    let plan = ValidationPlan {
        sigmas: sigmas.iter().map(|s| s / 255.0).collect(),
        orders: vec![1],
        trials: 100,
        seed: 1,
        clamp: false,
    };
    let rows = validate_estimator(&plan, &dark_corpus()).unwrap();
    let dark: Vec<f64> = sigmas.iter().map(|&s| row(&rows, s, 1)).collect();

    let flat = vec![ImageF::filled(512, 512, 1, 0.0)];
    let plan = ValidationPlan {
        sigmas: vec![20.0 / 255.0],
        orders: vec![1, 2, 3],
        trials: 30,
        seed: 2,
        clamp: false,
    };
    let rows = validate_estimator(&plan, &flat).unwrap();
    let pure: Vec<f64> = [1, 2, 3].iter().map(|&n| row(&rows, 20.0, n)).collect();
    let secs = start.elapsed().as_secs_f64();

    let pass = dark.iter().all(|&e| e <= 0.05) && pure.iter().all(|&e| e <= 0.02) && secs < 120.0;
    outcome(
        pass,
        format!(
            "dark n=1 err {:.4}/{:.4}/{:.4} (<= 0.05); pure noise n=1..3 err {:.4}/{:.4}/{:.4} (<= 0.02); {:.1}s",
            dark[0], dark[1], dark[2], pure[0], pure[1], pure[2], secs
        ),
    )
}

fn criterion_2() -> Outcome {
    let corpus: Vec<ImageF> = (0..10).map(|i| textured_scene(i, 128, 128)).collect();
    let plan = ValidationPlan {
        sigmas: vec![5.0 / 255.0, 40.0 / 255.0],
        orders: vec![1, 2, 3],
        trials: 50,
        seed: 3,
        clamp: false,
    };
    let rows = validate_estimator(&plan, &corpus).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let (lo, hi) = (row(&rows, 5.0, n), row(&rows, 40.0, n));
        pass &= hi < lo;
        parts.push(format!("n={n} {lo:.4}->{hi:.4}"));
    }
    let (n1, n3) = (row(&rows, 40.0, 1), row(&rows, 40.0, 3));
    pass &= n3 <= n1;
    outcome(
        pass,
        format!(
            "sigma 5->40: {}; at 40: n=3 {n3:.4} <= n=1 {n1:.4}",
            parts.join(", ")
        ),
    )
}

fn criterion_3() -> Outcome {
    let pair = (
        1usize..6,
        1usize..6,
        prop_oneof![Just(1usize), Just(3usize)],
    )
        .prop_flat_map(|(h, w, c)| {
            let n = h * w * c;
            (
                Just((h, w, c)),
                proptest::collection::vec(prop_oneof![0.0..=1.0f64, Just(0.0), Just(1.0)], n),
                proptest::collection::vec(prop_oneof![0.0..=1.0f64, Just(0.0), Just(1.0)], n),
            )
        });
    let result = runner(1000).run(&pair, |((h, w, c), u, a)| {
        let u = ImageF::new(h, w, c, u).unwrap();
        let alpha = ImageF::new(h, w, c, a).unwrap();
        let r = interpolate_with_alpha(&u, &alpha, 1e-4).unwrap();
        for i in 0..u.len() {
            let (uv, yv, sv, av) = (u.data()[i], r.y.data()[i], r.s.data()[i], r.alpha.data()[i]);
            let beta = 1.0 - av;
            prop_assert!(av + beta == 1.0);
            prop_assert!(uv <= yv + 1e-9 && yv <= 1.0 + 1e-9, "u {uv} y {yv}");
            prop_assert!(uv <= sv + 1e-9 && sv <= 1.0 + 1e-9, "u {uv} s {sv}");
            prop_assert!((yv - (uv * av + beta)).abs() <= 1e-15);
        }
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, "1000 random (u, alpha) pairs".into()),
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn criterion_4() -> Outcome {
    let constants = SrrConstants::default();
    let mut rng = SplitMix64::new(4);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for problem in 0..50 {
        let grid = 2 + problem % 3;
        // Alternate bright and dark inputs so both sides of the band are exercised
        // and the gradient is non-zero.
        let (u, lo, hi) = if problem % 2 == 0 {
            (random_image(&mut rng, 8, 8, 3, 0.55, 0.95), -2.0, 2.0)
        } else {
            (random_image(&mut rng, 8, 8, 3, 0.005, 0.03), -2.0, 1.0)
        };
        let params: Vec<f64> = (0..grid * grid * 3)
            .map(|_| lo + (hi - lo) * rng.next_open01())
            .collect();
        let field = InterpolationField::new(params.clone(), grid, 3, 8, 8).unwrap();
        let (_, analytic) = srr_objective(&u, &field, &constants, 1.0, 1e-4).unwrap();

        let numeric: Vec<f64> = (0..params.len())
            .map(|j| {
                let at = |delta: f64| {
                    let mut p = params.clone();
                    p[j] += delta;
                    let f = field.with_params(p).unwrap();
                    srr_objective(&u, &f, &constants, 1.0, 1e-4).unwrap().0
                };
                (at(h) - at(-h)) / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let scale = norm(&analytic).max(norm(&numeric));
        assert!(scale > 0.0, "problem {problem} has a zero gradient");
        worst = worst.max(norm(&diff) / scale);
    }
    outcome(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over 50 problems (< 1e-4)"),
    )
}

fn criterion_5() -> Outcome {
    let constants = SrrConstants::default();
    let config = PipelineConfig::default();
    let mut pass = true;
    let mut worst_offset = f64::NEG_INFINITY;
    let mut loss_ok = 0;
    for i in 0..10 {
        let x = degrade(&scene(300 + i, 128, 128), &DegradeSettings::default()).unwrap();
        let out = enhance(&x, &config).unwrap();
        let means = channel_mean(&out.s);
        for (k, m) in means.iter().enumerate() {
            let off = (m - constants.eta1[k]).abs() - constants.eta2[k];
            worst_offset = worst_offset.max(off);
            pass &= off <= 0.02;
        }
        let init = mean_interpolate(&out.u, config.epsilon_div);
        let final_loss = srr_loss(&out.s, &constants).unwrap();
        let init_loss = srr_loss(&init.s, &constants).unwrap();
        if final_loss <= init_loss {
            loss_ok += 1;
        } else {
            pass = false;
        }
    }
    outcome(
        pass,
        format!(
            "max |mean - eta1| - eta2 over channels {worst_offset:.4} (<= 0.02); final <= init loss on {loss_ok}/10"
        ),
    )
}

fn criterion_6() -> Outcome {
    let settings = DenoiseSettings::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, clean) in [
        ("flat", ImageF::filled(64, 64, 3, 0.5)),
        ("scene", scene(6, 128, 128)),
    ] {
        let noisy = add_gaussian_noise(&clean, 25.0 / 255.0, 66, true).unwrap();
        let est = estimate_sigma(&noisy, 1).unwrap();
        let d = denoise(&noisy, &est, &NoiseGate::default(), &settings).unwrap();
        let gain = psnr(&d.u, &clean).unwrap() - psnr(&noisy, &clean).unwrap();
        let monotone = d.energy_trace.windows(2).all(|w| w[1] <= w[0]);
        pass &= d.applied && gain >= 3.0 && monotone;
        parts.push(format!("{name} gain {gain:.2} dB, monotone {monotone}"));

        let closed = NoiseGate::new(1.0).unwrap();
        let p = denoise(&noisy, &est, &closed, &settings).unwrap();
        let exact = !p.applied
            && p.u
                .data()
                .iter()
                .zip(noisy.data())
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && p.v.data().iter().all(|v| v.to_bits() == 0);
        pass &= exact;
        parts.push(format!("passthrough bit-exact {exact}"));
    }
    outcome(pass, parts.join("; "))
}

fn stability_ratio(seed: u64, gamma: f64, perturb_seed: u64) -> f64 {
    let config = PipelineConfig::default();
    let x = degrade(
        &scene(seed, 48, 48),
        &DegradeSettings {
            gamma,
            ..Default::default()
        },
    )
    .unwrap();
    let x2 = add_gaussian_noise(&x, 2.0 / 255.0, perturb_seed, true).unwrap();
    let a = enhance(&x, &config).unwrap();
    let b = enhance(&x2, &config).unwrap();
    mse(&a.s, &b.s).unwrap() / mse(&x, &x2).unwrap()
}

fn criterion_7() -> Outcome {
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner(32).run(
        &(0u64..10_000, 0.0..=0.5f64, any::<u64>()),
        |(seed, gamma, perturb)| {
            let ratio = stability_ratio(seed, gamma, perturb);
            worst.set(worst.get().max(ratio));
            if ratio <= 10.0 {
                Ok(())
            } else {
                Err(TestCaseError::fail(format!(
                    "ratio {ratio} at gamma {gamma}"
                )))
            }
        },
    );
    // Reported for reference only: at gamma = 1 the input mean is ~0.035 and the
    // enhancement gain alone exceeds the bound.
    let dark = (0..4)
        .map(|i| stability_ratio(500 + i, 1.0, i))
        .fold(0.0, f64::max);
    match result {
        Ok(()) => outcome(
            true,
            format!("gamma in [0, 0.5]: max ratio {:.2} (<= 10); gamma = 1 ratio {dark:.1} (not bounded, see README)", worst.get()),
        ),
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn tv_oracle(img: &ImageF, eps: f64) -> f64 {
    let (h, w, ch) = img.shape();
    let mut total = 0.0;
    for k in 0..ch {
        for r in 0..h {
            for c in 0..w {
                let here = img.get(r, c, k);
                let right = if c + 1 < w {
                    img.get(r, c + 1, k)
                } else {
                    here
                };
                let below = if r + 1 < h {
                    img.get(r + 1, c, k)
                } else {
                    here
                };
                let (dx, dy) = (right - here, below - here);
                total += (dx.powi(2) + dy.powi(2) + eps.powi(2)).sqrt() - eps;
            }
        }
    }
    total
}

fn ssim_oracle(a: &ImageF, b: &ImageF) -> f64 {
    let (h, w, ch) = a.shape();
    let g: Vec<f64> = (0..11)
        .map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp())
        .collect();
    let gs: f64 = g.iter().sum();
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut per_channel = 0.0;
    for k in 0..ch {
        let mut sum = 0.0;
        let mut count = 0;
        for r0 in 0..=h - 11 {
            for c0 in 0..=w - 11 {
                let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let wt = g[i] * g[j] / (gs * gs);
                        let (x, y) = (a.get(r0 + i, c0 + j, k), b.get(r0 + i, c0 + j, k));
                        ma += wt * x;
                        mb += wt * y;
                        aa += wt * x * x;
                        bb += wt * y * y;
                        ab += wt * x * y;
                    }
                }
                let (va, vb, cov) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
                sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        per_channel += sum / count as f64;
    }
    per_channel / ch as f64
}

fn loe_oracle(a: &ImageF, b: &ImageF) -> f64 {
    let light = |img: &ImageF| -> Vec<f64> {
        (0..img.height())
            .flat_map(|r| (0..img.width()).map(move |c| (r, c)))
            .map(|(r, c)| {
                (0..img.channels())
                    .map(|k| img.get(r, c, k))
                    .fold(f64::MIN, f64::max)
            })
            .collect()
    };
    let (l, le) = (light(a), light(b));
    let n = l.len();
    let mut disagreements = 0usize;
    for p in 0..n {
        for q in 0..n {
            if (l[p] >= l[q]) != (le[p] >= le[q]) {
                disagreements += 1;
            }
        }
    }
    disagreements as f64 / n as f64
}

fn criterion_8() -> Outcome {
    let mut rng = SplitMix64::new(8);
    let (mut tv_err, mut ssim_err) = (0.0f64, 0.0f64);
    let mut loe_exact = true;
    for t in 0..20u64 {
        let dims =
            |rng: &mut SplitMix64, lo: usize, span: usize| lo + (rng.next_u64() as usize % span);
        let (h, w) = (dims(&mut rng, 1, 9), dims(&mut rng, 1, 9));
        let c = if t % 2 == 0 { 1 } else { 3 };
        let img = random_image(&mut rng, h, w, c, 0.0, 1.0);
        let eps = [0.0, 1e-3, 0.1][t as usize % 3];
        let want = tv_oracle(&img, eps);
        tv_err = tv_err.max((tv(&img, eps) - want).abs() / want.abs().max(1.0));

        let (h, w) = (dims(&mut rng, 11, 10), dims(&mut rng, 11, 10));
        let a = random_image(&mut rng, h, w, c, 0.0, 1.0);
        let b = a.map(|v| (0.7 * v + 0.1 + 0.2 * (v * 37.0).sin()).clamp(0.0, 1.0));
        ssim_err = ssim_err.max((ssim(&a, &b).unwrap() - ssim_oracle(&a, &b)).abs());

        // Quantised values so ties are common.
        let (h, w) = (dims(&mut rng, 1, 30), dims(&mut rng, 1, 30));
        let q = |rng: &mut SplitMix64| {
            ImageF::from_fn(h, w, c, |_, _, _| (rng.next_u64() % 6) as f64 / 5.0).unwrap()
        };
        let (a, b) = (q(&mut rng), q(&mut rng));
        loe_exact &= loe(&a, &b).unwrap() == loe_oracle(&a, &b);
    }
    let pass = tv_err <= 1e-12 && ssim_err <= 1e-8 && loe_exact;
    outcome(
        pass,
        format!("tv rel err {tv_err:.1e} (<= 1e-12); ssim abs err {ssim_err:.1e} (<= 1e-8); loe exact {loe_exact}"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("noise estimator accuracy", criterion_1),
        ("noise estimator trend", criterion_2),
        ("dynamic-range invariants", criterion_3),
        ("srr gradient vs finite differences", criterion_4),
        ("brightness-band recovery", criterion_5),
        ("denoiser efficacy", criterion_6),
        ("robustness to small perturbations", criterion_7),
        ("oracle equivalence of tv, ssim, loe", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[criterion {}] {tag} {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "[criterion 9] EXCLUDED dataset-level benchmark scores need trained networks and full datasets; not reproducible here"
    );
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

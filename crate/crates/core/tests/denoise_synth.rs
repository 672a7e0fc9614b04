use lii_core::image::global_mean;
use lii_core::synth::scene;
use lii_core::*;
use proptest::prelude::*;

fn noisy_scene(seed: u64, sigma: f64) -> ImageF {
    add_gaussian_noise(&scene(seed, 32, 32), sigma, seed, true).unwrap()
}

#[test]
fn tv_examples() {
    assert_eq!(tv(&ImageF::filled(5, 4, 3, 0.3), 1e-3), 0.0);
    let img = ImageF::new(2, 2, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    assert!((tv(&img, 1e-9) - 2.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(16) })]

    #[test]
    fn denoising_contracts_tv_and_is_deterministic(seed in 0u64..1000, sigma in 0.03..0.15f64) {
        let x = noisy_scene(seed, sigma);
        let est = estimate_sigma(&x, 1).unwrap();
        let settings = DenoiseSettings { max_iters: 40, ..DenoiseSettings::default() };
        let a = denoise(&x, &est, &NoiseGate::default(), &settings).unwrap();
        prop_assert!(a.applied);
        prop_assert!(a.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(tv(&a.u, settings.tv_epsilon) <= tv(&x, settings.tv_epsilon) + 1e-9);
        let b = denoise(&x, &est, &NoiseGate::default(), &settings).unwrap();
        prop_assert_eq!(&a, &b);
        for ((u, v), x) in a.u.data().iter().zip(a.v.data()).zip(x.data()) {
            prop_assert!((u + v - x).abs() <= 1e-15);
        }
    }

    #[test]
    fn closed_gate_is_identity(seed in 0u64..1000) {
        let x = noisy_scene(seed, 0.05);
        let est = estimate_sigma(&x, 1).unwrap();
        let gate = NoiseGate::new(est.aggregate_sigma).unwrap();
        let d = denoise(&x, &est, &gate, &DenoiseSettings::default()).unwrap();
        prop_assert!(!d.applied);
        prop_assert_eq!(d.u, x);
        prop_assert!(d.v.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degrade_darkens_monotonically(seed in 0u64..1000, gamma in 0.5..3.0f64) {
        let s = scene(seed, 16, 16);
        let x = degrade(&s, &DegradeSettings { gamma, ..Default::default() }).unwrap();
        prop_assert!(global_mean(&x) < global_mean(&s));
        let mut pairs: Vec<(f64, f64)> = s.data().iter().copied().zip(x.data().iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn noisy_degrade_is_seeded(seed in any::<u64>()) {
        let s = scene(1, 12, 12);
        let settings = DegradeSettings { gamma: 1.0, noise_sigma: 0.02, seed };
        prop_assert_eq!(degrade(&s, &settings).unwrap(), degrade(&s, &settings).unwrap());
    }
}

#[test]
fn weak_gamma_can_brighten() {
    // Below gamma = 0.5 the power map lifts mid-tones more than the scale factor darkens.
    let s = ImageF::filled(4, 4, 3, 0.3);
    let x = degrade(
        &s,
        &DegradeSettings {
            gamma: 0.05,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(global_mean(&x) > global_mean(&s));
}

#[test]
fn enhance_examples() {
    let white = ImageF::filled(8, 8, 3, 1.0);
    let out = enhance(&white, &PipelineConfig::default()).unwrap();
    assert!(!out.denoised);
    assert!(out.v.data().iter().all(|&v| v == 0.0));
    assert!(out.y.data().iter().all(|&v| v == 1.0));
    assert!(out.s.data().iter().all(|&v| v == 1.0));

    let cfg = PipelineConfig {
        variant: Variant::Mean,
        ..PipelineConfig::default()
    };
    let out = enhance(&ImageF::filled(8, 8, 1, 0.25), &cfg).unwrap();
    assert_eq!(out.s.channels(), 3);
    assert!(out.s.data().iter().all(|&v| (v - 0.571428).abs() < 1e-6));
}

#[test]
fn noisy_input_triggers_denoising_in_pipeline() {
    let x = add_gaussian_noise(&scene(8, 48, 48).map(|v| 0.3 * v), 20.0 / 255.0, 1, true).unwrap();
    let out = enhance(&x, &PipelineConfig::default()).unwrap();
    assert!(out.denoised);
    assert!(!out.energy_trace.is_empty());
    let clean = enhance_with(
        &x,
        &PipelineConfig::default(),
        EnhanceOptions { denoise: false },
    )
    .unwrap();
    assert!(!clean.denoised);
    assert_eq!(clean.u, x);
}

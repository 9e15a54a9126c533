use eqws_core::rng::seeded;
use eqws_core::synth::{apodize, make_arc, make_disc, make_rod, rotate};
use eqws_core::{ArcSpec, DiscSpec, Fill, ImageField, Interpolation, RodSpec};
use proptest::prelude::*;
use rand::Rng;

fn noise(side: usize, seed: u64) -> ImageField {
    let mut rng = seeded(seed);
    ImageField::from_fn(side, |_, _| rng.gen::<f64>()).unwrap()
}

fn interpolation() -> impl Strategy<Value = Interpolation> {
    prop::sample::select(vec![
        Interpolation::Bilinear,
        Interpolation::Bicubic,
        Interpolation::Lanczos3,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn four_quarter_turns_are_the_identity(seed in any::<u64>(), k in 3u32..7, m in interpolation()) {
        let img = noise(1 << k, seed);
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate(&r, 90.0, m).unwrap();
        }
        prop_assert_eq!(r, img);
    }

    #[test]
    fn rods_are_deterministic_and_non_negative(
        sigma in 0.0f64..360.0, delta in 0.0f64..360.0, arm in 0.0f64..30.0, fwhm in 0.5f64..8.0
    ) {
        let spec = RodSpec { sigma_angle: sigma, opening_angle: delta, arm_length: arm, fwhm, side: 64 };
        let a = make_rod(&spec).unwrap();
        prop_assert_eq!(&a, &make_rod(&spec).unwrap());
        prop_assert!(a.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn arcs_are_deterministic_and_non_negative(
        f_bend in 0.01f64..=1.0, sigma in 0.0f64..360.0, length in 1.0f64..60.0, fwhm in 0.5f64..8.0
    ) {
        let spec = ArcSpec { f_bend, sigma_angle: sigma, rod_length: length, fwhm, side: 64 };
        let a = make_arc(&spec).unwrap();
        prop_assert_eq!(&a, &make_arc(&spec).unwrap());
        prop_assert!(a.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn discs_are_deterministic_and_non_negative(radius in 0.1f64..40.0, fwhm in 0.1f64..20.0) {
        let spec = DiscSpec { radius, fwhm, side: 64 };
        let a = make_disc(&spec).unwrap();
        prop_assert_eq!(&a, &make_disc(&spec).unwrap());
        prop_assert!(a.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn hard_crop_is_idempotent(seed in any::<u64>(), k in 3u32..7) {
        let once = apodize(&noise(1 << k, seed), 0.0, Fill::Zero).unwrap();
        prop_assert_eq!(&apodize(&once, 0.0, Fill::Zero).unwrap(), &once);
    }
}

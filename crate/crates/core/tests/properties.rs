use proptest::prelude::*;

use kdtli::alignment::{self, AlignmentState};
use kdtli::coefficients::Motion;
use kdtli::constants::{NM, UM};
use kdtli::pattern::{self, VelocityDistribution};
use kdtli::physics::{presets, MaterialGrating};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strong_gratings_stay_finite(power in 1e-3f64..1e4, v in 20.0f64..1000.0, waist_um in 50.0f64..2000.0) {
        let ifm = presets::interferometer(power).with_waist_y(waist_um * UM);
        for mol in [presets::c60(), presets::c70()] {
            let p = ifm.interaction(&mol, v).unwrap();
            prop_assert!(p.phi0.is_finite() && p.n0.is_finite() && p.xi.is_finite());
            for motion in [Motion::Quantum, Motion::Classical] {
                let vis = pattern::visibility(motion, p.xi, p.phi0, p.n0, 0.42, 0.42);
                prop_assert!(vis.is_finite() && (0.0..=1.0).contains(&vis), "{motion:?} {p:?} -> {vis}");
            }
        }
    }

    #[test]
    fn roll_factor_peaks_only_when_aligned(a1 in -2e-3f64..2e-3, a3 in -2e-3f64..2e-3) {
        let ifm = presets::interferometer(1.0);
        let s = AlignmentState { roll_g1: a1, roll_g3: a3, ..AlignmentState::nominal(&ifm) };
        let f = alignment::roll_visibility_factor(&s, &ifm);
        let (e1, e3) = alignment::effective_roll_angles(&s, &ifm);
        prop_assert!(f <= 1.0);
        if e1 != 0.0 || e3 != 0.0 {
            prop_assert!(f < 1.0);
        }
    }

    #[test]
    fn limits_grow_with_their_tolerance(t in 1e-6f64..1e-2, scale in 1.01f64..10.0) {
        prop_assert!(alignment::roll_period_limit(t * scale).unwrap() > alignment::roll_period_limit(t).unwrap());
        let d = 266.0 * NM;
        let g = MaterialGrating::new(d, 0.42, 190.0 * NM).unwrap();
        let frac = t * 100.0;
        prop_assert!(
            alignment::yaw_limits(&g, frac * scale).unwrap().open_fraction
                > alignment::yaw_limits(&g, frac).unwrap().open_fraction
        );
        prop_assert!(
            alignment::g2_incidence_limit(d, 20.0 * UM, frac * scale).unwrap()
                > alignment::g2_incidence_limit(d, 20.0 * UM, frac).unwrap()
        );
        // fewer slits, looser balance; lower beam, looser pitch
        let n = (4000.0 / scale) as u32;
        prop_assert!(alignment::length_balance_limit(0.105, n).unwrap() >= alignment::length_balance_limit(0.105, 4000).unwrap());
        prop_assert!(alignment::pitch_limit(100.0 * UM / scale, 0.105, 4000).unwrap() > alignment::pitch_limit(100.0 * UM, 0.105, 4000).unwrap());
    }
}

#[test]
fn averaged_visibility_finite_at_extreme_power() {
    let ifm = presets::interferometer(1.0);
    let dist = VelocityDistribution::new(presets::C60_MEAN_VELOCITY, presets::C60_REL_FWHM).unwrap();
    for power in [1e3, 1e4] {
        for motion in [Motion::Quantum, Motion::Classical] {
            let v = pattern::velocity_averaged_visibility(&dist, &presets::c60(), &ifm, power, motion).unwrap();
            assert!(v.is_finite() && (0.0..=1.0).contains(&v), "{power} {motion:?}: {v}");
        }
    }
}

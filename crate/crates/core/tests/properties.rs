use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vlp_core::calibration::{calibrate_dispersion, fit_circle, DispersionMode, FixSample};
use vlp_core::error::PositioningError;
use vlp_core::positioning::{locate_two, trilaterate_three, wrap_angle, HeightMode};
use vlp_core::simulator::{
    even_angles, observe_with, project, reference_beacons, rotation_sweep, CameraPose, NoiseModel,
    SceneConfig,
};
use vlp_core::{BeaconSet, Detection, LedBeacon, PixelPoint, WorldPoint};

fn scene_at(x: f64, y: f64, z: f64, yaw: f64) -> SceneConfig {
    SceneConfig::noiseless(reference_beacons(), CameraPose::new(x, y, z, yaw))
}

fn in_frame(scene: &SceneConfig) -> bool {
    scene.beacons.iter().all(|b| project(b, scene).unwrap().1)
}

fn pair_of(dets: &[Detection]) -> Vec<Detection> {
    dets.iter().filter(|d| d.beacon_id != 2).copied().collect()
}

fn noisy(scene: &SceneConfig, seed: u64) -> Vec<Detection> {
    let mut s = scene.clone();
    s.noise = NoiseModel {
        pixel_sigma: 0.5,
        quantize: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    observe_with(&s, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn noiseless_fixes_are_exact(x in -30.0f64..30.0, y in -30.0f64..30.0, z in 0.0f64..30.0, yaw in -PI..PI) {
        let scene = scene_at(x, y, z, yaw);
        prop_assume!(in_frame(&scene));
        let dets = scene.project_all().unwrap();
        let k = &scene.intrinsics;
        let two = locate_two(&pair_of(&dets), &scene.beacons, k).unwrap();
        prop_assert!(two.position.distance(&scene.camera.position) < 1e-6);
        prop_assert!(wrap_angle(two.diagnostics.theta.unwrap() - yaw).abs() < 1e-9);
        let three = trilaterate_three(&dets, &scene.beacons, k, HeightMode::AllPairs).unwrap();
        prop_assert!(three.position.distance(&scene.camera.position) < 1e-6);
    }

    #[test]
    fn translation_equivariance(
        x in -30.0f64..30.0, y in -30.0f64..30.0, yaw in -PI..PI,
        tx in -500.0f64..500.0, ty in -500.0f64..500.0, tz in -200.0f64..200.0,
        seed in any::<u64>(),
    ) {
        let scene = scene_at(x, y, 0.0, yaw);
        prop_assume!(in_frame(&scene));
        let dets = noisy(&scene, seed);
        prop_assume!(dets.len() == 3);
        let moved = scene.beacons.translated(tx, ty, tz);
        let k = &scene.intrinsics;
        let shift = |a: WorldPoint, b: WorldPoint| {
            (b.x - a.x - tx).abs().max((b.y - a.y - ty).abs()).max((b.z - a.z - tz).abs())
        };
        let a = locate_two(&pair_of(&dets), &scene.beacons, k).unwrap();
        let b = locate_two(&pair_of(&dets), &moved, k).unwrap();
        prop_assert!(shift(a.position, b.position) < 1e-9);
        let a = trilaterate_three(&dets, &scene.beacons, k, HeightMode::AllPairs).unwrap();
        let b = trilaterate_three(&dets, &moved, k, HeightMode::AllPairs).unwrap();
        prop_assert!(shift(a.position, b.position) < 1e-9);
    }

    #[test]
    fn three_led_ignores_yaw(x in -25.0f64..25.0, y in -25.0f64..25.0, yaw in -PI..PI, psi in -PI..PI, seed in any::<u64>()) {
        let scene = scene_at(x, y, 0.0, yaw);
        prop_assume!(in_frame(&scene));
        let k = &scene.intrinsics;
        let exact = trilaterate_three(&scene.project_all().unwrap(), &scene.beacons, k, HeightMode::AllPairs).unwrap();
        let level = trilaterate_three(&scene.with_camera(CameraPose::new(x, y, 0.0, 0.0)).project_all().unwrap(), &scene.beacons, k, HeightMode::AllPairs).unwrap();
        prop_assert!(exact.position.distance(&level.position) < 1e-6);

        // Noisy detections spun about the principal point give the same fix.
        let dets = noisy(&scene, seed);
        prop_assume!(dets.len() == 3);
        let c = k.principal_point();
        let (s, co) = psi.sin_cos();
        let spun: Vec<Detection> = dets.iter().map(|d| {
            let (du, dv) = (d.pixel.u - c.u, d.pixel.v - c.v);
            Detection::new(d.beacon_id, c.u + co * du - s * dv, c.v + s * du + co * dv)
        }).collect();
        let a = trilaterate_three(&dets, &scene.beacons, k, HeightMode::AllPairs).unwrap();
        let b = trilaterate_three(&spun, &scene.beacons, k, HeightMode::AllPairs).unwrap();
        prop_assert!(a.position.distance(&b.position) < 1e-6);
    }

    #[test]
    fn z_is_led_height_minus_h(x in -30.0f64..30.0, y in -30.0f64..30.0, z in 0.0f64..30.0, yaw in -PI..PI, seed in any::<u64>(), first_pair in any::<bool>()) {
        let scene = scene_at(x, y, z, yaw);
        prop_assume!(in_frame(&scene));
        let dets = noisy(&scene, seed);
        prop_assume!(dets.len() == 3);
        let mode = if first_pair { HeightMode::FirstPair } else { HeightMode::AllPairs };
        let k = &scene.intrinsics;
        for fix in [
            locate_two(&pair_of(&dets), &scene.beacons, k).unwrap(),
            trilaterate_three(&dets, &scene.beacons, k, mode).unwrap(),
        ] {
            prop_assert_eq!(fix.position.z, fix.diagnostics.led_z - fix.diagnostics.height);
            prop_assert!(fix.diagnostics.height > 0.0);
            prop_assert!(fix.diagnostics.world_radii.iter().all(|&(_, r)| r >= 0.0));
        }
    }

    #[test]
    fn collinear_beacons_are_singular(x0 in -60.0f64..60.0, y0 in -60.0f64..60.0, phi in 0.0..PI, t1 in 3.0f64..50.0, t2 in -50.0f64..-3.0) {
        let at = |t: f64| (x0 + t * phi.cos(), y0 + t * phi.sin());
        let beacons = BeaconSet::new([0.0, t1, t2].iter().enumerate().map(|(i, &t)| {
            let (x, y) = at(t);
            LedBeacon::new(i as u32 + 1, x, y, 150.0)
        })).unwrap();
        let scene = SceneConfig::noiseless(beacons, CameraPose::new(x0 + 1.0, y0 + 1.0, 0.0, 0.0));
        let r = trilaterate_three(&scene.project_all().unwrap(), &scene.beacons, &scene.intrinsics, HeightMode::AllPairs);
        prop_assert!(matches!(r, Err(PositioningError::SingularGeometry { .. })), "{:?}", r);
    }

    #[test]
    fn sweep_tracks_are_concentric(du in -20.0f64..20.0, dv in -20.0f64..20.0, nu in 380.0f64..420.0, nv in 280.0f64..320.0, x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let mut scene = scene_at(x, y, 0.0, 0.0);
        scene.intrinsics = scene.intrinsics.with_principal_point(PixelPoint::new(nu, nv)).unwrap();
        scene.true_principal_point = PixelPoint::new(400.0 + du, 300.0 + dv);
        for track in rotation_sweep(&scene, &even_angles(12)).unwrap() {
            if let Ok(fit) = fit_circle(&track.points) {
                prop_assert!(fit.center.distance(&scene.true_principal_point) < 1e-6);
            }
        }
    }

    #[test]
    fn quantization_moves_at_most_half_a_pixel(x in -30.0f64..30.0, y in -30.0f64..30.0, seed in any::<u64>()) {
        let mut scene = scene_at(x, y, 0.0, 0.0);
        scene.noise = NoiseModel { pixel_sigma: 0.5, quantize: false };
        let plain = observe_with(&scene, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        scene.noise.quantize = true;
        let rounded = observe_with(&scene, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for (p, r) in plain.iter().zip(&rounded) {
            prop_assert_eq!(p.beacon_id, r.beacon_id);
            prop_assert!((p.pixel.u - r.pixel.u).abs() <= 0.5);
            prop_assert!((p.pixel.v - r.pixel.v).abs() <= 0.5);
        }
    }

    #[test]
    fn dispersion_removes_any_small_offset(du in -15.0f64..15.0, dv in -15.0f64..15.0, x in -20.0f64..20.0, y in -20.0f64..20.0) {
        let mut scene = scene_at(x, y, 0.0, 0.0);
        scene.true_principal_point = PixelPoint::new(400.0 + du, 300.0 + dv);
        prop_assume!(in_frame(&scene));
        let dets = scene.project_all().unwrap();
        let k = &scene.intrinsics;
        let fix = trilaterate_three(&dets, &scene.beacons, k, HeightMode::AllPairs).unwrap();
        let (corrected, _) = calibrate_dispersion(&[FixSample::from(&fix)], scene.camera.position, k, DispersionMode::Physical).unwrap();
        prop_assert!(corrected.principal_point().distance(&scene.true_principal_point) < 1e-6);
    }
}

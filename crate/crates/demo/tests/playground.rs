use std::f64::consts::{PI, TAU};

use vocalq_demo::{angles_impl, compare_impl, distribution_impl, feature_names};

const MIDDLE: [f64; 9] = [715.85, 0.1639, 0.0, 0.58675, -35.0, 6.5, 0.1, 0.1, 17.5];

#[test]
fn names_follow_angle_order() {
    let names = feature_names();
    assert_eq!(names.len(), 9);
    assert_eq!(names[0], "pitch_dev_cents");
    assert_eq!(names[8], "tnr_db");
}

#[test]
fn middle_settings_give_expected_angles() {
    let a = angles_impl(&MIDDLE).unwrap();
    assert!((a[0] - PI).abs() < 1e-9);
    assert_eq!(a[2], 0.0);
    assert!((a[4] - PI).abs() < 1e-12);
    assert!(a.iter().all(|v| (0.0..=TAU).contains(v)));
    assert!(angles_impl(&[0.0; 3]).is_err());
}

#[test]
fn distribution_is_normalized() {
    let a = angles_impl(&MIDDLE).unwrap();
    for interference in [false, true] {
        let p = distribution_impl(&a, interference).unwrap();
        assert_eq!(p.len(), 512);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
    assert!(distribution_impl(&[0.0; 4], false).is_err());
}

#[test]
fn comparison_reflects_mode() {
    let a = angles_impl(&MIDDLE).unwrap();
    let mut b = a.clone();
    b[6] = (b[6] + 1.0) % TAU;
    // Rz only shifts phases, which the final H layer turns into populations.
    let faithful = compare_impl(&a, &b, false).unwrap();
    let interference = compare_impl(&a, &b, true).unwrap();
    assert!(faithful[0] < 1e-12);
    assert!(interference[0] > 1e-4);
    assert!((faithful[2] - 1.0).abs() < 1e-12);
    assert!((interference[1] - interference[0].sqrt()).abs() < 1e-15);
}

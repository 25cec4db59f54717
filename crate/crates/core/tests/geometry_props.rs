use earfield_core::spatial::{bin_direction, relative_source_direction, Direction, HeadPose, AZ_BINS};
use proptest::prelude::*;

type Mat = [[f64; 3]; 3];

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn transpose(a: &Mat) -> Mat {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[j][i];
        }
    }
    m
}

fn apply(a: &Mat, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

// Head-to-world rotation: yaw about +z, then pitch (nose up) about +y with
// the sign flipped because +y points left, then roll about +x.
fn head_matrix(yaw: f64, pitch: f64, roll: f64) -> Mat {
    let (y, p, r) = (yaw.to_radians(), -pitch.to_radians(), roll.to_radians());
    let rz = [[y.cos(), -y.sin(), 0.0], [y.sin(), y.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = [[p.cos(), 0.0, p.sin()], [0.0, 1.0, 0.0], [-p.sin(), 0.0, p.cos()]];
    let rx = [[1.0, 0.0, 0.0], [0.0, r.cos(), -r.sin()], [0.0, r.sin(), r.cos()]];
    mul(&mul(&rz, &ry), &rx)
}

fn unit(az: f64, el: f64) -> [f64; 3] {
    let (a, e) = (az.to_radians(), el.to_radians());
    [e.cos() * a.cos(), e.cos() * a.sin(), e.sin()]
}

fn rotation_angle_deg(a: &Mat, b: &Mat) -> f64 {
    let m = mul(&transpose(a), b);
    let c = ((m[0][0] + m[1][1] + m[2][2] - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

fn az_step(a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(AZ_BINS - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rotation_matches_matrix_oracle(
        yaw in -180.0..180.0f64, pitch in -89.0..89.0f64, roll in -180.0..180.0f64,
        az in -180.0..180.0f64, el in -90.0..=90.0f64,
    ) {
        let pose = HeadPose::new(0.0, yaw, pitch, roll).unwrap();
        let d = Direction::new(az, el).unwrap();
        let got = relative_source_direction(&pose, &d).to_unit_vector();
        let want = apply(&transpose(&head_matrix(yaw, pitch, roll)), unit(az, el));
        let chord = (0..3).map(|i| (got[i] - want[i]).powi(2)).sum::<f64>().sqrt();
        prop_assert!(chord.to_degrees() < 1e-6, "chord {chord}");
        let norm = got.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pure_yaw_shifts_azimuth(yaw in -720.0..720.0f64, az in -180.0..180.0f64) {
        let pose = HeadPose::new(0.0, yaw, 0.0, 0.0).unwrap();
        let out = relative_source_direction(&pose, &Direction::new(az, 0.0).unwrap());
        let expected = Direction::new(az - yaw, 0.0).unwrap();
        let diff = (out.azimuth_deg() - expected.azimuth_deg()).rem_euclid(360.0);
        prop_assert!(diff.min(360.0 - diff) < 1e-9);
        prop_assert!(out.elevation_deg().abs() < 1e-9);
    }

    // 300 deg/s over a 10 ms frame is at most 3 degrees of head rotation.
    #[test]
    fn bounded_speed_moves_at_most_one_bin(
        yaw in -180.0..180.0f64, pitch in -45.0..45.0f64, roll in -30.0..30.0f64,
        dy in -3.0..3.0f64, dp in -3.0..3.0f64, dr in -3.0..3.0f64,
        az in -180.0..180.0f64, el in -40.0..40.0f64,
    ) {
        let a = head_matrix(yaw, pitch, roll);
        let b = head_matrix(yaw + dy, pitch + dp, roll + dr);
        prop_assume!(rotation_angle_deg(&a, &b) <= 3.0);
        let d = Direction::new(az, el).unwrap();
        let p = relative_source_direction(&HeadPose::new(0.0, yaw, pitch, roll).unwrap(), &d);
        let q = relative_source_direction(&HeadPose::new(0.01, yaw + dy, pitch + dp, roll + dr).unwrap(), &d);
        prop_assert!(p.angle_to(&q) <= 3.0 + 1e-9);
        let (bp, bq) = (bin_direction(&p), bin_direction(&q));
        prop_assert!(bp.elevation_bin.abs_diff(bq.elevation_bin) <= 1);
        if p.elevation_deg().abs() <= 45.0 && q.elevation_deg().abs() <= 45.0 {
            prop_assert!(az_step(bp.azimuth_bin, bq.azimuth_bin) <= 1);
        }
    }
}

use earfield_core::dsp::MonoSignal;
use earfield_core::hrtf::{lookup, Ear, HeadModel, LookupMode};
use earfield_core::sim::{
    random_pose_track, render, room_impulse_response, schroeder_rt60, RoomConfig, Scenario,
};
use earfield_core::spatial::{bin_center, BinIndex, Direction};
use earfield_core::SAMPLE_RATE_HZ;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn noise(len: usize, seed: u64) -> MonoSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MonoSignal::at_default_rate((0..len).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
}

fn rms_diff(x: &[f64], y: &[f64]) -> f64 {
    (x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / x.len() as f64).sqrt()
}

#[test]
fn schroeder_rt60_tracks_configured_value() {
    for rt60 in [0.4, 0.6, 0.9] {
        let room = RoomConfig::new([4.0; 6], rt60).unwrap();
        let len = (1.5 * rt60 * SAMPLE_RATE_HZ as f64) as usize;
        let ir = room_impulse_response(&room, [1.2, 0.7, 0.3], len, SAMPLE_RATE_HZ).unwrap();
        let est = schroeder_rt60(&ir, SAMPLE_RATE_HZ).unwrap();
        assert!((est - rt60).abs() / rt60 < 0.25, "RT60 {rt60}: estimated {est}");
    }
}

#[test]
fn mirrored_scenario_swaps_channels() {
    let grid = HeadModel::generic().grid(SAMPLE_RATE_HZ).unwrap();
    let mut s = Scenario::new(Direction::new(35.0, 10.0).unwrap(), random_pose_track(1.0, 3).unwrap());
    s.duration_s = 1.0;
    s.room = RoomConfig::new([2.5, 3.0, 2.2, 3.4, 2.0, 2.6], 0.5).unwrap();
    s.image_order = 2;
    let src = noise(48_000, 8);
    let a = render(&s, &src, &grid, 0).unwrap();
    let b = render(&s.mirrored(), &src, &grid, 0).unwrap();
    assert!(rms_diff(&a.binaural.left, &b.binaural.right) < 1e-6);
    assert!(rms_diff(&a.binaural.right, &b.binaural.left) < 1e-6);
    assert_eq!(a.labels.frames(), b.labels.frames());
}

#[test]
fn model_grid_lookup_is_exact_at_centers() {
    let grid = HeadModel::subject("c").unwrap().grid(SAMPLE_RATE_HZ).unwrap();
    for b in BinIndex::all().step_by(5) {
        let c = bin_center(&b).unwrap();
        let (l, r) = lookup(&grid, &c, LookupMode::Bilinear).unwrap();
        let want = earfield_core::spatial::bin_direction(&c);
        assert_eq!(l.magnitude, grid.magnitude(want, Ear::Left));
        assert_eq!(r.magnitude, grid.magnitude(want, Ear::Right));
    }
}

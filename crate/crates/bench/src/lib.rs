//! Fixtures shared by the benchmarks.

use chfif::{build_system, validate_data, ChfifSystem, IfsParameters};

/// A system with `maps` equal subintervals on `[0, 1]` and a zigzag profile.
pub fn zigzag_system(maps: usize) -> ChfifSystem {
    let points: Vec<(f64, f64, f64)> = (0..=maps)
        .map(|i| {
            let x = i as f64 / maps as f64;
            let y = if i % 2 == 0 { 0.0 } else { 1.0 };
            (x, y, 0.5 * (1.0 - y))
        })
        .collect();
    let data = validate_data(&points).expect("abscissae increase");
    let params = IfsParameters::new(vec![0.4; maps], vec![0.3; maps], vec![0.5; maps]);
    build_system(data, params).expect("parameters satisfy the constraints")
}

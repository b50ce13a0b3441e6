//! Poses along the three preset trajectories, with distances to the serving
//! and target base stations.
//!
//!     cargo run --example mobility_traces

use silent_tracker::engine::config::{default_cells, preset_duration_s, preset_mobility};
use silent_tracker::Scenario;

pub fn main() {
    let cells = default_cells();
    let (a, b) = (&cells[0].pose, &cells[1].pose);
    for sc in [Scenario::Walk, Scenario::Rotation, Scenario::Vehicular] {
        let m = preset_mobility(sc);
        let total = preset_duration_s(sc);
        println!("{sc}: speed {:.2} m/s, rotation {:.0} deg/s, {total} s", m.speed_mps, m.omega_dps);
        for k in 0..=4 {
            let t = total * k as f64 / 4.0;
            let p = m.pose_at(t).unwrap();
            println!(
                "  t={t:>5.2}s  x={:>6.2} y={:>6.2} heading={:>6.1}  to A {:>5.2} m, to B {:>5.2} m",
                p.x,
                p.y,
                p.heading,
                p.distance_to(a),
                p.distance_to(b)
            );
        }
    }
}

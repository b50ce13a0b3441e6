//! Uniform azimuth codebooks: beam count, peak gain, ring adjacency, and the
//! geometric best beam for a few directions.
//!
//!     cargo run --example codebook_tour

use silent_tracker::channel::angle_offset;
use silent_tracker::{beam_gain, CodebookSpec};

pub fn main() {
    for label in ["20", "60", "omni"] {
        let book = CodebookSpec::parse(label).unwrap().build().unwrap();
        let first = book.beam(0).unwrap();
        println!(
            "{:>5}: {:>2} beams, spacing {:>5.1} deg, peak {:>5.2} dBi",
            CodebookSpec::parse(label).unwrap().label(),
            book.len(),
            book.spacing(),
            first.peak_gain
        );
    }

    let book = CodebookSpec::beamwidth(20.0).build().unwrap();
    let (left, right) = book.adjacent(0).unwrap();
    println!("beam 0 neighbours on the ring: {left} and {right}");
    for dir in [0.0, 9.0, 11.0, 95.0, 350.0] {
        let best = book.best_beam_oracle(dir);
        let b = book.beam(best).unwrap();
        let loss = b.peak_gain - beam_gain(b, angle_offset(dir, b.boresight));
        println!(
            "direction {dir:>5.1} deg -> beam {best:>2} (boresight {:>5.1}), {loss:.2} dB below peak",
            b.boresight
        );
    }
}

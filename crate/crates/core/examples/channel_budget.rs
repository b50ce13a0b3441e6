//! Link budget of an aligned 20 degree beam pair against distance, and the
//! cost of a 10 degree receive misalignment.
//!
//!     cargo run --example channel_budget

use silent_tracker::{beam_gain, fspl, rss, ChannelParams, Codebook, Pose};

pub fn main() {
    let params = ChannelParams::default();
    let book = Codebook::uniform(20.0).expect("valid beamwidth");
    let beam = book.beam(0).expect("beam 0");
    println!("20 deg beam: peak {:.2} dBi, {:.2} dBi at 10 deg off", beam.peak_gain, beam_gain(beam, 10.0));

    // both nodes face each other along the x axis with boresight 0
    let bs = Pose::new(0.0, 0.0, 0.0).unwrap();
    println!("{:>6} {:>9} {:>10} {:>12}", "d_m", "fspl_dB", "rss_dBm", "10deg_off");
    for d in [1.0, 2.0, 5.0, 10.0, 16.0, 20.0] {
        let mobile = Pose::new(d, 0.0, 180.0).unwrap();
        let aligned = rss(&bs, &mobile, beam, beam, &params, 0.0).unwrap();
        let skewed = Pose::new(d, 0.0, 190.0).unwrap();
        let off = rss(&bs, &skewed, beam, beam, &params, 0.0).unwrap();
        println!("{d:>6.1} {:>9.2} {aligned:>10.2} {off:>12.2}", fspl(d, params.carrier_freq_hz).unwrap());
    }
    println!("sensitivity {:.1} dBm", params.sensitivity_dbm);
}

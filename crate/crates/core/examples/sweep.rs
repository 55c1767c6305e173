//! Headway sweep on the reference drop, one run per thread: the
//! non-collision threshold grows with T while the headway band stays tight.
//!
//!     cargo run --release --example sweep

use platoon::analysis::{headway_band, noncollision_threshold};
use platoon::profile::SpeedDropProfile;
use platoon::sim::{run, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SpeedDropProfile::new(20.0, 0.5, 0.0, 500.0)?;
    let headways = [0.6, 0.8, 1.0, 1.5, 2.0];
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = headways
            .iter()
            .map(|&t| {
                scope.spawn(move || -> Result<_, platoon::error::PlatoonError> {
                    let mut s = Scenario::new(50, t, p)?;
                    s.duration = 150.0;
                    let tr = run(&s)?;
                    Ok((
                        t,
                        noncollision_threshold(&p, t),
                        headway_band(&tr, 0.0),
                        tr.collisions.len(),
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    println!("    T   threshold   band / T");
    for r in results {
        let (t, thr, band, collisions) = r?;
        let (lo, hi) = band.unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{t:5.1}   {thr:8.4} m   [{:.4}, {:.4}]   collisions {collisions}",
            lo / t,
            hi / t
        );
    }
    Ok(())
}

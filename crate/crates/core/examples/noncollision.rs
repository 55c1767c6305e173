//! Non-collision threshold and a small randomized campaign: starts within
//! the threshold distance of the target curve never produce a collision.
//!
//!     cargo run --release --example noncollision

use platoon::analysis::{lemma3_factor, noncollision_threshold};
use platoon::platoon::{distance_to_target, target_point, PlatoonState};
use platoon::profile::{SpeedDropProfile, VelocityProfile};
use platoon::sim::{run_from, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SpeedDropProfile::new(20.0, 0.5, 0.0, 500.0)?;
    let t = 1.0;
    let threshold = noncollision_threshold(&p, t);
    println!(
        "T inf v_d / (max(2 + T, 1 + M) (1 + T)) = {t} * {} / ({} * {}) = {threshold:.4} m",
        p.infimum(),
        lemma3_factor(t, p.lipschitz_constant()),
        1.0 + t
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_gap = f64::INFINITY;
    for run in 0..30 {
        let n = [2, 5, 10][run % 3];
        let anchor = target_point(rng.gen_range(-400.0..800.0), n, &p, t)?;
        let mut dir: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|a| *a *= threshold / norm);
        let x = (0..n).map(|i| anchor.x[i] + dir[i]).collect();
        let y = (0..n).map(|i| anchor.y[i] + dir[n + i]).collect();
        let start = PlatoonState::new(0.0, x, y)?;
        let dist = distance_to_target(&start, &p, t)?.distance;
        let mut s = Scenario::new(n, t, p)?;
        s.duration = 60.0;
        let tr = run_from(&s, start)?;
        let gap = tr
            .samples
            .iter()
            .flat_map(|smp| smp.state.spacings())
            .fold(f64::INFINITY, f64::min);
        worst_gap = worst_gap.min(gap);
        if run < 6 {
            println!(
                "  n {n:2}: start distance {dist:.4}, collisions {}, min gap {gap:.2} m",
                tr.collisions.len()
            );
        }
    }
    println!("30 runs, smallest gap seen {worst_gap:.2} m");
    Ok(())
}

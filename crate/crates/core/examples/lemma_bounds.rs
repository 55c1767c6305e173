//! Lemma 2 and Lemma 3 inequalities on random states: deviations from the
//! target curve are bounded by the largest error term and vice versa.
//!
//!     cargo run --release --example lemma_bounds

use platoon::analysis::{check_lemma2, check_lemma3, worst};
use platoon::platoon::{max_error, target_point};
use platoon::profile::SpeedDropProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SpeedDropProfile::new(20.0, 0.5, 0.0, 500.0)?;
    let t = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut l2, mut l3) = (Vec::new(), Vec::new());
    for _ in 0..200 {
        let n = rng.gen_range(2..=10);
        let mut s = target_point(rng.gen_range(-300.0..700.0), n, &p, t)?.into_state(0.0);
        for k in 0..n {
            s.x[k] += rng.gen_range(-2.0..2.0);
            s.y[k] += rng.gen_range(-2.0..2.0);
        }
        l2.extend(check_lemma2(&s, &p, t)?);
        l3.push(check_lemma3(&s, &p, t)?);
        if l3.len() == 1 {
            println!(
                "first state: E = {:.4}, lemma 3 rhs = {:.4}",
                max_error(&s, &p, t),
                l3[0].rhs
            );
        }
    }
    for (name, checks) in [("lemma 2", &l2), ("lemma 3", &l3)] {
        let failed = checks.iter().filter(|c| !c.pass()).count();
        let w = worst(checks).unwrap();
        println!(
            "{name}: {} checks, {failed} violations, tightest margin {:.4} ({})",
            checks.len(),
            w.margin(),
            w.id
        );
    }
    Ok(())
}

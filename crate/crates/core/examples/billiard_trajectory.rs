//! Ray tracing in the quarter stadium: one trajectory, its bounces, the
//! conserved speed, and the action difference accumulated along it.
//!
//! `cargo run --release --example billiard_trajectory`

use chaowork::geometry::{BilliardGeometry, Vec2};
use chaowork::potential::QuenchPotential;
use chaowork::sampler::PhasePoint;
use chaowork::trajectory::{action_checkpoints, propagate, DEFAULT_MAX_BOUNCES};

fn main() -> chaowork::Result<()> {
    let geom = BilliardGeometry::default();
    let pot = QuenchPotential::default();
    println!("area {:.6}, perimeter {:.6}", geom.area(), geom.perimeter());

    // H0 = p^2, so the particle moves at speed 2|p|.
    let x0 = PhasePoint::new(Vec2::new(0.3, 0.2), Vec2::new(1.0, 0.37));
    let (x1, segments) = propagate(x0, 2.0, &geom, DEFAULT_MAX_BOUNCES)?;
    println!("{} straight segments in t = 2:", segments.len());
    for s in segments.iter().take(6) {
        let end = s.end();
        println!(
            "  ({:.4}, {:.4}) -> ({:.4}, {:.4})  duration {:.4}",
            s.start.x, s.start.y, end.x, end.y, s.duration
        );
    }
    println!(
        "final q = ({:.6}, {:.6}), |p| drift {:.1e}",
        x1.q.x,
        x1.q.y,
        (x1.p.norm() - x0.p.norm()).abs()
    );

    let times = [0.0, 0.5, 1.0, 1.5, 2.0];
    let ds = action_checkpoints(x0, &times, &geom, &pot, DEFAULT_MAX_BOUNCES)?;
    println!("Delta S along the path:");
    for (t, s) in times.iter().zip(&ds) {
        println!("  t = {t:.1}: {s:+.6}");
    }
    Ok(())
}

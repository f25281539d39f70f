//! Hammer the claim set from several threads and show that every key is
//! claimed exactly once.
//!
//! ```bash
//! cargo run --release --example claim_stress
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use forklog::lang::ConstId;
use forklog::tables::{ClaimKey, ClaimOutcome, ClaimSet};

fn main() {
    let threads = 8;
    let attempts_per_thread = 100_000u32;
    let keys = 10_000u32;

    let claims = ClaimSet::new();
    let wins = AtomicUsize::new(0);
    let started = Instant::now();
    std::thread::scope(|scope| {
        for t in 0..threads {
            let claims = &claims;
            let wins = &wins;
            scope.spawn(move || {
                for i in 0..attempts_per_thread {
                    let key = i.wrapping_mul(2654435761).wrapping_add(t) % keys;
                    if claims.try_claim(ClaimKey::Node(ConstId(key))) == ClaimOutcome::Claimed {
                        wins.fetch_add(1, Ordering::Relaxed);
                    }
                }
            });
        }
    });
    let elapsed = started.elapsed();

    let total_attempts = threads as u64 * attempts_per_thread as u64;
    println!(
        "{threads} threads x {attempts_per_thread} attempts over {keys} keys in {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    );
    println!(
        "successful claims: {} (exactly the number of keys)",
        wins.load(Ordering::Relaxed)
    );
    println!(
        "throughput: {:.1} M attempts/s",
        total_attempts as f64 / elapsed.as_secs_f64() / 1e6
    );
    assert_eq!(wins.load(Ordering::Relaxed), keys as usize);
    assert_eq!(claims.len(), keys as usize);
}

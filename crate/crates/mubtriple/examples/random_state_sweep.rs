//! Criterion verdicts over random two-mode Gaussian states, cross-checked
//! against the partial-transpose test, which is exact for Gaussian states.
//!
//! Run with: cargo run --example random_state_sweep

use mubtriple::entangle::{
    check_global_ur, evaluate_criterion_from_state, partial_transpose, Sign,
};
use mubtriple::gaussian::{random_physical_state, random_physical_state_with};

const N_STATES: u64 = 2_000;
const BASE_SEED: u64 = 401;

fn main() -> mubtriple::Result<()> {
    // 1. Product states never trip the criterion: the product stays >= 1.
    let mut min_product = f64::INFINITY;
    for seed in 0..N_STATES {
        let state = random_physical_state(1, BASE_SEED + seed)
            .tensor(&random_physical_state(1, BASE_SEED + N_STATES + seed));
        for sign in [Sign::Plus, Sign::Minus] {
            let report = evaluate_criterion_from_state(&state, sign)?;
            min_product = min_product.min(report.product);
            assert!(!report.entangled_verdict);
        }
    }
    println!("{N_STATES} product states: min criterion product {min_product:.6} (bound 1)");

    // 2. Correlated states: every flagged state is negative under partial
    //    transposition, so the criterion never yields a false positive.
    let mut flagged = 0u64;
    let mut npt = 0u64;
    for seed in 0..N_STATES {
        let state = random_physical_state_with(2, 90_000 + seed, 1.2, 0.6);
        let minus = evaluate_criterion_from_state(&state, Sign::Minus)?;
        let plus = evaluate_criterion_from_state(&state, Sign::Plus)?;
        let hit = minus.entangled_verdict || plus.entangled_verdict;
        let negative = !partial_transpose(&state)?.is_physical();
        if hit {
            flagged += 1;
            assert!(negative, "criterion flagged a PPT state (seed {seed})");
        }
        if negative {
            npt += 1;
        }
    }
    println!(
        "{N_STATES} correlated states: {flagged} flagged, {npt} NPT \
         (criterion detects a subset)"
    );

    // 3. The non-commuting global triple obeys its own uncertainty bound on
    //    every physical state, entangled or not.
    let mut worst = f64::INFINITY;
    for seed in 0..200 {
        let state = random_physical_state(2, 7_000 + seed);
        for sign in [Sign::Plus, Sign::Minus] {
            worst = worst.min(check_global_ur(&state, sign)?.margin);
        }
    }
    println!("global uncertainty product margin over 200 states: worst {worst:+.3e}");
    Ok(())
}

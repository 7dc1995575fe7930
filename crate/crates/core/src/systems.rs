//! Bundled example systems used by tests, benchmarks and the CLI.
//!
//! * `system_a` — full 2-shift with `g ≡ -log 2`, `log|Jac| ≡ log 2`:
//!   the degenerate straight-line case `T(q) = 1 - q`, `alpha ≡ 1`.
//! * `system_b` — full 2-shift with `g ≡ -log 2` and asymmetric expansion
//!   `log|Jac| = (log 2, log 4)`: everything has a closed form through
//!   the root of `x + x^2 = 2^q`.
//! * `golden_mean` — the golden-mean shift (`11` forbidden) with
//!   `g ≡ -log((1+sqrt 5)/2)` and `log|Jac| = (log 2, log 3)`: a genuinely
//!   Markov, non-degenerate system.

use std::sync::Arc;

use crate::potential::{JacobianPotential, Potential, PotentialFamily};
use crate::sft::Sft;

const LN2: f64 = std::f64::consts::LN_2;

/// Degenerate line case: `T(q) = 1 - q`.
pub fn system_a() -> PotentialFamily {
    let sft = Sft::full_shift(2).expect("full 2-shift is valid");
    let g = Potential::constant(sft.clone(), 0.0).expect("constant table");
    let jac = JacobianPotential::new(Potential::constant(sft, LN2).expect("constant table"))
        .expect("log 2 > 0");
    PotentialFamily::new(g, jac).expect("normalization of a constant cannot fail")
}

/// Asymmetric full 2-shift with closed-form temperature function.
pub fn system_b() -> PotentialFamily {
    let sft = Sft::full_shift(2).expect("full 2-shift is valid");
    let g = Potential::constant(sft.clone(), -LN2).expect("constant table");
    let jac = JacobianPotential::new(
        Potential::per_symbol(sft, vec![LN2, 2.0 * LN2]).expect("two symbols"),
    )
    .expect("positive values");
    PotentialFamily::new(g, jac).expect("g already has zero pressure")
}

/// Golden-mean shift with per-symbol expansion rates `log 2`, `log 3`.
pub fn golden_mean() -> PotentialFamily {
    let sft = Sft::validate(vec![vec![1, 1], vec![1, 0]]).expect("golden mean is irreducible");
    let g = Potential::constant(sft.clone(), 0.0).expect("constant table");
    let jac = JacobianPotential::new(
        Potential::per_symbol(sft, vec![LN2, 3f64.ln()]).expect("two symbols"),
    )
    .expect("positive values");
    PotentialFamily::new(g, jac).expect("normalization cannot fail")
}

/// System A with `g` perturbed away from the coboundary class of
/// `-log|Jac|` by `±size`; breaks the straight-line degeneracy.
pub fn perturbed_line_system(size: f64) -> PotentialFamily {
    let sft = Sft::full_shift(2).expect("full 2-shift is valid");
    let g =
        Potential::per_symbol(sft.clone(), vec![-LN2 + size, -LN2 - size]).expect("two symbols");
    let jac = JacobianPotential::new(Potential::constant(sft, LN2).expect("constant table"))
        .expect("log 2 > 0");
    PotentialFamily::new(g, jac).expect("normalization cannot fail")
}

/// Look up a bundled system by its config name.
pub fn by_name(name: &str) -> Option<PotentialFamily> {
    match name {
        "system_a" => Some(system_a()),
        "system_b" => Some(system_b()),
        "golden_mean" => Some(golden_mean()),
        _ => None,
    }
}

/// The shift underlying a bundled system (for config serialization).
pub fn sft_by_name(name: &str) -> Option<Arc<Sft>> {
    by_name(name).map(|f| f.sft().clone())
}

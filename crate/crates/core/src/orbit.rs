//! Trajectory-level verification.
//!
//! Everything here works on finite symbol strings: sampling typical orbits
//! of a Markov measure, Birkhoff-ratio level sets, the stopping time cut
//! by an abstract radius, empirical Gibbs checks along sampled orbits, and
//! the two splicing constructions — dense prefix splices and
//! irregular points built by concatenating alternating blocks of two
//! periodic orbits with rapidly growing lengths.
//!
//! Randomness: ChaCha12, seeded explicitly; orbit `i` of a batch uses the
//! seed `mix(seed, i)`, so batches are reproducible and order-independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialFamily};
use crate::sft::{PeriodicOrbit, Sft, Word};
use crate::spectrum::orbit_ratio;
use crate::temperature;
use crate::transfer::{gibbs_bounds_checked, gibbs_weight, MarkovMeasure, ObservedRatioRange};

/// A finite admissible symbol sequence sampled from a measure.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitSample {
    pub symbols: Vec<u8>,
    pub seed: u64,
    pub source: String,
}

/// Alternating block lengths for the irregular-point construction, with
/// each block at least `growth_factor` times the sum of all previous
/// blocks.
#[derive(Debug, Clone, Serialize)]
pub struct BlockSchedule {
    pub lengths: Vec<u64>,
    pub growth_factor: f64,
}

/// Concentration of finite-horizon Birkhoff ratios around `alpha(q)`.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub q: f64,
    pub alpha: f64,
    pub horizon: usize,
    pub samples: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub fraction_within: f64,
    pub mean_ratio: f64,
}

/// Running Birkhoff ratio recorded at one block boundary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryRecord {
    pub position: usize,
    pub ratio: f64,
}

/// Oscillation of the running Birkhoff ratio along a block concatenation.
#[derive(Debug, Clone, Serialize)]
pub struct OscillationRecord {
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub records: Vec<BoundaryRecord>,
    /// Extremes over the second half of the boundary records.
    pub tail_min: f64,
    pub tail_max: f64,
    pub tail_spread: f64,
    /// `0.8 |ratio_a - ratio_b|`; met by geometric schedules with
    /// growth factor >= 4 and horizons >= 10^6.
    pub threshold: f64,
    pub certified: bool,
}

impl BlockSchedule {
    /// Geometric schedule: block `k` is `ceil(growth_factor^k × total so
    /// far)`, extended until `horizon` symbols are covered. The dominance
    /// multiplier grows with `k`, so the running ratio at the end of each
    /// block converges to that block's orbit ratio.
    pub fn geometric(growth_factor: f64, horizon: u64) -> Result<BlockSchedule> {
        if growth_factor < 2.0 {
            return Err(Error::InvariantViolation(format!(
                "growth factor {growth_factor} below the minimum 2"
            )));
        }
        let mut lengths = vec![1u64];
        let mut total = 1u64;
        let mut k = 1u32;
        while total < horizon {
            let next = ((growth_factor.powi(k as i32)) * total as f64).ceil() as u64;
            lengths.push(next);
            total += next;
            k += 1;
        }
        Ok(BlockSchedule {
            lengths,
            growth_factor,
        })
    }

    /// Check the defining invariant: strictly increasing lengths, each at
    /// least `growth_factor` times the sum of all previous ones.
    pub fn validate(&self) -> Result<()> {
        let mut total = 0u64;
        let mut prev = 0u64;
        for (k, &len) in self.lengths.iter().enumerate() {
            if len == 0 || (k > 0 && len <= prev) {
                return Err(Error::InvariantViolation(
                    "block lengths must strictly increase".into(),
                ));
            }
            if k > 0 && (len as f64) < self.growth_factor * total as f64 {
                return Err(Error::InvariantViolation(format!(
                    "block {k} of length {len} is below growth_factor × prefix ({})",
                    self.growth_factor * total as f64
                )));
            }
            total += len;
            prev = len;
        }
        Ok(())
    }
}

/// Derived per-orbit seed; splitmix64 round over (seed, index).
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Sample a length-`n` symbol path of the stationary chain.
/// Deterministic per seed.
pub fn sample_orbit(measure: &MarkovMeasure, n: usize, seed: u64) -> OrbitSample {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut symbols = Vec::with_capacity(n);
    let pi = measure.stationary();
    let p = measure.stochastic();
    // initial state from the stationary law
    let mut state = {
        let mut u: f64 = rng.gen();
        let mut idx = pi.len() - 1;
        for i in 0..pi.len() {
            if u < pi[i] {
                idx = i;
                break;
            }
            u -= pi[i];
        }
        idx
    };
    symbols.extend_from_slice(measure.states()[state].symbols());
    symbols.truncate(n);
    while symbols.len() < n {
        let mut u: f64 = rng.gen();
        let row = p.row(state);
        let mut next = pi.len() - 1;
        for j in 0..row.len() {
            if u < row[j] {
                next = j;
                break;
            }
            u -= row[j];
        }
        symbols.push(*measure.states()[next].symbols().last().unwrap());
        state = next;
    }
    OrbitSample {
        symbols,
        seed,
        source: format!("markov[{}]", measure.state_len()),
    }
}

/// Finite-horizon Birkhoff ratio
/// `sum_{k<n} g(sigma^k) / sum_{k<n} log|Jac|^{-1}(sigma^k)`; the
/// denominator equals `-sum jac < 0`, so typical values are positive.
pub fn birkhoff_ratio(family: &PotentialFamily, symbols: &[u8], n: usize) -> Result<f64> {
    let sg = family.g().birkhoff_sum(symbols, n)?;
    let sj = family.jac().potential().birkhoff_sum(symbols, n)?;
    Ok(sg / -sj)
}

/// The stopping time cut by radius `r`: the unique `m` with
/// `prod_{k<m} |Jac|^{-1} > r >= prod_{k<=m} |Jac|^{-1}`, i.e. the last
/// index before the cumulative contraction drops to `r`. Strictly
/// positive `log|Jac|` makes it unique; `r` stands in for the square root
/// of the volume of the comparison neighborhood.
pub fn stopping_time(family: &PotentialFamily, symbols: &[u8], r: f64) -> Result<usize> {
    assert!(r > 0.0 && r < 1.0, "radius must lie in (0,1)");
    let target = -r.ln();
    let jac = family.jac().potential();
    let depth = jac.depth();
    let mut acc = 0.0;
    let mut k = 0usize;
    loop {
        if symbols.len() < k + depth {
            return Err(Error::StreamExhausted {
                need: k + depth,
                got: symbols.len(),
            });
        }
        acc += jac.evaluate(&symbols[k..])?;
        k += 1;
        if acc >= target {
            return Ok(k - 1);
        }
    }
}

/// Fraction of `samples` independent ν_q-orbits whose horizon-`n` Birkhoff
/// ratio lies within `epsilon` of `alpha(q)`.
pub fn level_set_concentration(
    family: &PotentialFamily,
    q: f64,
    n: usize,
    samples: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    let (_, nu) = temperature::equilibrium_at(family, q)?;
    let alpha = temperature::alpha_of(family, &nu)?;
    let need = n + family.depth();
    let ratios: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let orbit = sample_orbit(&nu, need, mix_seed(seed, i));
            birkhoff_ratio(family, &orbit.symbols, n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let within = ratios
        .iter()
        .filter(|r| (**r - alpha).abs() <= epsilon)
        .count();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(ConcentrationReport {
        q,
        alpha,
        horizon: n,
        samples,
        epsilon,
        seed,
        fraction_within: within as f64 / samples as f64,
        mean_ratio: mean,
    })
}

/// Concatenate alternating blocks of two periodic orbits along a schedule,
/// splicing with connector words, and record the running Birkhoff ratio at
/// every block boundary.
///
/// With geometrically dominant blocks the running ratio swings between
/// the two orbit ratios; the tail spread certificate witnesses a
/// nonexistent limit (an irregular point).
pub fn irregular_point(
    family: &PotentialFamily,
    orbit_a: &PeriodicOrbit,
    orbit_b: &PeriodicOrbit,
    schedule: &BlockSchedule,
    horizon: usize,
) -> Result<OscillationRecord> {
    schedule.validate()?;
    let ratio_a = orbit_ratio(family, orbit_a)?;
    let ratio_b = orbit_ratio(family, orbit_b)?;
    if (ratio_a - ratio_b).abs() < 1e-12 {
        return Err(Error::EqualRatios(ratio_a));
    }
    let sft = family.sft();
    let mut word: Vec<u8> = Vec::with_capacity(horizon + 8);
    let mut boundaries = Vec::new();
    'outer: for (k, &len) in schedule.lengths.iter().enumerate() {
        let orbit = if k % 2 == 0 { orbit_a } else { orbit_b };
        if let Some(&last) = word.last() {
            let u = sft.connector(last, orbit.word.symbols()[0]);
            word.extend_from_slice(u.symbols());
        }
        let remaining = horizon.saturating_sub(word.len());
        if remaining == 0 {
            break;
        }
        let take = (len as usize).min(remaining);
        word.extend(orbit.word.symbols().iter().copied().cycle().take(take));
        boundaries.push(word.len());
        if word.len() >= horizon {
            break 'outer;
        }
    }
    debug_assert!(sft.is_admissible(&word));

    // one sweep of running window sums; ratios read off at boundaries
    let g = family.g();
    let jac = family.jac().potential();
    let depth = family.depth();
    let mut sg = 0.0;
    let mut sj = 0.0;
    let mut records = Vec::with_capacity(boundaries.len());
    let mut next_boundary = 0usize;
    for k in 0..=word.len().saturating_sub(depth) {
        sg += g.evaluate(&word[k..])?;
        sj += jac.evaluate(&word[k..])?;
        // k+1 windows summed, covering the first k+depth symbols
        while next_boundary < boundaries.len() && boundaries[next_boundary] <= k + depth {
            records.push(BoundaryRecord {
                position: boundaries[next_boundary],
                ratio: sg / -sj,
            });
            next_boundary += 1;
        }
    }

    let tail = &records[records.len() / 2..];
    let tail_min = tail.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let tail_max = tail
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = 0.8 * (ratio_a - ratio_b).abs();
    let spread = tail_max - tail_min;
    Ok(OscillationRecord {
        ratio_a,
        ratio_b,
        records,
        tail_min,
        tail_max,
        tail_spread: spread,
        threshold,
        certified: spread >= threshold,
    })
}

/// Splice a typical tail behind a target cylinder: `target · u · tail`
/// with `u` the connector word. The finite prefix does not change the
/// Birkhoff-ratio limit of the tail.
pub fn dense_splice(sft: &Sft, target: &Word, tail: &OrbitSample) -> Result<Word> {
    if target.is_empty() || tail.symbols.is_empty() {
        return Err(Error::InadmissibleWord);
    }
    let mut out = target.symbols().to_vec();
    let u = sft.connector(*target.symbols().last().unwrap(), tail.symbols[0]);
    out.extend_from_slice(u.symbols());
    out.extend_from_slice(&tail.symbols);
    // full admissibility scan of every emitted word
    sft.word(out)
}

/// Gibbs ratios along `samples` sampled orbits: cylinder mass of the
/// length-`depth` prefix over the Gibbs weight. Bounds `[c1, c2]` come
/// from the eigendata of `potential`, which must have zero pressure; a
/// mismatched `measure` drifts outside them exponentially fast.
pub fn empirical_gibbs_check(
    measure: &MarkovMeasure,
    potential: &Potential,
    samples: usize,
    depth: usize,
    seed: u64,
) -> Result<ObservedRatioRange> {
    let (c1, c2) = gibbs_bounds_checked(measure.sft(), potential, depth)?;
    let ratios: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let orbit = sample_orbit(measure, depth, mix_seed(seed, i));
            let mass = measure.cylinder_measure(&orbit.symbols)?;
            Ok(mass / gibbs_weight(potential, &orbit.symbols)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ObservedRatioRange {
        min,
        max,
        c1,
        c2,
        inside: c1 <= min && max <= c2,
    })
}

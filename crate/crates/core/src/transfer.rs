//! The Ruelle transfer-operator core.
//!
//! For a locally constant potential the transfer operator is a finite
//! nonnegative matrix on cylinder states, so pressure, equilibrium states,
//! Gibbs bounds and correlation sums are exact matrix computations:
//!
//! * pressure `P(phi) = log lambda` of the weighted transition matrix,
//! * the equilibrium state as the Perron stochasticization of that matrix,
//! * Gibbs constants from eigenvector components,
//! * the eigenmeasure as the conformal measure at zero pressure,
//! * asymptotic (co)variances via the fundamental matrix — a linear solve,
//!   with no series truncation.
//!
//! All computations are deterministic: the Perron solver starts from the
//! all-ones vector and matrices are built in cylinder order.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::potential::Potential;
use crate::sft::{Sft, Word, MAX_ENUM_DEPTH};

/// Relative residual target for the power iteration.
pub const PERRON_TOL: f64 = 1e-13;

/// Residual accepted from the slow-gap squaring fallback. This bound is
/// per component, which is stricter than the 1e-12 max-norm eigendata
/// contract: per-component residuals at most `c` imply a max-norm
/// relative residual at most `c` as well.
pub const PERRON_FALLBACK_TOL: f64 = 4e-12;

/// How far from zero the pressure may be for operations that require a
/// normalized (zero-pressure) potential.
pub const ZERO_PRESSURE_TOL: f64 = 1e-9;

/// Perron root and eigenvectors of a weighted transition matrix.
///
/// `right` is normalized to max entry 1; `left` so that `left · right = 1`.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub states: Vec<Word>,
    pub lambda: f64,
    pub right: Array1<f64>,
    pub left: Array1<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl Serialize for PerronData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PerronData", 6)?;
        let states: Vec<String> = self.states.iter().map(|w| w.to_symbol_string()).collect();
        st.serialize_field("states", &states)?;
        st.serialize_field("lambda", &self.lambda)?;
        st.serialize_field("right", &self.right.to_vec())?;
        st.serialize_field("left", &self.left.to_vec())?;
        st.serialize_field("residual", &self.residual)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.end()
    }
}

/// A stationary Markov chain on cylinder states; the concrete form of an
/// equilibrium or sampled invariant measure.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    sft: Arc<Sft>,
    state_len: usize,
    states: Vec<Word>,
    state_index: HashMap<Vec<u8>, usize>,
    stochastic: Array2<f64>,
    stationary: Array1<f64>,
}

impl Serialize for MarkovMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MarkovMeasure", 4)?;
        let states: Vec<String> = self.states.iter().map(|w| w.to_symbol_string()).collect();
        st.serialize_field("state_len", &self.state_len)?;
        st.serialize_field("states", &states)?;
        // row-major
        let rows: Vec<Vec<f64>> = self
            .stochastic
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect();
        st.serialize_field("stochastic", &rows)?;
        st.serialize_field("stationary", &self.stationary.to_vec())?;
        st.end()
    }
}

/// Two-sided Gibbs bounds together with the worst ratios observed in an
/// exhaustive cylinder scan.
///
/// The denominator convention: the weight of a cylinder `w` of length `n`
/// is `exp` of the Birkhoff sum of the potential over all depth-`m`
/// windows that fit inside `w` (that is `n - m + 1` terms).
#[derive(Debug, Clone, Serialize)]
pub struct GibbsCertificate {
    pub c1: f64,
    pub c2: f64,
    pub checked_depth: usize,
    pub worst_ratio_low: f64,
    pub worst_ratio_high: f64,
}

impl GibbsCertificate {
    /// Whether the observed ratios sit inside `[c1, c2]`.
    pub fn holds(&self) -> bool {
        self.c1 <= self.worst_ratio_low && self.worst_ratio_high <= self.c2
    }

    /// The symmetric normalization `C1 = 1/C2` with `C2 > 1`.
    pub fn normalized(&self) -> (f64, f64) {
        let mut c2 = self.c2.max(1.0 / self.c1);
        if c2 <= 1.0 {
            // ratios are exactly 1 (e.g. Bernoulli measures); any C2 > 1 works
            c2 = 1.0 + 1e-12;
        }
        (1.0 / c2, c2)
    }
}

/// Convention for the correlation sum of [`asymptotic_variance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarianceConvention {
    /// `sum_{k>=0} C(k)` — the literal one-sided sum.
    OneSided,
    /// `C(0) + sum_{k>=1} (C(k) + C(-k))` — the Green–Kubo form; this is
    /// the Hessian of the pressure.
    Symmetric,
}

/// State length used by the chain presentation of a depth-`m` potential.
pub fn state_len_for_depth(depth: usize) -> usize {
    depth.saturating_sub(1).max(1)
}

/// The weighted transition matrix of the transfer operator: states are
/// `max(m-1, 1)`-cylinders and the entry `(w, w')` is
/// `exp(phi(w · last(w')))` when `w'` follows `w` in the higher-block
/// shift, else 0.
pub fn weighted_matrix(sft: &Arc<Sft>, potential: &Potential) -> Result<(Vec<Word>, Array2<f64>)> {
    let s = state_len_for_depth(potential.depth());
    let states = sft.cylinders(s)?;
    let index: HashMap<&[u8], usize> = states
        .iter()
        .enumerate()
        .map(|(i, w)| (w.symbols(), i))
        .collect();
    let n = states.len();
    let mut m = Array2::zeros((n, n));
    let mut word = vec![0u8; s + 1];
    for (i, w) in states.iter().enumerate() {
        word[..s].copy_from_slice(w.symbols());
        for b in 0..sft.alphabet_size() as u8 {
            if !sft.allows(word[s - 1], b) {
                continue;
            }
            word[s] = b;
            if let Some(&j) = index.get(&word[1..]) {
                m[[i, j]] = potential.evaluate(&word)?.exp();
            }
        }
    }
    Ok((states, m))
}

/// Dominant eigendata of an irreducible nonnegative matrix by power
/// iteration: deterministic all-ones start, max-norm normalization,
/// residual stopping at [`PERRON_TOL`] relative per component, with a
/// matrix-squaring fallback (accepted at [`PERRON_FALLBACK_TOL`]) when a
/// small spectral gap stalls the iteration. A diagonal shift is applied
/// when the diagonal has zeros, which leaves the eigenvectors unchanged
/// and restores convergence for periodic patterns.
pub fn perron(matrix: &Array2<f64>, states: Vec<Word>) -> Result<PerronData> {
    let (lambda_r, right, res_r, it_r) = power_iteration(matrix)?;
    let transposed = matrix.t().to_owned();
    let (_, mut left, res_l, it_l) = power_iteration(&transposed)?;
    let scale = left.dot(&right);
    left.mapv_inplace(|v| v / scale);
    Ok(PerronData {
        states,
        lambda: lambda_r,
        right,
        left,
        residual: res_r.max(res_l),
        iterations: it_r.max(it_l),
    })
}

/// Power iterations before switching to the squaring fallback, which
/// removes the spectral-gap dependence for slow-mixing weights.
const POWER_PHASE_CAP: usize = 2_000;

fn power_iteration(matrix: &Array2<f64>) -> Result<(f64, Array1<f64>, f64, usize)> {
    let n = matrix.nrows();
    let diag_min = (0..n).map(|i| matrix[[i, i]]).fold(f64::INFINITY, f64::min);
    let shift = if diag_min > 0.0 {
        0.0
    } else {
        matrix.iter().copied().fold(0.0f64, f64::max)
    };
    let mut shifted = matrix.clone();
    for i in 0..n {
        shifted[[i, i]] += shift;
    }
    let mut x = Array1::from_elem(n, 1.0);
    let mut res = f64::INFINITY;
    let mut iters = 0;
    for iter in 1..=POWER_PHASE_CAP {
        iters = iter;
        let y = shifted.dot(&x);
        let growth = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(growth > 0.0) || !growth.is_finite() {
            return Err(Error::ConvergenceFailure {
                iterations: iter,
                residual: res,
            });
        }
        // M'x - growth*x equals Mx - (growth - shift)x, so this residual
        // certifies the unshifted problem. It is relative per component:
        // weighted matrices can span many orders of magnitude and small
        // eigenvector components feed transition probabilities downstream,
        // so they need full relative accuracy, not just max-norm accuracy.
        let lambda = growth - shift;
        let scale = if lambda > growth * 1e-8 {
            lambda
        } else {
            growth
        };
        res = 0.0;
        for i in 0..n {
            res = res.max((y[i] - growth * x[i]).abs() / (scale * x[i]));
        }
        x = y / growth;
        if res <= PERRON_TOL {
            return Ok((lambda, x, res, iter));
        }
    }

    // Slow-gap fallback: repeated squaring of the shifted matrix. All
    // arithmetic is sums of positive products, so every eigenvector
    // component converges in relative terms no matter how small the
    // spectral gap is; 2^70 effective power steps crush any gap that is
    // resolvable in f64 at all. The best iterate is kept because rounding
    // in the squared matrices eventually outweighs the gap error.
    let mut b = &shifted / shifted.iter().copied().fold(0.0f64, f64::max);
    let mut best: Option<(f64, Array1<f64>, f64)> = None;
    let mut stalls = 0usize;
    for squaring in 1..=70usize {
        iters = POWER_PHASE_CAP + squaring;
        b = b.dot(&b);
        let top = b.iter().copied().fold(0.0f64, f64::max);
        if !(top > 0.0) || !top.is_finite() {
            break;
        }
        b.mapv_inplace(|v| v / top);
        let mut u = b.dot(&Array1::from_elem(n, 1.0));
        let u_max = u.iter().copied().fold(0.0f64, f64::max);
        u.mapv_inplace(|v| v / u_max);
        if u.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            break;
        }
        let y = matrix.dot(&u);
        let i_max = (0..n)
            .max_by(|&a, &b| u[a].partial_cmp(&u[b]).expect("finite"))
            .expect("nonempty");
        let lam = y[i_max] / u[i_max];
        let r = (0..n)
            .map(|i| (y[i] - lam * u[i]).abs() / (lam * u[i]))
            .fold(0.0f64, f64::max);
        if best.as_ref().map_or(true, |(_, _, br)| r < *br) {
            best = Some((lam, u, r));
            stalls = 0;
        } else {
            stalls += 1;
        }
        let done = best.as_ref().map_or(false, |(_, _, br)| *br <= PERRON_TOL);
        if done || stalls >= 3 {
            break;
        }
    }
    match best {
        Some((lam, u, r)) if r <= PERRON_FALLBACK_TOL => Ok((lam, u, r, iters)),
        Some((_, _, r)) => Err(Error::ConvergenceFailure {
            iterations: iters,
            residual: r,
        }),
        None => Err(Error::ConvergenceFailure {
            iterations: iters,
            residual: res,
        }),
    }
}

/// Topological pressure of a locally constant potential: `log lambda` of
/// the weighted transition matrix. Exact in this class; no cover limits.
pub fn pressure(sft: &Arc<Sft>, potential: &Potential) -> Result<f64> {
    let (states, m) = weighted_matrix(sft, potential)?;
    let data = perron(&m, states)?;
    Ok(data.lambda.ln())
}

/// The unique equilibrium state of a locally constant potential, realized
/// as the Perron stochasticization
/// `P(w,w') = M(w,w') u(w') / (lambda u(w))`, `pi = left ∘ right`.
pub fn equilibrium_state(sft: &Arc<Sft>, potential: &Potential) -> Result<MarkovMeasure> {
    let (states, m) = weighted_matrix(sft, potential)?;
    let data = perron(&m, states)?;
    let n = data.states.len();
    let mut stochastic = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if m[[i, j]] > 0.0 {
                stochastic[[i, j]] = m[[i, j]] * data.right[j] / (data.lambda * data.right[i]);
            }
        }
    }
    // Row sums are 1 up to eigen residual; renormalize so downstream
    // cylinder masses telescope exactly.
    for i in 0..n {
        let s: f64 = stochastic.row(i).sum();
        for j in 0..n {
            stochastic[[i, j]] /= s;
        }
    }
    let mut stationary = Array1::zeros(n);
    for i in 0..n {
        stationary[i] = data.left[i] * data.right[i];
    }
    let total: f64 = stationary.sum();
    stationary.mapv_inplace(|v| v / total);
    MarkovMeasure::from_parts(
        sft.clone(),
        state_len_for_depth(potential.depth()),
        data.states,
        stochastic,
        stationary,
    )
}

impl MarkovMeasure {
    fn from_parts(
        sft: Arc<Sft>,
        state_len: usize,
        states: Vec<Word>,
        stochastic: Array2<f64>,
        stationary: Array1<f64>,
    ) -> Result<MarkovMeasure> {
        let state_index = states
            .iter()
            .enumerate()
            .map(|(i, w)| (w.symbols().to_vec(), i))
            .collect();
        Ok(MarkovMeasure {
            sft,
            state_len,
            states,
            state_index,
            stochastic,
            stationary,
        })
    }

    /// Build from a row-stochastic matrix on `state_len`-cylinders whose
    /// support pattern matches the shift; the stationary vector is
    /// computed by a direct linear solve.
    pub fn from_stochastic(
        sft: Arc<Sft>,
        state_len: usize,
        stochastic: Array2<f64>,
    ) -> Result<MarkovMeasure> {
        let states = sft.cylinders(state_len)?;
        let n = states.len();
        if stochastic.nrows() != n || stochastic.ncols() != n {
            return Err(Error::ShiftMismatch);
        }
        for i in 0..n {
            let s: f64 = stochastic.row(i).sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(Error::InvariantViolation(format!(
                    "row {i} of the stochastic matrix sums to {s}"
                )));
            }
        }
        // pi (P - I) = 0 with the last column replaced by normalization.
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = stochastic[[j, i]] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..n {
            a[[n - 1, j]] = 1.0;
        }
        let mut b = Array1::zeros(n);
        b[n - 1] = 1.0;
        let stationary = lu_solve(a, b).ok_or(Error::SingularSystem)?;
        MarkovMeasure::from_parts(sft, state_len, states, stochastic, stationary)
    }

    pub fn sft(&self) -> &Arc<Sft> {
        &self.sft
    }

    pub fn state_len(&self) -> usize {
        self.state_len
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn stochastic(&self) -> &Array2<f64> {
        &self.stochastic
    }

    pub fn stationary(&self) -> &Array1<f64> {
        &self.stationary
    }

    pub fn state_of(&self, symbols: &[u8]) -> Option<usize> {
        self.state_index.get(&symbols[..self.state_len]).copied()
    }

    /// Exact mass of the cylinder `[word]`: stationary mass of the leading
    /// state times the transition probabilities along the word.
    /// Inadmissible words have mass 0 by contract.
    pub fn cylinder_measure(&self, word: &[u8]) -> Result<f64> {
        if word.len() < self.state_len {
            return Err(Error::WordTooShort {
                need: self.state_len,
                got: word.len(),
            });
        }
        if !self.sft.is_admissible(word) {
            return Ok(0.0);
        }
        let mut state = match self.state_of(word) {
            Some(s) => s,
            None => return Ok(0.0),
        };
        let mut mass = self.stationary[state];
        for k in 1..=word.len() - self.state_len {
            let next = match self.state_of(&word[k..]) {
                Some(s) => s,
                None => return Ok(0.0),
            };
            mass *= self.stochastic[[state, next]];
            state = next;
        }
        Ok(mass)
    }

    /// Shannon entropy rate, `-sum_i pi_i sum_j P_ij log P_ij`, with the
    /// convention `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let n = self.states.len();
        let mut h = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = self.stochastic[[i, j]];
                if p > 0.0 {
                    h -= self.stationary[i] * p * p.ln();
                }
            }
        }
        h.max(0.0)
    }

    /// `∫ phi dμ` over cylinders of length `max(depth, state_len)`.
    pub fn integrate(&self, potential: &Potential) -> Result<f64> {
        let depth = potential.depth().max(self.state_len);
        let mut acc = 0.0;
        for w in self.sft.cylinders(depth)? {
            let mass = self.cylinder_measure(w.symbols())?;
            if mass > 0.0 {
                acc += mass * potential.evaluate(w.symbols())?;
            }
        }
        Ok(acc)
    }

    /// Free energy `h(μ) + ∫ phi dμ`; equals the pressure exactly at the
    /// equilibrium state and is below it for every other measure.
    pub fn free_energy(&self, potential: &Potential) -> Result<f64> {
        Ok(self.entropy() + self.integrate(potential)?)
    }

    /// The chain on `depth`-cylinders carrying the same measure, for
    /// functions that need deeper states.
    fn lifted(&self, depth: usize) -> Result<(Vec<Word>, Array2<f64>, Array1<f64>)> {
        if depth == self.state_len {
            return Ok((
                self.states.clone(),
                self.stochastic.clone(),
                self.stationary.clone(),
            ));
        }
        let states = self.sft.cylinders(depth)?;
        let index: HashMap<&[u8], usize> = states
            .iter()
            .enumerate()
            .map(|(i, w)| (w.symbols(), i))
            .collect();
        let n = states.len();
        let mut q = Array2::zeros((n, n));
        let mut pi = Array1::zeros(n);
        let mut word = vec![0u8; depth + 1];
        for (i, w) in states.iter().enumerate() {
            pi[i] = self.cylinder_measure(w.symbols())?;
            word[..depth].copy_from_slice(w.symbols());
            let tail_state = self
                .state_of(&w.symbols()[depth - self.state_len..])
                .unwrap();
            for b in 0..self.sft.alphabet_size() as u8 {
                if !self.sft.allows(word[depth - 1], b) {
                    continue;
                }
                word[depth] = b;
                if let Some(&j) = index.get(&word[1..]) {
                    let next_state = self.state_of(&word[depth + 1 - self.state_len..]).unwrap();
                    q[[i, j]] = self.stochastic[[tail_state, next_state]];
                }
            }
        }
        Ok((states, q, pi))
    }
}

/// Correlation sum `Var(h1, h2)` of the measure, evaluated exactly through
/// the fundamental matrix `(I - Q + 1 piᵀ)^{-1}` — no truncation.
///
/// `OneSided` returns `sum_{k>=0} C(k)`; `Symmetric` returns
/// `C(0) + sum_{k>=1}(C(k) + C(-k))`, the bilinear form appearing in the
/// second derivative of the pressure.
pub fn asymptotic_variance(
    measure: &MarkovMeasure,
    h1: &Potential,
    h2: &Potential,
    convention: VarianceConvention,
) -> Result<f64> {
    let depth = h1.depth().max(h2.depth()).max(measure.state_len());
    let (states, q, pi) = measure.lifted(depth)?;
    let n = states.len();
    let mut v1 = Array1::zeros(n);
    let mut v2 = Array1::zeros(n);
    for (i, w) in states.iter().enumerate() {
        v1[i] = h1.evaluate(w.symbols())?;
        v2[i] = h2.evaluate(w.symbols())?;
    }
    let m1 = pi.dot(&v1);
    let m2 = pi.dot(&v2);
    let c1 = &v1 - m1;
    let c2 = &v2 - m2;
    // A = I - Q + 1 pi^T
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = (if i == j { 1.0 } else { 0.0 }) - q[[i, j]] + pi[j];
        }
    }
    let z2 = lu_solve(a.clone(), c2.clone()).ok_or(Error::SingularSystem)?;
    let c0: f64 = (0..n).map(|i| pi[i] * c1[i] * c2[i]).sum();
    let forward: f64 = (0..n).map(|i| pi[i] * c1[i] * z2[i]).sum();
    match convention {
        VarianceConvention::OneSided => Ok(forward),
        VarianceConvention::Symmetric => {
            let z1 = lu_solve(a, c1.clone()).ok_or(Error::SingularSystem)?;
            let backward: f64 = (0..n).map(|i| pi[i] * c2[i] * z1[i]).sum();
            Ok(forward + backward - c0)
        }
    }
}

/// Gibbs weight of a finite word: `exp` of the Birkhoff sum of the
/// potential over every depth-`m` window fitting inside it.
pub fn gibbs_weight(potential: &Potential, word: &[u8]) -> Result<f64> {
    let m = potential.depth();
    if word.len() < m {
        return Ok(1.0);
    }
    Ok(potential.birkhoff_sum(word, word.len() - m + 1)?.exp())
}

/// Exhaustive Gibbs certificate for a zero-pressure potential.
///
/// The a priori bounds come from eigenvector components: for a cylinder
/// with leading state `a` and trailing state `b` the ratio
/// `μ[w] / gibbs_weight(w)` equals `left_a · right_b` exactly (times
/// `exp(-phi(b))` when the potential has depth 1), so `C1`/`C2` are the
/// extremes of those products, widened for the residual pressure
/// `|log lambda| <= ZERO_PRESSURE_TOL` accumulated over `max_depth` steps.
pub fn gibbs_certificate(
    sft: &Arc<Sft>,
    potential: &Potential,
    max_depth: usize,
) -> Result<GibbsCertificate> {
    if max_depth == 0 || max_depth > MAX_ENUM_DEPTH {
        return Err(Error::DepthTooLarge(max_depth, MAX_ENUM_DEPTH));
    }
    let (c1, c2) = gibbs_bounds_checked(sft, potential, max_depth)?;
    let measure = equilibrium_state(sft, potential)?;

    let s = measure.state_len();
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    for n in s..=max_depth {
        for w in sft.cylinders(n)? {
            let mass = measure.cylinder_measure(w.symbols())?;
            let ratio = mass / gibbs_weight(potential, w.symbols())?;
            worst_low = worst_low.min(ratio);
            worst_high = worst_high.max(ratio);
        }
    }
    Ok(GibbsCertificate {
        c1,
        c2,
        checked_depth: max_depth,
        worst_ratio_low: worst_low,
        worst_ratio_high: worst_high,
    })
}

/// Eigenvector-component Gibbs bounds valid for cylinders up to
/// `max_depth`, gated on zero pressure. Shared by the exhaustive
/// certificate and the sampled check.
pub(crate) fn gibbs_bounds_checked(
    sft: &Arc<Sft>,
    potential: &Potential,
    max_depth: usize,
) -> Result<(f64, f64)> {
    let (states, m) = weighted_matrix(sft, potential)?;
    let data = perron(&m, states)?;
    let log_lambda = data.lambda.ln();
    if log_lambda.abs() > ZERO_PRESSURE_TOL {
        return Err(Error::NotZeroPressure {
            pressure: log_lambda,
            tolerance: ZERO_PRESSURE_TOL,
        });
    }
    eigen_bounds(potential, &data, max_depth, log_lambda)
}

/// Eigenvector-component bounds for the Gibbs ratio; see
/// [`gibbs_certificate`].
fn eigen_bounds(
    potential: &Potential,
    data: &PerronData,
    max_depth: usize,
    log_lambda: f64,
) -> Result<(f64, f64)> {
    let n = data.states.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in 0..n {
        for b in 0..n {
            let mut value = data.left[a] * data.right[b];
            if potential.depth() == 1 {
                value *= (-potential.evaluate(data.states[b].symbols())?).exp();
            }
            lo = lo.min(value);
            hi = hi.max(value);
        }
    }
    // residual-pressure slack over the checked depths
    let slack = (max_depth as f64 * log_lambda.abs()).exp() * (1.0 + 1e-10);
    Ok((lo / slack, hi * slack))
}

/// Monte-Carlo range of Gibbs ratios along the chain presentation; see
/// [`gibbs_certificate`] for the exhaustive form.
#[derive(Debug, Clone, Serialize)]
pub struct ObservedRatioRange {
    pub min: f64,
    pub max: f64,
    pub c1: f64,
    pub c2: f64,
    pub inside: bool,
}

/// The conformal (eigen)measure of a potential: the probability measure
/// built from the right eigenvector, satisfying
/// `m(sigma(cyl)) = ∫_cyl e^{-phi} dm` at zero pressure.
pub(crate) struct EigenMeasure {
    potential: Potential,
    data: PerronData,
    state_len: usize,
    state_index: HashMap<Vec<u8>, usize>,
    right_total: f64,
}

impl EigenMeasure {
    pub(crate) fn new(sft: &Arc<Sft>, potential: &Potential) -> Result<EigenMeasure> {
        let (states, m) = weighted_matrix(sft, potential)?;
        let data = perron(&m, states)?;
        let state_len = state_len_for_depth(potential.depth());
        let state_index = data
            .states
            .iter()
            .enumerate()
            .map(|(i, w)| (w.symbols().to_vec(), i))
            .collect();
        let right_total = data.right.sum();
        Ok(EigenMeasure {
            potential: potential.clone(),
            data,
            state_len,
            state_index,
            right_total,
        })
    }

    pub(crate) fn lambda(&self) -> f64 {
        self.data.lambda
    }

    /// Mass of `[word]`; exact for the eigenmeasure construction.
    pub(crate) fn mass(&self, word: &[u8]) -> Result<f64> {
        let n = word.len();
        if n < self.state_len {
            return Err(Error::WordTooShort {
                need: self.state_len,
                got: n,
            });
        }
        let trail = &word[n - self.state_len..];
        let idx = match self.state_index.get(trail) {
            Some(&i) => i,
            None => return Ok(0.0),
        };
        let steps = n - self.state_len;
        let chain_sum = if steps > 0 {
            self.potential.birkhoff_sum(word, steps)?
        } else {
            0.0
        };
        Ok(chain_sum.exp() * self.data.right[idx]
            / (self.right_total * self.data.lambda.powi(steps as i32)))
    }
}

/// Max defect of the volume-conformality relation
/// `m(sigma[w]) = e^{-phi(w)} m[w]` over all cylinders of length up to
/// `max_depth`, for a zero-pressure potential.
pub fn conformality_check(sft: &Arc<Sft>, potential: &Potential, max_depth: usize) -> Result<f64> {
    let em = EigenMeasure::new(sft, potential)?;
    let log_lambda = em.lambda().ln();
    if log_lambda.abs() > ZERO_PRESSURE_TOL {
        return Err(Error::NotZeroPressure {
            pressure: log_lambda,
            tolerance: ZERO_PRESSURE_TOL,
        });
    }
    conformality_defect(sft, &em, potential, max_depth)
}

/// Same scan without the zero-pressure gate: the eigenmeasure is built
/// from the true eigendata but checked against the lambda-free relation,
/// so the defect grows with `|pressure|`. Diagnostic / negative-control
/// use.
pub fn conformality_defect_unchecked(
    sft: &Arc<Sft>,
    potential: &Potential,
    max_depth: usize,
) -> Result<f64> {
    let em = EigenMeasure::new(sft, potential)?;
    conformality_defect(sft, &em, potential, max_depth)
}

fn conformality_defect(
    sft: &Arc<Sft>,
    em: &EigenMeasure,
    potential: &Potential,
    max_depth: usize,
) -> Result<f64> {
    if max_depth > MAX_ENUM_DEPTH {
        return Err(Error::DepthTooLarge(max_depth, MAX_ENUM_DEPTH));
    }
    let start = potential.depth().max(em.state_len + 1);
    let mut worst = 0.0f64;
    for n in start..=max_depth {
        for w in sft.cylinders(n)? {
            let lhs = em.mass(&w.symbols()[1..])?;
            let rhs = (-potential.evaluate(w.symbols())?).exp() * em.mass(w.symbols())?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// A random Markov measure with the shift's support pattern: independent
/// log-normal edge weights, rows normalized. Used as competitor measures
/// in variational checks.
pub fn random_markov_measure(
    sft: &Arc<Sft>,
    state_len: usize,
    rng: &mut impl rand::Rng,
) -> Result<MarkovMeasure> {
    use rand_distr::{Distribution, StandardNormal};
    let states = sft.cylinders(state_len)?;
    let index: HashMap<&[u8], usize> = states
        .iter()
        .enumerate()
        .map(|(i, w)| (w.symbols(), i))
        .collect();
    let n = states.len();
    let mut weights = Array2::zeros((n, n));
    let mut word = vec![0u8; state_len + 1];
    for (i, w) in states.iter().enumerate() {
        word[..state_len].copy_from_slice(w.symbols());
        for b in 0..sft.alphabet_size() as u8 {
            if !sft.allows(word[state_len - 1], b) {
                continue;
            }
            word[state_len] = b;
            if let Some(&j) = index.get(&word[1..]) {
                let g: f64 = StandardNormal.sample(rng);
                weights[[i, j]] = g.exp();
            }
        }
    }
    for i in 0..n {
        let s: f64 = weights.row(i).sum();
        for j in 0..n {
            weights[[i, j]] /= s;
        }
    }
    MarkovMeasure::from_stochastic(sft.clone(), state_len, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{normalize_to_zero_pressure, JacobianPotential, PotentialFamily};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn full2() -> Arc<Sft> {
        Sft::full_shift(2).unwrap()
    }

    fn golden() -> Arc<Sft> {
        Sft::validate(vec![vec![1, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn weighted_matrix_cases() {
        let s = full2();
        let zero = Potential::constant(s.clone(), 0.0).unwrap();
        let (_, m) = weighted_matrix(&s, &zero).unwrap();
        assert_eq!(m, array![[1.0, 1.0], [1.0, 1.0]]);

        let half = Potential::constant(s.clone(), -LN2).unwrap();
        let (_, m) = weighted_matrix(&s, &half).unwrap();
        for v in m.iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }

        let g = golden();
        let zero = Potential::constant(g.clone(), 0.0).unwrap();
        let (_, m) = weighted_matrix(&g, &zero).unwrap();
        assert_eq!(m, array![[1.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn perron_symmetric_and_golden() {
        let m = array![[1.0, 1.0], [1.0, 1.0]];
        let d = perron(&m, vec![]).unwrap();
        assert!((d.lambda - 2.0).abs() < 1e-12);
        assert!((d.right[0] - 1.0).abs() < 1e-12 && (d.right[1] - 1.0).abs() < 1e-12);
        assert!((d.left[0] - 0.5).abs() < 1e-12);

        let m = array![[1.0, 1.0], [1.0, 0.0]];
        let d = perron(&m, vec![]).unwrap();
        let golden_ratio = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((d.lambda - golden_ratio).abs() < 1e-12);
        assert!(d.residual <= 1e-12);
    }

    #[test]
    fn perron_similarity_invariance() {
        let m = array![[0.3, 1.7], [0.4, 0.9]];
        let d1 = perron(&m, vec![]).unwrap();
        // D M D^{-1} with D = diag(2, 5)
        let d = array![2.0, 5.0];
        let mut conj = m.clone();
        for i in 0..2 {
            for j in 0..2 {
                conj[[i, j]] = d[i] * m[[i, j]] / d[j];
            }
        }
        let d2 = perron(&conj, vec![]).unwrap();
        assert!((d1.lambda - d2.lambda).abs() < 1e-12);
    }

    #[test]
    fn perron_handles_periodic_pattern() {
        let m = array![[0.0, 2.0], [0.5, 0.0]];
        let d = perron(&m, vec![]).unwrap();
        assert!((d.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pressure_cases() {
        let s = full2();
        let zero = Potential::constant(s.clone(), 0.0).unwrap();
        assert!((pressure(&s, &zero).unwrap() - LN2).abs() < 1e-13);

        let g = golden();
        let zero = Potential::constant(g.clone(), 0.0).unwrap();
        let log_golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((pressure(&g, &zero).unwrap() - log_golden).abs() < 1e-13);
    }

    #[test]
    fn pressure_closed_form_full_shift() {
        // depth-1 phi on the full p-shift: P = log sum_i e^{phi_i}
        let s = Sft::full_shift(3).unwrap();
        let phi = Potential::per_symbol(s.clone(), vec![0.2, -1.3, 0.7]).unwrap();
        let expect = (0.2f64.exp() + (-1.3f64).exp() + 0.7f64.exp()).ln();
        assert!((pressure(&s, &phi).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn pressure_constant_shift_property() {
        let g = golden();
        let phi = Potential::per_symbol(g.clone(), vec![0.4, -0.8]).unwrap();
        let base = pressure(&g, &phi).unwrap();
        for c in [-2.0, 0.31, 1.7] {
            let shifted = pressure(&g, &phi.shifted(c)).unwrap();
            assert!((shifted - base - c).abs() < 1e-10);
        }
    }

    #[test]
    fn pressure_monotone_in_potential() {
        let g = golden();
        let lo = Potential::per_symbol(g.clone(), vec![0.1, -0.5]).unwrap();
        let hi = Potential::per_symbol(g.clone(), vec![0.2, -0.1]).unwrap();
        assert!(pressure(&g, &lo).unwrap() <= pressure(&g, &hi).unwrap() + 1e-12);
    }

    #[test]
    fn equilibrium_bernoulli_half() {
        let s = full2();
        let phi = Potential::constant(s.clone(), -LN2).unwrap();
        let m = equilibrium_state(&s, &phi).unwrap();
        assert!((m.stationary()[0] - 0.5).abs() < 1e-12);
        assert!((m.entropy() - LN2).abs() < 1e-12);
        assert!((m.cylinder_measure(&[0, 1, 1, 0]).unwrap() - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_golden_weights() {
        // phi = (-T0 log2, -2 T0 log2) with T0 = log2(golden ratio) gives
        // Bernoulli(x, x^2), x = (sqrt5 - 1)/2.
        let s = full2();
        let golden_ratio = (1.0 + 5f64.sqrt()) / 2.0;
        let t0 = golden_ratio.ln() / LN2;
        let phi = Potential::per_symbol(s.clone(), vec![-t0 * LN2, -2.0 * t0 * LN2]).unwrap();
        let m = equilibrium_state(&s, &phi).unwrap();
        let x = (5f64.sqrt() - 1.0) / 2.0;
        assert!((m.stationary()[0] - x).abs() < 1e-12);
        // frozen from direct evaluation: entropy of Bernoulli(x, x^2)
        assert!((m.entropy() - 0.6650183864440036).abs() < 1e-12);
    }

    #[test]
    fn variational_identity_randomized() {
        let g = golden();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let phi = Potential::new(g.clone(), 2, vals).unwrap();
            let m = equilibrium_state(&g, &phi).unwrap();
            let p = pressure(&g, &phi).unwrap();
            assert!((m.free_energy(&phi).unwrap() - p).abs() < 1e-10);
        }
    }

    #[test]
    fn equilibrium_invariant_under_constant_shift() {
        let g = golden();
        let phi = Potential::per_symbol(g.clone(), vec![0.3, -0.6]).unwrap();
        let m1 = equilibrium_state(&g, &phi).unwrap();
        let m2 = equilibrium_state(&g, &phi.shifted(1.234)).unwrap();
        for (a, b) in m1.stochastic().iter().zip(m2.stochastic().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in m1.stationary().iter().zip(m2.stationary().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_masses_sum_to_one() {
        let g = golden();
        let phi = Potential::per_symbol(g.clone(), vec![0.2, -0.4]).unwrap();
        let m = equilibrium_state(&g, &phi).unwrap();
        for n in 1..=8 {
            let total: f64 = g
                .cylinders(n)
                .unwrap()
                .iter()
                .map(|w| m.cylinder_measure(w.symbols()).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "depth {n}: total {total}");
        }
    }

    #[test]
    fn entropy_point_mass_is_zero() {
        let g = golden();
        // strongly tilted toward the fixed point 0
        let phi = Potential::per_symbol(g.clone(), vec![0.0, -40.0]).unwrap();
        let m = equilibrium_state(&g, &phi).unwrap();
        assert!(m.entropy() < 1e-10);
    }

    #[test]
    fn integrate_cases() {
        let s = full2();
        let c = Potential::constant(s.clone(), 3.25).unwrap();
        let phi = Potential::constant(s.clone(), -LN2).unwrap();
        let m = equilibrium_state(&s, &phi).unwrap();
        assert!((m.integrate(&c).unwrap() - 3.25).abs() < 1e-12);

        // weighted average, frozen from direct evaluation
        let golden_ratio = (1.0 + 5f64.sqrt()) / 2.0;
        let t0 = golden_ratio.ln() / LN2;
        let phi_b = Potential::per_symbol(s.clone(), vec![-t0 * LN2, -2.0 * t0 * LN2]).unwrap();
        let mb = equilibrium_state(&s, &phi_b).unwrap();
        let jac = Potential::per_symbol(s.clone(), vec![LN2, 2.0 * LN2]).unwrap();
        assert!((mb.integrate(&jac).unwrap() - 0.9579058443276840).abs() < 1e-12);
    }

    #[test]
    fn integrate_is_linear() {
        let g = golden();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let phi = Potential::per_symbol(g.clone(), vec![-0.2, -0.9]).unwrap();
        let m = equilibrium_state(&g, &phi).unwrap();
        for _ in 0..10 {
            let a = Potential::per_symbol(g.clone(), vec![rng.gen(), rng.gen()]).unwrap();
            let b = Potential::new(g.clone(), 2, vec![rng.gen(), rng.gen(), rng.gen()]).unwrap();
            let sum = a.combine(1.0, &b, 1.0).unwrap();
            let lhs = m.integrate(&sum).unwrap();
            let rhs = m.integrate(&a).unwrap() + m.integrate(&b).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_bernoulli_reduces_to_pointwise() {
        let s = full2();
        let phi = Potential::constant(s.clone(), -LN2).unwrap();
        let m = equilibrium_state(&s, &phi).unwrap();
        let h = Potential::per_symbol(s.clone(), vec![1.0, -1.0]).unwrap();
        let expect = 1.0; // centered, variance = sum pi h^2 = 1
        let one = asymptotic_variance(&m, &h, &h, VarianceConvention::OneSided).unwrap();
        let sym = asymptotic_variance(&m, &h, &h, VarianceConvention::Symmetric).unwrap();
        assert!((one - expect).abs() < 1e-12);
        assert!((sym - expect).abs() < 1e-12);
    }

    #[test]
    fn variance_system_b_frozen_value() {
        // System B at q = 0: psi = g + alpha(0) jac under Bernoulli(x, x^2).
        let s = full2();
        let x = (5f64.sqrt() - 1.0) / 2.0;
        let alpha0 = 1.0 / (2.0 - x);
        let g = Potential::constant(s.clone(), -LN2).unwrap();
        let jac = Potential::per_symbol(s.clone(), vec![LN2, 2.0 * LN2]).unwrap();
        let psi = g.combine(1.0, &jac, alpha0).unwrap();
        let t0 = -x.ln() / LN2;
        let phi0 = Potential::per_symbol(s.clone(), vec![-t0 * LN2, -2.0 * t0 * LN2]).unwrap();
        let m = equilibrium_state(&s, &phi0).unwrap();
        for conv in [VarianceConvention::OneSided, VarianceConvention::Symmetric] {
            let v = asymptotic_variance(&m, &psi, &psi, conv).unwrap();
            // frozen from the two-point closed form ln2^2 x^3/(2-x)^2
            assert!((v - 0.05938725851975495).abs() < 1e-12, "{conv:?}: {v}");
        }
    }

    #[test]
    fn variance_self_nonnegative_randomized() {
        let g = golden();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let phi = Potential::per_symbol(
                g.clone(),
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            )
            .unwrap();
            let m = equilibrium_state(&g, &phi).unwrap();
            let h = Potential::new(
                g.clone(),
                2,
                vec![
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ],
            )
            .unwrap();
            for conv in [VarianceConvention::OneSided, VarianceConvention::Symmetric] {
                let v = asymptotic_variance(&m, &h, &h, conv).unwrap();
                assert!(v >= -1e-12, "{conv:?}: {v}");
            }
        }
    }

    #[test]
    fn gibbs_certificate_bernoulli_exact() {
        let s = full2();
        let phi = Potential::constant(s.clone(), -LN2).unwrap();
        let cert = gibbs_certificate(&s, &phi, 10).unwrap();
        assert!((cert.worst_ratio_low - 1.0).abs() < 1e-10);
        assert!((cert.worst_ratio_high - 1.0).abs() < 1e-10);
        assert!(cert.holds());
        let (c1, c2) = cert.normalized();
        assert!(c2 > 1.0 && (c1 - 1.0 / c2).abs() < 1e-15);
    }

    #[test]
    fn gibbs_certificate_golden_mean_zero_pressure() {
        let g = golden();
        let zero =
            normalize_to_zero_pressure(&Potential::constant(g.clone(), 0.0).unwrap()).unwrap();
        let cert = gibbs_certificate(&g, &zero, 12).unwrap();
        assert!(cert.holds(), "{cert:?}");
        assert!(cert.c2 > cert.c1);
    }

    #[test]
    fn gibbs_certificate_depth2_potential() {
        let g = golden();
        let raw = Potential::new(g.clone(), 2, vec![0.3, -0.2, 0.1]).unwrap();
        let phi = normalize_to_zero_pressure(&raw).unwrap();
        let cert = gibbs_certificate(&g, &phi, 11).unwrap();
        assert!(cert.holds(), "{cert:?}");
    }

    #[test]
    fn gibbs_rejects_unnormalized() {
        let s = full2();
        let phi = Potential::constant(s.clone(), 0.3).unwrap();
        assert!(matches!(
            gibbs_certificate(&s, &phi, 6),
            Err(Error::NotZeroPressure { .. })
        ));
    }

    #[test]
    fn conformality_exact_at_zero_pressure() {
        let s = full2();
        let phi = Potential::constant(s.clone(), -LN2).unwrap();
        assert!(conformality_check(&s, &phi, 10).unwrap() <= 1e-12);

        let g = golden();
        let zero =
            normalize_to_zero_pressure(&Potential::constant(g.clone(), 0.0).unwrap()).unwrap();
        assert!(conformality_check(&g, &zero, 10).unwrap() <= 1e-12);
    }

    #[test]
    fn conformality_defect_grows_off_pressure_zero() {
        let s = full2();
        let g = Potential::constant(s.clone(), -LN2).unwrap();
        let jac =
            JacobianPotential::new(Potential::per_symbol(s.clone(), vec![LN2, 2.0 * LN2]).unwrap())
                .unwrap();
        let fam = PotentialFamily::new(g, jac).unwrap();
        // t = T(0) ± delta: defect increases with |t - T(0)|
        let t0 = 0.6942419136306173;
        let d0 = conformality_defect_unchecked(&s, &fam.phi(0.0, t0), 8).unwrap();
        let d1 = conformality_defect_unchecked(&s, &fam.phi(0.0, t0 + 0.05), 8).unwrap();
        let d2 = conformality_defect_unchecked(&s, &fam.phi(0.0, t0 + 0.15), 8).unwrap();
        assert!(d0 < 1e-10);
        assert!(d1 > 1e-3, "{d1}");
        assert!(d2 > d1);
    }

    #[test]
    fn eigendata_and_measure_serialize_with_word_states() {
        let g = golden();
        let phi = Potential::per_symbol(g.clone(), vec![0.1, -0.4]).unwrap();
        let (states, m) = weighted_matrix(&g, &phi).unwrap();
        let data = perron(&m, states).unwrap();
        let v: serde_json::Value = serde_json::to_value(&data).unwrap();
        assert_eq!(v["states"], serde_json::json!(["0", "1"]));
        assert!(v["lambda"].is_f64());
        assert_eq!(v["right"].as_array().unwrap().len(), 2);

        let nu = equilibrium_state(&g, &phi).unwrap();
        let v: serde_json::Value = serde_json::to_value(&nu).unwrap();
        assert_eq!(v["stochastic"].as_array().unwrap().len(), 2);
        assert_eq!(v["stochastic"][0].as_array().unwrap().len(), 2);
        assert_eq!(
            v["stochastic"][1][1],
            serde_json::json!(0.0),
            "forbidden edge"
        );
    }

    #[test]
    fn random_measure_is_stationary() {
        let g = golden();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let m = random_markov_measure(&g, 1, &mut rng).unwrap();
        let pi = m.stationary();
        let p = m.stochastic();
        for j in 0..2 {
            let back: f64 = (0..2).map(|i| pi[i] * p[[i, j]]).sum();
            assert!((back - pi[j]).abs() < 1e-12);
        }
        assert!((pi.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_measures_respect_variational_bound() {
        let g = golden();
        let phi = Potential::per_symbol(g.clone(), vec![-0.3, 0.4]).unwrap();
        let p = pressure(&g, &phi).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..50 {
            let m = random_markov_measure(&g, 1, &mut rng).unwrap();
            assert!(m.free_energy(&phi).unwrap() <= p + 1e-10);
        }
    }
}

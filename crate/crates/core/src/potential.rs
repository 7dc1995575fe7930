//! Locally constant potentials on cylinder sets.
//!
//! A depth-`m` potential assigns one real value to every admissible
//! `m`-cylinder. Every Hölder function is a uniform limit of such
//! potentials, and in this class pressure and equilibrium states are exact
//! matrix computations, so the library works with this class exclusively.
//!
//! The two-parameter family `phi_{q,t} = q·g − t·log|Jac f|` lives here as
//! [`PotentialFamily::phi`], with `g` normalized to zero pressure.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::{Sft, Word};

/// A locally constant real function determined by the leading `depth`
/// symbols of a sequence.
#[derive(Debug, Clone)]
pub struct Potential {
    sft: Arc<Sft>,
    depth: usize,
    cylinders: Vec<Word>,
    values: Vec<f64>,
    index: HashMap<Vec<u8>, usize>,
}

impl Potential {
    /// Build from one value per admissible `depth`-cylinder, in the order
    /// of [`Sft::cylinders`].
    pub fn new(sft: Arc<Sft>, depth: usize, values: Vec<f64>) -> Result<Potential> {
        let cylinders = sft.cylinders(depth)?;
        if values.len() != cylinders.len() {
            return Err(Error::BadPotentialTable {
                depth,
                detail: format!("{} values for {} cylinders", values.len(), cylinders.len()),
            });
        }
        for (w, &v) in cylinders.iter().zip(&values) {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(w.to_string()));
            }
        }
        let index = cylinders
            .iter()
            .enumerate()
            .map(|(i, w)| (w.0.clone(), i))
            .collect();
        Ok(Potential {
            sft,
            depth,
            cylinders,
            values,
            index,
        })
    }

    /// Constant potential of depth 1.
    pub fn constant(sft: Arc<Sft>, value: f64) -> Result<Potential> {
        let p = sft.alphabet_size();
        Potential::new(sft, 1, vec![value; p])
    }

    /// Depth-1 potential from one value per symbol.
    pub fn per_symbol(sft: Arc<Sft>, values: Vec<f64>) -> Result<Potential> {
        Potential::new(sft, 1, values)
    }

    pub fn sft(&self) -> &Arc<Sft> {
        &self.sft
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cylinders(&self) -> &[Word] {
        &self.cylinders
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value on the leading `depth`-cylinder of `symbols`.
    pub fn evaluate(&self, symbols: &[u8]) -> Result<f64> {
        if symbols.len() < self.depth {
            return Err(Error::WordTooShort {
                need: self.depth,
                got: symbols.len(),
            });
        }
        match self.index.get(&symbols[..self.depth]) {
            Some(&i) => Ok(self.values[i]),
            None => Err(Error::InadmissibleWord),
        }
    }

    /// Birkhoff sum `sum_{k=0}^{n-1} phi(sigma^k omega)` along a symbol
    /// stream. Needs `n + depth - 1` symbols.
    pub fn birkhoff_sum(&self, symbols: &[u8], n: usize) -> Result<f64> {
        let need = n + self.depth - 1;
        if symbols.len() < need {
            return Err(Error::StreamExhausted {
                need,
                got: symbols.len(),
            });
        }
        let mut acc = 0.0;
        for k in 0..n {
            acc += self.evaluate(&symbols[k..])?;
        }
        Ok(acc)
    }

    /// Sum of the potential over all `depth`-windows of one period of a
    /// cyclic word (windows wrap around).
    pub fn cyclic_sum(&self, cycle: &[u8]) -> Result<f64> {
        let n = cycle.len();
        let extended: Vec<u8> = cycle
            .iter()
            .chain(cycle.iter())
            .copied()
            .take(n + self.depth - 1)
            .collect();
        self.birkhoff_sum(&extended, n)
    }

    /// Add a constant to every value.
    pub fn shifted(&self, c: f64) -> Potential {
        let mut out = self.clone();
        for v in &mut out.values {
            *v += c;
        }
        out
    }

    /// Pointwise linear combination `a·self + b·other` on a common depth.
    pub fn combine(&self, a: f64, other: &Potential, b: f64) -> Result<Potential> {
        if !Arc::ptr_eq(&self.sft, &other.sft) && self.sft.transitions() != other.sft.transitions()
        {
            return Err(Error::ShiftMismatch);
        }
        let depth = self.depth.max(other.depth);
        let lhs = self.refine(depth)?;
        let rhs = other.refine(depth)?;
        let values = lhs
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Potential::new(self.sft.clone(), depth, values)
    }

    /// Re-express at a deeper cylinder depth; the function on sequences is
    /// unchanged.
    pub fn refine(&self, new_depth: usize) -> Result<Potential> {
        if new_depth < self.depth {
            return Err(Error::DepthTooLarge(self.depth, new_depth));
        }
        if new_depth == self.depth {
            return Ok(self.clone());
        }
        let cylinders = self.sft.cylinders(new_depth)?;
        let values = cylinders
            .iter()
            .map(|w| self.evaluate(w.symbols()))
            .collect::<Result<Vec<f64>>>()?;
        Potential::new(self.sft.clone(), new_depth, values)
    }

    /// JSON form `{"depth": m, "values": {"word": v, ...}}` with
    /// lexicographically sorted keys.
    pub fn to_json(&self) -> String {
        let repr = PotentialRepr {
            depth: self.depth,
            values: self
                .cylinders
                .iter()
                .zip(&self.values)
                .map(|(w, &v)| (w.to_symbol_string(), v))
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("serializing a table cannot fail")
    }

    /// Parse the JSON form; rejects entries for inadmissible words and
    /// incomplete tables.
    pub fn from_json(sft: Arc<Sft>, s: &str) -> Result<Potential> {
        let repr: PotentialRepr =
            serde_json::from_str(s).map_err(|e| Error::BadPotentialTable {
                depth: 0,
                detail: e.to_string(),
            })?;
        let cylinders = sft.cylinders(repr.depth)?;
        let mut values = vec![f64::NAN; cylinders.len()];
        let index: HashMap<String, usize> = cylinders
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_symbol_string(), i))
            .collect();
        for (key, v) in &repr.values {
            match index.get(key.as_str()) {
                Some(&i) => values[i] = *v,
                None => {
                    return Err(Error::BadPotentialTable {
                        depth: repr.depth,
                        detail: format!("entry for inadmissible word {key}"),
                    })
                }
            }
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::BadPotentialTable {
                depth: repr.depth,
                detail: format!("missing entry for cylinder {}", cylinders[i]),
            });
        }
        Potential::new(sft, repr.depth, values)
    }
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    depth: usize,
    values: std::collections::BTreeMap<String, f64>,
}

/// A potential whose values are strictly positive, holding `log|Jac f|`
/// for a uniformly expanding map.
#[derive(Debug, Clone)]
pub struct JacobianPotential {
    base: Potential,
}

impl JacobianPotential {
    pub fn new(base: Potential) -> Result<JacobianPotential> {
        for (w, &v) in base.cylinders.iter().zip(&base.values) {
            if v <= 0.0 {
                return Err(Error::NotExpanding {
                    cylinder: w.to_string(),
                    value: v,
                });
            }
        }
        Ok(JacobianPotential { base })
    }

    pub fn potential(&self) -> &Potential {
        &self.base
    }

    pub fn min_value(&self) -> f64 {
        self.base.min_value()
    }

    pub fn max_value(&self) -> f64 {
        self.base.max_value()
    }
}

/// The pair `(g, log|Jac f|)` over one shift at a common depth, with `g`
/// normalized to zero pressure. The shift that normalized `g` is stored so
/// downstream code never re-normalizes silently.
#[derive(Debug, Clone)]
pub struct PotentialFamily {
    sft: Arc<Sft>,
    g: Potential,
    jac: JacobianPotential,
    depth: usize,
    normalization_shift: f64,
}

impl PotentialFamily {
    /// Normalize `g_raw` to zero pressure, refine both potentials to a
    /// common depth, and assemble the family.
    pub fn new(g_raw: Potential, jac: JacobianPotential) -> Result<PotentialFamily> {
        let sft = g_raw.sft.clone();
        if sft.transitions() != jac.base.sft.transitions() {
            return Err(Error::ShiftMismatch);
        }
        let shift = -crate::transfer::pressure(&sft, &g_raw)?;
        let depth = g_raw.depth.max(jac.base.depth);
        let g = g_raw.shifted(shift).refine(depth)?;
        let jac_refined = JacobianPotential::new(jac.base.refine(depth)?)?;
        Ok(PotentialFamily {
            sft,
            g,
            jac: jac_refined,
            depth,
            normalization_shift: shift,
        })
    }

    pub fn sft(&self) -> &Arc<Sft> {
        &self.sft
    }

    pub fn g(&self) -> &Potential {
        &self.g
    }

    pub fn jac(&self) -> &JacobianPotential {
        &self.jac
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The constant subtracted from the raw `g` during construction.
    pub fn normalization_shift(&self) -> f64 {
        self.normalization_shift
    }

    /// The family member `phi_{q,t} = q·g − t·log|Jac f|`.
    pub fn phi(&self, q: f64, t: f64) -> Potential {
        self.g
            .combine(q, &self.jac.base, -t)
            .expect("family members share shift and depth")
    }

    /// Pointwise bounds of the ratio `−g/log|Jac f|` over cylinders; the
    /// level parameter alpha always lies inside them.
    pub fn pointwise_ratio_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (&gv, &av) in self.g.values.iter().zip(&self.jac.base.values) {
            let r = -gv / av;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }
}

/// `g_raw − P(g_raw)`: the zero-pressure representative of `g_raw`.
pub fn normalize_to_zero_pressure(g_raw: &Potential) -> Result<Potential> {
    let p = crate::transfer::pressure(g_raw.sft(), g_raw)?;
    Ok(g_raw.shifted(-p))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn full2() -> Arc<Sft> {
        Sft::full_shift(2).unwrap()
    }

    fn golden() -> Arc<Sft> {
        Sft::validate(vec![vec![1, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn evaluate_constant_and_depth1() {
        let s = full2();
        let c = Potential::constant(s.clone(), 2.5).unwrap();
        assert_eq!(c.evaluate(&[0, 1, 0]).unwrap(), 2.5);
        let p = Potential::per_symbol(s, vec![-1.0, 3.0]).unwrap();
        assert_eq!(p.evaluate(&[1, 0]).unwrap(), 3.0);
    }

    #[test]
    fn evaluate_depth2_golden_mean() {
        let s = golden();
        // cylinders: 00, 01, 10
        let p = Potential::new(s, 2, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(p.evaluate(&[0, 1, 0]).unwrap(), 0.2);
        assert!(matches!(p.evaluate(&[1]), Err(Error::WordTooShort { .. })));
        assert!(matches!(
            p.evaluate(&[1, 1, 0]),
            Err(Error::InadmissibleWord)
        ));
    }

    #[test]
    fn birkhoff_sum_cases() {
        let s = full2();
        let c = Potential::constant(s.clone(), 1.5).unwrap();
        assert_eq!(c.birkhoff_sum(&[0; 8], 8).unwrap(), 12.0);

        let p = Potential::per_symbol(s.clone(), vec![2.0, 5.0]).unwrap();
        assert_eq!(p.birkhoff_sum(&[0, 1, 0, 1], 4).unwrap(), 14.0);

        // 2 log2 + 2 log4, frozen from direct summation
        let q = Potential::per_symbol(s, vec![LN2, 2.0 * LN2]).unwrap();
        let got = q.birkhoff_sum(&[0, 0, 1, 1], 4).unwrap();
        assert!((got - 4.158883083359672).abs() < 1e-12);
    }

    #[test]
    fn birkhoff_sum_stream_exhausted() {
        let s = full2();
        let p = Potential::new(s, 2, vec![1.0; 4]).unwrap();
        assert!(matches!(
            p.birkhoff_sum(&[0, 1, 0], 3),
            Err(Error::StreamExhausted { need: 4, got: 3 })
        ));
    }

    #[test]
    fn normalize_full_shift() {
        let s = full2();
        let zero = Potential::constant(s, 0.0).unwrap();
        let g = normalize_to_zero_pressure(&zero).unwrap();
        // P(0) = htop = log 2 on the full 2-shift
        assert!((g.values()[0] + LN2).abs() < 1e-12);
        let again = normalize_to_zero_pressure(&g).unwrap();
        assert!(
            (again.values()[0] - g.values()[0]).abs() < 1e-11,
            "idempotent"
        );
    }

    #[test]
    fn normalize_golden_mean() {
        let s = golden();
        let zero = Potential::constant(s, 0.0).unwrap();
        let g = normalize_to_zero_pressure(&zero).unwrap();
        let log_golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((g.values()[0] + log_golden).abs() < 1e-12);
    }

    #[test]
    fn family_phi_identities() {
        let s = full2();
        let g = Potential::constant(s.clone(), -LN2).unwrap();
        let jac = JacobianPotential::new(Potential::constant(s, LN2).unwrap()).unwrap();
        let fam = PotentialFamily::new(g.clone(), jac).unwrap();

        // phi_{1,0} = g
        let phi10 = fam.phi(1.0, 0.0);
        for (a, b) in phi10.values().iter().zip(fam.g().values()) {
            assert!((a - b).abs() < 1e-15);
        }
        // phi_{0,0} = 0
        assert!(fam.phi(0.0, 0.0).values().iter().all(|v| v.abs() < 1e-15));
        // phi_{0,1} = -jac
        for v in fam.phi(0.0, 1.0).values() {
            assert!((v + LN2).abs() < 1e-15);
        }
    }

    #[test]
    fn family_phi_affine_in_q() {
        let s = golden();
        let g = normalize_to_zero_pressure(
            &Potential::per_symbol(s.clone(), vec![-0.3, -0.9]).unwrap(),
        )
        .unwrap();
        let jac = JacobianPotential::new(Potential::per_symbol(s, vec![LN2, 3f64.ln()]).unwrap())
            .unwrap();
        let fam = PotentialFamily::new(g, jac).unwrap();
        let (q1, q2, t) = (0.7, -1.9, 0.4);
        let lhs = fam.phi(q1 + q2, t);
        let rhs = fam.phi(q1, t).combine(1.0, fam.g(), q2).unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refine_preserves_evaluate() {
        let s = golden();
        let p = Potential::per_symbol(s.clone(), vec![0.25, -1.5]).unwrap();
        let r = p.refine(3).unwrap();
        assert_eq!(r.depth(), 3);
        for w in s.cylinders(5).unwrap() {
            assert_eq!(
                p.evaluate(w.symbols()).unwrap(),
                r.evaluate(w.symbols()).unwrap()
            );
        }
        // no-op refine
        let same = p.refine(1).unwrap();
        assert_eq!(same.values(), p.values());
    }

    #[test]
    fn jacobian_requires_expansion() {
        let s = full2();
        let bad = Potential::per_symbol(s, vec![LN2, 0.0]).unwrap();
        assert!(matches!(
            JacobianPotential::new(bad),
            Err(Error::NotExpanding { .. })
        ));
    }

    #[test]
    fn potential_json_round_trip_and_rejection() {
        let s = golden();
        let p = Potential::new(s.clone(), 2, vec![0.5, -0.25, 1.0]).unwrap();
        let back = Potential::from_json(s.clone(), &p.to_json()).unwrap();
        assert_eq!(back.values(), p.values());

        let bad = r#"{"depth": 2, "values": {"00": 1.0, "01": 2.0, "10": 3.0, "11": 4.0}}"#;
        assert!(
            Potential::from_json(s.clone(), bad).is_err(),
            "inadmissible word 11"
        );
        let missing = r#"{"depth": 2, "values": {"00": 1.0, "01": 2.0}}"#;
        assert!(
            Potential::from_json(s, missing).is_err(),
            "missing cylinder"
        );
    }
}

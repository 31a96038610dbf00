//! Expectation functional of the infinite chain of singlet pairs, evaluated
//! exactly on finitely supported observables.
//!
//! The chain is a product state across qubit pairs: all but finitely many
//! pairs carry the reference singlet (|01⟩−|10⟩)/√2, and an observable is a
//! finite map from pair index to a 4×4 block (implicit identity elsewhere).
//! Expectations therefore factor into a finite product of 4×4 traces, which
//! is also the exact value of the limit over growing windows: once the window
//! covers the support, enlarging it multiplies by 1. Linear combinations of
//! such product terms extend by linearity; the type carries one term.
//!
//! Pair indices are arbitrary-precision, so observables may sit at any
//! distance down the chain without an addressable Hilbert space existing.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_bigint::BigUint;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::op::{Operator, C64};
use crate::{par, TOL_SPECTRAL};

/// (|01⟩−|10⟩)/√2 in the pair basis |alice, bob⟩.
pub fn singlet_vector() -> DVector<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![
        Complex::new(0.0, 0.0),
        Complex::new(r, 0.0),
        Complex::new(-r, 0.0),
        Complex::new(0.0, 0.0),
    ])
}

pub fn singlet_projector() -> Operator {
    let v = singlet_vector();
    Operator::outer(&v, &v, &[2, 2]).expect("4 = 2·2")
}

/// Finitely supported observable: pair index → 4×4 block on that pair's
/// Alice⊗Bob factors. Rebinding an index replaces the block.
#[derive(Debug, Clone, Default)]
pub struct ChainObservable {
    support: BTreeMap<BigUint, Operator>,
}

impl ChainObservable {
    /// The identity (empty support).
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with_block(mut self, pair: impl Into<BigUint>, block: Operator) -> Result<Self> {
        self.support.insert(pair.into(), check_pair_block(block)?);
        Ok(self)
    }

    pub fn support(&self) -> &BTreeMap<BigUint, Operator> {
        &self.support
    }

    pub fn canonical_json(&self) -> String {
        support_to_json(&self.support)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let support = support_from_json(text)?;
        for block in support.values() {
            check_pair_block(block.clone())?;
        }
        Ok(Self { support })
    }
}

/// Chain state: the default singlet everywhere, with finitely many pairs
/// overridden by explicit densities.
#[derive(Debug, Clone, Default)]
pub struct ChainState {
    overrides: BTreeMap<BigUint, Operator>,
}

impl ChainState {
    pub fn default_chain() -> Self {
        Self::default()
    }

    pub fn with_override(mut self, pair: impl Into<BigUint>, density: Operator) -> Result<Self> {
        let density = check_pair_block(density)?.checked_density(TOL_SPECTRAL)?;
        self.overrides.insert(pair.into(), density);
        Ok(self)
    }

    pub fn overrides(&self) -> &BTreeMap<BigUint, Operator> {
        &self.overrides
    }

    pub fn is_default(&self) -> bool {
        self.overrides.is_empty()
    }

    /// The exact 4×4 density at a pair.
    pub fn restrict(&self, pair: &BigUint) -> Operator {
        self.overrides
            .get(pair)
            .cloned()
            .unwrap_or_else(singlet_projector)
    }

    pub fn canonical_json(&self) -> String {
        support_to_json(&self.overrides)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw = support_from_json(text)?;
        let mut overrides = BTreeMap::new();
        for (k, block) in raw {
            let density = check_pair_block(block)?.checked_density(TOL_SPECTRAL)?;
            overrides.insert(k, density);
        }
        Ok(Self { overrides })
    }
}

fn check_pair_block(block: Operator) -> Result<Operator> {
    if block.rows() != 4 || block.cols() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "pair block must be 4x4, got {}x{}",
            block.rows(),
            block.cols()
        )));
    }
    block.with_dims(&[2, 2])
}

fn expect_terms(state: &ChainState, obs: &ChainObservable) -> Vec<C64> {
    let entries: Vec<(&BigUint, &Operator)> = obs.support.iter().collect();
    par::map_range(entries.len(), |i| {
        let (pair, block) = entries[i];
        block
            .expectation_in(&state.restrict(pair))
            .expect("blocks are 4x4 by construction")
    })
}

/// ω(A): the product over the observable's support of per-pair expectations.
/// Pairs outside the support contribute exactly 1, so this equals the
/// growing-window limit.
pub fn expect(state: &ChainState, obs: &ChainObservable) -> C64 {
    expect_terms(state, obs).into_iter().product()
}

/// Sequential twin of [`expect`].
pub fn expect_seq(state: &ChainState, obs: &ChainObservable) -> C64 {
    let entries: Vec<(&BigUint, &Operator)> = obs.support.iter().collect();
    par::map_range_seq(entries.len(), |i| {
        let (pair, block) = entries[i];
        block
            .expectation_in(&state.restrict(pair))
            .expect("blocks are 4x4 by construction")
    })
    .into_iter()
    .product()
}

/// Splits the default chain into the even- and odd-pair subchains. Pair j of
/// the first half is pair 2j of the original, pair j of the second half is
/// pair 2j+1; both halves are again the default chain, so every finite-window
/// expectation is preserved verbatim under the relabeling.
pub fn split_even_odd(state: &ChainState) -> Result<(ChainState, ChainState)> {
    if !state.is_default() {
        return Err(Error::InvalidArgument(
            "only the default chain splits into two copies of itself".into(),
        ));
    }
    Ok((ChainState::default_chain(), ChainState::default_chain()))
}

fn json_num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite float")
}

fn support_to_json(map: &BTreeMap<BigUint, Operator>) -> String {
    // Hand-rolled so keys stay in numeric order; serde maps would sort the
    // decimal strings lexicographically.
    let mut out = String::from("{\"support\":{");
    let mut first = true;
    for (k, block) in map {
        if !first {
            out.push(',');
        }
        first = false;
        out.push('"');
        out.push_str(&k.to_string());
        out.push_str("\":[");
        for r in 0..4 {
            for c in 0..4 {
                if r + c > 0 {
                    out.push(',');
                }
                let z = block.entry(r, c);
                out.push('[');
                out.push_str(&json_num(z.re));
                out.push(',');
                out.push_str(&json_num(z.im));
                out.push(']');
            }
        }
        out.push(']');
    }
    out.push_str("}}");
    out
}

fn support_from_json(text: &str) -> Result<BTreeMap<BigUint, Operator>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("bad json: {e}")))?;
    let obj = value
        .as_object()
        .filter(|m| m.len() == 1)
        .and_then(|m| m.get("support"))
        .and_then(|v| v.as_object())
        .ok_or_else(|| Error::Malformed("expected {\"support\": {...}}".into()))?;
    let mut map = BTreeMap::new();
    for (key, block) in obj {
        let pair: BigUint = key
            .parse()
            .map_err(|_| Error::Malformed(format!("pair index {key:?} is not a nonnegative integer")))?;
        let entries = block
            .as_array()
            .filter(|a| a.len() == 16)
            .ok_or_else(|| Error::Malformed("block must be 16 [re, im] pairs".into()))?;
        let mut mat = nalgebra::DMatrix::<C64>::zeros(4, 4);
        for (pos, entry) in entries.iter().enumerate() {
            let pairv = entry
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Malformed("matrix entry must be [re, im]".into()))?;
            let re = pairv[0]
                .as_f64()
                .ok_or_else(|| Error::Malformed("non-numeric entry".into()))?;
            let im = pairv[1]
                .as_f64()
                .ok_or_else(|| Error::Malformed("non-numeric entry".into()))?;
            mat[(pos / 4, pos % 4)] = Complex::new(re, im);
        }
        map.insert(pair, Operator::from_matrix_with_dims(mat, vec![2, 2])?);
    }
    Ok(map)
}

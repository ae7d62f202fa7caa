use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusion indicators over `p ≤ 64` covariates. Bit `j` is covariate
/// `j + 1`; the intercept is implicit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Model {
    bits: u64,
    p: u8,
}

pub const MAX_P: usize = 64;

#[inline]
fn mask(p: usize) -> u64 {
    if p == 64 {
        u64::MAX
    } else {
        (1u64 << p) - 1
    }
}

impl Model {
    pub fn empty(p: usize) -> Result<Self> {
        Model::from_bits(0, p)
    }

    pub fn full(p: usize) -> Result<Self> {
        Model::from_bits(mask(p.min(64)), p)
    }

    pub fn from_bits(bits: u64, p: usize) -> Result<Self> {
        if p > MAX_P {
            return Err(Error::invalid(format!("p = {p} exceeds {MAX_P}")));
        }
        if bits & !mask(p) != 0 {
            return Err(Error::invalid(format!("bits {bits:#x} set beyond p = {p}")));
        }
        Ok(Model { bits, p: p as u8 })
    }

    pub fn from_gamma(gamma: &[bool]) -> Result<Self> {
        let bits = gamma.iter().enumerate().fold(0u64, |b, (j, &g)| b | ((g as u64) << j));
        if gamma.len() > MAX_P {
            return Err(Error::invalid(format!("p = {} exceeds {MAX_P}", gamma.len())));
        }
        Model::from_bits(bits, gamma.len())
    }

    /// Parses a 0/1 string such as `"110"` (first character is γ₁).
    pub fn from_gamma_str(s: &str) -> Result<Self> {
        let gamma = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("'{other}' is not a 0/1 indicator"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Model::from_gamma(&gamma)
    }

    pub fn from_hex(s: &str, p: usize) -> Result<Self> {
        let bits = u64::from_str_radix(s.trim().trim_start_matches("0x"), 16).map_err(|e| Error::Parse {
            location: format!("model '{s}'"),
            detail: e.to_string(),
        })?;
        Model::from_bits(bits, p)
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn p(self) -> usize {
        self.p as usize
    }

    /// γ_{j+1}.
    #[inline]
    pub fn includes(self, j: usize) -> bool {
        (self.bits >> j) & 1 == 1
    }

    #[inline]
    pub fn size(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn flip(self, j: usize) -> Model {
        debug_assert!(j < self.p());
        Model { bits: self.bits ^ (1u64 << j), p: self.p }
    }

    pub fn flip_set(self, idx: &[usize]) -> Model {
        idx.iter().fold(self, |m, &j| m.flip(j))
    }

    #[inline]
    pub fn hamming(self, other: Model) -> usize {
        (self.bits ^ other.bits).count_ones() as usize
    }

    /// Design-column indices: the intercept 0 followed by `j + 1` for each
    /// included covariate.
    pub fn active_columns(self) -> Vec<usize> {
        let mut cols = Vec::with_capacity(self.size() + 1);
        cols.push(0);
        cols.extend((0..self.p()).filter(|&j| self.includes(j)).map(|j| j + 1));
        cols
    }

    pub fn gamma(self) -> Vec<bool> {
        (0..self.p()).map(|j| self.includes(j)).collect()
    }

    pub fn to_hex(self) -> String {
        format!("{:x}", self.bits)
    }

    /// All `2^p` models in bit order.
    pub fn all(p: usize) -> Result<impl Iterator<Item = Model>> {
        if p >= 63 {
            return Err(Error::invalid(format!("cannot iterate 2^{p} models")));
        }
        let p8 = p as u8;
        Ok((0..(1u64 << p)).map(move |bits| Model { bits, p: p8 }))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.bits)
    }
}

/// Independent Bernoulli(q) inclusion prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrior {
    q: f64,
}

impl Default for ModelPrior {
    fn default() -> Self {
        ModelPrior { q: 0.5 }
    }
}

impl ModelPrior {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("q must lie in (0, 1), got {q}")));
        }
        Ok(ModelPrior { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn log_prior(&self, model: Model) -> f64 {
        let k = model.size() as f64;
        let p = model.p() as f64;
        k * self.q.ln() + (p - k) * (1.0 - self.q).ln()
    }
}

pub fn model_log_prior(model: Model, prior: &ModelPrior) -> f64 {
    prior.log_prior(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip_and_columns() {
        let m = Model::from_gamma_str("1011").unwrap();
        assert_eq!(m.bits(), 0b1101);
        assert_eq!(m.to_hex(), "d");
        assert_eq!(Model::from_hex("d", 4).unwrap(), m);
        assert_eq!(m.active_columns(), vec![0, 1, 3, 4]);
        assert!(Model::from_bits(0b10000, 4).is_err());
        assert_eq!(Model::full(64).unwrap().size(), 64);
    }

    #[test]
    fn prior_values() {
        let m = Model::from_gamma_str("100").unwrap();
        let lp = ModelPrior::new(0.2).unwrap().log_prior(m);
        assert!((lp - (0.2f64.ln() + 2.0 * 0.8f64.ln())).abs() < 1e-15);
        let any = Model::from_bits(0x1234, 15).unwrap();
        assert!((ModelPrior::default().log_prior(any) - 15.0 * 0.5f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn prior_normalises() {
        let prior = ModelPrior::new(0.3).unwrap();
        let s: f64 = Model::all(10).unwrap().map(|m| prior.log_prior(m).exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

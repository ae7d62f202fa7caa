use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub best_log_evidence: f64,
    pub visits: u64,
    /// Coefficients behind the current best evidence.
    pub last_beta: Option<Vec<f64>>,
    /// Step-schedule position reached by the most recent SGD run.
    pub sgd_position: usize,
}

/// Best-so-far log evidence per visited model, with visit counts.
///
/// A model absent from the store has no estimate yet; the first recorded
/// value always replaces that state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VisitedModelStore {
    p: usize,
    entries: HashMap<Model, StoreEntry>,
}

impl VisitedModelStore {
    pub fn new(p: usize) -> Self {
        VisitedModelStore { p, entries: HashMap::new() }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, model: &Model) -> Option<&StoreEntry> {
        self.entries.get(model)
    }

    pub fn best(&self, model: &Model) -> Option<f64> {
        self.entries.get(model).map(|e| e.best_log_evidence)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Model, &StoreEntry)> {
        self.entries.iter()
    }

    /// Entries ordered by model bits.
    pub fn sorted(&self) -> Vec<(Model, &StoreEntry)> {
        let mut v: Vec<_> = self.entries.iter().map(|(m, e)| (*m, e)).collect();
        v.sort_by_key(|(m, _)| *m);
        v
    }

    /// Max-updates the model's evidence and counts the visit. Returns true
    /// when the value became the new maximum.
    pub fn record_visit(&mut self, model: Model, log_evidence: f64, beta: Option<&[f64]>) -> Result<bool> {
        if !log_evidence.is_finite() {
            return Err(Error::invalid(format!("log evidence {log_evidence} for model {model} is not finite")));
        }
        if model.p() != self.p {
            return Err(Error::invalid(format!("model has p = {}, store has p = {}", model.p(), self.p)));
        }
        match self.entries.get_mut(&model) {
            Some(e) => {
                e.visits += 1;
                if log_evidence > e.best_log_evidence {
                    e.best_log_evidence = log_evidence;
                    if let Some(b) = beta {
                        e.last_beta = Some(b.to_vec());
                    }
                    Ok(true)
                } else {
                    Ok(false)
                }
            }
            None => {
                self.entries.insert(
                    model,
                    StoreEntry {
                        best_log_evidence: log_evidence,
                        visits: 1,
                        last_beta: beta.map(<[f64]>::to_vec),
                        sgd_position: 0,
                    },
                );
                Ok(true)
            }
        }
    }

    /// Counts a visit without a new evidence value (memoized lookups).
    pub(crate) fn bump_visits(&mut self, model: &Model) {
        if let Some(e) = self.entries.get_mut(model) {
            e.visits += 1;
        }
    }

    pub fn set_sgd_position(&mut self, model: &Model, position: usize) {
        if let Some(e) = self.entries.get_mut(model) {
            e.sgd_position = position;
        }
    }

    /// Elementwise max of evidence, sum of visits.
    pub fn merge(&mut self, other: &VisitedModelStore) {
        for (m, o) in &other.entries {
            match self.entries.get_mut(m) {
                Some(e) => {
                    e.visits += o.visits;
                    if o.best_log_evidence > e.best_log_evidence {
                        e.best_log_evidence = o.best_log_evidence;
                        e.last_beta = o.last_beta.clone();
                    }
                    e.sgd_position = e.sgd_position.max(o.sgd_position);
                }
                None => {
                    self.entries.insert(*m, o.clone());
                }
            }
        }
    }

    /// One line per model: hex mask, best log evidence (17 significant
    /// digits), visit count; tab separated, sorted by mask.
    pub fn snapshot(&self) -> String {
        let mut s = String::new();
        for (m, e) in self.sorted() {
            let _ = writeln!(s, "{}\t{:.16e}\t{}", m.to_hex(), e.best_log_evidence, e.visits);
        }
        s
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.snapshot())?;
        Ok(())
    }

    pub fn parse_snapshot(text: &str, p: usize) -> Result<Self> {
        let mut store = VisitedModelStore::new(p);
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let loc = || format!("snapshot line {}", lineno + 1);
            let mut f = line.split('\t');
            let (Some(h), Some(v), Some(c), None) = (f.next(), f.next(), f.next(), f.next()) else {
                return Err(Error::Parse { location: loc(), detail: "expected 3 tab-separated fields".into() });
            };
            let model = Model::from_hex(h, p)?;
            let best_log_evidence: f64 = v
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse { location: loc(), detail: e.to_string() })?;
            let visits: u64 = c
                .parse()
                .map_err(|e: std::num::ParseIntError| Error::Parse { location: loc(), detail: e.to_string() })?;
            store.entries.insert(model, StoreEntry { best_log_evidence, visits, last_beta: None, sgd_position: 0 });
        }
        Ok(store)
    }
}

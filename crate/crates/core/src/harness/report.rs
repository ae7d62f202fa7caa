//! Output files shared by the subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::{Model, PosteriorEstimates, VisitedModelStore};
use crate::submcmc::CurvePoint;

pub const ESTIMATES_HEADER: &str = "model_hex,log_evidence,visits,rm_prob,mc_prob";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInclusion {
    pub seed: u64,
    pub rm: Vec<f64>,
    pub mc: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoreSummary {
    pub models: usize,
    pub total_visits: u64,
    pub best_model_hex: Option<String>,
    pub best_log_evidence: Option<f64>,
}

impl StoreSummary {
    pub fn of(store: &VisitedModelStore) -> Self {
        let best = store.sorted().into_iter().next();
        StoreSummary {
            models: store.len(),
            total_visits: store.iter().map(|(_, e)| e.visits).sum(),
            best_model_hex: best.as_ref().map(|(m, _)| m.to_hex()),
            best_log_evidence: best.map(|(_, e)| e.best_log_evidence),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: serde_json::Value,
    pub runs: Vec<RunInclusion>,
    pub rmse_curves: Option<Vec<Vec<CurvePoint>>>,
    pub total_seconds: f64,
    pub store: StoreSummary,
}

impl RunReport {
    pub fn validate(&self) -> Result<()> {
        for r in &self.runs {
            if r.rm.iter().chain(&r.mc).any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!("run {} has a probability outside [0, 1]", r.seed)));
            }
            if !(r.seconds >= 0.0) {
                return Err(Error::invalid("negative timing"));
            }
        }
        if !(self.total_seconds >= 0.0) {
            return Err(Error::invalid("negative timing"));
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        self.validate()?;
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Estimates file: one row per model that has evidence or MC mass, ordered
/// by log evidence (descending) then hex. `log_evidence` is empty and
/// `visits` 0 for models without a stored value.
pub fn estimates_csv(store: &VisitedModelStore, rm: &PosteriorEstimates, mc: Option<&PosteriorEstimates>) -> String {
    let mut s = String::from(ESTIMATES_HEADER);
    s.push('\n');
    let mut seen = BTreeSet::new();
    for (m, e) in store.sorted() {
        seen.insert(m);
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            m.to_hex(),
            e.best_log_evidence,
            e.visits,
            rm.prob(&m),
            mc.map_or(0.0, |mc| mc.prob(&m))
        );
    }
    if let Some(mc) = mc {
        for (m, p) in &mc.model_probs {
            if !seen.contains(m) {
                let _ = writeln!(s, "{},,0,{},{}", m.to_hex(), rm.prob(m), p);
            }
        }
    }
    s
}

/// Estimates file for a full enumeration (`log_evidence` indexed by bits).
pub fn enumeration_csv(p: usize, log_evidence: &[f64], rm: &PosteriorEstimates) -> String {
    let mut order: Vec<usize> = (0..log_evidence.len()).collect();
    order.sort_by(|&a, &b| log_evidence[b].total_cmp(&log_evidence[a]).then(a.cmp(&b)));
    let mut s = String::from(ESTIMATES_HEADER);
    s.push('\n');
    for bits in order {
        let m = Model::from_bits(bits as u64, p).expect("bits < 2^p");
        let v = log_evidence[bits];
        let lv = if v.is_finite() { v.to_string() } else { String::new() };
        let _ = writeln!(s, "{},{lv},0,{},0", m.to_hex(), rm.prob(&m));
    }
    s
}

/// `index,name,rm_inclusion,mc_inclusion`.
pub fn inclusion_csv(names: &[String], rm: &[f64], mc: Option<&[f64]>) -> String {
    let mut s = String::from("index,name,rm_inclusion,mc_inclusion\n");
    for (j, name) in names.iter().enumerate() {
        let mcv = mc.map_or(String::new(), |m| m[j].to_string());
        let _ = writeln!(s, "{},{name},{},{mcv}", j + 1, rm[j]);
    }
    s
}

/// Reads an estimates file back into per-model probabilities.
pub fn read_estimates(path: &Path, p: usize) -> Result<Vec<(Model, f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != ESTIMATES_HEADER {
        return Err(Error::Load(format!("{} is not an estimates file (header '{}')", path.display(), header.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let loc = |c: &str| format!("{} row {}, column {c}", path.display(), i + 2);
        let m = Model::from_hex(&rec[0], p).map_err(|e| Error::Parse { location: loc("model_hex"), detail: e.to_string() })?;
        let num = |idx: usize, c: &str| -> Result<f64> {
            rec[idx].parse::<f64>().map_err(|e| Error::Parse { location: loc(c), detail: e.to_string() })
        };
        out.push((m, num(3, "rm_prob")?, num(4, "mc_prob")?));
    }
    Ok(out)
}

/// Inclusion probabilities implied by an estimates file column.
pub fn inclusion_from_rows(p: usize, rows: &[(Model, f64)]) -> Vec<f64> {
    let mut inc = vec![0.0; p];
    let mut by_model: BTreeMap<Model, f64> = BTreeMap::new();
    for (m, w) in rows {
        *by_model.entry(*m).or_default() += w;
    }
    for (m, w) in by_model {
        for (j, v) in inc.iter_mut().enumerate() {
            if m.includes(j) {
                *v += w;
            }
        }
    }
    inc.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    inc
}

/// One probability per line, or comma separated; `#` starts a comment.
pub fn parse_truth(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                location: format!("truth line {}", i + 1),
                detail: format!("'{tok}' is not numeric"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("truth value {v} outside [0, 1]")));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Load("truth file has no values".into()));
    }
    Ok(out)
}

use super::{GalleryEntry, Probe, ScoreMode, ScoreTable};
use crate::{Error, Result};
use std::collections::BTreeSet;
use std::io::Write;

/// Rank-k identification rates for k = 1..G over one probe set.
pub fn cmc_rates(gallery: &[GalleryEntry], probes: &[Probe], mode: ScoreMode) -> Result<Vec<f64>> {
    if gallery.is_empty() || probes.is_empty() {
        return Err(Error::Identification("CMC needs a gallery and at least one probe".into()));
    }
    let enrolled: BTreeSet<&str> = gallery.iter().map(|g| g.id.as_str()).collect();
    if enrolled.len() != gallery.len() {
        return Err(Error::Identification("duplicate gallery subject".into()));
    }
    for p in probes {
        let id = p.true_id.as_deref().ok_or_else(|| Error::Identification("probe without a true id".into()))?;
        if !enrolled.contains(id) {
            return Err(Error::Identification(format!("probe subject {id:?} is not enrolled")));
        }
    }
    let table = ScoreTable::compute(gallery, probes, mode)?;
    let mut hits = vec![0usize; gallery.len()];
    for (i, p) in probes.iter().enumerate() {
        let rank = table
            .ranking(i)
            .rank_of(p.true_id.as_deref().expect("checked above"))
            .expect("enrolled");
        hits[rank - 1] += 1;
    }
    let n = probes.len() as f64;
    let mut acc = 0;
    Ok(hits
        .into_iter()
        .map(|h| {
            acc += h;
            acc as f64 / n
        })
        .collect())
}

/// CMC rates of several repetitions with their mean and 95% interval
/// `mean ± 1.96 · s / √n` (`s` the sample standard deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    pub repetitions: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

impl CmcCurve {
    pub fn from_repetitions(repetitions: Vec<Vec<f64>>) -> Result<Self> {
        let ranks = repetitions.first().map(Vec::len).unwrap_or(0);
        if ranks == 0 || repetitions.iter().any(|r| r.len() != ranks) {
            return Err(Error::Identification("repetitions must be non-empty and equally long".into()));
        }
        let n = repetitions.len() as f64;
        let mut mean = vec![0.0; ranks];
        let mut ci_low = vec![0.0; ranks];
        let mut ci_high = vec![0.0; ranks];
        for k in 0..ranks {
            let m = repetitions.iter().map(|r| r[k]).sum::<f64>() / n;
            let half = if repetitions.len() > 1 {
                let var = repetitions.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
                1.96 * var.sqrt() / n.sqrt()
            } else {
                0.0
            };
            mean[k] = m;
            ci_low[k] = m - half;
            ci_high[k] = m + half;
        }
        Ok(Self {
            repetitions,
            mean,
            ci_low,
            ci_high,
        })
    }

    /// Evaluates each `(gallery, probes)` repetition.
    pub fn evaluate(runs: &[(Vec<GalleryEntry>, Vec<Probe>)], mode: ScoreMode) -> Result<Self> {
        let reps = runs
            .iter()
            .map(|(g, p)| cmc_rates(g, p, mode))
            .collect::<Result<Vec<_>>>()?;
        Self::from_repetitions(reps)
    }

    pub fn ranks(&self) -> usize {
        self.mean.len()
    }

    /// Mean rate at 1-based rank `k`.
    pub fn rate(&self, k: usize) -> f64 {
        self.mean[k - 1]
    }

    /// CSV with columns `rank, rate_rep1..rate_repN, mean, ci_low, ci_high`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["rank".to_owned()];
        header.extend((1..=self.repetitions.len()).map(|i| format!("rate_rep{i}")));
        header.extend(["mean", "ci_low", "ci_high"].map(String::from));
        w.write_record(&header)?;
        for k in 0..self.ranks() {
            let mut row = vec![(k + 1).to_string()];
            row.extend(self.repetitions.iter().map(|r| r[k].to_string()));
            row.extend([self.mean[k], self.ci_low[k], self.ci_high[k]].map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

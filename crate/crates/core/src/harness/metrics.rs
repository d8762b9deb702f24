use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::learners::QTable;

pub const CSV_HEADER: [&str; 5] = ["trial", "team_size", "checkpoint", "metric", "value"];

/// Best achievable mean per-agent team reward per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityBaseline {
    pub per_step: f64,
}

impl OptimalityBaseline {
    /// Signal games: `r/2` for a lone agent, `(N-1)r/N` otherwise, where `N`
    /// is the population. Dilemma: `b - c`, everyone cooperating.
    pub fn new(env: EnvKind, population: usize, reward_r: f64, ipd_cost: f64, ipd_benefit: f64) -> Result<Self> {
        if population == 0 {
            return Err(Error::Domain("baseline needs a non-empty population".into()));
        }
        let per_step = match env {
            EnvKind::Ipd => ipd_benefit - ipd_cost,
            _ if population == 1 => reward_r / 2.0,
            _ => reward_r * (population - 1) as f64 / population as f64,
        };
        Ok(OptimalityBaseline { per_step })
    }

    pub fn per_episode(&self, steps: usize) -> f64 {
        self.per_step * steps as f64
    }
}

pub fn fraction_of_optimal(achieved: f64, optimal: f64) -> Result<f64> {
    if !(optimal > 0.0) {
        return Err(Error::Domain(format!("optimal reward must be positive, got {optimal}")));
    }
    Ok(achieved / optimal)
}

/// Normalised action gap of one table: mean over states of
/// `(max Q - min Q) / max |Q|`. Zero for an all-zero table.
pub fn table_q_gap(table: &QTable) -> f64 {
    let scale = table.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for s in 0..table.states() {
        let row = table.row(s).expect("state in range");
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        total += (hi - lo) / scale;
    }
    total / table.states() as f64
}

/// [`table_q_gap`] averaged over agents.
pub fn q_gap(tables: &[&QTable]) -> Result<f64> {
    if tables.is_empty() {
        return Err(Error::Domain("q_gap needs at least one table".into()));
    }
    Ok(tables.iter().map(|t| table_q_gap(t)).sum::<f64>() / tables.len() as f64)
}

/// State occupancy of an optimal joint policy for `population` agents:
/// a lone agent splits its time between `s_c` and `s_r`; a larger
/// population keeps one agent on `s_c` and the rest on `s_r`.
pub fn optimal_occupancy(env: EnvKind, population: usize) -> Result<Vec<f64>> {
    let states = env
        .physical_states()
        .ok_or_else(|| Error::Domain("visitation is defined for the signal games only".into()))?;
    if population == 0 {
        return Err(Error::Domain("occupancy needs a non-empty population".into()));
    }
    let mut occ = vec![0.0; states];
    if population == 1 {
        occ[0] = 0.5;
        occ[1] = 0.5;
    } else {
        let n = population as f64;
        occ[0] = 1.0 / n;
        occ[1] = (n - 1.0) / n;
    }
    Ok(occ)
}

/// Per-state deviation of empirical occupancy from the optimum:
/// `freq/opt - 1` where the optimum is positive, `freq` where it is zero.
pub fn visitation_vs_optimal(counts: &[u64], optimal: &[f64]) -> Result<Vec<f64>> {
    if counts.len() != optimal.len() {
        return Err(Error::Shape {
            what: "visitation counts",
            expected: optimal.len(),
            got: counts.len(),
        });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Estimation("no visits recorded".into()));
    }
    Ok(counts
        .iter()
        .zip(optimal)
        .map(|(&c, &o)| {
            let f = c as f64 / total as f64;
            if o > 0.0 {
                f / o - 1.0
            } else {
                f
            }
        })
        .collect())
}

/// Metric name for the visitation deviation of physical state `s`.
pub fn visitation_metric(s: usize) -> &'static str {
    ["visit_dev_sc", "visit_dev_sr", "visit_dev_s3", "visit_dev_s4"][s]
}

/// Mean and 95% half-width (`1.96·sd/√k`, sample sd). Half-width is 0 for
/// a single value.
pub fn confidence_band(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let half = if values.len() > 1 {
        1.96 * crate::infotheory::sample_sd(values) / k.sqrt()
    } else {
        0.0
    };
    Some((mean, half))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub trial: usize,
    pub team_size: usize,
    pub checkpoint: usize,
    pub metric: String,
    pub value: f64,
}

/// Long-format metric rows in (team size, trial, checkpoint) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    rows: Vec<MetricRow>,
}

impl MetricsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, trial: usize, team_size: usize, checkpoint: usize, metric: &str, value: f64) {
        self.rows.push(MetricRow {
            trial,
            team_size,
            checkpoint,
            metric: metric.to_string(),
            value,
        });
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = MetricRow>) {
        self.rows.extend(rows);
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn team_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().map(|r| r.team_size).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn metrics(&self) -> Vec<String> {
        let mut v: Vec<String> = self.rows.iter().map(|r| r.metric.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Values per checkpoint, one per trial, for a metric and team size.
    pub fn series(&self, metric: &str, team_size: usize) -> BTreeMap<usize, Vec<f64>> {
        let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            if r.metric == metric && r.team_size == team_size {
                out.entry(r.checkpoint).or_default().push(r.value);
            }
        }
        out
    }

    /// Each trial's value at its last checkpoint, in trial order.
    pub fn final_values(&self, metric: &str, team_size: usize) -> Vec<f64> {
        let mut last: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        for r in &self.rows {
            if r.metric == metric && r.team_size == team_size {
                let e = last.entry(r.trial).or_insert((r.checkpoint, r.value));
                if r.checkpoint >= e.0 {
                    *e = (r.checkpoint, r.value);
                }
            }
        }
        last.into_values().map(|(_, v)| v).collect()
    }

    /// Each trial's mean over checkpoints in `from..=to`, in trial order.
    pub fn window_means(&self, metric: &str, team_size: usize, from: usize, to: usize) -> Vec<f64> {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            if r.metric == metric && r.team_size == team_size && (from..=to).contains(&r.checkpoint) {
                let e = acc.entry(r.trial).or_insert((0.0, 0));
                e.0 += r.value;
                e.1 += 1;
            }
        }
        acc.into_values().map(|(s, k)| s / k as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        if header {
            w.write_record(CSV_HEADER)?;
        }
        for r in &self.rows {
            w.write_record([
                r.trial.to_string(),
                r.team_size.to_string(),
                r.checkpoint.to_string(),
                r.metric.clone(),
                format_value(r.value),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f), true)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rd.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected csv header {:?}", header.iter().collect::<Vec<_>>()),
            });
        }
        let mut table = MetricsTable::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let int = |k: usize| {
                field(k).parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column {} is not an integer: {:?}", CSV_HEADER[k], field(k)),
                })
            };
            let value = field(4).parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("value is not a number: {:?}", field(4)),
            })?;
            table.push(int(0)?, int(1)?, int(2)?, field(3), value);
        }
        Ok(table)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Shortest text that parses back to the same `f64`.
fn format_value(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:?}")
    }
}

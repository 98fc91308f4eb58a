//! Retrieval-by-alignment classification protocol.

use alloc::string::String;
use alloc::vec::Vec;

use super::synth::LabeledSequence;
use crate::ctw::{ctw_align, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS};
use crate::lsdtw::{lsdtw_align, LsdtwConfig};
use crate::math::{sq_dist, sqrt};
use crate::seqcore::{AlignmentPath, Sequence};
use crate::warp::dtw_align;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dtw,
    Ctw,
    Lsdtw,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dtw, Method::Ctw, Method::Lsdtw];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dtw => "dtw",
            Method::Ctw => "ctw",
            Method::Lsdtw => "lsdtw",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "dtw" => Ok(Method::Dtw),
            "ctw" => Ok(Method::Ctw),
            "lsdtw" => Ok(Method::Lsdtw),
            other => Err(Error::invalid(alloc::format!("unknown method {other:?}"))),
        }
    }
}

/// Per-method settings used by [`align`].
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub ctw_epsilon: f64,
    pub ctw_max_iterations: usize,
    pub lsdtw: LsdtwConfig,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            ctw_epsilon: DEFAULT_EPSILON,
            ctw_max_iterations: DEFAULT_MAX_ITERATIONS,
            lsdtw: LsdtwConfig::default(),
        }
    }
}

pub fn align(x: &Sequence, y: &Sequence, method: Method, config: &MethodConfig) -> Result<AlignmentPath> {
    match method {
        Method::Dtw => Ok(dtw_align(x, y)?.0),
        Method::Ctw => Ok(ctw_align(x, y, config.ctw_epsilon, config.ctw_max_iterations)?.path),
        Method::Lsdtw => Ok(lsdtw_align(x, y, &config.lsdtw)?.path),
    }
}

/// Euclidean distance between paired samples summed along `path`, divided by
/// the path length.
pub fn path_distance(x: &Sequence, y: &Sequence, path: &AlignmentPath) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { x: x.dim(), y: y.dim() });
    }
    crate::seqcore::validate_path(path, x.len(), y.len())?;
    let total: f64 = path.steps().iter().map(|&(i, j)| sqrt(sq_dist(x.row(i), y.row(j)))).sum();
    Ok(total / path.len() as f64)
}

/// A pair that could not be aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFailure {
    pub query: usize,
    pub item: usize,
    pub error: Error,
}

/// Query × database distances; failed pairs hold `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub values: Vec<f64>,
    pub queries: usize,
    pub items: usize,
    pub failures: Vec<PairFailure>,
}

impl DistanceMatrix {
    pub fn get(&self, q: usize, d: usize) -> f64 {
        self.values[q * self.items + d]
    }

    pub fn row(&self, q: usize) -> &[f64] {
        &self.values[q * self.items..(q + 1) * self.items]
    }
}

pub fn distance_matrix(
    queries: &[LabeledSequence],
    database: &[LabeledSequence],
    method: Method,
    config: &MethodConfig,
) -> DistanceMatrix {
    let mut values = Vec::with_capacity(queries.len() * database.len());
    let mut failures = Vec::new();
    for (qi, q) in queries.iter().enumerate() {
        for (di, d) in database.iter().enumerate() {
            let dist = align(&q.sequence, &d.sequence, method, config)
                .and_then(|p| path_distance(&q.sequence, &d.sequence, &p));
            match dist {
                Ok(v) => values.push(v),
                Err(error) => {
                    values.push(f64::INFINITY);
                    failures.push(PairFailure { query: qi, item: di, error });
                }
            }
        }
    }
    DistanceMatrix {
        values,
        queries: queries.len(),
        items: database.len(),
        failures,
    }
}

/// Fraction of queries with at least one matching label among their `n`
/// nearest database items. Ties keep database order.
pub fn accuracy_at(
    distances: &DistanceMatrix,
    query_labels: &[String],
    database_labels: &[String],
    n: usize,
) -> Result<f64> {
    if n == 0 || n > distances.items {
        return Err(Error::invalid(alloc::format!(
            "retrieval count must be in 1..={}, got {n}",
            distances.items
        )));
    }
    if query_labels.len() != distances.queries || database_labels.len() != distances.items {
        return Err(Error::invalid("label counts disagree with the distance matrix"));
    }
    if distances.queries == 0 {
        return Err(Error::invalid("no queries"));
    }
    let mut hits = 0usize;
    let mut order: Vec<usize> = Vec::with_capacity(distances.items);
    for (q, label) in query_labels.iter().enumerate() {
        let row = distances.row(q);
        order.clear();
        order.extend(0..distances.items);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        if order[..n].iter().any(|&d| &database_labels[d] == label) {
            hits += 1;
        }
    }
    Ok(hits as f64 / distances.queries as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub method: Method,
    /// Accuracy for every `N` from 1 to the database size.
    pub accuracy: Vec<f64>,
    pub failures: Vec<PairFailure>,
}

impl RetrievalReport {
    pub fn at(&self, n: usize) -> f64 {
        self.accuracy[n - 1]
    }
}

/// Accuracy at `n` together with the full accuracy curve.
pub fn retrieval_benchmark(
    queries: &[LabeledSequence],
    database: &[LabeledSequence],
    method: Method,
    config: &MethodConfig,
) -> Result<RetrievalReport> {
    if database.is_empty() {
        return Err(Error::invalid("empty database"));
    }
    let distances = distance_matrix(queries, database, method, config);
    let ql: Vec<String> = queries.iter().map(|s| s.label.clone()).collect();
    let dl: Vec<String> = database.iter().map(|s| s.label.clone()).collect();
    let accuracy = (1..=database.len())
        .map(|n| accuracy_at(&distances, &ql, &dl, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(RetrievalReport {
        method,
        accuracy,
        failures: distances.failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalbench::synth::gen_retrieval_split;
    use alloc::string::ToString;

    fn labeled(label: &str, values: &[f64]) -> LabeledSequence {
        LabeledSequence {
            label: label.to_string(),
            sequence: Sequence::from_scalars(values).unwrap(),
        }
    }

    #[test]
    fn path_distance_normalizes_by_length() {
        let x = Sequence::from_scalars(&[0.0, 1.0]).unwrap();
        let y = Sequence::from_scalars(&[0.0, 3.0]).unwrap();
        assert_eq!(path_distance(&x, &y, &AlignmentPath::diagonal(2)).unwrap(), 1.0);
        let stair = AlignmentPath::from_one_based(&[1, 2, 2], &[1, 1, 2]).unwrap();
        assert_eq!(path_distance(&x, &y, &stair).unwrap(), 1.0);
    }

    #[test]
    fn exact_copies_give_perfect_accuracy() {
        let (q, _) = gen_retrieval_split(3, 4, 0, 20, 0.5, 9).unwrap();
        let report = retrieval_benchmark(&q, &q, Method::Dtw, &MethodConfig::default()).unwrap();
        assert_eq!(report.at(1), 1.0);
    }

    #[test]
    fn exhaustive_retrieval_always_succeeds() {
        let q = [labeled("a", &[0.0, 1.0]), labeled("b", &[5.0, 2.0])];
        let d = [labeled("b", &[0.0, 1.0]), labeled("a", &[9.0, 9.0]), labeled("c", &[1.0, 1.0])];
        let report = retrieval_benchmark(&q, &d, Method::Dtw, &MethodConfig::default()).unwrap();
        assert_eq!(report.at(1), 0.0);
        assert_eq!(report.at(3), 1.0);
        assert!(report.accuracy.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn failures_become_infinite_distances() {
        let q = [labeled("a", &[0.0, 1.0])];
        let two_d = LabeledSequence {
            label: "a".to_string(),
            sequence: Sequence::from_rows(&[[0.0, 1.0], [1.0, 1.0]]).unwrap(),
        };
        let d = [two_d, labeled("b", &[0.0, 1.0])];
        let m = distance_matrix(&q, &d, Method::Dtw, &MethodConfig::default());
        assert_eq!(m.get(0, 0), f64::INFINITY);
        assert_eq!(m.failures.len(), 1);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn bad_retrieval_count_rejected() {
        let q = [labeled("a", &[0.0, 1.0])];
        let m = distance_matrix(&q, &q, Method::Dtw, &MethodConfig::default());
        let labels = ["a".to_string()];
        assert!(accuracy_at(&m, &labels, &labels, 2).is_err());
        assert!(accuracy_at(&m, &labels, &labels, 0).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.as_str()).unwrap(), m);
        }
        assert!(Method::parse("hmm").is_err());
    }
}

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sstruss_core::network::{QuerySpec, QueryTopicVector};

/// One query as written in a query file. `d` and `sigma` may be omitted to
/// disable the hop and road-distance constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFile {
    pub q: u32,
    pub k: u32,
    #[serde(default)]
    pub d: Option<u32>,
    #[serde(default)]
    pub sigma: Option<f64>,
    pub theta: f64,
    pub topics: Vec<f64>,
    pub keywords: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(QueryFile),
    Many(Vec<QueryFile>),
}

impl QueryFile {
    pub fn to_spec(&self) -> sstruss_core::Result<QuerySpec> {
        let sum: f64 = self.topics.iter().sum();
        if sum.is_finite() && sum > 0.0 && (sum - 1.0).abs() > 1e-9 {
            eprintln!("warning: topic weights of query {} sum to {sum}, normalizing", self.q);
        }
        Ok(QuerySpec {
            q: self.q,
            topics: QueryTopicVector::new(self.topics.clone())?,
            keywords: self.keywords.iter().copied().collect::<BTreeSet<_>>(),
            k: self.k,
            d: self.d.unwrap_or(u32::MAX),
            sigma: self.sigma.unwrap_or(f64::INFINITY),
            theta: self.theta,
        })
    }

    pub fn from_spec(spec: &QuerySpec) -> Self {
        QueryFile {
            q: spec.q,
            k: spec.k,
            d: (spec.d != u32::MAX).then_some(spec.d),
            sigma: spec.sigma.is_finite().then_some(spec.sigma),
            theta: spec.theta,
            topics: spec.topics.weights().to_vec(),
            keywords: spec.keywords.iter().copied().collect(),
        }
    }
}

/// Parsed query file: the queries and whether the file held an array.
pub struct Queries {
    pub specs: Vec<QuerySpec>,
    pub is_array: bool,
}

pub fn read_queries(path: &Path) -> Result<Queries> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading query file {}", path.display()))?;
    let parsed: OneOrMany =
        serde_json::from_str(&text).with_context(|| format!("parsing query file {}", path.display()))?;
    let (files, is_array) = match parsed {
        OneOrMany::One(q) => (vec![q], false),
        OneOrMany::Many(qs) => (qs, true),
    };
    let specs = files
        .iter()
        .map(QueryFile::to_spec)
        .collect::<sstruss_core::Result<Vec<_>>>()?;
    Ok(Queries { specs, is_array })
}

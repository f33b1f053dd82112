//! Precomputed executed-pair cost tensors.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 0..8         | magic `ADVCOST1`                          |
//! | 8..16        | `u64` header length `h`                   |
//! | 16..16+h     | UTF-8 JSON [`TensorHeader`]               |
//! | then         | `n * feature_dim` `f64` features          |
//! | then         | `n * J * (K+1)` `f64` costs, flat order   |
//!
//! Anything not starting with the magic is read as the JSON variant
//! `{"header": {...}, "features": [[...]], "costs": [[[...]]]}` with costs
//! nested as instance, expert, advice.

use std::path::Path;

use advdefer::{CompositeActionSpace, CostTable, Dataset, FeeSchedule};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAGIC: [u8; 8] = *b"ADVCOST1";
pub const FORMAT_VERSION: u32 = 1;
const PREFIX: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorHeader {
    pub version: u32,
    pub num_experts: usize,
    pub num_advice: usize,
    pub n: usize,
    #[serde(default)]
    pub feature_dim: usize,
    /// Upper bound of stored costs; the largest stored cost when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_bound: Option<f64>,
    /// Cost multipliers to sweep when none are requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    /// Per-advice base fees (`K + 1` entries, first one zero). When present,
    /// stored costs are taken at multiplier 0 and `lambda * gamma_base[k]`
    /// is added on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_base: Option<Vec<f64>>,
    /// Per-expert fees already included in the stored costs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_fees: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_tags: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

impl TensorHeader {
    pub fn new(num_experts: usize, num_advice: usize, n: usize, feature_dim: usize) -> Self {
        Self {
            version: FORMAT_VERSION,
            num_experts,
            num_advice,
            n,
            feature_dim,
            cost_bound: None,
            lambda_grid: None,
            gamma_base: None,
            expert_fees: None,
            region_tags: None,
            labels: None,
        }
    }

    pub fn row_len(&self) -> usize {
        self.num_advice + 1
    }

    pub fn table_len(&self) -> usize {
        self.num_experts * self.row_len()
    }

    fn check(&self) -> Result<(), String> {
        if self.version != FORMAT_VERSION {
            return Err(format!("unsupported version {} (expected {FORMAT_VERSION})", self.version));
        }
        if self.num_experts == 0 || self.n == 0 {
            return Err("need num_experts >= 1 and n >= 1".into());
        }
        let checks: [(&str, Option<usize>, usize); 4] = [
            ("region_tags", self.region_tags.as_ref().map(Vec::len), self.n),
            ("labels", self.labels.as_ref().map(Vec::len), self.n),
            ("gamma_base", self.gamma_base.as_ref().map(Vec::len), self.row_len()),
            ("expert_fees", self.expert_fees.as_ref().map(Vec::len), self.num_experts),
        ];
        for (name, len, want) in checks {
            if let Some(len) = len.filter(|&l| l != want) {
                return Err(format!("{name} has {len} entries, expected {want}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    pub header: TensorHeader,
    /// Row-major `n x feature_dim`.
    pub features: Vec<f64>,
    /// Row-major `n x J x (K+1)`.
    pub costs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTensor {
    header: TensorHeader,
    #[serde(default)]
    features: Vec<Vec<f64>>,
    costs: Vec<Vec<Vec<f64>>>,
}

impl CostTensor {
    /// Builds a tensor from a dataset (tags included, no fee metadata).
    pub fn from_dataset(data: &Dataset) -> Self {
        let space = data.space();
        let mut header = TensorHeader::new(space.num_experts(), space.num_advice(), data.len(), data.feature_dim());
        header.region_tags = data.region_tags().map(<[usize]>::to_vec);
        header.cost_bound = data.tables().iter().map(CostTable::bound).reduce(f64::max);
        Self {
            header,
            features: data.features().to_vec(),
            costs: data.tables().iter().flat_map(|t| t.as_slice().iter().copied()).collect(),
        }
    }

    fn check_payload(&self) -> Result<(), String> {
        let h = &self.header;
        h.check()?;
        if self.features.len() != h.n * h.feature_dim {
            return Err(format!("{} feature values, header declares {} x {}", self.features.len(), h.n, h.feature_dim));
        }
        if self.costs.len() != h.n * h.table_len() {
            return Err(format!(
                "{} cost values, header declares {} x {} x {}",
                self.costs.len(),
                h.n,
                h.num_experts,
                h.row_len()
            ));
        }
        Ok(())
    }

    /// Semantic checks beyond shapes.
    pub fn validate(&self) -> CliResult<()> {
        self.check_payload().map_err(CliError::Validation)?;
        let h = &self.header;
        if let Some(i) = self.costs.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(CliError::Validation(format!("cost value {i} = {} is not a finite value >= 0", self.costs[i])));
        }
        if let Some(g) = &h.gamma_base {
            if g[0] != 0.0 || g.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(CliError::Validation("gamma_base needs gamma_base[0] = 0 and entries >= 0".into()));
            }
        }
        if let Some(grid) = &h.lambda_grid {
            if grid.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(CliError::Validation("lambda grid entries must be finite and >= 0".into()));
            }
        }
        if let Some(b) = h.cost_bound {
            let max = self.costs.iter().copied().fold(0.0, f64::max);
            if !(b.is_finite() && b > 0.0 && max <= b) {
                return Err(CliError::Validation(format!("cost bound {b} does not cover the largest cost {max}")));
            }
        }
        Ok(())
    }

    /// Cost multipliers to evaluate: the requested ones, else the header's
    /// grid, else the stored costs as they are.
    pub fn resolve_lambdas(&self, requested: &[f64]) -> CliResult<Vec<Option<f64>>> {
        if !requested.is_empty() {
            if self.header.gamma_base.is_none() {
                return Err(CliError::Validation("--lambda needs gamma_base in the tensor header".into()));
            }
            return Ok(requested.iter().map(|&l| Some(l)).collect());
        }
        match (&self.header.lambda_grid, &self.header.gamma_base) {
            (Some(grid), Some(_)) if !grid.is_empty() => Ok(grid.iter().map(|&l| Some(l)).collect()),
            _ => Ok(vec![None]),
        }
    }

    /// In-memory dataset at cost multiplier `lambda`.
    pub fn to_dataset(&self, lambda: Option<f64>) -> CliResult<Dataset> {
        self.validate()?;
        let h = &self.header;
        if let Some(l) = lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(CliError::Validation(format!("lambda must be finite and >= 0, got {l}")));
            }
            if h.gamma_base.is_none() {
                return Err(CliError::Validation("lambda rescaling needs gamma_base".into()));
            }
        }
        let space = CompositeActionSpace::new(h.num_experts, h.num_advice)?;
        let max = self.costs.iter().copied().fold(0.0, f64::max);
        let bound = h.cost_bound.unwrap_or(if max > 0.0 { max } else { 1.0 });
        let tables = self
            .costs
            .chunks(h.table_len())
            .map(|c| {
                let t = CostTable::new(space, c.to_vec(), bound)?;
                match (&h.gamma_base, lambda) {
                    (Some(g), Some(l)) => t.with_advice_fees(g, l),
                    _ => Ok(t),
                }
            })
            .collect::<advdefer::Result<Vec<_>>>()?;
        let data = Dataset::new(h.feature_dim, self.features.clone(), tables, h.region_tags.clone())?;
        Ok(data.with_fees(FeeSchedule {
            expert_fees: h.expert_fees.clone().unwrap_or_else(|| vec![0.0; h.num_experts]),
            advice_fees: h.gamma_base.clone().unwrap_or_else(|| vec![0.0; h.row_len()]),
            cost_multiplier: lambda.unwrap_or(0.0),
        }))
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        self.check_payload().map_err(CliError::Validation)?;
        let header = serde_json::to_vec(&self.header).map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut out = Vec::with_capacity(PREFIX + header.len() + 8 * (self.features.len() + self.costs.len()));
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.features.iter().chain(&self.costs) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn to_json(&self) -> CliResult<String> {
        self.check_payload().map_err(CliError::Validation)?;
        let h = &self.header;
        let features = if h.feature_dim == 0 {
            Vec::new()
        } else {
            self.features.chunks(h.feature_dim).map(<[f64]>::to_vec).collect()
        };
        let costs = self
            .costs
            .chunks(h.table_len())
            .map(|t| t.chunks(h.row_len()).map(<[f64]>::to_vec).collect())
            .collect();
        let doc = JsonTensor { header: h.clone(), features, costs };
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))
    }

    /// Parses either variant; `origin` names the source in error messages.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> CliResult<Self> {
        let tensor = if bytes.starts_with(&MAGIC) {
            Self::parse_binary(bytes, origin)?
        } else {
            Self::parse_json(bytes, origin)?
        };
        tensor.validate()?;
        Ok(tensor)
    }

    fn parse_binary(bytes: &[u8], origin: &Path) -> CliResult<Self> {
        let err = |offset: usize, msg: String| CliError::parse(origin, format!("byte offset {offset}: {msg}"));
        let len_bytes: [u8; 8] = bytes
            .get(8..PREFIX)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| err(8, "truncated header length".into()))?;
        let h_len = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| err(8, "header length overflows".into()))?;
        let h_end = PREFIX.checked_add(h_len).filter(|&e| e <= bytes.len()).ok_or_else(|| {
            err(PREFIX, format!("header declares {h_len} bytes, only {} remain", bytes.len() - PREFIX))
        })?;
        let header: TensorHeader = serde_json::from_slice(&bytes[PREFIX..h_end])
            .map_err(|e| err(PREFIX + e.column().saturating_sub(1), format!("header JSON: {e}")))?;
        header.check().map_err(|m| err(PREFIX, m))?;
        let n_feat = header.n * header.feature_dim;
        let n_cost = header.n * header.table_len();
        let payload = &bytes[h_end..];
        let want = 8 * (n_feat + n_cost);
        if payload.len() != want {
            return Err(err(h_end, format!("payload holds {} bytes, header implies {want}", payload.len())));
        }
        let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let features = values.by_ref().take(n_feat).collect();
        let costs = values.collect();
        Ok(Self { header, features, costs })
    }

    fn parse_json(bytes: &[u8], origin: &Path) -> CliResult<Self> {
        let doc: JsonTensor = serde_json::from_slice(bytes).map_err(|e| {
            CliError::parse(origin, format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        let h = doc.header;
        let err = |msg: String| CliError::parse(origin, msg);
        h.check().map_err(err)?;
        if doc.features.len() != if h.feature_dim == 0 { 0 } else { h.n } {
            return Err(err(format!("{} feature rows, header declares n = {}", doc.features.len(), h.n)));
        }
        if let Some(i) = doc.features.iter().position(|r| r.len() != h.feature_dim) {
            return Err(err(format!("feature row {i} has {} values, expected {}", doc.features[i].len(), h.feature_dim)));
        }
        if doc.costs.len() != h.n {
            return Err(err(format!("{} cost tables, header declares n = {}", doc.costs.len(), h.n)));
        }
        for (i, t) in doc.costs.iter().enumerate() {
            if t.len() != h.num_experts || t.iter().any(|r| r.len() != h.row_len()) {
                return Err(err(format!("cost table {i} is not {} x {}", h.num_experts, h.row_len())));
            }
        }
        Ok(Self {
            features: doc.features.into_iter().flatten().collect(),
            costs: doc.costs.into_iter().flatten().flatten().collect(),
            header: h,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Writes the JSON variant for `.json` paths and the binary one otherwise.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let bytes = if path.extension().is_some_and(|e| e == "json") {
            self.to_json()?.into_bytes()
        } else {
            self.to_bytes()?
        };
        std::fs::write(path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }
}

//! Node and system model: M/M/1 service delay, request delay and the
//! per-node / total download times of a parallel multi-node retrieval.
//!
//! Units are SI throughout: seconds, bits and bits per second.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Absolute tolerance used by the allocation invariants.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("load outside [0,1): {0}")]
    LoadOutOfRange(f64),
    #[error("mean service time must be positive, got {0}")]
    NonPositiveServiceTime(f64),
    #[error("rate must be positive, got {0} bps")]
    NonPositiveRate(f64),
    #[error("link delay must be non-negative, got {0} s")]
    NegativeLinkDelay(f64),
    #[error("data volume must be positive, got {0} bits")]
    NonPositiveData(f64),
    #[error("alpha outside [0,1]: {0}")]
    AlphaOutOfRange(f64),
    #[error("snapshot has no nodes")]
    EmptySnapshot,
    #[error("alpha vector has length {got}, snapshot has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeTier {
    Cloud,
    Fog,
}

impl fmt::Display for NodeTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeTier::Cloud => "cloud",
            NodeTier::Fog => "fog",
        })
    }
}

/// Raw parameters of one storage node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    tier: NodeTier,
    rate_bps: f64,
    link_delay_s: f64,
    mean_service_time_s: f64,
    load: f64,
}

impl NodeSpec {
    pub fn new(
        tier: NodeTier,
        rate_bps: f64,
        link_delay_s: f64,
        mean_service_time_s: f64,
        load: f64,
    ) -> Result<Self, ModelError> {
        if !(rate_bps > 0.0 && rate_bps.is_finite()) {
            return Err(ModelError::NonPositiveRate(rate_bps));
        }
        if !(link_delay_s >= 0.0 && link_delay_s.is_finite()) {
            return Err(ModelError::NegativeLinkDelay(link_delay_s));
        }
        check_service_params(mean_service_time_s, load)?;
        Ok(Self {
            tier,
            rate_bps,
            link_delay_s,
            mean_service_time_s,
            load,
        })
    }

    pub fn tier(&self) -> NodeTier {
        self.tier
    }

    pub fn rate_bps(&self) -> f64 {
        self.rate_bps
    }

    pub fn link_delay_s(&self) -> f64 {
        self.link_delay_s
    }

    pub fn mean_service_time_s(&self) -> f64 {
        self.mean_service_time_s
    }

    pub fn load(&self) -> f64 {
        self.load
    }

    pub fn with_link_delay(self, link_delay_s: f64) -> Result<Self, ModelError> {
        Self::new(
            self.tier,
            self.rate_bps,
            link_delay_s,
            self.mean_service_time_s,
            self.load,
        )
    }

    pub fn with_load(self, load: f64) -> Result<Self, ModelError> {
        Self::new(
            self.tier,
            self.rate_bps,
            self.link_delay_s,
            self.mean_service_time_s,
            load,
        )
    }
}

fn check_service_params(mean_service_time_s: f64, load: f64) -> Result<(), ModelError> {
    if !(mean_service_time_s > 0.0 && mean_service_time_s.is_finite()) {
        return Err(ModelError::NonPositiveServiceTime(mean_service_time_s));
    }
    if !(0.0..1.0).contains(&load) {
        return Err(ModelError::LoadOutOfRange(load));
    }
    Ok(())
}

/// Mean sojourn time of an M/M/1 queue: `t_s / (1 - rho)`.
pub fn service_delay(mean_service_time_s: f64, load: f64) -> Result<f64, ModelError> {
    check_service_params(mean_service_time_s, load)?;
    Ok(mean_service_time_s / (1.0 - load))
}

/// Link delay plus service delay. Infallible because `NodeSpec` is validated
/// on construction.
pub fn request_delay(node: &NodeSpec) -> f64 {
    node.link_delay_s + node.mean_service_time_s / (1.0 - node.load)
}

/// A node together with its derived delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedNode {
    spec: NodeSpec,
    service_delay_s: f64,
    request_delay_s: f64,
}

impl DerivedNode {
    pub fn new(spec: NodeSpec) -> Self {
        let service_delay_s = spec.mean_service_time_s / (1.0 - spec.load);
        Self {
            spec,
            service_delay_s,
            request_delay_s: spec.link_delay_s + service_delay_s,
        }
    }

    pub fn spec(&self) -> &NodeSpec {
        &self.spec
    }

    pub fn service_delay_s(&self) -> f64 {
        self.service_delay_s
    }

    pub fn request_delay_s(&self) -> f64 {
        self.request_delay_s
    }

    /// Seconds needed to push the whole data volume through this node alone.
    pub fn transfer_time_s(&self, data_bits: f64) -> f64 {
        data_bits / self.spec.rate_bps
    }
}

/// Time for `node` to deliver a fraction `alpha` of `data_bits`.
pub fn download_time(node: &DerivedNode, alpha: f64, data_bits: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ModelError::AlphaOutOfRange(alpha));
    }
    if !(data_bits > 0.0 && data_bits.is_finite()) {
        return Err(ModelError::NonPositiveData(data_bits));
    }
    Ok(node.request_delay_s + alpha * data_bits / node.spec.rate_bps)
}

/// A frozen system instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    nodes: Vec<DerivedNode>,
    data_bits: f64,
}

impl Snapshot {
    pub fn new(nodes: Vec<NodeSpec>, data_bits: f64) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::EmptySnapshot);
        }
        if !(data_bits > 0.0 && data_bits.is_finite()) {
            return Err(ModelError::NonPositiveData(data_bits));
        }
        Ok(Self {
            nodes: nodes.into_iter().map(DerivedNode::new).collect(),
            data_bits,
        })
    }

    pub fn nodes(&self) -> &[DerivedNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn data_bits(&self) -> f64 {
        self.data_bits
    }

    /// Same nodes, different data volume.
    pub fn with_data_bits(&self, data_bits: f64) -> Result<Self, ModelError> {
        Self::new(self.nodes.iter().map(|n| n.spec).collect(), data_bits)
    }
}

/// Completion time of a parallel download: the slowest contacted node.
/// Nodes with `alpha == 0` are never contacted and contribute nothing.
pub fn total_download_time(snapshot: &Snapshot, alphas: &[f64]) -> Result<f64, ModelError> {
    if alphas.len() != snapshot.len() {
        return Err(ModelError::LengthMismatch {
            expected: snapshot.len(),
            got: alphas.len(),
        });
    }
    let mut total = 0.0_f64;
    for (node, &alpha) in snapshot.nodes.iter().zip(alphas) {
        let t = download_time(node, alpha, snapshot.data_bits)?;
        if alpha > 0.0 {
            total = total.max(t);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Strategy {
    Single,
    Eq,
    Rb,
    Opt,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Single, Strategy::Eq, Strategy::Rb, Strategy::Opt];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Single => "single",
            Strategy::Eq => "eq",
            Strategy::Rb => "rb",
            Strategy::Opt => "opt",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A per-node split of the data volume and its resulting completion time.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub alphas: Vec<f64>,
    pub total_time_s: f64,
    pub strategy: Strategy,
}

impl Allocation {
    /// Evaluates `alphas` on `snapshot` and checks the simplex constraints.
    pub fn evaluate(snapshot: &Snapshot, alphas: Vec<f64>, strategy: Strategy) -> Result<Self, ModelError> {
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > TOLERANCE {
            return Err(ModelError::AlphaOutOfRange(sum));
        }
        let total_time_s = total_download_time(snapshot, &alphas)?;
        Ok(Self {
            alphas,
            total_time_s,
            strategy,
        })
    }
}

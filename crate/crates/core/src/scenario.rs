//! Seeded snapshot generators for the reference fog/cloud deployment and the
//! parameter sweeps run over it.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, run_index, tier, node_index)` (or an injection tag instead of the
//! tier), so a snapshot depends only on its configuration and run index, and
//! adding nodes to a tier leaves the draws of existing nodes untouched.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{alloc_equal, alloc_opt, alloc_rate, AllocConstraints, AllocError};
use crate::model::{Allocation, ModelError, NodeSpec, NodeTier, Snapshot, Strategy};
use crate::stats::{summarize, SweepResult, SweepRow};

/// Megabytes are decimal: 1 MB = 8e6 bits.
pub const BITS_PER_MB: f64 = 8e6;

/// The four load bands used by the load sweeps.
pub const LOAD_INTERVAL_PRESETS: [(f64, f64); 4] = [(0.1, 0.3), (0.3, 0.5), (0.5, 0.7), (0.7, 0.9)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("injection affects {count} nodes but the snapshot has {nodes}")]
    InjectionTooLarge { count: usize, nodes: usize },
    #[error("sweep parameter {param} does not accept value {value}")]
    ValueMismatch { param: SweepParam, value: SweepValue },
    #[error("sweep needs at least one value and one run per value")]
    EmptySweep,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_cloud: usize,
    pub n_fog: usize,
    /// Access-only base stations. They hold no data and produce no node.
    pub n_plain_bs: usize,
    pub data_mb: f64,
    pub cloud_ts_ms: f64,
    pub fog_ts_ms: f64,
    pub cloud_load_range: [f64; 2],
    pub fog_load_range: [f64; 2],
    pub access_link_ms_range: [f64; 2],
    pub cloud_link_multiplier: f64,
    pub rate_mbps_range: [f64; 2],
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// 5 clouds, 3 fogs and one plain BS retrieving 100 MB over 4G-like links.
    fn default() -> Self {
        Self {
            n_cloud: 5,
            n_fog: 3,
            n_plain_bs: 1,
            data_mb: 100.0,
            cloud_ts_ms: 20.0,
            fog_ts_ms: 50.0,
            cloud_load_range: [0.4, 0.9],
            fog_load_range: [0.2, 0.7],
            access_link_ms_range: [30.0, 100.0],
            cloud_link_multiplier: 2.0,
            rate_mbps_range: [15.0, 72.0],
            seed: 1,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidField {
        field,
        reason: reason.into(),
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<(), ScenarioError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {value}")))
    }
}

fn check_range(
    field: &'static str,
    [lo, hi]: [f64; 2],
    min: f64,
    max: f64,
    max_open: bool,
) -> Result<(), ScenarioError> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(invalid(field, format!("need lo <= hi, got [{lo}, {hi}]")));
    }
    let above = if max_open { hi >= max } else { hi > max };
    if lo < min || above {
        let close = if max_open { ")" } else { "]" };
        return Err(invalid(field, format!("[{lo}, {hi}] is outside [{min}, {max}{close}")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_cloud + self.n_fog == 0 {
            return Err(invalid("n_fog", "n_cloud + n_fog must be at least 1"));
        }
        check_positive("data_mb", self.data_mb)?;
        check_positive("cloud_ts_ms", self.cloud_ts_ms)?;
        check_positive("fog_ts_ms", self.fog_ts_ms)?;
        check_positive("cloud_link_multiplier", self.cloud_link_multiplier)?;
        check_range("cloud_load_range", self.cloud_load_range, 0.0, 1.0, true)?;
        check_range("fog_load_range", self.fog_load_range, 0.0, 1.0, true)?;
        check_range("access_link_ms_range", self.access_link_ms_range, 0.0, f64::MAX, false)?;
        check_range(
            "rate_mbps_range",
            self.rate_mbps_range,
            f64::MIN_POSITIVE,
            f64::MAX,
            false,
        )?;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.n_cloud + self.n_fog
    }

    pub fn data_bits(&self) -> f64 {
        self.data_mb * BITS_PER_MB
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let config: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InjectionKind {
    /// Link delay redrawn from [0.5, 1.0] s.
    HighLatency,
    /// Load redrawn from [0.8, 0.95].
    HighLoad,
    /// Load fixed at 0.99.
    Outage,
}

impl InjectionKind {
    fn apply<R: Rng>(self, node: NodeSpec, rng: &mut R) -> Result<NodeSpec, ModelError> {
        match self {
            InjectionKind::HighLatency => node.with_link_delay(rng.gen_range(0.5..=1.0)),
            InjectionKind::HighLoad => node.with_load(rng.gen_range(0.8..=0.95)),
            InjectionKind::Outage => node.with_load(0.99),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub kind: InjectionKind,
    pub count: usize,
}

const STREAM_CLOUD: u64 = 1;
const STREAM_FOG: u64 = 2;
const STREAM_INJECTION: u64 = 3;

fn substream(seed: u64, run_index: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&run_index.to_le_bytes());
    key[16..24].copy_from_slice(&stream.to_le_bytes());
    key[24..].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn draw_node(config: &ScenarioConfig, tier: NodeTier, run_index: u64, index: usize) -> Result<NodeSpec, ModelError> {
    let (stream, ts_ms, load_range, link_scale) = match tier {
        NodeTier::Cloud => (
            STREAM_CLOUD,
            config.cloud_ts_ms,
            config.cloud_load_range,
            config.cloud_link_multiplier,
        ),
        NodeTier::Fog => (STREAM_FOG, config.fog_ts_ms, config.fog_load_range, 1.0),
    };
    let mut rng = substream(config.seed, run_index, stream, index as u64);
    let load = draw(&mut rng, load_range);
    let link_ms = draw(&mut rng, config.access_link_ms_range) * link_scale;
    let rate_mbps = draw(&mut rng, config.rate_mbps_range);
    NodeSpec::new(tier, rate_mbps * 1e6, link_ms * 1e-3, ts_ms * 1e-3, load)
}

/// One seeded draw of the deployment. Cloud nodes come first, then fog nodes.
pub fn sample_snapshot(
    config: &ScenarioConfig,
    injections: &[Injection],
    run_index: u64,
) -> Result<Snapshot, ScenarioError> {
    config.validate()?;
    let mut nodes = Vec::with_capacity(config.node_count());
    for i in 0..config.n_cloud {
        nodes.push(draw_node(config, NodeTier::Cloud, run_index, i)?);
    }
    for i in 0..config.n_fog {
        nodes.push(draw_node(config, NodeTier::Fog, run_index, i)?);
    }

    for (k, injection) in injections.iter().enumerate() {
        if injection.count > nodes.len() {
            return Err(ScenarioError::InjectionTooLarge {
                count: injection.count,
                nodes: nodes.len(),
            });
        }
        let mut rng = substream(config.seed, run_index, STREAM_INJECTION, k as u64);
        let targets = index::sample(&mut rng, nodes.len(), injection.count);
        for target in targets.iter() {
            nodes[target] = injection.kind.apply(nodes[target], &mut rng)?;
        }
    }

    Ok(Snapshot::new(nodes, config.data_bits())?)
}

/// Retrieves everything from the node that would finish first on its own.
pub fn single_best_node(snapshot: &Snapshot) -> Allocation {
    let data_bits = snapshot.data_bits();
    let best = snapshot
        .nodes()
        .iter()
        .map(|n| n.request_delay_s() + n.transfer_time_s(data_bits))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, t)| if t < acc.1 { (i, t) } else { acc });
    let mut alphas = vec![0.0; snapshot.len()];
    alphas[best.0] = 1.0;
    Allocation {
        alphas,
        total_time_s: best.1,
        strategy: Strategy::Single,
    }
}

/// Runs one strategy on a snapshot.
pub fn allocate(
    snapshot: &Snapshot,
    strategy: Strategy,
    constraints: AllocConstraints,
) -> Result<Allocation, AllocError> {
    Ok(match strategy {
        Strategy::Single => single_best_node(snapshot),
        Strategy::Eq => alloc_equal(snapshot),
        Strategy::Rb => alloc_rate(snapshot),
        Strategy::Opt => alloc_opt(snapshot, constraints)?.allocation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    FogCount,
    CloudCount,
    FogLoadInterval,
    CloudLoadInterval,
    /// Data volume in MB (one 1 MB packet per unit of generation size).
    GenerationSize,
    InjectionCount(InjectionKind),
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::FogCount => f.write_str("fogs"),
            SweepParam::CloudCount => f.write_str("clouds"),
            SweepParam::FogLoadInterval => f.write_str("fog-load"),
            SweepParam::CloudLoadInterval => f.write_str("cloud-load"),
            SweepParam::GenerationSize => f.write_str("gensize"),
            SweepParam::InjectionCount(InjectionKind::HighLatency) => f.write_str("latency-nodes"),
            SweepParam::InjectionCount(InjectionKind::HighLoad) => f.write_str("load-nodes"),
            SweepParam::InjectionCount(InjectionKind::Outage) => f.write_str("outage-nodes"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SweepValue {
    Count(usize),
    Interval(f64, f64),
    Megabytes(f64),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Count(n) => write!(f, "{n}"),
            SweepValue::Interval(lo, hi) => write!(f, "{lo}-{hi}"),
            SweepValue::Megabytes(mb) => write!(f, "{mb}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<SweepValue>,
    pub runs_per_value: usize,
    pub base: ScenarioConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.values.is_empty() || self.runs_per_value == 0 {
            return Err(ScenarioError::EmptySweep);
        }
        for &value in &self.values {
            let ok = matches!(
                (self.parameter, value),
                (
                    SweepParam::FogCount | SweepParam::CloudCount | SweepParam::InjectionCount(_),
                    SweepValue::Count(_)
                ) | (
                    SweepParam::FogLoadInterval | SweepParam::CloudLoadInterval,
                    SweepValue::Interval(..)
                ) | (SweepParam::GenerationSize, SweepValue::Megabytes(_))
            );
            if !ok {
                return Err(ScenarioError::ValueMismatch {
                    param: self.parameter,
                    value,
                });
            }
        }
        Ok(())
    }

    /// Configuration and injections for one sweep value.
    pub fn setting(&self, value: SweepValue) -> (ScenarioConfig, Vec<Injection>) {
        let mut config = self.base.clone();
        let mut injections = Vec::new();
        match (self.parameter, value) {
            (SweepParam::FogCount, SweepValue::Count(n)) => config.n_fog = n,
            (SweepParam::CloudCount, SweepValue::Count(n)) => config.n_cloud = n,
            (SweepParam::FogLoadInterval, SweepValue::Interval(lo, hi)) => config.fog_load_range = [lo, hi],
            (SweepParam::CloudLoadInterval, SweepValue::Interval(lo, hi)) => config.cloud_load_range = [lo, hi],
            (SweepParam::GenerationSize, SweepValue::Megabytes(mb)) => config.data_mb = mb,
            (SweepParam::InjectionCount(kind), SweepValue::Count(count)) => injections.push(Injection { kind, count }),
            _ => unreachable!("validated sweep spec"),
        }
        (config, injections)
    }
}

/// Completion times of every strategy over `runs` seeded snapshots, in run order.
fn run_value(
    config: &ScenarioConfig,
    injections: &[Injection],
    runs: usize,
    strategies: &[Strategy],
) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let per_run: Vec<Vec<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let snapshot = sample_snapshot(config, injections, run)?;
            strategies
                .iter()
                .map(|&s| Ok(allocate(&snapshot, s, AllocConstraints::default())?.total_time_s))
                .collect::<Result<Vec<f64>, ScenarioError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok((0..strategies.len())
        .map(|k| per_run.iter().map(|times| times[k]).collect())
        .collect())
}

/// Runs every sweep value; a value that cannot be simulated yields error rows.
///
/// Rows are ordered by sweep value (as listed) and then by strategy. Output is
/// independent of the rayon pool size.
pub fn run_sweep(spec: &SweepSpec, strategies: &[Strategy]) -> Result<SweepResult, ScenarioError> {
    spec.validate()?;
    let mut strategies = strategies.to_vec();
    strategies.sort();
    strategies.dedup();

    let mut rows = Vec::with_capacity(spec.values.len() * strategies.len());
    for &value in &spec.values {
        let (config, injections) = spec.setting(value);
        match run_value(&config, &injections, spec.runs_per_value, &strategies) {
            Ok(samples) => {
                for (&strategy, times) in strategies.iter().zip(&samples) {
                    let outcome = summarize(times).map_err(|e| e.to_string());
                    rows.push(SweepRow {
                        value,
                        strategy,
                        outcome,
                    });
                }
            }
            Err(err) => {
                for &strategy in &strategies {
                    rows.push(SweepRow {
                        value,
                        strategy,
                        outcome: Err(err.to_string()),
                    });
                }
            }
        }
    }
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_snapshots() {
        let config = ScenarioConfig::default();
        let a = sample_snapshot(&config, &[], 7).unwrap();
        let b = sample_snapshot(&config, &[], 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_snapshot(&config, &[], 8).unwrap());
        assert_eq!(a.len(), 8);
        assert_eq!(a.data_bits(), 8e8);
    }

    #[test]
    fn tier_rules() {
        let config = ScenarioConfig {
            n_fog: 0,
            n_cloud: 5,
            ..Default::default()
        };
        let s = sample_snapshot(&config, &[], 0).unwrap();
        assert_eq!(s.len(), 5);
        for n in s.nodes() {
            assert_eq!(n.spec().tier(), NodeTier::Cloud);
            assert_eq!(n.spec().mean_service_time_s(), 0.020);
            assert!((0.060..=0.200).contains(&n.spec().link_delay_s()));
            assert!((0.4..=0.9).contains(&n.spec().load()));
            assert!((15e6..=72e6).contains(&n.spec().rate_bps()));
        }
    }

    #[test]
    fn outage_injection() {
        let config = ScenarioConfig::default();
        let inj = [Injection {
            kind: InjectionKind::Outage,
            count: 3,
        }];
        let s = sample_snapshot(&config, &inj, 4).unwrap();
        let hit: Vec<_> = s.nodes().iter().filter(|n| n.spec().load() == 0.99).collect();
        assert_eq!(hit.len(), 3);
        for n in hit {
            let expected = n.spec().mean_service_time_s() / (1.0 - 0.99);
            assert_eq!(n.service_delay_s(), expected);
        }
        let too_many = [Injection {
            kind: InjectionKind::HighLoad,
            count: 9,
        }];
        assert!(matches!(
            sample_snapshot(&config, &too_many, 0),
            Err(ScenarioError::InjectionTooLarge { count: 9, nodes: 8 })
        ));
    }

    #[test]
    fn injection_ranges() {
        let config = ScenarioConfig::default();
        for run in 0..20 {
            let lat = sample_snapshot(
                &config,
                &[Injection {
                    kind: InjectionKind::HighLatency,
                    count: 8,
                }],
                run,
            )
            .unwrap();
            assert!(lat
                .nodes()
                .iter()
                .all(|n| (0.5..=1.0).contains(&n.spec().link_delay_s())));
            let load = sample_snapshot(
                &config,
                &[Injection {
                    kind: InjectionKind::HighLoad,
                    count: 8,
                }],
                run,
            )
            .unwrap();
            assert!(load.nodes().iter().all(|n| (0.8..=0.95).contains(&n.spec().load())));
        }
    }

    #[test]
    fn adding_fogs_keeps_existing_draws() {
        let small = ScenarioConfig::default();
        let big = ScenarioConfig {
            n_fog: 6,
            ..Default::default()
        };
        let a = sample_snapshot(&small, &[], 3).unwrap();
        let b = sample_snapshot(&big, &[], 3).unwrap();
        assert_eq!(a.nodes(), &b.nodes()[..8]);
    }

    #[test]
    fn single_best_node_cases() {
        let node = |d: f64, r: f64| NodeSpec::new(NodeTier::Fog, r, d, 1e-9, 0.0).unwrap();
        let s1 = Snapshot::new(vec![node(0.1, 1e6)], 1e6).unwrap();
        assert_eq!(single_best_node(&s1).alphas, vec![1.0]);
        let s2 = Snapshot::new(vec![node(0.5, 1e6), node(0.1, 2e6)], 1e6).unwrap();
        let single = single_best_node(&s2);
        assert_eq!(single.alphas, vec![0.0, 1.0]);
        assert_eq!(single.strategy, Strategy::Single);
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = ScenarioConfig {
            fog_load_range: [0.5, 1.0],
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ScenarioError::InvalidField {
                field: "fog_load_range",
                ..
            })
        ));
        let bad = ScenarioConfig {
            rate_mbps_range: [20.0, 10.0],
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ScenarioError::InvalidField {
                field: "rate_mbps_range",
                ..
            })
        ));
        let empty = ScenarioConfig {
            n_cloud: 0,
            n_fog: 0,
            ..Default::default()
        };
        assert!(empty.validate().is_err());
        assert!(ScenarioConfig::from_json(r#"{"n_clouds": 3}"#)
            .unwrap_err()
            .contains("n_clouds"));
        assert!(ScenarioConfig::from_json(r#"{"data_mb": -1}"#)
            .unwrap_err()
            .contains("data_mb"));
        assert_eq!(ScenarioConfig::from_json("{}").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn sweep_rows_and_errors() {
        let spec = SweepSpec {
            parameter: SweepParam::CloudCount,
            values: vec![SweepValue::Count(0), SweepValue::Count(2)],
            runs_per_value: 5,
            base: ScenarioConfig {
                n_fog: 0,
                ..Default::default()
            },
        };
        let result = run_sweep(&spec, &[Strategy::Opt, Strategy::Eq, Strategy::Rb]).unwrap();
        assert_eq!(result.rows.len(), 6);
        assert!(result.rows[..3].iter().all(|r| r.outcome.is_err()));
        assert!(result.rows[3..].iter().all(|r| r.outcome.is_ok()));
        assert_eq!(result.rows[3].strategy, Strategy::Eq);

        let mismatched = SweepSpec {
            values: vec![SweepValue::Megabytes(3.0)],
            ..spec
        };
        assert!(matches!(
            run_sweep(&mismatched, &[Strategy::Eq]),
            Err(ScenarioError::ValueMismatch { .. })
        ));
    }
}

//! The simulated near-bank PIM system and its cost model.
//!
//! Costs are event counts priced in cycles, one time unit end to end. A core
//! has one bank port shared by all of its threads, so a core can never
//! finish faster than the sum of its threads' bank traffic; within that
//! floor the slowest thread decides. Cores run independently and have no
//! channel between them. Lock operations never overlap: a lock admits one
//! thread at a time, so the core's whole lock traffic is added on top. Host transfers move data in batches of
//! `transfer_group_size` banks, and every bank in a batch moves as many
//! bytes as the largest payload of that batch.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::formats::ElementType;
use crate::partition::PartitionPlan;

#[derive(Debug, thiserror::Error)]
pub enum MachineError {
    #[error("core {core} needs {bytes} bytes but a bank holds {capacity}")]
    Capacity { core: usize, bytes: u64, capacity: u64 },
    #[error("invalid machine configuration: {0}")]
    Config(String),
    #[error("parallel transfer with no banks")]
    EmptyTransfer,
    #[error("unknown machine preset `{0}` (expected `default` or `tiny`)")]
    UnknownPreset(String),
    #[error("reading machine configuration: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing machine configuration: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub n_cores: usize,
    pub threads_per_core: usize,
    pub bank_capacity_bytes: u64,
    /// Informational only; not part of any cost term.
    pub scratchpad_bytes: u64,
    pub transfer_group_size: usize,
}

impl MachineConfig {
    pub fn validate(&self) -> Result<(), MachineError> {
        let positive = [
            ("n_cores", self.n_cores as u64),
            ("threads_per_core", self.threads_per_core as u64),
            ("bank_capacity_bytes", self.bank_capacity_bytes),
            ("scratchpad_bytes", self.scratchpad_bytes),
            ("transfer_group_size", self.transfer_group_size as u64),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(MachineError::Config(format!("{name} must be positive")));
        }
        if self.transfer_group_size > self.n_cores {
            return Err(MachineError::Config(format!(
                "transfer_group_size {} exceeds n_cores {}",
                self.transfer_group_size, self.n_cores
            )));
        }
        Ok(())
    }

    /// Same machine with a different core count; the transfer group shrinks
    /// if it would exceed the new count.
    pub fn with_cores(mut self, n_cores: usize) -> Self {
        self.n_cores = n_cores;
        self.transfer_group_size = self.transfer_group_size.min(n_cores.max(1));
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads_per_core = threads;
        self
    }
}

/// Cycles per multiply-accumulate for each element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCosts {
    pub int8: u64,
    pub int16: u64,
    pub int32: u64,
    pub int64: u64,
    pub float32: u64,
    pub float64: u64,
}

impl OpCosts {
    pub fn get(&self, dtype: ElementType) -> u64 {
        match dtype {
            ElementType::Int8 => self.int8,
            ElementType::Int16 => self.int16,
            ElementType::Int32 => self.int32,
            ElementType::Int64 => self.int64,
            ElementType::Float32 => self.float32,
            ElementType::Float64 => self.float64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub c_op: OpCosts,
    pub c_loop: u64,
    /// Cycles per word moved between bank and core.
    pub c_word: u64,
    /// Cycles per lock acquire or release.
    pub c_lock: u64,
    pub c_barrier: u64,
    pub host_bw_bytes_per_cycle: u64,
    pub host_lat_cycles: u64,
    pub merge_cycles_per_element: u64,
}

impl CostModel {
    pub fn validate(&self) -> Result<(), MachineError> {
        if self.host_bw_bytes_per_cycle == 0 {
            return Err(MachineError::Config("host_bw_bytes_per_cycle must be positive".into()));
        }
        if self.c_op.float32 < self.c_op.int32 {
            return Err(MachineError::Config(
                "float32 multiply-accumulate cannot be cheaper than int32".into(),
            ));
        }
        Ok(())
    }
}

/// Machine geometry and cost coefficients together, as stored in a
/// configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub machine: MachineConfig,
    pub cost: CostModel,
}

impl SimConfig {
    pub const PRESETS: [&'static str; 2] = ["default", "tiny"];

    /// 2048 cores with 16 threads, 64 MiB banks, software-emulated floating
    /// point, and a 16 B/cycle host link with 2000 cycles per batch.
    pub fn default_preset() -> Self {
        Self {
            machine: MachineConfig {
                n_cores: 2048,
                threads_per_core: 16,
                bank_capacity_bytes: 64 << 20,
                scratchpad_bytes: 64 << 10,
                transfer_group_size: 64,
            },
            cost: CostModel {
                c_op: OpCosts {
                    int8: 4,
                    int16: 4,
                    int32: 4,
                    int64: 4,
                    float32: 32,
                    float64: 56,
                },
                c_loop: 2,
                c_word: 8,
                c_lock: 8,
                c_barrier: 64,
                host_bw_bytes_per_cycle: 16,
                host_lat_cycles: 2000,
                merge_cycles_per_element: 1,
            },
        }
    }

    /// Four cores with four threads each, for tests and small examples.
    pub fn tiny_preset() -> Self {
        let mut cfg = Self::default_preset();
        cfg.machine = MachineConfig {
            n_cores: 4,
            threads_per_core: 4,
            bank_capacity_bytes: 1 << 20,
            scratchpad_bytes: 4 << 10,
            transfer_group_size: 2,
        };
        cfg
    }

    pub fn preset(name: &str) -> Result<Self, MachineError> {
        match name {
            "default" => Ok(Self::default_preset()),
            "tiny" => Ok(Self::tiny_preset()),
            other => Err(MachineError::UnknownPreset(other.to_string())),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MachineError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MachineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// A preset name, or a path to a JSON file.
    pub fn resolve(name_or_path: &str) -> Result<Self, MachineError> {
        if Self::PRESETS.contains(&name_or_path) {
            Self::preset(name_or_path)
        } else if Path::new(name_or_path).exists() {
            Self::load(name_or_path)
        } else {
            Err(MachineError::UnknownPreset(name_or_path.to_string()))
        }
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        self.machine.validate()?;
        self.cost.validate()
    }
}

/// Event counters of one simulated thread.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadStats {
    /// Entries (CSR/COO) or blocks (BCSR/BCOO) processed.
    pub work_items: u64,
    pub mac_ops: u64,
    pub loop_iters: u64,
    /// `mac_ops * c_op + loop_iters * c_loop`, filled in by [`price`].
    pub compute_cycles: u64,
    pub mem_words: u64,
    pub lock_acquires: u64,
    pub lock_releases: u64,
    pub barriers: u64,
}

impl ThreadStats {
    pub fn lock_ops(&self) -> u64 {
        self.lock_acquires + self.lock_releases
    }
}

/// Converts the symbolic compute counts of each thread into cycles.
pub fn price(stats: &mut [ThreadStats], dtype: ElementType, cm: &CostModel) {
    for s in stats {
        s.compute_cycles = s.mac_ops * cm.c_op.get(dtype) + s.loop_iters * cm.c_loop;
    }
}

/// Cycles for one core:
/// `max(max_t(compute_t + barrier_t + mem_t), sum_t mem_t) + sum_t lock_t + c_barrier`
/// where `lock_t = (acquires + releases) * c_lock` and
/// `barrier_t = barriers * c_barrier`.
///
/// Lock operations are atomic updates of state shared by the whole core, so
/// they never overlap with each other or with other threads' work. Any extra
/// lock operation therefore lengthens the core.
pub fn core_time(stats: &[ThreadStats], cm: &CostModel) -> u64 {
    let mut slowest = 0;
    let mut port = 0;
    let mut locks = 0;
    for s in stats {
        let mem = s.mem_words * cm.c_word;
        slowest = slowest.max(s.compute_cycles + s.barriers * cm.c_barrier + mem);
        port += mem;
        locks += s.lock_ops() * cm.c_lock;
    }
    slowest.max(port) + locks + cm.c_barrier
}

/// Cores run in parallel with no inter-core term.
pub fn machine_kernel_time(core_cycles: &[u64]) -> u64 {
    core_cycles.iter().copied().max().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToBanks,
    FromBanks,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferCost {
    pub payload_bytes: u64,
    pub padded_bytes: u64,
    pub batches: u64,
    pub cycles: u64,
}

impl TransferCost {
    pub fn padding_bytes(&self) -> u64 {
        self.padded_bytes - self.payload_bytes
    }
}

/// Prices one parallel transfer of `payloads[i]` bytes to or from bank `i`.
///
/// Banks go in index order, `transfer_group_size` per batch. Each batch
/// moves `group_len * max(payload in batch)` bytes. Cycles are
/// `batches * host_lat_cycles + ceil(padded_bytes / host_bw_bytes_per_cycle)`.
/// Both directions cost the same.
pub fn parallel_transfer(
    payloads: &[u64],
    _direction: Direction,
    mc: &MachineConfig,
    cm: &CostModel,
) -> Result<TransferCost, MachineError> {
    if payloads.is_empty() {
        return Err(MachineError::EmptyTransfer);
    }
    if let Some((core, &bytes)) = payloads.iter().enumerate().find(|(_, &p)| p > mc.bank_capacity_bytes) {
        return Err(MachineError::Capacity {
            core,
            bytes,
            capacity: mc.bank_capacity_bytes,
        });
    }
    let mut cost = TransferCost::default();
    for group in payloads.chunks(mc.transfer_group_size.max(1)) {
        let widest = group.iter().copied().max().unwrap_or(0);
        cost.payload_bytes += group.iter().sum::<u64>();
        cost.padded_bytes += widest * group.len() as u64;
        cost.batches += 1;
    }
    cost.cycles = cost.batches * cm.host_lat_cycles + cost.padded_bytes.div_ceil(cm.host_bw_bytes_per_cycle);
    Ok(cost)
}

/// Bank-resident bytes per core: tile storage, the input-vector segment and
/// the output slice. Fails on the first core that does not fit.
pub fn check_capacity(
    plan: &PartitionPlan,
    tile_bytes: &[usize],
    width_bytes: usize,
    mc: &MachineConfig,
) -> Result<Vec<u64>, MachineError> {
    plan.tiles
        .iter()
        .zip(tile_bytes)
        .map(|(tile, &storage)| {
            let segment = plan.vector_segments[tile.core_id].len() * width_bytes;
            let output = tile.row_range.len() * width_bytes;
            let bytes = (storage + segment + output) as u64;
            if bytes > mc.bank_capacity_bytes {
                Err(MachineError::Capacity {
                    core: tile.core_id,
                    bytes,
                    capacity: mc.bank_capacity_bytes,
                })
            } else {
                Ok(bytes)
            }
        })
        .collect()
}

//! Random causal DAGs with categorical conditional tables, ancestral
//! sampling, d-separation, parent-recovery scoring and the recovery
//! benchmark built from them.

mod bench;
mod dag;
mod oracle;
mod score;

pub use bench::{recovery_benchmark, DagRecovery, RecoveryBench, RecoveryBenchConfig};
pub use dag::{dsep_oracle, random_dag, sample_dataset, CausalDag, DagSpec, RandomDagConfig, MAX_CPT_ROWS};
pub use oracle::DsepTester;
pub use score::{score_recovery, NodeScore, RecoveryFilter, RecoveryScore};

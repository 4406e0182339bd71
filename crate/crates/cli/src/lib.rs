//! Report assembly, file formats, and the audit orchestration behind the
//! `rng-audit` binary. The analyses themselves live in `rng-audit-core`.

pub mod audit;
pub mod formats;
pub mod report;

pub use audit::{run_audit, AuditConfig, AuditOutput, FellerParams};
pub use report::{AnomalyFlag, AuditReport};

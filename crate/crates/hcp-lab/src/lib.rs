//! Experiment harness for the hardware-conditioned policy laboratory:
//! run configuration, robot-pool and checkpoint files, CSV outputs, and
//! the training / evaluation / fine-tuning / stress-test drivers behind
//! the `hcp` command-line tool.

pub mod checkpoint;
pub mod config;
pub mod csvio;
pub mod harness;
pub mod pool_io;

pub use config::ExperimentConfig;

/// Process exit codes used by the CLI.
pub mod exit_codes {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const DIVERGED: u8 = 3;
}

/// Map an error to the CLI exit code contract.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<hcp_core::CoreError>() {
            return match core {
                hcp_core::CoreError::SimDiverged { .. } => exit_codes::DIVERGED,
                _ => exit_codes::CONFIG,
            };
        }
    }
    exit_codes::CONFIG
}

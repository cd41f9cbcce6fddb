//! Hardware-conditioned policy laboratory core.
//!
//! Everything computational lives here: procedural robot generation,
//! forward kinematics and hardware encodings, an articulated-body rigid
//! multibody simulator, task environments (reacher, peg insertion, planar
//! hopper), a dense neural-network stack with reverse-mode gradients, and
//! the DDPG+HER / PPO training cores together with the learned per-robot
//! embedding table.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable the
//! default `std` feature to build for environments without the standard
//! library. File formats, configuration, CSV output and the CLI live in
//! the companion `hcp-lab` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod contact;
pub mod dynamics;
pub mod embedding;
pub mod envs;
pub mod error;
pub mod fmath;
pub mod kinematics;
pub mod math;
pub mod nn;
pub mod rl;
pub mod robot;
pub mod rng;

pub use error::CoreError;
pub use math::{Mat3, Pose, Vec3};
pub use rng::Rng;

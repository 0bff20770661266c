//! Discrete-event simulator for optical burst switching (OBS) networks.
//!
//! Three signalling architectures are modelled on top of one engine:
//! conventional OBS with a path-dependent offset (C-OBS), offset-time
//! emulated OBS with a fixed offset and input delay lines (E-OBS), and
//! labelled OBS with in-band control (L-OBS). Losses are split between
//! data-channel contention and collisions of burst control packets (BCPs)
//! on the control wavelength.
//!
//! The crate is organized bottom-up:
//!
//! * [`kernel`]: event queue, picosecond clock, seeded random streams
//! * [`topology`]: NSFNET, torus and file-defined graphs, shortest-path routes
//! * [`traffic`]: Poisson burst sources normalized to link capacity
//! * [`scheduler`]: Horizon/LAUC and void-filling LAUC-VF channel selection
//! * [`architectures`]: offset rules, control-wavelength contention
//! * [`network`]: one replication of a full network run
//! * [`metrics`]: loss, fairness, utilization and confidence intervals
//! * [`experiment`]: scenarios, presets, CSV and SVG output

pub mod architectures;
pub mod experiment;
pub mod kernel;
pub mod metrics;
pub mod network;
pub mod scheduler;
pub mod topology;
pub mod traffic;

pub use architectures::{Architecture, ArchitectureParams};
pub use kernel::SimTime;
pub use network::{run, Network, SimConfig};
pub use topology::{build_nsfnet, build_torus, LinkDefaults};
pub use traffic::LoadSpec;

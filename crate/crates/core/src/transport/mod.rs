pub mod characteristics;
pub mod conservation;
pub mod picard;
pub mod run;

pub use characteristics::{
    trace_characteristic, transport_vorticity, FlowMap, VelocityHistory, VorticityState,
};
pub use conservation::{conservation_report, ConservationReport};
pub use picard::{picard_window, PicardConfig, PicardWindow};
pub use run::{run_inviscid, InviscidConfig, InviscidSnapshot, InviscidTrajectory};

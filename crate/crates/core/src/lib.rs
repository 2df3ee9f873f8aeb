pub mod bezier;
pub mod cli;
pub mod flatness;
pub mod gcs;
pub mod geometry;
pub mod lp;
pub mod program;
pub mod scenario;
pub mod timing;
pub mod verify;

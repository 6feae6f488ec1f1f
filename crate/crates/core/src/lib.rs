//! Simulator and library for onboard-perception aerial grasping.

pub mod camera;
pub mod cloud;
pub mod eval;
pub mod fusion;
pub mod mission;
pub mod planner;
pub mod ply;
pub mod se3;
pub mod sim;
pub mod surface;

//! Evaluation protocols: figure-8 path tracking with a proportional heading
//! controller, and aerial drop tests on the free-fall model.

pub mod drop;
pub mod figure8;

pub use drop::{
    drop_test, drop_trial, DropConfig, DropController, DropTestReport, DropTrial,
    InitialOrientation, DROP_SUMMARY_COLUMNS,
};
pub use figure8::{
    heading_p_controller, path_metrics, Figure8Path, Figure8Row, HeadingController, PathMetrics,
    PathPoint, Pose2, TrajectorySample, UnicycleTracker, FIGURE8_COLUMNS,
};

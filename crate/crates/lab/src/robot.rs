//! Robot description files (JSON).

use std::path::Path;

use spinelab_core::model::RobotSpec;

use crate::error::{LabError, Result};

pub fn parse_robot_spec(text: &str) -> Result<RobotSpec, String> {
    let spec: RobotSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

pub fn load_robot_spec(path: &Path) -> Result<RobotSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let spec: RobotSpec = serde_json::from_str(&text).map_err(|e| LabError::format(path, e))?;
    spec.validate()?;
    Ok(spec)
}

pub fn robot_spec_json(spec: &RobotSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("robot spec serializes");
    s.push('\n');
    s
}

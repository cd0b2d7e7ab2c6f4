//! Canonical variable names and the default schema.
//!
//! Internal units are SI except shaft speed (rpm) and angles (degrees).

use crate::model::{VariableRole, VariableSpec};

pub const TIMESTAMP: &str = "timestamp";
pub const LATITUDE: &str = "latitude";
pub const LONGITUDE: &str = "longitude";
pub const SOG: &str = "sog";
pub const STW: &str = "stw";
pub const HEADING: &str = "heading";
pub const SHAFT_RPM: &str = "shaft_rpm";
pub const SHAFT_TORQUE: &str = "shaft_torque";
pub const SHAFT_POWER: &str = "shaft_power";
pub const RUDDER_ANGLE: &str = "rudder_angle";
pub const PROPELLER_PITCH: &str = "propeller_pitch";
pub const DRAFT_FORE: &str = "draft_fore";
pub const DRAFT_AFT: &str = "draft_aft";
pub const REL_WIND_SPEED: &str = "rel_wind_speed";
pub const REL_WIND_DIR: &str = "rel_wind_dir";
pub const NAV_STATUS: &str = "nav_status";
pub const STATE: &str = "state";
pub const PORT: &str = "port";

// Hindcast-interpolated columns use this prefix.
pub const HC_PREFIX: &str = "hc_";
pub const HC_WIND_U: &str = "hc_wind_u";
pub const HC_WIND_V: &str = "hc_wind_v";
pub const HC_CURRENT_U: &str = "hc_current_u";
pub const HC_CURRENT_V: &str = "hc_current_v";
pub const HC_WAVE_DIR: &str = "hc_wave_dir";
pub const HC_WAVE_HEIGHT: &str = "hc_wave_height";

// Derived features.
pub const GPS_HEADING: &str = "gps_heading";
pub const LEG_DISTANCE: &str = "leg_distance";
pub const REL_WIND_LONG: &str = "relative_wind_long";
pub const REL_WIND_TRANS: &str = "relative_wind_trans";
pub const REL_WAVE_DIR: &str = "relative_wave_direction";
pub const STW_ESTIMATE: &str = "stw_estimate";
pub const HC_LONG_CURRENT: &str = "hc_long_current";
pub const HC_LONG_WIND: &str = "hc_long_wind";
pub const HC_REL_WIND_DIR: &str = "hc_rel_wind_dir";
pub const REL_WIND_SPEED_REF: &str = "rel_wind_speed_ref";
pub const SHIP_LONG_WIND: &str = "ship_long_wind";

// Hydrostatics.
pub const MEAN_DRAFT: &str = "mean_draft";
pub const TRIM: &str = "trim";
pub const DISPLACEMENT: &str = "displacement_volume";
pub const WSA: &str = "wetted_surface";

pub const RAW_PREFIX: &str = "raw_";
pub const DERIVED_PREFIX: &str = "derived_";
pub const FIXED_PREFIX: &str = "fixed_";
pub const RESISTANCE_PREFIX: &str = "res_";

pub fn raw(name: &str) -> String {
    format!("{RAW_PREFIX}{name}")
}

pub fn derived(name: &str) -> String {
    format!("{DERIVED_PREFIX}{name}")
}

pub fn fixed(name: &str) -> String {
    format!("{FIXED_PREFIX}{name}")
}

/// Default schema covering the bare-minimum variables plus navigation fields.
pub fn default_schema() -> Vec<VariableSpec> {
    use VariableRole::*;
    let lin = |name: &str, unit: &str, lo: Option<f64>, hi: Option<f64>, role| {
        VariableSpec::linear(name, unit).with_range(lo, hi).with_role(role)
    };
    let ang = |name: &str, role| VariableSpec::angular(name).with_role(role);
    vec![
        lin(LATITUDE, "deg", Some(-90.0), Some(90.0), Navigation),
        lin(LONGITUDE, "deg", Some(-180.0), Some(180.0), Navigation),
        lin(SOG, "m/s", Some(0.0), Some(20.0), Navigation),
        lin(STW, "m/s", Some(-2.0), Some(20.0), OperatingPoint),
        ang(HEADING, Navigation),
        lin(SHAFT_RPM, "rpm", Some(0.0), Some(200.0), OperationalControl),
        lin(SHAFT_TORQUE, "N*m", Some(0.0), None, OperatingPoint),
        lin(SHAFT_POWER, "W", Some(0.0), None, OperatingPoint),
        lin(RUDDER_ANGLE, "deg", Some(-45.0), Some(45.0), OperationalControl),
        lin(PROPELLER_PITCH, "", None, None, OperationalControl),
        lin(DRAFT_FORE, "m", Some(0.0), Some(30.0), LoadingCondition),
        lin(DRAFT_AFT, "m", Some(0.0), Some(30.0), LoadingCondition),
        lin(REL_WIND_SPEED, "m/s", Some(0.0), Some(60.0), OperationalEnvironment),
        ang(REL_WIND_DIR, OperationalEnvironment),
        lin(NAV_STATUS, "", Some(0.0), Some(15.0), State),
        VariableSpec::text(STATE).with_role(State),
        VariableSpec::text(PORT).with_role(State),
    ]
}

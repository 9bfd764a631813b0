//! Shared fixtures for the benchmark suite.

use qfrelay::{discretize_uplink, ChannelSpec, DiscreteJointModel, GridSpec};

/// The standard benchmark channel: symmetric BPSK at 0 dB with the default
/// 64-bin grid.
pub fn standard_model() -> DiscreteJointModel {
    let spec = ChannelSpec::symmetric_db(0.0, 9.3, 0.0, 0.0);
    discretize_uplink(&spec, &GridSpec::default()).expect("valid spec")
}

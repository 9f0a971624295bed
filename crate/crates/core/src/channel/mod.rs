//! Channel realizations for single- and multi-RIS scenarios, plus the
//! real-valued input transforms and the RIS-RX perturbation model.

pub mod config;
pub mod sampling;
pub mod source;
pub mod transforms;

pub use config::{db_to_linear, dbm_to_watts, ArrayGeometry, ScenarioConfig};
pub use sampling::{
    complex_normal, perturb_h2, sample_channel_set, sample_ricean, steering_vector, ChannelModel,
    ChannelSet, RisView,
};
pub use source::{ChannelSource, Perturbation};
pub use transforms::{stack_real_imag, stack_view, StackedChannels};

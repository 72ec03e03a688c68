//! Road-roughness estimation from vehicle vibrations.
//!
//! The crate reconstructs longitudinal road profiles from vertical and/or
//! lateral acceleration and speed with a Kalman filter that estimates the
//! unknown road input, and turns the profiles into International Roughness
//! Index (IRI) segments. Around that core sit quarter-car and half-car
//! suspension models, signal preprocessing, a road/vehicle simulator for
//! closed-loop testing, grey-box identification of suspension parameters,
//! GNSS trace matching and evaluation against reference profiles.
//!
//! ```
//! use roughtrack::{iri_from_profile, synth_profile, IriConfig, RoughnessClass};
//!
//! let road = synth_profile(RoughnessClass::B, 200.0, 0.1, 7).unwrap();
//! let segments = iri_from_profile(&road, &IriConfig::default()).unwrap();
//! assert!(segments.iter().all(|s| s.iri >= 0.0));
//! ```

pub mod error;
pub mod geomatch;
pub mod iri;
pub mod kalman;
pub mod models;
pub mod optim;
pub mod pipeline;
pub mod signal;
pub mod simulate;
pub mod sysid;

pub use error::{Error, Result};
pub use geomatch::{headings, match_traces, GeoPoint, Match, MatchConfig, MatchResult};
pub use iri::{
    average_tracks, iri_from_estimates, iri_from_profile, spatial_resample, IriConfig, IriSegment, REFERENCE_SPEED,
};
pub use kalman::{
    input_estimate, measurement_update, run_filter, time_update, Channels, FilterRun, InputEstimate, KfConfig,
    KfState, UnknownInputFilter,
};
pub use models::{
    build_hc, build_model, build_qc, discretize, golden_car_params, identified_car_params, rattle_output,
    DiscreteStateSpace, ModelKind, StateSpace, VehicleParams,
};
pub use signal::{amplitude_spectrum, highpass, lowpass, remove_gravity, smooth_spectrum, AmplitudeSpectrum, TimeSeries};
pub use simulate::{drive, synth_profile, DriveConfig, RoadProfile, RoughnessClass, SimTrace, SpeedProfile};
pub use sysid::{identify, simulate_response, Beta, SysIdProblem, SysIdResult};

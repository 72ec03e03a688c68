use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use roughtrack::error::{Error, Result};
use roughtrack::geomatch::{match_traces, MatchConfig};
use roughtrack::iri::{iri_from_profile, IriConfig};
use roughtrack::kalman::Channels;
use roughtrack::models::{ModelKind, VehicleParams};
use roughtrack::pipeline::io::{self, fmt_f64};
use roughtrack::pipeline::{
    estimate_segments, evaluate, road_inputs_for_drive, synthetic_geotags, trace_to_records, Alignment,
    EstimateOptions, Measurements, ProfileAlignment,
};
use roughtrack::signal::TimeSeries;
use roughtrack::simulate::{drive, synth_profile_with, DriveConfig, ProfileSynth, RoadProfile, RoughnessClass, SpeedProfile};
use roughtrack::sysid::{identify, Beta, SysIdProblem};

#[derive(Parser)]
#[command(name = "roughtrack", version, about = "Road profile and IRI estimation from vehicle vibrations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drive a simulated vehicle over a road profile and write an IMU drive file.
    Simulate(SimulateArgs),
    /// Estimate IRI segments from a drive file.
    Estimate(EstimateArgs),
    /// Compute IRI segments directly from a road profile.
    Iri(IriArgs),
    /// Identify suspension parameters from a drive over a known profile.
    Sysid(SysidArgs),
    /// Match two geotagged traces by position and heading.
    Match(MatchArgs),
    /// Compare estimated segments with reference segments.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Qc,
    Hc,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Qc => ModelKind::QuarterCar,
            ModelArg::Hc => ModelKind::HalfCar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Vertical,
    Lateral,
    Both,
}

impl From<ChannelArg> for Channels {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Vertical => Channels::Vertical,
            ChannelArg::Lateral => Channels::Lateral,
            ChannelArg::Both => Channels::Both,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Profile CSV, or `synth:CLASS:LENGTH_M` for a synthetic road.
    #[arg(long)]
    profile: String,
    /// Spacing of synthetic profiles (m).
    #[arg(long, default_value_t = 0.1)]
    spacing: f64,
    /// Also write the (synthetic) profile to this CSV.
    #[arg(long)]
    profile_out: Option<PathBuf>,
    /// `V` (m/s), `Vkmh`, or `t:v,t:v,...` knots in seconds and m/s.
    #[arg(long, default_value = "80kmh")]
    speed: String,
    /// Parameter file, or `golden` / `identified`.
    #[arg(long, default_value = "golden")]
    params: String,
    #[arg(long, value_enum, default_value = "qc")]
    model: ModelArg,
    /// Measurement noise standard deviation (m/s²).
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.02)]
    dt: f64,
    /// Drive duration (s); defaults to the whole profile.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    drive: PathBuf,
    #[arg(long, default_value = "identified")]
    params: String,
    #[arg(long, value_enum, default_value = "vertical")]
    channels: ChannelArg,
    /// Filter model; quarter-car for vertical, half-car otherwise by default.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, default_value_t = 1e9)]
    qr_ratio: f64,
    /// Initial state variance of the filter; large values shorten the start-up transient.
    #[arg(long, default_value_t = 1e3)]
    initial_variance: f64,
    /// Low-pass cutoff for every used channel (Hz); default 13 vertical, 11 lateral. 0 disables.
    #[arg(long)]
    lpf: Option<f64>,
    /// High-pass cutoff of the lateral channel (Hz); 0 disables.
    #[arg(long, default_value_t = 0.5)]
    hpf: f64,
    /// High-pass cutoff of the estimated profile (Hz); 0 disables.
    #[arg(long, default_value_t = 0.0)]
    detrend: f64,
    /// Gravity subtracted from the vertical channel (m/s²).
    #[arg(long, default_value_t = 9.82)]
    gravity: f64,
    #[arg(long, default_value_t = 1.0)]
    calibration: f64,
    #[arg(long = "L", default_value_t = 40.0)]
    segment_length: f64,
    #[arg(long = "S", default_value_t = 0.1)]
    spacing: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrackArg {
    Average,
    Left,
    Right,
}

#[derive(Args)]
struct IriArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long = "L", default_value_t = 40.0)]
    segment_length: f64,
    #[arg(long = "S", default_value_t = 0.1)]
    spacing: f64,
    /// Track of two-track profiles to evaluate.
    #[arg(long, value_enum, default_value = "average")]
    track: TrackArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SysidArgs {
    #[arg(long)]
    drive: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// `odometry`, or `gnss[:DMAX:PHIMAX]` to place the drive on the profile.
    #[arg(long = "match", default_value = "odometry")]
    alignment: String,
    /// Cost band `LO:HI` (Hz).
    #[arg(long, default_value = "0.5:15")]
    band: String,
    /// Spectrum smoothing width (Hz).
    #[arg(long, default_value_t = 0.5)]
    smoothing: f64,
    /// Parameter file or set providing the fixed m_s, m_u and l.
    #[arg(long, default_value = "identified")]
    params: String,
    /// Initial values, e.g. `K_s=20000,I_s=2500,mu=1`.
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = 5)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the identified vehicle as a parameter file.
    #[arg(long)]
    params_out: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    imu: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    dmax: f64,
    #[arg(long, default_value_t = 45.0)]
    phimax: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// `station`, or `gnss[:DMAX]` to pair segments by midpoint position.
    #[arg(long, default_value = "station")]
    align: String,
    #[arg(long)]
    out: PathBuf,
    /// Histogram CSV (0.1 mm/m bins).
    #[arg(long)]
    hist: Option<PathBuf>,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

fn parse_f64(field: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| invalid(field, format!("`{s}` is not a number")))
}

fn parse_speed(spec: &str) -> Result<SpeedProfile> {
    if let Some(v) = spec.strip_suffix("kmh") {
        return SpeedProfile::constant(parse_f64("speed", v)? / 3.6);
    }
    if spec.contains(':') {
        let knots = spec
            .split(',')
            .map(|k| {
                let (t, v) = k.split_once(':').ok_or_else(|| invalid("speed", format!("bad knot `{k}`")))?;
                Ok((parse_f64("speed", t)?, parse_f64("speed", v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        return SpeedProfile::piecewise(knots);
    }
    SpeedProfile::constant(parse_f64("speed", spec)?)
}

fn load_profile(spec: &str, spacing: f64, seed: u64) -> Result<RoadProfile> {
    match spec.strip_prefix("synth:") {
        Some(rest) => {
            let (class, len) = rest
                .split_once(':')
                .ok_or_else(|| invalid("profile", "expected synth:CLASS:LENGTH_M"))?;
            let class: RoughnessClass = class.parse()?;
            let synth = ProfileSynth::new(class, parse_f64("profile", len)?, spacing, seed);
            let profile = synth_profile_with(&synth)?;
            let tags = synthetic_geotags(&profile);
            profile.with_geotags(tags)
        }
        None => io::read_profile(spec.as_ref()),
    }
}

fn nonzero(v: f64) -> Option<f64> {
    (v > 0.0).then_some(v)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let profile = load_profile(&a.profile, a.spacing, a.seed)?;
    if let Some(p) = &a.profile_out {
        io::write_profile(p, &profile)?;
    }
    let params = io::load_params(&a.params)?;
    let cfg = DriveConfig {
        model: a.model.into(),
        dt: a.dt,
        noise_std: a.noise,
        seed: a.seed.wrapping_add(1),
        duration: a.duration,
        ..DriveConfig::default()
    };
    let trace = drive(&profile, &parse_speed(&a.speed)?, &params, &cfg)?;
    if trace.truncated {
        eprintln!("warning: drive truncated at the end of the profile");
    }
    io::write_drive(&a.out, &trace_to_records(&trace, &profile))
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let drive = io::read_drive(&a.drive)?;
    let params = io::load_params(&a.params)?;
    let defaults = EstimateOptions::default();
    let opts = EstimateOptions {
        channels: a.channels.into(),
        model: a.model.map(Into::into),
        qr_ratio: a.qr_ratio,
        initial_variance: a.initial_variance,
        gravity: a.gravity,
        lpf_vertical: a.lpf.map_or(defaults.lpf_vertical, nonzero),
        lpf_lateral: a.lpf.map_or(defaults.lpf_lateral, nonzero),
        hpf_lateral: nonzero(a.hpf),
        detrend: nonzero(a.detrend),
        calibration: a.calibration,
        iri: IriConfig::new(a.segment_length, a.spacing)?,
        ..defaults
    };
    let segments = estimate_segments(&Measurements::from_drive(&drive)?, &params, &opts)?;
    io::write_segments(&a.out, &segments)
}

fn iri(a: IriArgs) -> Result<()> {
    let mut profile = io::read_profile(&a.profile)?;
    match a.track {
        TrackArg::Average => {}
        TrackArg::Left => profile.right = None,
        TrackArg::Right => {
            let right = profile.right.take().ok_or_else(|| invalid("track", "profile has no right track"))?;
            profile.left = right;
        }
    }
    let segments = iri_from_profile(&profile, &IriConfig::new(a.segment_length, a.spacing)?)?;
    io::write_segments(&a.out, &segments)
}

fn parse_alignment(spec: &str) -> Result<ProfileAlignment> {
    let mut parts = spec.split(':');
    match parts.next() {
        Some("odometry") => Ok(ProfileAlignment::Odometry),
        Some("gnss") => {
            let d = parts.next().map(|v| parse_f64("match", v)).transpose()?.unwrap_or(4.0);
            let phi = parts.next().map(|v| parse_f64("match", v)).transpose()?.unwrap_or(45.0);
            Ok(ProfileAlignment::Gnss(MatchConfig::new(d, phi)?))
        }
        _ => Err(invalid("match", format!("expected odometry or gnss[:DMAX:PHIMAX], got `{spec}`"))),
    }
}

fn apply_init(init: &str, beta: &mut Beta, mu: &mut f64) -> Result<()> {
    for item in init.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| invalid("init", format!("bad entry `{item}`")))?;
        let v = parse_f64("init", v)?;
        match k.trim() {
            "K_s" => beta.k_s = v,
            "C_s" => beta.c_s = v,
            "K_t" => beta.k_t = v,
            "I_s" => beta.i_s = v,
            "mu" => *mu = v,
            other => return Err(invalid("init", format!("unknown parameter `{other}`"))),
        }
    }
    Ok(())
}

fn sysid(a: SysidArgs) -> Result<()> {
    let drive = io::read_drive(&a.drive)?;
    let profile = io::read_profile(&a.profile)?;
    let fixed: VehicleParams = io::load_params(&a.params)?;
    let l = fixed.l.ok_or_else(|| invalid("l", "parameter file must provide l"))?;
    let section = road_inputs_for_drive(&drive, &profile, parse_alignment(&a.alignment)?)?;
    let n = section.inputs.len();
    let recs = &drive.records[section.first..section.first + n];
    let measured = TimeSeries::new(
        section.inputs.t0,
        section.inputs.dt,
        vec![
            recs.iter().map(|r| r.az - roughtrack::signal::GRAVITY).collect(),
            recs.iter().map(|r| r.ax).collect(),
        ],
    )?;
    let mut problem = SysIdProblem::new(measured, section.inputs, fixed.m_s, fixed.m_u, l);
    let (lo, hi) = a
        .band
        .split_once(':')
        .ok_or_else(|| invalid("band", "expected LO:HI"))?;
    problem.band = (parse_f64("band", lo)?, parse_f64("band", hi)?);
    problem.smoothing = a.smoothing;
    problem.starts = a.starts;
    problem.seed = a.seed;
    if let Some(init) = &a.init {
        apply_init(init, &mut problem.init, &mut problem.mu0)?;
    }
    let r = identify(&problem)?;
    let b = r.beta;
    io::write_key_values(
        &a.out,
        &[
            ("m_s", fmt_f64(fixed.m_s)),
            ("m_u", fmt_f64(fixed.m_u)),
            ("l", fmt_f64(l)),
            ("K_s", fmt_f64(b.k_s)),
            ("C_s", fmt_f64(b.c_s)),
            ("K_t", fmt_f64(b.k_t)),
            ("I_s", fmt_f64(b.i_s)),
            ("mu", fmt_f64(r.mu)),
            ("cost", fmt_f64(r.cost)),
            ("initial_cost", fmt_f64(r.initial_cost)),
            ("iterations", r.iterations.to_string()),
            ("converged", r.converged.to_string()),
        ],
    )?;
    if let Some(p) = &a.params_out {
        io::write_atomic(p, io::format_params(&problem.params(&b)).as_bytes())?;
    }
    if !r.converged {
        eprintln!("warning: identification stopped before convergence");
    }
    Ok(())
}

fn match_cmd(a: MatchArgs) -> Result<()> {
    let imu = io::read_trace(&a.imu)?;
    let reference = io::read_trace(&a.reference)?;
    let result = match_traces(&imu, &reference, &MatchConfig::new(a.dmax, a.phimax)?)?;
    io::write_matches(&a.out, &result)
}

fn eval(a: EvalArgs) -> Result<()> {
    let est = io::read_segments(&a.est)?;
    let reference = io::read_segments(&a.reference)?;
    let mut parts = a.align.split(':');
    let how = match parts.next() {
        Some("station") => Alignment::Station,
        Some("gnss") => Alignment::Gnss {
            d_max: parts.next().map(|v| parse_f64("align", v)).transpose()?.unwrap_or(20.0),
        },
        _ => return Err(invalid("align", format!("expected station or gnss[:DMAX], got `{}`", a.align))),
    };
    let report = evaluate(&est, &reference, how)?;
    let row = |label: String, b: &roughtrack::pipeline::BinStats| {
        vec![
            label,
            b.n.to_string(),
            fmt_f64(b.mean),
            fmt_f64(b.std),
            fmt_f64(b.rmse),
            fmt_f64(b.distance_km),
        ]
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iri_bin_mm_per_m", "n_segments", "mean_error", "std_error", "rmse", "distance_km"])
        .map_err(Error::from)?;
    for b in &report.bins {
        w.write_record(row(format!("{}-{}", b.lo, b.hi), b)).map_err(Error::from)?;
    }
    w.write_record(row("all".into(), &report.overall)).map_err(Error::from)?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    io::write_atomic(&a.out, &bytes)?;

    if let Some(path) = &a.hist {
        let h = &report.histogram;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["bin_lo_mm_per_m", "bin_hi_mm_per_m", "estimate_count", "reference_count"])
            .map_err(Error::from)?;
        for i in 0..h.estimate.len() {
            w.write_record([
                fmt_f64(i as f64 * h.width),
                fmt_f64((i + 1) as f64 * h.width),
                h.estimate[i].to_string(),
                h.reference[i].to_string(),
            ])
            .map_err(Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        io::write_atomic(path, &bytes)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Iri(a) => iri(a),
        Command::Sysid(a) => sysid(a),
        Command::Match(a) => match_cmd(a),
        Command::Eval(a) => eval(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

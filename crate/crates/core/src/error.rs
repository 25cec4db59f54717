use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("elevation {0}° outside [-90, 90]")]
    ElevationOutOfRange(f64),
    #[error("non-finite angle or time value")]
    NonFinite,
    #[error("bin index ({azimuth_bin}, {elevation_bin}) out of range")]
    BinOutOfRange { azimuth_bin: usize, elevation_bin: usize },
    #[error("pose track: {0}")]
    PoseTrack(&'static str),

    #[error("signal of {len} samples is shorter than one window of {window}")]
    SignalTooShort { len: usize, window: usize },
    #[error("window size {0} is not a power of two")]
    WindowNotPowerOfTwo(usize),
    #[error("hop {hop} incompatible with window {window}")]
    InvalidHop { hop: usize, window: usize },
    #[error("inconsistent shape: {0}")]
    Shape(String),
    #[error("empty convolution schedule")]
    EmptySchedule,
    #[error("negative delay {0}")]
    NegativeDelay(f64),
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("channel lengths differ ({left} vs {right})")]
    ChannelLengthMismatch { left: usize, right: usize },
    #[error("signal contains non-finite samples")]
    NonFiniteSample,

    #[error("grid layouts differ: {0}")]
    LayoutMismatch(String),
    #[error("fft size mismatch ({0} vs {1})")]
    FftSizeMismatch(usize, usize),
    #[error("grid has no valid bins")]
    EmptyGrid,
    #[error("impulse response length {ir_length} exceeds fft size {fft_size}")]
    IrTooLong { ir_length: usize, fft_size: usize },
    #[error("generic grid has no data at bin ({azimuth_bin}, {elevation_bin})")]
    MissingGenericBin { azimuth_bin: usize, elevation_bin: usize },
    #[error("inverse FFT imaginary residue {0:e} exceeds tolerance")]
    NonRealSpectrum(f64),

    #[error("room: {0}")]
    Room(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("source has {len} samples, scenario needs {needed}")]
    SourceTooShort { len: usize, needed: usize },

    #[error("frame count mismatch: estimate has {estimate}, recording has {recording}")]
    FrameCountMismatch { estimate: usize, recording: usize },
    #[error("predictor input missing: {0}")]
    MissingPredictorInput(&'static str),
    #[error("weight fingerprint mismatch: {0}")]
    Fingerprint(String),
    #[error("weight bundle: {0}")]
    WeightShape(String),
    #[error("non-finite activation in layer {0}")]
    NonFiniteActivation(String),
    #[error("no recordings given")]
    NoRecordings,
    #[error("gain {0} cannot be accumulated")]
    GainOutOfRange(f64),
    #[error("accumulator overflow")]
    AccumulatorOverflow,
    #[error("median requested but the accumulator did not retain samples")]
    MedianUnavailable,

    #[error("empty frequency range")]
    EmptyRange,
}

//! WAV input and output through `hound`.

use std::path::Path;

use earfield_core::dsp::{BinauralSignal, MonoSignal};
use earfield_core::SAMPLE_RATE_HZ;
use hound::{SampleFormat, WavSpec};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Audio {
    Mono(MonoSignal),
    Binaural(BinauralSignal),
}

impl Audio {
    pub fn sample_rate_hz(&self) -> u32 {
        match self {
            Audio::Mono(m) => m.sample_rate_hz,
            Audio::Binaural(b) => b.sample_rate_hz,
        }
    }

    /// Mono signal; stereo files are averaged.
    pub fn into_mono(self) -> Result<MonoSignal> {
        match self {
            Audio::Mono(m) => Ok(m),
            Audio::Binaural(b) => {
                let samples = b.left.iter().zip(&b.right).map(|(l, r)| 0.5 * (l + r)).collect();
                Ok(MonoSignal::new(b.sample_rate_hz, samples)?)
            }
        }
    }
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> Error + '_ {
    move |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a PCM16 or float32 WAV with one or two channels. PCM16 samples
/// are scaled by 1/32768.
pub fn read_wav(path: &Path) -> Result<Audio> {
    let mut reader = hound::WavReader::open(path).map_err(wav_err(path))?;
    let spec = reader.spec();
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err(path))?,
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err(path))?,
        (fmt, bits) => {
            return Err(Error::format(
                "wav",
                format!("{}: unsupported {bits}-bit {fmt:?} samples", path.display()),
            ))
        }
    };
    let fs = spec.sample_rate;
    match spec.channels {
        1 => Ok(Audio::Mono(MonoSignal::new(fs, samples)?)),
        2 => {
            let left = samples.iter().step_by(2).copied().collect();
            let right = samples.iter().skip(1).step_by(2).copied().collect();
            Ok(Audio::Binaural(BinauralSignal::new(fs, left, right)?))
        }
        n => Err(Error::format("wav", format!("{}: {n} channels", path.display()))),
    }
}

/// Reads a WAV and rejects any rate other than the pipeline's 48 kHz.
pub fn read_pipeline_wav(path: &Path) -> Result<Audio> {
    let audio = read_wav(path)?;
    if audio.sample_rate_hz() != SAMPLE_RATE_HZ {
        return Err(Error::SampleRate {
            path: path.to_path_buf(),
            found: audio.sample_rate_hz(),
            expected: SAMPLE_RATE_HZ,
        });
    }
    Ok(audio)
}

pub fn read_binaural(path: &Path) -> Result<BinauralSignal> {
    match read_pipeline_wav(path)? {
        Audio::Binaural(b) => Ok(b),
        Audio::Mono(_) => Err(Error::format("wav", format!("{}: expected two channels", path.display()))),
    }
}

pub fn read_mono(path: &Path) -> Result<MonoSignal> {
    match read_pipeline_wav(path)? {
        Audio::Mono(m) => Ok(m),
        Audio::Binaural(_) => Err(Error::format("wav", format!("{}: expected one channel", path.display()))),
    }
}

fn write_f32(path: &Path, fs: u32, channels: u16, interleaved: impl Iterator<Item = f64>) -> Result<()> {
    let spec = WavSpec {
        channels,
        sample_rate: fs,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err(path))?;
    for s in interleaved {
        w.write_sample(s as f32).map_err(wav_err(path))?;
    }
    w.finalize().map_err(wav_err(path))
}

/// Writes a float32 WAV.
pub fn write_mono(path: &Path, signal: &MonoSignal) -> Result<()> {
    write_f32(path, signal.sample_rate_hz, 1, signal.samples.iter().copied())
}

/// Writes a float32 stereo WAV, left channel first.
pub fn write_binaural(path: &Path, signal: &BinauralSignal) -> Result<()> {
    let it = signal.left.iter().zip(&signal.right).flat_map(|(l, r)| [*l, *r]);
    write_f32(path, signal.sample_rate_hz, 2, it)
}

/// Writes a PCM16 WAV, clipping to [-1, 1).
pub fn write_mono_pcm16(path: &Path, signal: &MonoSignal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err(path))?;
    for s in &signal.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(wav_err(path))?;
    }
    w.finalize().map_err(wav_err(path))
}

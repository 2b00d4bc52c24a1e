//! Record loading shared by the subcommands.

use std::path::Path;

use clap::ValueEnum;
use wecg::signal_io::{self, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One sample per line, '#'-prefixed key=value headers.
    Text,
    /// PhysioNet format-212 packed binary.
    F212,
}

/// Flags controlling how a record file becomes a `Signal`.
#[derive(Debug, Clone, clap::Args)]
pub struct InputOpts {
    /// Input format; inferred from the extension (.dat/.212 = f212) if omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,

    /// Channel of a format-212 record (0 = MLII).
    #[arg(long, default_value_t = 0)]
    pub channel: usize,

    /// Sample count for format-212 input; defaults to the whole file.
    #[arg(long)]
    pub samples: Option<usize>,

    /// Baseline subtracted from every sample after reading.
    #[arg(long, default_value_t = 0.0)]
    pub baseline: f64,

    /// Override the bits-per-sample used for the uncompressed size in CR.
    #[arg(long)]
    pub adc_bits: Option<u32>,
}

pub fn load_signal(path: &Path, opts: &InputOpts) -> Result<Signal, crate::AppError> {
    let format = opts.format.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some("dat") | Some("212") => InputFormat::F212,
            _ => InputFormat::Text,
        }
    });
    let mut signal = match format {
        InputFormat::Text => {
            let text = std::fs::read_to_string(path)?;
            signal_io::read_text(&text)?
        }
        InputFormat::F212 => {
            let bytes = std::fs::read(path)?;
            let n = opts.samples.unwrap_or(bytes.len() / 3);
            signal_io::read_format212(&bytes, opts.channel, n)?
        }
    };
    if signal.record_id.is_empty() {
        signal.record_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    if let Some(bits) = opts.adc_bits {
        if !(8..=32).contains(&bits) {
            return Err(wecg::Error::InvalidParam(format!("adc_bits {bits} outside [8, 32]")).into());
        }
        signal.adc_bits = bits;
    }
    if opts.baseline != 0.0 {
        signal = signal_io::subtract_baseline(&signal, opts.baseline);
    }
    Ok(signal)
}

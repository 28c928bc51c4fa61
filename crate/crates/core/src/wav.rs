//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads mono or stereo PCM (16/24-bit integer) and IEEE float (32-bit)
//! files; stereo is downmixed by averaging. Writing is 32-bit float mono,
//! used by the scenario generator. Parse errors name the offending chunk.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed WAV ({chunk} chunk): {reason}")]
    Chunk {
        chunk: &'static str,
        reason: String,
    },
    #[error("unsupported WAV format: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleFormat {
    Int16,
    Int24,
    Float32,
}

impl SampleFormat {
    fn bytes_per_sample(self) -> usize {
        match self {
            SampleFormat::Int16 => 2,
            SampleFormat::Int24 => 3,
            SampleFormat::Float32 => 4,
        }
    }
}

/// Incremental reader over the data chunk; frames are returned mono.
pub struct WavReader {
    reader: BufReader<File>,
    sample_rate: u32,
    channels: u16,
    format: SampleFormat,
    frames_remaining: u64,
}

impl WavReader {
    pub fn open(path: &Path) -> Result<Self, WavError> {
        let file = File::open(path).map_err(|e| WavError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut reader = BufReader::new(file);

        let chunk_err = |chunk: &'static str, reason: String| WavError::Chunk { chunk, reason };
        let mut hdr = [0_u8; 12];
        reader
            .read_exact(&mut hdr)
            .map_err(|e| chunk_err("RIFF", e.to_string()))?;
        if &hdr[0..4] != b"RIFF" {
            return Err(chunk_err("RIFF", "missing RIFF tag".into()));
        }
        if &hdr[8..12] != b"WAVE" {
            return Err(chunk_err("RIFF", "missing WAVE form type".into()));
        }

        let mut fmt: Option<(u16, u16, u32, u16)> = None; // code, channels, rate, bits
        loop {
            let mut chdr = [0_u8; 8];
            if reader.read_exact(&mut chdr).is_err() {
                return Err(chunk_err("data", "no data chunk before end of file".into()));
            }
            let id = [chdr[0], chdr[1], chdr[2], chdr[3]];
            let size = u32::from_le_bytes([chdr[4], chdr[5], chdr[6], chdr[7]]);
            match &id {
                b"fmt " => {
                    if size < 16 {
                        return Err(chunk_err("fmt ", format!("chunk too small ({size} bytes)")));
                    }
                    let mut body = vec![0_u8; size as usize + (size as usize & 1)];
                    reader
                        .read_exact(&mut body)
                        .map_err(|e| chunk_err("fmt ", e.to_string()))?;
                    let code = u16::from_le_bytes([body[0], body[1]]);
                    let channels = u16::from_le_bytes([body[2], body[3]]);
                    let rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
                    let bits = u16::from_le_bytes([body[14], body[15]]);
                    fmt = Some((code, channels, rate, bits));
                }
                b"data" => {
                    let (code, channels, rate, bits) = fmt
                        .ok_or_else(|| chunk_err("fmt ", "data chunk before fmt chunk".into()))?;
                    let format = match (code, bits) {
                        (1, 16) => SampleFormat::Int16,
                        (1, 24) => SampleFormat::Int24,
                        (3, 32) => SampleFormat::Float32,
                        _ => {
                            return Err(WavError::Unsupported(format!(
                                "format code {code} with {bits} bits"
                            )))
                        }
                    };
                    if !(1..=2).contains(&channels) {
                        return Err(WavError::Unsupported(format!("{channels} channels")));
                    }
                    if rate == 0 {
                        return Err(chunk_err("fmt ", "zero sample rate".into()));
                    }
                    let frame_bytes = format.bytes_per_sample() * channels as usize;
                    return Ok(Self {
                        reader,
                        sample_rate: rate,
                        channels,
                        format,
                        frames_remaining: u64::from(size) / frame_bytes as u64,
                    });
                }
                _ => {
                    // skip unknown chunk (word-aligned)
                    let skip = i64::from(size) + i64::from(size & 1);
                    reader
                        .seek(SeekFrom::Current(skip))
                        .map_err(|e| chunk_err("data", format!("seeking past chunk: {e}")))?;
                }
            }
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn frames_remaining(&self) -> u64 {
        self.frames_remaining
    }

    /// Reads up to `max_frames` mono frames; returns fewer at end of data.
    pub fn read_frames(&mut self, max_frames: usize) -> Result<Vec<f64>, WavError> {
        let n = (self.frames_remaining.min(max_frames as u64)) as usize;
        let frame_bytes = self.format.bytes_per_sample() * self.channels as usize;
        let mut raw = vec![0_u8; n * frame_bytes];
        self.reader
            .read_exact(&mut raw)
            .map_err(|e| WavError::Chunk {
                chunk: "data",
                reason: format!("short read: {e}"),
            })?;
        self.frames_remaining -= n as u64;

        let ch = self.channels as usize;
        let mut out = Vec::with_capacity(n);
        for frame in raw.chunks_exact(frame_bytes) {
            let mut acc = 0.0_f64;
            for c in 0..ch {
                let s = &frame[c * self.format.bytes_per_sample()..];
                acc += match self.format {
                    SampleFormat::Int16 => {
                        f64::from(i16::from_le_bytes([s[0], s[1]])) / 32768.0
                    }
                    SampleFormat::Int24 => {
                        let v = i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8;
                        f64::from(v) / 8_388_608.0
                    }
                    SampleFormat::Float32 => {
                        f64::from(f32::from_le_bytes([s[0], s[1], s[2], s[3]]))
                    }
                };
            }
            out.push(acc / ch as f64);
        }
        Ok(out)
    }
}

/// Writes a mono 32-bit float WAV file.
pub fn write_wav_f32(path: &Path, sample_rate: u32, samples: &[f32]) -> Result<(), WavError> {
    let file = File::create(path).map_err(|e| WavError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let data_len = (samples.len() * 4) as u32;
    let write = |w: &mut BufWriter<File>, bytes: &[u8]| {
        w.write_all(bytes).map_err(|e| WavError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write(&mut w, b"RIFF")?;
    write(&mut w, &(36 + data_len).to_le_bytes())?;
    write(&mut w, b"WAVE")?;
    write(&mut w, b"fmt ")?;
    write(&mut w, &16_u32.to_le_bytes())?;
    write(&mut w, &3_u16.to_le_bytes())?; // IEEE float
    write(&mut w, &1_u16.to_le_bytes())?; // mono
    write(&mut w, &sample_rate.to_le_bytes())?;
    write(&mut w, &(sample_rate * 4).to_le_bytes())?;
    write(&mut w, &4_u16.to_le_bytes())?;
    write(&mut w, &32_u16.to_le_bytes())?;
    write(&mut w, b"data")?;
    write(&mut w, &data_len.to_le_bytes())?;
    for s in samples {
        write(&mut w, &s.to_le_bytes())?;
    }
    w.flush().map_err(|e| WavError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

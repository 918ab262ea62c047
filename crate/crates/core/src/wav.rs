//! Minimal RIFF/WAVE reader and writer: 16-bit PCM and 32-bit float,
//! mono or interleaved multichannel. Internal processing stays in f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

fn wav_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Wav { path: path.to_path_buf(), reason: reason.into() }
}

/// Read a WAV file of any sample rate.
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(wav_err(path, "not a RIFF/WAVE file"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = (pos + 8 + size).min(bytes.len());
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(wav_err(path, "fmt chunk too short"));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos += 8 + size + (size & 1); // chunks are word-aligned
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| wav_err(path, "missing fmt chunk"))?;
    let data = data.ok_or_else(|| wav_err(path, "missing data chunk"))?;
    if channels == 0 {
        return Err(wav_err(path, "zero channels"));
    }
    let channels = channels as usize;

    let interleaved: Vec<f64> = match (format, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        (f, b) => {
            return Err(wav_err(path, format!("unsupported format tag {f} / {b}-bit")));
        }
    };
    let frames = interleaved.len() / channels;
    let mut out = vec![Vec::with_capacity(frames); channels];
    for (i, &x) in interleaved.iter().take(frames * channels).enumerate() {
        out[i % channels].push(x);
    }
    AudioBuffer::new(out, rate)
}

/// Read a WAV file, rejecting anything that is not 16 kHz.
pub fn read_wav_16k(path: &Path) -> Result<AudioBuffer> {
    let buf = read_wav(path)?;
    if buf.sample_rate() != crate::audio::SAMPLE_RATE {
        return Err(wav_err(
            path,
            format!("sample rate {} Hz, expected 16000 Hz", buf.sample_rate()),
        ));
    }
    Ok(buf)
}

/// Write an interleaved WAV file in the given sample format.
pub fn write_wav(path: &Path, buffer: &AudioBuffer, format: SampleFormat) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let channels = buffer.channel_count();
    let frames = buffer.len();
    let (format_tag, bits): (u16, u16) = match format {
        SampleFormat::Pcm16 => (1, 16),
        SampleFormat::Float32 => (3, 32),
    };
    let bytes_per_sample = (bits / 8) as u32;
    let data_len = (frames * channels) as u32 * bytes_per_sample;
    let byte_rate = buffer.sample_rate() * channels as u32 * bytes_per_sample;
    let block_align = channels as u16 * bytes_per_sample as u16;
    // fmt(24) + fact(12, float only) + data header(8)
    let fact_len: u32 = if format_tag == 3 { 12 } else { 0 };
    let riff_len = 4 + 24 + fact_len + 8 + data_len;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"RIFF")?;
    w.write_all(&riff_len.to_le_bytes())?;
    w.write_all(b"WAVE")?;
    w.write_all(b"fmt ")?;
    w.write_all(&16u32.to_le_bytes())?;
    w.write_all(&format_tag.to_le_bytes())?;
    w.write_all(&(channels as u16).to_le_bytes())?;
    w.write_all(&buffer.sample_rate().to_le_bytes())?;
    w.write_all(&byte_rate.to_le_bytes())?;
    w.write_all(&block_align.to_le_bytes())?;
    w.write_all(&bits.to_le_bytes())?;
    if format_tag == 3 {
        w.write_all(b"fact")?;
        w.write_all(&4u32.to_le_bytes())?;
        w.write_all(&(frames as u32).to_le_bytes())?;
    }
    w.write_all(b"data")?;
    w.write_all(&data_len.to_le_bytes())?;
    for i in 0..frames {
        for ch in 0..channels {
            let x = buffer.channel(ch)[i];
            match format {
                SampleFormat::Pcm16 => {
                    let v = (x * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
                    w.write_all(&v.to_le_bytes())?;
                }
                SampleFormat::Float32 => {
                    w.write_all(&(x as f32).to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float32_roundtrip_is_exact_at_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples: Vec<f64> = (0..1000).map(|i| ((i as f32) * 0.001).sin() as f64).collect();
        let buf = AudioBuffer::new(vec![samples.clone(), samples], 16_000).unwrap();
        write_wav(&path, &buf, SampleFormat::Float32).unwrap();
        let back = read_wav_16k(&path).unwrap();
        assert_eq!(back.channel_count(), 2);
        assert_eq!(back.len(), 1000);
        for ch in 0..2 {
            for (a, b) in back.channel(ch).iter().zip(buf.channel(ch)) {
                assert_eq!(*a, *b as f32 as f64);
            }
        }
    }

    #[test]
    fn pcm16_roundtrip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples: Vec<f64> = (0..256).map(|i| (i as f64 / 256.0) - 0.5).collect();
        let buf = AudioBuffer::mono(samples.clone(), 16_000);
        write_wav(&path, &buf, SampleFormat::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        for (a, b) in back.channel(0).iter().zip(&samples) {
            assert!((a - b).abs() < 1.0 / 32000.0);
        }
    }

    #[test]
    fn wrong_sample_rate_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let buf = AudioBuffer::mono(vec![0.1; 64], 44_100);
        write_wav(&path, &buf, SampleFormat::Pcm16).unwrap();
        let err = read_wav_16k(&path).unwrap_err();
        assert!(err.to_string().contains("44100"));
    }
}

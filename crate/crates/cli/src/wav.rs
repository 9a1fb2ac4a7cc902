//! Minimal PCM16 mono WAV IO. Anything else is rejected with a message
//! naming what was found, never coerced.

use std::fs;
use std::io::{self, Error, ErrorKind};
use std::path::Path;

fn bad(msg: String) -> Error {
    Error::new(ErrorKind::InvalidData, msg)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Read a PCM16 mono file; returns samples in [-1, 1) and the sample rate.
pub fn read(path: &Path) -> io::Result<(Vec<f32>, u32)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad(format!("{}: not a RIFF/WAVE file", path.display())));
    }

    let mut fmt: Option<&[u8]> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(&bytes, pos + 4) as usize;
        let body_end = pos + 8 + size;
        if body_end > bytes.len() {
            return Err(bad(format!(
                "{}: chunk {:?} runs past end of file",
                path.display(),
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => fmt = Some(body),
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + (size & 1); // chunks are word-aligned
    }

    let fmt = fmt.ok_or_else(|| bad(format!("{}: missing fmt chunk", path.display())))?;
    if fmt.len() < 16 {
        return Err(bad(format!("{}: fmt chunk too short", path.display())));
    }
    let format = u16_at(fmt, 0);
    let channels = u16_at(fmt, 2);
    let sample_rate = u32_at(fmt, 4);
    let bits = u16_at(fmt, 14);
    if format != 1 || channels != 1 || bits != 16 {
        return Err(bad(format!(
            "{}: only PCM16 mono is supported (format {format}, {channels} ch, {bits} bit)",
            path.display()
        )));
    }

    let data = data.ok_or_else(|| bad(format!("{}: missing data chunk", path.display())))?;
    if data.len() % 2 != 0 {
        return Err(bad(format!(
            "{}: data chunk has an odd byte count",
            path.display()
        )));
    }
    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0)
        .collect();
    Ok((samples, sample_rate))
}

/// Write PCM16 mono; samples are clamped to [-1, 1] before quantizing.
pub fn write(path: &Path, samples: &[f32], sample_rate: u32) -> io::Result<()> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("streamac-wav-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn roundtrip_is_quantization_exact() {
        let p = tmp("roundtrip.wav");
        let samples: Vec<f32> = (0..1000).map(|i| ((i as f32) * 0.013).sin() * 0.7).collect();
        write(&p, &samples, 16000).unwrap();
        let (got, rate) = read(&p).unwrap();
        assert_eq!(rate, 16000);
        assert_eq!(got.len(), samples.len());
        // Write scales by 32767, read divides by 32768, so the error bound
        // is (|s| + 0.5) / 32768.
        for (a, b) in got.iter().zip(&samples) {
            assert!((a - b).abs() <= (b.abs() + 0.5) / 32768.0 + 1e-7);
        }
        // A second read sees identical floats.
        let (again, _) = read(&p).unwrap();
        assert_eq!(got, again);
    }

    #[test]
    fn stereo_is_rejected() {
        let p = tmp("stereo.wav");
        write(&p, &[0.0; 8], 16000).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[22] = 2; // channel count
        fs::write(&p, bytes).unwrap();
        let err = read(&p).unwrap_err().to_string();
        assert!(err.contains("2 ch"), "{err}");
    }

    #[test]
    fn non_pcm_is_rejected() {
        let p = tmp("float.wav");
        write(&p, &[0.0; 8], 16000).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[20] = 3; // IEEE float format tag
        fs::write(&p, bytes).unwrap();
        assert!(read(&p).unwrap_err().to_string().contains("format 3"));
    }

    #[test]
    fn garbage_is_rejected() {
        let p = tmp("garbage.wav");
        fs::write(&p, b"not audio at all").unwrap();
        assert!(read(&p).unwrap_err().to_string().contains("RIFF"));
    }
}

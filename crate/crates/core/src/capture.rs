//! Raw IQ capture files: interleaved signed 16-bit little-endian I/Q pairs
//! plus a text sidecar (`<payload>.meta`) carrying the sample rate, sample
//! count, polarization tag, and quantization scale.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::dsp::IqBuffer;
use crate::error::{Error, Result};

const I16_FULL_SCALE: f64 = 32767.0;

/// Sidecar metadata for one capture payload.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSidecar {
    pub sample_rate: f64,
    pub sample_count: usize,
    pub polarization: String,
    /// Linear factor the samples were divided by before int16 quantization.
    pub scale: f64,
}

impl IqSidecar {
    /// Parses `key=value` lines. All four keys are required; unknown keys
    /// are rejected.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut sample_rate = None;
        let mut sample_count = None;
        let mut polarization = None;
        let mut scale = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Capture(format!("sidecar line {} has no '='", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "sample_rate" => {
                    sample_rate = Some(value.parse::<f64>().map_err(|e| {
                        Error::Capture(format!("bad sample_rate {value:?}: {e}"))
                    })?)
                }
                "sample_count" => {
                    sample_count = Some(value.parse::<usize>().map_err(|e| {
                        Error::Capture(format!("bad sample_count {value:?}: {e}"))
                    })?)
                }
                "polarization" => polarization = Some(value.to_string()),
                "scale" => {
                    scale = Some(value.parse::<f64>().map_err(|e| {
                        Error::Capture(format!("bad scale {value:?}: {e}"))
                    })?)
                }
                other => {
                    return Err(Error::Capture(format!("unknown sidecar key {other:?}")));
                }
            }
        }
        let sidecar = Self {
            sample_rate: sample_rate.ok_or_else(|| Error::Capture("missing sample_rate".into()))?,
            sample_count: sample_count
                .ok_or_else(|| Error::Capture("missing sample_count".into()))?,
            polarization: polarization
                .ok_or_else(|| Error::Capture("missing polarization".into()))?,
            scale: scale.ok_or_else(|| Error::Capture("missing scale".into()))?,
        };
        sidecar.validate()?;
        Ok(sidecar)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(Error::Capture(format!(
                "sample_rate must be positive and finite, got {}",
                self.sample_rate
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::Capture("sample_count must be positive".into()));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Capture(format!(
                "scale must be positive and finite, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        format!(
            "sample_rate={}\nsample_count={}\npolarization={}\nscale={}\n",
            self.sample_rate, self.sample_count, self.polarization, self.scale
        )
    }
}

fn sidecar_path(payload: &Path) -> PathBuf {
    let mut os = payload.as_os_str().to_os_string();
    os.push(".meta");
    PathBuf::from(os)
}

/// Quantizes a buffer to interleaved int16 I/Q. Samples are divided by the
/// peak component magnitude so everything fits in [-1, 1]; the scale is
/// returned for the sidecar.
pub fn encode_payload(x: &IqBuffer) -> (Vec<u8>, f64) {
    let peak = x
        .samples()
        .iter()
        .map(|s| s.re.abs().max(s.im.abs()))
        .fold(0.0f64, f64::max);
    let scale = if peak > 0.0 { peak } else { 1.0 };
    let mut bytes = Vec::with_capacity(4 * x.len());
    for s in x.samples() {
        let i = (s.re / scale * I16_FULL_SCALE).round() as i16;
        let q = (s.im / scale * I16_FULL_SCALE).round() as i16;
        bytes.extend_from_slice(&i.to_le_bytes());
        bytes.extend_from_slice(&q.to_le_bytes());
    }
    (bytes, scale)
}

/// Decodes an int16 payload against its sidecar. The byte length must equal
/// `4 * sample_count` exactly.
pub fn decode_payload(bytes: &[u8], sidecar: &IqSidecar) -> Result<IqBuffer> {
    sidecar.validate()?;
    let expected = sidecar
        .sample_count
        .checked_mul(4)
        .ok_or_else(|| Error::Capture("sample_count overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::Capture(format!(
            "payload is {} bytes but the sidecar declares {} samples ({} bytes)",
            bytes.len(),
            sidecar.sample_count,
            expected
        )));
    }
    let samples: Vec<Complex64> = bytes
        .chunks_exact(4)
        .map(|c| {
            let i = i16::from_le_bytes([c[0], c[1]]) as f64;
            let q = i16::from_le_bytes([c[2], c[3]]) as f64;
            Complex64::new(
                i / I16_FULL_SCALE * sidecar.scale,
                q / I16_FULL_SCALE * sidecar.scale,
            )
        })
        .collect();
    IqBuffer::new(samples, sidecar.sample_rate)
}

/// Writes the payload at `path` and the sidecar at `path.meta`.
pub fn write_iq(path: &Path, x: &IqBuffer, polarization: &str) -> Result<()> {
    let (bytes, scale) = encode_payload(x);
    let sidecar = IqSidecar {
        sample_rate: x.sample_rate(),
        sample_count: x.len(),
        polarization: polarization.to_string(),
        scale,
    };
    fs::write(path, bytes)?;
    fs::write(sidecar_path(path), sidecar.render())?;
    Ok(())
}

/// Reads a capture written by [`write_iq`].
pub fn read_iq(path: &Path) -> Result<(IqBuffer, IqSidecar)> {
    let sidecar_text = fs::read_to_string(sidecar_path(path))?;
    let sidecar = IqSidecar::parse_str(&sidecar_text)?;
    let bytes = fs::read(path)?;
    let buffer = decode_payload(&bytes, &sidecar)?;
    Ok((buffer, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(n: usize, fs: f64, f0: f64, amp: f64) -> IqBuffer {
        IqBuffer::new(
            (0..n)
                .map(|t| Complex64::from_polar(amp, 2.0 * PI * f0 * t as f64 / fs))
                .collect(),
            fs,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("capture.iq");
        let x = tone(4096, 62.5e6, 1.0e6, 0.7);
        write_iq(&path, &x, "V").unwrap();
        let (back, sidecar) = read_iq(&path).unwrap();
        assert_eq!(back.len(), x.len());
        assert_eq!(sidecar.polarization, "V");
        let lsb = sidecar.scale / I16_FULL_SCALE;
        for (a, b) in x.samples().iter().zip(back.samples()) {
            assert!((a.re - b.re).abs() <= lsb && (a.im - b.im).abs() <= lsb);
        }
        // second write/read of the decoded data is bit-exact
        let path2 = dir.path().join("capture2.iq");
        write_iq(&path2, &back, "V").unwrap();
        let (again, _) = read_iq(&path2).unwrap();
        let max: f64 = again
            .samples()
            .iter()
            .zip(back.samples())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max <= 1e-9);
    }

    #[test]
    fn quantization_snr_of_full_scale_tone() {
        let x = tone(1 << 15, 10.0e6, 123_456.0, 1.0);
        let (bytes, scale) = encode_payload(&x);
        let sidecar = IqSidecar {
            sample_rate: x.sample_rate(),
            sample_count: x.len(),
            polarization: "V".into(),
            scale,
        };
        let back = decode_payload(&bytes, &sidecar).unwrap();
        let sig: f64 = x.samples().iter().map(|s| s.norm_sqr()).sum();
        let err: f64 = x
            .samples()
            .iter()
            .zip(back.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let snr_db = 10.0 * (sig / err).log10();
        assert!(snr_db >= 80.0, "quantization SNR {snr_db:.1} dB");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let x = tone(64, 1.0e6, 1000.0, 1.0);
        let (mut bytes, scale) = encode_payload(&x);
        bytes.truncate(bytes.len() - 5);
        let sidecar = IqSidecar {
            sample_rate: 1.0e6,
            sample_count: 64,
            polarization: "H".into(),
            scale,
        };
        assert!(matches!(
            decode_payload(&bytes, &sidecar),
            Err(Error::Capture(_))
        ));
    }

    #[test]
    fn sidecar_parse_rejects_junk() {
        assert!(IqSidecar::parse_str("").is_err());
        assert!(IqSidecar::parse_str("sample_rate=1e6\nsample_count=4\npolarization=V").is_err());
        assert!(IqSidecar::parse_str(
            "sample_rate=1e6\nsample_count=4\npolarization=V\nscale=1\nbogus=3"
        )
        .is_err());
        assert!(IqSidecar::parse_str(
            "sample_rate=-5\nsample_count=4\npolarization=V\nscale=1"
        )
        .is_err());
        assert!(IqSidecar::parse_str(
            "sample_rate=1e6\nsample_count=0\npolarization=V\nscale=1"
        )
        .is_err());
        let good = IqSidecar::parse_str(
            "# comment\nsample_rate = 1e6\nsample_count = 4\npolarization = V\nscale = 0.5\n",
        )
        .unwrap();
        assert_eq!(good.sample_count, 4);
        assert_eq!(good.scale, 0.5);
    }

    #[test]
    fn sidecar_render_parse_round_trip() {
        let s = IqSidecar {
            sample_rate: 62.5e6,
            sample_count: 3125,
            polarization: "H".into(),
            scale: 0.985,
        };
        assert_eq!(IqSidecar::parse_str(&s.render()).unwrap(), s);
    }

    #[test]
    fn zero_signal_uses_unit_scale() {
        let x = IqBuffer::new(vec![Complex64::new(0.0, 0.0); 8], 1.0).unwrap();
        let (bytes, scale) = encode_payload(&x);
        assert_eq!(scale, 1.0);
        assert!(bytes.iter().all(|&b| b == 0));
    }
}

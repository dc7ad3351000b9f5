//! Reader for the single-rate, 16-bit subset of EDF.
//!
//! Layout: a 256-byte ASCII main header, then 256 bytes of per-signal header
//! fields (each field stored for all signals before the next field), then
//! fixed-size data records of little-endian `i16` samples. Signals labelled
//! `EDF Annotations` carry EDF+ annotation text rather than samples; their
//! bytes are skipped.

use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

const MAIN_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;
const ANNOTATION_LABEL: &str = "EDF Annotations";

#[derive(Debug, Clone, PartialEq)]
pub struct EdfChannel {
    pub label: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i64,
    pub digital_max: i64,
    /// Physical-unit samples for the whole recording.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfRecording {
    pub sample_rate_hz: f64,
    pub record_duration_s: f64,
    pub channels: Vec<EdfChannel>,
}

impl EdfRecording {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn samples_per_channel(&self) -> usize {
        self.channels.first().map_or(0, |c| c.samples.len())
    }

    /// Channel-major matrix of all samples.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.channel_count();
        let t = self.samples_per_channel();
        DMatrix::from_fn(d, t, |c, s| self.channels[c].samples[s])
    }
}

struct RawSignal {
    label: String,
    physical_dimension: String,
    physical_min: f64,
    physical_max: f64,
    digital_min: i64,
    digital_max: i64,
    samples_per_record: usize,
}

pub fn read_edf(path: impl AsRef<Path>) -> Result<EdfRecording> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_edf(&bytes)
}

fn field(bytes: &[u8], offset: usize, len: usize) -> Result<&str> {
    let slice = bytes.get(offset..offset + len).ok_or_else(|| Error::Truncated {
        offset: bytes.len() as u64,
        detail: format!("header field at byte {offset} needs {len} bytes"),
    })?;
    std::str::from_utf8(slice)
        .map(str::trim)
        .map_err(|_| Error::Unsupported(format!("non-ASCII header field at byte {offset}")))
}

fn number<T: std::str::FromStr>(bytes: &[u8], offset: usize, len: usize, name: &str) -> Result<T> {
    let text = field(bytes, offset, len)?;
    text.parse().map_err(|_| {
        Error::Unsupported(format!(
            "header field {name} at byte {offset} is not a number: {text:?}"
        ))
    })
}

pub fn parse_edf(bytes: &[u8]) -> Result<EdfRecording> {
    if bytes.len() < MAIN_HEADER {
        return Err(Error::Truncated {
            offset: bytes.len() as u64,
            detail: "main header shorter than 256 bytes".into(),
        });
    }
    let version = field(bytes, 0, 8)?;
    if version != "0" {
        return Err(Error::Unsupported(format!("EDF version {version:?}")));
    }
    let declared_records: i64 = number(bytes, 236, 8, "number of data records")?;
    let record_duration_s: f64 = number(bytes, 244, 8, "duration of a data record")?;
    let ns: usize = number(bytes, 252, 4, "number of signals")?;
    if !(record_duration_s > 0.0) {
        return Err(Error::Unsupported(format!(
            "record duration must be positive, got {record_duration_s}"
        )));
    }
    if ns == 0 {
        return Err(Error::EmptyInput("EDF header declares zero signals".into()));
    }

    let header_len = MAIN_HEADER + ns * SIGNAL_HEADER;
    if bytes.len() < header_len {
        return Err(Error::Truncated {
            offset: bytes.len() as u64,
            detail: format!("signal headers need {header_len} bytes"),
        });
    }

    // field widths in the order they appear, each repeated ns times
    let widths = [16usize, 80, 8, 8, 8, 8, 8, 80, 8, 32];
    let mut starts = [0usize; 10];
    let mut acc = MAIN_HEADER;
    for (s, w) in starts.iter_mut().zip(widths) {
        *s = acc;
        acc += w * ns;
    }
    let at = |f: usize, i: usize| starts[f] + i * widths[f];

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        signals.push(RawSignal {
            label: field(bytes, at(0, i), 16)?.to_string(),
            physical_dimension: field(bytes, at(2, i), 8)?.to_string(),
            physical_min: number(bytes, at(3, i), 8, "physical minimum")?,
            physical_max: number(bytes, at(4, i), 8, "physical maximum")?,
            digital_min: number(bytes, at(5, i), 8, "digital minimum")?,
            digital_max: number(bytes, at(6, i), 8, "digital maximum")?,
            samples_per_record: number(bytes, at(8, i), 8, "samples per record")?,
        });
    }

    let data_signals: Vec<usize> = (0..ns)
        .filter(|&i| signals[i].label != ANNOTATION_LABEL)
        .collect();
    let Some(&first) = data_signals.first() else {
        return Err(Error::EmptyInput("EDF contains only annotation signals".into()));
    };
    let per_record = signals[first].samples_per_record;
    for &i in &data_signals {
        if signals[i].samples_per_record != per_record {
            return Err(Error::Unsupported(format!(
                "mixed sampling rates: signal {} has {} samples per record, signal {} has {}",
                first, per_record, i, signals[i].samples_per_record
            )));
        }
        if signals[i].digital_max == signals[i].digital_min {
            return Err(Error::DegenerateScaling {
                signal: i,
                value: signals[i].digital_min,
            });
        }
    }

    let record_bytes: usize = signals.iter().map(|s| s.samples_per_record * 2).sum();
    let available = bytes.len() - header_len;
    let records = if declared_records < 0 {
        available / record_bytes.max(1)
    } else {
        declared_records as usize
    };
    let needed = header_len + records * record_bytes;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            offset: bytes.len() as u64,
            detail: format!("{records} data records need {needed} bytes"),
        });
    }

    let mut channels: Vec<EdfChannel> = data_signals
        .iter()
        .map(|&i| {
            let s = &signals[i];
            EdfChannel {
                label: s.label.clone(),
                physical_dimension: s.physical_dimension.clone(),
                physical_min: s.physical_min,
                physical_max: s.physical_max,
                digital_min: s.digital_min,
                digital_max: s.digital_max,
                samples: Vec::with_capacity(records * per_record),
            }
        })
        .collect();

    let mut offset = header_len;
    for _ in 0..records {
        let mut out = 0;
        for s in &signals {
            let n = s.samples_per_record;
            if s.label == ANNOTATION_LABEL {
                offset += 2 * n;
                continue;
            }
            let ch = &mut channels[out];
            let gain = (ch.physical_max - ch.physical_min) / (ch.digital_max - ch.digital_min) as f64;
            for k in 0..n {
                let p = offset + 2 * k;
                let digital = i16::from_le_bytes([bytes[p], bytes[p + 1]]) as i64;
                ch.samples
                    .push(ch.physical_min + (digital - ch.digital_min) as f64 * gain);
            }
            offset += 2 * n;
            out += 1;
        }
    }

    Ok(EdfRecording {
        sample_rate_hz: per_record as f64 / record_duration_s,
        record_duration_s,
        channels,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub struct SignalSpec<'a> {
        pub label: &'a str,
        pub physical: (f64, f64),
        pub digital: (i64, i64),
        pub per_record: usize,
    }

    fn pad(out: &mut Vec<u8>, text: &str, width: usize) {
        let mut b = text.as_bytes().to_vec();
        b.resize(width, b' ');
        out.extend_from_slice(&b[..width]);
    }

    /// `records[r][s]` holds the digital samples for signal `s` in record `r`.
    pub fn build(signals: &[SignalSpec<'_>], records: &[Vec<Vec<i16>>], duration: f64) -> Vec<u8> {
        let ns = signals.len();
        let mut out = Vec::new();
        pad(&mut out, "0", 8);
        pad(&mut out, "X X X X", 80);
        pad(&mut out, "Startdate X X X X", 80);
        pad(&mut out, "01.01.01", 8);
        pad(&mut out, "00.00.00", 8);
        pad(&mut out, &(256 * (ns + 1)).to_string(), 8);
        pad(&mut out, "", 44);
        pad(&mut out, &records.len().to_string(), 8);
        pad(&mut out, &duration.to_string(), 8);
        pad(&mut out, &ns.to_string(), 4);
        for s in signals {
            pad(&mut out, s.label, 16);
        }
        for _ in signals {
            pad(&mut out, "AgAgCl electrode", 80);
        }
        for _ in signals {
            pad(&mut out, "uV", 8);
        }
        for s in signals {
            pad(&mut out, &s.physical.0.to_string(), 8);
        }
        for s in signals {
            pad(&mut out, &s.physical.1.to_string(), 8);
        }
        for s in signals {
            pad(&mut out, &s.digital.0.to_string(), 8);
        }
        for s in signals {
            pad(&mut out, &s.digital.1.to_string(), 8);
        }
        for _ in signals {
            pad(&mut out, "HP:0.1Hz", 80);
        }
        for s in signals {
            pad(&mut out, &s.per_record.to_string(), 8);
        }
        for _ in signals {
            pad(&mut out, "", 32);
        }
        for rec in records {
            for sig in rec {
                for v in sig {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    fn eeg(per_record: usize) -> SignalSpec<'static> {
        SignalSpec {
            label: "C3..",
            physical: (-1000.0, 1000.0),
            digital: (-32768, 32767),
            per_record,
        }
    }

    #[test]
    fn scaling_of_digital_zero() {
        let bytes = build(&[eeg(2)], &[vec![vec![0, 0]]], 1.0);
        let rec = parse_edf(&bytes).unwrap();
        let expected = -1000.0 + 32768.0 * 2000.0 / 65535.0;
        assert_abs_diff_eq!(rec.channels[0].samples[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.01526, epsilon = 1e-5);
        assert_eq!(rec.sample_rate_hz, 2.0);
    }

    #[test]
    fn digital_min_maps_to_physical_min() {
        let bytes = build(&[eeg(4)], &[vec![vec![i16::MIN; 4]], vec![vec![i16::MIN; 4]]], 0.5);
        let rec = parse_edf(&bytes).unwrap();
        assert_eq!(rec.samples_per_channel(), 8);
        assert!(rec.channels[0].samples.iter().all(|&v| v == -1000.0));
        assert_eq!(rec.sample_rate_hz, 8.0);
    }

    #[test]
    fn scaling_is_affine() {
        let (a, b) = (-20000i16, 12000i16);
        let mid = ((a as i32 + b as i32) / 2) as i16;
        let bytes = build(&[eeg(3)], &[vec![vec![a, mid, b]]], 1.0);
        let s = &parse_edf(&bytes).unwrap().channels[0].samples;
        assert_abs_diff_eq!(s[1] - s[0], s[2] - s[1], epsilon = 1e-9);
    }

    #[test]
    fn annotations_signal_is_skipped() {
        let ann = SignalSpec {
            label: "EDF Annotations",
            physical: (-1.0, 1.0),
            digital: (-32768, 32767),
            per_record: 5,
        };
        let recs = vec![vec![vec![1, 2], vec![7; 5], vec![3, 4]]];
        let bytes = build(&[eeg(2), ann, eeg(2)], &recs, 1.0);
        let rec = parse_edf(&bytes).unwrap();
        assert_eq!(rec.channel_count(), 2);
        let m = rec.to_matrix();
        assert_eq!(m.shape(), (2, 2));
        assert!(m[(1, 1)] > m[(1, 0)]);
    }

    #[test]
    fn error_paths() {
        let good = build(&[eeg(2)], &[vec![vec![0, 0]]], 1.0);
        let cut = &good[..good.len() - 1];
        assert!(matches!(parse_edf(cut), Err(Error::Truncated { .. })));
        assert!(matches!(parse_edf(&good[..100]), Err(Error::Truncated { .. })));

        let flat = SignalSpec {
            label: "Fz",
            physical: (-1.0, 1.0),
            digital: (5, 5),
            per_record: 2,
        };
        let bytes = build(&[flat], &[vec![vec![5, 5]]], 1.0);
        assert!(matches!(parse_edf(&bytes), Err(Error::DegenerateScaling { .. })));

        let bytes = build(&[eeg(2), eeg(4)], &[vec![vec![0; 2], vec![0; 4]]], 1.0);
        assert!(matches!(parse_edf(&bytes), Err(Error::Unsupported(_))));

        let mut bad_version = good.clone();
        bad_version[0] = b'1';
        assert!(matches!(parse_edf(&bad_version), Err(Error::Unsupported(_))));
    }
}

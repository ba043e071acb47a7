//! Strict EDF (not EDF+) with one sampling rate across kept channels.
//!
//! Layout: a 256-byte ASCII main header, `256 * ns` bytes of signal headers
//! stored field-by-field (all labels, then all transducers, ...), then data
//! records holding `samples_per_record` little-endian i16 values per signal.

use std::collections::HashSet;
use std::path::Path;

use ndarray::Array2;

use super::EegRecording;
use crate::{Error, Result};

const MAIN_HEADER_LEN: usize = 256;
const SIGNAL_HEADER_LEN: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient: String,
    pub recording: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    pub reserved: String,
    pub n_records: i64,
    pub record_duration_s: f64,
    pub signals: Vec<EdfSignalHeader>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfSignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl EdfSignalHeader {
    pub fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min) as f64
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min + (digital as f64 - self.digital_min as f64) * self.gain()
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, field: &str) -> Result<&'a [u8]> {
        let end = self.pos + len;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Edf(format!("truncated header while reading {field}")))?;
        self.pos = end;
        Ok(slice)
    }

    fn text(&mut self, len: usize, field: &str) -> Result<String> {
        let raw = self.take(len, field)?;
        Ok(String::from_utf8_lossy(raw).trim().to_string())
    }

    fn number<T: std::str::FromStr>(&mut self, len: usize, field: &str) -> Result<T> {
        let text = self.text(len, field)?;
        text.parse::<T>()
            .map_err(|_| Error::Edf(format!("{field}: `{text}` is not a number")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<EdfHeader> {
    let mut cur = Cursor { bytes, pos: 0 };
    let version = cur.text(8, "version")?;
    let patient = cur.text(80, "patient")?;
    let recording = cur.text(80, "recording")?;
    let start_date = cur.text(8, "start date")?;
    let start_time = cur.text(8, "start time")?;
    let header_bytes: usize = cur.number(8, "header bytes")?;
    let reserved = cur.text(44, "reserved")?;
    let n_records: i64 = cur.number(8, "number of data records")?;
    let record_duration_s: f64 = cur.number(8, "data record duration")?;
    let ns: usize = cur.number(4, "number of signals")?;
    if ns == 0 {
        return Err(Error::Edf("file declares zero signals".into()));
    }
    if header_bytes != MAIN_HEADER_LEN + SIGNAL_HEADER_LEN * ns {
        return Err(Error::Edf(format!(
            "header size {header_bytes} disagrees with {ns} signals"
        )));
    }
    if !(record_duration_s.is_finite() && record_duration_s > 0.0) {
        return Err(Error::Edf(format!(
            "data record duration must be positive, got {record_duration_s}"
        )));
    }

    let texts = |cur: &mut Cursor, len, field| -> Result<Vec<String>> {
        (0..ns).map(|_| cur.text(len, field)).collect()
    };
    let labels = texts(&mut cur, 16, "label")?;
    let transducers = texts(&mut cur, 80, "transducer")?;
    let dims = texts(&mut cur, 8, "physical dimension")?;
    let pmins: Vec<f64> = (0..ns)
        .map(|_| cur.number(8, "physical minimum"))
        .collect::<Result<_>>()?;
    let pmaxs: Vec<f64> = (0..ns)
        .map(|_| cur.number(8, "physical maximum"))
        .collect::<Result<_>>()?;
    let dmins: Vec<i32> = (0..ns)
        .map(|_| cur.number(8, "digital minimum"))
        .collect::<Result<_>>()?;
    let dmaxs: Vec<i32> = (0..ns)
        .map(|_| cur.number(8, "digital maximum"))
        .collect::<Result<_>>()?;
    let prefilters = texts(&mut cur, 80, "prefiltering")?;
    let sprs: Vec<usize> = (0..ns)
        .map(|_| cur.number(8, "samples per record"))
        .collect::<Result<_>>()?;
    let reserveds = texts(&mut cur, 32, "signal reserved")?;

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        if dmins[i] == dmaxs[i] {
            return Err(Error::Edf(format!(
                "signal `{}` has digital minimum equal to digital maximum",
                labels[i]
            )));
        }
        signals.push(EdfSignalHeader {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dimension: dims[i].clone(),
            physical_min: pmins[i],
            physical_max: pmaxs[i],
            digital_min: dmins[i],
            digital_max: dmaxs[i],
            prefiltering: prefilters[i].clone(),
            samples_per_record: sprs[i],
            reserved: reserveds[i].clone(),
        });
    }
    Ok(EdfHeader {
        version,
        patient,
        recording,
        start_date,
        start_time,
        header_bytes,
        reserved,
        n_records,
        record_duration_s,
        signals,
    })
}

/// Parses an EDF file, taking the record id from the header's recording field.
pub fn read_edf(bytes: &[u8]) -> Result<EegRecording> {
    read_edf_impl(bytes, None)
}

/// Parses an EDF file under an explicit record id.
pub fn read_edf_named(bytes: &[u8], record_id: &str) -> Result<EegRecording> {
    read_edf_impl(bytes, Some(record_id))
}

/// Reads an EDF file from disk; the record id is the file stem.
pub fn read_edf_file(path: &Path) -> Result<EegRecording> {
    let bytes = std::fs::read(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_edf_impl(&bytes, Some(&stem))
}

fn read_edf_impl(bytes: &[u8], record_id: Option<&str>) -> Result<EegRecording> {
    let header = parse_header(bytes)?;
    let record_len: usize = header.signals.iter().map(|s| s.samples_per_record).sum();
    if record_len == 0 {
        return Err(Error::Edf("data records hold no samples".into()));
    }
    let data = &bytes[header.header_bytes..];
    let record_bytes = record_len * 2;
    let n_records = match header.n_records {
        -1 => data.len() / record_bytes,
        n if n < 0 => return Err(Error::Edf(format!("invalid record count {n}"))),
        n => n as usize,
    };
    if n_records == 0 {
        return Err(Error::Edf("file has zero data records".into()));
    }
    if data.len() < n_records * record_bytes {
        return Err(Error::Edf(format!(
            "truncated data: {n_records} records need {} bytes, found {}",
            n_records * record_bytes,
            data.len()
        )));
    }

    // Dummy ("-") and repeated channels carry nothing and would double features.
    let mut seen = HashSet::new();
    let mut keep = Vec::new();
    for (i, sig) in header.signals.iter().enumerate() {
        if sig.label.is_empty() || sig.label == "-" {
            log::warn!("dropping dummy channel {i} (`{}`)", sig.label);
        } else if !seen.insert(sig.label.clone()) {
            log::warn!("dropping duplicate channel {i} (`{}`)", sig.label);
        } else {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::Edf("no usable channels".into()));
    }
    let spr = header.signals[keep[0]].samples_per_record;
    if let Some(&odd) = keep
        .iter()
        .find(|&&i| header.signals[i].samples_per_record != spr)
    {
        return Err(Error::Edf(format!(
            "channels have unequal sampling rates (`{}`: {} vs {} samples per record)",
            header.signals[odd].label, header.signals[odd].samples_per_record, spr
        )));
    }
    if spr == 0 {
        return Err(Error::Edf("channels hold zero samples per record".into()));
    }

    // Byte offset of each signal inside one data record.
    let mut offsets = Vec::with_capacity(header.signals.len());
    let mut acc = 0usize;
    for sig in &header.signals {
        offsets.push(acc);
        acc += sig.samples_per_record * 2;
    }

    let total = spr * n_records;
    let mut samples = Array2::<f64>::zeros((keep.len(), total));
    for (row, &sig_idx) in keep.iter().enumerate() {
        let sig = &header.signals[sig_idx];
        let mut out = samples.row_mut(row);
        for rec in 0..n_records {
            let base = rec * record_bytes + offsets[sig_idx];
            for s in 0..spr {
                let at = base + 2 * s;
                let digital = i16::from_le_bytes([data[at], data[at + 1]]);
                out[rec * spr + s] = sig.to_physical(digital);
            }
        }
    }

    let names = keep
        .iter()
        .map(|&i| header.signals[i].label.clone())
        .collect();
    let rate = spr as f64 / header.record_duration_s;
    let id = match record_id {
        Some(id) => id.to_string(),
        None if !header.recording.is_empty() => header.recording.clone(),
        None => "unnamed".to_string(),
    };
    EegRecording::new(id, names, rate, samples)
}

/// Formats `value` into at most `width` ASCII characters, dropping decimals
/// as needed.
fn fit_number(value: f64, width: usize) -> Result<String> {
    for decimals in (0..=6).rev() {
        let s = format!("{value:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s.len() <= width {
            return Ok(s);
        }
    }
    Err(Error::Edf(format!("{value} does not fit in {width} characters")))
}

fn push_field(buf: &mut Vec<u8>, text: &str, width: usize) {
    let mut bytes: Vec<u8> = text.bytes().filter(|b| b.is_ascii()).take(width).collect();
    bytes.resize(width, b' ');
    buf.extend_from_slice(&bytes);
}

/// Writes `rec` as EDF with 1-second data records and the full 16-bit
/// digital range. The sample rate must be an integer.
pub fn write_edf(rec: &EegRecording) -> Result<Vec<u8>> {
    let fs = rec.sample_rate_hz();
    if fs.fract() != 0.0 {
        return Err(Error::Edf(format!("cannot write non-integer sample rate {fs}")));
    }
    let spr = fs as usize;
    let ns = rec.n_channels();
    let n_records = rec.n_samples().div_ceil(spr);
    let (dmin, dmax) = (i16::MIN as i32, i16::MAX as i32);

    let mut ranges = Vec::with_capacity(ns);
    for ch in 0..ns {
        let row = rec.channel(ch);
        let (mut lo, mut hi) = row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NonFinite(format!("channel `{}`", rec.channel_names()[ch])));
        }
        // Round outward to whole units so the header text is exact.
        lo = lo.floor() - 1.0;
        hi = hi.ceil() + 1.0;
        let lo_s = fit_number(lo, 8)?;
        let hi_s = fit_number(hi, 8)?;
        ranges.push((lo_s.parse::<f64>().unwrap(), hi_s.parse::<f64>().unwrap(), lo_s, hi_s));
    }

    let mut buf = Vec::with_capacity(MAIN_HEADER_LEN * (ns + 1) + n_records * spr * ns * 2);
    push_field(&mut buf, "0", 8);
    push_field(&mut buf, "X X X X", 80);
    push_field(&mut buf, rec.record_id(), 80);
    push_field(&mut buf, "01.01.00", 8);
    push_field(&mut buf, "00.00.00", 8);
    push_field(&mut buf, &(MAIN_HEADER_LEN + SIGNAL_HEADER_LEN * ns).to_string(), 8);
    push_field(&mut buf, "", 44);
    push_field(&mut buf, &n_records.to_string(), 8);
    push_field(&mut buf, "1", 8);
    push_field(&mut buf, &ns.to_string(), 4);
    for name in rec.channel_names() {
        push_field(&mut buf, name, 16);
    }
    for _ in 0..ns {
        push_field(&mut buf, "", 80);
    }
    for _ in 0..ns {
        push_field(&mut buf, "uV", 8);
    }
    for r in &ranges {
        push_field(&mut buf, &r.2, 8);
    }
    for r in &ranges {
        push_field(&mut buf, &r.3, 8);
    }
    for _ in 0..ns {
        push_field(&mut buf, &dmin.to_string(), 8);
    }
    for _ in 0..ns {
        push_field(&mut buf, &dmax.to_string(), 8);
    }
    for _ in 0..ns {
        push_field(&mut buf, "", 80);
    }
    for _ in 0..ns {
        push_field(&mut buf, &spr.to_string(), 8);
    }
    for _ in 0..ns {
        push_field(&mut buf, "", 32);
    }

    let digital_span = (dmax - dmin) as f64;
    for record in 0..n_records {
        for (ch, (pmin, pmax, _, _)) in ranges.iter().enumerate() {
            let row = rec.channel(ch);
            let scale = digital_span / (pmax - pmin);
            for s in 0..spr {
                let idx = record * spr + s;
                // Pad a trailing partial record with the last sample.
                let v = row[idx.min(row.len() - 1)];
                let d = (dmin as f64 + (v - pmin) * scale).round();
                let d = d.clamp(dmin as f64, dmax as f64) as i16;
                buf.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-assembled single-signal EDF.
    fn minimal_edf(spr: usize, n_records: usize, value: i16, pmin: &str, pmax: &str) -> Vec<u8> {
        let mut b = Vec::new();
        push_field(&mut b, "0", 8);
        push_field(&mut b, "patient", 80);
        push_field(&mut b, "rec01", 80);
        push_field(&mut b, "01.01.00", 8);
        push_field(&mut b, "00.00.00", 8);
        push_field(&mut b, "512", 8);
        push_field(&mut b, "", 44);
        push_field(&mut b, &n_records.to_string(), 8);
        push_field(&mut b, "1", 8);
        push_field(&mut b, "1", 4);
        push_field(&mut b, "FP1-F7", 16);
        push_field(&mut b, "", 80);
        push_field(&mut b, "uV", 8);
        push_field(&mut b, pmin, 8);
        push_field(&mut b, pmax, 8);
        push_field(&mut b, "-32768", 8);
        push_field(&mut b, "32767", 8);
        push_field(&mut b, "", 80);
        push_field(&mut b, &spr.to_string(), 8);
        push_field(&mut b, "", 32);
        assert_eq!(b.len(), 512);
        for _ in 0..spr * n_records {
            b.extend_from_slice(&value.to_le_bytes());
        }
        b
    }

    const STEP: f64 = 2000.0 / 65535.0;

    #[test]
    fn zero_digital_maps_to_physical_midpoint() {
        let rec = read_edf(&minimal_edf(256, 1, 0, "-1000", "1000")).unwrap();
        assert_eq!(rec.n_channels(), 1);
        assert_eq!(rec.n_samples(), 256);
        assert_eq!(rec.sample_rate_hz(), 256.0);
        assert_eq!(rec.record_id(), "rec01");
        for &v in rec.samples().iter() {
            assert!(v.abs() <= STEP, "{v}");
        }
    }

    #[test]
    fn max_digital_maps_to_physical_max() {
        let rec = read_edf(&minimal_edf(256, 1, i16::MAX, "-1000", "1000")).unwrap();
        for &v in rec.samples().iter() {
            assert!((v - 1000.0).abs() <= STEP, "{v}");
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = minimal_edf(256, 2, 0, "-1000", "1000");
        let err = read_edf(&bytes[..bytes.len() - 10]).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
        let err = read_edf(&bytes[..100]).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn non_numeric_header_is_rejected() {
        let bytes = minimal_edf(256, 1, 0, "abc", "1000");
        let err = read_edf(&bytes).unwrap_err();
        assert!(err.to_string().contains("not a number"), "{err}");
    }

    #[test]
    fn zero_records_is_rejected() {
        let bytes = minimal_edf(256, 0, 0, "-1000", "1000");
        assert!(read_edf(&bytes).unwrap_err().to_string().contains("zero data records"));
    }

    #[test]
    fn equal_digital_range_is_rejected() {
        let mut bytes = minimal_edf(256, 1, 0, "-1000", "1000");
        // label, transducer, physical dimension/min/max, digital min, then max
        let at = 256 + 16 + 80 + 8 * 4;
        bytes[at..at + 8].copy_from_slice(b"-32768  ");
        assert!(read_edf(&bytes).unwrap_err().to_string().contains("digital minimum"));
    }

    #[test]
    fn write_read_round_trip() {
        let samples = Array2::from_shape_fn((2, 350), |(c, t)| {
            (c as f64 + 1.0) * 50.0 * (t as f64 * 0.1).sin()
        });
        let rec = EegRecording::new(
            "r1",
            vec!["A".into(), "B".into()],
            100.0,
            samples.clone(),
        )
        .unwrap();
        let bytes = write_edf(&rec).unwrap();
        let back = read_edf(&bytes).unwrap();
        assert_eq!(back.channel_names(), rec.channel_names());
        // Trailing partial record is padded, so the read-back is longer.
        assert_eq!(back.n_samples(), 400);
        for ch in 0..2 {
            let step = (((ch + 1) as f64 * 50.0).ceil() * 2.0 + 4.0) / 65535.0;
            for t in 0..350 {
                assert!((back.samples()[[ch, t]] - samples[[ch, t]]).abs() <= step);
            }
        }
    }

    #[test]
    fn dummy_and_duplicate_channels_are_dropped() {
        let samples = Array2::from_shape_fn((3, 128), |(c, t)| (c * 7 + t) as f64);
        let rec = EegRecording::new(
            "r",
            vec!["A".into(), "B".into(), "C".into()],
            128.0,
            samples,
        )
        .unwrap();
        let mut bytes = write_edf(&rec).unwrap();
        bytes[256 + 16..256 + 32].copy_from_slice(b"-               ");
        bytes[256 + 32..256 + 48].copy_from_slice(b"A               ");
        let back = read_edf(&bytes).unwrap();
        assert_eq!(back.channel_names(), &["A".to_string()]);
    }

    #[test]
    fn fit_number_respects_width() {
        assert_eq!(fit_number(-1000.0, 8).unwrap(), "-1000");
        assert_eq!(fit_number(3.25, 8).unwrap(), "3.25");
        assert!(fit_number(-123456.7, 8).unwrap().len() <= 8);
        assert!(fit_number(1e12, 8).is_err());
    }
}

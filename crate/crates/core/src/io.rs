//! Raw signal files and CSV export.
//!
//! Raw files are header-less little-endian `i16`; the rate travels out of band.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{check_range, SampleQ14, TimeSeries};

pub fn encode_raw_i16(samples: &[SampleQ14]) -> Result<Vec<u8>> {
    check_range(samples)?;
    let mut out = Vec::with_capacity(samples.len() * 2);
    for &s in samples {
        out.extend_from_slice(&(s as i16).to_le_bytes());
    }
    Ok(out)
}

/// Decodes raw bytes, rejecting odd lengths and out-of-range samples.
pub fn decode_raw_i16(bytes: &[u8], rate_sps: u32) -> Result<TimeSeries> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::Parse {
            line: 0,
            msg: format!("raw signal length {} is not a multiple of 2", bytes.len()),
        });
    }
    let samples: Vec<SampleQ14> = bytes
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as SampleQ14)
        .collect();
    TimeSeries::from_checked(rate_sps, samples)
}

pub fn write_raw_i16(path: &Path, samples: &[SampleQ14]) -> Result<()> {
    let bytes = encode_raw_i16(samples)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_raw_i16(path: &Path, rate_sps: u32) -> Result<TimeSeries> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_raw_i16(&bytes, rate_sps)
}

/// Writes `sample_index,value` rows, indices offset by the series' `t0`.
pub fn write_series_csv<W: Write>(w: W, x: &TimeSeries) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["sample_index", "value"])?;
    for (k, &v) in x.samples.iter().enumerate() {
        csv.write_record(&[(x.t0 + k as i64).to_string(), v.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_layout_is_little_endian() {
        let bytes = encode_raw_i16(&[1, -2, 8191]).unwrap();
        assert_eq!(bytes, vec![0x01, 0x00, 0xfe, 0xff, 0xff, 0x1f]);
        let back = decode_raw_i16(&bytes, 2500).unwrap();
        assert_eq!(back.samples, vec![1, -2, 8191]);
        assert_eq!(back.rate_sps, 2500);
    }

    #[test]
    fn raw_rejects_out_of_range() {
        // -32768 decodes fine as i16 but is outside the 14-bit range
        assert!(decode_raw_i16(&[0x00, 0x80], 500).is_err());
        assert!(decode_raw_i16(&[0x00], 500).is_err());
        assert!(encode_raw_i16(&[9000]).is_err());
    }

    #[test]
    fn series_csv() {
        let mut x = TimeSeries::new(500, vec![5, -6]);
        x.t0 = 10;
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &x).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sample_index,value\n10,5\n11,-6\n"
        );
    }
}

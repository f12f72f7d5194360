//! Text coefficient files for embedded ingestion.
//!
//! IIR: one line per stage, `b0 b1 b2 a0_shift a1 a2`.
//! FIR: first line `gain_shift`, then one tap per line.
//! Blank lines and lines starting with `#` are ignored when parsing.

use std::fmt::Write;

use super::{QuantizedBiquad, QuantizedBiquadCascade, QuantizedFir};
use crate::error::{Error, Result};

pub fn write_cascade(c: &QuantizedBiquadCascade) -> String {
    let mut out = String::new();
    for s in &c.stages {
        writeln!(out, "{} {} {} {} {} {}", s.b0, s.b1, s.b2, s.a0_shift, s.a1, s.a2).unwrap();
    }
    out
}

pub fn write_fir(f: &QuantizedFir) -> String {
    let mut out = format!("{}\n", f.gain_shift);
    for t in &f.taps {
        writeln!(out, "{t}").unwrap();
    }
    out
}

pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad integer {tok:?}"),
    })
}

pub fn parse_cascade(text: &str) -> Result<QuantizedBiquadCascade> {
    let mut stages = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 6 fields, got {}", toks.len()),
            });
        }
        let stage = QuantizedBiquad {
            b0: parse_num(line, toks[0])?,
            b1: parse_num(line, toks[1])?,
            b2: parse_num(line, toks[2])?,
            a0_shift: parse_num(line, toks[3])?,
            a1: parse_num(line, toks[4])?,
            a2: parse_num(line, toks[5])?,
        };
        if stage.a0_shift > 30 {
            return Err(Error::Parse {
                line,
                msg: format!("a0_shift {} out of range", stage.a0_shift),
            });
        }
        stages.push(stage);
    }
    Ok(QuantizedBiquadCascade::from_stages(stages))
}

pub fn parse_fir(text: &str) -> Result<QuantizedFir> {
    let mut lines = content_lines(text);
    let (line, first) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty FIR file".into(),
    })?;
    let gain_shift: u32 = parse_num(line, first)?;
    if gain_shift > 30 {
        return Err(Error::Parse {
            line,
            msg: format!("gain_shift {gain_shift} out of range"),
        });
    }
    let taps = lines
        .map(|(line, l)| parse_num(line, l))
        .collect::<Result<Vec<i32>>>()?;
    if taps.is_empty() {
        return Err(Error::Parse {
            line,
            msg: "FIR file has no taps".into(),
        });
    }
    Ok(QuantizedFir { taps, gain_shift })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cascade_text_layout() {
        let c = QuantizedBiquadCascade::from_stages(vec![QuantizedBiquad {
            b0: 100,
            b1: 0,
            b2: -100,
            a1: -7900,
            a2: 3850,
            a0_shift: 12,
        }]);
        let text = write_cascade(&c);
        assert_eq!(text, "100 0 -100 12 -7900 3850\n");
        assert_eq!(parse_cascade(&text).unwrap().stages, c.stages);
    }

    #[test]
    fn fir_text_layout() {
        let f = QuantizedFir {
            taps: vec![1, 2, 1],
            gain_shift: 2,
        };
        let text = write_fir(&f);
        assert_eq!(text, "2\n1\n2\n1\n");
        assert_eq!(parse_fir(&format!("# comment\n{text}")).unwrap(), f);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_cascade("1 2 3 12 4 5\n1 2 x 12 4 5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_cascade("1 2 3\n").is_err());
        assert!(parse_fir("").is_err());
    }
}

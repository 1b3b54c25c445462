//! Text record for dense tensors.
//!
//! ```text
//! dense-tensor 1
//! rows 2 3
//! cols 2
//! <re> <im>        # one line per entry, row-major mixed-radix order
//! ```
//!
//! Blank lines and `#` comments are ignored. Floats are written with Rust's
//! shortest round-trip formatting, so write -> parse is bit-exact.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::{DenseTensor, Shape};
use crate::error::{Error, Result};

const HEADER: &str = "dense-tensor 1";

pub fn write_tensor(t: &DenseTensor) -> String {
    let mut out = String::new();
    let join = |v: &[usize]| v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "rows {}", join(t.shape().row_modes()));
    let _ = writeln!(out, "cols {}", join(t.shape().col_modes()));
    for z in t.data() {
        let _ = writeln!(out, "{:?} {:?}", z.re, z.im);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn parse_modes(line: usize, body: &str) -> Result<Vec<usize>> {
    body.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| parse_err(line, format!("bad mode extent `{tok}`")))
        })
        .collect()
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let mut lines = content_lines(text);
    let (l, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
    if header != HEADER {
        return Err(parse_err(l, format!("expected `{HEADER}`")));
    }
    let mut keyed = |key: &str| -> Result<Vec<usize>> {
        let (l, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing `{key}` line")))?;
        let body = line
            .strip_prefix(key)
            .filter(|rest| rest.starts_with(char::is_whitespace))
            .ok_or_else(|| parse_err(l, format!("expected `{key} ...`")))?;
        parse_modes(l, body)
    };
    let rows = keyed("rows")?;
    let cols = keyed("cols")?;
    let shape = Shape::new(rows, cols)?;
    let expected = shape.len();
    let mut data = Vec::new();
    for (l, line) in lines {
        if data.len() == expected {
            return Err(parse_err(l, format!("more than {expected} entries")));
        }
        let mut it = line.split_whitespace();
        let mut num = |what: &str| -> Result<f64> {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(l, format!("missing {what} part")))?;
            tok.parse::<f64>()
                .map_err(|_| parse_err(l, format!("bad {what} part `{tok}`")))
        };
        let re = num("real")?;
        let im = num("imaginary")?;
        if it.next().is_some() {
            return Err(parse_err(l, "trailing tokens after entry"));
        }
        data.push(Complex64::new(re, im));
    }
    if data.len() != expected {
        return Err(parse_err(0, format!("{} entries, expected {expected}", data.len())));
    }
    DenseTensor::new(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_example() {
        let text = "dense-tensor 1\n# comment\nrows 1\ncols 2\n1 0\n0.5 -2 # trailing\n";
        let t = parse_tensor(text).unwrap();
        assert_eq!(t.data()[1], Complex64::new(0.5, -2.0));
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "dense-tensor 2\nrows 1\ncols 1\n0 0\n",
            "dense-tensor 1\nrows 1\ncols 1\n",
            "dense-tensor 1\nrows 1\ncols 1\n0 0\n0 0\n",
            "dense-tensor 1\nrows 0\ncols 1\n",
            "dense-tensor 1\nrowsx 1\ncols 1\n0 0\n",
            "dense-tensor 1\nrows 1\ncols 1\nNaN 0\n",
            "dense-tensor 1\nrows 1\ncols 1\n1\n",
            "dense-tensor 1\nrows 1\ncols 1\n1 2 3\n",
            "dense-tensor 1\nrows 99999999999 99999999999\ncols 99999999999\n",
        ] {
            assert!(parse_tensor(bad).is_err(), "accepted {bad:?}");
        }
    }

    proptest! {
        #[test]
        fn write_parse_is_bit_exact(
            rows in proptest::collection::vec(1usize..4, 1..3),
            cols in proptest::collection::vec(1usize..4, 1..3),
            seed in any::<u64>(),
        ) {
            let shape = Shape::new(rows, cols).unwrap();
            let mut x = seed;
            let t = DenseTensor::from_fn(shape, |_, _| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (x >> 11) as f64 / (1u64 << 53) as f64;
                Complex64::new(a * 1e3 - 500.0, (1.0 - a) * 1e-7)
            }).unwrap();
            let back = parse_tensor(&write_tensor(&t)).unwrap();
            prop_assert_eq!(back.shape(), t.shape());
            for (a, b) in back.data().iter().zip(t.data()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}

//! Checks shared by the fuzz targets and the corpus replay test. Each one
//! must return normally on any input; a panic is a finding.

use std::path::Path;

use trpchain::chaining::{parse_metric_space, parse_sequence, write_metric_space, write_sequence};
use trpchain::tensor::{parse_tensor, write_tensor};
use trpchain_cli::{Config, Kind};

/// Inputs past this size only slow the fuzzer down.
pub const MAX_INPUT: usize = 1 << 16;

fn text(data: &[u8]) -> Option<&str> {
    if data.len() > MAX_INPUT {
        return None;
    }
    std::str::from_utf8(data).ok()
}

pub fn tensor(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(t) = parse_tensor(s) {
        let out = write_tensor(&t);
        let again = parse_tensor(&out).expect("written tensor parses");
        assert_eq!(write_tensor(&again), out);
    }
}

pub fn metric_space(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(space) = parse_metric_space(s) {
        let out = write_metric_space(&space);
        assert_eq!(parse_metric_space(&out).expect("written space parses"), space);
    }
}

/// The first byte picks `|T|` in `1..=64`.
pub fn sequence(data: &[u8]) {
    let Some((&size, rest)) = data.split_first() else { return };
    let Some(s) = text(rest) else { return };
    let size = usize::from(size % 64) + 1;
    if let Ok(seq) = parse_sequence(s, size) {
        let out = write_sequence(&seq);
        assert_eq!(parse_sequence(&out, size).expect("written sequence parses"), seq);
    }
}

/// The first byte picks the experiment kind.
pub fn config(data: &[u8]) {
    let Some((&k, rest)) = data.split_first() else { return };
    let Some(s) = text(rest) else { return };
    let kind = Kind::ALL[usize::from(k) % Kind::ALL.len()];
    // A missing file reference must surface as a diagnostic, not a panic.
    let _ = Config::parse(kind, s, Path::new("/nonexistent"));
}

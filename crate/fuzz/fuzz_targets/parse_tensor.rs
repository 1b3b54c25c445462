#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| trpchain_fuzz::tensor(data));

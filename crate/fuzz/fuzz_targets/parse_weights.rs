// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use xbar_lfi::io::{parse_weights, to_csv_bytes, weight_records};

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = parse_weights(data) {
        assert!(grid.as_slice().iter().all(|r| r.is_finite() && *r > 0.0));
        let bytes = to_csv_bytes(&weight_records(&grid)).expect("serialise");
        assert_eq!(parse_weights(bytes.as_slice()).expect("reparse"), grid);
    }
});

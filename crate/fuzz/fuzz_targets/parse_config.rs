// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use xbar_lfi::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        // Anything accepted must survive a serialise/parse round trip.
        let again = parse_config(&cfg.to_toml().expect("serialise")).expect("reparse");
        assert_eq!(cfg, again);
    }
});

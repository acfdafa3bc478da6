// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use proptest::prelude::*;
use xbar_lfi::config::{parse_config, Preset};
use xbar_lfi::crossbar::WeightGrid;
use xbar_lfi::io::{parse_weights, to_csv_bytes, weight_records};
use xbar_lfi::Error;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn config_seeds() {
    let seeds = corpus("parse_config");
    assert!(!seeds.is_empty());
    for (name, bytes) in seeds {
        let text = String::from_utf8(bytes).unwrap();
        match parse_config(&text) {
            Ok(cfg) => assert_eq!(parse_config(&cfg.to_toml().unwrap()).unwrap(), cfg, "{name}"),
            Err(Error::Config { path, .. }) => {
                assert!(name.contains("unknown") || name.contains("range"), "{name} rejected at {path}")
            }
            Err(e) => panic!("{name}: {e}"),
        }
    }
}

#[test]
fn weight_seeds() {
    let seeds = corpus("parse_weights");
    assert!(!seeds.is_empty());
    for (name, bytes) in seeds {
        let parsed = parse_weights(bytes.as_slice());
        let valid = name.starts_with("grid") || name.starts_with("single");
        assert_eq!(parsed.is_ok(), valid, "{name}: {parsed:?}");
    }
}

#[test]
fn config_errors_name_the_key() {
    for (text, path) in [
        ("[scan]\nphotocurrents_ua = [20.0, 20.0]\n", "scan.photocurrents_ua"),
        ("preset = \"paper-quadratic\"\n", "preset"),
        ("[team]\nshape = \"sawtooth\"\n", "team.shape"),
        ("[array]\nrows = -3\n", "array.rows"),
        ("[beam]\ndiameter = 0.5\n", "beam.diameter"),
    ] {
        match parse_config(text) {
            Err(Error::Config { path: p, .. }) => assert!(p.starts_with(path), "{text}: {p}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn weights_need_the_exact_header() {
    let err = parse_weights("col,row,r_ohm\n0,0,1\n".as_bytes()).unwrap_err().to_string();
    assert!(err.contains("row,col,r_ohm"), "{err}");
}

proptest! {
    #[test]
    fn weight_csv_round_trip(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
        let w = WeightGrid::random(rows, cols, 1e3, 1e6, seed).unwrap();
        let bytes = to_csv_bytes(&weight_records(&w)).unwrap();
        prop_assert_eq!(parse_weights(bytes.as_slice()).unwrap(), w);
    }

    #[test]
    fn config_round_trip(
        rows in 1usize..512,
        cols in 1usize..512,
        seed in any::<u64>(),
        diameter in 1.0..=50.0f64,
        gamma in 0.0..1e3f64,
        preset in prop_oneof![
            Just(Preset::PaperLinear),
            Just(Preset::PaperWeakNonlinear),
            Just(Preset::PaperTeam),
            Just(Preset::Custom)
        ],
    ) {
        let text = format!(
            "preset = \"{}\"\nseed = {seed}\n[array]\nrows = {rows}\ncols = {cols}\n[beam]\ndiameter = {diameter:?}\n\
             [scan]\nrows = 1\ncols = 1\n[crossbar]\nshunt_gamma = {gamma:?}\n",
            preset.name()
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(cfg.array.rows, rows);
        prop_assert_eq!(cfg.preset, preset);
        prop_assert_eq!(parse_config(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}

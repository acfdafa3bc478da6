// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use xbar_lfi::crossbar::{
    fault_delta, faulted_column_currents, ideal_column_currents, CrossbarConfig, FaultEvent, WeightGrid,
};
use xbar_lfi::mna::{mna_fault_delta, mna_solve};

fn close(a: f64, b: f64, scale: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * scale.max(f64::MIN_POSITIVE)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn grid_strategy(max_dim: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        (Just(r), Just(c), prop::collection::vec(1e3..50e3f64, r * c))
    })
}

/// Distinct cells with injection currents.
fn faults_for(rows: usize, cols: usize, picks: &[(usize, usize, f64)]) -> Vec<FaultEvent> {
    let mut seen = Vec::new();
    picks
        .iter()
        .map(|&(r, c, i)| (r % rows, c % cols, i))
        .filter(|&(r, c, _)| {
            let fresh = !seen.contains(&(r, c));
            seen.push((r, c));
            fresh
        })
        .map(|(r, c, i)| FaultEvent::new(r, c, i))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn divider_matches_nodal_solve(
        (rows, cols, r) in grid_strategy(16),
        picks in prop::collection::vec((0usize..64, 0usize..64, 1e-6..100e-6f64), 1..6),
        gamma in prop_oneof![Just(0.0), 0.0..1000.0f64],
        driven in 0usize..16,
    ) {
        let mut cfg = CrossbarConfig::paper_linear(rows, cols).without_parasitics();
        cfg.shunt_gamma = gamma;
        let w = WeightGrid::new(rows, cols, r).unwrap();
        let v = cfg.single_row_read(driven % rows);
        let faults = faults_for(rows, cols, &picks);
        let analytic = fault_delta(&cfg, &w, &faults).unwrap();
        let nodal = mna_fault_delta(&cfg, &w, &v, &faults).unwrap();
        let scale = max_abs(&analytic);
        for (a, n) in analytic.iter().zip(&nodal) {
            prop_assert!(close(*a, *n, scale, 1e-9), "{a} vs {n}");
        }
    }

    #[test]
    fn kcl_holds_with_parasitics(
        r in prop::collection::vec(1e3..50e3f64, 256),
        picks in prop::collection::vec((0usize..16, 0usize..16, 1e-6..100e-6f64), 0..5),
        wire in 0.1..10.0f64,
        driver in 0.0..100.0f64,
    ) {
        let mut cfg = CrossbarConfig::paper_linear(16, 16);
        cfg.wire_res_per_segment = wire;
        cfg.driver_resistance = driver;
        let w = WeightGrid::new(16, 16, r).unwrap();
        let v: Vec<f64> = (0..16).map(|i| 0.2 * (i % 3) as f64 / 2.0).collect();
        let res = mna_solve(&cfg, &w, &v, &faults_for(16, 16, &picks)).unwrap();
        prop_assert!(res.max_kcl_residual() < 1e-12, "{}", res.max_kcl_residual());
        // Against the largest branch current the floor is about
        // eps * V / (R_wire * I_max), so this only holds for wires of 1 Ohm and up.
        if wire >= 1.0 {
            let sol = &res.solution;
            let branch_rel = sol.max_kcl_imbalance() / sol.max_branch_current();
            prop_assert!(branch_rel < 1e-12, "{branch_rel}");
        }
    }

    #[test]
    fn simultaneous_faults_superpose(
        r in prop::collection::vec(1e3..50e3f64, 64),
        a in prop::collection::vec((0usize..8, 0usize..8, 1e-6..100e-6f64), 1..4),
        b in prop::collection::vec((0usize..8, 0usize..8, 1e-6..100e-6f64), 1..4),
    ) {
        let cfg = CrossbarConfig::paper_linear(8, 8);
        let w = WeightGrid::new(8, 8, r).unwrap();
        let v = cfg.single_row_read(3);
        let fa = faults_for(8, 8, &a);
        let fb: Vec<FaultEvent> = faults_for(8, 8, &b)
            .into_iter()
            .filter(|f| !fa.iter().any(|g| (g.row, g.col) == (f.row, f.col)))
            .collect();
        let both: Vec<FaultEvent> = fa.iter().chain(&fb).copied().collect();
        // Illuminating a cell adds its shunt branch, so each part is solved
        // on the full illuminated network with the other part dark.
        let dark = |fs: &[FaultEvent]| fs.iter().map(|f| FaultEvent::new(f.row, f.col, 0.0)).collect::<Vec<_>>();
        let only_a: Vec<FaultEvent> = fa.iter().copied().chain(dark(&fb)).collect();
        let only_b: Vec<FaultEvent> = dark(&fa).into_iter().chain(fb.iter().copied()).collect();
        let da = mna_fault_delta(&cfg, &w, &v, &only_a).unwrap();
        let db = mna_fault_delta(&cfg, &w, &v, &only_b).unwrap();
        let dab = mna_fault_delta(&cfg, &w, &v, &both).unwrap();
        let scale = max_abs(&dab);
        for j in 0..8 {
            prop_assert!(close(dab[j], da[j] + db[j], scale, 1e-9));
        }
        let ia = fault_delta(&cfg, &w, &fa).unwrap();
        let ib = fault_delta(&cfg, &w, &fb).unwrap();
        let iab = fault_delta(&cfg, &w, &both).unwrap();
        for j in 0..8 {
            prop_assert!(close(iab[j], ia[j] + ib[j], scale, 1e-12));
        }
    }

    #[test]
    fn divider_bounds_and_monotonicity(
        r in 100.0..1e6f64,
        dr in 1.0..1e4f64,
        i in 1e-7..1e-3f64,
        di in 1e-7..1e-4f64,
        gamma in 0.0..1000.0f64,
    ) {
        let mut cfg = CrossbarConfig::paper_linear(1, 1);
        cfg.shunt_gamma = gamma;
        let d = |r: f64, i: f64| {
            let w = WeightGrid::uniform(1, 1, r).unwrap();
            fault_delta(&cfg, &w, &[FaultEvent::new(0, 0, i)]).unwrap()[0]
        };
        let base = d(r, i);
        prop_assert!(base > 0.0 && base < i);
        prop_assert!(d(r + dr, i) < base);
        prop_assert!(d(r, i + di) > base);
    }
}

#[test]
fn hand_solved_two_by_two() {
    // Wires ideal, driver impedance Rd, row 0 at V, row 1 grounded.
    let (rd, v) = (50.0, 0.2);
    let r = [[4e3, 6e3], [8e3, 12e3]];
    let mut cfg = CrossbarConfig::paper_linear(2, 2);
    cfg.wire_res_per_segment = 0.0;
    cfg.driver_resistance = rd;
    let w = WeightGrid::new(2, 2, vec![r[0][0], r[0][1], r[1][0], r[1][1]]).unwrap();

    let par = |a: f64, b: f64| a * b / (a + b);
    let rp = par(r[0][0], r[0][1]);
    let v_row = v * rp / (rp + rd);
    let expect = [v_row / r[0][0], v_row / r[0][1]];
    let res = mna_solve(&cfg, &w, &[v, 0.0], &[]).unwrap();
    for (got, want) in res.readout.currents.iter().zip(expect) {
        assert!(close(*got, want, want, 1e-12));
    }

    // Injection on (1, 0): the shunt path also sees Rd || R11 to ground.
    let i = 20e-6;
    let rsh = cfg.shunt_resistance;
    let back = rsh + par(rd, r[1][1]);
    let expect_d0 = i * back / (back + r[1][0]);
    let d = mna_fault_delta(&cfg, &w, &[v, 0.0], &[FaultEvent::new(1, 0, i)]).unwrap();
    assert!(close(d[0], expect_d0, expect_d0, 1e-12), "{} vs {expect_d0}", d[0]);
    // The rest returns through row 1 and splits between its driver and R11.
    let expect_d1 = (i - expect_d0) * rd / (rd + r[1][1]);
    assert!(close(d[1], expect_d1, expect_d1, 1e-12), "{} vs {expect_d1}", d[1]);
}

#[test]
fn ideal_and_nodal_readouts_agree_without_parasitics() {
    let cfg = CrossbarConfig::paper_linear(4, 4).without_parasitics();
    let w = WeightGrid::random(4, 4, 5e3, 20e3, 11).unwrap();
    let v = [0.2, 0.1, 0.0, 0.05];
    let ideal = ideal_column_currents(&cfg, &w, &v).unwrap();
    let nodal = mna_solve(&cfg, &w, &v, &[]).unwrap();
    for (a, b) in ideal.currents.iter().zip(&nodal.readout.currents) {
        assert!(close(*a, *b, *a, 1e-12));
    }

    // Absolute faulted currents also agree when the fault sits on an undriven row.
    let faults = [FaultEvent::new(2, 1, 30e-6)];
    let fa = faulted_column_currents(&cfg, &w, &v, &faults).unwrap();
    let fn_ = mna_solve(&cfg, &w, &v, &faults).unwrap();
    for (a, b) in fa.currents.iter().zip(&fn_.readout.currents) {
        assert!(close(*a, *b, *a, 1e-12));
    }
}

#[test]
fn fault_moves_only_its_column() {
    let cfg = CrossbarConfig::paper_linear(8, 8);
    let w = WeightGrid::random(8, 8, 5e3, 20e3, 3).unwrap();
    let d = fault_delta(&cfg, &w, &[FaultEvent::new(5, 2, 20e-6)]).unwrap();
    for (j, x) in d.iter().enumerate() {
        assert_eq!(*x != 0.0, j == 2);
    }
}

#[test]
fn parasitics_leak_into_neighbouring_columns() {
    let cfg = CrossbarConfig::paper_linear(8, 8);
    let w = WeightGrid::random(8, 8, 5e3, 20e3, 3).unwrap();
    let d = mna_fault_delta(&cfg, &w, &cfg.single_row_read(0), &[FaultEvent::new(5, 2, 20e-6)]).unwrap();
    let total: f64 = d.iter().sum();
    assert!(d[2] > 0.0 && d[2] < 20e-6);
    assert!(d.iter().enumerate().any(|(j, x)| j != 2 && *x != 0.0));
    assert!(total > 0.0 && total <= 20e-6 * (1.0 + 1e-12));
}

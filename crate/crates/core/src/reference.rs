// SPDX-License-Identifier: Apache-2.0

//! Reference fault-current measurements used as the attacker's training set
//! and as calibration targets for the simulator presets.

/// Injected currents, uA.
pub const INJECTION_UA: [f64; 5] = [10.0, 15.0, 20.0, 30.0, 40.0];

/// Cell resistances, kOhm.
pub const RESISTANCE_KOHM: [f64; 5] = [5.0, 10.0, 12.0, 15.0, 20.0];

/// Column-current change in uA, indexed `[injection][resistance]`.
pub const DELTA_UA: [[f64; 5]; 5] = [
    [2.29, 1.28, 1.09, 0.89, 0.68],
    [3.43, 1.93, 1.64, 1.34, 1.03],
    [4.59, 2.58, 2.19, 1.79, 1.37],
    [6.91, 3.88, 3.31, 2.70, 2.07],
    [9.25, 5.21, 4.43, 3.62, 2.78],
];

/// Reference calibration `R_est = 1.501 * |slope| - 1.47` (kOhm).
pub const CALIBRATION_GAIN_KOHM: f64 = 1.501;
pub const CALIBRATION_OFFSET_KOHM: f64 = -1.47;

/// TEAM corruption endpoints under a 1.2 mA fault.
pub const CORRUPTION_START_OHM: f64 = 138.0;
pub const CORRUPTION_END_OHM: f64 = 336.0;

/// `(I_inj [A], dI [A])` pairs for one resistance column of the table.
pub fn series_for(resistance_index: usize) -> Vec<(f64, f64)> {
    INJECTION_UA
        .iter()
        .zip(DELTA_UA.iter())
        .map(|(i, row)| (i * 1e-6, row[resistance_index] * 1e-6))
        .collect()
}

/// Sum of squared relative residuals of the divider model against the table.
pub fn divider_misfit(r_sh0: f64, gamma: f64) -> f64 {
    let mut sum = 0.0;
    for (a, i_ua) in INJECTION_UA.iter().enumerate() {
        let i = i_ua * 1e-6;
        let r_sh = r_sh0 * (1.0 + gamma * i);
        for (b, r_k) in RESISTANCE_KOHM.iter().enumerate() {
            let model = i * r_sh / (r_sh + r_k * 1e3) * 1e6;
            let rel = (model - DELTA_UA[a][b]) / DELTA_UA[a][b];
            sum += rel * rel;
        }
    }
    sum
}

/// Least-squares (relative residual) fit of `r_sh0` for a fixed `gamma`.
///
/// Golden-section search on `[200, 5000]` ohms; the misfit is unimodal there.
pub fn fit_shunt_resistance(gamma: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (200.0_f64, 5000.0_f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = divider_misfit(x1, gamma);
    let mut f2 = divider_misfit(x2, gamma);
    while hi - lo > 1e-6 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = divider_misfit(x1, gamma);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = divider_misfit(x2, gamma);
        }
    }
    0.5 * (lo + hi)
}

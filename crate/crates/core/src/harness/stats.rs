/// Wilson score interval for `errors` successes out of `n` trials.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // pin the ends exactly; the formula leaves rounding residue there
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// SNR where the curve first falls through `target`, interpolating
/// `log10(BER)` linearly between neighbouring points. Points must be sorted
/// by SNR; a zero BER is floored at half an error over `bits`.
pub fn snr_at_ber(points: &[(f64, u64, u64)], target: f64) -> Option<f64> {
    let log_ber = |&(_, errors, bits): &(f64, u64, u64)| -> f64 {
        let e = (errors as f64).max(0.5);
        (e / bits.max(1) as f64).log10()
    };
    let t = target.log10();
    points.windows(2).find_map(|w| {
        let (a, b) = (log_ber(&w[0]), log_ber(&w[1]));
        if a >= t && b < t {
            let f = (a - t) / (a - b);
            Some(w[0].0 + f * (w[1].0 - w[0].0))
        } else {
            None
        }
    })
}

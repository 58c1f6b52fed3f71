//! Percentage arithmetic and the two-decimal rendering used in every table.

/// `100 * part / total`, or `None` when `total` is zero.
pub fn percent(part: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| part as f64 * 100.0 / total as f64)
}

/// `part / total`, or `None` when `total` is zero.
pub fn fraction(part: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| part as f64 / total as f64)
}

/// Renders `100 * part / total` with two decimals, rounding the exact ratio
/// half away from zero. Panics if `total` is zero.
pub fn format_ratio_percent(part: u64, total: u64) -> String {
    assert!(total > 0, "percentage of an empty total");
    let (part, total) = (u128::from(part), u128::from(total));
    // hundredths of a percent, rounded half up on the exact rational
    let hundredths = (part * 20_000 + total) / (2 * total);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// Renders a percentage value with two decimals, half away from zero.
pub fn format_percent(value: f64) -> String {
    let scaled = (value * 100.0).round();
    let sign = if scaled < 0.0 { "-" } else { "" };
    let hundredths = scaled.abs() as u64;
    format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
}

/// Renders a fraction in `[0, 1]` as a two-decimal percentage.
pub fn format_fraction_as_percent(fraction: f64) -> String {
    format_percent(fraction * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_values_render_exactly() {
        assert_eq!(format_fraction_as_percent(0.3716), "37.16");
        assert_eq!(format_fraction_as_percent(0.6284), "62.84");
        assert_eq!(format_fraction_as_percent(0.8293), "82.93");
        assert_eq!(format_fraction_as_percent(0.0101), "1.01");
        assert_eq!(format_fraction_as_percent(0.1606), "16.06");
        assert_eq!(format_fraction_as_percent(1.0), "100.00");
        assert_eq!(format_fraction_as_percent(0.0), "0.00");
    }

    #[test]
    fn ratios_round_half_away_from_zero() {
        assert_eq!(format_ratio_percent(4, 6), "66.67");
        assert_eq!(format_ratio_percent(1, 32), "3.13");
        assert_eq!(format_ratio_percent(1, 3), "33.33");
        assert_eq!(format_ratio_percent(0, 5), "0.00");
        assert_eq!(format_ratio_percent(5, 5), "100.00");
        assert_eq!(format_ratio_percent(1, 80_000), "0.00");
        assert_eq!(format_ratio_percent(1, 40_000), "0.00");
        assert_eq!(format_ratio_percent(1, 20_000), "0.01");
    }

    #[test]
    fn empty_totals_have_no_percentage() {
        assert_eq!(percent(0, 0), None);
        assert_eq!(fraction(3, 0), None);
    }

    proptest! {
        #[test]
        fn rendered_ratio_is_within_half_a_hundredth(part in 0u64..10_000, extra in 1u64..10_000) {
            let total = part + extra;
            let exact = percent(part, total).unwrap();
            let shown: f64 = format_ratio_percent(part, total).parse().unwrap();
            prop_assert!((shown - exact).abs() <= 0.005 + 1e-9);
        }
    }
}

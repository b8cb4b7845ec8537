use crate::error::{CoreError, Result};
use std::fmt;
use std::str::FromStr;

/// Monotone-in-spirit step profile Lambda: Z -> [0, 1] that is exactly 0
/// left of a finite transition region and exactly 1 right of it.
///
/// The profile is stored as a table over n = -half .. half; outside that
/// range evaluation returns the clamped constants, so the position operator
/// dressed with a switch stays bounded no matter how large the box is.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchFunction {
    half: i64,
    table: Vec<f64>,
    id: String,
}

impl SwitchFunction {
    /// Hard step: Lambda(n) = 1 for n >= 0, else 0.
    pub fn sharp() -> Self {
        Self {
            half: 1,
            table: vec![0.0, 1.0, 1.0],
            id: "sharp".to_owned(),
        }
    }

    /// Smooth profile (1 + tanh(n/3)) / 2 tabulated on |n| <= 20.
    /// The endpoints are clamped to exact 0 and 1; the raw tanh values
    /// there differ from the clamps by less than 2e-6.
    pub fn smooth_tanh() -> Self {
        let half = 20i64;
        let mut table: Vec<f64> = (-half..=half)
            .map(|n| 0.5 * (1.0 + (n as f64 / 3.0).tanh()))
            .collect();
        let last = table.len() - 1;
        table[0] = 0.0;
        table[last] = 1.0;
        Self {
            half,
            table,
            id: "tanh".to_owned(),
        }
    }

    /// Arbitrary tabulated profile on n = -half ..= half.
    /// The first entry must be exactly 0 and the last exactly 1.
    pub fn from_table(table: Vec<f64>, id: &str) -> Result<Self> {
        if table.len() < 3 || table.len() % 2 == 0 {
            return Err(CoreError::InvalidSwitch(format!(
                "table length must be odd and >= 3, got {}",
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidSwitch("non-finite entry".to_owned()));
        }
        if table[0] != 0.0 {
            return Err(CoreError::InvalidSwitch(format!(
                "left endpoint must be exactly 0, got {}",
                table[0]
            )));
        }
        if *table.last().unwrap() != 1.0 {
            return Err(CoreError::InvalidSwitch(format!(
                "right endpoint must be exactly 1, got {}",
                table.last().unwrap()
            )));
        }
        Ok(Self {
            half: (table.len() as i64 - 1) / 2,
            table,
            id: id.to_owned(),
        })
    }

    pub fn eval(&self, n: i64) -> f64 {
        if n <= -self.half {
            0.0
        } else if n >= self.half {
            1.0
        } else {
            self.table[(n + self.half) as usize]
        }
    }

    /// Half-width of the transition region.
    pub fn half_width(&self) -> i64 {
        self.half
    }

    pub fn total_variation(&self) -> f64 {
        self.table.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn id(&self) -> &str {
        &self.id
    }
}

impl fmt::Display for SwitchFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

impl FromStr for SwitchFunction {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Self::sharp()),
            "tanh" => Ok(Self::smooth_tanh()),
            other => Err(CoreError::InvalidSwitch(format!(
                "unknown switch `{other}` (expected `sharp` or `tanh`)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharp_is_the_indicator_of_nonnegatives() {
        let s = SwitchFunction::sharp();
        for n in -30..=30 {
            let want = if n >= 0 { 1.0 } else { 0.0 };
            assert_eq!(s.eval(n), want, "n = {n}");
        }
        assert_eq!(s.total_variation(), 1.0);
    }

    #[test]
    fn tanh_profile_is_clamped_and_monotone() {
        let s = SwitchFunction::smooth_tanh();
        assert_eq!(s.eval(-20), 0.0);
        assert_eq!(s.eval(-1000), 0.0);
        assert_eq!(s.eval(20), 1.0);
        assert_eq!(s.eval(1000), 1.0);
        assert!((s.eval(0) - 0.5).abs() < 1e-15);
        for n in -20..20 {
            assert!(s.eval(n + 1) >= s.eval(n));
        }
        assert!((s.total_variation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_midpoints_match_the_formula() {
        let s = SwitchFunction::smooth_tanh();
        for n in -19..=19i64 {
            let want = 0.5 * (1.0 + (n as f64 / 3.0).tanh());
            assert!((s.eval(n) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn from_table_validates_endpoints() {
        assert!(SwitchFunction::from_table(vec![0.0, 0.5, 1.0], "ok").is_ok());
        assert!(SwitchFunction::from_table(vec![0.1, 0.5, 1.0], "bad").is_err());
        assert!(SwitchFunction::from_table(vec![0.0, 0.5, 0.9], "bad").is_err());
        assert!(SwitchFunction::from_table(vec![0.0, 1.0], "bad").is_err());
        assert!(SwitchFunction::from_table(vec![0.0, f64::NAN, 1.0], "bad").is_err());
    }

    #[test]
    fn parses_names() {
        assert_eq!(SwitchFunction::from_str("sharp").unwrap().id(), "sharp");
        assert_eq!(SwitchFunction::from_str("tanh").unwrap().id(), "tanh");
        assert!(SwitchFunction::from_str("linear").is_err());
    }
}

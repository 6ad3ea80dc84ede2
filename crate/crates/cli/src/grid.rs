use std::str::FromStr;

use crate::CliError;

/// Inclusive tenor grid `start:stop:step`, in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TenorGrid {
    pub start: f64,
    pub step: f64,
    count: usize,
}

impl TenorGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, &'static str> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("bounds must be finite");
        }
        if start < 0.0 {
            return Err("tenors must be non-negative");
        }
        if step <= 0.0 {
            return Err("step must be positive");
        }
        if stop < start {
            return Err("stop is below start");
        }
        // tolerate representation error in (stop - start) / step
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(TenorGrid { start, step, count })
    }

    /// The grid written next to every fit: 0.05 to 20 years in 0.05 steps.
    pub fn fit_samples() -> Self {
        TenorGrid::new(0.05, 20.0, 0.05).expect("static grid")
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Tenors rounded to 12 decimals so that `0.05 · 3` prints as `0.15`.
    pub fn tenors(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
    }
}

impl FromStr for TenorGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(CliError::Grid(s.into(), "expected start:stop:step"));
        };
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Grid(s.into(), "not a number"))
        };
        TenorGrid::new(num(a)?, num(b)?, num(c)?).map_err(|why| CliError::Grid(s.into(), why))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_inclusive_grids() {
        let g: TenorGrid = "1:3:1".parse().unwrap();
        assert_eq!(g.tenors().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        let g = TenorGrid::fit_samples();
        assert_eq!(g.len(), 400);
        let t: Vec<f64> = g.tenors().collect();
        assert_eq!((t[0], t[2], t[399]), (0.05, 0.15, 20.0));
        assert_eq!("0:1:0.3".parse::<TenorGrid>().unwrap().len(), 4);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in ["1:3", "1:3:0", "3:1:1", "-1:2:1", "a:2:1", "1:2:nan"] {
            assert!(bad.parse::<TenorGrid>().is_err(), "{bad}");
        }
    }
}

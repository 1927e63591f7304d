//! Complementary cumulative size distributions and least-squares power-law
//! tail fits on log-log axes.

mod export;
mod ols;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{read_ccdf_csv, write_ccdf_csv, write_plot_data, write_plot_files, PlotFiles};
pub(crate) use ols::{assemble, Moments};
pub use ols::{lossless_f64, ols, LinearFit, PValue, P_VALUE_FLOOR};

/// Default tail-fit window in token counts.
pub const DEFAULT_FIT_RANGE: (u64, u64) = (30, 3000);

/// Which per-component size a distribution is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Token count `t`.
    Tokens,
    /// Unique alphabet `a`.
    Alphabet,
}

impl std::str::FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tokens" => Ok(Measure::Tokens),
            "alphabet" => Ok(Measure::Alphabet),
            _ => Err(format!("unknown measure `{s}` (expected tokens or alphabet)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub s: u64,
    /// Number of components with size `>= s`.
    pub count: u64,
}

/// Points are sorted by strictly increasing `s` with strictly decreasing
/// `count`; the first count is the number of inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ccdf {
    pub measure: Measure,
    pub points: Vec<EcdfPoint>,
}

impl Ccdf {
    pub fn total(&self) -> u64 {
        self.points.first().map_or(0, |p| p.count)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("no sizes to build a distribution from")]
    EmptyInput,
    #[error("size 0 is not a valid component size")]
    ZeroSize,
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("need at least 3 points with size in [{s_min}, {s_max}], found {found}")]
    TooFewInRange { found: usize, s_min: u64, s_max: u64 },
    #[error("invalid fit range [{s_min}, {s_max}]")]
    InvalidRange { s_min: u64, s_max: u64 },
    #[error("regressor has zero variance")]
    ZeroVarianceRegressor,
    #[error("response has zero variance (slope {slope}); the fit is degenerate")]
    ZeroVarianceResponse { slope: f64, intercept: f64 },
    #[error("need at least {needed} distinct sizes, found {found}")]
    TooFewDistinctSizes { found: usize, needed: usize },
    #[error("non-finite value in fit input")]
    NonFinite,
}

impl FitError {
    /// True for a fit whose response does not vary, as for equal-size data.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, FitError::ZeroVarianceResponse { .. })
    }
}

/// Counts, for each distinct size, how many sizes are at least that large.
pub fn build_ccdf(sizes: &[u64], measure: Measure) -> Result<Ccdf, FitError> {
    if sizes.is_empty() {
        return Err(FitError::EmptyInput);
    }
    if sizes.contains(&0) {
        return Err(FitError::ZeroSize);
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as u64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i];
        points.push(EcdfPoint { s, count: n - i as u64 });
        while i < sorted.len() && sorted[i] == s {
            i += 1;
        }
    }
    Ok(Ccdf { measure, points })
}

/// CCDF of sizes carrying weights: each point counts the total weight at or
/// above its size. Zero weights are dropped.
pub fn build_weighted_ccdf(items: &[(u64, u64)], measure: Measure) -> Result<Ccdf, FitError> {
    let mut sorted: Vec<(u64, u64)> = items.iter().copied().filter(|&(_, w)| w > 0).collect();
    if sorted.is_empty() {
        return Err(FitError::EmptyInput);
    }
    if sorted.iter().any(|&(s, _)| s == 0) {
        return Err(FitError::ZeroSize);
    }
    sorted.sort_unstable();
    let mut points: Vec<EcdfPoint> = Vec::new();
    let mut above: u64 = sorted.iter().map(|&(_, w)| w).sum();
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        points.push(EcdfPoint { s, count: above });
        while i < sorted.len() && sorted[i].0 == s {
            above -= sorted[i].1;
            i += 1;
        }
    }
    Ok(Ccdf { measure, points })
}

/// Least squares of `ln count` on `ln s` over points with `s_min <= s <= s_max`.
pub fn fit_tail(points: &[EcdfPoint], s_min: u64, s_max: u64) -> Result<LinearFit, FitError> {
    if s_min == 0 || s_min > s_max {
        return Err(FitError::InvalidRange { s_min, s_max });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.s >= s_min && p.s <= s_max && p.count > 0)
        .map(|p| ((p.s as f64).ln(), (p.count as f64).ln()))
        .unzip();
    if x.len() < 3 {
        return Err(FitError::TooFewInRange {
            found: x.len(),
            s_min,
            s_max,
        });
    }
    let mut fit = ols(&x, &y)?;
    fit.fit_range = (s_min as f64, s_max as f64);
    Ok(fit)
}

/// Fits every point.
pub fn fit_all(points: &[EcdfPoint]) -> Result<LinearFit, FitError> {
    let lo = points.iter().map(|p| p.s).min().ok_or(FitError::EmptyInput)?;
    let hi = points.iter().map(|p| p.s).max().unwrap_or(lo);
    fit_tail(points, lo, hi)
}

/// Minimum number of distinct sizes for a shape check.
pub const SHAPE_MIN_SIZES: usize = 10;
/// Minimum points in each shape window.
const WINDOW_MIN_POINTS: usize = 3;
/// A power-law tail must reach at least this factor beyond the knee.
pub const POWER_LAW_MIN_SPAN: f64 = 10.0;
/// ... and be this straight on log-log axes.
pub const POWER_LAW_MIN_R2: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    /// Absolute log-log slope over the smallest decade of sizes.
    pub head_flatness: f64,
    /// Log-log slope over the largest decade of sizes.
    pub tail_slope: f64,
    /// Size minimizing the squared residual of a flat head joined to a
    /// straight log-log tail.
    pub knee_estimate: u64,
    pub head_range: (u64, u64),
    pub tail_range: (u64, u64),
    /// Tail counts do not vary, so `tail_slope` is zero by definition.
    pub tail_degenerate: bool,
    /// Fit from the knee to the largest size.
    pub knee_fit: Option<LinearFit>,
    /// The distribution above the knee is a straight, falling log-log line
    /// over at least a decade.
    pub power_law_tail: bool,
}

/// Characterizes a CCDF as a flat head followed by a falling tail.
///
/// The head window is the sizes up to ten times the smallest, the tail
/// window the sizes from a tenth of the largest; each takes at least three
/// points.
pub fn predicted_shape_check(points: &[EcdfPoint]) -> Result<ShapeReport, FitError> {
    let mut pts: Vec<EcdfPoint> = points.iter().copied().filter(|p| p.count > 0).collect();
    pts.sort_by_key(|p| p.s);
    pts.dedup_by_key(|p| p.s);
    if pts.len() < SHAPE_MIN_SIZES {
        return Err(FitError::TooFewDistinctSizes {
            found: pts.len(),
            needed: SHAPE_MIN_SIZES,
        });
    }
    let n = pts.len();
    let s_min = pts[0].s;
    let s_max = pts[n - 1].s;

    let head_end = pts
        .iter()
        .take_while(|p| p.s as f64 <= 10.0 * s_min as f64)
        .count()
        .max(WINDOW_MIN_POINTS);
    let tail_len = pts
        .iter()
        .rev()
        .take_while(|p| p.s as f64 >= s_max as f64 / 10.0)
        .count()
        .max(WINDOW_MIN_POINTS);
    let tail_start = n - tail_len;
    let head = &pts[..head_end];
    let tail = &pts[tail_start..];

    let slope_or_flat = |w: &[EcdfPoint]| match fit_all(w) {
        Ok(f) => Ok((f.slope, false)),
        Err(FitError::ZeroVarianceResponse { slope, .. }) => Ok((slope, true)),
        Err(e) => Err(e),
    };
    let (head_slope, _) = slope_or_flat(head)?;
    let (tail_slope, tail_degenerate) = slope_or_flat(tail)?;

    let (knee_index, _) = knee(&pts);
    let knee_estimate = pts[knee_index].s;
    let knee_fit = fit_tail(&pts, knee_estimate, s_max).ok();
    let power_law_tail = knee_fit.as_ref().is_some_and(|f| {
        s_max as f64 / knee_estimate as f64 >= POWER_LAW_MIN_SPAN && f.r_squared >= POWER_LAW_MIN_R2 && f.slope < 0.0
    });

    Ok(ShapeReport {
        head_flatness: head_slope.abs(),
        tail_slope,
        knee_estimate,
        head_range: (head[0].s, head[head.len() - 1].s),
        tail_range: (tail[0].s, tail[tail.len() - 1].s),
        tail_degenerate,
        knee_fit,
        power_law_tail,
    })
}

/// Index `k` minimizing the squared residual of a constant over `..k` plus
/// a line over `k..` in log-log coordinates. Ties go to the smallest `k`.
fn knee(pts: &[EcdfPoint]) -> (usize, f64) {
    let x: Vec<f64> = pts.iter().map(|p| (p.s as f64).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| (p.count as f64).ln()).collect();
    let n = x.len();

    // Prefix sums give each segment's residual in constant time.
    let mut sy = vec![0.0; n + 1];
    let mut syy = vec![0.0; n + 1];
    let mut sx = vec![0.0; n + 1];
    let mut sxx = vec![0.0; n + 1];
    let mut sxy = vec![0.0; n + 1];
    for i in 0..n {
        sy[i + 1] = sy[i] + y[i];
        syy[i + 1] = syy[i] + y[i] * y[i];
        sx[i + 1] = sx[i] + x[i];
        sxx[i + 1] = sxx[i] + x[i] * x[i];
        sxy[i + 1] = sxy[i] + x[i] * y[i];
    }
    let flat_ssr = |k: usize| {
        if k == 0 {
            return 0.0;
        }
        let m = k as f64;
        (syy[k] - sy[k] * sy[k] / m).max(0.0)
    };
    let line_ssr = |k: usize| {
        let m = (n - k) as f64;
        let (tx, ty) = (sx[n] - sx[k], sy[n] - sy[k]);
        let cxx = (sxx[n] - sxx[k]) - tx * tx / m;
        let cxy = (sxy[n] - sxy[k]) - tx * ty / m;
        let cyy = (syy[n] - syy[k]) - ty * ty / m;
        if cxx <= 0.0 {
            cyy.max(0.0)
        } else {
            (cyy - cxy * cxy / cxx).max(0.0)
        }
    };

    // Prefix-sum cancellation leaves residue at this relative scale; totals
    // closer than it are treated as ties.
    let scale = syy[n].abs().max(1.0) * 1e-12;
    let mut best = (0, f64::INFINITY);
    for k in 0..=n - WINDOW_MIN_POINTS {
        let total = flat_ssr(k) + line_ssr(k);
        if total < best.1 - scale {
            best = (k, total);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pts(pairs: &[(u64, u64)]) -> Vec<EcdfPoint> {
        pairs.iter().map(|&(s, count)| EcdfPoint { s, count }).collect()
    }

    #[test]
    fn ccdf_by_hand() {
        let c = build_ccdf(&[1, 2, 2, 5], Measure::Tokens).unwrap();
        assert_eq!(c.points, pts(&[(1, 4), (2, 3), (5, 1)]));
        assert_eq!(c.total(), 4);
        assert_eq!(
            build_ccdf(&[9, 9, 9], Measure::Alphabet).unwrap().points,
            pts(&[(9, 3)])
        );
        assert_eq!(build_ccdf(&[7], Measure::Tokens).unwrap().points, pts(&[(7, 1)]));
        assert_eq!(build_ccdf(&[], Measure::Tokens), Err(FitError::EmptyInput));
        assert_eq!(build_ccdf(&[3, 0], Measure::Tokens), Err(FitError::ZeroSize));
    }

    #[test]
    fn weighted_ccdf_matches_repetition() {
        let items = [(5, 2), (1, 3), (2, 0), (5, 1), (3, 4)];
        let repeated: Vec<u64> = items
            .iter()
            .flat_map(|&(s, w)| std::iter::repeat_n(s, w as usize))
            .collect();
        assert_eq!(
            build_weighted_ccdf(&items, Measure::Alphabet).unwrap().points,
            build_ccdf(&repeated, Measure::Alphabet).unwrap().points
        );
        assert_eq!(
            build_weighted_ccdf(&[(3, 0)], Measure::Alphabet),
            Err(FitError::EmptyInput)
        );
    }

    fn power_points(c: f64, exponent: f64, range: std::ops::RangeInclusive<u64>) -> Vec<EcdfPoint> {
        range
            .map(|s| EcdfPoint {
                s,
                count: (c * (s as f64).powf(exponent)).round() as u64,
            })
            .collect()
    }

    #[test]
    fn rounded_power_law_is_recovered() {
        let points = power_points(1e7, -1.125, 30..=3000);
        let f = fit_tail(&points, 30, 3000).unwrap();
        assert!((f.slope + 1.125).abs() < 0.01, "{f:?}");
        assert!(f.r_squared > 0.999);
        assert!(f.p_value.is_below_threshold());
        assert_eq!(f.fit_range, (30.0, 3000.0));
    }

    #[test]
    fn fit_range_errors() {
        let points = power_points(1e6, -1.0, 1..=100);
        assert_eq!(
            fit_tail(&points, 50, 51),
            Err(FitError::TooFewInRange {
                found: 2,
                s_min: 50,
                s_max: 51
            })
        );
        assert!(matches!(fit_tail(&points, 9, 3), Err(FitError::InvalidRange { .. })));
        let flat = pts(&[(1, 5), (2, 5), (3, 5)]);
        assert!(fit_tail(&flat, 1, 3).unwrap_err().is_degenerate());
    }

    #[test]
    fn flat_then_power_shape() {
        // Count M below 20, M * (s/20)^-1.1 from 20 on.
        let m = 1e6;
        let points: Vec<_> = (1..=2000u64)
            .map(|s| {
                let c = if s < 20 { m } else { m * (s as f64 / 20.0).powf(-1.1) };
                EcdfPoint {
                    s,
                    count: c.round() as u64,
                }
            })
            .collect();
        let r = predicted_shape_check(&points).unwrap();
        assert!(r.head_flatness < 0.1, "{r:?}");
        assert!((r.tail_slope + 1.1).abs() < 0.01, "{r:?}");
        assert!((18..=22).contains(&r.knee_estimate), "{r:?}");
        assert!(r.power_law_tail);
        assert!(!r.tail_degenerate);
    }

    #[test]
    fn pure_power_law_shape() {
        let points = power_points(1e8, -1.3, 5..=5000);
        let r = predicted_shape_check(&points).unwrap();
        assert_eq!(r.knee_estimate, 5);
        assert_relative_eq!(r.head_flatness, 1.3, max_relative = 1e-3);
        assert_relative_eq!(r.tail_slope, -1.3, max_relative = 1e-3);
        assert!(r.power_law_tail);
    }

    #[test]
    fn constant_counts_shape() {
        let points: Vec<_> = (1..=12u64).map(|s| EcdfPoint { s, count: 40 }).collect();
        let r = predicted_shape_check(&points).unwrap();
        assert_eq!(r.head_flatness, 0.0);
        assert!(r.tail_degenerate);
        assert!(!r.power_law_tail);
        assert_eq!(
            predicted_shape_check(&pts(&[(1, 3), (2, 2), (3, 1)])),
            Err(FitError::TooFewDistinctSizes { found: 3, needed: 10 })
        );
    }
}

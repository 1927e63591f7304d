//! Ordinary least squares of one response on one regressor, with the
//! standard-error, t and p summaries of a classical linear model.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::special::student_t_two_sided;
use super::FitError;

/// Two-sided p-values below this are reported as [`PValue::BelowThreshold`],
/// the double-precision epsilon conventionally used by statistics packages.
pub const P_VALUE_FLOOR: f64 = 2.2e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValue {
    Value(f64),
    BelowThreshold,
}

impl PValue {
    pub fn from_probability(p: f64) -> PValue {
        if p < P_VALUE_FLOOR {
            PValue::BelowThreshold
        } else {
            PValue::Value(p.min(1.0))
        }
    }

    /// Upper bound on the probability.
    pub fn upper_bound(self) -> f64 {
        match self {
            PValue::Value(p) => p,
            PValue::BelowThreshold => P_VALUE_FLOOR,
        }
    }

    pub fn is_below_threshold(self) -> bool {
        self == PValue::BelowThreshold
    }
}

impl std::fmt::Display for PValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PValue::Value(p) => write!(f, "{p:.4e}"),
            PValue::BelowThreshold => write!(f, "< {P_VALUE_FLOOR:e}"),
        }
    }
}

const BELOW_THRESHOLD: &str = "below-threshold";

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PValue::Value(p) => s.serialize_f64(*p),
            PValue::BelowThreshold => s.serialize_str(BELOW_THRESHOLD),
        }
    }
}

impl<'de> Deserialize<'de> for PValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(p) => Ok(PValue::Value(p)),
            Raw::Text(t) if t == BELOW_THRESHOLD => Ok(PValue::BelowThreshold),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unknown p-value `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r_squared: f64,
    /// `slope / slope_stderr`; infinite for points exactly on a line.
    #[serde(with = "lossless_f64")]
    pub t_value: f64,
    pub p_value: PValue,
    pub n_points: usize,
    /// Residual degrees of freedom, `n_points - 2`.
    pub df: usize,
    pub residual_stderr: f64,
    /// Bounds of the regressor in the caller's units.
    pub fit_range: (f64, f64),
}

/// Fits `y = intercept + slope * x`.
///
/// Needs at least three points, a varying `x` and a varying `y`; a constant
/// `y` is reported as [`FitError::ZeroVarianceResponse`] carrying the
/// (exactly zero) slope.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit, FitError> {
    assert_eq!(x.len(), y.len(), "regressor and response lengths differ");
    let n = x.len();
    if n < 3 {
        return Err(FitError::TooFewPoints { found: n, needed: 3 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Exact equality, since a mean of identical values can be off by an ulp.
    if x.iter().all(|&v| v == x[0]) || sxx == 0.0 {
        return Err(FitError::ZeroVarianceRegressor);
    }
    if y.iter().all(|&v| v == y[0]) || syy == 0.0 {
        return Err(FitError::ZeroVarianceResponse {
            slope: 0.0,
            intercept: y[0],
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - (intercept + slope * xi);
            r * r
        })
        .sum();
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    Ok(assemble(Moments {
        n,
        slope,
        intercept,
        ssr,
        sxx,
        syy,
        mean_x: mx,
        range: (lo, hi),
    }))
}

/// Centered sums of a regression, from which every summary follows.
pub(crate) struct Moments {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub ssr: f64,
    pub sxx: f64,
    pub syy: f64,
    pub mean_x: f64,
    pub range: (f64, f64),
}

/// Standard errors, R^2, t and p from the moments; `n >= 3`, `sxx > 0`.
pub(crate) fn assemble(m: Moments) -> LinearFit {
    let nf = m.n as f64;
    let df = m.n - 2;
    let sigma2 = m.ssr / df as f64;
    let slope_stderr = (sigma2 / m.sxx).sqrt();
    let intercept_stderr = (sigma2 * (1.0 / nf + m.mean_x * m.mean_x / m.sxx)).sqrt();
    let t_value = if slope_stderr > 0.0 {
        m.slope / slope_stderr
    } else if m.slope > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let p = student_t_two_sided(t_value, df as f64);
    LinearFit {
        slope: m.slope,
        intercept: m.intercept,
        slope_stderr,
        intercept_stderr,
        r_squared: (1.0 - m.ssr / m.syy).clamp(0.0, 1.0),
        t_value,
        p_value: PValue::from_probability(p),
        n_points: m.n,
        df,
        residual_stderr: sigma2.sqrt(),
        fit_range: m.range,
    }
}

/// Serializes non-finite floats as the strings `inf`, `-inf` and `nan`,
/// which JSON numbers cannot carry.
pub mod lossless_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("not a number: `{t}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn textbook_regression() {
        // y = 1 + 2x with residuals (+1, -1, -1, +1) around the line.
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [4.0, 4.0, 6.0, 10.0];
        let f = ols(&x, &y).unwrap();
        // Sxx = 5, Sxy = 10, slope 2, intercept 6 - 2*2.5 = 1; SSR = 4, sigma^2 = 2.
        assert_relative_eq!(f.slope, 2.0, max_relative = 1e-14);
        assert_relative_eq!(f.intercept, 1.0, max_relative = 1e-14);
        assert_relative_eq!(f.slope_stderr, (2.0f64 / 5.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(
            f.intercept_stderr,
            (2.0 * (0.25 + 6.25 / 5.0f64)).sqrt(),
            max_relative = 1e-14
        );
        // Syy = 24, R^2 = 1 - 4/24.
        assert_relative_eq!(f.r_squared, 5.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(f.t_value, f.slope / f.slope_stderr, max_relative = 1e-15);
        // df = 2: p = 1 - t/sqrt(2 + t^2).
        let t = f.t_value;
        let p = 1.0 - t / (2.0 + t * t).sqrt();
        assert_relative_eq!(f.p_value.upper_bound(), p, max_relative = 1e-10);
        assert_eq!((f.n_points, f.df, f.fit_range), (4, 2, (1.0, 4.0)));
    }

    #[test]
    fn exact_line_is_below_threshold() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert_relative_eq!(f.slope, -0.5, max_relative = 1e-14);
        assert!(f.p_value.is_below_threshold());
        assert!(f.r_squared > 1.0 - 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            ols(&[1.0, 2.0], &[1.0, 2.0]),
            Err(FitError::TooFewPoints { found: 2, .. })
        ));
        assert!(matches!(
            ols(&[1.0; 3], &[1.0, 2.0, 3.0]),
            Err(FitError::ZeroVarianceRegressor)
        ));
        match ols(&[1.0, 2.0, 3.0], &[5.0; 3]) {
            Err(FitError::ZeroVarianceResponse { slope, intercept }) => assert_eq!((slope, intercept), (0.0, 5.0)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ols(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]),
            Err(FitError::NonFinite)
        ));
    }

    #[test]
    fn json_round_trip_keeps_infinite_t() {
        let x = [0.0, 1.0, 2.0];
        let f = ols(&x, &[0.0, 1.0, 2.0]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"below-threshold\""));
        let back: LinearFit = serde_json::from_str(&text).unwrap();
        assert_eq!(back.p_value, PValue::BelowThreshold);
        assert_eq!(back.t_value, f.t_value);
    }
}

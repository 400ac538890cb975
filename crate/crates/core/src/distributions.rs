//! Interarrival laws for the cure marks.
//!
//! A law is validated once at construction and is immutable afterwards, so
//! it can be shared freely across worker threads. All randomness comes from
//! the caller's stream.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Parametric description of an interarrival law.
#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    /// Uniform on `[0, b]`.
    UniformBounded { b: f64 },
    Pareto { alpha: f64, xmin: f64 },
    /// Point mass at `c`.
    Deterministic { c: f64 },
    /// Resampling with replacement from a sorted list of observed gaps.
    Empirical {
        samples: Arc<[f64]>,
        source: Option<String>,
    },
}

/// Answer of [`InterarrivalLaw::is_dfr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfrVerdict {
    Yes,
    No,
    /// Decided by a monotonicity scan of the hazard on a log-spaced grid.
    NumericChecked(bool),
}

impl DfrVerdict {
    pub fn holds(self) -> bool {
        matches!(self, DfrVerdict::Yes | DfrVerdict::NumericChecked(true))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterarrivalLaw {
    kind: LawKind,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be a positive finite number, got {v}")))
    }
}

impl InterarrivalLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Self {
            kind: LawKind::Exponential {
                rate: positive("rate", rate)?,
            },
        })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            kind: LawKind::Weibull {
                shape: positive("shape", shape)?,
                scale: positive("scale", scale)?,
            },
        })
    }

    pub fn uniform(b: f64) -> Result<Self> {
        Ok(Self {
            kind: LawKind::UniformBounded { b: positive("b", b)? },
        })
    }

    pub fn pareto(alpha: f64, xmin: f64) -> Result<Self> {
        Ok(Self {
            kind: LawKind::Pareto {
                alpha: positive("alpha", alpha)?,
                xmin: positive("xmin", xmin)?,
            },
        })
    }

    pub fn deterministic(c: f64) -> Result<Self> {
        Ok(Self {
            kind: LawKind::Deterministic { c: positive("c", c)? },
        })
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Self::empirical_with_source(samples, None)
    }

    fn empirical_with_source(mut samples: Vec<f64>, source: Option<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empirical law needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "empirical samples must be finite and nonnegative, got {bad}"
            )));
        }
        if samples.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidParameter(
                "empirical law puts all its mass at 0".into(),
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self {
            kind: LawKind::Empirical {
                samples: samples.into(),
                source,
            },
        })
    }

    /// Reads a newline-separated list of decimal times. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn empirical_from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let samples = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}: {l:?}: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::empirical_with_source(samples, Some(path.display().to_string()))
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    /// True for the variants with a density (all but point masses and
    /// empirical laws).
    pub fn is_absolutely_continuous(&self) -> bool {
        !matches!(
            self.kind,
            LawKind::Deterministic { .. } | LawKind::Empirical { .. }
        )
    }

    fn require_density(&self, op: &'static str) -> Result<()> {
        if self.is_absolutely_continuous() {
            Ok(())
        } else {
            Err(Error::Unsupported {
                op,
                law: self.to_string(),
            })
        }
    }

    /// Draws one interarrival time.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            LawKind::Deterministic { c } => *c,
            LawKind::Empirical { samples, .. } => samples[rng.random_range(0..samples.len())],
            _ => {
                // 1 - U lies in (0, 1], keeping logarithms finite.
                let u = 1.0 - rng.random::<f64>();
                self.survival_inverse(u)
            }
        }
    }

    /// Inverse of the survival function on `(0, 1]` for continuous laws.
    fn survival_inverse(&self, s: f64) -> f64 {
        match self.kind {
            LawKind::Exponential { rate } => -s.ln() / rate,
            LawKind::Weibull { shape, scale } => scale * (-s.ln()).powf(1.0 / shape),
            LawKind::UniformBounded { b } => b * (1.0 - s),
            LawKind::Pareto { alpha, xmin } => xmin * s.powf(-1.0 / alpha),
            LawKind::Deterministic { .. } | LawKind::Empirical { .. } => {
                unreachable!("survival inverse of a non-continuous law")
            }
        }
    }

    /// Quantile function of a continuous law.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.require_density("quantile")?;
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("quantile level {p} outside [0, 1)")));
        }
        Ok(self.survival_inverse(1.0 - p))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.kind {
            LawKind::Exponential { rate } => -(-rate * t).exp_m1(),
            LawKind::Weibull { shape, scale } => -(-(t / scale).powf(*shape)).exp_m1(),
            LawKind::UniformBounded { b } => (t / b).min(1.0),
            LawKind::Pareto { alpha, xmin } => {
                if t < *xmin {
                    0.0
                } else {
                    1.0 - (xmin / t).powf(*alpha)
                }
            }
            LawKind::Deterministic { c } => {
                if t >= *c {
                    1.0
                } else {
                    0.0
                }
            }
            LawKind::Empirical { samples, .. } => {
                samples.partition_point(|&x| x <= t) as f64 / samples.len() as f64
            }
        }
    }

    /// `1 - F(t)`, computed without cancellation where a closed form exists.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match &self.kind {
            LawKind::Exponential { rate } => (-rate * t).exp(),
            LawKind::Weibull { shape, scale } => (-(t / scale).powf(*shape)).exp(),
            LawKind::UniformBounded { b } => ((b - t) / b).max(0.0),
            LawKind::Pareto { alpha, xmin } => {
                if t < *xmin {
                    1.0
                } else {
                    (xmin / t).powf(*alpha)
                }
            }
            _ => 1.0 - self.cdf(t),
        }
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        self.require_density("density")?;
        check_time(t)?;
        Ok(match self.kind {
            LawKind::Exponential { rate } => rate * (-rate * t).exp(),
            LawKind::Weibull { shape, scale } => {
                let z = t / scale;
                (shape / scale) * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
            }
            LawKind::UniformBounded { b } => {
                if t < b {
                    1.0 / b
                } else {
                    0.0
                }
            }
            LawKind::Pareto { alpha, xmin } => {
                if t < xmin {
                    0.0
                } else {
                    alpha * xmin.powf(alpha) / t.powf(alpha + 1.0)
                }
            }
            LawKind::Deterministic { .. } | LawKind::Empirical { .. } => unreachable!(),
        })
    }

    /// Hazard rate `f(t) / (1 - F(t))`; `+inf` once `F(t) = 1`.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        self.require_density("hazard")?;
        check_time(t)?;
        Ok(match self.kind {
            LawKind::Exponential { rate } => rate,
            LawKind::Weibull { shape, scale } => (shape / scale) * (t / scale).powf(shape - 1.0),
            LawKind::UniformBounded { b } => {
                if t < b {
                    1.0 / (b - t)
                } else {
                    f64::INFINITY
                }
            }
            LawKind::Pareto { alpha, xmin } => {
                if t < xmin {
                    0.0
                } else {
                    alpha / t
                }
            }
            LawKind::Deterministic { .. } | LawKind::Empirical { .. } => unreachable!(),
        })
    }

    /// Whether the hazard rate is nonincreasing on `[0, inf)`.
    ///
    /// Pareto is answered `No`: its hazard is 0 below `xmin` and jumps to
    /// `alpha / xmin` there.
    pub fn is_dfr(&self) -> Result<DfrVerdict> {
        self.require_density("is_dfr")?;
        Ok(match self.kind {
            LawKind::Exponential { .. } => DfrVerdict::Yes,
            LawKind::Weibull { shape, .. } => {
                if shape <= 1.0 {
                    DfrVerdict::Yes
                } else {
                    DfrVerdict::No
                }
            }
            LawKind::UniformBounded { .. } | LawKind::Pareto { .. } => DfrVerdict::No,
            LawKind::Deterministic { .. } | LawKind::Empirical { .. } => unreachable!(),
        })
    }

    /// Scans the hazard on a log-spaced grid spanning six decades around the
    /// law's natural time scale.
    pub fn is_dfr_numeric(&self) -> Result<DfrVerdict> {
        self.require_density("is_dfr")?;
        let scale = self.quantile(0.5)?.max(f64::MIN_POSITIVE);
        let points = 600;
        let mut prev = f64::INFINITY;
        for i in 0..=points {
            let t = scale * 10f64.powf(-3.0 + 6.0 * i as f64 / points as f64);
            if self.cdf(t) >= 1.0 {
                break;
            }
            let h = self.hazard(t)?;
            if h > prev * (1.0 + 1e-12) {
                return Ok(DfrVerdict::NumericChecked(false));
            }
            prev = h;
        }
        Ok(DfrVerdict::NumericChecked(true))
    }

    /// `F(w) / (1 - F(w))`.
    pub fn tail_ratio(&self, w: f64) -> Result<f64> {
        check_time(w)?;
        let s = self.survival(w);
        if s <= 0.0 {
            return Err(Error::InfiniteBound { w });
        }
        Ok(self.cdf(w) / s)
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            LawKind::Exponential { rate } => 1.0 / rate,
            LawKind::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            LawKind::UniformBounded { b } => b / 2.0,
            LawKind::Pareto { alpha, xmin } => {
                if *alpha > 1.0 {
                    alpha * xmin / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            LawKind::Deterministic { c } => *c,
            LawKind::Empirical { samples, .. } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    /// Draws from the length-biased law `x μ(dx) / mean`.
    ///
    /// A stationary renewal process started in equilibrium has the interval
    /// straddling the origin distributed this way; splitting it uniformly
    /// gives the age and the residual life at 0.
    pub fn sample_length_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match &self.kind {
            LawKind::Exponential { rate } => {
                let a = 1.0 - rng.random::<f64>();
                let b = 1.0 - rng.random::<f64>();
                -(a * b).ln() / rate
            }
            LawKind::Weibull { shape, scale } => {
                let g = Gamma::new(1.0 + 1.0 / shape, 1.0)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                scale * g.sample(rng).powf(1.0 / shape)
            }
            LawKind::UniformBounded { b } => b * (1.0 - rng.random::<f64>()).sqrt(),
            LawKind::Pareto { alpha, xmin } => {
                if *alpha <= 1.0 {
                    return Err(Error::Unsupported {
                        op: "stationary start (infinite mean)",
                        law: self.to_string(),
                    });
                }
                xmin * (1.0 - rng.random::<f64>()).powf(-1.0 / (alpha - 1.0))
            }
            LawKind::Deterministic { c } => *c,
            LawKind::Empirical { samples, .. } => {
                let total: f64 = samples.iter().sum();
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = samples[samples.len() - 1];
                for &x in samples.iter() {
                    acc += x;
                    if acc > target {
                        pick = x;
                        break;
                    }
                }
                pick
            }
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")))
    }
}

impl fmt::Display for InterarrivalLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LawKind::Exponential { rate } => write!(f, "exp({rate})"),
            LawKind::Weibull { shape, scale } => write!(f, "weibull({shape},{scale})"),
            LawKind::UniformBounded { b } => write!(f, "uniform({b})"),
            LawKind::Pareto { alpha, xmin } => write!(f, "pareto({alpha},{xmin})"),
            LawKind::Deterministic { c } => write!(f, "det({c})"),
            LawKind::Empirical { source: Some(p), .. } => write!(f, "empirical({p})"),
            LawKind::Empirical { samples, .. } => write!(f, "empirical(<{} samples>)", samples.len()),
        }
    }
}

/// Parses `exp(rate)`, `weibull(shape,scale)`, `uniform(b)`,
/// `pareto(alpha,xmin)`, `det(c)` or `empirical(path)`.
impl FromStr for InterarrivalLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Parse(format!("law {s:?}: expected name(args)")))?;
        if !s.ends_with(')') {
            return Err(Error::Parse(format!("law {s:?}: missing closing parenthesis")));
        }
        let name = s[..open].trim();
        let inner = &s[open + 1..s.len() - 1];
        if name == "empirical" {
            return Self::empirical_from_file(inner.trim());
        }
        let args = inner
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("law {s:?}: argument {a:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("law {name} takes {n} argument(s), got {}", args.len())))
            }
        };
        match name {
            "exp" => {
                arity(1)?;
                Self::exponential(args[0])
            }
            "weibull" => {
                arity(2)?;
                Self::weibull(args[0], args[1])
            }
            "uniform" => {
                arity(1)?;
                Self::uniform(args[0])
            }
            "pareto" => {
                arity(2)?;
                Self::pareto(args[0], args[1])
            }
            "det" => {
                arity(1)?;
                Self::deterministic(args[0])
            }
            other => Err(Error::Parse(format!("unknown law {other:?}"))),
        }
    }
}

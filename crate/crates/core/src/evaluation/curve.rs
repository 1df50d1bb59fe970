use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta_data::PerformanceMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint<T> {
    pub time: T,
    pub loss: T,
}

/// Right-continuous, non-increasing step function from cumulative runtime to
/// accuracy loss. Before the first breakpoint the value is `initial_loss`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTimeCurve<T> {
    initial_loss: T,
    breakpoints: Vec<Breakpoint<T>>,
}

impl<T: Scalar> LossTimeCurve<T> {
    pub fn new(initial_loss: T, breakpoints: Vec<Breakpoint<T>>) -> Result<Self> {
        if !initial_loss.is_finite() || initial_loss < T::zero() {
            return Err(Error::InvalidCurve(
                "initial loss must be finite and >= 0".into(),
            ));
        }
        let mut prev_loss = initial_loss;
        let mut prev_time: Option<T> = None;
        for b in &breakpoints {
            if !b.time.is_finite() || b.time < T::zero() {
                return Err(Error::InvalidCurve(format!("bad time {}", b.time)));
            }
            if prev_time.is_some_and(|t| b.time <= t) {
                return Err(Error::InvalidCurve(
                    "times must be strictly increasing".into(),
                ));
            }
            if b.loss.is_nan() || b.loss < T::zero() || b.loss > prev_loss {
                return Err(Error::InvalidCurve(
                    "losses must be >= 0 and non-increasing".into(),
                ));
            }
            prev_time = Some(b.time);
            prev_loss = b.loss;
        }
        Ok(Self {
            initial_loss,
            breakpoints,
        })
    }

    pub fn constant(loss: T) -> Result<Self> {
        Self::new(loss, Vec::new())
    }

    pub fn initial_loss(&self) -> T {
        self.initial_loss
    }

    pub fn breakpoints(&self) -> &[Breakpoint<T>] {
        &self.breakpoints
    }

    pub fn final_loss(&self) -> T {
        self.breakpoints
            .last()
            .map_or(self.initial_loss, |b| b.loss)
    }

    /// Value at `t`; a breakpoint at exactly `t` already applies.
    pub fn loss_at(&self, t: T) -> T {
        let i = self.breakpoints.partition_point(|b| b.time <= t);
        if i == 0 {
            self.initial_loss
        } else {
            self.breakpoints[i - 1].loss
        }
    }

    pub fn shifted(&self, dt: T) -> Result<Self> {
        Self::new(
            self.initial_loss,
            self.breakpoints
                .iter()
                .map(|b| Breakpoint {
                    time: b.time + dt,
                    loss: b.loss,
                })
                .collect(),
        )
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(
            self.initial_loss * c,
            self.breakpoints
                .iter()
                .map(|b| Breakpoint {
                    time: b.time,
                    loss: b.loss * c,
                })
                .collect(),
        )
    }
}

/// Walks `order` on the held-out dataset (Top-N execution).
///
/// Algorithms without a result there are skipped at no cost. Each tested
/// algorithm adds its runtime; a breakpoint is recorded whenever the best
/// accuracy so far improves. Loss is the gap to the dataset's best accuracy;
/// before any test completes it is the best accuracy itself.
pub fn build_loss_time_curve<T: Scalar, S: AsRef<str>>(
    order: &[S],
    matrix: &PerformanceMatrix<T>,
    heldout: &str,
) -> Result<LossTimeCurve<T>> {
    let d = matrix
        .dataset_index(heldout)
        .ok_or_else(|| Error::UnknownDataset(heldout.to_owned()))?;
    let ideal = matrix
        .column(d)
        .map(|(_, c)| c.accuracy)
        .reduce(T::max)
        .ok_or_else(|| Error::EmptyDataset(heldout.to_owned()))?;
    if order.is_empty() {
        return Err(Error::InvalidConfig("empty algorithm order".into()));
    }
    let mut elapsed = T::zero();
    let mut best = T::zero();
    let mut breakpoints = Vec::new();
    for id in order {
        let Some(cell) = matrix
            .algorithm_index(id.as_ref())
            .and_then(|a| matrix.cell(d, a))
        else {
            continue;
        };
        elapsed += cell.runtime_seconds;
        if cell.accuracy > best {
            best = cell.accuracy;
            breakpoints.push(Breakpoint {
                time: elapsed,
                loss: ideal - best,
            });
        }
    }
    LossTimeCurve::new(ideal, breakpoints)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScale {
    #[default]
    Linear,
    Log,
}

impl TimeScale {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeScale::Linear => "linear",
            TimeScale::Log => "log",
        }
    }
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(TimeScale::Linear),
            "log" => Ok(TimeScale::Log),
            other => Err(Error::InvalidConfig(format!(
                "unknown time scale {other:?}"
            ))),
        }
    }
}

/// Interval over which loss-time curves are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilConfig<T> {
    pub t_min: T,
    pub t_max: T,
    pub time_scale: TimeScale,
}

impl<T: Scalar> Default for MilConfig<T> {
    /// 10 s to 10⁴ s, linear time.
    fn default() -> Self {
        Self {
            t_min: T::lit(10.0),
            t_max: T::lit(1e4),
            time_scale: TimeScale::Linear,
        }
    }
}

impl<T: Scalar> MilConfig<T> {
    pub fn new(t_min: T, t_max: T, time_scale: TimeScale) -> Result<Self> {
        let cfg = Self {
            t_min,
            t_max,
            time_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > T::zero() && self.t_min < self.t_max && self.t_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    fn warp(&self, t: T) -> T {
        match self.time_scale {
            TimeScale::Linear => t,
            TimeScale::Log => t.ln(),
        }
    }
}

/// Time-weighted mean of the curve over `[t_min, t_max]`, in linear time or
/// in `ln t`.
pub fn mean_interval_loss<T: Scalar>(curve: &LossTimeCurve<T>, cfg: &MilConfig<T>) -> Result<T> {
    cfg.validate()?;
    let lo = cfg.warp(cfg.t_min);
    let span = cfg.warp(cfg.t_max) - lo;
    let mut left = lo;
    let mut value = curve.loss_at(cfg.t_min);
    let mut total = T::zero();
    for b in curve
        .breakpoints()
        .iter()
        .filter(|b| b.time > cfg.t_min && b.time < cfg.t_max)
    {
        let right = cfg.warp(b.time);
        total += value * ((right - left) / span);
        left = right;
        value = b.loss;
    }
    let right = cfg.warp(cfg.t_max);
    // a single segment covers the whole span: fraction is exactly 1
    let frac = if left == lo {
        T::one()
    } else {
        (right - left) / span
    };
    total += value * frac;
    Ok(total)
}

/// Pointwise mean of step curves over the union of their breakpoint times.
pub fn aggregate_curves<T: Scalar>(curves: &[LossTimeCurve<T>]) -> Result<LossTimeCurve<T>> {
    if curves.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = T::from_count(curves.len());
    let mut times: Vec<T> = curves
        .iter()
        .flat_map(|c| c.breakpoints().iter().map(|b| b.time))
        .collect();
    times.sort_by(|a, b| {
        a.partial_cmp(b)
            .expect("validated curves have finite times")
    });
    times.dedup();
    let mean_at = |f: &dyn Fn(&LossTimeCurve<T>) -> T| curves.iter().map(f).sum::<T>() / n;
    let initial = mean_at(&|c| c.initial_loss());
    let mut prev = initial;
    let breakpoints = times
        .into_iter()
        .map(|t| {
            // clamp guards against rounding making the mean tick upwards
            let loss = mean_at(&|c| c.loss_at(t)).min(prev);
            prev = loss;
            Breakpoint { time: t, loss }
        })
        .collect();
    LossTimeCurve::new(initial, breakpoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bp(time: f64, loss: f64) -> Breakpoint<f64> {
        Breakpoint { time, loss }
    }

    fn d4() -> PerformanceMatrix<f64> {
        PerformanceMatrix::read_csv(
            "dataset_id,algorithm_id,accuracy,runtime_seconds\n\
             D4,a1,0.98,50\nD4,a2,0.68,20\nD4,a3,0.89,100\nD4,a4,0.58,5\nD4,a6,0.89,7\nD1,a5,0.5,3\n"
                .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn table1_d4_walk() {
        let c = build_loss_time_curve(&["a3", "a1", "a2", "a6"], &d4(), "D4").unwrap();
        assert_eq!(c.initial_loss(), 0.98);
        assert_eq!(c.breakpoints().len(), 2);
        assert_eq!(c.breakpoints()[0].time, 100.0);
        assert_abs_diff_eq!(c.breakpoints()[0].loss, 0.09, epsilon = 1e-12);
        assert_eq!(c.breakpoints()[1], bp(150.0, 0.0));
    }

    #[test]
    fn best_first_drops_to_zero() {
        let c = build_loss_time_curve(&["a1", "a3"], &d4(), "D4").unwrap();
        assert_eq!(c.breakpoints(), [bp(50.0, 0.0)]);
    }

    #[test]
    fn worst_first_improves_every_step() {
        let order = ["a4", "a2", "a6", "a1"];
        let c = build_loss_time_curve(&order, &d4(), "D4").unwrap();
        assert_eq!(c.breakpoints().len(), 4);
        assert!(c.breakpoints()[..3].iter().all(|b| b.loss > 0.0));
        assert_eq!(c.final_loss(), 0.0);
        assert_eq!(c.breakpoints()[3].time, 5.0 + 20.0 + 7.0 + 50.0);
    }

    #[test]
    fn absent_algorithms_cost_nothing() {
        // a5 has no result on D4
        let c = build_loss_time_curve(&["a5", "a1"], &d4(), "D4").unwrap();
        assert_eq!(c.breakpoints(), [bp(50.0, 0.0)]);
    }

    #[test]
    fn curve_errors() {
        assert!(build_loss_time_curve(&["a1"], &d4(), "nope").is_err());
        assert!(build_loss_time_curve::<f64, &str>(&[], &d4(), "D4").is_err());
        assert!(LossTimeCurve::new(1.0, vec![bp(2.0, 0.5), bp(2.0, 0.4)]).is_err());
        assert!(LossTimeCurve::new(1.0, vec![bp(2.0, 0.5), bp(3.0, 0.6)]).is_err());
        assert!(LossTimeCurve::new(1.0, vec![bp(2.0, 1.5)]).is_err());
    }

    #[test]
    fn loss_is_right_continuous() {
        let c = LossTimeCurve::new(1.0, vec![bp(10.0, 0.5)]).unwrap();
        assert_eq!(c.loss_at(9.999), 1.0);
        assert_eq!(c.loss_at(10.0), 0.5);
    }

    #[test]
    fn mil_constant_and_step() {
        let cfg = MilConfig::default();
        for scale in [TimeScale::Linear, TimeScale::Log] {
            let cfg = MilConfig {
                time_scale: scale,
                ..cfg
            };
            for l in [0.0, 0.37, 1.213, 7.0] {
                assert_eq!(
                    mean_interval_loss(&LossTimeCurve::constant(l).unwrap(), &cfg).unwrap(),
                    l
                );
            }
        }
        let step = LossTimeCurve::new(1.0, vec![bp(100.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(
            mean_interval_loss(&step, &cfg).unwrap(),
            90.0 / 9990.0,
            epsilon = 1e-15
        );
        let log = MilConfig {
            time_scale: TimeScale::Log,
            ..cfg
        };
        assert_abs_diff_eq!(
            mean_interval_loss(&step, &log).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mil_ignores_points_outside_interval() {
        let cfg = MilConfig::new(10.0, 20.0, TimeScale::Linear).unwrap();
        let c = LossTimeCurve::new(3.0, vec![bp(5.0, 2.0), bp(15.0, 1.0), bp(30.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(mean_interval_loss(&c, &cfg).unwrap(), 1.5, epsilon = 1e-15);
        assert!(MilConfig::new(10.0, 10.0, TimeScale::Linear).is_err());
        assert!(MilConfig::new(0.0, 10.0, TimeScale::Log).is_err());
    }

    #[test]
    fn aggregate_two_steps() {
        let a = LossTimeCurve::new(1.0, vec![bp(10.0, 0.0)]).unwrap();
        let b = LossTimeCurve::new(1.0, vec![bp(20.0, 0.0)]).unwrap();
        let m = aggregate_curves(&[a.clone(), b]).unwrap();
        assert_eq!(m.initial_loss(), 1.0);
        assert_eq!(m.breakpoints(), [bp(10.0, 0.5), bp(20.0, 0.0)]);
        assert_eq!(aggregate_curves(std::slice::from_ref(&a)).unwrap(), a);
        assert!(aggregate_curves::<f64>(&[]).is_err());
    }

    #[test]
    fn parse_time_scale() {
        assert_eq!("LOG".parse::<TimeScale>().unwrap(), TimeScale::Log);
        assert!("cubic".parse::<TimeScale>().is_err());
    }
}

//! Piecewise parameter schedules and their line-oriented text format.
//!
//! ```text
//! # comment
//! hold   t_start t_end gamma lambda
//! linear t_start t_end gamma_start lambda_start gamma_end lambda_end
//! ```
//!
//! Segments must start at `t = 0`, be listed in time order and tile the interval without
//! gaps. [`ParameterSchedule::to_text`] writes the canonical form: comments and blank
//! lines dropped, single spaces, shortest round-trip float formatting.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{max_packet_speed, XyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Hold,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub start: XyParams,
    pub end: XyParams,
    pub interpolation: Interpolation,
}

impl Segment {
    pub fn hold(t_start: f64, t_end: f64, p: XyParams) -> Self {
        Self { t_start, t_end, start: p, end: p, interpolation: Interpolation::Hold }
    }

    pub fn linear(t_start: f64, t_end: f64, start: XyParams, end: XyParams) -> Self {
        Self { t_start, t_end, start, end, interpolation: Interpolation::Linear }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn params_at(&self, t: f64) -> XyParams {
        match self.interpolation {
            Interpolation::Hold => self.start,
            Interpolation::Linear => {
                let s = ((t - self.t_start) / self.duration()).clamp(0.0, 1.0);
                self.start.lerp(&self.end, s)
            }
        }
    }

    /// `int_{t_start}^{t} params dt'` for `t` inside the segment.
    fn integral_to(&self, t: f64) -> (f64, f64) {
        let tau = (t - self.t_start).clamp(0.0, self.duration());
        let mid = self.params_at(self.t_start + 0.5 * tau);
        // Exact for constant and linear interpolation.
        (mid.gamma * tau, mid.lambda * tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Constant,
    Quench,
    Ramp,
}

/// Sudden change `p0 -> p1` at `t1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuenchParts {
    pub p0: XyParams,
    pub p1: XyParams,
    pub t1: f64,
}

/// Time profile of `(gamma, lambda)`. Past the last segment the final parameters hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSchedule {
    segments: Vec<Segment>,
}

impl ParameterSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        validate(&segments, |i| i + 1)?;
        Ok(Self { segments })
    }

    pub fn constant(p: XyParams, t_end: f64) -> Result<Self> {
        Self::new(vec![Segment::hold(0.0, t_end, p)])
    }

    pub fn quench(p0: XyParams, p1: XyParams, t1: f64, t_end: f64) -> Result<Self> {
        Self::new(vec![Segment::hold(0.0, t1, p0), Segment::hold(t1, t_end, p1)])
    }

    /// Hold `from` until `ramp_start`, interpolate linearly to `to` by `ramp_end`, then
    /// hold `to` until `t_end`. Zero-length holds are omitted.
    pub fn linear_ramp(
        from: XyParams,
        to: XyParams,
        ramp_start: f64,
        ramp_end: f64,
        t_end: f64,
    ) -> Result<Self> {
        let mut segments = Vec::new();
        if ramp_start > 0.0 {
            segments.push(Segment::hold(0.0, ramp_start, from));
        }
        segments.push(Segment::linear(ramp_start, ramp_end, from, to));
        if t_end > ramp_end {
            segments.push(Segment::hold(ramp_end, t_end, to));
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    pub fn kind(&self) -> ScheduleKind {
        let first = self.segments[0].start;
        let all_hold = self
            .segments
            .iter()
            .all(|s| s.interpolation == Interpolation::Hold);
        if all_hold && self.segments.iter().all(|s| s.start == first) {
            ScheduleKind::Constant
        } else if all_hold && self.segments.len() == 2 {
            ScheduleKind::Quench
        } else {
            ScheduleKind::Ramp
        }
    }

    pub fn quench_parts(&self) -> Option<QuenchParts> {
        match (self.kind(), self.segments.as_slice()) {
            (ScheduleKind::Quench, [a, b]) => Some(QuenchParts { p0: a.start, p1: b.start, t1: b.t_start }),
            _ => None,
        }
    }

    /// Parameters in force at `t`; at a boundary the later segment applies.
    pub fn params_at(&self, t: f64) -> XyParams {
        let last = self.segments.last().expect("validated non-empty");
        if t >= last.t_end {
            return last.end;
        }
        let i = self.segments.partition_point(|s| s.t_start <= t).max(1) - 1;
        self.segments[i].params_at(t)
    }

    /// Time average of the parameters over `[0, t]`; at `t = 0` the initial parameters.
    pub fn average_params(&self, t: f64) -> XyParams {
        if t <= 0.0 {
            return self.segments[0].start;
        }
        let (mut g, mut l) = (0.0, 0.0);
        for s in &self.segments {
            if s.t_start >= t {
                break;
            }
            let (dg, dl) = s.integral_to(t);
            g += dg;
            l += dl;
        }
        let tail = t - self.t_end();
        if tail > 0.0 {
            let p = self.segments.last().unwrap().end;
            g += p.gamma * tail;
            l += p.lambda * tail;
        }
        XyParams { gamma: g / t, lambda: l / t }
    }

    pub fn min_segment_duration(&self) -> f64 {
        self.segments
            .iter()
            .map(Segment::duration)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest packet speed met along the schedule (segment ends and nine interior samples
    /// of each linear segment).
    pub fn max_speed(&self) -> f64 {
        let mut v: f64 = 0.0;
        for s in &self.segments {
            let samples = match s.interpolation {
                Interpolation::Hold => 1,
                Interpolation::Linear => 11,
            };
            for k in 0..samples {
                let p = if samples == 1 {
                    s.start
                } else {
                    s.start.lerp(&s.end, k as f64 / (samples - 1) as f64)
                };
                v = v.max(max_packet_speed(&p, 1024).expect("grid >= 256").velocity);
            }
        }
        v
    }

    /// Piecewise-constant approximation of the schedule on `[from, to]`.
    ///
    /// The interval is cut at segment boundaries. Hold pieces are returned whole; linear
    /// pieces are split into `ceil(len / h)` equal steps, each carrying the parameters at
    /// its midpoint. Steps are in time order.
    pub fn substeps(&self, from: f64, to: f64, h: f64) -> Vec<(f64, XyParams)> {
        let mut cuts = vec![from];
        for s in &self.segments {
            if s.t_end > from && s.t_end < to {
                cuts.push(s.t_end);
            }
        }
        cuts.push(to);
        let mut steps = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            if len <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let linear = mid < self.t_end()
                && self.segments[self.segment_index(mid)].interpolation == Interpolation::Linear;
            let n = if linear { ((len / h) - 1e-9).ceil().max(1.0) as usize } else { 1 };
            let dt = len / n as f64;
            for k in 0..n {
                let tm = a + (k as f64 + 0.5) * dt;
                steps.push((dt, self.params_at(tm)));
            }
        }
        steps
    }

    fn segment_index(&self, t: f64) -> usize {
        self.segments.partition_point(|s| s.t_start <= t).max(1) - 1
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut segments = Vec::new();
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            segments.push(parse_line(body, line_no)?);
            lines.push(line_no);
        }
        if segments.is_empty() {
            return Err(Error::Schedule { line: 0, message: "schedule has no segments".into() });
        }
        validate(&segments, |i| lines[i])?;
        Ok(Self { segments })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s.interpolation {
                Interpolation::Hold => writeln!(
                    out,
                    "hold {} {} {} {}",
                    s.t_start, s.t_end, s.start.gamma, s.start.lambda
                ),
                Interpolation::Linear => writeln!(
                    out,
                    "linear {} {} {} {} {} {}",
                    s.t_start, s.t_end, s.start.gamma, s.start.lambda, s.end.gamma, s.end.lambda
                ),
            }
            .expect("writing to a String");
        }
        out
    }
}

fn parse_line(body: &str, line: usize) -> Result<Segment> {
    let err = |message: String| Error::Schedule { line, message };
    let mut words = body.split_whitespace();
    let directive = words.next().expect("non-empty line");
    let nums = words
        .map(|w| {
            w.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("invalid number {w:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    match (directive, nums.as_slice()) {
        ("hold", &[t0, t1, g, l]) => Ok(Segment::hold(t0, t1, XyParams { gamma: g, lambda: l })),
        ("linear", &[t0, t1, g0, l0, g1, l1]) => Ok(Segment::linear(
            t0,
            t1,
            XyParams { gamma: g0, lambda: l0 },
            XyParams { gamma: g1, lambda: l1 },
        )),
        ("hold", _) => Err(err(format!("hold expects 4 numbers, got {}", nums.len()))),
        ("linear", _) => Err(err(format!("linear expects 6 numbers, got {}", nums.len()))),
        (other, _) => Err(err(format!("unknown directive {other:?}"))),
    }
}

fn validate(segments: &[Segment], line_of: impl Fn(usize) -> usize) -> Result<()> {
    if segments.is_empty() {
        return Err(Error::Schedule { line: 0, message: "schedule has no segments".into() });
    }
    for (i, s) in segments.iter().enumerate() {
        let err = |message: String| Error::Schedule { line: line_of(i), message };
        let finite = [s.t_start, s.t_end, s.start.gamma, s.start.lambda, s.end.gamma, s.end.lambda]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(err("non-finite value".into()));
        }
        if s.t_end <= s.t_start {
            return Err(err(format!("segment end {} is not after its start {}", s.t_end, s.t_start)));
        }
        if i == 0 {
            if s.t_start != 0.0 {
                return Err(err(format!("first segment must start at 0, not {}", s.t_start)));
            }
            continue;
        }
        let prev = &segments[i - 1];
        if s.t_start < prev.t_start {
            return Err(err(format!(
                "segment starting at {} is out of order (previous starts at {})",
                s.t_start, prev.t_start
            )));
        }
        if s.t_start < prev.t_end {
            return Err(err(format!("segment starting at {} overlaps the previous one", s.t_start)));
        }
        if s.t_start > prev.t_end {
            return Err(err(format!("gap between {} and {}", prev.t_end, s.t_start)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const QUENCH_FILE: &str = "hold 0 20 0.9 0.5\nhold 20 40 0.1 10\n";

    #[test]
    fn parses_quench_file() {
        let s = ParameterSchedule::parse(QUENCH_FILE).unwrap();
        assert_eq!(s.kind(), ScheduleKind::Quench);
        let q = s.quench_parts().unwrap();
        assert_eq!(q.p0, XyParams { gamma: 0.9, lambda: 0.5 });
        assert_eq!(q.p1, XyParams { gamma: 0.1, lambda: 10.0 });
        assert_eq!(q.t1, 20.0);
        assert_eq!(s.to_text(), QUENCH_FILE);
    }

    #[test]
    fn comments_and_spacing_are_canonicalized() {
        let messy = "# quench\n\n  hold 0   20 0.90 0.5   # before\nhold 20 40 1e-1 10.0\n";
        let s = ParameterSchedule::parse(messy).unwrap();
        assert_eq!(s.to_text(), QUENCH_FILE);
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(ParameterSchedule::parse("").is_err());
        assert!(ParameterSchedule::parse("# nothing\n\n").is_err());
    }

    #[test]
    fn errors_name_the_offending_line() {
        let out_of_order = "hold 0 10 1 2\n# c\nhold 20 30 1 2\nhold 10 20 1 2\n";
        match ParameterSchedule::parse(out_of_order) {
            Err(Error::Schedule { line, message }) => {
                assert_eq!(line, 3, "{message}");
            }
            other => panic!("{other:?}"),
        }
        let swapped = "hold 0 10 1 2\nhold 20 30 1 2\nhold 10 20 1 2\n";
        let Err(Error::Schedule { line, .. }) = ParameterSchedule::parse(swapped) else { panic!() };
        assert_eq!(line, 2);
        let overlap = "hold 0 10 1 2\nhold 5 20 1 2\n";
        let Err(Error::Schedule { line, .. }) = ParameterSchedule::parse(overlap) else { panic!() };
        assert_eq!(line, 2);
        for bad in ["hold 0 10 1\n", "linear 0 1 1 2 3\n", "ramp 0 1 1 2\n", "hold 0 x 1 2\n",
                    "hold 1 2 1 1\n", "hold 0 0 1 1\n", "hold 0 5 nan 1\n"] {
            let Err(Error::Schedule { line, .. }) = ParameterSchedule::parse(bad) else {
                panic!("{bad:?} accepted")
            };
            assert_eq!(line, 1);
        }
    }

    #[test]
    fn kinds() {
        let p = XyParams { gamma: 1.1, lambda: 2.0 };
        let q = XyParams { gamma: 10.0, lambda: 0.9 };
        assert_eq!(ParameterSchedule::constant(p, 5.0).unwrap().kind(), ScheduleKind::Constant);
        let split = ParameterSchedule::new(vec![Segment::hold(0.0, 1.0, p), Segment::hold(1.0, 2.0, p)]);
        assert_eq!(split.unwrap().kind(), ScheduleKind::Constant);
        let r = ParameterSchedule::linear_ramp(p, q, 10.0, 20.0, 30.0).unwrap();
        assert_eq!(r.kind(), ScheduleKind::Ramp);
        assert_eq!(r.segments().len(), 3);
        assert!(r.quench_parts().is_none());
    }

    #[test]
    fn params_and_averages() {
        let p = XyParams { gamma: 1.0, lambda: 2.0 };
        let q = XyParams { gamma: 3.0, lambda: 0.0 };
        let r = ParameterSchedule::linear_ramp(p, q, 10.0, 20.0, 30.0).unwrap();
        assert_eq!(r.params_at(5.0), p);
        assert_eq!(r.params_at(15.0), XyParams { gamma: 2.0, lambda: 1.0 });
        assert_eq!(r.params_at(25.0), q);
        assert_eq!(r.params_at(99.0), q);
        assert_eq!(r.average_params(0.0), p);
        assert_eq!(r.average_params(10.0), p);
        // int_0^20 gamma = 10 + 20 = 30
        let a = r.average_params(20.0);
        assert!((a.gamma - 1.5).abs() < 1e-15 && (a.lambda - 1.5).abs() < 1e-15);
        let a = r.average_params(40.0);
        assert!((a.gamma - (10.0 + 20.0 + 60.0) / 40.0).abs() < 1e-14);

        let quench = ParameterSchedule::parse(QUENCH_FILE).unwrap();
        assert_eq!(quench.params_at(20.0).gamma, 0.1);
        assert_eq!(quench.params_at(19.999).gamma, 0.9);
    }

    #[test]
    fn substeps_cover_interval() {
        let p = XyParams { gamma: 1.0, lambda: 2.0 };
        let q = XyParams { gamma: 3.0, lambda: 0.0 };
        let r = ParameterSchedule::linear_ramp(p, q, 10.0, 20.0, 30.0).unwrap();
        let steps = r.substeps(8.0, 12.0, 0.5);
        let total: f64 = steps.iter().map(|s| s.0).sum();
        assert!((total - 4.0).abs() < 1e-12);
        assert_eq!(steps.len(), 1 + 4);
        assert_eq!(steps[0], (2.0, p));
        assert!((steps[1].1.gamma - (1.0 + 2.0 * 0.25 / 10.0)).abs() < 1e-14);
        assert_eq!(r.min_segment_duration(), 10.0);
    }

    fn arb_schedule() -> impl Strategy<Value = ParameterSchedule> {
        prop::collection::vec(
            (0.01f64..50.0, any::<bool>(), -20.0f64..20.0, -20.0f64..20.0, -20.0f64..20.0, -20.0f64..20.0),
            1..6,
        )
        .prop_map(|raw| {
            let mut t = 0.0;
            let segs = raw
                .into_iter()
                .map(|(len, lin, g0, l0, g1, l1)| {
                    let a = XyParams { gamma: g0, lambda: l0 };
                    let s = if lin {
                        Segment::linear(t, t + len, a, XyParams { gamma: g1, lambda: l1 })
                    } else {
                        Segment::hold(t, t + len, a)
                    };
                    t += len;
                    s
                })
                .collect();
            ParameterSchedule::new(segs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(s in arb_schedule()) {
            let text = s.to_text();
            let back = ParameterSchedule::parse(&text).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}

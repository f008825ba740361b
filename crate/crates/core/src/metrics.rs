//! Verification error rates: ROC/DET operating points, EER and FRR at a
//! fixed FAR.
//!
//! Decision rule: a pair is accepted iff `score >= threshold`. So
//! `FAR(t) = #{impostor >= t} / impostor_n` and
//! `FRR(t) = #{genuine < t} / genuine_n`. Rates are exact integer counts
//! divided once.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::format_sig;
use crate::Scalar;

/// One threshold with its error counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint<T> {
    pub threshold: T,
    /// Impostor scores `>= threshold`.
    pub false_accepts: usize,
    /// Genuine scores `< threshold`.
    pub false_rejects: usize,
    pub far: f64,
    pub frr: f64,
}

/// Operating points at every distinct observed score, bracketed by `-inf`
/// (FAR 1, FRR 0) and `+inf` (FAR 0, FRR 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<T> {
    points: Vec<OperatingPoint<T>>,
    genuine_n: usize,
    impostor_n: usize,
}

impl<T: Scalar> RocCurve<T> {
    pub fn points(&self) -> &[OperatingPoint<T>] {
        &self.points
    }

    pub fn genuine_n(&self) -> usize {
        self.genuine_n
    }

    pub fn impostor_n(&self) -> usize {
        self.impostor_n
    }

    fn point(&self, threshold: T, fa: usize, fr: usize) -> OperatingPoint<T> {
        OperatingPoint {
            threshold,
            false_accepts: fa,
            false_rejects: fr,
            far: fa as f64 / self.impostor_n as f64,
            frr: fr as f64 / self.genuine_n as f64,
        }
    }

    /// Sign of `FAR - FRR` at point `i`, from exact counts.
    fn balance(&self, i: usize) -> std::cmp::Ordering {
        let p = &self.points[i];
        let lhs = p.false_accepts as u128 * self.genuine_n as u128;
        let rhs = p.false_rejects as u128 * self.impostor_n as u128;
        lhs.cmp(&rhs)
    }
}

fn sorted_scores<T: Scalar>(scores: &[T], what: &str) -> Result<Vec<T>> {
    if scores.is_empty() {
        return Err(Error::Protocol(format!("no {what} scores")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("{what} scores")));
    }
    // + 0 folds -0 into +0 so equal scores sort together
    let mut v: Vec<T> = scores.iter().map(|&s| s + T::zero()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(v)
}

/// Builds the operating-point curve.
pub fn roc<T: Scalar>(genuine: &[T], impostor: &[T]) -> Result<RocCurve<T>> {
    let g = sorted_scores(genuine, "genuine")?;
    let imp = sorted_scores(impostor, "impostor")?;
    let mut curve = RocCurve {
        points: Vec::with_capacity(g.len() + imp.len() + 2),
        genuine_n: g.len(),
        impostor_n: imp.len(),
    };
    curve.points.push(curve.point(T::neg_infinity(), imp.len(), 0));
    // gi / ii = number of genuine / impostor scores strictly below the
    // current threshold
    let (mut gi, mut ii) = (0usize, 0usize);
    while gi < g.len() || ii < imp.len() {
        let t = match (g.get(gi), imp.get(ii)) {
            (Some(&a), Some(&b)) => if a < b { a } else { b },
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        curve.points.push(curve.point(t, imp.len() - ii, gi));
        while gi < g.len() && g[gi] == t {
            gi += 1;
        }
        while ii < imp.len() && imp[ii] == t {
            ii += 1;
        }
    }
    curve.points.push(curve.point(T::infinity(), 0, g.len()));
    Ok(curve)
}

/// Equal error rate and the threshold where it occurs.
///
/// The lowest threshold with `FAR == FRR` (exact count comparison) wins.
/// Otherwise FAR and FRR are interpolated linearly between the two adjacent
/// operating points where `FAR - FRR` changes sign; the threshold is
/// interpolated the same way, or taken from the finite endpoint when the
/// other one is a sentinel.
pub fn eer<T: Scalar>(curve: &RocCurve<T>) -> (f64, T) {
    use std::cmp::Ordering::*;
    let pts = curve.points();
    if let Some(i) = (0..pts.len()).find(|&i| curve.balance(i) == Equal) {
        return (pts[i].far, pts[i].threshold);
    }
    let i = (0..pts.len() - 1)
        .find(|&i| curve.balance(i) == Greater && curve.balance(i + 1) == Less)
        .expect("sentinels bracket a sign change");
    let (p, q) = (&pts[i], &pts[i + 1]);
    let dp = p.far - p.frr;
    let dq = q.far - q.frr;
    let alpha = dp / (dp - dq);
    let rate = p.far + alpha * (q.far - p.far);
    let threshold = match (p.threshold.is_finite(), q.threshold.is_finite()) {
        (true, true) => p.threshold + T::from_f64_lossy(alpha) * (q.threshold - p.threshold),
        (true, false) => p.threshold,
        _ => q.threshold,
    };
    (rate, threshold)
}

/// FRR at the lowest threshold whose FAR does not exceed the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrrAtFar<T> {
    pub target: f64,
    pub frr: f64,
    /// Achieved FAR, `<= target`.
    pub far: f64,
    pub threshold: T,
    pub false_rejects: usize,
    pub false_accepts: usize,
}

pub fn frr_at_far<T: Scalar>(curve: &RocCurve<T>, target: f64) -> Result<FrrAtFar<T>> {
    check_target(target)?;
    let p = curve
        .points()
        .iter()
        .find(|p| p.far <= target)
        .expect("+inf sentinel has FAR 0");
    Ok(FrrAtFar {
        target,
        frr: p.frr,
        far: p.far,
        threshold: p.threshold,
        false_rejects: p.false_rejects,
        false_accepts: p.false_accepts,
    })
}

pub fn check_target(target: f64) -> Result<()> {
    if target > 0.0 && target < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("FAR target {target} outside (0, 1)")))
    }
}

/// Scalar results of one evaluation, thresholds widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub eer: f64,
    pub eer_threshold: f64,
    pub frr_at_far: Vec<FrrAtFar<f64>>,
    pub genuine_n: usize,
    pub impostor_n: usize,
}

impl MetricsSummary {
    /// FRR for `target`, if it was evaluated.
    pub fn frr_for(&self, target: f64) -> Option<f64> {
        self.frr_at_far
            .iter()
            .find(|f| f.target == target)
            .map(|f| f.frr)
    }
}

/// Summary plus the full curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport<T = f64> {
    pub summary: MetricsSummary,
    pub curve: RocCurve<T>,
}

/// Computes EER and FRR at every target.
pub fn evaluate<T: Scalar>(genuine: &[T], impostor: &[T], targets: &[f64]) -> Result<MetricsReport<T>> {
    for &t in targets {
        check_target(t)?;
    }
    let curve = roc(genuine, impostor)?;
    let (rate, thr) = eer(&curve);
    let frr_at_far = targets
        .iter()
        .map(|&t| {
            frr_at_far(&curve, t).map(|f| FrrAtFar {
                target: f.target,
                frr: f.frr,
                far: f.far,
                threshold: f.threshold.to_f64_lossless(),
                false_rejects: f.false_rejects,
                false_accepts: f.false_accepts,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        summary: MetricsSummary {
            eer: rate,
            eer_threshold: thr.to_f64_lossless(),
            frr_at_far,
            genuine_n: curve.genuine_n(),
            impostor_n: curve.impostor_n(),
        },
        curve,
    })
}

/// `threshold,far,frr` rows with 9 significant digits.
pub fn write_det_csv<T: Scalar>(curve: &RocCurve<T>) -> String {
    let mut out = String::from("threshold,far,frr\n");
    for p in curve.points() {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_sig(p.threshold.to_f64_lossless(), 9),
            format_sig(p.far, 9),
            format_sig(p.frr, 9)
        );
    }
    out
}

/// Percent label of a FAR target: `0.001` -> `"0.1"`.
pub fn far_percent_label(target: f64) -> String {
    let pct = (target * 100.0 * 1e12).round() / 1e12;
    format!("{pct}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_sets() {
        let c = roc(&[0.9, 0.8], &[0.2, 0.1]).unwrap();
        assert!(c.points().iter().any(|p| p.far == 0.0 && p.frr == 0.0));
        assert_eq!(eer(&c).0, 0.0);
    }

    #[test]
    fn worked_example() {
        let c = roc(&[0.9, 0.7, 0.6], &[0.65, 0.3, 0.2]).unwrap();
        let p = c.points().iter().find(|p| p.threshold == 0.65).unwrap();
        assert_eq!((p.far, p.frr), (1.0 / 3.0, 1.0 / 3.0));
        assert_eq!(eer(&c), (1.0 / 3.0, 0.65));
        let f = frr_at_far(&c, 0.001).unwrap();
        assert_eq!(f.threshold, 0.7);
        assert_eq!(f.frr, 1.0 / 3.0);
        assert_eq!(f.far, 0.0);
    }

    #[test]
    fn degenerate_all_equal() {
        let c = roc(&[0.5, 0.5], &[0.5, 0.5, 0.5]).unwrap();
        let pts: Vec<(f64, f64)> = c.points().iter().map(|p| (p.far, p.frr)).collect();
        assert_eq!(pts, vec![(1.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let (e, t) = eer(&c);
        assert_eq!(e, 0.5);
        assert_eq!(t, 0.5);
    }

    #[test]
    fn crossing_next_to_sentinel() {
        // at 0.9: FAR 1, FRR 1/2; at +inf: FAR 0, FRR 1
        let c = roc(&[0.1, 0.9], &[0.9]).unwrap();
        let (e, t) = eer(&c);
        assert!((e - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t, 0.9);
    }

    #[test]
    fn identical_multisets() {
        let s: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let (e, _) = eer(&roc(&s, &s).unwrap());
        assert!((e - 0.5).abs() <= 1.0 / 200.0);
    }

    #[test]
    fn permissive_target() {
        let genuine = [0.8, 0.9];
        let impostor: Vec<f64> = (0..1000).map(|i| i as f64 / 2000.0).collect();
        let c = roc(&genuine, &impostor).unwrap();
        assert_eq!(frr_at_far(&c, 0.999_999).unwrap().frr, 0.0);
        assert!(frr_at_far(&c, 0.0).is_err());
        assert!(frr_at_far(&c, 1.0).is_err());
    }

    #[test]
    fn curve_invariants() {
        let c = roc(&[0.3f32, 0.7, 0.7, 0.9], &[0.1, 0.3, 0.5, 0.8]).unwrap();
        let pts = c.points();
        assert_eq!((pts[0].far, pts[0].frr), (1.0, 0.0));
        let last = pts.last().unwrap();
        assert_eq!((last.far, last.frr), (0.0, 1.0));
        for w in pts.windows(2) {
            assert!(w[0].threshold < w[1].threshold);
            assert!(w[0].far >= w[1].far);
            assert!(w[0].frr <= w[1].frr);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(roc::<f64>(&[], &[0.1]), Err(Error::Protocol(_))));
        assert!(matches!(roc(&[0.1], &[f64::NAN]), Err(Error::NonFinite(_))));
        assert!(evaluate(&[0.5], &[0.1], &[1.5]).is_err());
    }

    #[test]
    fn negative_zero_ties() {
        let c = roc(&[-0.0f64], &[0.0]).unwrap();
        assert_eq!(c.points().len(), 3);
        assert_eq!(eer(&c).0, 0.5);
    }

    #[test]
    fn det_csv_and_labels() {
        let c = roc(&[0.9], &[0.1]).unwrap();
        assert_eq!(
            write_det_csv(&c),
            "threshold,far,frr\n-inf,1.00000000,0.00000000\n0.100000000,1.00000000,0.00000000\n\
             0.900000000,0.00000000,0.00000000\ninf,0.00000000,1.00000000\n"
        );
        assert_eq!(far_percent_label(0.001), "0.1");
        assert_eq!(far_percent_label(0.0001), "0.01");
    }
}

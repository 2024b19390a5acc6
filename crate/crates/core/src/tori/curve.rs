//! Closed section curves as truncated Fourier series in the angle around
//! their centroid.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("need at least {needed} points for {modes} modes, got {got}")]
    TooFewPoints { needed: usize, got: usize, modes: usize },
    #[error("points do not form a simple closed curve: {0}")]
    NotSimple(String),
    #[error("curve reaches r = {0} <= 0")]
    NonPositiveRadius(f64),
    #[error("least-squares fit failed: {0}")]
    Fit(String),
}

/// Samples used for dense scans of a curve.
pub const DENSE_SAMPLES: usize = 1024;

/// Largest allowed angular gap between consecutive ordered points.
pub const MAX_GAP: f64 = PI / 4.0;

/// `phi -> (r(phi), z(phi))`, where `phi` is the angle around `center`
/// after dividing offsets by `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCurve {
    pub center: [f64; 2],
    pub scale: [f64; 2],
    pub modes: usize,
    /// `[a0, a1, b1, ..., aM, bM]` for `r`.
    pub r_coef: Vec<f64>,
    /// Same layout for `z`.
    pub z_coef: Vec<f64>,
    /// Largest distance from the fitted points to the fit.
    pub fit_residual: f64,
    /// Largest distance from the image of the curve to the curve, once
    /// checked against a map.
    pub invariance_residual: Option<f64>,
    /// Mean angle advance per map iterate of the generating orbit.
    pub rotation: Option<f64>,
}

fn basis_into(phi: f64, modes: usize, out: &mut [f64]) {
    out[0] = 1.0;
    let (s1, c1) = phi.sin_cos();
    let (mut s, mut c) = (0.0, 1.0);
    for k in 1..=modes {
        let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
        s = sn;
        c = cn;
        out[2 * k - 1] = c;
        out[2 * k] = s;
    }
}

fn dbasis_into(phi: f64, modes: usize, out: &mut [f64]) {
    out[0] = 0.0;
    let (s1, c1) = phi.sin_cos();
    let (mut s, mut c) = (0.0, 1.0);
    for k in 1..=modes {
        let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
        s = sn;
        c = cn;
        out[2 * k - 1] = -(k as f64) * s;
        out[2 * k] = k as f64 * c;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

impl InvariantCurve {
    /// The degenerate curve that stays at `p`.
    pub fn constant(p: [f64; 2], modes: usize) -> Self {
        let mut r_coef = vec![0.0; 2 * modes + 1];
        let mut z_coef = r_coef.clone();
        r_coef[0] = p[0];
        z_coef[0] = p[1];
        InvariantCurve {
            center: p,
            scale: [1.0, 1.0],
            modes,
            r_coef,
            z_coef,
            fit_residual: 0.0,
            invariance_residual: None,
            rotation: None,
        }
    }

    /// Fits `modes` Fourier modes through points that circle their centroid.
    pub fn fit(points: &[[f64; 2]], modes: usize) -> Result<Self, CurveError> {
        let needed = 2 * modes + 1;
        if points.len() < needed {
            return Err(CurveError::TooFewPoints {
                needed,
                got: points.len(),
                modes,
            });
        }
        let n = points.len() as f64;
        let center = [
            points.iter().map(|p| p[0]).sum::<f64>() / n,
            points.iter().map(|p| p[1]).sum::<f64>() / n,
        ];
        let half_extent = |k: usize| {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            0.5 * (hi - lo)
        };
        let scale = [half_extent(0), half_extent(1)];
        if !(scale[0] > 1e-14 && scale[1] > 1e-14) {
            return Err(CurveError::NotSimple("points are collinear or coincide".into()));
        }
        let angle = |p: &[f64; 2]| ((p[1] - center[1]) / scale[1]).atan2((p[0] - center[0]) / scale[0]);
        let mut ordered: Vec<(f64, [f64; 2])> = points.iter().map(|p| (angle(p), *p)).collect();
        ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut max_gap = ordered[0].0 + TAU - ordered[ordered.len() - 1].0;
        for w in ordered.windows(2) {
            let gap = w[1].0 - w[0].0;
            if gap <= 1e-13 {
                return Err(CurveError::NotSimple(format!(
                    "two points share the angle {:.6}",
                    w[0].0
                )));
            }
            max_gap = max_gap.max(gap);
        }
        if max_gap >= MAX_GAP {
            return Err(CurveError::NotSimple(format!(
                "angular gap {max_gap:.3} rad exceeds {MAX_GAP:.3}"
            )));
        }
        let m = ordered.len();
        let mut a = DMatrix::<f64>::zeros(m, needed);
        let mut b = DMatrix::<f64>::zeros(m, 2);
        let mut row = vec![0.0; needed];
        for (i, (phi, p)) in ordered.iter().enumerate() {
            basis_into(*phi, modes, &mut row);
            for (j, v) in row.iter().enumerate() {
                a[(i, j)] = *v;
            }
            b[(i, 0)] = p[0];
            b[(i, 1)] = p[1];
        }
        let sol = a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-13)
            .map_err(|e| CurveError::Fit(e.to_string()))?;
        let r_coef: Vec<f64> = sol.column(0).iter().copied().collect();
        let z_coef: Vec<f64> = sol.column(1).iter().copied().collect();
        let resid = &a * &sol - &b;
        let fit_residual = (0..m)
            .map(|i| resid[(i, 0)].hypot(resid[(i, 1)]))
            .fold(0.0, f64::max);
        let curve = InvariantCurve {
            center,
            scale,
            modes,
            r_coef,
            z_coef,
            fit_residual,
            invariance_residual: None,
            rotation: None,
        };
        curve.check_star_shaped()?;
        Ok(curve)
    }

    /// The fitted curve must wind once around the centre with strictly
    /// increasing angle.
    fn check_star_shaped(&self) -> Result<(), CurveError> {
        let mut prev = self.normalized_angle(&self.point(0.0));
        let mut total = 0.0;
        for i in 1..=DENSE_SAMPLES {
            let phi = TAU * i as f64 / DENSE_SAMPLES as f64;
            let a = self.normalized_angle(&self.point(phi));
            let step = wrap(a - prev);
            if step <= 0.0 {
                return Err(CurveError::NotSimple(format!(
                    "fitted curve turns back near phi = {phi:.4}"
                )));
            }
            total += step;
            prev = a;
        }
        if (total - TAU).abs() > 1e-6 {
            return Err(CurveError::NotSimple(format!("winding angle {total:.6}")));
        }
        Ok(())
    }

    pub fn normalized(&self, p: &[f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.center[0]) / self.scale[0],
            (p[1] - self.center[1]) / self.scale[1],
        ]
    }

    pub fn normalized_angle(&self, p: &[f64; 2]) -> f64 {
        let q = self.normalized(p);
        q[1].atan2(q[0])
    }

    pub fn point(&self, phi: f64) -> [f64; 2] {
        let mut basis = vec![0.0; 2 * self.modes + 1];
        basis_into(phi, self.modes, &mut basis);
        [dot(&basis, &self.r_coef), dot(&basis, &self.z_coef)]
    }

    pub fn derivative(&self, phi: f64) -> [f64; 2] {
        let mut basis = vec![0.0; 2 * self.modes + 1];
        dbasis_into(phi, self.modes, &mut basis);
        [dot(&basis, &self.r_coef), dot(&basis, &self.z_coef)]
    }

    /// `n` points at equally spaced parameters.
    pub fn sample(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| self.point(TAU * i as f64 / n as f64))
            .collect()
    }

    /// `(min r, max r, min z, max z)` over a dense sample.
    pub fn bounding_box(&self) -> [f64; 4] {
        let pts = self.sample(DENSE_SAMPLES);
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in pts {
            bb[0] = bb[0].min(p[0]);
            bb[1] = bb[1].max(p[0]);
            bb[2] = bb[2].min(p[1]);
            bb[3] = bb[3].max(p[1]);
        }
        bb
    }

    pub fn min_radius(&self) -> f64 {
        self.bounding_box()[0]
    }

    /// Parameter of the closest curve point and its distance: a dense scan
    /// followed by golden-section refinement.
    pub fn closest(&self, p: &[f64; 2]) -> (f64, f64) {
        self.closest_with(&self.sample(DENSE_SAMPLES), p)
    }

    fn closest_with(&self, table: &[[f64; 2]], p: &[f64; 2]) -> (f64, f64) {
        let d2 = |q: &[f64; 2]| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        let n = table.len();
        let (k, _) = table
            .iter()
            .enumerate()
            .map(|(i, q)| (i, d2(q)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let h = TAU / n as f64;
        let (mut a, mut b) = (TAU * k as f64 / n as f64 - h, TAU * k as f64 / n as f64 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |phi: f64| d2(&self.point(phi));
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if (b - a).abs() < 1e-15 {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        let phi = 0.5 * (a + b);
        (phi.rem_euclid(TAU), f(phi).sqrt())
    }

    pub fn distance(&self, p: &[f64; 2]) -> f64 {
        self.closest(p).1
    }

    /// Unit tangent at `phi` in normalized coordinates.
    pub fn unit_tangent_normalized(&self, phi: f64) -> [f64; 2] {
        let d = self.derivative(phi);
        let t = [d[0] / self.scale[0], d[1] / self.scale[1]];
        let len = t[0].hypot(t[1]);
        [t[0] / len, t[1] / len]
    }

    /// CSV rows `phi,r,z` at `n` equally spaced parameters.
    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("phi,r,z\n");
        for i in 0..n {
            let phi = TAU * i as f64 / n as f64;
            let p = self.point(phi);
            out.push_str(&format!("{phi:.17e},{:.17e},{:.17e}\n", p[0], p[1]));
        }
        out
    }
}

/// Symmetric Hausdorff distance with [`DENSE_SAMPLES`] points per curve and
/// refined closest points.
pub fn hausdorff(a: &InvariantCurve, b: &InvariantCurve) -> f64 {
    let one_sided = |x: &InvariantCurve, y: &InvariantCurve| {
        let table = y.sample(DENSE_SAMPLES);
        x.sample(DENSE_SAMPLES)
            .iter()
            .map(|p| y.closest_with(&table, p).1)
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(cx: f64, radius: f64, n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let t = TAU * (i as f64 + 0.3) / n as f64;
                [cx + radius * t.cos(), radius * t.sin()]
            })
            .collect()
    }

    #[test]
    fn circle_fits_exactly() {
        let c = InvariantCurve::fit(&circle(3.0, 1.0, 100), 8).unwrap();
        assert!(c.fit_residual < 1e-12);
        for phi in [0.0, 1.0, 2.5, 4.0] {
            let p = c.point(phi);
            assert!(((p[0] - 3.0).hypot(p[1]) - 1.0).abs() < 1e-12);
        }
        assert!((c.distance(&[5.0, 0.0]) - 1.0).abs() < 1e-12);
        let bb = c.bounding_box();
        assert!((bb[0] - 2.0).abs() < 1e-4 && (bb[3] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn hausdorff_of_circles() {
        let a = InvariantCurve::fit(&circle(3.0, 1.0, 200), 4).unwrap();
        let b = InvariantCurve::fit(&circle(3.0, 1.1, 200), 4).unwrap();
        assert!(hausdorff(&a, &a) < 1e-10);
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-4);
        assert!((hausdorff(&a, &b) - hausdorff(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_point_sets() {
        assert!(matches!(
            InvariantCurve::fit(&circle(3.0, 1.0, 10), 8),
            Err(CurveError::TooFewPoints { .. })
        ));
        let arc: Vec<[f64; 2]> = circle(3.0, 1.0, 400).into_iter().filter(|p| p[1] > 0.0).collect();
        assert!(matches!(InvariantCurve::fit(&arc, 8), Err(CurveError::NotSimple(_))));
        let same = vec![[1.0, 1.0]; 40];
        assert!(matches!(InvariantCurve::fit(&same, 8), Err(CurveError::NotSimple(_))));
    }

    #[test]
    fn tangent_is_unit_and_tangential() {
        let c = InvariantCurve::fit(&circle(3.0, 1.0, 100), 8).unwrap();
        for phi in [0.2, 1.9, 3.3] {
            let t = c.unit_tangent_normalized(phi);
            assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-12);
            let q = c.normalized(&c.point(phi));
            assert!((t[0] * q[0] + t[1] * q[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_dump() {
        let c = InvariantCurve::fit(&circle(3.0, 1.0, 100), 2).unwrap();
        let text = c.to_csv(8);
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("phi,r,z\n0.0"));
    }
}

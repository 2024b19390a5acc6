//! Invariant tori of lifted fields, seen as invariant closed curves of a
//! section map in the `(r, z)` half-plane.
//!
//! The central object is the `2 pi` stroboscopic map of the cylindrical
//! reduction `dr/dtheta = r'/theta'`, `dz/dtheta = z'/theta'`. An attracting
//! invariant curve is found by iterating the map, ordering the orbit by angle
//! and fitting a Fourier curve; repelling curves use the backward map.

pub mod curve;
pub mod svg;

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use curve::{hausdorff, CurveError, InvariantCurve};

use crate::cycles::{LimitCycle, Stability};
use crate::doubling::{octant_chart_inverse, octant_time_orientation, DoublingError, Octant};
use crate::odeint::{find_crossings, solve_final, IntegratorConfig, OdeError, OdeRhs};
use crate::vfields::{NumericField, SpatialField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToriError {
    #[error("angular speed degenerates: {0}")]
    Degenerate(String),
    #[error("orbit left the guard box at iterate {iterate}: {point:?}")]
    Escaped { iterate: usize, point: [f64; 2] },
    #[error("no simple closed curve: {0}")]
    Inconclusive(String),
    #[error("invariance residual {residual:e} exceeds {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("transverse rate {rate} within {margin} of 1: not certified normally hyperbolic")]
    NotHyperbolic { rate: f64, margin: f64 },
    #[error("section map has no return: {0}")]
    NoReturn(String),
    #[error("perturbation parameter must be positive, got {0}")]
    BadEps(f64),
    #[error("cycle sample has u = {0} <= 0")]
    NonPositiveU(f64),
    #[error("expected a 3-dimensional field, found dimension {0}")]
    Dimension(usize),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Doubling(#[from] DoublingError),
    #[error("integration failed: {0}")]
    Integration(OdeError),
}

impl From<OdeError> for ToriError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::Rhs { msg, .. } => ToriError::Degenerate(msg),
            OdeError::NotEnoughCrossings { .. } => ToriError::NoReturn(e.to_string()),
            other => ToriError::Integration(other),
        }
    }
}

/// Coarse classification for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ToriErrorKind {
    Failed,
    Inconclusive,
}

impl ToriError {
    pub fn kind(&self) -> ToriErrorKind {
        match self {
            ToriError::Inconclusive(_) | ToriError::Curve(CurveError::NotSimple(_)) => {
                ToriErrorKind::Inconclusive
            }
            _ => ToriErrorKind::Failed,
        }
    }
}

/// Time direction of a section map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    /// The direction in which a torus of the given stability attracts.
    pub fn attracting_for(s: Stability) -> Self {
        match s {
            Stability::Attracting => Direction::Forward,
            Stability::Repelling => Direction::Backward,
        }
    }
}

/// A map of the `(r, z)` section to itself.
pub trait SectionMap: Sync {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], ToriError>;
}

/// Minimum angular speed allowed along stroboscopic orbits.
pub const MIN_ANGULAR_SPEED: f64 = 0.5;

struct Cylindrical<'a> {
    field: &'a NumericField,
}

impl OdeRhs for Cylindrical<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, theta: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError> {
        let (r, z) = (y[0], y[1]);
        if !(r > 0.0) {
            return Err(OdeError::Rhs {
                t: theta,
                msg: format!("radius {r} reached the axis"),
            });
        }
        let (s, c) = theta.sin_cos();
        let (x, yy) = (r * c, r * s);
        let mut f = [0.0; 3];
        self.field.eval_into(&[x, yy, z], &mut f);
        let r_dot = (x * f[0] + yy * f[1]) / r;
        let th_dot = (x * f[1] - yy * f[0]) / (r * r);
        if !(th_dot >= MIN_ANGULAR_SPEED) {
            return Err(OdeError::Rhs {
                t: theta,
                msg: format!("theta' = {th_dot} < {MIN_ANGULAR_SPEED} at theta = {theta}"),
            });
        }
        dy[0] = r_dot / th_dot;
        dy[1] = f[2] / th_dot;
        Ok(())
    }
}

fn compile3(f3: &SpatialField, eps: f64) -> Result<NumericField, ToriError> {
    if f3.nspace() != 3 {
        return Err(ToriError::Dimension(f3.nspace()));
    }
    Ok(NumericField::new(f3, eps))
}

/// `(r, z) -> (r, z)` after `theta` advances by `2 pi` (or `-2 pi`).
#[derive(Clone, Debug)]
pub struct StroboscopicMap {
    field: NumericField,
    pub direction: Direction,
    pub config: IntegratorConfig,
}

impl StroboscopicMap {
    pub fn new(f3: &SpatialField, eps: f64, direction: Direction) -> Result<Self, ToriError> {
        Ok(StroboscopicMap {
            field: compile3(f3, eps)?,
            direction,
            config: IntegratorConfig::default(),
        })
    }

    pub fn with_config(mut self, config: IntegratorConfig) -> Self {
        self.config = config;
        self
    }

    pub fn reversed(&self) -> Self {
        StroboscopicMap {
            field: self.field.clone(),
            direction: self.direction.reversed(),
            config: self.config.clone(),
        }
    }
}

impl SectionMap for StroboscopicMap {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], ToriError> {
        let rhs = Cylindrical { field: &self.field };
        let y = solve_final(&rhs, &p, (0.0, self.direction.sign() * TAU), &self.config)?;
        Ok([y[0], y[1]])
    }
}

/// Same map computed in Cartesian coordinates: the first return of the 3D
/// flow to the half-plane `{y = 0, x > 0}` crossed with `y' > 0`.
#[derive(Clone, Debug)]
pub struct CartesianReturnMap {
    field: NumericField,
    pub direction: Direction,
    pub config: IntegratorConfig,
    pub t_max: f64,
}

impl CartesianReturnMap {
    pub fn new(f3: &SpatialField, eps: f64, direction: Direction) -> Result<Self, ToriError> {
        Ok(CartesianReturnMap {
            field: compile3(f3, eps)?,
            direction,
            config: IntegratorConfig::default(),
            t_max: 8.0 * TAU,
        })
    }

    pub fn with_config(mut self, config: IntegratorConfig) -> Self {
        self.config = config;
        self
    }
}

impl SectionMap for CartesianReturnMap {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], ToriError> {
        let sign = self.direction.sign();
        let c = find_crossings(
            &self.field,
            &[p[0], 0.0, p[1]],
            (0.0, sign * self.t_max),
            &self.config,
            |y: &[f64]| y[1],
            sign as i8,
            1,
        )?;
        let s = &c[0].state;
        Ok([s[0], s[2]])
    }
}

/// Return map of a doubled field inside one octant, written in the section
/// coordinates of the original field.
///
/// The original field is assumed translated by `shift`, so its section is
/// the plane `xi_y = shift_y` crossed with increasing `xi_y`, and a section
/// point `(r, z)` sits at `xi = (r + shift_x, shift_y, z + shift_z)`. The
/// doubled orbit starts at the octant preimage of `xi` and runs in the time
/// direction that follows the original flow in `direction`.
#[derive(Clone, Debug)]
pub struct OctantReturnMap {
    field: NumericField,
    pub octant: Octant,
    pub shift: [f64; 3],
    /// Direction with respect to the original field's time.
    pub direction: Direction,
    pub config: IntegratorConfig,
    pub t_max: f64,
}

impl OctantReturnMap {
    pub fn new(
        x1: &SpatialField,
        octant: Octant,
        shift: [f64; 3],
        direction: Direction,
    ) -> Result<Self, ToriError> {
        if octant.dim() != 3 {
            return Err(ToriError::Dimension(octant.dim()));
        }
        Ok(OctantReturnMap {
            field: compile3(x1, 0.0)?,
            octant,
            shift,
            direction,
            config: IntegratorConfig::default(),
            t_max: 200.0,
        })
    }

    pub fn reversed(&self) -> Self {
        OctantReturnMap {
            direction: self.direction.reversed(),
            ..self.clone()
        }
    }

    /// Sign of the doubled field's time along the integration.
    pub fn time_sign(&self) -> f64 {
        octant_time_orientation(&self.octant) as f64 * self.direction.sign()
    }

    pub fn to_octant(&self, p: [f64; 2]) -> Result<Vec<f64>, ToriError> {
        let xi = [p[0] + self.shift[0], self.shift[1], p[1] + self.shift[2]];
        Ok(octant_chart_inverse(&self.octant, &xi)?)
    }
}

impl SectionMap for OctantReturnMap {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], ToriError> {
        let x = self.to_octant(p)?;
        let sy = self.octant.signs()[1] as f64;
        let level = sy * (self.shift[1] + 1.0).sqrt();
        let event_dir = (sy * self.direction.sign()) as i8;
        let c = find_crossings(
            &self.field,
            &x,
            (0.0, self.time_sign() * self.t_max),
            &self.config,
            |y: &[f64]| y[1] - level,
            event_dir,
            1,
        )?;
        let s = &c[0].state;
        Ok([s[0] * s[0] - 1.0 - self.shift[0], s[2] * s[2] - 1.0 - self.shift[2]])
    }
}

/// Iteration box; leaving it means no attractor near the seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GuardBox {
    pub r: [f64; 2],
    pub z: [f64; 2],
}

impl GuardBox {
    /// 1.5 times the curve's bounding box about its centre, grown by 0.5.
    /// The radial lower edge never goes below zero.
    pub fn around(c: &InvariantCurve) -> Self {
        let bb = c.bounding_box();
        let grow = |lo: f64, hi: f64| {
            let (mid, half) = (0.5 * (lo + hi), 0.75 * (hi - lo));
            [mid - half - 0.5, mid + half + 0.5]
        };
        let r = grow(bb[0], bb[1]);
        GuardBox {
            r: [r[0].max(0.0), r[1]],
            z: grow(bb[2], bb[3]),
        }
    }

    pub fn contains(&self, p: &[f64; 2]) -> bool {
        p[0] > self.r[0] && p[0] < self.r[1] && p[1] > self.z[0] && p[1] < self.z[1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectParams {
    pub transient: usize,
    pub samples: usize,
    pub modes: usize,
    pub residual_tol: f64,
    /// Curve points mapped for the invariance check.
    pub check_points: usize,
    /// Minimum orbit length for the transverse rate.
    pub rate_points: usize,
    /// Finite-difference step in normalized coordinates.
    pub fd_step: f64,
    pub rate_margin: f64,
    pub integrator: IntegratorConfig,
    /// Tighter tolerances used inside finite differences.
    pub fd_integrator: IntegratorConfig,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            transient: 200,
            samples: 400,
            modes: 32,
            residual_tol: 1e-6,
            check_points: 64,
            rate_points: 16,
            fd_step: 1e-6,
            rate_margin: 1e-3,
            integrator: IntegratorConfig::default(),
            fd_integrator: IntegratorConfig::with_tolerances(1e-12, 1e-14),
        }
    }
}

/// A fitted curve together with the orbit it came from.
#[derive(Clone, Debug)]
pub struct Detection {
    pub curve: InvariantCurve,
    pub transient: Vec<[f64; 2]>,
    pub orbit: Vec<[f64; 2]>,
}

/// Iterates `map` from `seed`, fits a curve through the post-transient orbit
/// and checks its invariance.
pub fn detect_on_map(
    map: &dyn SectionMap,
    seed: [f64; 2],
    guard: &GuardBox,
    params: &DetectParams,
) -> Result<Detection, ToriError> {
    let mut p = seed;
    let mut transient = Vec::with_capacity(params.transient);
    let mut orbit = Vec::with_capacity(params.samples);
    for i in 0..params.transient + params.samples {
        p = map.apply(p)?;
        if !guard.contains(&p) {
            return Err(ToriError::Escaped { iterate: i + 1, point: p });
        }
        if i < params.transient {
            transient.push(p);
        } else {
            orbit.push(p);
        }
    }
    let mut curve = InvariantCurve::fit(&orbit, params.modes).map_err(|e| match e {
        CurveError::NotSimple(m) => ToriError::Inconclusive(m),
        other => ToriError::Curve(other),
    })?;
    let min_r = curve.min_radius();
    if !(min_r > 0.0) {
        return Err(CurveError::NonPositiveRadius(min_r).into());
    }
    let mut advance = 0.0;
    for w in orbit.windows(2) {
        let a = curve.normalized_angle(&w[1]) - curve.normalized_angle(&w[0]);
        advance += (a + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    }
    curve.rotation = Some(advance / (orbit.len() - 1) as f64);
    let residual = invariance_residual(map, &curve, params.check_points)?;
    curve.invariance_residual = Some(residual);
    if !(residual <= params.residual_tol) {
        return Err(ToriError::Residual {
            residual,
            tol: params.residual_tol,
        });
    }
    Ok(Detection {
        curve,
        transient,
        orbit,
    })
}

/// Largest distance from the image of `n` curve points to the curve.
pub fn invariance_residual(
    map: &dyn SectionMap,
    curve: &InvariantCurve,
    n: usize,
) -> Result<f64, ToriError> {
    let pts = curve.sample(n);
    let images = pts
        .par_iter()
        .map(|p| map.apply(*p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(images
        .iter()
        .map(|q| curve.distance(q))
        .fold(0.0, f64::max))
}

/// Convenience wrapper: stroboscopic map of `f3` at `eps` in `direction`,
/// guard box around `reference`.
pub fn detect_invariant_curve(
    f3: &SpatialField,
    eps: f64,
    seed: [f64; 2],
    direction: Direction,
    reference: &InvariantCurve,
    params: &DetectParams,
) -> Result<Detection, ToriError> {
    if !(eps > 0.0) {
        return Err(ToriError::BadEps(eps));
    }
    let map = StroboscopicMap::new(f3, eps, direction)?.with_config(params.integrator.clone());
    detect_on_map(&map, seed, &GuardBox::around(reference), params)
}

/// The zero-`eps` limit curve `(sqrt(u), v)` of a planar cycle `(u, v)`.
pub fn predicted_curve(c: &LimitCycle, modes: usize) -> Result<InvariantCurve, ToriError> {
    let mut pts = Vec::with_capacity(c.samples.len());
    for s in &c.samples {
        if !(s.u > 0.0) {
            return Err(ToriError::NonPositiveU(s.u));
        }
        pts.push([s.u.sqrt(), s.v]);
    }
    let first = *pts.first().ok_or(ToriError::Inconclusive("cycle has no samples".into()))?;
    if pts.iter().all(|p| (p[0] - first[0]).abs() <= 1e-14 && (p[1] - first[1]).abs() <= 1e-14) {
        return Ok(InvariantCurve::constant(first, modes));
    }
    Ok(InvariantCurve::fit(&pts, modes)?)
}

/// Transverse contraction of a section map along an invariant curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransverseRate {
    /// Geometric mean per forward iterate.
    pub forward: f64,
    /// Same for the backward map, measured on the same orbit.
    pub backward: f64,
    pub stability: Stability,
    pub points: usize,
}

fn normalized_jacobian(
    map: &dyn SectionMap,
    curve: &InvariantCurve,
    p: [f64; 2],
    h: f64,
) -> Result<[[f64; 2]; 2], ToriError> {
    let s = curve.scale;
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let mut plus = p;
        let mut minus = p;
        plus[k] += h * s[k];
        minus[k] -= h * s[k];
        let (a, b) = (map.apply(plus)?, map.apply(minus)?);
        for i in 0..2 {
            j[i][k] = (a[i] - b[i]) / (2.0 * h * s[i]);
        }
    }
    Ok(j)
}

/// `det J / |J t|` at `p`, with `t` the unit curve tangent.
fn transverse_factor(
    map: &dyn SectionMap,
    curve: &InvariantCurve,
    p: [f64; 2],
    h: f64,
) -> Result<f64, ToriError> {
    let j = normalized_jacobian(map, curve, p, h)?;
    let (phi, _) = curve.closest(&p);
    let t = curve.unit_tangent_normalized(phi);
    let jt = [j[0][0] * t[0] + j[0][1] * t[1], j[1][0] * t[0] + j[1][1] * t[1]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    Ok(det.abs() / jt[0].hypot(jt[1]))
}

fn geometric_mean(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp()
}

/// Transverse rates of `forward` and `backward` (mutually inverse maps)
/// along an orbit on `curve` generated by the map in `attracting`.
pub fn transverse_rate_on(
    forward: &dyn SectionMap,
    backward: &dyn SectionMap,
    curve: &InvariantCurve,
    attracting: Direction,
    params: &DetectParams,
) -> Result<TransverseRate, ToriError> {
    let gen: &dyn SectionMap = match attracting {
        Direction::Forward => forward,
        Direction::Backward => backward,
    };
    let mut orbit = vec![curve.point(0.0)];
    let mut turned = 0.0;
    while orbit.len() <= params.rate_points || turned < TAU {
        if orbit.len() > 5000 {
            break;
        }
        let last = *orbit.last().expect("nonempty");
        let next = gen.apply(last)?;
        let a = curve.normalized_angle(&next) - curve.normalized_angle(&last);
        turned += ((a + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI).abs();
        orbit.push(next);
    }
    let n = orbit.len();
    // The generating map acts on orbit[..n-1]; its inverse on orbit[1..].
    let (fwd_pts, bwd_pts) = match attracting {
        Direction::Forward => (&orbit[..n - 1], &orbit[1..]),
        Direction::Backward => (&orbit[1..], &orbit[..n - 1]),
    };
    let h = params.fd_step;
    let factors = |m: &dyn SectionMap, pts: &[[f64; 2]]| -> Result<Vec<f64>, ToriError> {
        pts.par_iter().map(|p| transverse_factor(m, curve, *p, h)).collect()
    };
    let fwd = geometric_mean(&factors(forward, fwd_pts)?);
    let bwd = geometric_mean(&factors(backward, bwd_pts)?);
    let margin = params.rate_margin;
    let stability = if fwd < 1.0 - margin {
        Stability::Attracting
    } else if fwd > 1.0 + margin {
        Stability::Repelling
    } else {
        return Err(ToriError::NotHyperbolic { rate: fwd, margin });
    };
    Ok(TransverseRate {
        forward: fwd,
        backward: bwd,
        stability,
        points: n - 1,
    })
}

/// Transverse rate of the stroboscopic map of `f3` at `eps`, using
/// finite-difference tolerances from `params`.
pub fn transverse_rate(
    f3: &SpatialField,
    eps: f64,
    curve: &InvariantCurve,
    attracting: Direction,
    params: &DetectParams,
) -> Result<TransverseRate, ToriError> {
    let fwd = StroboscopicMap::new(f3, eps, Direction::Forward)?
        .with_config(params.fd_integrator.clone());
    let bwd = fwd.reversed();
    transverse_rate_on(&fwd, &bwd, curve, attracting, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Certified,
    Failed,
    Inconclusive,
}

/// Outcome of one torus search.
#[derive(Clone, Debug, Serialize)]
pub struct ToriReport {
    pub eps: f64,
    pub status: Status,
    pub found: bool,
    pub curve: Option<InvariantCurve>,
    pub hausdorff_to_predicted: Option<f64>,
    pub transverse_rate: Option<f64>,
    pub stability: Option<Stability>,
    pub expected_stability: Stability,
    pub iterations: usize,
    pub transient: usize,
    pub message: Option<String>,
    #[serde(skip)]
    pub transient_points: Vec<[f64; 2]>,
}

impl ToriReport {
    fn failure(eps: f64, expected: Stability, params: &DetectParams, e: &ToriError) -> Self {
        ToriReport {
            eps,
            status: match e.kind() {
                ToriErrorKind::Inconclusive => Status::Inconclusive,
                ToriErrorKind::Failed => Status::Failed,
            },
            found: false,
            curve: None,
            hausdorff_to_predicted: None,
            transverse_rate: None,
            stability: None,
            expected_stability: expected,
            iterations: params.transient + params.samples,
            transient: params.transient,
            message: Some(e.to_string()),
            transient_points: vec![],
        }
    }

    pub fn certified(&self) -> bool {
        self.status == Status::Certified
    }
}

/// Detects and certifies the torus of `f3` at one `eps` near `predicted`.
/// The torus must carry the stability of the planar cycle.
pub fn tori_report(
    f3: &SpatialField,
    eps: f64,
    predicted: &InvariantCurve,
    expected: Stability,
    params: &DetectParams,
) -> ToriReport {
    let run = || -> Result<ToriReport, ToriError> {
        let dir = Direction::attracting_for(expected);
        let det = detect_invariant_curve(f3, eps, predicted.point(0.0), dir, predicted, params)?;
        let rate = transverse_rate(f3, eps, &det.curve, dir, params)?;
        let dist = hausdorff(&det.curve, predicted);
        let ok = rate.stability == expected;
        Ok(ToriReport {
            eps,
            status: if ok { Status::Certified } else { Status::Failed },
            found: true,
            hausdorff_to_predicted: Some(dist),
            transverse_rate: Some(rate.forward),
            stability: Some(rate.stability),
            expected_stability: expected,
            iterations: params.transient + params.samples,
            transient: params.transient,
            message: (!ok).then(|| format!("stability {} differs from the cycle", rate.stability)),
            curve: Some(det.curve),
            transient_points: det.transient,
        })
    };
    run().unwrap_or_else(|e| ToriReport::failure(eps, expected, params, &e))
}

/// Reports for each `eps` plus a log-log fit of Hausdorff distance against
/// `eps` over the certified runs.
#[derive(Clone, Debug, Serialize)]
pub struct Sweep {
    pub reports: Vec<ToriReport>,
    pub slope: Option<f64>,
    pub correlation: Option<f64>,
}

/// Least-squares slope and correlation of `(x, y)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let r = if syy == 0.0 { 1.0 } else { sxy / (sxx * syy).sqrt() };
    Some((sxy / sxx, r))
}

/// Runs [`tori_report`] for every `eps` concurrently.
pub fn epsilon_sweep(
    f3: &SpatialField,
    cycle: &LimitCycle,
    eps_list: &[f64],
    params: &DetectParams,
) -> Result<Sweep, ToriError> {
    if eps_list.is_empty() {
        return Ok(Sweep {
            reports: vec![],
            slope: None,
            correlation: None,
        });
    }
    let predicted = predicted_curve(cycle, params.modes)?;
    let reports: Vec<ToriReport> = eps_list
        .par_iter()
        .map(|&eps| tori_report(f3, eps, &predicted, cycle.stability, params))
        .collect();
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.certified())
        .filter_map(|r| {
            let d = r.hausdorff_to_predicted?;
            (d > 0.0).then(|| (r.eps.ln(), d.ln()))
        })
        .collect();
    let fit = linear_fit(&pts);
    Ok(Sweep {
        reports,
        slope: fit.map(|f| f.0),
        correlation: fit.map(|f| f.1),
    })
}

/// Torus certification for one octant of a doubled field.
#[derive(Clone, Debug, Serialize)]
pub struct OctantReport {
    pub octant: String,
    /// `+1` when the doubled field's time follows the original.
    pub orientation: i8,
    /// Time direction of the doubled field used to find the curve.
    pub integration: Direction,
    pub status: Status,
    pub found: bool,
    pub invariance_residual: Option<f64>,
    pub hausdorff_to_base: Option<f64>,
    /// Transverse rate of the doubled field's forward return map.
    pub transverse_rate: Option<f64>,
    pub stability: Option<Stability>,
    pub expected_stability: Stability,
    pub message: Option<String>,
}

/// Seeds each octant from the base curve, detects the invariant curve of
/// the doubled field there, and checks stability against the orientation.
///
/// `x1` is the doubled field, `shift` the translation applied to the
/// original field before doubling, `base_curve` the original's section curve
/// in untranslated `(r, z)` coordinates with stability `base`.
pub fn verify_doubled_tori(
    x1: &SpatialField,
    shift: [f64; 3],
    base_curve: &InvariantCurve,
    base: Stability,
    octants: &[Octant],
    params: &DetectParams,
) -> Vec<OctantReport> {
    octants
        .par_iter()
        .map(|oct| octant_report(x1, shift, base_curve, base, oct, params))
        .collect()
}

fn octant_report(
    x1: &SpatialField,
    shift: [f64; 3],
    base_curve: &InvariantCurve,
    base: Stability,
    oct: &Octant,
    params: &DetectParams,
) -> OctantReport {
    let orientation = octant_time_orientation(oct);
    let expected = if orientation > 0 { base } else { base.flipped() };
    let attracting = Direction::attracting_for(base);
    let integration = if orientation as f64 * attracting.sign() > 0.0 {
        Direction::Forward
    } else {
        Direction::Backward
    };
    let mut report = OctantReport {
        octant: oct.to_string(),
        orientation,
        integration,
        status: Status::Failed,
        found: false,
        invariance_residual: None,
        hausdorff_to_base: None,
        transverse_rate: None,
        stability: None,
        expected_stability: expected,
        message: None,
    };
    let run = |report: &mut OctantReport| -> Result<(), ToriError> {
        let mut fwd = OctantReturnMap::new(x1, oct.clone(), shift, Direction::Forward)?;
        fwd.config = params.integrator.clone();
        let bwd = fwd.reversed();
        let gen = match attracting {
            Direction::Forward => &fwd,
            Direction::Backward => &bwd,
        };
        let det = detect_on_map(gen, base_curve.point(0.0), &GuardBox::around(base_curve), params)?;
        report.found = true;
        report.invariance_residual = det.curve.invariance_residual;
        report.hausdorff_to_base = Some(hausdorff(&det.curve, base_curve));
        let mut ffd = fwd.clone();
        ffd.config = params.fd_integrator.clone();
        let bfd = ffd.reversed();
        let rate = transverse_rate_on(&ffd, &bfd, &det.curve, attracting, params)?;
        // Rates above are per return of the original flow's direction; the
        // doubled field's own forward map is the backward one when the
        // orientation is negative.
        let (own_rate, own_stab) = if orientation > 0 {
            (rate.forward, rate.stability)
        } else {
            (rate.backward, rate.stability.flipped())
        };
        report.transverse_rate = Some(own_rate);
        report.stability = Some(own_stab);
        if own_stab == expected {
            report.status = Status::Certified;
        } else {
            report.message = Some(format!("stability {own_stab} differs from expected {expected}"));
        }
        Ok(())
    };
    if let Err(e) = run(&mut report) {
        report.status = match e.kind() {
            ToriErrorKind::Inconclusive => Status::Inconclusive,
            ToriErrorKind::Failed => Status::Failed,
        };
        report.message = Some(e.to_string());
    }
    report
}

//! Adaptive Dormand–Prince 5(4) integration with dense output, section
//! crossings and variational equations.
//!
//! The stepper is the classical DOPRI5 pair with PI step-size control and the
//! free fourth-order continuous extension built from the seven stages of each
//! accepted step. Integration runs forward or backward depending on the sign
//! of `t_end - t_start`.

use std::io::{self, Write};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({steps}) exceeded at t = {t}")]
    MaxSteps { t: f64, steps: usize },
    #[error("non-finite right-hand side at t = {t}")]
    NonFinite { t: f64 },
    #[error("right-hand side failed at t = {t}: {msg}")]
    Rhs { t: f64, msg: String },
    #[error("found {found} of {requested} requested crossings")]
    NotEnoughCrossings { found: usize, requested: usize },
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("state has dimension {found}, system has {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError>;
}

impl<T: OdeRhs + ?Sized> OdeRhs for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError> {
        (**self).eval(t, y, dy)
    }
}

/// Infallible closure right-hand side.
pub struct FnRhs<F> {
    dim: usize,
    f: F,
}

pub fn rhs_fn<F: Fn(f64, &[f64], &mut [f64])>(dim: usize, f: F) -> FnRhs<F> {
    FnRhs { dim, f }
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeRhs for FnRhs<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError> {
        (self.f)(t, y, dy);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(OdeError::Config("tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(OdeError::Config("max_step must be positive".into()));
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> &[f64] {
        &self.rcont[0]
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.rcont[0].len()];
        self.eval_into(t, &mut out);
        out
    }

    /// State at the end of the step (exact step value, not interpolated).
    pub fn end(&self) -> Vec<f64> {
        self.rcont[0]
            .iter()
            .zip(&self.rcont[1])
            .map(|(a, b)| a + b)
            .collect()
    }

    fn contains(&self, t: f64) -> bool {
        let (a, b) = (self.t0.min(self.t1()), self.t0.max(self.t1()));
        t >= a && t <= b
    }
}

enum Flow {
    Continue,
    Stop,
}

struct Stepper<'a, R: OdeRhs + ?Sized> {
    rhs: &'a R,
    cfg: &'a IntegratorConfig,
    t: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 7],
    h: f64,
    dir: f64,
    facold: f64,
    steps: usize,
    rejected_last: bool,
    fixed: bool,
    tmp: Vec<f64>,
}

fn check_finite(t: f64, v: &[f64]) -> Result<(), OdeError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { t })
    }
}

impl<'a, R: OdeRhs + ?Sized> Stepper<'a, R> {
    fn new(
        rhs: &'a R,
        cfg: &'a IntegratorConfig,
        y0: &[f64],
        t0: f64,
        t1: f64,
    ) -> Result<Self, OdeError> {
        cfg.validate()?;
        let n = rhs.dim();
        if y0.len() != n {
            return Err(OdeError::Dimension {
                expected: n,
                found: y0.len(),
            });
        }
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        rhs.eval(t0, y0, &mut k[0])?;
        check_finite(t0, &k[0])?;
        let mut s = Stepper {
            rhs,
            cfg,
            t: t0,
            y: y0.to_vec(),
            k,
            h: 0.0,
            dir,
            facold: 1e-4,
            steps: 0,
            rejected_last: false,
            fixed: false,
            tmp: vec![0.0; n],
        };
        s.h = s.initial_step(t1)?;
        Ok(s)
    }

    fn sk(&self, y0: f64, y1: f64) -> f64 {
        self.cfg.abs_tol + self.cfg.rel_tol * y0.abs().max(y1.abs())
    }

    /// Starting step from the norms of `y`, `f` and a trial Euler step.
    fn initial_step(&mut self, t1: f64) -> Result<f64, OdeError> {
        let n = self.y.len();
        let span = (t1 - self.t).abs();
        if span == 0.0 {
            return Ok(0.0);
        }
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..n {
            let sk = self.sk(self.y[i], self.y[i]);
            dnf += (self.k[0][i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.cfg.max_step).min(span);
        let y1: Vec<f64> = (0..n)
            .map(|i| self.y[i] + self.dir * h * self.k[0][i])
            .collect();
        let mut f1 = vec![0.0; n];
        self.rhs.eval(self.t + self.dir * h, &y1, &mut f1)?;
        let mut der2 = 0.0;
        for i in 0..n {
            let sk = self.sk(self.y[i], self.y[i]);
            der2 += ((f1[i] - self.k[0][i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        Ok(self.dir * (100.0 * h).min(h1).min(self.cfg.max_step).min(span))
    }

    fn stage(&mut self, dst: usize, c: f64, coeffs: &[(usize, f64)]) -> Result<(), OdeError> {
        let h = self.h;
        for i in 0..self.y.len() {
            let mut acc = 0.0;
            for &(j, a) in coeffs {
                acc += a * self.k[j][i];
            }
            self.tmp[i] = self.y[i] + h * acc;
        }
        let t = self.t + c * h;
        self.rhs.eval(t, &self.tmp, &mut self.k[dst])?;
        check_finite(t, &self.k[dst])
    }

    /// Advances one accepted step without passing `t_end`.
    fn step(&mut self, t_end: f64) -> Result<DenseSegment, OdeError> {
        let n = self.y.len();
        let expo1 = 0.2 - BETA * 0.75;
        loop {
            if self.steps >= self.cfg.max_steps && !self.fixed {
                return Err(OdeError::MaxSteps {
                    t: self.t,
                    steps: self.steps,
                });
            }
            let remaining = t_end - self.t;
            if self.dir * (self.h - remaining) > 0.0
                || (remaining - self.h).abs() <= 1e-12 * self.t.abs().max(1.0)
            {
                self.h = remaining;
            }
            if self.h.abs() <= 1e-14 * self.t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow {
                    t: self.t,
                    h: self.h,
                });
            }
            self.steps += 1;
            let h = self.h;
            self.stage(1, C2, &[(0, A21)])?;
            self.stage(2, C3, &[(0, A31), (1, A32)])?;
            self.stage(3, C4, &[(0, A41), (1, A42), (2, A43)])?;
            self.stage(4, C5, &[(0, A51), (1, A52), (2, A53), (3, A54)])?;
            self.stage(5, 1.0, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)])?;
            let y1: Vec<f64> = (0..n)
                .map(|i| {
                    self.y[i]
                        + h * (A71 * self.k[0][i]
                            + A73 * self.k[2][i]
                            + A74 * self.k[3][i]
                            + A75 * self.k[4][i]
                            + A76 * self.k[5][i])
                })
                .collect();
            let t_new = self.t + h;
            self.rhs.eval(t_new, &y1, &mut self.k[6])?;
            check_finite(t_new, &self.k[6])?;
            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                err += (e / self.sk(self.y[i], y1[i])).powi(2);
            }
            let err = (err / n as f64).sqrt();
            let fac11 = err.powf(expo1);
            if err <= 1.0 || self.fixed {
                let fac = (fac11 / self.facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if h_new.abs() > self.cfg.max_step {
                    h_new = self.dir * self.cfg.max_step;
                }
                if self.rejected_last {
                    h_new = self.dir * h_new.abs().min(h.abs());
                }
                self.facold = err.max(1e-4);
                self.rejected_last = false;
                let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
                for i in 0..n {
                    let ydiff = y1[i] - self.y[i];
                    let bspl = h * self.k[0][i] - ydiff;
                    rcont[0][i] = self.y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * self.k[6][i] - bspl;
                    rcont[4][i] = h
                        * (D1 * self.k[0][i]
                            + D3 * self.k[2][i]
                            + D4 * self.k[3][i]
                            + D5 * self.k[4][i]
                            + D6 * self.k[5][i]
                            + D7 * self.k[6][i]);
                }
                let seg = DenseSegment {
                    t0: self.t,
                    h,
                    rcont,
                };
                self.k.swap(0, 6);
                self.y = y1;
                self.t = if (t_new - t_end).abs() <= 1e-12 * t_end.abs().max(1.0) {
                    t_end
                } else {
                    t_new
                };
                self.h = h_new;
                return Ok(seg);
            }
            self.h = h / (fac11 / SAFE).min(1.0 / FAC_MIN);
            self.rejected_last = true;
        }
    }

    fn done(&self, t_end: f64) -> bool {
        self.dir * (t_end - self.t) <= 0.0
    }
}

fn drive<R, F>(
    rhs: &R,
    y0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut on_step: F,
) -> Result<Vec<f64>, OdeError>
where
    R: OdeRhs + ?Sized,
    F: FnMut(&DenseSegment) -> Result<Flow, OdeError>,
{
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(OdeError::Config("time span must be finite".into()));
    }
    let mut st = Stepper::new(rhs, cfg, y0, t0, t1)?;
    while !st.done(t1) {
        let seg = st.step(t1)?;
        if let Flow::Stop = on_step(&seg)? {
            break;
        }
    }
    Ok(st.y)
}

/// Dense solution of an integration run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t_start: f64,
    pub t_end: f64,
    pub dim: usize,
    pub config: IntegratorConfig,
    segments: Vec<DenseSegment>,
    y_end: Vec<f64>,
}

impl Trajectory {
    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    /// Step times including both endpoints.
    pub fn times(&self) -> Vec<f64> {
        let mut t = vec![self.t_start];
        t.extend(self.segments.iter().map(DenseSegment::t1));
        t
    }

    pub fn final_state(&self) -> &[f64] {
        &self.y_end
    }

    /// Interpolated state; `None` outside the integrated span.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        if self.segments.is_empty() {
            return (t == self.t_start).then(|| self.y_end.clone());
        }
        let forward = self.t_end >= self.t_start;
        let idx = self.segments.partition_point(|s| {
            if forward {
                s.t1() < t
            } else {
                s.t1() > t
            }
        });
        let seg = self.segments.get(idx)?;
        seg.contains(t).then(|| seg.eval(t))
    }

    /// Section crossings along the stored solution.
    pub fn crossings<E: Fn(&[f64]) -> f64>(&self, event: E, direction: i8) -> Vec<Crossing> {
        let mut out = Vec::new();
        for seg in &self.segments {
            if let Some(c) = segment_crossing(seg, &event, direction, self.t_start) {
                out.push(c);
            }
        }
        out
    }

    /// CSV rows `t,x1,...,xn` at the step points.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        let mut row = |t: f64, y: &[f64]| -> io::Result<()> {
            let vals: Vec<String> = std::iter::once(t).chain(y.iter().copied()).map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", vals.join(","))
        };
        match self.segments.first() {
            Some(s) => row(s.t0, s.start())?,
            None => row(self.t_start, &self.y_end)?,
        }
        for s in &self.segments {
            row(s.t1(), &s.end())?;
        }
        Ok(())
    }
}

/// Integrates over `t_span`, keeping the dense output of every step.
pub fn integrate<R: OdeRhs + ?Sized>(
    rhs: &R,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory, OdeError> {
    let mut segments = Vec::new();
    let y_end = drive(rhs, x0, t_span.0, t_span.1, cfg, |s| {
        segments.push(s.clone());
        Ok(Flow::Continue)
    })?;
    Ok(Trajectory {
        t_start: t_span.0,
        t_end: t_span.1,
        dim: rhs.dim(),
        config: cfg.clone(),
        segments,
        y_end,
    })
}

/// Integrates over `t_span` and returns only the final state.
pub fn solve_final<R: OdeRhs + ?Sized>(
    rhs: &R,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, OdeError> {
    drive(rhs, x0, t_span.0, t_span.1, cfg, |_| Ok(Flow::Continue))
}

/// Fixed-step fifth-order propagation with `n_steps` equal steps.
pub fn integrate_fixed<R: OdeRhs + ?Sized>(
    rhs: &R,
    x0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
) -> Result<Vec<f64>, OdeError> {
    if n_steps == 0 {
        return Err(OdeError::Config("n_steps must be positive".into()));
    }
    let cfg = IntegratorConfig::default();
    let mut st = Stepper::new(rhs, &cfg, x0, t_span.0, t_span.1)?;
    st.fixed = true;
    let h = (t_span.1 - t_span.0) / n_steps as f64;
    for i in 0..n_steps {
        st.h = h;
        st.step(t_span.0 + (i + 1) as f64 * h)?;
    }
    Ok(st.y)
}

/// The state of the variational system `M' = J(x) M`, `M(0) = I`.
pub struct Variational<'a, R: ?Sized, J> {
    rhs: &'a R,
    jac: J,
    n: usize,
}

impl<'a, R, J> Variational<'a, R, J>
where
    R: OdeRhs + ?Sized,
    J: Fn(&[f64], &mut [f64]),
{
    /// `jac(x, out)` writes the row-major `n x n` Jacobian.
    pub fn new(rhs: &'a R, jac: J) -> Self {
        let n = rhs.dim();
        Variational { rhs, jac, n }
    }

    pub fn initial_state(&self, x0: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = x0.to_vec();
        y.extend((0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }));
        y
    }

    pub fn split(&self, y: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.n;
        (
            y[..n].to_vec(),
            DMatrix::from_row_slice(n, n, &y[n..n + n * n]),
        )
    }
}

impl<R, J> OdeRhs for Variational<'_, R, J>
where
    R: OdeRhs + ?Sized,
    J: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.n + self.n * self.n
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError> {
        let n = self.n;
        self.rhs.eval(t, &y[..n], &mut dy[..n])?;
        let mut j = [0.0; 16];
        let mut heap;
        let jbuf: &mut [f64] = if n * n <= 16 {
            &mut j[..n * n]
        } else {
            heap = vec![0.0; n * n];
            &mut heap
        };
        (self.jac)(&y[..n], jbuf);
        let m = &y[n..];
        let dm = &mut dy[n..];
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += jbuf[r * n + k] * m[k * n + c];
                }
                dm[r * n + c] = acc;
            }
        }
        Ok(())
    }
}

/// Final state and fundamental matrix after integrating over `t_span`.
pub fn integrate_variational<R, J>(
    rhs: &R,
    jac: J,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, DMatrix<f64>), OdeError>
where
    R: OdeRhs + ?Sized,
    J: Fn(&[f64], &mut [f64]),
{
    let var = Variational::new(rhs, jac);
    let y = solve_final(&var, &var.initial_state(x0), t_span, cfg)?;
    Ok(var.split(&y))
}

/// A located section crossing.
#[derive(Clone, Debug, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub state: Vec<f64>,
}

/// Below this `|d event / dt|` a crossing counts as tangential and is skipped.
pub const TANGENCY_THRESHOLD: f64 = 1e-8;
/// Target `|event|` after root polishing.
pub const EVENT_TOL: f64 = 1e-12;

fn sign_change(ga: f64, gb: f64, direction: i8) -> bool {
    let up = ga < 0.0 && gb >= 0.0;
    let down = ga > 0.0 && gb <= 0.0;
    match direction {
        d if d > 0 => up,
        d if d < 0 => down,
        _ => up || down,
    }
}

/// Crossing inside one step, `direction` measured along integration progress.
fn segment_crossing<E: Fn(&[f64]) -> f64>(
    seg: &DenseSegment,
    event: &E,
    direction: i8,
    t_start: f64,
) -> Option<Crossing> {
    let mut buf = vec![0.0; seg.rcont[0].len()];
    let mut g = |t: f64| {
        seg.eval_into(t, &mut buf);
        event(&buf)
    };
    let (mut a, mut b) = (seg.t0, seg.t1());
    let (mut ga, mut gb) = (event(seg.start()), g(b));
    if !sign_change(ga, gb, direction) {
        return None;
    }
    // Illinois regula falsi with bisection safeguard.
    let mut side = 0i8;
    let mut t = b;
    let mut gt = gb;
    for _ in 0..200 {
        if gt.abs() <= EVENT_TOL && t != seg.t0 {
            break;
        }
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !c.is_finite() || (c - a) * (c - b) > 0.0 {
            c = 0.5 * (a + b);
        }
        let gc = g(c);
        t = c;
        gt = gc;
        if (gc < 0.0) == (ga < 0.0) && gc != 0.0 {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            // Interval exhausted: take the better endpoint.
            let (ea, eb) = (g(a), g(b));
            t = if ea.abs() < eb.abs() { a } else { b };
            break;
        }
    }
    // A root exactly at the start of integration is the starting point.
    if (t - t_start).abs() <= 1e-10 * t_start.abs().max(1.0) {
        return None;
    }
    let delta = 1e-4 * seg.h.abs();
    let lo = (t - delta).max(seg.t0.min(seg.t1()));
    let hi = (t + delta).min(seg.t0.max(seg.t1()));
    let slope = if hi > lo { (g(hi) - g(lo)) / (hi - lo) } else { 0.0 };
    if slope.abs() < TANGENCY_THRESHOLD {
        log::warn!("tangential crossing at t = {t}: |dg/dt| = {:e}", slope.abs());
        return None;
    }
    Some(Crossing {
        t,
        state: seg.eval(t),
    })
}

/// Integrates until `count` crossings of `event = 0` in `direction` (+1
/// increasing, -1 decreasing, 0 both, along integration progress) are found.
pub fn find_crossings<R, E>(
    rhs: &R,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    event: E,
    direction: i8,
    count: usize,
) -> Result<Vec<Crossing>, OdeError>
where
    R: OdeRhs + ?Sized,
    E: Fn(&[f64]) -> f64,
{
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    drive(rhs, x0, t_span.0, t_span.1, cfg, |seg| {
        if let Some(c) = segment_crossing(seg, &event, direction, t_span.0) {
            out.push(c);
            if out.len() == count {
                return Ok(Flow::Stop);
            }
        }
        Ok(Flow::Continue)
    })?;
    if out.len() < count {
        return Err(OdeError::NotEnoughCrossings {
            found: out.len(),
            requested: count,
        });
    }
    Ok(out)
}

/// Like [`find_crossings`] for the variational system: the first crossing of
/// the base state, with the fundamental matrix at that time.
pub fn first_crossing_variational<R, J, E>(
    rhs: &R,
    jac: J,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    event: E,
    direction: i8,
) -> Result<(Crossing, DMatrix<f64>), OdeError>
where
    R: OdeRhs + ?Sized,
    J: Fn(&[f64], &mut [f64]),
    E: Fn(&[f64]) -> f64,
{
    let var = Variational::new(rhs, jac);
    let n = rhs.dim();
    let c = find_crossings(
        &var,
        &var.initial_state(x0),
        t_span,
        cfg,
        |y: &[f64]| event(&y[..n]),
        direction,
        1,
    )?
    .remove(0);
    let (x, m) = var.split(&c.state);
    Ok((Crossing { t: c.t, state: x }, m))
}

//! Hyperbolic limit cycles of planar fields via Newton on a Poincaré return
//! map, with Floquet multipliers from the variational equations.

use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::odeint::{
    find_crossings, first_crossing_variational, integrate, IntegratorConfig, OdeError,
};
use crate::vfields::{NumericField, NumericJacobian, PlanarField, Region};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CycleError {
    #[error("orbit from {start:?} does not return to the section within t = {t_max}")]
    NoReturn { start: [f64; 2], t_max: f64 },
    #[error("section is tangent to the flow at {0:?}")]
    Tangential([f64; 2]),
    #[error("search reached the neighbourhood of an equilibrium at {0:?}")]
    Equilibrium([f64; 2]),
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("cycle is not hyperbolic: multiplier {multiplier} within {margin} of 1")]
    NotHyperbolic { multiplier: f64, margin: f64 },
    #[error("cycle has no samples")]
    EmptySamples,
    #[error("section normal must be nonzero")]
    BadSection,
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Repelling,
}

impl Stability {
    pub fn from_multiplier(mu: f64) -> Self {
        if mu.abs() < 1.0 {
            Stability::Attracting
        } else {
            Stability::Repelling
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Stability::Attracting => Stability::Repelling,
            Stability::Repelling => Stability::Attracting,
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Attracting => "attracting",
            Stability::Repelling => "repelling",
        })
    }
}

/// The line through `anchor` with unit `normal`. Points on it are addressed
/// by `s` along the tangent `(n_y, -n_x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub anchor: [f64; 2],
    pub normal: [f64; 2],
}

impl Section {
    pub fn new(anchor: [f64; 2], normal: [f64; 2]) -> Result<Self, CycleError> {
        let len = normal[0].hypot(normal[1]);
        if !(len > 0.0 && len.is_finite()) {
            return Err(CycleError::BadSection);
        }
        Ok(Section {
            anchor,
            normal: [normal[0] / len, normal[1] / len],
        })
    }

    pub fn tangent(&self) -> [f64; 2] {
        [self.normal[1], -self.normal[0]]
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        let t = self.tangent();
        [self.anchor[0] + s * t[0], self.anchor[1] + s * t[1]]
    }

    /// Coordinate of the orthogonal projection of `p`.
    pub fn coord(&self, p: &[f64]) -> f64 {
        let t = self.tangent();
        (p[0] - self.anchor[0]) * t[0] + (p[1] - self.anchor[1]) * t[1]
    }

    /// Signed distance from the line.
    pub fn level(&self, p: &[f64]) -> f64 {
        (p[0] - self.anchor[0]) * self.normal[0] + (p[1] - self.anchor[1]) * self.normal[1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    pub integrator: IntegratorConfig,
    /// Time cap for one return.
    pub t_max: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Plain return-map iterations before Newton.
    pub relax: usize,
    pub hyperbolicity_margin: f64,
    pub samples: usize,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            integrator: IntegratorConfig::default(),
            t_max: 200.0,
            newton_tol: 1e-10,
            max_newton: 40,
            relax: 0,
            hyperbolicity_margin: 1e-3,
            samples: 256,
        }
    }
}

/// Result of one application of the return map.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnMap {
    pub point: [f64; 2],
    /// Section coordinate of `point`.
    pub s: f64,
    pub time: f64,
    /// Derivative of `s -> s'` along the section.
    pub derivative: f64,
    /// Fundamental matrix at the return time.
    pub monodromy: Matrix2<f64>,
}

/// Below this speed a section point counts as an equilibrium. Orbits that
/// start slower spiral too tightly for their crossings to be resolved.
pub const EQUILIBRIUM_SPEED: f64 = 1e-5;

struct Compiled {
    field: NumericField,
    jac: NumericJacobian,
}

impl Compiled {
    fn new(f: &PlanarField) -> Self {
        let sf = f.as_spatial();
        Compiled {
            field: NumericField::new(&sf, 0.0),
            jac: NumericJacobian::new(&sf, 0.0),
        }
    }

    fn eval(&self, p: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        self.field.eval_into(p, &mut out);
        out
    }
}

fn return_map_compiled(
    c: &Compiled,
    section: &Section,
    s: f64,
    opts: &CycleOptions,
) -> Result<ReturnMap, CycleError> {
    let p = section.point(s);
    let f0 = c.eval(&p);
    if f0[0].hypot(f0[1]) < EQUILIBRIUM_SPEED {
        return Err(CycleError::Equilibrium(p));
    }
    let nf = section.normal[0] * f0[0] + section.normal[1] * f0[1];
    if nf.abs() < 1e-12 {
        return Err(CycleError::Tangential(p));
    }
    let direction = if nf > 0.0 { 1 } else { -1 };
    let res = first_crossing_variational(
        &c.field,
        |x: &[f64], out: &mut [f64]| c.jac.eval_into(x, out),
        &p,
        (0.0, opts.t_max),
        &opts.integrator,
        |y: &[f64]| section.level(y),
        direction,
    );
    let (cross, m) = match res {
        Ok(v) => v,
        Err(OdeError::NotEnoughCrossings { .. }) => {
            return Err(CycleError::NoReturn {
                start: p,
                t_max: opts.t_max,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let q = [cross.state[0], cross.state[1]];
    let m = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let f1 = c.eval(&q);
    let n = nalgebra::Vector2::from(section.normal);
    let t = nalgebra::Vector2::from(section.tangent());
    let fv = nalgebra::Vector2::from(f1);
    // Project the variation onto the section along the flow.
    let proj = Matrix2::identity() - fv * n.transpose() / n.dot(&fv);
    let derivative = t.dot(&(proj * m * t));
    Ok(ReturnMap {
        point: q,
        s: section.coord(&q),
        time: cross.t,
        derivative,
        monodromy: m,
    })
}

/// First same-orientation return of the orbit through section coordinate `s`.
pub fn return_map(
    f: &PlanarField,
    section: &Section,
    s: f64,
    opts: &CycleOptions,
) -> Result<ReturnMap, CycleError> {
    return_map_compiled(&Compiled::new(f), section, s, opts)
}

/// One sample `(t, u(t), v(t))` along a cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub section: Section,
    pub fixed_point: [f64; 2],
    pub period: f64,
    /// Derivative of the return map at the fixed point.
    pub multiplier: f64,
    pub stability: Stability,
    /// Uniform in time over `[0, period)`, starting at the fixed point.
    pub samples: Vec<CycleSample>,
    /// Monodromy of the field (not the reversed one) over one period.
    pub monodromy: [[f64; 2]; 2],
    /// Return-map residual `|P(s*) - s*|` at the fixed point.
    pub residual: f64,
    pub newton_iterations: usize,
}

impl LimitCycle {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

struct Converged {
    s: f64,
    ret: ReturnMap,
    iterations: usize,
    residual: f64,
}

fn newton(
    c: &Compiled,
    section: &Section,
    s0: f64,
    opts: &CycleOptions,
) -> Result<Converged, CycleError> {
    let mut s = s0;
    for _ in 0..opts.relax {
        s = return_map_compiled(c, section, s, opts)?.s;
    }
    let mut ret = return_map_compiled(c, section, s, opts)?;
    let mut g = ret.s - s;
    for it in 0..opts.max_newton {
        if g.abs() <= opts.newton_tol {
            return Ok(Converged {
                s,
                ret,
                iterations: it,
                residual: g.abs(),
            });
        }
        let dg = ret.derivative - 1.0;
        let mut step = -g / dg;
        // Damped: shrink until the residual decreases or the step vanishes.
        let mut accepted = false;
        for _ in 0..30 {
            let trial = s + step;
            if let Ok(r) = return_map_compiled(c, section, trial, opts) {
                let gt = r.s - trial;
                if gt.abs() < g.abs() || step.abs() < 1e-14 * (1.0 + s.abs()) {
                    s = trial;
                    ret = r;
                    g = gt;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(CycleError::NoConvergence {
                iterations: it + 1,
                residual: g.abs(),
            });
        }
    }
    if g.abs() <= opts.newton_tol {
        return Ok(Converged {
            s,
            ret,
            iterations: opts.max_newton,
            residual: g.abs(),
        });
    }
    Err(CycleError::NoConvergence {
        iterations: opts.max_newton,
        residual: g.abs(),
    })
}

fn samples_along(
    c: &Compiled,
    start: [f64; 2],
    period: f64,
    n: usize,
    opts: &CycleOptions,
) -> Result<Vec<CycleSample>, CycleError> {
    let traj = integrate(&c.field, &start, (0.0, period), &opts.integrator)?;
    Ok((0..n)
        .map(|i| {
            let t = period * i as f64 / n as f64;
            let y = traj.eval(t).expect("inside span");
            CycleSample { t, u: y[0], v: y[1] }
        })
        .collect())
}

fn check_hyperbolic(mu: f64, opts: &CycleOptions) -> Result<(), CycleError> {
    if (mu - 1.0).abs() < opts.hyperbolicity_margin {
        return Err(CycleError::NotHyperbolic {
            multiplier: mu,
            margin: opts.hyperbolicity_margin,
        });
    }
    Ok(())
}

/// Finds the cycle through the section near `guess` (projected onto the
/// section). Attracting cycles are found directly; repelling ones through the
/// time-reversed field, with the multiplier inverted and samples reversed.
pub fn find_limit_cycle(
    f: &PlanarField,
    guess: [f64; 2],
    section: &Section,
    opts: &CycleOptions,
) -> Result<LimitCycle, CycleError> {
    let forward = Compiled::new(f);
    let s0 = section.coord(&guess);
    let fwd = newton(&forward, section, s0, opts);
    if let Ok(conv) = &fwd {
        if conv.ret.derivative.abs() < 1.0 {
            check_hyperbolic(conv.ret.derivative, opts)?;
            let samples =
                samples_along(&forward, conv.ret.point, conv.ret.time, opts.samples, opts)?;
            let m = conv.ret.monodromy;
            return Ok(LimitCycle {
                section: *section,
                fixed_point: section.point(conv.s),
                period: conv.ret.time,
                multiplier: conv.ret.derivative,
                stability: Stability::Attracting,
                samples,
                monodromy: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
                residual: conv.residual,
                newton_iterations: conv.iterations,
            });
        }
    }
    let backward = Compiled::new(&f.reversed());
    let conv = match newton(&backward, section, s0, opts) {
        Ok(c) => c,
        Err(e) => return Err(fwd.err().unwrap_or(e)),
    };
    let mu_rev = conv.ret.derivative;
    if mu_rev.abs() >= 1.0 {
        // Neither direction attracts; report the forward result.
        check_hyperbolic(mu_rev, opts)?;
        return Err(CycleError::NotHyperbolic {
            multiplier: 1.0 / mu_rev,
            margin: opts.hyperbolicity_margin,
        });
    }
    let multiplier = 1.0 / mu_rev;
    check_hyperbolic(multiplier, opts)?;
    let period = conv.ret.time;
    let start = section.point(conv.s);
    let rev = samples_along(&backward, start, period, opts.samples, opts)?;
    // u(t) = w(T - t) for the reversed orbit w.
    let n = rev.len();
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let w = if i == 0 { rev[0] } else { rev[n - i] };
        samples.push(CycleSample {
            t: period * i as f64 / n as f64,
            u: w.u,
            v: w.v,
        });
    }
    let minv = conv
        .ret
        .monodromy
        .try_inverse()
        .ok_or(CycleError::NotHyperbolic {
            multiplier,
            margin: opts.hyperbolicity_margin,
        })?;
    Ok(LimitCycle {
        section: *section,
        fixed_point: start,
        period,
        multiplier,
        stability: Stability::Repelling,
        samples,
        monodromy: [[minv[(0, 0)], minv[(0, 1)]], [minv[(1, 0)], minv[(1, 1)]]],
        residual: conv.residual,
        newton_iterations: conv.iterations,
    })
}

/// Whether every sample lies strictly inside `K`.
pub fn cycle_in_k(c: &LimitCycle, k: &Region) -> Result<bool, CycleError> {
    if c.samples.is_empty() {
        return Err(CycleError::EmptySamples);
    }
    Ok(c.samples.iter().all(|s| k.contains(s.u, s.v)))
}

/// Crossing times of the cycle orbit with its own section over `turns`
/// periods; a cheap closure diagnostic.
pub fn section_returns(
    f: &PlanarField,
    c: &LimitCycle,
    turns: usize,
    opts: &CycleOptions,
) -> Result<Vec<f64>, CycleError> {
    let field = NumericField::new(&f.as_spatial(), 0.0);
    let sec = c.section;
    let f0 = {
        let mut o = [0.0; 2];
        field.eval_into(&c.fixed_point, &mut o);
        o
    };
    let dir = if sec.normal[0] * f0[0] + sec.normal[1] * f0[1] > 0.0 { 1 } else { -1 };
    let t_max = c.period * (turns as f64 + 0.5);
    Ok(find_crossings(
        &field,
        &c.fixed_point,
        (0.0, t_max),
        &opts.integrator,
        |y: &[f64]| sec.level(y),
        dir,
        turns,
    )?
    .into_iter()
    .map(|x| x.t)
    .collect())
}

/// The reference system with an attracting unit-circle cycle centred at
/// `(2, 0)`: `x' = -y + (x-2)(1-w)`, `y' = (x-2) + y(1-w)`, `w = (x-2)^2 + y^2`.
pub fn reference_circle_system() -> PlanarField {
    PlanarField::parse(
        "-y + (x-2)*(1 - (x-2)^2 - y^2)",
        "(x-2) + y*(1 - (x-2)^2 - y^2)",
    )
    .expect("reference system parses")
}

/// Section `{y = 0}` through the cycle centre, oriented with `y' > 0` at
/// `x > 2`.
pub fn reference_section() -> Section {
    Section::new([2.0, 0.0], [0.0, 1.0]).expect("nonzero normal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    /// `1/r^2 = 1 + (1/r0^2 - 1) e^{-2t}` for `r' = r(1 - r^2)`.
    fn radial_return(r0: f64) -> f64 {
        (1.0 + (1.0 / (r0 * r0) - 1.0) * (-2.0 * TAU).exp()).sqrt().recip()
    }

    #[test]
    fn return_map_matches_radial_closed_form() {
        let f = reference_circle_system();
        let sec = reference_section();
        let opts = CycleOptions::default();
        let r = return_map(&f, &sec, 1.0, &opts).unwrap();
        assert!((r.s - 1.0).abs() < 1e-10);
        assert!((r.time - TAU).abs() < 1e-8);
        assert!((r.derivative / (-4.0 * PI).exp() - 1.0).abs() < 1e-3);
        for r0 in [0.5, 1.5, 2.5] {
            let img = return_map(&f, &sec, r0, &opts).unwrap();
            assert!((img.s - radial_return(r0)).abs() < 1e-9, "r0 = {r0}");
            assert!((img.time - TAU).abs() < 1e-8);
            assert!(img.point[1].abs() < 1e-12);
        }
        let img = return_map(&f, &sec, 1.5, &opts).unwrap();
        assert!(img.s < 1.5);
    }

    #[test]
    fn attracting_reference_cycle() {
        let f = reference_circle_system();
        let opts = CycleOptions::default();
        let c = find_limit_cycle(&f, [2.5, 0.0], &reference_section(), &opts).unwrap();
        assert_eq!(c.stability, Stability::Attracting);
        assert!((c.period - TAU).abs() < 1e-8);
        assert!((c.multiplier / (-4.0 * PI).exp() - 1.0).abs() < 1e-3);
        assert!((c.fixed_point[0] - 3.0).abs() < 1e-10);
        assert!(c.residual <= 1e-10);
        assert_eq!(c.samples.len(), 256);
        for s in &c.samples {
            let r = (s.u - 2.0).hypot(s.v);
            assert!((r - 1.0).abs() < 1e-9);
        }
        assert!(cycle_in_k(&c, &Region::default()).unwrap());
        let narrow = Region::new(crate::polyalg::int(2), crate::polyalg::int(-4), crate::polyalg::int(4)).unwrap();
        assert!(!cycle_in_k(&c, &narrow).unwrap());
        let again = find_limit_cycle(&f, c.fixed_point, &reference_section(), &opts).unwrap();
        assert!(again.newton_iterations <= 2);
    }

    #[test]
    fn monodromy_eigenvalues() {
        let f = reference_circle_system();
        let c = find_limit_cycle(&f, [2.5, 0.0], &reference_section(), &CycleOptions::default())
            .unwrap();
        let m = Matrix2::new(c.monodromy[0][0], c.monodromy[0][1], c.monodromy[1][0], c.monodromy[1][1]);
        let mut ev: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[1] - 1.0).abs() < 1e-6);
        assert!((ev[0] / c.multiplier - 1.0).abs() < 1e-3);
    }

    #[test]
    fn repelling_reference_cycle() {
        let f = reference_circle_system().reversed();
        let c = find_limit_cycle(&f, [2.5, 0.0], &reference_section(), &CycleOptions::default())
            .unwrap();
        assert_eq!(c.stability, Stability::Repelling);
        assert!((c.multiplier / (4.0 * PI).exp() - 1.0).abs() < 1e-3);
        assert!((c.period - TAU).abs() < 1e-8);
        // Samples run forward in time for the reversed field: clockwise.
        let ang = |s: &CycleSample| s.v.atan2(s.u - 2.0);
        assert!(ang(&c.samples[1]) < ang(&c.samples[0]));
    }

    #[test]
    fn no_return_is_reported() {
        let f = PlanarField::parse("0", "1").unwrap();
        let opts = CycleOptions { t_max: 10.0, ..Default::default() };
        let err = find_limit_cycle(&f, [5.0, 0.0], &reference_section(), &opts).unwrap_err();
        assert!(matches!(err, CycleError::NoReturn { .. }), "{err:?}");
        let tangent = PlanarField::parse("1", "0").unwrap();
        assert!(matches!(
            return_map(&tangent, &reference_section(), 1.0, &opts),
            Err(CycleError::Tangential(_))
        ));
    }

    #[test]
    fn empty_samples_are_an_error() {
        let c = LimitCycle {
            section: reference_section(),
            fixed_point: [3.0, 0.0],
            period: TAU,
            multiplier: 0.5,
            stability: Stability::Attracting,
            samples: vec![],
            monodromy: [[1.0, 0.0], [0.0, 1.0]],
            residual: 0.0,
            newton_iterations: 0,
        };
        assert_eq!(cycle_in_k(&c, &Region::default()), Err(CycleError::EmptySamples));
    }

    #[test]
    fn orbit_returns_once_per_period() {
        let f = reference_circle_system();
        let opts = CycleOptions::default();
        let c = find_limit_cycle(&f, [2.5, 0.0], &reference_section(), &opts).unwrap();
        let ts = section_returns(&f, &c, 3, &opts).unwrap();
        for (k, t) in ts.iter().enumerate() {
            assert!((t - TAU * (k + 1) as f64).abs() < 1e-7);
        }
    }

    #[test]
    fn json_has_expected_keys() {
        let f = reference_circle_system();
        let opts = CycleOptions { samples: 4, ..Default::default() };
        let c = find_limit_cycle(&f, [2.5, 0.0], &reference_section(), &opts).unwrap();
        let j = c.to_json();
        for key in ["section", "fixed_point", "period", "multiplier", "samples", "stability"] {
            assert!(j.get(key).is_some(), "{key}");
        }
        assert_eq!(j["stability"], "attracting");
        let back: LimitCycle = serde_json::from_value(j).unwrap();
        assert_eq!(back, c);
    }
}

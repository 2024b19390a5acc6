//! Planar and spatial polynomial vector fields.
//!
//! A planar field `(P, Q)` on a box `K = (0, b) x (alpha, beta)` lifts to the
//! one-parameter spatial family
//!
//! ```text
//! x' = -y
//! y' =  x + eps * y * P(x^2 + y^2, z)
//! z' =  2 * eps * y^2 * Q(x^2 + y^2, z)
//! ```
//!
//! whose invariant tori sit over the limit cycles of `(P, Q)`. In cylindrical
//! coordinates with `theta` as time, the first-order average of the family is
//! the guiding field `(r P(r^2, z) / 2, r^2 Q(r^2, z))`, which under
//! `rho = r^2` is `rho * (P, Q)(rho, z)`: the planar field up to a positive
//! time rescaling.

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::odeint::{OdeError, OdeRhs};
use crate::polyalg::{default_var_names, int, rat, Degree, Poly, PolyError, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("point has dimension {found}, field has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("malformed system file: {0}")]
    Format(String),
}

/// The box `(0, b) x (alpha, beta)` holding the planar limit cycles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub b: Rational,
    pub alpha: Rational,
    pub beta: Rational,
}

impl Region {
    pub fn new(b: Rational, alpha: Rational, beta: Rational) -> Result<Self, FieldError> {
        if !b.is_positive() {
            return Err(FieldError::InvalidRegion(format!("b = {b} must be positive")));
        }
        if beta <= alpha {
            return Err(FieldError::InvalidRegion(format!(
                "beta = {beta} must exceed alpha = {alpha}"
            )));
        }
        Ok(Region { b, alpha, beta })
    }

    /// Strict containment of a floating point.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let f = |r: &Rational| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
        x > 0.0 && x < f(&self.b) && y > f(&self.alpha) && y < f(&self.beta)
    }
}

impl Default for Region {
    /// `(0, 4) x (-4, 4)`.
    fn default() -> Self {
        Region {
            b: int(4),
            alpha: int(-4),
            beta: int(4),
        }
    }
}

/// `x' = P(x, y), y' = Q(x, y)` with the cycle-holding region `K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanarField {
    pub p: Poly,
    pub q: Poly,
    pub region: Region,
}

impl PlanarField {
    pub fn new(p: Poly, q: Poly, region: Region) -> Result<Self, FieldError> {
        for c in [&p, &q] {
            if c.nvars() != 2 {
                return Err(PolyError::ArityMismatch {
                    expected: 2,
                    found: c.nvars(),
                }
                .into());
            }
        }
        Ok(PlanarField { p, q, region })
    }

    /// Parses `P` and `Q` in the variables `x, y` with the default region.
    pub fn parse(p: &str, q: &str) -> Result<Self, FieldError> {
        Self::new(
            Poly::parse(p, &["x", "y"])?,
            Poly::parse(q, &["x", "y"])?,
            Region::default(),
        )
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn degree(&self) -> Degree {
        self.p.total_degree().max(self.q.total_degree())
    }

    /// The field with time reversed, `(-P, -Q)`.
    pub fn reversed(&self) -> PlanarField {
        PlanarField {
            p: -&self.p,
            q: -&self.q,
            region: self.region.clone(),
        }
    }

    /// The same field as a 2-dimensional [`SpatialField`].
    pub fn as_spatial(&self) -> SpatialField {
        SpatialField::new(vec![self.p.clone(), self.q.clone()], false).expect("planar arity")
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.p.eval_float(&[x, y]).expect("planar arity"),
            self.q.eval_float(&[x, y]).expect("planar arity"),
        ]
    }
}

/// An `n`-dimensional polynomial field, optionally carrying the perturbation
/// parameter as one extra trailing variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpatialField {
    components: Vec<Poly>,
    nspace: usize,
    has_eps: bool,
}

impl SpatialField {
    pub fn new(components: Vec<Poly>, has_eps: bool) -> Result<Self, FieldError> {
        let nspace = components.len();
        let nvars = nspace + usize::from(has_eps);
        if let Some(c) = components.iter().find(|c| c.nvars() != nvars) {
            return Err(PolyError::ArityMismatch {
                expected: nvars,
                found: c.nvars(),
            }
            .into());
        }
        Ok(SpatialField {
            components,
            nspace,
            has_eps,
        })
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn nspace(&self) -> usize {
        self.nspace
    }

    pub fn has_eps(&self) -> bool {
        self.has_eps
    }

    /// Index of the parameter variable, when present.
    pub fn eps_var(&self) -> Option<usize> {
        self.has_eps.then_some(self.nspace)
    }

    /// Variable names: `x, y, z` (or `x1..xn`) followed by `eps`.
    pub fn var_names(&self) -> Vec<String> {
        let mut v = default_var_names(self.nspace);
        if self.has_eps {
            v.push("eps".into());
        }
        v
    }

    /// Degree in the space variables only.
    pub fn degree(&self) -> Degree {
        let space: Vec<usize> = (0..self.nspace).collect();
        self.components
            .iter()
            .map(|c| c.degree_in(&space))
            .max()
            .unwrap_or(Degree::NegInfinity)
    }

    /// Substitutes a rational value for the parameter, removing it.
    pub fn bind_eps(&self, eps: &Rational) -> SpatialField {
        if !self.has_eps {
            return self.clone();
        }
        let n = self.nspace;
        let mut subs: Vec<Poly> = (0..n).map(|i| Poly::var(n, i)).collect();
        subs.push(Poly::constant(n, eps.clone()));
        SpatialField {
            components: self
                .components
                .iter()
                .map(|c| c.compose(&subs).expect("consistent arity"))
                .collect(),
            nspace: n,
            has_eps: false,
        }
    }

    /// The field in coordinates shifted by `shift`: `X'(p) = X(p - shift)`.
    pub fn translate(&self, shift: &[Rational]) -> Result<SpatialField, FieldError> {
        if shift.len() != self.nspace {
            return Err(FieldError::Dimension {
                expected: self.nspace,
                found: shift.len(),
            });
        }
        let nv = self.nspace + usize::from(self.has_eps);
        let mut subs: Vec<Poly> = shift
            .iter()
            .enumerate()
            .map(|(i, s)| &Poly::var(nv, i) - &Poly::constant(nv, s.clone()))
            .collect();
        if self.has_eps {
            subs.push(Poly::var(nv, self.nspace));
        }
        let components = self
            .components
            .iter()
            .map(|c| c.compose(&subs))
            .collect::<Result<_, _>>()?;
        Ok(SpatialField {
            components,
            nspace: self.nspace,
            has_eps: self.has_eps,
        })
    }

    /// Jacobian in the space variables, `jac[i][j] = d component_i / d x_j`.
    pub fn jacobian(&self) -> Vec<Vec<Poly>> {
        self.components
            .iter()
            .map(|c| {
                (0..self.nspace)
                    .map(|j| c.partial(j).expect("space variable in range"))
                    .collect()
            })
            .collect()
    }
}

/// The lift of a planar field. Variables `(x, y, z, eps)`.
pub fn lift_to_3d(f: &PlanarField) -> SpatialField {
    let x = Poly::var(4, 0);
    let y = Poly::var(4, 1);
    let z = Poly::var(4, 2);
    let eps = Poly::var(4, 3);
    let rho = &(&x * &x) + &(&y * &y);
    let subs = [rho, z];
    let p = f.p.compose(&subs).expect("planar arity");
    let q = f.q.compose(&subs).expect("planar arity");
    let ey = &eps * &y;
    let c0 = -&y;
    let c1 = &x + &(&ey * &p);
    let c2 = (&(&ey * &y) * &q).scale(&int(2));
    SpatialField {
        components: vec![c0, c1, c2],
        nspace: 3,
        has_eps: true,
    }
}

/// The planar field `P = -y`, `Q = x - a - F(y)`.
pub fn lienard_planar(f: &Poly, a: &Rational) -> Result<PlanarField, FieldError> {
    if f.nvars() != 1 {
        return Err(PolyError::ArityMismatch {
            expected: 1,
            found: f.nvars(),
        }
        .into());
    }
    let x = Poly::var(2, 0);
    let y = Poly::var(2, 1);
    let f_of_y = f.compose(std::slice::from_ref(&y))?;
    let q = &(&x - &Poly::constant(2, a.clone())) - &f_of_y;
    PlanarField::new(-&y, q, Region::default())
}

/// Lift of the planar form of the Lienard system `u' = v - F(u), v' = -u`.
pub fn lienard_lift(f: &Poly, a: &Rational) -> Result<SpatialField, FieldError> {
    Ok(lift_to_3d(&lienard_planar(f, a)?))
}

/// Mean of `sin^2` over a period, from its Fourier expansion
/// `sin^2 t = 1/2 - cos(2t)/2`.
pub fn mean_sin_squared() -> Rational {
    rat(1, 2)
}

/// Averaged field in `(r, z)` on `D = (0, sqrt b) x (alpha, beta)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuidingField {
    pub r_dot: Poly,
    pub z_dot: Poly,
    pub region: Region,
}

impl GuidingField {
    pub fn var_names() -> [&'static str; 2] {
        ["r", "z"]
    }
}

/// `(r P(r^2, z) / 2, r^2 Q(r^2, z))`: the average over one turn of the
/// first-order term `(r sin^2 P, 2 r^2 sin^2 Q)`.
pub fn derive_guiding(f: &PlanarField) -> GuidingField {
    let r = Poly::var(2, 0);
    let z = Poly::var(2, 1);
    let r2 = &r * &r;
    let subs = [r2.clone(), z];
    let p = f.p.compose(&subs).expect("planar arity");
    let q = f.q.compose(&subs).expect("planar arity");
    let avg = mean_sin_squared();
    GuidingField {
        r_dot: (&r * &p).scale(&avg),
        z_dot: (&r2 * &q).scale(&(&avg * int(2))),
        region: f.region.clone(),
    }
}

/// Outcome of [`guiding_conjugacy_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conjugacy {
    Holds,
    /// `component` is 0 for the `rho` equation, 1 for `z`. `residual` is the
    /// quotient minus the planar component, or the offending polynomial when
    /// the substitution or the division fails.
    Mismatch { component: usize, residual: Poly },
}

impl Conjugacy {
    pub fn holds(&self) -> bool {
        matches!(self, Conjugacy::Holds)
    }
}

/// Checks symbolically that the guiding field, rewritten with `rho = r^2`
/// and divided by `rho`, is exactly the planar field `(P, Q)(rho, z)`.
pub fn guiding_conjugacy_check(f: &PlanarField) -> Conjugacy {
    let g = derive_guiding(f);
    let r = Poly::var(2, 0);
    // rho' = 2 r r', z' unchanged.
    let rho_dot = (&r * &g.r_dot).scale(&int(2));
    let targets = [&f.p, &f.q];
    for (i, comp) in [rho_dot, g.z_dot].into_iter().enumerate() {
        let Some(in_rho) = comp.deflate_var(0, 2) else {
            return Conjugacy::Mismatch {
                component: i,
                residual: comp,
            };
        };
        let Some(quot) = in_rho.div_var_power(0, 1) else {
            return Conjugacy::Mismatch {
                component: i,
                residual: in_rho,
            };
        };
        let residual = &quot - targets[i];
        if !residual.is_zero() {
            return Conjugacy::Mismatch {
                component: i,
                residual,
            };
        }
    }
    Conjugacy::Holds
}

/// The field in the coordinate `x_new = x - c`, i.e. `(P, Q)(x_new + c, y)`.
/// Cycles move by `-c`; the region's right edge becomes `b - c`.
pub fn translate_x(f: &PlanarField, c: &Rational) -> Result<PlanarField, FieldError> {
    let x = Poly::var(2, 0);
    let y = Poly::var(2, 1);
    let subs = [&x + &Poly::constant(2, c.clone()), y];
    let region = Region::new(
        &f.region.b - c,
        f.region.alpha.clone(),
        f.region.beta.clone(),
    )?;
    Ok(PlanarField {
        p: f.p.compose(&subs)?,
        q: f.q.compose(&subs)?,
        region,
    })
}

/// Floating evaluation with the parameter bound to `eps`.
pub fn eval_field(f: &SpatialField, point: &[f64], eps: f64) -> Result<Vec<f64>, FieldError> {
    NumericField::new(f, eps).eval_checked(point)
}

/// A [`SpatialField`] compiled for fast repeated floating evaluation.
#[derive(Clone, Debug)]
pub struct NumericField {
    comps: Vec<crate::polyalg::HornerPoly>,
    nspace: usize,
    eps: Option<f64>,
}

impl NumericField {
    pub fn new(f: &SpatialField, eps: f64) -> Self {
        NumericField {
            comps: f.components.iter().map(Poly::horner).collect(),
            nspace: f.nspace,
            eps: f.has_eps.then_some(eps),
        }
    }

    pub fn dim(&self) -> usize {
        self.nspace
    }

    /// Writes the field at `point` into `out`. Panics on dimension mismatch.
    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        match self.eps {
            Some(e) => {
                let mut buf = [0.0; 8];
                let n = self.nspace;
                if n < buf.len() {
                    buf[..n].copy_from_slice(&point[..n]);
                    buf[n] = e;
                    for (o, c) in out.iter_mut().zip(&self.comps) {
                        *o = c.eval(&buf[..=n]);
                    }
                } else {
                    let mut v = point[..n].to_vec();
                    v.push(e);
                    for (o, c) in out.iter_mut().zip(&self.comps) {
                        *o = c.eval(&v);
                    }
                }
            }
            None => {
                for (o, c) in out.iter_mut().zip(&self.comps) {
                    *o = c.eval(point);
                }
            }
        }
    }

    pub fn eval_checked(&self, point: &[f64]) -> Result<Vec<f64>, FieldError> {
        if point.len() != self.nspace {
            return Err(FieldError::Dimension {
                expected: self.nspace,
                found: point.len(),
            });
        }
        let mut out = vec![0.0; self.nspace];
        self.eval_into(point, &mut out);
        Ok(out)
    }
}

impl OdeRhs for NumericField {
    fn dim(&self) -> usize {
        self.nspace
    }

    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError> {
        self.eval_into(y, dy);
        Ok(())
    }
}

/// The space Jacobian of a [`SpatialField`] compiled for floating evaluation.
#[derive(Clone, Debug)]
pub struct NumericJacobian {
    entries: NumericField,
}

impl NumericJacobian {
    pub fn new(f: &SpatialField, eps: f64) -> Self {
        NumericJacobian {
            entries: NumericField {
                comps: f.jacobian().iter().flatten().map(Poly::horner).collect(),
                nspace: f.nspace,
                eps: f.has_eps.then_some(eps),
            },
        }
    }

    /// Row-major `n x n` Jacobian at `point`.
    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        self.entries.eval_into(point, out);
    }
}

// ---------------------------------------------------------------------------
// System files

#[derive(Serialize, Deserialize)]
struct PlanarFileBody {
    #[serde(rename = "P")]
    p: Value,
    #[serde(rename = "Q")]
    q: Value,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    guesses: Vec<CycleGuess>,
}

#[derive(Serialize, Deserialize)]
struct SpatialFileBody {
    components: Vec<Value>,
    #[serde(default)]
    eps_var: bool,
}

/// A starting point and section normal for a cycle search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleGuess {
    pub point: [f64; 2],
    #[serde(default = "default_normal")]
    pub normal: [f64; 2],
}

fn default_normal() -> [f64; 2] {
    [0.0, 1.0]
}

/// Contents of a system file.
#[derive(Clone, Debug)]
pub enum SystemFile {
    Planar {
        field: PlanarField,
        guesses: Vec<CycleGuess>,
    },
    Spatial(SpatialField),
}

fn parse_rational(v: &Value) -> Result<Rational, FieldError> {
    let p = Poly::from_json_value(v, &[] as &[&str])
        .map_err(|e| FieldError::Format(format!("region bound {v}: {e}")))?;
    p.as_constant()
        .ok_or_else(|| FieldError::Format(format!("region bound {v} is not a number")))
}

fn rational_to_value(r: &Rational) -> Value {
    if r.denom().is_one() {
        match num_traits::ToPrimitive::to_i64(r.numer()) {
            Some(i) => json!(i),
            None => json!(r.to_string()),
        }
    } else {
        json!(r.to_string())
    }
}

impl SystemFile {
    pub fn from_json_str(text: &str) -> Result<Self, FieldError> {
        let v: Value = serde_json::from_str(text).map_err(|e| {
            FieldError::Format(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, FieldError> {
        if let Some(body) = v.get("planar") {
            let body: PlanarFileBody = serde_json::from_value(body.clone())
                .map_err(|e| FieldError::Format(format!("planar: {e}")))?;
            let p = Poly::from_json_value(&body.p, &["x", "y"])?;
            let q = Poly::from_json_value(&body.q, &["x", "y"])?;
            let region = match body.k {
                None => Region::default(),
                Some(k) if k.len() == 3 => Region::new(
                    parse_rational(&k[0])?,
                    parse_rational(&k[1])?,
                    parse_rational(&k[2])?,
                )?,
                Some(k) => {
                    return Err(FieldError::Format(format!(
                        "K must be [b, alpha, beta], got {} entries",
                        k.len()
                    )))
                }
            };
            return Ok(SystemFile::Planar {
                field: PlanarField::new(p, q, region)?,
                guesses: body.guesses,
            });
        }
        if let Some(body) = v.get("spatial") {
            let body: SpatialFileBody = serde_json::from_value(body.clone())
                .map_err(|e| FieldError::Format(format!("spatial: {e}")))?;
            let n = body.components.len();
            if n == 0 {
                return Err(FieldError::Format("spatial field has no components".into()));
            }
            let mut names = default_var_names(n);
            if body.eps_var {
                names.push("eps".into());
            }
            let comps = body
                .components
                .iter()
                .map(|c| Poly::from_json_value(c, &names))
                .collect::<Result<Vec<_>, _>>()?;
            return SpatialField::new(comps, body.eps_var).map(SystemFile::Spatial);
        }
        Err(FieldError::Format(
            "expected a top-level `planar` or `spatial` key".into(),
        ))
    }

    pub fn to_value(&self) -> Value {
        match self {
            SystemFile::Planar { field, guesses } => {
                let body = PlanarFileBody {
                    p: json!(field.p.to_text(&["x", "y"])),
                    q: json!(field.q.to_text(&["x", "y"])),
                    k: Some(vec![
                        rational_to_value(&field.region.b),
                        rational_to_value(&field.region.alpha),
                        rational_to_value(&field.region.beta),
                    ]),
                    guesses: guesses.clone(),
                };
                json!({ "planar": body })
            }
            SystemFile::Spatial(f) => {
                let names = f.var_names();
                let body = SpatialFileBody {
                    components: f
                        .components
                        .iter()
                        .map(|c| json!(c.to_text(&names)))
                        .collect(),
                    eps_var: f.has_eps,
                };
                json!({ "spatial": body })
            }
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }
}

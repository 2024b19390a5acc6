//! Squaring pullback of spatial fields, octant charts, and the integer
//! bookkeeping of degrees, torus counts and lower-bound tables.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::polyalg::{int, Degree, Poly};
use crate::vfields::{FieldError, SpatialField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoublingError {
    #[error("field still depends on the perturbation parameter; bind it first")]
    HasParameter,
    #[error("expected a field with {expected} components, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("point {point:?} is not strictly inside octant {octant}")]
    OffOctant { octant: Octant, point: Vec<f64> },
    #[error("point {0:?} lies outside (-1, inf)^n")]
    OutsideDomain(Vec<f64>),
    #[error("bad octant `{0}`: use a string of `+` and `-`")]
    BadOctant(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn check_dims(f: &SpatialField, d: usize) -> Result<(), DoublingError> {
    if f.has_eps() {
        return Err(DoublingError::HasParameter);
    }
    if f.nspace() != d + 1 {
        return Err(DoublingError::Dimension {
            expected: d + 1,
            found: f.nspace(),
        });
    }
    Ok(())
}

/// Substitution `x_j -> x_j^2 - 1` in `n` variables.
fn squaring_map(n: usize) -> Vec<Poly> {
    (0..n)
        .map(|j| &Poly::var(n, j).pow(2) - &Poly::one(n))
        .collect()
}

fn product_except(n: usize, skip: Option<usize>) -> Poly {
    (0..n)
        .filter(|&j| Some(j) != skip)
        .fold(Poly::one(n), |acc, j| &acc * &Poly::var(n, j))
}

/// Component `i` of the result is `(prod_{j != i} x_j) * (X0_i o phi)` with
/// `phi(x)_j = x_j^2 - 1`.
pub fn pullback_double(x0: &SpatialField, d: usize) -> Result<SpatialField, DoublingError> {
    check_dims(x0, d)?;
    let n = d + 1;
    let phi = squaring_map(n);
    let comps = x0
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| Ok(&product_except(n, Some(i)) * &c.compose(&phi).map_err(FieldError::from)?))
        .collect::<Result<Vec<_>, DoublingError>>()?;
    Ok(SpatialField::new(comps, false)?)
}

/// Outcome of [`verify_pullback_identity`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PullbackCheck {
    Holds,
    /// `residual = 2 x_i X1_i - 2 (prod x_j) (X0_i o phi)`.
    Mismatch { component: usize, residual: Poly },
}

impl PullbackCheck {
    pub fn holds(&self) -> bool {
        matches!(self, PullbackCheck::Holds)
    }
}

/// Checks `D phi . X1 == 2 (prod x_j) (X0 o phi)` exactly, with
/// `D phi = diag(2 x_1, ..., 2 x_n)`.
pub fn verify_pullback_identity(
    x0: &SpatialField,
    x1: &SpatialField,
    d: usize,
) -> Result<PullbackCheck, DoublingError> {
    check_dims(x0, d)?;
    check_dims(x1, d)?;
    let n = d + 1;
    let phi = squaring_map(n);
    let two = int(2);
    let prod = product_except(n, None).scale(&two);
    for i in 0..n {
        let lhs = (&Poly::var(n, i) * &x1.components()[i]).scale(&two);
        let rhs = &prod * &x0.components()[i].compose(&phi).map_err(FieldError::from)?;
        let residual = &lhs - &rhs;
        if !residual.is_zero() {
            return Ok(PullbackCheck::Mismatch {
                component: i,
                residual,
            });
        }
    }
    Ok(PullbackCheck::Holds)
}

/// One application of the pullback with its degree and torus bookkeeping.
#[derive(Clone, Debug)]
pub struct DoublingStep {
    pub x0: SpatialField,
    pub x1: SpatialField,
    pub d: usize,
    pub degree_in: u32,
    pub degree_out: u32,
    pub tori_in: BigUint,
    pub tori_out: BigUint,
}

impl DoublingStep {
    /// `degree_out` is the actual degree of the pulled-back field. It equals
    /// `2 m0 + d` unless leading terms cancel, which is logged.
    pub fn new(x0: SpatialField, d: usize, tori_in: BigUint) -> Result<Self, DoublingError> {
        let x1 = pullback_double(&x0, d)?;
        let degree_in = x0.degree().finite().unwrap_or(0);
        let degree_out = x1.degree().finite().unwrap_or(0);
        if degree_out != 2 * degree_in + d as u32 {
            log::warn!(
                "degenerate doubling: degree {degree_out}, expected {}",
                2 * degree_in + d as u32
            );
        }
        let tori_out = &tori_in << (d + 1);
        Ok(DoublingStep {
            x0,
            x1,
            d,
            degree_in,
            degree_out,
            tori_in,
            tori_out,
        })
    }

    /// Applies the pullback again to the output.
    pub fn next(&self) -> Result<DoublingStep, DoublingError> {
        DoublingStep::new(self.x1.clone(), self.d, self.tori_out.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names = self.x1.var_names();
        let text = |f: &SpatialField| -> Vec<String> {
            f.components().iter().map(|c| c.to_text(&names)).collect()
        };
        serde_json::json!({
            "d": self.d,
            "degree_in": self.degree_in,
            "degree_out": self.degree_out,
            "tori_in": self.tori_in.to_string(),
            "tori_out": self.tori_out.to_string(),
            "x0": text(&self.x0),
            "x1": text(&self.x1),
        })
    }
}

/// `(m_k, tau_k) = (2^k (m0 + d) - d, 2^{k (d + 1)} tau0)`.
pub fn sequence(m0: u64, tau0: u64, d: u64, k: u32) -> (BigUint, BigUint) {
    let m = (BigUint::from(m0 + d) << k) - BigUint::from(d);
    let tau = BigUint::from(tau0) << (k as u64 * (d + 1));
    (m, tau)
}

/// One row of a sequence certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequenceRow {
    pub k: u32,
    #[serde(serialize_with = "big_as_string")]
    pub m: BigUint,
    #[serde(serialize_with = "big_as_string")]
    pub tau: BigUint,
    /// `m_k = 2 m_{k-1} + d` and `tau_k = 2^{d+1} tau_{k-1}` (true for k = 0).
    pub recurrence_ok: bool,
    /// `128 tau_k == (m_k + 2)^3`, reported only for `(m0, tau0, d) = (6, 4, 2)`.
    pub cubic_ok: Option<bool>,
}

fn big_as_string<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Exact certificate rows for `k = 0..=k_max`.
pub fn sequence_certificate(m0: u64, tau0: u64, d: u64, k_max: u32) -> Vec<SequenceRow> {
    let cubic = (m0, tau0, d) == (6, 4, 2);
    let mut rows: Vec<SequenceRow> = Vec::new();
    for k in 0..=k_max {
        let (m, tau) = sequence(m0, tau0, d, k);
        let recurrence_ok = match rows.last() {
            None => m == BigUint::from(m0) && tau == BigUint::from(tau0),
            Some(prev) => {
                m == (&prev.m << 1u32) + BigUint::from(d) && tau == (&prev.tau << (d + 1))
            }
        };
        let cubic_ok = cubic.then(|| &tau * 128u32 == (&m + 2u32).pow(3));
        rows.push(SequenceRow {
            k,
            m,
            tau,
            recurrence_ok,
            cubic_ok,
        });
    }
    rows
}

/// Which stored set of planar lower bounds to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSet {
    /// Lower bounds on hyperbolic limit cycles (the default for torus rows).
    #[default]
    Hyperbolic,
    /// The general Hilbert-number lower bounds;
    /// differs at degrees 8 and 17.
    Hilbert,
}

impl FromStr for BoundSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hyperbolic" => Ok(BoundSet::Hyperbolic),
            "hilbert" => Ok(BoundSet::Hilbert),
            _ => Err(format!("unknown bound set `{s}` (hyperbolic | hilbert)")),
        }
    }
}

impl fmt::Display for BoundSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundSet::Hyperbolic => "hyperbolic",
            BoundSet::Hilbert => "hilbert",
        })
    }
}

const HYPERBOLIC_BOUNDS: [(u64, u64); 16] = [
    (2, 4),
    (3, 13),
    (4, 28),
    (5, 37),
    (6, 53),
    (7, 74),
    (8, 89),
    (9, 120),
    (10, 142),
    (13, 212),
    (17, 348),
    (21, 568),
    (31, 1184),
    (35, 1536),
    (39, 1920),
    (43, 2272),
];

impl BoundSet {
    /// Stored `(k, lower bound on cycles of a degree-k planar field)`.
    pub fn bounds(self) -> Vec<(u64, u64)> {
        HYPERBOLIC_BOUNDS
            .iter()
            .map(|&(k, h)| match (self, k) {
                (BoundSet::Hilbert, 8) => (k, 96),
                (BoundSet::Hilbert, 17) => (k, 384),
                _ => (k, h),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundRow {
    pub m: u64,
    pub bound: u64,
    pub provenance: String,
}

/// Lower bounds on the number of normally hyperbolic tori of degree-`m`
/// spatial fields, sorted by `m`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
}

impl BoundTable {
    fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.m.cmp(&b.m).then(b.bound.cmp(&a.bound)));
    }

    /// Best bound recorded for exactly degree `m`.
    pub fn bound_for(&self, m: u64) -> Option<u64> {
        self.rows.iter().filter(|r| r.m == m).map(|r| r.bound).max()
    }

    /// Adds `m_k >= tau_k` rows from the doubling sequence (values that fit
    /// in `u64`).
    pub fn with_sequence(mut self, m0: u64, tau0: u64, d: u64, k_max: u32) -> Self {
        for row in sequence_certificate(m0, tau0, d, k_max) {
            let (Some(m), Some(b)) = (u64_of(&row.m), u64_of(&row.tau)) else {
                break;
            };
            self.rows.push(BoundRow {
                m,
                bound: b,
                provenance: format!("doubling sequence m0={m0} tau0={tau0} d={d} k={}", row.k),
            });
        }
        self.sort();
        self
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["m", "bound", "provenance"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([r.m.to_string(), r.bound.to_string(), r.provenance.clone()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.rows).expect("plain data")
    }
}

fn u64_of(v: &BigUint) -> Option<u64> {
    let digits = v.to_u64_digits();
    match digits.len() {
        0 => Some(0),
        1 => Some(digits[0]),
        _ => None,
    }
}

/// Rows `N_h(2k+2) >= H(k)` and `N_h(2k+3) >= N_h(2k+2)` for each input
/// `(k, H(k))`, tagged with `label`.
pub fn theorem_b_table(bounds: &[(u64, u64)], label: &str) -> BoundTable {
    let mut t = BoundTable::default();
    for &(k, h) in bounds {
        t.rows.push(BoundRow {
            m: 2 * k + 2,
            bound: h,
            provenance: format!("{label} planar bound H({k}) >= {h}, lifted"),
        });
        t.rows.push(BoundRow {
            m: 2 * k + 3,
            bound: h,
            provenance: format!("monotone in degree from m={}", 2 * k + 2),
        });
    }
    t.sort();
    t
}

/// Table built from one of the stored bound sets.
pub fn stored_table(set: BoundSet) -> BoundTable {
    theorem_b_table(&set.bounds(), &format!("{set}"))
}

/// Sign pattern selecting one of the `2^n` open orthants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Octant(Vec<i8>);

impl Octant {
    pub fn new(signs: Vec<i8>) -> Result<Self, DoublingError> {
        if signs.is_empty() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(DoublingError::BadOctant(format!("{signs:?}")));
        }
        Ok(Octant(signs))
    }

    pub fn positive(n: usize) -> Self {
        Octant(vec![1; n])
    }

    /// All `2^n` octants, starting from the positive one.
    pub fn all(n: usize) -> Vec<Octant> {
        (0..1usize << n)
            .map(|bits| Octant((0..n).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect()))
            .collect()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.0.len() && p.iter().zip(&self.0).all(|(&x, &s)| x * s as f64 > 0.0)
    }
}

impl FromStr for Octant {
    type Err = DoublingError;
    fn from_str(s: &str) -> Result<Self, DoublingError> {
        let signs = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(DoublingError::BadOctant(s.to_string())),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        Octant::new(signs).map_err(|_| DoublingError::BadOctant(s.to_string()))
    }
}

impl fmt::Display for Octant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// `phi` restricted to the octant: `x_j -> x_j^2 - 1`.
pub fn octant_chart(octant: &Octant, p: &[f64]) -> Result<Vec<f64>, DoublingError> {
    if !octant.contains(p) {
        return Err(DoublingError::OffOctant {
            octant: octant.clone(),
            point: p.to_vec(),
        });
    }
    Ok(p.iter().map(|x| x * x - 1.0).collect())
}

/// Inverse of [`octant_chart`]: `q_j -> sign_j sqrt(q_j + 1)`.
pub fn octant_chart_inverse(octant: &Octant, q: &[f64]) -> Result<Vec<f64>, DoublingError> {
    if q.len() != octant.dim() {
        return Err(DoublingError::Dimension {
            expected: octant.dim(),
            found: q.len(),
        });
    }
    if q.iter().any(|&v| !(v > -1.0)) {
        return Err(DoublingError::OutsideDomain(q.to_vec()));
    }
    Ok(q
        .iter()
        .zip(octant.signs())
        .map(|(v, &s)| s as f64 * (v + 1.0).sqrt())
        .collect())
}

/// `+1` when pulled-back orbits in the octant follow the original orbits
/// forward in time, `-1` when they are traversed backward.
pub fn octant_time_orientation(octant: &Octant) -> i8 {
    octant.signs().iter().product()
}

/// Expected degree after one doubling, `2 m + d`.
pub fn doubled_degree(m: Degree, d: usize) -> Degree {
    match m {
        Degree::NegInfinity => Degree::NegInfinity,
        Degree::Finite(m) => Degree::Finite(2 * m + d as u32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::polyalg::random::random_poly_of_degree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(texts: &[&str]) -> SpatialField {
        let names = crate::polyalg::default_var_names(texts.len());
        SpatialField::new(
            texts.iter().map(|t| Poly::parse(t, &names).unwrap()).collect(),
            false,
        )
        .unwrap()
    }

    #[test]
    fn constant_component_pulls_back_to_cofactor() {
        let x1 = pullback_double(&field(&["1", "0", "0"]), 2).unwrap();
        let v = ["x", "y", "z"];
        assert_eq!(x1.components()[0], Poly::parse("y*z", &v).unwrap());
        assert!(x1.components()[1].is_zero() && x1.components()[2].is_zero());
    }

    #[test]
    fn degree_six_doubles_to_fourteen() {
        let x0 = field(&["x^6 + y", "z^3*x^3 - 1", "y^2"]);
        let step = DoublingStep::new(x0, 2, BigUint::from(4u32)).unwrap();
        assert_eq!((step.degree_in, step.degree_out), (6, 14));
        assert_eq!(step.tori_out, BigUint::from(32u32));
        assert!(verify_pullback_identity(&step.x0, &step.x1, 2).unwrap().holds());
        let next = step.next().unwrap();
        assert_eq!(next.degree_out, 30);
        assert_eq!(next.tori_out, BigUint::from(256u32));
    }

    #[test]
    fn random_fields_satisfy_identity_and_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d, m) in [(1usize, 5u32), (2, 4), (3, 3)] {
            let n = d + 1;
            let comps = (0..n).map(|_| random_poly_of_degree(&mut rng, n, m, 5)).collect();
            let x0 = SpatialField::new(comps, false).unwrap();
            let x1 = pullback_double(&x0, d).unwrap();
            assert!(verify_pullback_identity(&x0, &x1, d).unwrap().holds());
            assert_eq!(x1.degree(), doubled_degree(x0.degree(), d));
        }
    }

    #[test]
    fn perturbed_pullback_is_rejected() {
        let x0 = field(&["x^2 - y*z", "z + 1", "x*y*z"]);
        let x1 = pullback_double(&x0, 2).unwrap();
        let mut comps = x1.components().to_vec();
        comps[1] = &comps[1] + &Poly::one(3);
        let bad = SpatialField::new(comps, false).unwrap();
        match verify_pullback_identity(&x0, &bad, 2).unwrap() {
            PullbackCheck::Mismatch { component, residual } => {
                assert_eq!(component, 1);
                assert_eq!(residual, Poly::parse("2*y", &["x", "y", "z"]).unwrap());
            }
            PullbackCheck::Holds => panic!("mutation not detected"),
        }
    }

    #[test]
    fn pullback_rejects_bad_input() {
        let with_eps = SpatialField::new(vec![Poly::one(3), Poly::one(3)], true).unwrap();
        assert_eq!(pullback_double(&with_eps, 1).unwrap_err(), DoublingError::HasParameter);
        assert!(matches!(
            pullback_double(&field(&["1", "1"]), 2),
            Err(DoublingError::Dimension { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn sequence_values() {
        assert_eq!(sequence(6, 4, 2, 1), (14u32.into(), 32u32.into()));
        assert_eq!(sequence(6, 4, 2, 0), (6u32.into(), 4u32.into()));
        for k in 0..=20u32 {
            let (m, tau) = sequence(6, 4, 2, k);
            assert_eq!(m, (BigUint::from(2u32) << (k + 2)) - 2u32);
            assert_eq!(tau, BigUint::one() << (2 + 3 * k));
        }
        let rows = sequence_certificate(6, 4, 2, 20);
        assert!(rows.iter().all(|r| r.recurrence_ok && r.cubic_ok == Some(true)));
        assert!(sequence_certificate(5, 3, 3, 20).iter().all(|r| r.recurrence_ok && r.cubic_ok.is_none()));
    }

    #[test]
    fn stored_bounds_produce_expected_rows() {
        let t = theorem_b_table(&[(2, 4)], "test");
        assert_eq!(t.bound_for(6), Some(4));
        assert_eq!(t.bound_for(7), Some(4));
        let h = stored_table(BoundSet::Hyperbolic);
        assert_eq!(h.bound_for(8), Some(13));
        assert_eq!(h.bound_for(88), Some(2272));
        assert_eq!(h.bound_for(89), Some(2272));
        assert_eq!(h.bound_for(18), Some(89));
        assert_eq!(h.bound_for(36), Some(348));
        let hil = stored_table(BoundSet::Hilbert);
        assert_eq!(hil.bound_for(18), Some(96));
        assert_eq!(hil.bound_for(36), Some(384));
        assert!(h.rows.windows(2).all(|w| w[0].m <= w[1].m));
        assert_eq!(h.rows.len(), 32);
    }

    #[test]
    fn csv_and_json_layout() {
        let t = theorem_b_table(&[(3, 13)], "hyperbolic");
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("m,bound,provenance"));
        assert_eq!(lines.next(), Some("8,13,\"hyperbolic planar bound H(3) >= 13, lifted\""));
        assert_eq!(t.to_json()[1]["m"], 9);
        let seq = BoundTable::default().with_sequence(6, 4, 2, 3);
        assert_eq!(seq.bound_for(14), Some(32));
        assert_eq!(seq.bound_for(62), Some(2048));
    }

    #[test]
    fn octant_charts() {
        let pos = Octant::positive(3);
        assert_eq!(octant_chart(&pos, &[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
        let o: Octant = "-+-".parse().unwrap();
        assert_eq!(octant_chart_inverse(&o, &[0.0, 0.0, 0.0]).unwrap(), vec![-1.0, 1.0, -1.0]);
        assert!(octant_chart(&pos, &[0.0, 1.0, 1.0]).is_err());
        assert!(octant_chart(&o, &[1.0, 1.0, 1.0]).is_err());
        assert!(octant_chart_inverse(&o, &[-1.0, 0.0, 0.0]).is_err());
        assert!("+x+".parse::<Octant>().is_err());
        assert!("".parse::<Octant>().is_err());
        assert_eq!(o.to_string(), "-+-");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        for oct in Octant::all(3) {
            for _ in 0..20 {
                let q: Vec<f64> = (0..3).map(|_| rng.random_range(-0.99..5.0)).collect();
                let p = octant_chart_inverse(&oct, &q).unwrap();
                let back = octant_chart(&oct, &p).unwrap();
                assert!(q.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-14));
            }
        }
    }

    #[test]
    fn time_orientation_counts() {
        assert_eq!(octant_time_orientation(&"+++".parse().unwrap()), 1);
        assert_eq!(octant_time_orientation(&"-++".parse().unwrap()), -1);
        let signs: Vec<i8> = Octant::all(3).iter().map(octant_time_orientation).collect();
        assert_eq!(signs.iter().filter(|&&s| s == 1).count(), 4);
        assert_eq!(signs.iter().filter(|&&s| s == -1).count(), 4);
    }
}

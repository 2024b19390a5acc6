use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::Poly;

/// Nested Horner form of a [`Poly`] with `f64` coefficients.
///
/// Variable `k` is factored out at depth `k`; the coefficients at each depth
/// are Horner forms in the remaining variables.
#[derive(Clone, Debug)]
pub struct HornerPoly {
    nvars: usize,
    root: Node,
}

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    /// Exponents strictly descending.
    Var { var: usize, terms: Vec<(u32, Node)> },
}

impl HornerPoly {
    pub fn new(p: &Poly) -> Self {
        let terms: Vec<(Vec<u32>, f64)> = p
            .terms()
            .map(|(m, c)| (m.exps().to_vec(), c.to_f64().unwrap_or(f64::NAN)))
            .collect();
        HornerPoly {
            nvars: p.nvars(),
            root: build(terms, 0, p.nvars()),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Panics if `point` is shorter than `nvars`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        eval(&self.root, point)
    }
}

fn build(terms: Vec<(Vec<u32>, f64)>, var: usize, nvars: usize) -> Node {
    if terms.is_empty() {
        return Node::Const(0.0);
    }
    if var == nvars {
        return Node::Const(terms.iter().map(|(_, c)| c).sum());
    }
    if terms.iter().all(|(e, _)| e[var] == 0) {
        return build(terms, var + 1, nvars);
    }
    let mut groups: BTreeMap<u32, Vec<(Vec<u32>, f64)>> = BTreeMap::new();
    for (e, c) in terms {
        groups.entry(e[var]).or_default().push((e, c));
    }
    let terms = groups
        .into_iter()
        .rev()
        .map(|(k, g)| (k, build(g, var + 1, nvars)))
        .collect();
    Node::Var { var, terms }
}

fn eval(node: &Node, point: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var { var, terms } => {
            let x = point[*var];
            let mut acc = 0.0;
            let mut prev = terms[0].0;
            for (k, sub) in terms {
                acc = acc * x.powi((prev - k) as i32) + eval(sub, point);
                prev = *k;
            }
            acc * x.powi(prev as i32)
        }
    }
}

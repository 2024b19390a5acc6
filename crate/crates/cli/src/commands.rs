use std::fs;
use std::io::Write;
use std::path::Path;

use num_bigint::BigUint;
use serde::Deserialize;
use serde_json::json;
use torusforge::doubling::{
    stored_table, theorem_b_table, verify_pullback_identity, BoundSet, DoublingStep, PullbackCheck,
};
use torusforge::polyalg::{Poly, Rational};
use torusforge::vfields::{lift_to_3d, SpatialField, SystemFile};

use crate::args::{Emit, GlobalArgs};
use crate::output::{file_stem, say, OutDir};
use crate::RunError;

pub(crate) fn read_system(path: &Path) -> Result<(String, SystemFile), RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::input(path, e))?;
    let sys = SystemFile::from_json_str(&text).map_err(|e| RunError::input(path, e))?;
    Ok((text, sys))
}

/// Exact value of `1/50`, `0.02`, `-3` and the like.
pub(crate) fn parse_rational(s: &str) -> Result<Rational, RunError> {
    Poly::parse(s, &[] as &[&str])
        .ok()
        .and_then(|p| p.as_constant())
        .ok_or_else(|| RunError::Argument(format!("`{s}` is not a rational number")))
}

pub(crate) fn lift(input: &Path, out: &OutDir, sink: &mut dyn Write) -> Result<(), RunError> {
    let (_, sys) = read_system(input)?;
    let SystemFile::Planar { field, .. } = sys else {
        return Err(RunError::input(input, "expected a planar system"));
    };
    let f3 = lift_to_3d(&field);
    let text = SystemFile::Spatial(f3.clone()).to_json_string();
    // The written file must read back as the same field.
    match SystemFile::from_json_str(&text) {
        Ok(SystemFile::Spatial(back)) if back == f3 => {}
        _ => return Err(RunError::Invariant("lifted field does not survive a round trip".into())),
    }
    let path = out.write(&format!("{}.lift.json", file_stem(input)), &text)?;
    say(
        sink,
        &json!({
            "command": "lift",
            "input": input,
            "output": path,
            "planar_degree": field.degree().to_string(),
            "degree": f3.degree().to_string(),
        }),
    )
}

pub(crate) struct DoubleOptions {
    pub k: u32,
    pub eps: Option<String>,
    pub shift: Vec<String>,
    pub tori: u64,
    pub max_terms: usize,
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monomials of degree at most `2 m + d` in `n` variables, per component.
fn term_bound(f: &SpatialField) -> f64 {
    let n = f.nspace() as u64;
    let m = f.degree().finite().unwrap_or(0) as u64;
    n as f64 * binomial(2 * m + (n - 1) + n, n)
}

pub(crate) fn double(
    input: &Path,
    opts: &DoubleOptions,
    out: &OutDir,
    sink: &mut dyn Write,
) -> Result<(), RunError> {
    let (text, sys) = read_system(input)?;
    let SystemFile::Spatial(mut field) = sys else {
        return Err(RunError::input(input, "expected a spatial system; lift it first"));
    };
    let stem = file_stem(input);
    let mut touched = false;
    match (&opts.eps, field.has_eps()) {
        (Some(e), true) => {
            field = field.bind_eps(&parse_rational(e)?);
            touched = true;
        }
        (None, true) if opts.k > 0 => {
            return Err(RunError::Argument(
                "the field depends on eps; bind it with --eps".into(),
            ))
        }
        (Some(_), false) => log::warn!("--eps ignored: the field has no parameter"),
        _ => {}
    }
    if !opts.shift.is_empty() {
        if opts.shift.len() != field.nspace() {
            return Err(RunError::Argument(format!(
                "--shift needs {} entries, got {}",
                field.nspace(),
                opts.shift.len()
            )));
        }
        let shift = opts
            .shift
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>, _>>()?;
        field = field
            .translate(&shift)
            .map_err(|e| RunError::Argument(e.to_string()))?;
        touched = true;
    }
    let d = field.nspace() - 1;
    let out_name = format!("{stem}.double{}.json", opts.k);
    if opts.k == 0 && !touched {
        let path = out.write(&out_name, &text)?;
        return say(sink, &json!({ "command": "double", "k": 0, "output": path }));
    }
    let mut tori = BigUint::from(opts.tori);
    let mut chain = Vec::new();
    for step in 1..=opts.k {
        let bound = term_bound(&field);
        if bound > opts.max_terms as f64 {
            return Err(RunError::Argument(format!(
                "step {step} could produce up to {bound:.3e} terms, above --max-terms {}",
                opts.max_terms
            )));
        }
        let st = DoublingStep::new(field, d, tori).map_err(|e| RunError::Argument(e.to_string()))?;
        match verify_pullback_identity(&st.x0, &st.x1, d)
            .map_err(|e| RunError::Invariant(e.to_string()))?
        {
            PullbackCheck::Holds => {}
            PullbackCheck::Mismatch { component, .. } => {
                return Err(RunError::Invariant(format!(
                    "pullback identity fails in component {component} at step {step}"
                )))
            }
        }
        let record = json!({
            "command": "double",
            "step": step,
            "d": d,
            "degree_in": st.degree_in,
            "degree_out": st.degree_out,
            "tori_in": st.tori_in.to_string(),
            "tori_out": st.tori_out.to_string(),
            "terms": st.x1.components().iter().map(|c| c.len()).sum::<usize>(),
            "identity": "holds",
        });
        say(sink, &record)?;
        chain.push(record);
        tori = st.tori_out;
        field = st.x1;
    }
    let path = out.write(&out_name, &SystemFile::Spatial(field).to_json_string())?;
    out.write(
        &format!("{stem}.chain.json"),
        &serde_json::to_string_pretty(&chain).expect("plain data"),
    )?;
    say(sink, &json!({ "command": "double", "k": opts.k, "output": path, "tori": tori.to_string() }))
}

#[derive(Deserialize)]
struct BoundRecord {
    k: u64,
    bound: u64,
}

fn read_bounds(path: &Path) -> Result<Vec<(u64, u64)>, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::input(path, e))?;
    let rows: Vec<BoundRecord> = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| RunError::input(path, e))?
    } else {
        csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| RunError::input(path, e))?
    };
    if rows.is_empty() {
        return Err(RunError::input(path, "no bounds"));
    }
    Ok(rows.into_iter().map(|r| (r.k, r.bound)).collect())
}

pub(crate) fn tables(
    bounds: Option<&Path>,
    set: BoundSet,
    sequence: u32,
    global: &GlobalArgs,
    out: &OutDir,
    sink: &mut dyn Write,
) -> Result<(), RunError> {
    let mut table = match bounds {
        Some(p) => theorem_b_table(&read_bounds(p)?, &file_stem(p)),
        None => stored_table(set),
    };
    if sequence > 0 {
        table = table.with_sequence(6, 4, 2, sequence);
    }
    let csv_path = out.write("bounds.csv", &table.to_csv())?;
    if global.emits(Emit::Json) {
        out.write(
            "bounds.json",
            &serde_json::to_string_pretty(&table.to_json()).expect("plain data"),
        )?;
    }
    say(
        sink,
        &json!({ "command": "tables", "rows": table.rows.len(), "csv": csv_path }),
    )
}

use std::io::Write;
use std::path::Path;

use num_traits::ToPrimitive;
use serde_json::json;
use torusforge::cycles::{cycle_in_k, find_limit_cycle, CycleOptions, LimitCycle, Section};
use torusforge::doubling::{pullback_double, Octant};
use torusforge::polyalg::{int, Rational};
use torusforge::tori::svg::{portrait, Layer};
use torusforge::tori::{
    epsilon_sweep, predicted_curve, verify_doubled_tori, DetectParams, InvariantCurve, Status,
};
use torusforge::vfields::{lift_to_3d, CycleGuess, PlanarField, SystemFile};

use crate::args::{Emit, GlobalArgs};
use crate::commands::{parse_rational, read_system};
use crate::output::{JsonLines, OutDir};
use crate::RunError;

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn parse_octants(spec: &str) -> Result<Vec<Octant>, RunError> {
    if spec == "all" {
        return Ok(Octant::all(3));
    }
    spec.split(',')
        .map(|s| {
            let o: Octant = s.trim().parse().map_err(|e| RunError::Argument(format!("{e}")))?;
            if o.dim() != 3 {
                return Err(RunError::Argument(format!("octant `{s}` needs three signs")));
            }
            Ok(o)
        })
        .collect()
}

fn default_guess(f: &PlanarField) -> CycleGuess {
    let k = &f.region;
    CycleGuess {
        point: [
            to_f64(&k.b) / 2.0,
            (to_f64(&k.alpha) + to_f64(&k.beta)) / 2.0,
        ],
        normal: [0.0, 1.0],
    }
}

/// Cycles reached from the guesses, without repeats. Failures are logged to
/// the report.
fn find_cycles(
    field: &PlanarField,
    guesses: &[CycleGuess],
    opts: &CycleOptions,
    report: &mut JsonLines,
    sink: &mut dyn Write,
) -> Result<Vec<LimitCycle>, RunError> {
    let mut cycles: Vec<LimitCycle> = Vec::new();
    for g in guesses {
        let found = Section::new(g.point, g.normal)
            .and_then(|sec| find_limit_cycle(field, g.point, &sec, opts))
            .and_then(|c| cycle_in_k(&c, &field.region).map(|inside| (c, inside)));
        let line = match found {
            Ok((c, inside)) => {
                let line = json!({
                    "kind": "cycle",
                    "guess": g.point,
                    "fixed_point": c.fixed_point,
                    "period": c.period,
                    "multiplier": c.multiplier,
                    "stability": c.stability,
                    "in_k": inside,
                });
                let repeat = cycles.iter().any(|o| {
                    (o.period - c.period).abs() < 1e-6
                        && c.samples.iter().any(|s| {
                            (s.u - o.fixed_point[0]).hypot(s.v - o.fixed_point[1]) < 1e-6
                        })
                });
                if inside && !repeat {
                    cycles.push(c);
                }
                line
            }
            Err(e) => json!({ "kind": "cycle", "guess": g.point, "error": e.to_string() }),
        };
        report.emit(&line, sink)?;
    }
    Ok(cycles)
}

fn write_curve_artifacts(
    out: &OutDir,
    global: &GlobalArgs,
    name: &str,
    predicted: &InvariantCurve,
    found: Option<&InvariantCurve>,
    transient: &[[f64; 2]],
) -> Result<(), RunError> {
    if let (true, Some(c)) = (global.emits(Emit::Csv), found) {
        out.write(&format!("{name}.csv"), &c.to_csv(256))?;
    }
    if global.emits(Emit::Svg) {
        let pred = predicted.sample(256);
        let det = found.map(|c| c.sample(256)).unwrap_or_default();
        let mut layers = vec![Layer {
            label: "predicted",
            color: "#888888",
            points: &pred,
            closed: true,
        }];
        if !transient.is_empty() {
            layers.push(Layer {
                label: "orbit",
                color: "#1f77b4",
                points: transient,
                closed: false,
            });
        }
        if !det.is_empty() {
            layers.push(Layer {
                label: "detected",
                color: "#d62728",
                points: &det,
                closed: true,
            });
        }
        out.write(&format!("{name}.svg"), &portrait(name, &layers))?;
    }
    Ok(())
}

/// Smallest integer strictly above the torus extent.
fn auto_shift(c: &InvariantCurve) -> i64 {
    let bb = c.bounding_box();
    let reach = bb[1].max(bb[2].abs()).max(bb[3].abs());
    reach.floor() as i64 + 1
}

pub(crate) fn verify(
    input: &Path,
    eps: &[String],
    octants: Option<&str>,
    shift: Option<i64>,
    global: &GlobalArgs,
    out: &OutDir,
    sink: &mut dyn Write,
) -> Result<(), RunError> {
    let (_, sys) = read_system(input)?;
    let SystemFile::Planar { field, guesses } = sys else {
        return Err(RunError::input(input, "expected a planar system"));
    };
    let eps_exact = eps
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<Rational>, _>>()?;
    if let Some(bad) = eps_exact.iter().position(|e| *e <= int(0)) {
        return Err(RunError::Argument(format!("eps must be positive, got {}", eps[bad])));
    }
    let eps_f: Vec<f64> = eps_exact.iter().map(to_f64).collect();
    let octants = octants.map(parse_octants).transpose()?;
    let integrator = global.integrator()?;
    let opts = CycleOptions {
        integrator: integrator.clone(),
        ..CycleOptions::default()
    };
    let params = DetectParams {
        integrator,
        ..DetectParams::default()
    };
    let guesses = if guesses.is_empty() {
        vec![default_guess(&field)]
    } else {
        guesses
    };

    let mut report = out.lines("reports.jsonl")?;
    let cycles = find_cycles(&field, &guesses, &opts, &mut report, sink)?;
    let f3 = lift_to_3d(&field);
    let (mut total, mut certified) = (0usize, 0usize);
    for (i, cycle) in cycles.iter().enumerate() {
        if global.emits(Emit::Json) {
            out.write(
                &format!("cycle{i}.json"),
                &serde_json::to_string_pretty(&cycle.to_json()).expect("plain data"),
            )?;
        }
        let predicted = match predicted_curve(cycle, params.modes) {
            Ok(p) => p,
            Err(e) => {
                total += eps_f.len();
                report.emit(&json!({ "kind": "torus", "cycle": i, "error": e.to_string() }), sink)?;
                continue;
            }
        };
        let sweep = epsilon_sweep(&f3, cycle, &eps_f, &params)
            .map_err(|e| RunError::Invariant(e.to_string()))?;
        for r in &sweep.reports {
            total += 1;
            certified += r.certified() as usize;
            let mut line = serde_json::to_value(r).expect("plain data");
            line["kind"] = json!("torus");
            line["cycle"] = json!(i);
            report.emit(&line, sink)?;
            write_curve_artifacts(
                out,
                global,
                &format!("cycle{i}_eps{}", r.eps),
                &predicted,
                r.curve.as_ref(),
                &r.transient_points,
            )?;
        }
        report.emit(
            &json!({
                "kind": "sweep",
                "cycle": i,
                "slope": sweep.slope,
                "correlation": sweep.correlation,
            }),
            sink,
        )?;

        if let (Some(octs), Some(e0)) = (&octants, eps_exact.first()) {
            let c = shift.unwrap_or_else(|| auto_shift(&predicted));
            let x1 = f3
                .bind_eps(e0)
                .translate(&[int(c), int(c), int(c)])
                .map_err(|e| RunError::Invariant(e.to_string()))
                .and_then(|x0| pullback_double(&x0, 2).map_err(|e| RunError::Invariant(e.to_string())))?;
            for r in verify_doubled_tori(&x1, [c as f64; 3], &predicted, cycle.stability, octs, &params)
            {
                total += 1;
                certified += (r.status == Status::Certified) as usize;
                let mut line = serde_json::to_value(&r).expect("plain data");
                line["kind"] = json!("octant");
                line["cycle"] = json!(i);
                line["eps"] = json!(eps_f[0]);
                line["shift"] = json!(c);
                report.emit(&line, sink)?;
            }
        }
    }
    report.emit(
        &json!({ "kind": "summary", "cycles": cycles.len(), "certified": certified, "total": total }),
        sink,
    )?;
    if cycles.is_empty() {
        return Err(RunError::Certification("no hyperbolic cycle found inside K".into()));
    }
    if certified < total {
        return Err(RunError::Certification(format!("{certified} of {total} tori certified")));
    }
    Ok(())
}

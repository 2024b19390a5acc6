use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use torusforge::cycles::{find_limit_cycle, reference_circle_system, reference_section, CycleOptions};
use torusforge::doubling::{pullback_double, sequence_certificate, verify_pullback_identity};
use torusforge::polyalg::random::random_poly;
use torusforge::tori::{CartesianReturnMap, Direction, SectionMap, StroboscopicMap};
use torusforge::vfields::{guiding_conjugacy_check, lift_to_3d, PlanarField, Region, SpatialField};

use crate::args::GlobalArgs;
use crate::output::say;
use crate::RunError;

struct Outcome {
    name: &'static str,
    exact: bool,
    ok: bool,
    detail: String,
}

fn pullback(rng: &mut ChaCha8Rng, trials: usize) -> Outcome {
    let mut bad = 0;
    for _ in 0..trials {
        let d = rng.random_range(1..=3usize);
        let comps = (0..=d).map(|_| random_poly(rng, d + 1, 4, 4)).collect();
        let x0 = SpatialField::new(comps, false).expect("consistent arity");
        let holds = pullback_double(&x0, d)
            .and_then(|x1| verify_pullback_identity(&x0, &x1, d))
            .is_ok_and(|c| c.holds());
        bad += !holds as usize;
    }
    Outcome {
        name: "pullback_identity",
        exact: true,
        ok: bad == 0,
        detail: format!("{bad} of {trials} random fields fail"),
    }
}

fn sequences() -> Outcome {
    let mut ok = sequence_certificate(6, 4, 2, 20)
        .iter()
        .all(|r| r.recurrence_ok && r.cubic_ok == Some(true));
    for d in 1..=5 {
        ok &= sequence_certificate(2 * d + 2, 1, d, 20).iter().all(|r| r.recurrence_ok);
    }
    Outcome {
        name: "sequence_certificate",
        exact: true,
        ok,
        detail: "k <= 20, d <= 5".into(),
    }
}

fn conjugacy(rng: &mut ChaCha8Rng, trials: usize) -> Outcome {
    let bad = (0..trials)
        .filter(|_| {
            let f = PlanarField::new(random_poly(rng, 2, 6, 6), random_poly(rng, 2, 6, 6), Region::default())
                .expect("planar arity");
            !guiding_conjugacy_check(&f).holds()
        })
        .count();
    Outcome {
        name: "guiding_conjugacy",
        exact: true,
        ok: bad == 0,
        detail: format!("{bad} of {trials} random systems fail"),
    }
}

fn floquet(opts: &CycleOptions) -> Outcome {
    let want = (-4.0 * PI).exp();
    match find_limit_cycle(&reference_circle_system(), [2.5, 0.0], &reference_section(), opts) {
        Ok(c) => Outcome {
            name: "floquet_reference",
            exact: false,
            ok: (c.period - TAU).abs() <= 1e-8 && ((c.multiplier - want) / want).abs() <= 1e-3,
            detail: format!("T = {:.12}, multiplier = {:.6e}", c.period, c.multiplier),
        },
        Err(e) => Outcome {
            name: "floquet_reference",
            exact: false,
            ok: false,
            detail: e.to_string(),
        },
    }
}

fn section_maps(rng: &mut ChaCha8Rng) -> Outcome {
    let f3 = lift_to_3d(&reference_circle_system());
    let (strobe, cart) = match (
        StroboscopicMap::new(&f3, 0.05, Direction::Forward),
        CartesianReturnMap::new(&f3, 0.05, Direction::Forward),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return Outcome {
                name: "section_maps_agree",
                exact: false,
                ok: false,
                detail: e.to_string(),
            }
        }
    };
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let p = [rng.random_range(1.0..1.7), rng.random_range(-0.9..0.9)];
        worst = match (strobe.apply(p), cart.apply(p)) {
            (Ok(a), Ok(b)) => worst.max((a[0] - b[0]).hypot(a[1] - b[1])),
            _ => f64::INFINITY,
        };
    }
    Outcome {
        name: "section_maps_agree",
        exact: false,
        ok: worst <= 1e-8,
        detail: format!("max difference {worst:.3e}"),
    }
}

pub(crate) fn selftest(trials: usize, global: &GlobalArgs, sink: &mut dyn Write) -> Result<(), RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
    let opts = CycleOptions {
        integrator: global.integrator()?,
        ..CycleOptions::default()
    };
    let results = [
        pullback(&mut rng, trials),
        sequences(),
        conjugacy(&mut rng, trials),
        floquet(&opts),
        section_maps(&mut rng),
    ];
    for r in &results {
        say(
            sink,
            &json!({ "kind": "selftest", "check": r.name, "ok": r.ok, "detail": r.detail }),
        )?;
    }
    if let Some(r) = results.iter().find(|r| !r.ok && r.exact) {
        return Err(RunError::Invariant(format!("{}: {}", r.name, r.detail)));
    }
    if let Some(r) = results.iter().find(|r| !r.ok) {
        return Err(RunError::Certification(format!("{}: {}", r.name, r.detail)));
    }
    Ok(())
}

//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use liveclock::analysis::{
    admitted_by_window, face_diagonals, find_euler_brick, stripes_feasible, sync_report, Feasibility, FeasibilityInput,
};
use liveclock::control::echo_count;
use liveclock::engine::{run, Simulation};
use liveclock::scenario::{parse_scenario, Scenario};
use liveclock::spacetime::{arrival_time, Vec3 as V3};
use liveclock::{PropagationModel, Vec3, Worldline};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> Scenario {
    parse_scenario(scenarios().join(name)).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn phase_gate() -> Outcome {
    let s = scenario("phase_gate.toml");
    let trace = run(&s).map_err(|e| e.to_string())?;
    let mut n = 0;
    for r in trace.arrivals() {
        let eta = trace.meta.etas[&r.node_id];
        ensure(
            r.accepted == Some(admitted_by_window(r, eta)),
            format!(
                "arrival at t={} on {:?} disagrees with the window rule",
                r.time_s, r.channel
            ),
        )?;
        n += 1;
    }
    let accepted = trace.arrivals().filter(|r| r.accepted == Some(true)).count();
    ensure(n >= 10_000, format!("only {n} arrivals"))?;
    ensure(accepted > 0 && accepted < n, "run must exercise both outcomes")?;
    Ok(format!("{n} arrivals, {accepted} accepted, sets equal"))
}

/// Runs `base` under seeds `0..seeds` on all cores and counts runs for which
/// `pred` holds on the report.
fn count_seeds(base: &Scenario, seeds: u64, pred: fn(&liveclock::analysis::SyncReport) -> bool) -> Result<u64, String> {
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()) as u64;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || -> Result<u64, String> {
                    let mut hits = 0;
                    for seed in (w..seeds).step_by(workers as usize) {
                        let mut s = base.clone();
                        s.seed = seed;
                        let trace = run(&s).map_err(|e| e.to_string())?;
                        hits += pred(&sync_report(&trace)) as u64;
                    }
                    Ok(hits)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| "worker panicked".to_string())?)
            .sum()
    })
}

fn divergence_vs_steering() -> Outcome {
    const SEEDS: u64 = 200;
    let unsteered = scenario("unsteered_pair.toml");
    let steered = scenario("steered_pair.toml");
    for s in [&unsteered, &steered] {
        ensure(s.horizon == 1e4, "horizon must be 10^4 cycles")?;
        ensure(
            s.nodes.iter().all(|n| n.drift.rw_fm_sigma == 1e-4),
            "rw_fm_sigma must be 1e-4",
        )?;
    }
    let diverged = count_seeds(&unsteered, SEEDS, |r| {
        r.channels.iter().any(|c| !c.locked) && r.channels.iter().any(|c| c.drop_rate > 0.0)
    })?;
    let held = count_seeds(&steered, SEEDS, |r| {
        r.channels
            .iter()
            .all(|c| c.locked && c.lock_time.is_some_and(|t| t <= 500.0))
    })?;
    let need = (0.95 * SEEDS as f64).ceil() as u64;
    let detail = format!("unsteered diverged {diverged}/{SEEDS}, steered locked by 500 and held {held}/{SEEDS}");
    ensure(diverged >= need && held >= need, detail.clone())?;
    Ok(detail)
}

fn einstein_steering() -> Outcome {
    let s = scenario("einstein_pair.toml");
    let trace = run(&s).map_err(|e| e.to_string())?;
    let report = sync_report(&trace);
    ensure(report.channels.iter().all(|c| c.locked), "pair did not lock")?;
    let pair = report.pair("A", "B").ok_or("no residuals recorded")?;
    let settled = pair.settled_max_abs_residual_s * s.nominal_rate;
    let last = pair.last_residual_s.abs() * s.nominal_rate;
    let detail =
        format!("initial offset 0.15 cycles, max |residual| over second half {settled:.2e} cycles, last {last:.2e}");
    ensure(settled < 1e-3, detail.clone())?;
    Ok(detail)
}

fn sagnac() -> Outcome {
    let s = scenario("sagnac_ring.toml");
    let trace = run(&s).map_err(|e| e.to_string())?;
    let report = sync_report(&trace);
    let sag = report.sagnac.ok_or("no loop asymmetry computed")?;
    let bad: Vec<_> = report
        .channels
        .iter()
        .filter(|c| !c.locked)
        .map(|c| c.channel.as_str())
        .collect();
    let post_lock_drops: u64 = report
        .channels
        .iter()
        .map(|c| if c.locked { 0 } else { c.dropped })
        .sum();
    let detail = format!(
        "measured {:.4e} s, predicted {:.4e} s, ratio {:.4}, {} channels locked, post-lock drops {post_lock_drops}",
        sag.measured,
        sag.predicted,
        sag.ratio(),
        report.channels.len() - bad.len()
    );
    ensure((sag.ratio() - 1.0).abs() <= 0.05, detail.clone())?;
    ensure(bad.is_empty(), format!("{detail}; unlocked: {bad:?}"))?;
    Ok(detail)
}

fn stripes_and_brick() -> Outcome {
    let cube = stripes_feasible(&FeasibilityInput::unit_cube(true)).map_err(|e| e.to_string())?;
    let Feasibility::Infeasible {
        witness: [a, b],
        squared_length,
    } = cube
    else {
        return Err(format!("unit cube with face diagonals: {cube:?}"));
    };
    let g = FeasibilityInput::unit_cube(true);
    let d: Vec<i64> = (0..3).map(|i| (g.vertices[a][i] - g.vertices[b][i]).abs()).collect();
    ensure(
        d.iter().sum::<i64>() == 2 && squared_length == 2,
        format!("witness {a}-{b} is not a face diagonal"),
    )?;

    let brick = stripes_feasible(&FeasibilityInput::brick(44, 117, 240, true)).map_err(|e| e.to_string())?;
    ensure(
        matches!(brick, Feasibility::Feasible { .. }),
        format!("44x117x240: {brick:?}"),
    )?;

    let found = find_euler_brick(300);
    ensure(
        found == Some((44, 117, 240)),
        format!("find_euler_brick(300) = {found:?}"),
    )?;
    let diags = face_diagonals(44, 117, 240);
    ensure(diags == Some((125, 267, 244)), format!("face diagonals {diags:?}"))?;
    for (x, y, k) in [(44u64, 117u64, 125u64), (44, 240, 244), (117, 240, 267)] {
        ensure(x * x + y * y == k * k, format!("{x}^2 + {y}^2 != {k}^2"))?;
    }
    Ok(format!("cube witness {a}-{b}, brick {brick:?}, diagonals 125 244 267"))
}

/// The echo schedule in integer tenths of a cycle with ideal aligned clocks.
fn enumerated_echo_tenths(m: i64, delay: i64) -> i64 {
    let b_rx = 10 * m + delay;
    let b_tx = (b_rx + 9).div_euclid(10) * 10;
    b_tx + delay - 10 * m
}

fn echo() -> Outcome {
    let s = scenario("echo_pair.toml");
    let mut sim = Simulation::new(&s).map_err(|e| e.to_string())?;
    sim.run(&mut Vec::new()).map_err(|e| e.to_string())?;
    let g = sim.graph();
    let (fwd, back) = (g.channel(0).pairs(), g.channel(1).pairs());
    let mut worst = 0.0f64;
    for m in 0..20 {
        let delta = echo_count(&fwd, &back, m, 100.0).map_err(|e| e.to_string())?;
        let oracle = enumerated_echo_tenths(m, 3) as f64 / 10.0;
        ensure(oracle == 1.3, format!("oracle {oracle}"))?;
        worst = worst.max((delta - oracle).abs());
    }
    ensure(worst < 1e-12, format!("max deviation from 1.3 is {worst:e}"))?;
    Ok(format!(
        "echo count 1.3 for 20 transmissions, max deviation {worst:.1e}"
    ))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_liveclock");
    let tmp = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.join(format!("run{k}"));
        let _ = std::fs::remove_dir_all(&out);
        let status = Command::new(bin)
            .args(["run", "--seed", "7", "--scenario"])
            .arg(scenarios().join("two_node.toml"))
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            status.status.success(),
            String::from_utf8_lossy(&status.stderr).into_owned(),
        )?;
        outputs.push(std::fs::read(out.join("two_node-seed7.csv")).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], "trace files differ")?;
    ensure(!outputs[0].is_empty(), "empty trace")?;
    Ok(format!("two runs, {} identical bytes", outputs[0].len()))
}

fn bisect(emit: Vec3, t_e: f64, rx: &Worldline, c: f64, vmax: f64) -> f64 {
    let dist = |tau: f64| (rx.position_at(t_e + tau) - emit).norm();
    let (mut lo, mut hi) = (0.0, dist(0.0) / (c - vmax));
    while hi - lo > 1e-18 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if c * mid < dist(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    t_e + 0.5 * (lo + hi)
}

fn light_cone() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let c = 1.0;
    let model = PropagationModel::with_speed(c);
    let point = |rng: &mut rand_chacha::ChaCha8Rng, s: f64| {
        V3::new(
            rng.random_range(-s..s),
            rng.random_range(-s..s),
            rng.random_range(-s..s),
        )
    };
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < 10_000 {
        let emit = point(&mut rng, 1e3);
        let t_e = rng.random_range(0.0..1e3);
        let rx = match cases % 3 {
            0 => Worldline::Static {
                position: point(&mut rng, 1e3),
            },
            1 => {
                let v = point(&mut rng, 1.0);
                let speed = rng.random_range(0.0..0.95);
                let v = if v.norm() > 0.0 { v * (speed / v.norm()) } else { v };
                Worldline::UniformVelocity {
                    origin: point(&mut rng, 1e3),
                    velocity: v,
                }
            }
            _ => {
                let radius = rng.random_range(1.0..500.0);
                Worldline::Circular {
                    center: point(&mut rng, 100.0),
                    radius,
                    angular_rate: rng.random_range(-0.9..0.9) / radius,
                    initial_angle: rng.random_range(0.0..std::f64::consts::TAU),
                }
            }
        };
        if (rx.position_at(t_e) - emit).norm() < 1e-6 {
            continue;
        }
        let t = arrival_time(emit, t_e, &rx, &model).map_err(|e| e.to_string())?;
        let delay = t - t_e;
        let rel = ((rx.position_at(t) - emit).norm() - c * delay).abs() / (c * delay);
        worst = worst.max(rel);
        cases += 1;
    }
    ensure(worst < 1e-9, format!("worst relative residual {worst:e}"))?;

    let c = 299_792_458.0;
    let model = PropagationModel::with_speed(c);
    let mut worst_t = 0.0f64;
    for k in 0..500 {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let radius = rng.random_range(1.0..1e5);
        let omega = rng
            .random_range(-1e3f64..1e3)
            .clamp(-0.5 * c / radius, 0.5 * c / radius);
        let ring = |a: f64| Worldline::Circular {
            center: V3::zero(),
            radius,
            angular_rate: omega,
            initial_angle: a,
        };
        let emit = ring(theta).position_at(0.0);
        let rx = ring(theta + rng.random_range(0.1..3.1));
        let t_e = 1e-4 * k as f64;
        let t = arrival_time(emit, t_e, &rx, &model).map_err(|e| e.to_string())?;
        worst_t = worst_t.max((t - bisect(emit, t_e, &rx, c, (omega * radius).abs())).abs());
    }
    ensure(
        worst_t < 1e-12,
        format!("circular receiver off bisection by {worst_t:e} s"),
    )?;
    Ok(format!(
        "10000 cases, worst relative residual {worst:.1e}; 500 ring cases within {worst_t:.1e} s"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("phase-gate correctness", Duration::from_secs(10), phase_gate),
        (
            "divergence vs steering",
            Duration::from_secs(120),
            divergence_vs_steering,
        ),
        ("einstein steering", Duration::from_secs(10), einstein_steering),
        ("sagnac ring", Duration::from_secs(60), sagnac),
        ("stripes and euler brick", Duration::from_secs(30), stripes_and_brick),
        ("echo count", Duration::from_secs(1), echo),
        ("determinism", Duration::from_secs(10), determinism),
        ("light-cone solver", Duration::from_secs(30), light_cone),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > budget => Err(format!("{detail}; took {took:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{took:.2?}]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{took:.2?}]", k + 1)
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

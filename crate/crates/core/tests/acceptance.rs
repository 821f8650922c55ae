//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every tolerance is pinned here.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;

use cgl_core::dynamics::{
    default_average_nodes, resonant_r_average, resonant_r_table, EquationParams, Model, ResonantTables,
};
use cgl_core::experiments::{epsilon_ladder, LadderConfig};
use cgl_core::integrators::{
    integrate_effective, integrate_full, residual_y, DiagnosticsConfig, StepControl,
};
use cgl_core::resonance::build_resonance_table;
use cgl_core::spectral::{FourierField, Lattice};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL_IDENTITY: f64 = 1e-10;
const TOL_COLLOCATION: f64 = 1e-10;
const TOL_LINEAR: f64 = 1e-12;
const TOL_EFFECTIVE_INVARIANTS: f64 = 1e-8;
const TOL_HRES: f64 = 1e-6;
const TOL_L2: f64 = 1e-8;
const TOL_ENERGY: f64 = 1e-6;
const SQRT_SPREAD_MAX: f64 = 4.0;
const ACTION_CHANGE_MIN: f64 = 0.01;
const RESIDUAL_RATIO_MAX: f64 = 0.8;
const LADDER_1D: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
const LADDER_2D: [f64; 3] = [0.1, 0.05, 0.025];

struct Outcome {
    pass: bool,
    detail: String,
}

fn lattice(d: usize, k: usize) -> Arc<Lattice> {
    Arc::new(Lattice::new(d, k).unwrap())
}

fn random_field(l: &Arc<Lattice>, rng: &mut ChaCha8Rng, scale: f64) -> FourierField {
    let amps = (0..l.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
        .collect();
    FourierField::from_amps(l.clone(), amps).unwrap()
}

fn model_with_tables(l: &Arc<Lattice>, params: EquationParams) -> Model {
    let p = Arc::new(build_resonance_table(l, params.p as usize).unwrap());
    let q = if params.q == params.p {
        p.clone()
    } else {
        Arc::new(build_resonance_table(l, params.q as usize).unwrap())
    };
    Model::new(l.clone(), params)
        .unwrap()
        .with_tables(ResonantTables::new(p, q))
        .unwrap()
}

/// Independent brute-force resonant set: every in-box tuple with
/// alternating-sign momentum `k` and zero divisor, in lexicographic index order.
fn brute_resonant(l: &Lattice, target: usize, n: usize) -> Vec<Vec<u32>> {
    let len = 2 * n + 1;
    let modes = l.len();
    let k: Vec<i64> = l.mode(target).iter().map(|&c| c as i64).collect();
    let lam = |i: usize| -> i64 { l.mode(i).iter().map(|&c| (c as i64) * (c as i64)).sum() };
    let mut out = Vec::new();
    let mut idx = vec![0usize; len - 1];
    'outer: loop {
        // solve for the last mode from momentum conservation
        let mut last = k.clone();
        let mut freq = 0i64;
        for (j, &m) in idx.iter().enumerate() {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            for (a, &c) in last.iter_mut().zip(l.mode(m)) {
                *a -= sign * c as i64;
            }
            freq += sign * lam(m);
        }
        if last.iter().all(|c| c.unsigned_abs() as usize <= l.cutoff()) {
            let coords: Vec<i32> = last.iter().map(|&c| c as i32).collect();
            let li = l.index_of(&coords).unwrap();
            if freq + lam(li) == lam(target) {
                let mut t: Vec<u32> = idx.iter().map(|&i| i as u32).collect();
                t.push(li as u32);
                out.push(t);
            }
        }
        for pos in (0..len - 1).rev() {
            idx[pos] += 1;
            if idx[pos] < modes {
                continue 'outer;
            }
            idx[pos] = 0;
        }
        break;
    }
    out
}

fn criterion_1() -> Outcome {
    let mut mismatches = Vec::new();
    let mut cases = 0;
    for d in 1..=2 {
        for k in 0..=3 {
            for n in 1..=2 {
                let l = lattice(d, k);
                let table = build_resonance_table(&l, n).unwrap();
                for target in 0..l.len() {
                    let got: Vec<Vec<u32>> = table.tuples(target).map(|t| t.to_vec()).collect();
                    if got != brute_resonant(&l, target, n) {
                        mismatches.push(format!("d={d} K={k} n={n} target={target}"));
                    }
                }
                cases += 1;
            }
        }
    }
    let total = build_resonance_table(&lattice(1, 1), 1).unwrap().total();
    Outcome {
        pass: mismatches.is_empty() && total == 15,
        detail: format!(
            "{cases} (d,K,n) cases, {} mismatched targets; d=1 K=1 n=1 total {total} (expected 15)",
            mismatches.len()
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let s = 1.0;
    let configs = [(1, 3, 1u32), (1, 2, 2), (2, 2, 1), (2, 1, 2)];
    for i in 0..50 {
        let (d, k, n) = configs[i % configs.len()];
        let l = lattice(d, k);
        let params = EquationParams::new(0.1, 0.0, 0.7, -1.3, 1, n, n).unwrap();
        let m = model_with_tables(&l, params);
        let v = random_field(&l, &mut rng, 0.3);
        let table = resonant_r_table(&v, m.tables().unwrap(), &params).unwrap();
        let avg = resonant_r_average(&v, &params, default_average_nodes(&l, &params)).unwrap();
        assert!(avg.exact);
        let err = table.sub(&avg.field).map(|d| d.h_norm(s)).unwrap();
        let scale = 1.0 + v.h_norm(s).powi(2 * n as i32 + 1);
        worst = worst.max(err / scale);
    }
    Outcome {
        pass: worst <= TOL_IDENTITY,
        detail: format!("50 fields, max |R_table - R_avg|_1 / (1+|v|_1^(2n+1)) = {worst:.3e} (tol {TOL_IDENTITY:e})"),
    }
}

/// Direct convolution of `|u|^2 u` over Fourier modes, truncated to the box.
fn cubic_convolution(v: &FourierField) -> Vec<Complex64> {
    let l = v.lattice();
    let k = l.cutoff() as i32;
    let a = |m: i32| -> Complex64 {
        if m.abs() <= k {
            v.amps()[l.index_of(&[m]).unwrap()]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    (0..l.len())
        .map(|t| {
            let kt = l.mode(t)[0];
            let mut acc = Complex64::new(0.0, 0.0);
            for k1 in -k..=k {
                for k2 in -k..=k {
                    let k3 = kt - k1 + k2;
                    acc += a(k1) * a(k2).conj() * a(k3);
                }
            }
            acc
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let l = lattice(1, 1 + i % 2);
        let params = EquationParams::new(0.1, 0.0, 0.4, 0.9, 1, 1, 1).unwrap();
        let v = random_field(&l, &mut rng, 1.0);
        let colloc = cgl_core::dynamics::nonlinearity_p(&v, &params).unwrap();
        let conv = cubic_convolution(&v);
        let coef = Complex64::new(params.b, params.c);
        let err = colloc
            .amps()
            .iter()
            .zip(&conv)
            .map(|(x, y)| (x - coef * y).norm() / (1.0 + y.norm()))
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    Outcome {
        pass: worst <= TOL_COLLOCATION,
        detail: format!("50 fields d=1 K<=2 p=q=1, max relative deviation {worst:.3e} (tol {TOL_COLLOCATION:e})"),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eps = 0.05;
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (d, k) in [(1, 4), (2, 2)] {
        let l = lattice(d, k);
        let v0 = random_field(&l, &mut rng, 0.5);
        for mu in [0.0, 1.0] {
            for m in [1, 2] {
                let params = EquationParams::new(eps, mu, 0.0, 0.0, m, 1, 1).unwrap();
                let model = model_with_tables(&l, params);
                let control = StepControl::for_horizon(1.0);
                let diag = DiagnosticsConfig::default();
                let full = integrate_full(&v0, 1.0, &model, &control, &diag).unwrap();
                let eff = integrate_effective(&v0, 1.0, &model, &control, &diag).unwrap();
                for (traj, oscillate) in [(&full, true), (&eff, false)] {
                    for cp in &traj.checkpoints {
                        for (i, (got, a0)) in cp.field.amps().iter().zip(v0.amps()).enumerate() {
                            let lam = l.lambda()[i] as f64;
                            let phase = if oscillate { lam * cp.tau / eps } else { 0.0 };
                            let exact = a0 * Complex64::from_polar((-mu * lam.powi(m as i32) * cp.tau).exp(), phase);
                            worst = worst.max((got - exact).norm());
                        }
                    }
                    runs += 1;
                }
            }
        }
    }
    Outcome {
        pass: worst <= TOL_LINEAR,
        detail: format!("{runs} runs, max |v - exact| = {worst:.3e} (tol {TOL_LINEAR:e})"),
    }
}

fn drift(values: &[f64]) -> f64 {
    values.iter().map(|x| (x - values[0]).abs()).fold(0.0, f64::max) / values[0].abs()
}

fn criterion_5() -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l = lattice(2, 2);
    let v0 = random_field(&l, &mut rng, 0.25);
    let control = StepControl::for_horizon(1.0);
    let diag = DiagnosticsConfig {
        norms: vec![0.0],
        hamiltonian: true,
        energy: true,
        energy_per_step: false,
    };

    let params = EquationParams::new(0.1, 0.0, 0.0, 1.0, 1, 1, 1).unwrap();
    let model = model_with_tables(&l, params);
    let eff = integrate_effective(&v0, 1.0, &model, &control, &diag).unwrap();
    let series = |f: &dyn Fn(&cgl_core::integrators::Diagnostics) -> f64| -> Vec<f64> {
        eff.checkpoints.iter().map(|c| f(&c.diagnostics)).collect()
    };
    let h1 = drift(&series(&|d| d.h1));
    let h2 = drift(&series(&|d| d.h2));
    let hres = drift(&series(&|d| d.h_res.unwrap()));
    let a = Outcome {
        pass: h1 <= TOL_EFFECTIVE_INVARIANTS && h2 <= TOL_EFFECTIVE_INVARIANTS && hres <= TOL_HRES,
        detail: format!(
            "(a) effective mu=b=0: drift H1 {h1:.2e}, H2 {h2:.2e} (tol {TOL_EFFECTIVE_INVARIANTS:e}), H_res {hres:.2e} (tol {TOL_HRES:e})"
        ),
    };

    let full = integrate_full(&v0, 1.0, &model, &control, &diag).unwrap();
    let l2: Vec<f64> = full.checkpoints.iter().map(|c| c.diagnostics.l2).collect();
    let energy: Vec<f64> = full.checkpoints.iter().map(|c| c.diagnostics.energy.unwrap()).collect();
    let (dl2, de) = (drift(&l2), drift(&energy));
    let b = Outcome {
        pass: dl2 <= TOL_L2 && de <= TOL_ENERGY,
        detail: format!("(b) full NLS: drift ||u||_0 {dl2:.2e} (tol {TOL_L2:e}), E_q {de:.2e} (tol {TOL_ENERGY:e})"),
    };

    let params = EquationParams::new(0.1, 1.0, -1.0, -1.0, 1, 1, 1).unwrap();
    let model = model_with_tables(&l, params);
    let full = integrate_full(&v0, 1.0, &model, &control, &diag).unwrap();
    let inc = full.stats.max_l2_increase;
    let c = Outcome {
        pass: inc <= 0.0,
        detail: format!(
            "(c) mu=1 b=c=-1: largest one-step change of ||u||_0 over {} steps = {inc:.3e} (must be <= 0)",
            full.stats.steps
        ),
    };
    vec![a, b, c]
}

fn datum_1d() -> (Arc<Lattice>, FourierField) {
    let l = lattice(1, 4);
    let raw = FourierField::from_modes(
        l.clone(),
        [
            (&[0][..], Complex64::new(0.6, 0.0)),
            (&[1][..], Complex64::new(0.3, 0.2)),
            (&[-1][..], Complex64::new(0.0, 0.35)),
            (&[2][..], Complex64::new(0.12, -0.05)),
            (&[-2][..], Complex64::new(0.08, 0.1)),
        ],
    )
    .unwrap();
    let scale = 1.0 / raw.h_norm(2.0);
    (l, raw.scale(Complex64::new(scale, 0.0)))
}

fn ladder_1d() -> (Model, FourierField, cgl_core::experiments::LadderResult) {
    let (l, v0) = datum_1d();
    let params = EquationParams::new(LADDER_1D[0], 0.0, 0.0, 1.0, 1, 1, 1).unwrap();
    let model = model_with_tables(&l, params);
    let cfg = LadderConfig {
        horizon: 1.0,
        s1: 2.0,
        control: StepControl::for_horizon(1.0),
        diagnostics: DiagnosticsConfig::default(),
    };
    let r = epsilon_ladder(&v0, &LADDER_1D, &model, &cfg).unwrap();
    (model, v0, r)
}

fn criterion_6(r: &cgl_core::experiments::LadderResult) -> Outcome {
    Outcome {
        pass: r.monotone && r.sqrt_ratio_spread < SQRT_SPREAD_MAX,
        detail: format!(
            "d=1 K=4 sup errors {:?}, monotone {}, spread of sup/sqrt(eps) {:.3} (max {SQRT_SPREAD_MAX}), fitted exponent {:?}",
            r.sups.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>(),
            r.monotone,
            r.sqrt_ratio_spread,
            r.fitted_exponent.map(|e| format!("{e:.3}"))
        ),
    }
}

fn criterion_7() -> Outcome {
    let l = lattice(2, 3);
    let v0 = FourierField::from_modes(
        l.clone(),
        [
            (&[0, 0][..], Complex64::new(0.5, 0.0)),
            (&[1, 1][..], Complex64::new(0.3, 0.0)),
            (&[1, 0][..], Complex64::new(0.2, 0.0)),
            (&[0, 1][..], Complex64::new(0.1, 0.0)),
        ],
    )
    .unwrap();
    let params = EquationParams::new(LADDER_2D[0], 0.0, 0.0, 1.0, 1, 1, 1).unwrap();
    let model = model_with_tables(&l, params);
    let cfg = LadderConfig {
        horizon: 1.0,
        s1: 2.0,
        control: StepControl::for_horizon(1.0),
        diagnostics: DiagnosticsConfig::default(),
    };
    let r = epsilon_ladder(&v0, &LADDER_2D, &model, &cfg).unwrap();
    let i0 = v0.actions();
    let change = r
        .effective
        .checkpoints
        .iter()
        .flat_map(|cp| {
            let i = cp.field.actions();
            i0.values()
                .iter()
                .zip(i.values())
                .filter(|(a, _)| **a > 0.0)
                .map(|(a, b)| (b - a).abs() / a)
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: r.monotone && change > ACTION_CHANGE_MIN,
        detail: format!(
            "d=2 K=3 sup errors {:?}, monotone {}, largest relative action change in effective run {change:.3} (min {ACTION_CHANGE_MIN})",
            r.sups.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>(),
            r.monotone
        ),
    }
}

fn criterion_8(model: &Model, v0: &FourierField) -> Outcome {
    let omega = model.tables().unwrap().max_freq() as f64;
    let diag = DiagnosticsConfig {
        norms: vec![2.0],
        hamiltonian: false,
        energy: false,
        energy_per_step: false,
    };
    let mut sups = Vec::new();
    let mut reliable = true;
    for eps in LADDER_1D {
        let m = model.with_epsilon(eps).unwrap();
        // checkpoints resolve the fastest phase: spacing <= eps / (2 omega_max)
        let count = (2.0 * omega / eps).ceil() as usize;
        let control = StepControl::for_horizon(1.0).with_checkpoints(1.0, count);
        let t = integrate_full(v0, 1.0, &m, &control, &diag).unwrap();
        let r = residual_y(&t, &m, 2.0).unwrap();
        reliable &= r.reliable;
        sups.push(r.sup);
    }
    let ratios: Vec<f64> = sups.windows(2).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: reliable && worst <= RESIDUAL_RATIO_MAX,
        detail: format!(
            "residual sups {:?}, ratios {:?} (max {RESIDUAL_RATIO_MAX}), resolved {reliable}",
            sups.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>(),
            ratios.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn main() -> ExitCode {
    let mut results: BTreeMap<String, Outcome> = BTreeMap::new();
    results.insert("1 resonance tables equal brute-force oracle".into(), criterion_1());
    results.insert("2 table sum equals rotation average".into(), criterion_2());
    results.insert("3 collocation equals convolution".into(), criterion_3());
    results.insert("4 linear runs exact".into(), criterion_4());
    for (i, o) in criterion_5().into_iter().enumerate() {
        results.insert(format!("5{} conservation", ['a', 'b', 'c'][i]), o);
    }
    let (model, v0, ladder) = ladder_1d();
    results.insert("6 one-dimensional epsilon ladder".into(), criterion_6(&ladder));
    results.insert("7 two-dimensional epsilon ladder".into(), criterion_7());
    results.insert("8 oscillatory residual decays".into(), criterion_8(&model, &v0));
    results.insert("9 deterministic artifacts".into(), criterion_9());

    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

const DETERMINISM_CONFIG: &str = r#"
[lattice]
d = 2
K = 2

[params]
epsilon = 0.05
epsilons = [0.1, 0.05, 0.025]
mu = 0.1
b = -0.5
c = 1.0

[datum]
modes = [{ k = [0, 0], re = 0.5 }, { k = [1, 1], re = 0.3 }, { k = [1, 0], re = 0.2, im = 0.1 }, { k = [0, 1], im = 0.1 }]

[run]
horizon = 0.5
s1 = 1.5
"#;

fn cli_outputs(jobs: &str) -> BTreeMap<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let out = dir.path().join("out");
    for cmd in ["simulate", "compare"] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_cgl"))
            .args(["--jobs", jobs, "--cache"])
            .arg(dir.path().join("cache"))
            .arg("--out")
            .arg(&out)
            .args([cmd, "--config"])
            .arg(&config)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "cgl {cmd} failed");
    }
    std::fs::read_dir(&out)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            let kept: Vec<&str> = text.lines().filter(|l| !cgl_core::artifacts::is_timestamp_line(l)).collect();
            (path.file_name().unwrap().to_string_lossy().into_owned(), kept.join("\n"))
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let a = cli_outputs("1");
    let b = cli_outputs("4");
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    Outcome {
        pass: !a.is_empty() && a.len() == b.len() && differing.is_empty(),
        detail: format!(
            "{} artifacts from simulate+compare with 1 vs 4 threads, {} differ outside timestamp records",
            a.len(),
            differing.len()
        ),
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion with the measured value,
//! its tolerance and the runtime against its limit.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trapsim::crystal::{solve, IonSpecies, LambDickeTensor, TrapConfiguration};
use trapsim::drive::{rabi_solution, DriveSpec, RabiProblem, TwoLevel};
use trapsim::hilbert::{displacement_matrix_element, verify_identities, PropagateOptions};
use trapsim::ising::{all_right, coupling_matrix, exact_vs_effective, weaker_dressing};
use trapsim::units::{ATOMIC_MASS_UNIT, HBAR};
use trapsim::C64;
use trapsim_cli::{run_file, Settings, Verb};

const TWO_PI: f64 = 2.0 * PI;

struct Line {
    id: usize,
    name: &'static str,
    checks: Vec<(String, f64, String, bool)>,
    elapsed: Duration,
    limit: Duration,
}

impl Line {
    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.3) && self.elapsed <= self.limit
    }

    fn print(&self) {
        let checks: Vec<String> = self.checks.iter().map(|(k, v, tol, _)| format!("{k}={v:.6e} ({tol})")).collect();
        println!(
            "{} {:>2} {}: {}; {:.2} s (limit {} s)",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            checks.join(", "),
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        );
    }
}

fn below(key: &str, v: f64, tol: f64) -> (String, f64, String, bool) {
    (key.into(), v, format!("< {tol:e}"), v < tol)
}

fn at_least(key: &str, v: f64, bound: f64) -> (String, f64, String, bool) {
    (key.into(), v, format!(">= {bound}"), v >= bound)
}

fn within(key: &str, v: f64, lo: f64, hi: f64) -> (String, f64, String, bool) {
    (key.into(), v, format!("in [{lo}, {hi}]"), (lo..=hi).contains(&v))
}

fn timed(id: usize, name: &'static str, limit_s: u64, f: impl FnOnce() -> Vec<(String, f64, String, bool)>) -> Line {
    let start = Instant::now();
    let checks = f();
    let line = Line { id, name, checks, elapsed: start.elapsed(), limit: Duration::from_secs(limit_s) };
    line.print();
    line
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Runs a shipped scenario into a fresh directory.
fn run(name: &str, out: &Path) -> PathBuf {
    let dir = out.join(name);
    let report = run_file(&scenarios_dir().join(format!("{name}.toml")), &dir, Verb::Run, &Settings::default(), None).unwrap();
    assert!(report.outcome.breaches.is_empty(), "{name}: {:?}", report.outcome.breaches);
    dir
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

fn summary(dir: &Path) -> BTreeMap<String, f64> {
    rows(&dir.join("summary.csv")).into_iter().map(|r| (r[0].clone(), r[1].parse().unwrap())).collect()
}

fn axial_ratios(n: usize) -> Vec<f64> {
    let wz = TWO_PI * 1e6;
    let sp = IonSpecies::from_atomic(40.0, 1).unwrap();
    let sol = solve(&TrapConfiguration::linear(sp, n, [10.0 * wz, 11.0 * wz, wz]).unwrap()).unwrap();
    let mut w: Vec<f64> = sol.modes_along(2).iter().map(|&m| sol.mode_frequencies[m]).collect();
    w.sort_by(f64::total_cmp);
    w.iter().map(|x| x / w[0]).collect()
}

/// `exp(λa† − λ*a)` by scaling and squaring on a 60-level truncation.
fn displacement_oracle(lambda: C64) -> DMatrix<C64> {
    let d = 60;
    let mut gen = DMatrix::<C64>::zeros(d, d);
    for n in 1..d {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] = lambda * s;
        gen[(n - 1, n)] = -lambda.conj() * s;
    }
    gen.exp()
}

/// Classical RK4 on `ċ↑ = Y e^{−iδt} c↓`, `ċ↓ = −Y* e^{iδt} c↑`.
fn rabi_rk4(delta: f64, y: C64, t: f64, start: [C64; 2], steps: usize) -> [C64; 2] {
    let f = |s: f64, c: [C64; 2]| {
        let e = C64::from_polar(1.0, -delta * s);
        [y * e * c[1], -y.conj() * e.conj() * c[0]]
    };
    let h = t / steps as f64;
    let mut c = start;
    for k in 0..steps {
        let s = k as f64 * h;
        let add = |c: [C64; 2], d: [C64; 2], w: f64| [c[0] + d[0] * w, c[1] + d[1] * w];
        let k1 = f(s, c);
        let k2 = f(s + h / 2.0, add(c, k1, h / 2.0));
        let k3 = f(s + h / 2.0, add(c, k2, h / 2.0));
        let k4 = f(s + h, add(c, k3, h));
        for i in 0..2 {
            c[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    c
}

/// Ground state of `B Σ σx + Σ_{i≠j} J σzσz` by dense diagonalization.
fn ising_ground(n: usize, j: f64, b: f64) -> Vec<f64> {
    let dim = 1 << n;
    let z = |s: usize, i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };
    let h = DMatrix::<f64>::from_fn(dim, dim, |r, c| {
        if r == c {
            (0..n).flat_map(|i| (0..n).filter(move |&k| k != i).map(move |k| (i, k))).map(|(i, k)| j * z(r, i) * z(r, k)).sum()
        } else if (r ^ c).count_ones() == 1 {
            b
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(h);
    let g = (0..dim).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    eig.eigenvectors.column(g).iter().copied().collect()
}

fn config_index(label: &str) -> usize {
    label.chars().enumerate().map(|(i, c)| usize::from(c == 'u') << i).sum()
}

fn populations(dir: &Path) -> Vec<f64> {
    let table = rows(&dir.join("populations.csv"));
    let mut p = vec![0.0; table.len()];
    for r in table {
        p[config_index(&r[0])] = r[1].parse().unwrap();
    }
    p
}

fn criterion_modes() -> Vec<(String, f64, String, bool)> {
    let two = axial_ratios(2);
    let three = axial_ratios(3);
    vec![
        below("two_ion_stretch_error", (two[1] - 3f64.sqrt()).abs(), 1e-10),
        below("three_ion_error", (three[0] - 1.0).abs().max((three[1] - 3f64.sqrt()).abs()).max((three[2] - (29.0f64 / 5.0).sqrt()).abs()), 1e-8),
    ]
}

fn criterion_displacement() -> Vec<(String, f64, String, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..40 {
        let r = if k == 0 { 0.5 } else { rng.random_range(0.0..=0.5) };
        let lambda = C64::from_polar(r, rng.random_range(-PI..PI));
        let d = displacement_oracle(lambda);
        for a in 0..=12 {
            for b in 0..=12 {
                worst = worst.max((displacement_matrix_element(a, b, lambda) - d[(a, b)]).norm());
            }
        }
    }
    vec![below("max_element_error", worst, 1e-10)]
}

fn criterion_rabi() -> Vec<(String, f64, String, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let delta = rng.random_range(-3.0..3.0);
        let y = C64::from_polar(rng.random_range(0.0..2.0), rng.random_range(-PI..PI));
        let t = rng.random_range(0.0..5.0);
        let theta = rng.random_range(0.0..PI);
        let start = [C64::from_polar(theta.cos(), rng.random_range(-PI..PI)), C64::from_polar(theta.sin(), rng.random_range(-PI..PI))];
        let numeric = rabi_rk4(delta, y, t, start, 20_000);
        let closed = rabi_solution(&RabiProblem { delta, y, t }, TwoLevel { up: start[0], down: start[1] });
        worst = worst.max((numeric[0] - closed.up).norm()).max((numeric[1] - closed.down).norm());
    }
    vec![below("max_component_error", worst, 1e-8)]
}

fn criterion_leibfried(out: &Path) -> Vec<(String, f64, String, bool)> {
    let dir = run("leibfried_gate", out);
    let s = summary(&dir);
    let phase_ud: f64 = rows(&dir.join("phases.csv")).iter().find(|r| r[1] == "ud").unwrap()[2].parse().unwrap();
    // Stretch-mode Lamb-Dicke factor: each ion moves by ±1/√2 of the mode coordinate.
    let mass = 9.012182 * ATOMIC_MASS_UNIT;
    let w_str = 3f64.sqrt() * TWO_PI * 3.6e6;
    let eta = 28389028.3588394 * (HBAR / (2.0 * mass * w_str)).sqrt() / 2f64.sqrt();
    let omega = TWO_PI * s["rabi_frequency_hz"];
    let formula = -8.0 * PI * (omega * eta * 1.5 / (TWO_PI * 26e3)).powi(2);
    vec![
        at_least("bell_fidelity", s["bell_fidelity"], 1.0 - 1e-6),
        below("phase_error", (phase_ud + FRAC_PI_2).abs(), 1e-9),
        below("closed_form_phase_error", (formula + FRAC_PI_2).abs(), 1e-9),
    ]
}

fn criterion_schmitz(out: &Path) -> Vec<(String, f64, String, bool)> {
    let s = summary(&run("schmitz_gate", out));
    let oracle = (2.0 * -0.25 / 1.25f64).abs();
    vec![
        below("residual_displacement", s["commensurate_residual_displacement"], 1e-10),
        below("dynamic_ratio_error", (s["commensurate_dynamic_ratio"] - oracle).abs(), 1e-9),
        at_least("bell_fidelity", s["bell_fidelity"], 1.0 - 1e-6),
    ]
}

fn criterion_radial(out: &Path) -> Vec<(String, f64, String, bool)> {
    let dir = run("radial_two_pulse", out);
    let s = summary(&dir);
    let table = rows(&dir.join("phases.csv"));
    let dynamic = |segment: &str, config: &str| -> f64 { table.iter().find(|r| r[0] == segment && r[1] == config).unwrap()[3].parse().unwrap() };
    let flip = |c: &str| -> String { c.chars().map(|x| if x == 'u' { 'd' } else { 'u' }).collect() };
    let mut per_pulse: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for c in ["dd", "ud", "du", "uu"] {
        per_pulse = per_pulse.max(dynamic("1", c).abs());
        residual = residual.max((dynamic("1", c) + dynamic("3", &flip(c))).abs());
    }
    vec![
        at_least("dynamic_phase_per_pulse", per_pulse, 1e-3),
        below("dynamic_phase_residual", residual, 1e-9),
        at_least("bell_fidelity", s["bell_fidelity"], 1.0 - 1e-6),
        at_least("engine_overlap", s["engine_overlap"], 1.0 - 1e-7),
    ]
}

fn criterion_ramp(out: &Path) -> Vec<(String, f64, String, bool)> {
    let s = summary(&run("ising_ramp_n2", out));
    let g = ising_ground(2, -20.0, -1.0);
    let oracle = ((g[0] + g[3]) / 2f64.sqrt()).powi(2);
    vec![
        at_least("ground_state_cat_overlap", oracle, 0.99),
        at_least("cat_overlap", s["ghz_fidelity"], 0.99),
        at_least("parity_contrast", s["parity_contrast"], 0.98),
    ]
}

fn criterion_frustration(out: &Path) -> Vec<(String, f64, String, bool)> {
    let p = populations(&run("frustration_n3", out));
    let g = ising_ground(3, 20.0, -1.0);
    let mut sim_error: f64 = 0.0;
    let mut oracle_error: f64 = 0.0;
    for s in 1..7 {
        sim_error = sim_error.max((p[s] - 1.0 / 6.0).abs());
        oracle_error = oracle_error.max((g[s] * g[s] - 1.0 / 6.0).abs());
    }
    vec![below("population_error", sim_error, 0.05), below("ground_state_population_error", oracle_error, 0.05)]
}

fn criterion_dipolar(out: &Path) -> Vec<(String, f64, String, bool)> {
    let table = rows(&run("dipolar_5ion", out).join("couplings.csv"));
    let pts: Vec<(f64, f64)> = table.iter().map(|r| (r[2].parse::<f64>().unwrap().ln(), r[3].parse::<f64>().unwrap().abs().ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    vec![within("exponent", -slope, 2.5, 3.5)]
}

fn criterion_dressing() -> Vec<(String, f64, String, bool)> {
    let ld = LambDickeTensor { eta: DMatrix::from_row_slice(2, 2, &[0.1, 0.1, 0.1, -0.1]), mode_frequencies: vec![TWO_PI * 1e6, TWO_PI * 1.73e6] };
    let delta = -TWO_PI * 20e3;
    // Ωη/|δ| = 0.1 on the nearer mode.
    let omega = delta.abs();
    let drive = DriveSpec::z_branch(vec![omega; 2], vec![0.0; 2], -0.25, 1.0, ld, vec![delta, 2.0 * delta]).unwrap();
    let b = 0.2 * coupling_matrix(&drive).unwrap()[(0, 1)].abs();
    let t = TWO_PI * 61.0 / (3.0 * delta.abs());
    let opts = PropagateOptions::default();
    let strong = exact_vs_effective(&drive, &[b, b], &all_right(2), &[t], 25, &opts).unwrap();
    let weak = exact_vs_effective(&weaker_dressing(&drive, 2.0), &[b, b], &all_right(2), &[t], 25, &opts).unwrap();
    vec![
        within("infidelity_ratio", strong.final_infidelity() / weak.final_infidelity(), 3.0, 5.0),
        below("epsilon_halving_error", (weak.epsilon - strong.epsilon / 2.0).abs(), 1e-12),
        below("leakage", strong.max_leakage.max(weak.max_leakage), 1e-6),
    ]
}

fn criterion_identities() -> Vec<(String, f64, String, bool)> {
    let r = verify_identities(100, 11);
    vec![
        below("pauli_rotation", r.pauli_rotation, 1e-8),
        below("displacement_rotation", r.displacement_rotation, 1e-8),
        below("canonical_transformation", r.canonical_transformation, 1e-8),
    ]
}

fn criterion_determinism(out: &Path) -> Vec<(String, f64, String, bool)> {
    let mut mismatched = 0.0;
    let mut compared = 0.0;
    let mut names: Vec<PathBuf> = fs::read_dir(scenarios_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for path in names {
        let stem = path.file_stem().unwrap().to_str().unwrap().to_string();
        let dirs: Vec<PathBuf> = ["a", "b"]
            .iter()
            .map(|tag| {
                let dir = out.join(format!("{stem}-{tag}"));
                run_file(&path, &dir, Verb::Run, &Settings::default(), None).unwrap();
                dir
            })
            .collect();
        let mut files: Vec<String> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).filter(|f| f.ends_with(".csv")).collect();
        files.sort();
        for f in files {
            compared += 1.0;
            if fs::read(dirs[0].join(&f)).unwrap() != fs::read(dirs[1].join(&f)).unwrap() {
                println!("  differs: {stem}/{f}");
                mismatched += 1.0;
            }
        }
    }
    vec![at_least("csv_files_compared", compared, 10.0), below("mismatched_files", mismatched, 0.5)]
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let lines = vec![
        timed(1, "mode spectrum", 1, criterion_modes),
        timed(2, "displacement elements", 5, criterion_displacement),
        timed(3, "rabi closed form", 10, criterion_rabi),
        timed(4, "axial stretch-mode gate", 30, || criterion_leibfried(out)),
        timed(5, "commensurate two-mode gate", 60, || criterion_schmitz(out)),
        timed(6, "radial spin-echo gate", 120, || criterion_radial(out)),
        timed(7, "two-spin ising ramp", 30, || criterion_ramp(out)),
        timed(8, "three-spin frustration", 60, || criterion_frustration(out)),
        timed(9, "dipolar coupling decay", 30, || criterion_dipolar(out)),
        timed(10, "exact vs effective scaling", 300, criterion_dressing),
        timed(11, "identity suite", 10, criterion_identities),
    ];
    let budget: Duration = lines.iter().map(|l| l.limit).sum();
    let mut det = timed(12, "determinism", budget.as_secs(), || criterion_determinism(&out.join("determinism")));
    det.limit = budget;
    let failed: Vec<usize> = lines.iter().chain(std::iter::once(&det)).filter(|l| !l.pass()).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

//! Acceptance criteria. Each test prints one PASS/FAIL line and then asserts.
//!
//! Run with `cargo test -p thermoaffine-core --test acceptance -- --nocapture`
//! to see the lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoaffine_core::contact::{compare_with_lift, ContactState};
use thermoaffine_core::duality::divergence_report;
use thermoaffine_core::immersion::DEFAULT_RANK_TOL;
use thermoaffine_core::potentials::response::heat_capacity_from_entropy;
use thermoaffine_core::potentials::*;
use thermoaffine_core::relaxation::{closed_form_single, InitialFamily, Sign};
use thermoaffine_core::*;

/// Two ulp of the target: the rounding floor of a divide followed by a multiply.
const EXACT_ULPS: f64 = 2.0;

type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> Vec<f64>>;

fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    println!("[{}] criterion {id:>2}: {name} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut b = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let mut a = b.mul(&b.transpose());
    for i in 0..n {
        a[(i, i)] += 0.5;
    }
    a.symmetrize();
    a
}

fn grid_open(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / k as f64).collect()
}

#[test]
fn c01_equation_of_state_recovery() {
    let (r, c) = (1.0, 1.5);
    let s = ideal_gas_entropy(r, c).unwrap();
    let grid = grid_open(0.5, 5.0, 10);
    let fd = DiffConfig::default();
    let (mut eos_exact, mut eos_fd, mut heat) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &u in &grid {
        for &v in &grid {
            let y = s.gradient(&[u, v]).unwrap();
            eos_exact = eos_exact.max((y[1] * v - r).abs());
            let yf = s.fd_gradient(&[u, v], &fd).unwrap();
            eos_fd = eos_fd.max((yf[1] * v - r).abs());
            heat = heat.max((heat_capacity_from_entropy(&s, &[u, v]).unwrap() - c * r).abs());
        }
    }
    let ok = eos_exact <= EXACT_ULPS * f64::EPSILON * r
        && eos_fd <= 1e-8
        && heat <= EXACT_ULPS * f64::EPSILON * c * r;
    verdict(
        1,
        "equation of state y2*V = R and C = cR",
        ok,
        format!("analytic {eos_exact:.1e}, fd {eos_fd:.1e}, |C - cR| {heat:.1e}"),
    );
}

#[test]
fn c02_helmholtz_dual_potential() {
    let mut worst = 0.0_f64;
    for (r, t) in [(1.0, 1.0), (1.0, 2.5)] {
        let chart = DualChart::new(ideal_gas_helmholtz(r, t).unwrap());
        let rt: f64 = r * t;
        for eta in grid_open(0.1, 2.0, 20) {
            let closed = rt - rt * rt.ln() + rt * eta.ln();
            let phi = chart.dual_potential(&[eta], &[rt]).unwrap();
            worst = worst.max((phi - closed).abs());
        }
    }
    verdict(2, "Helmholtz dual potential vs closed form", worst <= 1e-8, format!("max error {worst:.1e}"));
}

#[test]
fn c03_divergence_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_231_015);
    let mut cases: Vec<(Potential, Sampler)> = Vec::new();
    for _ in 0..3 {
        let a = random_spd(&mut rng, 3);
        cases.push((
            quadratic(a, None, 0.0).unwrap(),
            Box::new(|r: &mut ChaCha8Rng| (0..3).map(|_| r.gen_range(-3.0..3.0)).collect()),
        ));
    }
    cases.push((
        ideal_gas_helmholtz(1.0, 1.0).unwrap(),
        Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(0.1..10.0)]),
    ));
    cases.push((
        ideal_gas_entropy(1.0, 1.5).unwrap(),
        Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(0.1..10.0), r.gen_range(0.1..10.0)]),
    ));
    cases.push((ising_free_energy(), Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(-4.0..4.0)])));

    let mut worst = 0.0_f64;
    for (p, sample) in &cases {
        let chart = DualChart::new(p.clone());
        let g = GraphImmersion::new(p.clone());
        for _ in 0..100 {
            let (x1, x2) = (sample(&mut rng), sample(&mut rng));
            worst = worst.max(divergence_report(&chart, &g, &x1, &x2).unwrap().discrepancy);
        }
    }
    verdict(3, "canonical = geometric divergence", worst <= 1e-10, format!("max discrepancy {worst:.1e}"));
}

/// Oracle for criterion 4: sign changes of `6/x³ − 24T/(3x−1)²` on a dense
/// grid, evaluated directly from the formula.
fn vdw_sign_scan(t: f64, lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let h = |x: f64| 6.0 / (x * x * x) - 24.0 * t / ((3.0 * x - 1.0) * (3.0 * x - 1.0));
    let mut crossings = Vec::new();
    let mut max_h = f64::NEG_INFINITY;
    let mut prev = (lo, h(lo));
    for k in 1..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let v = h(x);
        max_h = max_h.max(v);
        if prev.1 * v < 0.0 {
            crossings.push(0.5 * (prev.0 + x));
        }
        prev = (x, v);
    }
    (crossings, max_h)
}

#[test]
fn c04_van_der_waals_degeneracy() {
    let (lo, hi) = (0.4, 5.0);
    let locus = |t: f64| {
        GraphImmersion::new(vdw_helmholtz(t).unwrap())
            .degeneracy_locus(&[lo], &[hi], 2000, DEFAULT_RANK_TOL)
            .unwrap()
    };
    let dense = 1_000_000;
    let spacing = (hi - lo) / dense as f64;

    let at_one = locus(1.0);
    let hit = at_one.iter().map(|d| (d.x[0] - 1.0).abs()).fold(f64::INFINITY, f64::min);

    let below = locus(0.9);
    let (oracle_below, _) = vdw_sign_scan(0.9, lo, hi, dense);
    let below_ok = below.len() == 2
        && oracle_below.len() == 2
        && below[0].x[0] < 1.0
        && below[1].x[0] > 1.0
        && below.iter().zip(&oracle_below).all(|(d, o)| (d.x[0] - o).abs() <= spacing);

    let above = locus(1.1);
    let (oracle_above, max_h) = vdw_sign_scan(1.1, lo, hi, dense);
    let above_ok = above.is_empty() && oracle_above.is_empty() && max_h < 0.0;

    verdict(
        4,
        "van der Waals degeneracy locus",
        hit <= 1e-10 && below_ok && above_ok,
        format!(
            "T=1 |x-1| {hit:.1e}; T=0.9 {:?} vs oracle {:?}; T=1.1 {} points, oracle max h {max_h:.3}",
            below.iter().map(|d| d.x[0]).collect::<Vec<_>>(),
            oracle_below,
            above.len()
        ),
    );
}

fn builtins() -> Vec<(Potential, Sampler)> {
    vec![
        (ideal_gas_helmholtz(1.0, 1.0).unwrap(), Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(0.2..5.0)])),
        (
            ideal_gas_entropy(1.0, 1.5).unwrap(),
            Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(0.2..5.0), r.gen_range(0.2..5.0)]),
        ),
        (vdw_helmholtz(1.0).unwrap(), Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(0.5..5.0)])),
        (ising_free_energy(), Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(-3.0..3.0)])),
        (
            quadratic(
                Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
                Some(vec![0.3, -0.2]),
                0.1,
            )
            .unwrap(),
            Box::new(|r: &mut ChaCha8Rng| vec![r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)]),
        ),
    ]
}

#[test]
fn c05_relaxation_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = IntegratorConfig::new(1e-3, 10.0).run_to_end();
    let mut worst = 0.0_f64;
    for (p, sample) in builtins() {
        let gen = RelaxationGenerator::single(p.clone());
        for _ in 0..20 {
            let x = sample(&mut rng);
            let z0 = rng.gen_range(-5.0..5.0);
            let traj = gen.integrate(&LiftedState::new(x.clone(), vec![0.0; x.len()], z0), &cfg).unwrap();
            assert_eq!(traj.samples.len(), 10_001);
            for s in &traj.samples {
                worst = worst.max((s.z - closed_form_single(&p, &x, z0, s.t).unwrap()).abs());
            }
        }
    }
    verdict(5, "RK4 vs closed-form relaxation", worst <= 1e-8, format!("max |z_rk4 - z_closed| {worst:.1e}"));
}

#[test]
fn c06_kinetic_ising_limit() {
    let f = ising_free_energy();
    let gen = RelaxationGenerator::single(f.clone());
    let mut worst_y = 0.0_f64;
    let mut worst_z = 0.0_f64;
    for x in [-2.0, -0.5, 0.0, 0.5, 2.0] {
        let traj = gen
            .integrate(
                &LiftedState::new(vec![x], vec![0.0], 0.0),
                &IntegratorConfig::new(1e-3, 25.0).record_every(1000),
            )
            .unwrap();
        let last = traj.last();
        assert!(last.t <= 25.0);
        worst_y = worst_y.max((last.y[0] - libm::tanh(x)).abs());
        worst_z = worst_z.max((last.z - (libm::log(libm::cosh(x)) + core::f64::consts::LN_2)).abs());
    }
    verdict(
        6,
        "kinetic Ising <sigma> -> tanh x",
        worst_y <= 1e-8 && worst_z <= 1e-8,
        format!("|y - tanh x| {worst_y:.1e}, |z - F| {worst_z:.1e}"),
    );
}

/// Oracle for criterion 7: elapsed backward time to climb from `z = 1` to
/// `z < 3` under `ż = −z (z − 3)²`. With `u = 1/(3 − z)` the separable
/// integral becomes `∫ du / (3 − 1/u)` over a smooth integrand, done with
/// composite Simpson.
fn backward_time_to(z: f64) -> f64 {
    let (u0, u1) = (0.5, 1.0 / (3.0 - z));
    let n = 200_000;
    let h = (u1 - u0) / n as f64;
    let g = |u: f64| 1.0 / (3.0 - 1.0 / u);
    let mut acc = g(u0) + g(u1);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(u0 + k as f64 * h);
    }
    acc * h / 3.0
}

/// Inverts the oracle: `z` reached after backward time `tau`.
fn oracle_z_after(tau: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 3.0 - 1e-12);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if backward_time_to(mid) < tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn c07_two_equilibrium_limits() {
    let gen = RelaxationGenerator::two(constant(1, 0.0).unwrap(), constant(1, 3.0).unwrap()).unwrap();
    let s0 = LiftedState::new(vec![0.0], vec![0.0], 1.0);
    let forward = gen.integrate_to_stable(&s0, &IntegratorConfig::new(1e-3, 200.0)).unwrap();
    let forward_err = forward.last().z.abs();

    let backward =
        gen.integrate(&s0, &IntegratorConfig::new(1e-3, -1000.0).record_every(1000).run_to_end()).unwrap();
    let mut detail = format!("forward |z| {forward_err:.1e}");
    let mut ok = forward_err <= 1e-6;
    for t in [-100.0, -1000.0] {
        let s = backward.sample_near(t).unwrap();
        assert!((s.t - t).abs() < 1e-9);
        let gap = (s.z - 3.0).abs();
        let oracle = oracle_z_after(-t);
        let rate = gap * t.abs();
        let oracle_rate = (3.0 - oracle) * t.abs();
        ok &= gap <= 10.0 / t.abs() && (s.z - oracle).abs() <= 1e-9 && oracle_rate <= 10.0;
        detail += &format!(
            "; t={t}: |z-3| {gap:.3e} (bound {:.1e}), |t||z-3| {rate:.4} vs oracle {oracle_rate:.4}",
            10.0 / t.abs()
        );
    }
    verdict(7, "two-equilibrium limits F_I forward, F_II backward", ok, detail);
}

#[test]
fn c08_sign_tables() {
    let sym = |rows: &[relaxation::SignRow], f: fn(&relaxation::SignRow) -> Sign| -> String {
        rows.iter().map(|r| f(r).symbol()).collect()
    };
    let single = RelaxationGenerator::single(constant(1, 2.0).unwrap());
    let t1 = single.sign_table(&[0.0], &[1.0, 2.0, 3.0]).unwrap();
    let t1_ok = sym(&t1, |r| r.sign_w) == "+0-" && t1.iter().all(|r| r.div == -1.0);

    let mut t2_ok = true;
    let mut detail = String::new();
    for (a, b) in [(0.0, 3.0), (-1.3, 0.7)] {
        let gen = RelaxationGenerator::two(constant(1, a).unwrap(), constant(1, b).unwrap()).unwrap();
        let z0 = (2.0 * a + b) / 3.0;
        let samples = [a - 1.0, a, 0.5 * (a + z0), z0, 0.5 * (z0 + b), b, b + 1.0];
        let t2 = gen.sign_table(&[0.0], &samples).unwrap();
        let (w, d) = (sym(&t2, |r| r.sign_w), sym(&t2, |r| r.sign_div));
        t2_ok &= w == "+0---0-" && d == "---0+0-";
        detail += &format!("; (F_I,F_II)=({a},{b}): w {w} div {d}");
    }
    verdict(8, "sign tables", t1_ok && t2_ok, format!("single w {}{detail}", sym(&t1, |r| r.sign_w)));
}

#[test]
fn c09_compressibility_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut exact = true;
    let mut preserved = true;
    let mut contracting_seen = 0;
    for n in 1..=3 {
        let single = RelaxationGenerator::single(quadratic(random_spd(&mut rng, n), None, 0.0).unwrap());
        let lower = quadratic(random_spd(&mut rng, n), None, 0.0).unwrap();
        let upper_a = {
            let mut a = random_spd(&mut rng, n);
            // keep F_II − F_I ≥ 1 on the sample box
            for i in 0..n {
                a[(i, i)] += 10.0;
            }
            a
        };
        let upper = quadratic(upper_a, None, 1.0).unwrap();
        let two = RelaxationGenerator::two(lower, upper).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z = rng.gen_range(-3.0..30.0);
            for gen in [&single, &two] {
                let c = gen.compressibility(&x, z).unwrap();
                exact &= c.div_lifted == (n as f64 + 1.0) * c.div_base;
                if c.div_base < 0.0 {
                    contracting_seen += 1;
                    preserved &= c.div_lifted < 0.0;
                }
            }
        }
    }
    verdict(
        9,
        "compressibility of the lift is (n+1) dw/dz",
        exact && preserved && contracting_seen > 0,
        format!("exact {exact}, sign preserved {preserved} over {contracting_seen} contracting samples"),
    );
}

#[test]
fn c10_contact_equivalence() {
    let cfg = IntegratorConfig::new(1e-3, 10.0).record_every(10);
    let ising = ising_free_energy();
    let single = compare_with_lift(
        &ContactHamiltonian::from_f(ising.clone()),
        &RelaxationGenerator::single(ising),
        &ContactState { x: vec![1.0], y: vec![0.0], z: 0.0 },
        &cfg,
    )
    .unwrap();
    let (a, b) = (constant(1, 0.0).unwrap(), constant(1, 3.0).unwrap());
    let pair = compare_with_lift(
        &ContactHamiltonian::from_pair(a.clone(), b.clone()).unwrap(),
        &RelaxationGenerator::two(a, b).unwrap(),
        &ContactState { x: vec![0.0], y: vec![0.5], z: 1.0 },
        &cfg,
    )
    .unwrap();
    verdict(
        10,
        "contact flow equals lifted relaxation",
        single.pass && pair.pass && single.steps == 10_000,
        format!("ising {:.1e}, pair {:.1e}", single.relative_difference, pair.relative_difference),
    );
}

#[test]
fn c11_commutation_witness() {
    let points: Vec<(Potential, Vec<f64>)> = vec![
        (ideal_gas_helmholtz(1.0, 1.0).unwrap(), vec![2.0]),
        (ideal_gas_entropy(1.0, 1.5).unwrap(), vec![1.3, 2.2]),
        (vdw_helmholtz(1.0).unwrap(), vec![1.5]),
        (ising_free_energy(), vec![1.0]),
        (
            quadratic(Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(), None, 0.0).unwrap(),
            vec![0.4, -0.7],
        ),
    ];
    let family = InitialFamily::constant(0.0);
    let mut worst = 0.0_f64;
    for (p, x) in &points {
        let gen = RelaxationGenerator::single(p.clone());
        for t in [0.5, 2.0, 10.0] {
            let r = gen.induced_conjugates(x, t, &family, 1e-3, &DiffConfig::default()).unwrap();
            worst = worst.max(r.residual);
        }
    }
    verdict(
        11,
        "lift equals x-derivative of the induced family",
        worst <= 1e-6,
        format!("max residual {worst:.1e}"),
    );
}

#[test]
fn c12_lyapunov_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let lower = ising_free_energy();
    let upper = quadratic(Matrix::identity(1), None, 1.5).unwrap();
    let gen = RelaxationGenerator::two(lower.clone(), upper.clone()).unwrap();
    let mut worst = 0.0_f64;
    let mut pairs = 0;
    let mut in_upper_region = 0;
    for _ in 0..50 {
        let x = vec![rng.gen_range(-2.0..2.0)];
        let (a, b) = (lower.eval(&x).unwrap(), upper.eval(&x).unwrap());
        let z0 = rng.gen_range(a - 1.0..b + 1.0);
        if z0 >= b {
            in_upper_region += 1;
        }
        let traj = gen
            .integrate(
                &LiftedState::new(x.clone(), vec![0.0], z0),
                &IntegratorConfig::new(1e-3, 20.0).record_every(5),
            )
            .unwrap();
        let rep = gen.lyapunov_check(&x, &traj).unwrap();
        assert_eq!(rep.region_changes, 0);
        pairs += rep.pairs_checked;
        worst = worst.max(rep.max_increment);
    }
    verdict(
        12,
        "Lyapunov functions V_I, V_II non-increasing",
        worst <= 1e-10 && in_upper_region > 0,
        format!("max increment {worst:.1e} over {pairs} steps, {in_upper_region} starts above F_II"),
    );
}

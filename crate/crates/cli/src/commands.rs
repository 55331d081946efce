//! One function per scenario command. Each writes its artifacts and returns
//! the checks requested by the scenario's `expect` block.

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thermoaffine_core::contact::{compare_with_lift, ContactState, EQUIVALENCE_TOL};
use thermoaffine_core::duality::{divergence_report, round_trip_error};
use thermoaffine_core::immersion::DEFAULT_RANK_TOL;
use thermoaffine_core::potentials::make_builtin;
use thermoaffine_core::potentials::response::heat_capacity_from_entropy;
use thermoaffine_core::relaxation::closed_form_single;
use thermoaffine_core::{
    ContactHamiltonian, DualChart, GraphImmersion, IntegratorConfig, LiftedState, Matrix, ModelId,
    ModelParams, Potential, RelaxationGenerator, Trajectory,
};

use crate::error::{CliError, Result};
use crate::output::{indexed, num, nums, write_artifact, Artifact, ArtifactSet, Check};
use crate::scenario::{Command, Expect, Scenario};

pub fn execute(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    match s.command {
        Command::Geometry => geometry(s, out),
        Command::Legendre => legendre(s, out),
        Command::Divergence => divergence(s, out),
        Command::Relax => relax(s, out),
        Command::Sweep => sweep(s, out),
        Command::ContactCompare => contact_compare(s, out),
        Command::SignTable => sign_table(s, out),
    }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn single_model(s: &Scenario) -> Result<(ModelParams, Potential)> {
    let params = s.model.clone().ok_or_else(|| schema("a `model` is required"))?;
    let p = make_builtin(&params)?;
    Ok((params, p))
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// A single potential or a pair of branches, built from the scenario.
enum System {
    Single(Potential),
    Two(Potential, Potential),
}

impl System {
    fn from_scenario(s: &Scenario) -> Result<Self> {
        match (&s.model, &s.pair) {
            (Some(m), None) => Ok(System::Single(make_builtin(m)?)),
            (None, Some(p)) => Ok(System::Two(make_builtin(&p.lower)?, make_builtin(&p.upper)?)),
            _ => Err(schema("give either `model` or `pair`")),
        }
    }

    fn generator(&self) -> Result<RelaxationGenerator> {
        Ok(match self {
            System::Single(f) => RelaxationGenerator::single(f.clone()),
            System::Two(a, b) => RelaxationGenerator::two(a.clone(), b.clone())?,
        })
    }

    fn hamiltonian(&self) -> Result<ContactHamiltonian> {
        Ok(match self {
            System::Single(f) => ContactHamiltonian::from_f(f.clone()),
            System::Two(a, b) => ContactHamiltonian::from_pair(a.clone(), b.clone())?,
        })
    }

    fn dim(&self) -> usize {
        match self {
            System::Single(f) | System::Two(f, _) => f.dim(),
        }
    }
}

// ---------------------------------------------------------------- geometry

fn geometry(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    let (_, p) = single_model(s)?;
    let g = GraphImmersion::new(p.clone());
    let n = g.dim();
    let e = &s.expect;
    let deriv_tol = e.derivative_tol.unwrap_or(1e-6);

    let mut entries = Vec::new();
    let mut rows = Vec::new();
    let (mut deriv, mut resid, mut homog, mut heat) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for x in s.sample_points(&mut s.rng()) {
        let ep = g.equilibrium_point(&x)?;
        let ff = g.fundamental_form(&x, DEFAULT_RANK_TOL)?;
        let conormal = g.conormal(&x)?;
        let (transversal, tangent) = g.check_conormal_conditions(&x)?;
        let codazzi = g.codazzi_residual(&x)?;
        resid = max_of([resid, transversal, tangent, codazzi]);

        let mut residuals = json!({
            "conormal_transversal": transversal,
            "conormal_tangent": tangent,
            "codazzi": codazzi,
        });
        if p.has_analytic_gradient() {
            let d = p.validate_derivatives(&x, deriv_tol)?;
            residuals["gradient_fd"] = json!(d.gradient_error);
            residuals["hessian_fd"] = json!(d.hessian_error);
            deriv = max_of([deriv, d.gradient_error.unwrap_or(0.0), d.hessian_error.unwrap_or(0.0)]);
        }
        let mut entry = json!({
            "x": ep.x,
            "z": ep.z,
            "y": ep.y,
            "h_matrix": ff.matrix.rows(),
            "det": ff.det,
            "eigenvalues": ff.eigenvalues,
            "signature": { "plus": ff.signature.plus, "minus": ff.signature.minus, "zero": ff.signature.zero },
            "classification": ff.classification.as_str(),
            "conormal": conormal.coeffs,
            "residuals": residuals,
        });
        if let Some(h) = &e.homogeneity {
            if h.component >= n {
                return Err(schema(format!("expect.homogeneity.component must be < {n}")));
            }
            homog = max_of([homog, (ep.y[h.component] * x[h.component] - h.value).abs()]);
        }
        if let Some(t) = &e.heat_capacity {
            let c = heat_capacity_from_entropy(&p, &x)?;
            entry["heat_capacity"] = json!(c);
            heat = max_of([heat, (c - t.value).abs()]);
        }
        entries.push(entry);

        let mut row: Vec<String> = nums(&x).collect();
        row.extend(nums(ff.matrix.as_slice()));
        row.push(num(ff.det));
        row.extend([ff.signature.plus, ff.signature.minus, ff.signature.zero].map(|v| v.to_string()));
        row.push(ff.classification.as_str().to_string());
        rows.push(row);
    }

    let mut report = json!({ "model": p.label(), "points": entries });
    let mut checks = Vec::new();
    if let Some(scan) = &s.degeneracy {
        let locus = g.degeneracy_locus(&scan.lower, &scan.upper, scan.samples, DEFAULT_RANK_TOL)?;
        out.csv(
            "degeneracy.csv",
            indexed("x", n).chain(["det".to_string(), "tangential".to_string()]),
            locus.iter().map(|d| {
                nums(&d.x).chain([num(d.det), u8::from(d.tangential).to_string()]).collect::<Vec<_>>()
            }),
        )?;
        report["degeneracy"] = json!(locus
            .iter()
            .map(|d| json!({ "x": d.x, "det": d.det, "tangential": d.tangential }))
            .collect::<Vec<_>>());
        if let Some(targets) = &e.degeneracy_contains {
            let tol = e.degeneracy_tol.unwrap_or(1e-10);
            for (k, t) in targets.iter().enumerate() {
                let dist = locus
                    .iter()
                    .map(|d| d.x.iter().map(|v| (v - t).abs()).fold(0.0, f64::max))
                    .fold(f64::INFINITY, f64::min);
                checks.push(Check::within(
                    &format!("degeneracy near {t} (#{k})"),
                    dist,
                    tol,
                    "degeneracy.csv",
                ));
            }
        }
        if let Some(count) = e.degeneracy_count {
            checks.push(Check::equals("degeneracy count", locus.len(), count, "degeneracy.csv"));
        }
    } else if e.degeneracy_contains.is_some() || e.degeneracy_count.is_some() {
        return Err(schema("degeneracy expectations need a `degeneracy` scan"));
    }

    let mut header: Vec<String> = indexed("x", n).collect();
    for i in 0..n {
        header.extend((0..n).map(|j| format!("h{i}{j}")));
    }
    header.extend(["det", "plus", "minus", "zero", "classification"].map(String::from));
    out.csv("fundamental_form.csv", header, rows)?;
    out.json("geometry_report.json", &report)?;

    const R: &str = "geometry_report.json";
    if e.derivative_tol.is_some() {
        checks.insert(0, Check::within("analytic vs finite-difference derivatives", deriv, deriv_tol, R));
    }
    if let Some(t) = e.residual_tol {
        checks.push(Check::within("conormal and Codazzi residuals", resid, t, R));
    }
    if let Some(h) = &e.homogeneity {
        checks.push(Check::within(&format!("max |y{0} x{0} - {1}|", h.component, h.value), homog, h.tol, R));
    }
    if let Some(t) = &e.heat_capacity {
        checks.push(Check::within(&format!("max |C - {}|", t.value), heat, t.tol, R));
    }
    Ok(checks)
}

// ---------------------------------------------------------------- legendre

/// Closed-form Legendre duals of the built-in convex (or concave) models,
/// used as an independent cross-check of the Newton inversion.
pub fn closed_form_dual(params: &ModelParams, eta: &[f64]) -> Option<f64> {
    let get = |k: &str| params.params.get(k).copied();
    match params.model_id {
        ModelId::IdealGasHelmholtz if eta.len() == 1 && eta[0] > 0.0 => {
            let rt = get("R")? * get("T")?;
            Some(rt - rt * rt.ln() + rt * eta[0].ln())
        }
        ModelId::IdealGasEntropy if eta.len() == 2 && eta[0] > 0.0 && eta[1] > 0.0 => {
            let (r, c) = (get("R")?, get("c")?);
            let (u, v) = (c * r / eta[0], r / eta[1]);
            Some(c * r + r - r * (c * u.ln() + v.ln()))
        }
        ModelId::IsingFreeEnergy if eta.len() == 1 && eta[0].abs() < 1.0 => {
            let e = eta[0];
            Some(e * e.atanh() + 0.5 * (1.0 - e * e).ln() - std::f64::consts::LN_2)
        }
        ModelId::Quadratic => {
            let a = Matrix::from_rows(params.matrix.as_ref()?)?;
            if a.dim() != eta.len() {
                return None;
            }
            let b = params.linear.clone().unwrap_or_else(|| vec![0.0; eta.len()]);
            let shifted: Vec<f64> = eta.iter().zip(&b).map(|(e, b)| e - b).collect();
            let x = a.solve(&shifted)?;
            let offset = get("offset").unwrap_or(0.0);
            Some(0.5 * shifted.iter().zip(&x).map(|(s, x)| s * x).sum::<f64>() - offset)
        }
        _ => None,
    }
}

fn legendre(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    let (params, p) = single_model(s)?;
    let n = p.dim();
    let chart = DualChart::new(p);
    let etas = match (&s.etas, &s.eta_grid) {
        (Some(e), _) => e.clone(),
        (None, Some(g)) => g.points(),
        (None, None) => return Err(schema("legendre needs `etas` or `eta_grid`")),
    };
    let x0 = s.x0.clone().unwrap_or_else(|| vec![1.0; n]);

    let (mut worst_closed, mut worst_rt, mut closed_count) = (0.0_f64, 0.0_f64, 0usize);
    let mut rows = Vec::new();
    for eta in &etas {
        let x = chart.inverse_map(eta, &x0)?;
        let phi = chart.dual_potential(eta, &x0)?;
        let triple = chart.triple_identity_residual(&x)?;
        let rt = round_trip_error(&chart, &x, &x0)?;
        worst_rt = max_of([worst_rt, rt]);
        let closed = closed_form_dual(&params, eta);
        let err = closed.map(|c| (phi - c).abs());
        if let Some(err) = err {
            closed_count += 1;
            worst_closed = max_of([worst_closed, err]);
        }
        let blank = |v: Option<f64>| v.map(num).unwrap_or_default();
        let mut row: Vec<String> = nums(eta).chain(nums(&x)).collect();
        row.extend([num(phi), blank(closed), blank(err), num(triple), num(rt)]);
        rows.push(row);
    }
    let header = indexed("eta", n).chain(indexed("x", n)).chain(
        ["phi", "phi_closed", "closed_form_error", "triple_residual", "round_trip_error"].map(String::from),
    );
    out.csv("legendre.csv", header, rows)?;

    let mut checks = Vec::new();
    if let Some(tol) = s.expect.closed_form_tol {
        if closed_count == 0 {
            return Err(schema(format!(
                "no closed-form dual for {} at the requested points",
                params.model_id
            )));
        }
        checks.push(Check::within("max |phi - closed form|", worst_closed, tol, "legendre.csv"));
    }
    if let Some(tol) = s.expect.round_trip_tol {
        checks.push(Check::within("max round-trip error", worst_rt, tol, "legendre.csv"));
    }
    Ok(checks)
}

// -------------------------------------------------------------- divergence

fn divergence(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    let (_, p) = single_model(s)?;
    let n = p.dim();
    let chart = DualChart::new(p.clone());
    let g = GraphImmersion::new(p);
    let mut rng = s.rng();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = match &s.random {
        Some(r) => (0..r.count).map(|_| (r.draw(&mut rng), r.draw(&mut rng))).collect(),
        None => {
            let pts = s.sample_points(&mut rng);
            let mut v = Vec::new();
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate() {
                    if i != j {
                        v.push((a.clone(), b.clone()));
                    }
                }
            }
            v
        }
    };
    let mut worst = 0.0_f64;
    let mut rows = Vec::new();
    for (x1, x2) in &pairs {
        let r = divergence_report(&chart, &g, x1, x2)?;
        worst = max_of([worst, r.discrepancy]);
        rows.push(
            nums(x1)
                .chain(nums(x2))
                .chain([num(r.canonical), num(r.geometric), num(r.discrepancy)])
                .collect::<Vec<_>>(),
        );
    }
    let header = indexed("x1_", n)
        .chain(indexed("x2_", n))
        .chain(["D_canonical", "D_geometric", "discrepancy"].map(String::from));
    out.csv("divergence.csv", header, rows)?;
    Ok(s.expect
        .discrepancy_tol
        .map(|tol| Check::within("max |D_canonical - D_geometric|", worst, tol, "divergence.csv"))
        .into_iter()
        .collect())
}

// -------------------------------------------------------------- relaxation

fn trajectory_csv(gen: &RelaxationGenerator, traj: &Trajectory) -> Result<Vec<u8>> {
    let n = gen.dim();
    let mut rows = Vec::with_capacity(traj.samples.len());
    for st in &traj.samples {
        let w = gen.w_eval(st.z, &st.x)?;
        let (dw_dz, _) = gen.w_partials(st.z, &st.x)?;
        let mut row = vec![num(st.t)];
        row.extend(nums(&st.x).chain(nums(&st.y)));
        row.extend([num(st.z), num(w), num(dw_dz)]);
        rows.push(row);
    }
    let header = std::iter::once("t".to_string())
        .chain(indexed("x", n))
        .chain(indexed("y", n))
        .chain(["z", "w", "div_base"].map(String::from));
    Ok(crate::output::csv_bytes(header, rows))
}

/// Metrics of one relaxation run; each is `None` unless requested.
#[derive(Debug, Clone, Default)]
struct RelaxMetrics {
    equilibrium_error: Option<f64>,
    closed_form_error: Option<f64>,
    approach_rate: Option<f64>,
    lyapunov_increment: Option<f64>,
}

impl RelaxMetrics {
    fn to_json(&self) -> Value {
        json!({
            "equilibrium_error": self.equilibrium_error,
            "closed_form_error": self.closed_form_error,
            "approach_rate": self.approach_rate,
            "lyapunov_max_increment": self.lyapunov_increment,
        })
    }

    fn columns(&self) -> [String; 4] {
        [self.equilibrium_error, self.closed_form_error, self.approach_rate, self.lyapunov_increment]
            .map(|v| v.map(num).unwrap_or_default())
    }
}

const METRIC_NAMES: [&str; 4] =
    ["equilibrium_error", "closed_form_error", "approach_rate", "lyapunov_max_increment"];

fn relax_metrics(
    sys: &System,
    gen: &RelaxationGenerator,
    x: &[f64],
    traj: &Trajectory,
    e: &Expect,
) -> Result<RelaxMetrics> {
    let mut m = RelaxMetrics::default();
    let last = traj.last();
    let z0 = traj.samples[0].z;
    if e.equilibrium_tol.is_some() {
        let backward = last.t < 0.0;
        let target = match sys {
            System::Single(f) => f,
            System::Two(a, b) => {
                if backward {
                    b
                } else {
                    a
                }
            }
        };
        let mut err = (last.z - target.eval(x)?).abs();
        if !backward {
            let grad = target.gradient(x)?;
            err = max_of(std::iter::once(err).chain(last.y.iter().zip(&grad).map(|(y, g)| (y - g).abs())));
        }
        m.equilibrium_error = Some(err);
    }
    if e.closed_form_tol.is_some() {
        let System::Single(f) = sys else {
            return Err(schema("closed_form_tol needs a single `model`"));
        };
        let mut worst = 0.0_f64;
        for st in &traj.samples {
            worst = max_of([worst, (st.z - closed_form_single(f, x, z0, st.t)?).abs()]);
        }
        m.closed_form_error = Some(worst);
    }
    if e.approach_rate.is_some() {
        let System::Two(_, upper) = sys else {
            return Err(schema("approach_rate needs a `pair`"));
        };
        let fu = upper.eval(x)?;
        m.approach_rate = Some(max_of(traj.samples.iter().map(|st| (st.z - fu).abs() * st.t.abs())));
    }
    if e.lyapunov_tol.is_some() {
        if !matches!(sys, System::Two(..)) {
            return Err(schema("lyapunov_tol needs a `pair`"));
        }
        m.lyapunov_increment = Some(gen.lyapunov_check(x, traj)?.max_increment);
    }
    Ok(m)
}

fn metric_checks(e: &Expect, worst: &RelaxMetrics, artifact: &str) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut add = |name: &str, v: Option<f64>, tol: Option<f64>| {
        if let (Some(v), Some(tol)) = (v, tol) {
            checks.push(Check::within(name, v, tol, artifact));
        }
    };
    add("final distance to equilibrium", worst.equilibrium_error, e.equilibrium_tol);
    add("max |z_rk4 - z_closed|", worst.closed_form_error, e.closed_form_tol);
    add("max |t| |z - F_II|", worst.approach_rate, e.approach_rate);
    add("max Lyapunov increment", worst.lyapunov_increment, e.lyapunov_tol);
    checks
}

fn initial_y(s: &Scenario, n: usize) -> Result<Vec<f64>> {
    let y0 = s.initial.as_ref().and_then(|i| i.y0.clone()).unwrap_or_else(|| vec![0.0; n]);
    if y0.len() != n {
        return Err(thermoaffine_core::Error::DimensionMismatch { expected: n, found: y0.len() }.into());
    }
    Ok(y0)
}

fn convergence_json(traj: &Trajectory, metrics: &RelaxMetrics) -> Value {
    let last = traj.last();
    json!({
        "converged_to": traj.converged_to.as_ref().map(|(y, z)| json!({ "y": y, "z": z })),
        "residual": traj.convergence_residual,
        "steps": traj.steps,
        "final": { "t": last.t, "x": last.x, "y": last.y, "z": last.z },
        "metrics": metrics.to_json(),
    })
}

fn relax(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    let sys = System::from_scenario(s)?;
    let gen = sys.generator()?;
    let x = s.points.as_ref().map(|p| p[0].clone()).ok_or_else(|| schema("relax needs one point"))?;
    let z0 = s.initial.as_ref().map_or(0.0, |i| i.z0);
    let cfg = s.integrator.ok_or_else(|| schema("relax needs an `integrator`"))?;
    let traj = gen.integrate(&LiftedState::new(x.clone(), initial_y(s, sys.dim())?, z0), &cfg)?;
    let metrics = relax_metrics(&sys, &gen, &x, &traj, &s.expect)?;
    out.push(write_artifact(out.root(), "trajectory.csv", &trajectory_csv(&gen, &traj)?)?);
    out.json("convergence.json", &convergence_json(&traj, &metrics))?;
    Ok(metric_checks(&s.expect, &metrics, "convergence.json"))
}

fn sweep(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    let sys = System::from_scenario(s)?;
    let gen = sys.generator()?;
    let n = sys.dim();
    let cfg: IntegratorConfig = s.integrator.ok_or_else(|| schema("sweep needs an `integrator`"))?;
    let y0 = initial_y(s, n)?;
    let mut rng = s.rng();
    let points = s.sample_points(&mut rng);
    let init = s.initial.clone().unwrap_or_default();
    let items: Vec<(usize, Vec<f64>, f64)> = points
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            let z0 = match init.z0_range {
                Some([lo, hi]) => rng.gen_range(lo..hi),
                None => init.z0,
            };
            (k, x, z0)
        })
        .collect();

    // Items are independent; each writes its own trajectory file.
    let root = out.root().to_path_buf();
    let results: Vec<(Artifact, Vec<String>, RelaxMetrics)> = items
        .par_iter()
        .map(|(k, x, z0)| -> Result<_> {
            let traj = gen.integrate(&LiftedState::new(x.clone(), y0.clone(), *z0), &cfg)?;
            let m = relax_metrics(&sys, &gen, x, &traj, &s.expect)?;
            let file = format!("trajectories/trajectory_{k:04}.csv");
            let artifact = write_artifact(&root, &file, &trajectory_csv(&gen, &traj)?)?;
            let last = traj.last();
            let mut row = vec![k.to_string()];
            row.extend(nums(x));
            row.push(num(*z0));
            row.extend([num(last.t), num(last.z)]);
            row.extend(nums(&last.y));
            row.push(traj.steps.to_string());
            row.push(u8::from(traj.converged_to.is_some()).to_string());
            row.extend(m.columns());
            row.push(file);
            Ok((artifact, row, m))
        })
        .collect::<Result<_>>()?;

    let mut worst = RelaxMetrics::default();
    let fold = |acc: Option<f64>, v: Option<f64>| match (acc, v) {
        (a, None) => a,
        (None, Some(v)) => Some(v),
        (Some(a), Some(v)) => Some(max_of([a, v])),
    };
    let mut rows = Vec::with_capacity(results.len());
    for (artifact, row, m) in results {
        out.push(artifact);
        rows.push(row);
        worst.equilibrium_error = fold(worst.equilibrium_error, m.equilibrium_error);
        worst.closed_form_error = fold(worst.closed_form_error, m.closed_form_error);
        worst.approach_rate = fold(worst.approach_rate, m.approach_rate);
        worst.lyapunov_increment = fold(worst.lyapunov_increment, m.lyapunov_increment);
    }
    let header = std::iter::once("item".to_string())
        .chain(indexed("x", n))
        .chain(["z0", "t_final", "z_final"].map(String::from))
        .chain(indexed("y_final", n))
        .chain(["steps", "converged"].map(String::from))
        .chain(METRIC_NAMES.map(String::from))
        .chain(std::iter::once("trajectory".to_string()));
    out.csv("sweep.csv", header, rows)?;
    Ok(metric_checks(&s.expect, &worst, "sweep.csv"))
}

// ----------------------------------------------------------------- contact

fn contact_compare(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    let sys = System::from_scenario(s)?;
    let (ch, gen) = (sys.hamiltonian()?, sys.generator()?);
    let n = sys.dim();
    let x =
        s.points.as_ref().map(|p| p[0].clone()).ok_or_else(|| schema("contact-compare needs one point"))?;
    let cfg = s.integrator.ok_or_else(|| schema("contact-compare needs an `integrator`"))?;
    let z0 = s.initial.as_ref().map_or(0.0, |i| i.z0);
    let s0 = ContactState { x: x.clone(), y: initial_y(s, n)?, z: z0 };

    let report = compare_with_lift(&ch, &gen, &s0, &cfg)?;
    let traj = ch.integrate(&s0, &cfg.run_to_end())?;
    let mut rows = Vec::with_capacity(traj.samples.len());
    for st in &traj.samples {
        let h = ch.value(&st.x, st.z)?;
        let (_, dh_dz) = ch.partials(&st.x, st.z)?;
        let mut row = vec![num(st.t)];
        row.extend(nums(&st.x).chain(nums(&st.y)));
        row.extend([num(st.z), num(h), num(dh_dz)]);
        rows.push(row);
    }
    let header = std::iter::once("t".to_string())
        .chain(indexed("x", n))
        .chain(indexed("y", n))
        .chain(["z", "h", "dh_dz"].map(String::from));
    out.csv("contact_trajectory.csv", header, rows)?;

    let tol = s.expect.comparison_tol.unwrap_or(EQUIVALENCE_TOL);
    out.json(
        "comparison.json",
        &json!({
            "sup_norm_difference": report.sup_norm_difference,
            "relative_difference": report.relative_difference,
            "steps": report.steps,
            "dt": report.dt,
            "same_source": report.same_source,
            "tol": tol,
            "pass": report.same_source && report.relative_difference <= tol,
        }),
    )?;
    Ok(vec![Check::within(
        "relative sup-norm |contact - lift|",
        report.relative_difference,
        tol,
        "comparison.json",
    )])
}

// -------------------------------------------------------------- sign table

fn sign_table(s: &Scenario, out: &mut ArtifactSet) -> Result<Vec<Check>> {
    let sys = System::from_scenario(s)?;
    let gen = sys.generator()?;
    let x = s.points.as_ref().map(|p| p[0].clone()).ok_or_else(|| schema("sign-table needs one point"))?;
    let zs = match &s.z_samples {
        Some(z) => z.clone(),
        None => match &sys {
            System::Single(f) => {
                let v = f.eval(&x)?;
                vec![v - 1.0, v, v + 1.0]
            }
            System::Two(a, b) => {
                let (a, b) = (a.eval(&x)?, b.eval(&x)?);
                let z0 = (2.0 * a + b) / 3.0;
                vec![a - 1.0, a, 0.5 * (a + z0), z0, 0.5 * (z0 + b), b, b + 1.0]
            }
        },
    };
    let table = gen.sign_table(&x, &zs)?;
    out.csv(
        "sign_table.csv",
        ["z", "w", "div", "sign_w", "sign_div"].map(String::from),
        table.iter().map(|r| {
            vec![
                num(r.z),
                num(r.w),
                num(r.div),
                r.sign_w.symbol().to_string(),
                r.sign_div.symbol().to_string(),
            ]
        }),
    )?;
    let w: String = table.iter().map(|r| r.sign_w.symbol()).collect();
    let d: String = table.iter().map(|r| r.sign_div.symbol()).collect();
    let mut checks = Vec::new();
    if let Some(p) = &s.expect.sign_w {
        checks.push(Check::equals("sign pattern of w", w.as_str(), p.as_str(), "sign_table.csv"));
    }
    if let Some(p) = &s.expect.sign_div {
        checks.push(Check::equals("sign pattern of div", d.as_str(), p.as_str(), "sign_table.csv"));
    }
    if let Some(t) = &s.expect.div_constant {
        let worst = max_of(table.iter().map(|r| (r.div - t.value).abs()));
        checks.push(Check::within(&format!("max |div - ({})|", t.value), worst, t.tol, "sign_table.csv"));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_duals_match_their_definitions() {
        let helm = ModelParams::new(ModelId::IdealGasHelmholtz).with("R", 1.0).with("T", 1.0);
        assert!((closed_form_dual(&helm, &[0.5]).unwrap() - (1.0 + 0.5_f64.ln())).abs() < 1e-15);
        let ising = ModelParams::new(ModelId::IsingFreeEnergy);
        let eta = 1.0_f64.tanh();
        let direct = eta * 1.0 - (1.0_f64.cosh().ln() + std::f64::consts::LN_2);
        assert!((closed_form_dual(&ising, &[eta]).unwrap() - direct).abs() < 1e-14);
        assert_eq!(closed_form_dual(&ising, &[1.0]), None);
        let quad = ModelParams::new(ModelId::Quadratic)
            .with_matrix(vec![vec![2.0, 0.0], vec![0.0, 4.0]])
            .with_linear(vec![1.0, 0.0])
            .with("offset", 0.5);
        // x = A⁻¹(η − b) = (1, 0.5); φ = ½ (η − b)·x − offset
        assert_eq!(closed_form_dual(&quad, &[3.0, 2.0]), Some(0.5 * (2.0 + 1.0) - 0.5));
        assert_eq!(closed_form_dual(&ModelParams::new(ModelId::VdwHelmholtz).with("T", 1.0), &[1.0]), None);
    }

    #[test]
    fn max_of_propagates_nan() {
        assert!(max_of([1.0, f64::NAN, 2.0]).is_nan());
        assert_eq!(max_of([1.0, 3.0, 2.0]), 3.0);
    }
}

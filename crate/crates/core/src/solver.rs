//! Discrete energy, its gradient, and the branch solves.
//!
//! For each branch index `n` the energy
//!
//! ```text
//! J(u) = ½ Σ_e |e| Φ(|∇u_e|²) − Σ_i m_i F(x_i, u_i)
//! ```
//!
//! is minimized over the nodal box `β_n φ₁(x_i) ≤ u_i ≤ γ_n` by projected
//! gradient descent with Armijo backtracking and Barzilai–Borwein step
//! estimates, started at the box midpoint.
//!
//! `F` is anchored once per node at the box lower bound and advanced by
//! short quadratures from there. Line searches compare energies through
//! [`EnergyFunctional::difference`], which integrates the change directly
//! instead of subtracting two nearly equal totals, so Armijo tests stay
//! meaningful down to the gradient tolerance.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::eigen::EigenPair;
use crate::error::{check_len, Error, Result};
use crate::io::fmt_f64;
use crate::linalg::dot;
use crate::mesh::{Mesh, ScalarField};
use crate::model::{antiderivative, eval_f, integrate_f, Nonlinearity, PhiOperator, Site, DEFAULT_F_TOL};
use crate::par::{self, Execution};

/// Bundles the data every energy evaluation needs.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub mesh: &'a Mesh,
    pub op: &'a dyn PhiOperator,
    pub nl: &'a dyn Nonlinearity,
    pub eig: &'a EigenPair,
}

impl<'a> Problem<'a> {
    pub fn new(mesh: &'a Mesh, op: &'a dyn PhiOperator, nl: &'a dyn Nonlinearity, eig: &'a EigenPair) -> Self {
        Problem { mesh, op, nl, eig }
    }

    pub fn site(&self, node: usize) -> Site {
        Site::new(self.mesh.nodes()[node], self.eig.phi1.values()[node])
    }

    /// Nodal box `[β_n φ₁, γ_n]` (boundary nodes pinned to 0).
    pub fn branch_box(&self, n: u32) -> Result<(Vec<f64>, Vec<f64>)> {
        let (beta, gamma) = (self.nl.beta(n), self.nl.gamma(n));
        let phi = self.eig.phi1.values();
        let mut lower = vec![0.0; phi.len()];
        let mut upper = vec![0.0; phi.len()];
        for i in self.mesh.interior_nodes() {
            lower[i] = beta * phi[i];
            upper[i] = gamma;
            if lower[i] > upper[i] {
                return Err(Error::Infeasible {
                    node: i,
                    lower: lower[i],
                    upper: upper[i],
                });
            }
        }
        Ok((lower, upper))
    }
}

/// Discrete energy with per-node antiderivative anchors.
pub struct EnergyFunctional<'a> {
    problem: Problem<'a>,
    sites: Vec<Site>,
    reference: Vec<f64>,
    anchors: Vec<f64>,
    f_tol: f64,
}

impl<'a> EnergyFunctional<'a> {
    /// Anchors `F(x_i, reference_i)` at every interior node.
    pub fn new(problem: Problem<'a>, reference: Vec<f64>, f_tol: f64, exec: Execution) -> Result<Self> {
        let mesh = problem.mesh;
        check_len(mesh.node_count(), reference.len())?;
        problem.eig.phi1.check_mesh(mesh)?;
        let sites: Vec<Site> = (0..mesh.node_count()).map(|i| problem.site(i)).collect();
        let anchors = par::map_range(exec, mesh.node_count(), |i| {
            if mesh.is_boundary(i) || reference[i] == 0.0 {
                Ok(0.0)
            } else {
                antiderivative(problem.nl, sites[i], reference[i], f_tol)
            }
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        Ok(EnergyFunctional {
            problem,
            sites,
            reference,
            anchors,
            f_tol,
        })
    }

    /// Anchored at zero, where `F` vanishes.
    pub fn unanchored(problem: Problem<'a>) -> Result<Self> {
        let zeros = vec![0.0; problem.mesh.node_count()];
        Self::new(problem, zeros, DEFAULT_F_TOL, Execution::Sequential)
    }

    pub fn problem(&self) -> Problem<'a> {
        self.problem
    }

    fn check_field(&self, u: &[f64]) -> Result<()> {
        let mesh = self.problem.mesh;
        check_len(mesh.node_count(), u.len())?;
        for (i, &v) in u.iter().enumerate() {
            if mesh.is_boundary(i) {
                if v != 0.0 {
                    return Err(Error::Domain(format!("boundary node {i} carries {v:e}, expected 0")));
                }
            } else if !(v >= 0.0) {
                return Err(Error::Domain(format!("interior node {i} carries {v:e}, expected >= 0")));
            }
        }
        Ok(())
    }

    /// `F(x_i, u_i)` from the anchor.
    fn big_f(&self, i: usize, value: f64) -> Result<f64> {
        let r = self.reference[i];
        Ok(self.anchors[i] + integrate_f(self.problem.nl, self.sites[i], r, value - r, self.f_tol)?)
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        self.check_field(u)?;
        let mesh = self.problem.mesh;
        let mut gradient_part = 0.0;
        for e in 0..mesh.element_count() {
            let g = mesh.element_gradient(e, u);
            gradient_part += mesh.volume(e) * self.problem.op.capital_phi(g[0] * g[0] + g[1] * g[1]);
        }
        let mut source_part = 0.0;
        for i in mesh.interior_nodes() {
            source_part += mesh.lumped_mass()[i] * self.big_f(i, u[i])?;
        }
        Ok(0.5 * gradient_part - source_part)
    }

    /// `∂J/∂u_i` for every node; boundary entries are zero.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_field(u)?;
        let mut g = vec![0.0; u.len()];
        self.gradient_into(u, &mut g);
        Ok(g)
    }

    fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        let mesh = self.problem.mesh;
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..mesh.element_count() {
            let gu = mesh.element_gradient(e, u);
            let w = mesh.volume(e) * self.problem.op.phi(gu[0] * gu[0] + gu[1] * gu[1]);
            for (&node, grad) in mesh.element(e).iter().zip(mesh.shape_gradients(e)) {
                out[node] += w * (gu[0] * grad[0] + gu[1] * grad[1]);
            }
        }
        let mass = mesh.lumped_mass();
        for (i, v) in out.iter_mut().enumerate() {
            if mesh.is_boundary(i) {
                *v = 0.0;
            } else {
                *v -= mass[i] * eval_f(self.problem.nl, self.sites[i], u[i]);
            }
        }
    }

    /// `J(u + d) − J(u)`, integrated along the change rather than subtracted.
    pub fn difference(&self, u: &[f64], d: &[f64]) -> Result<f64> {
        let mesh = self.problem.mesh;
        check_len(u.len(), d.len())?;
        let mut gradient_part = 0.0;
        for e in 0..mesh.element_count() {
            let gu = mesh.element_gradient(e, u);
            let gd = mesh.element_gradient(e, d);
            let s = gu[0] * gu[0] + gu[1] * gu[1];
            let ds = gd[0] * (2.0 * gu[0] + gd[0]) + gd[1] * (2.0 * gu[1] + gd[1]);
            if ds != 0.0 {
                gradient_part += mesh.volume(e) * self.problem.op.capital_phi_increment(s, ds);
            }
        }
        let mut source_part = 0.0;
        for i in mesh.interior_nodes() {
            if d[i] != 0.0 {
                source_part += mesh.lumped_mass()[i]
                    * integrate_f(self.problem.nl, self.sites[i], u[i], d[i], self.f_tol)?;
            }
        }
        Ok(0.5 * gradient_part - source_part)
    }
}

/// `J(u) = ½ ∫ Φ(|∇u|²) − ∫ F(x, u)` with vertex quadrature for `F`.
pub fn energy(mesh: &Mesh, op: &dyn PhiOperator, nl: &dyn Nonlinearity, eig: &EigenPair, u: &ScalarField) -> Result<f64> {
    u.check_mesh(mesh)?;
    EnergyFunctional::unanchored(Problem::new(mesh, op, nl, eig))?.value(u.values())
}

/// Energy gradient against the hat functions; boundary entries are zero.
pub fn energy_gradient(
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    u: &ScalarField,
) -> Result<Vec<f64>> {
    u.check_mesh(mesh)?;
    EnergyFunctional::unanchored(Problem::new(mesh, op, nl, eig))?.gradient(u.values())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Stop when the projected-gradient ∞-norm falls to this value.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Clamp for the Barzilai–Borwein step.
    pub step_min: f64,
    pub step_max: f64,
    /// Absolute tolerance for antiderivative anchors.
    pub f_tol: f64,
    /// `verified` requires KKT and weak residuals within `verify_factor · grad_tol`.
    pub verify_factor: f64,
    /// Record the energy after every accepted step.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tol: 1e-9,
            max_iter: 50_000,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            step_min: 1e-8,
            step_max: 1e2,
            f_tol: DEFAULT_F_TOL,
            verify_factor: 10.0,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.f_tol > 0.0) {
            return bad("f_tol must be positive");
        }
        if !(self.step_min > 0.0 && self.step_min <= self.step_max) {
            return bad("step bounds must satisfy 0 < step_min <= step_max");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }
}

/// Per-iteration record, kept when [`SolverConfig::record_trace`] is set.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// Energy at the start and after each accepted step, accumulated from `steps`.
    pub energies: Vec<f64>,
    /// Energy change of each accepted step.
    pub steps: Vec<f64>,
    /// Largest box violation seen over all iterates (≤ 0 means always feasible).
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct BranchSolution {
    pub n: u32,
    pub beta: f64,
    pub gamma: f64,
    pub u: ScalarField,
    pub energy: f64,
    pub kkt_residual: f64,
    /// ∞-norm of the unconstrained weak residual over interior nodes.
    pub weak_residual: f64,
    pub sup_norm: f64,
    /// max over elements of |∇u|
    pub grad_sup: f64,
    pub active_lower: Vec<usize>,
    pub active_upper: Vec<usize>,
    pub iterations: usize,
    pub verified: bool,
    pub trace: Option<Trace>,
}

/// Nodes within this distance of a bound count as active.
pub const ACTIVE_TOL: f64 = 1e-12;

/// Minimizes the energy over the branch box `[β_n φ₁, γ_n]`.
pub fn solve_branch(
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    n: u32,
    cfg: &SolverConfig,
) -> Result<BranchSolution> {
    solve_branch_with(Problem::new(mesh, op, nl, eig), n, cfg, Execution::Sequential)
}

pub fn solve_branch_with(problem: Problem<'_>, n: u32, cfg: &SolverConfig, exec: Execution) -> Result<BranchSolution> {
    cfg.validate()?;
    let (lower, upper) = problem.branch_box(n)?;
    let functional = EnergyFunctional::new(problem, lower.clone(), cfg.f_tol, exec)?;
    let start: Vec<f64> = lower.iter().zip(&upper).map(|(l, h)| 0.5 * (l + h)).collect();
    let outcome = minimize_in_box(&functional, &lower, &upper, start, problem.eig.lambda1, cfg)?;
    finish(problem, &functional, n, &lower, &upper, outcome, cfg)
}

struct Minimized {
    u: Vec<f64>,
    g: Vec<f64>,
    iterations: usize,
    trace: Option<Trace>,
}

/// Projected gradient with Armijo backtracking along the projection arc.
fn minimize_in_box(
    functional: &EnergyFunctional<'_>,
    lower: &[f64],
    upper: &[f64],
    mut u: Vec<f64>,
    lambda1: f64,
    cfg: &SolverConfig,
) -> Result<Minimized> {
    let n = u.len();
    let project = |i: usize, v: f64| v.max(lower[i]).min(upper[i]);
    let mut g = functional.gradient(&u)?;
    let mut g_new = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut step = 1.0 / lambda1;
    let mut trace = cfg.record_trace.then(|| Trace {
        energies: vec![0.0],
        steps: Vec::new(),
        max_violation: f64::NEG_INFINITY,
    });
    let mut energy = 0.0;
    if let Some(t) = trace.as_mut() {
        energy = functional.value(&u)?;
        t.energies[0] = energy;
    }

    for it in 0..cfg.max_iter {
        let pg = (0..n).map(|i| (project(i, u[i] - g[i]) - u[i]).abs()).fold(0.0, f64::max);
        if pg <= cfg.grad_tol {
            return Ok(Minimized { u, g, iterations: it, trace });
        }

        let mut t = step;
        let accepted = loop {
            for i in 0..n {
                d[i] = project(i, u[i] - t * g[i]) - u[i];
            }
            let slope = dot(&g, &d);
            if slope < 0.0 {
                let change = functional.difference(&u, &d)?;
                if change <= cfg.armijo_c * slope {
                    break Some(change);
                }
            }
            t *= cfg.backtrack_factor;
            if t < 1e-30 {
                break None;
            }
        };
        let Some(change) = accepted else {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: pg,
                last: u,
            });
        };

        for i in 0..n {
            u[i] += d[i];
        }
        functional.gradient_into(&u, &mut g_new);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            ss += d[i] * d[i];
            sy += d[i] * (g_new[i] - g[i]);
        }
        step = if sy > 0.0 {
            (ss / sy).clamp(cfg.step_min, cfg.step_max)
        } else {
            cfg.step_max
        };
        std::mem::swap(&mut g, &mut g_new);

        if let Some(t) = trace.as_mut() {
            energy += change;
            t.energies.push(energy);
            t.steps.push(change);
            let violation = (0..n)
                .map(|i| (lower[i] - u[i]).max(u[i] - upper[i]))
                .fold(f64::NEG_INFINITY, f64::max);
            t.max_violation = t.max_violation.max(violation);
        }
    }
    let pg = (0..n).map(|i| (project(i, u[i] - g[i]) - u[i]).abs()).fold(0.0, f64::max);
    if pg <= cfg.grad_tol {
        return Ok(Minimized {
            u,
            g,
            iterations: cfg.max_iter,
            trace,
        });
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual: pg,
        last: u,
    })
}

fn finish(
    problem: Problem<'_>,
    functional: &EnergyFunctional<'_>,
    n: u32,
    lower: &[f64],
    upper: &[f64],
    m: Minimized,
    cfg: &SolverConfig,
) -> Result<BranchSolution> {
    let mesh = problem.mesh;
    let tol = cfg.verify_factor * cfg.grad_tol;
    let mut active_lower = Vec::new();
    let mut active_upper = Vec::new();
    let mut kkt: f64 = 0.0;
    let mut weak: f64 = 0.0;
    for i in mesh.interior_nodes() {
        let gi = m.g[i];
        weak = weak.max(gi.abs());
        if m.u[i] <= lower[i] + ACTIVE_TOL {
            active_lower.push(i);
            kkt = kkt.max(-gi);
        } else if m.u[i] >= upper[i] - ACTIVE_TOL {
            active_upper.push(i);
            kkt = kkt.max(gi);
        } else {
            kkt = kkt.max(gi.abs());
        }
    }
    let energy = functional.value(&m.u)?;
    let grad_sup = (0..mesh.element_count())
        .map(|e| {
            let g = mesh.element_gradient(e, &m.u);
            (g[0] * g[0] + g[1] * g[1]).sqrt()
        })
        .fold(0.0, f64::max);
    let u = ScalarField::new(mesh, m.u)?;
    Ok(BranchSolution {
        n,
        beta: problem.nl.beta(n),
        gamma: problem.nl.gamma(n),
        sup_norm: u.sup_norm(),
        u,
        energy,
        kkt_residual: kkt,
        weak_residual: weak,
        grad_sup,
        active_lower,
        active_upper,
        iterations: m.iterations,
        verified: kkt <= tol && weak <= tol,
        trace: m.trace,
    })
}

/// Outcome of one branch inside a [`BranchSet`].
#[derive(Debug)]
pub struct BranchEntry {
    pub n: u32,
    pub beta: f64,
    pub gamma: f64,
    pub outcome: Result<BranchSolution>,
}

#[derive(Debug)]
pub struct BranchSet {
    pub entries: Vec<BranchEntry>,
    /// Smallest computed index from which every later branch is verified,
    /// has `grad_sup < 1`, and has nonincreasing `sup_norm` and `grad_sup`.
    pub n0: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: u32,
    pub beta_n: f64,
    pub gamma_n: f64,
    pub sup_norm: Option<f64>,
    pub grad_sup: Option<f64>,
    pub energy: Option<f64>,
    pub kkt_residual: Option<f64>,
    pub weak_residual: Option<f64>,
    pub iterations: Option<usize>,
    pub verified: bool,
    pub status: String,
}

pub const DECAY_HEADER: &str =
    "n,beta_n,gamma_n,sup_norm,grad_sup,J,kkt_residual,weak_residual,iterations,verified,status";

impl BranchSet {
    pub fn solutions(&self) -> impl Iterator<Item = &BranchSolution> {
        self.entries.iter().filter_map(|e| e.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &BranchEntry> {
        self.entries.iter().filter(|e| e.outcome.is_err())
    }

    pub fn decay_table(&self) -> Vec<DecayRow> {
        self.entries
            .iter()
            .map(|e| match &e.outcome {
                Ok(s) => DecayRow {
                    n: e.n,
                    beta_n: e.beta,
                    gamma_n: e.gamma,
                    sup_norm: Some(s.sup_norm),
                    grad_sup: Some(s.grad_sup),
                    energy: Some(s.energy),
                    kkt_residual: Some(s.kkt_residual),
                    weak_residual: Some(s.weak_residual),
                    iterations: Some(s.iterations),
                    verified: s.verified,
                    status: "ok".into(),
                },
                Err(err) => DecayRow {
                    n: e.n,
                    beta_n: e.beta,
                    gamma_n: e.gamma,
                    sup_norm: None,
                    grad_sup: None,
                    energy: None,
                    kkt_residual: None,
                    weak_residual: None,
                    iterations: None,
                    verified: false,
                    status: short_error(err),
                },
            })
            .collect()
    }

    pub fn decay_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let mut out = format!("{DECAY_HEADER}\n");
        for r in self.decay_table() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                fmt_f64(r.beta_n),
                fmt_f64(r.gamma_n),
                opt(r.sup_norm),
                opt(r.grad_sup),
                opt(r.energy),
                opt(r.kkt_residual),
                opt(r.weak_residual),
                r.iterations.map(|i| i.to_string()).unwrap_or_default(),
                r.verified,
                r.status
            );
        }
        out
    }
}

fn short_error(err: &Error) -> String {
    let text = match err {
        Error::Infeasible { node, .. } => format!("infeasible at node {node}"),
        Error::NonConvergence { iterations, residual, .. } => {
            format!("not converged after {iterations} iterations (residual {residual:e})")
        }
        other => other.to_string(),
    };
    text.replace([',', '\n', '"'], " ")
}

pub fn branch_csv(mesh: &Mesh, solution: &BranchSolution) -> String {
    crate::io::field_csv(mesh, &solution.u, "u")
}

/// Solves every branch in `n_range` independently; results stay in index order.
pub fn run_branches(
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    n_range: RangeInclusive<u32>,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<BranchSet> {
    if n_range.is_empty() {
        return Err(Error::InvalidConfig("branch range is empty".into()));
    }
    cfg.validate()?;
    let problem = Problem::new(mesh, op, nl, eig);
    let indices: Vec<u32> = n_range.collect();
    let entries = par::map(exec, &indices, |&n| BranchEntry {
        n,
        beta: nl.beta(n),
        gamma: nl.gamma(n),
        outcome: solve_branch_with(problem, n, cfg, exec),
    });
    let n0 = find_n0(&entries);
    Ok(BranchSet { entries, n0 })
}

fn find_n0(entries: &[BranchEntry]) -> Option<u32> {
    let mut n0 = None;
    let mut next: Option<&BranchSolution> = None;
    for entry in entries.iter().rev() {
        let Ok(s) = &entry.outcome else { break };
        if !s.verified || !(s.grad_sup < 1.0) {
            break;
        }
        if let Some(later) = next {
            if later.sup_norm > s.sup_norm || later.grad_sup > s.grad_sup {
                break;
            }
        }
        n0 = Some(entry.n);
        next = Some(s);
    }
    n0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::first_eigenpair;
    use crate::linalg::norm_inf;
    use crate::mesh::{build_mesh, DomainSpec};
    use crate::model::{constant_source, make_example_nonlinearity, make_p_laplacian};

    fn unit_interval(cells: usize) -> Mesh {
        build_mesh(DomainSpec::Interval { a: 0.0, b: 1.0 }, cells).unwrap()
    }

    #[test]
    fn zero_field_has_zero_energy_and_gradient() {
        let mesh = unit_interval(16);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let nl = make_example_nonlinearity(eig.lambda1).unwrap();
        for p in [2.0, 3.0] {
            let op = make_p_laplacian(p).unwrap();
            let zero = ScalarField::zeros(&mesh);
            assert_eq!(energy(&mesh, &op, &nl, &eig, &zero).unwrap(), 0.0);
            assert!(energy_gradient(&mesh, &op, &nl, &eig, &zero).unwrap().iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn hat_energies() {
        let mesh = unit_interval(2);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let zero = constant_source(0.0, |_| 0.0, |_| 1.0);
        let hat = ScalarField::new(&mesh, vec![0.0, 1.0, 0.0]).unwrap();
        let p2 = make_p_laplacian(2.0).unwrap();
        assert!((energy(&mesh, &p2, &zero, &eig, &hat).unwrap() - 2.0).abs() < 1e-14);
        let p4 = make_p_laplacian(4.0).unwrap();
        assert!((energy(&mesh, &p4, &zero, &eig, &hat).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_negative_interior() {
        let mesh = unit_interval(4);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let nl = make_example_nonlinearity(eig.lambda1).unwrap();
        let op = make_p_laplacian(2.0).unwrap();
        let u = ScalarField::new(&mesh, vec![0.0, 0.1, -0.1, 0.1, 0.0]).unwrap();
        assert!(matches!(energy(&mesh, &op, &nl, &eig, &u), Err(Error::Domain(_))));
        assert!(matches!(energy_gradient(&mesh, &op, &nl, &eig, &u), Err(Error::Domain(_))));
    }

    #[test]
    fn linear_gradient_vanishes_at_discrete_solution() {
        let mesh = unit_interval(32);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let one = constant_source(1.0, |_| 0.0, |_| 1.0);
        let op = make_p_laplacian(2.0).unwrap();
        // lumped P1 reproduces the quadratic exactly at the nodes
        let u = ScalarField::interpolate(&mesh, |p| 0.5 * p[0] * (1.0 - p[0]));
        let g = energy_gradient(&mesh, &op, &one, &eig, &u).unwrap();
        assert!(norm_inf(&g) < 1e-14);
    }

    #[test]
    fn difference_matches_values() {
        let mesh = unit_interval(16);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let nl = make_example_nonlinearity(eig.lambda1).unwrap();
        let op = make_p_laplacian(3.0).unwrap();
        let problem = Problem::new(&mesh, &op, &nl, &eig);
        let (lo, hi) = problem.branch_box(2).unwrap();
        let j = EnergyFunctional::new(problem, lo.clone(), 1e-13, Execution::Sequential).unwrap();
        let u: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + 0.3 * (h - l)).collect();
        let d: Vec<f64> = lo.iter().zip(&hi).enumerate().map(|(i, (l, h))| if i % 2 == 0 { 0.2 * (h - l) } else { -0.1 * (h - l) }).collect();
        let w: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
        let direct = j.value(&w).unwrap() - j.value(&u).unwrap();
        assert!((j.difference(&u, &d).unwrap() - direct).abs() < 1e-13);
    }

    #[test]
    fn zero_source_minimizer_is_zero() {
        let mesh = unit_interval(16);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let nl = constant_source(0.0, |_| 0.0, |_| 0.05);
        let op = make_p_laplacian(2.0).unwrap();
        let sol = solve_branch(&mesh, &op, &nl, &eig, 1, &SolverConfig::default()).unwrap();
        assert!(sol.verified);
        assert!(sol.u.sup_norm() < 1e-8);
        assert!(sol.energy.abs() < 1e-15);
    }

    #[test]
    fn infeasible_box_names_node() {
        let mesh = unit_interval(8);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let nl = constant_source(0.0, |_| 1.0, |_| 0.5);
        let op = make_p_laplacian(2.0).unwrap();
        let err = solve_branch(&mesh, &op, &nl, &eig, 0, &SolverConfig::default()).unwrap_err();
        // φ₁ peaks at the midpoint node
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.armijo_c = 1.0;
        assert!(cfg.validate().is_err());
        cfg = SolverConfig { backtrack_factor: 0.0, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = SolverConfig { grad_tol: 0.0, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let mesh = unit_interval(32);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let nl = make_example_nonlinearity(eig.lambda1).unwrap();
        let op = make_p_laplacian(2.0).unwrap();
        let cfg = SolverConfig { max_iter: 2, ..SolverConfig::default() };
        match solve_branch(&mesh, &op, &nl, &eig, 3, &cfg) {
            Err(Error::NonConvergence { iterations, last, residual }) => {
                assert_eq!(iterations, 2);
                assert_eq!(last.len(), mesh.node_count());
                assert!(residual > cfg.grad_tol);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}

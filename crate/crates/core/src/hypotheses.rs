//! Numerical audits of the structural hypotheses.
//!
//! Each check returns a [`HypothesisReport`]. Fail verdicts always carry a
//! [`Witness`] with the violating location and value. Conditions that are
//! limits (`β_n, γ_n → 0`, divergence of the subsolution rate) can only be
//! observed over a finite range; passing reports for them carry the
//! `inconclusive-positive` qualifier.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::eigen::EigenPair;
use crate::error::{check_len, Error, Result};
use crate::linalg::norm_inf;
use crate::mesh::{Mesh, ScalarField};
use crate::model::{eval_f, Nonlinearity, PhiOperator, Site};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `β_n ≤ γ_n`
    BetaBelowGamma,
    /// `β_n → 0⁺`, `γ_n → 0⁺`
    SequencesVanish,
    /// `f(x, γ_n) ≤ 0` in Ω
    SourceNonpositiveAtGamma,
    /// `liminf f(x, β_n φ₁)/β_n = +∞`
    RateDiverges,
    /// `γ(κ+s)^(p−2) ≤ φ(s²) ≤ Γ(κ+s)^(p−2)`
    EllipticityBracket,
    /// `(γ−½)φ(s) ≤ φ′(s)s ≤ Γφ(s)`
    GrowthBracket,
    /// `β_n φ₁` is a discrete weak subsolution
    SubsolutionInequality,
    /// discrete weak form holds with zero residual
    WeakSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub n: Option<u32>,
    pub node: Option<usize>,
    pub s: Option<f64>,
    pub value: f64,
    pub margin: f64,
}

/// One evaluated point of a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub n: Option<u32>,
    pub node: Option<usize>,
    pub s: Option<f64>,
    pub value: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub qualifier: Option<String>,
    /// Worst margin found; nonnegative means satisfied.
    pub margin: f64,
    pub witness: Option<Witness>,
    /// `[first, last]` of the tested index or argument range.
    pub tested_range: [f64; 2],
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDigest {
    pub condition: Condition,
    pub verdict: Verdict,
    pub qualifier: Option<String>,
    pub margin: f64,
    pub witness_node: Option<usize>,
    pub witness_n: Option<u32>,
}

impl HypothesisReport {
    pub fn digest(&self) -> ReportDigest {
        ReportDigest {
            condition: self.condition,
            verdict: self.verdict,
            qualifier: self.qualifier.clone(),
            margin: self.margin,
            witness_node: self.witness.as_ref().and_then(|w| w.node),
            witness_n: self.witness.as_ref().and_then(|w| w.n),
        }
    }

    fn passed(condition: Condition, margin: f64, tested_range: [f64; 2], samples: Vec<Sample>) -> Self {
        HypothesisReport {
            condition,
            verdict: Verdict::Pass,
            qualifier: None,
            margin,
            witness: None,
            tested_range,
            samples,
        }
    }

    fn failed(condition: Condition, witness: Witness, tested_range: [f64; 2], samples: Vec<Sample>) -> Self {
        HypothesisReport {
            condition,
            verdict: Verdict::Fail,
            qualifier: None,
            margin: witness.margin,
            witness: Some(witness),
            tested_range,
            samples,
        }
    }
}

/// Thresholds for the sequence and rate checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationConfig {
    /// Rate at the top of the range must reach `divergence_factor · λ₁`.
    pub divergence_factor: f64,
    /// `β` and `γ` at the top of the range must be at most this fraction of
    /// their values at the bottom.
    pub decay_ratio: f64,
}

impl Default for OscillationConfig {
    fn default() -> Self {
        OscillationConfig {
            divergence_factor: 10.0,
            decay_ratio: 0.5,
        }
    }
}

/// Sign tolerance for `f(x, γ_n) ≤ 0`.
pub fn sign_tolerance(lambda1: f64) -> f64 {
    1e-12 + 1e-9 * lambda1
}

/// Sequence and sign conditions on the nonlinearity, one report each.
pub fn check_oscillation_hypotheses(
    mesh: &Mesh,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    n_range: RangeInclusive<u32>,
    cfg: &OscillationConfig,
    exec: Execution,
) -> Result<Vec<HypothesisReport>> {
    if n_range.is_empty() {
        return Err(Error::InvalidConfig("branch range is empty".into()));
    }
    eig.phi1.check_mesh(mesh)?;
    let ns: Vec<u32> = n_range.collect();
    let range = [ns[0] as f64, ns[ns.len() - 1] as f64];
    let betas: Vec<f64> = ns.iter().map(|&n| nl.beta(n)).collect();
    let gammas: Vec<f64> = ns.iter().map(|&n| nl.gamma(n)).collect();
    let sites: Vec<(usize, Site)> = mesh
        .interior_nodes()
        .map(|i| (i, Site::new(mesh.nodes()[i], eig.phi1.values()[i])))
        .collect();

    let mut reports = Vec::with_capacity(4);

    // β_n ≤ γ_n
    {
        let samples: Vec<Sample> = ns
            .iter()
            .enumerate()
            .map(|(k, &n)| Sample {
                n: Some(n),
                node: None,
                s: None,
                value: gammas[k] - betas[k],
                ok: betas[k] <= gammas[k],
            })
            .collect();
        reports.push(worst_of(Condition::BetaBelowGamma, samples, range));
    }

    // β_n, γ_n ↓ 0⁺
    {
        let mut samples = Vec::new();
        let mut worst: Option<Witness> = None;
        for k in 0..ns.len() {
            let positive = betas[k] > 0.0 && gammas[k] > 0.0;
            let decreasing = k == 0 || (betas[k] < betas[k - 1] && gammas[k] < gammas[k - 1]);
            let ok = positive && decreasing;
            let margin = if k == 0 {
                betas[k].min(gammas[k])
            } else {
                (betas[k - 1] - betas[k]).min(gammas[k - 1] - gammas[k]).min(betas[k]).min(gammas[k])
            };
            samples.push(Sample {
                n: Some(ns[k]),
                node: None,
                s: None,
                value: margin,
                ok,
            });
            if !ok && worst.is_none() {
                worst = Some(Witness {
                    n: Some(ns[k]),
                    node: None,
                    s: None,
                    value: betas[k].max(gammas[k]),
                    margin,
                });
            }
        }
        let last = ns.len() - 1;
        let shrink = (betas[last] / betas[0]).max(gammas[last] / gammas[0]);
        let report = if let Some(w) = worst {
            HypothesisReport::failed(Condition::SequencesVanish, w, range, samples)
        } else if ns.len() < 2 {
            HypothesisReport {
                verdict: Verdict::Inconclusive,
                ..HypothesisReport::passed(Condition::SequencesVanish, 0.0, range, samples)
            }
        } else if shrink > cfg.decay_ratio {
            HypothesisReport::failed(
                Condition::SequencesVanish,
                Witness {
                    n: Some(ns[last]),
                    node: None,
                    s: None,
                    value: shrink,
                    margin: cfg.decay_ratio - shrink,
                },
                range,
                samples,
            )
        } else {
            HypothesisReport {
                qualifier: Some("inconclusive-positive".into()),
                ..HypothesisReport::passed(Condition::SequencesVanish, cfg.decay_ratio - shrink, range, samples)
            }
        };
        reports.push(report);
    }

    // f(x, γ_n) ≤ 0 at every interior node
    {
        let tol = sign_tolerance(eig.lambda1);
        let per_n = par::map(exec, &ns, |&n| {
            let gamma = nl.gamma(n);
            sites
                .iter()
                .map(|&(i, site)| {
                    let value = eval_f(nl, site, gamma);
                    Sample {
                        n: Some(n),
                        node: Some(i),
                        s: None,
                        value,
                        ok: value <= tol,
                    }
                })
                .collect::<Vec<_>>()
        });
        let samples: Vec<Sample> = per_n.into_iter().flatten().collect();
        let (mut worst_value, mut worst_at) = (f64::NEG_INFINITY, None);
        for (k, s) in samples.iter().enumerate() {
            if s.value > worst_value {
                worst_value = s.value;
                worst_at = Some(k);
            }
        }
        let margin = tol - worst_value;
        let report = match worst_at {
            Some(k) if !samples[k].ok => HypothesisReport::failed(
                Condition::SourceNonpositiveAtGamma,
                Witness {
                    n: samples[k].n,
                    node: samples[k].node,
                    s: None,
                    value: worst_value,
                    margin,
                },
                range,
                samples,
            ),
            _ => HypothesisReport::passed(Condition::SourceNonpositiveAtGamma, margin, range, samples),
        };
        reports.push(report);
    }

    // min_x f(x, β_n φ₁)/β_n increasing and large
    {
        let rates = par::map(exec, &ns, |&n| {
            let beta = nl.beta(n);
            sites
                .iter()
                .map(|&(i, site)| (i, eval_f(nl, site, beta * site.phi1) / beta))
                .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
        });
        let threshold = cfg.divergence_factor * eig.lambda1;
        let mut samples = Vec::with_capacity(ns.len());
        let mut failure: Option<Witness> = None;
        for (k, &(node, rate)) in rates.iter().enumerate() {
            let increasing = k == 0 || rate > rates[k - 1].1;
            let ok = increasing && rate.is_finite();
            samples.push(Sample {
                n: Some(ns[k]),
                node: Some(node),
                s: None,
                value: rate,
                ok,
            });
            if !ok && failure.is_none() {
                failure = Some(Witness {
                    n: Some(ns[k]),
                    node: Some(node),
                    s: None,
                    value: rate,
                    margin: if k == 0 { rate } else { rate - rates[k - 1].1 },
                });
            }
        }
        let (top_node, top_rate) = rates[rates.len() - 1];
        if failure.is_none() && !(top_rate >= threshold) {
            failure = Some(Witness {
                n: Some(ns[ns.len() - 1]),
                node: Some(top_node),
                s: None,
                value: top_rate,
                margin: top_rate - threshold,
            });
        }
        let report = match failure {
            Some(w) => HypothesisReport::failed(Condition::RateDiverges, w, range, samples),
            None if ns.len() < 2 => HypothesisReport {
                verdict: Verdict::Inconclusive,
                ..HypothesisReport::passed(Condition::RateDiverges, top_rate - threshold, range, samples)
            },
            None => HypothesisReport {
                qualifier: Some("inconclusive-positive".into()),
                ..HypothesisReport::passed(Condition::RateDiverges, top_rate - threshold, range, samples)
            },
        };
        reports.push(report);
    }

    Ok(reports)
}

fn worst_of(condition: Condition, samples: Vec<Sample>, range: [f64; 2]) -> HypothesisReport {
    let worst = samples
        .iter()
        .enumerate()
        .fold((usize::MAX, f64::INFINITY), |acc, (k, s)| if s.value < acc.1 { (k, s.value) } else { acc });
    match samples.iter().position(|s| !s.ok) {
        Some(_) => {
            let w = &samples[worst.0];
            let witness = Witness {
                n: w.n,
                node: w.node,
                s: w.s,
                value: w.value,
                margin: w.value,
            };
            HypothesisReport::failed(condition, witness, range, samples)
        }
        None => HypothesisReport::passed(condition, worst.1, range, samples),
    }
}

/// `count` log-spaced points between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// Relative slack for bracket comparisons.
const BRACKET_TOL: f64 = 1e-12;

/// Ellipticity and growth brackets of `op` with its declared constants.
pub fn check_leray_lions(op: &dyn PhiOperator, s_grid: &[f64]) -> Vec<HypothesisReport> {
    let c = op.constants();
    let valid = !s_grid.is_empty() && s_grid.iter().all(|s| *s > 0.0 && s.is_finite());
    let range = if s_grid.is_empty() {
        [0.0, 0.0]
    } else {
        [s_grid[0], s_grid[s_grid.len() - 1]]
    };
    if !valid {
        return [Condition::EllipticityBracket, Condition::GrowthBracket]
            .into_iter()
            .map(|condition| HypothesisReport {
                condition,
                verdict: Verdict::Inconclusive,
                qualifier: Some("grid must be nonempty and strictly positive".into()),
                margin: f64::NAN,
                witness: None,
                tested_range: range,
                samples: Vec::new(),
            })
            .collect();
    }

    let ellipticity: Vec<Sample> = s_grid
        .iter()
        .map(|&s| {
            let envelope = (c.kappa + s).powf(c.p - 2.0);
            let value = op.phi(s * s);
            let margin = ((value - c.gamma * envelope) / envelope).min((c.big_gamma * envelope - value) / envelope);
            Sample {
                n: None,
                node: None,
                s: Some(s),
                value: margin,
                ok: margin >= -BRACKET_TOL,
            }
        })
        .collect();
    let growth: Vec<Sample> = s_grid
        .iter()
        .map(|&s| {
            let phi = op.phi(s);
            let scale = if phi > 0.0 { phi } else { 1.0 };
            let middle = op.phi_prime(s) * s;
            let margin = ((middle - (c.gamma - 0.5) * phi) / scale).min((c.big_gamma * phi - middle) / scale);
            Sample {
                n: None,
                node: None,
                s: Some(s),
                value: margin,
                ok: margin >= -BRACKET_TOL,
            }
        })
        .collect();
    vec![
        worst_of(Condition::EllipticityBracket, ellipticity, range),
        worst_of(Condition::GrowthBracket, growth, range),
    ]
}

/// `Σ_e |e| φ(|∇u|²) ∇u·∇w − Σ_i m_i f(x_i, u_i) w_i` for a Dirichlet-zero `w`.
pub fn weak_form_action(
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    u: &ScalarField,
    w: &ScalarField,
) -> Result<f64> {
    let r = residual_vector(mesh, op, nl, eig, u.values())?;
    w.check_mesh(mesh)?;
    Ok(mesh
        .interior_nodes()
        .map(|i| r[i] * w.values()[i])
        .sum())
}

/// Weak residual tested against every interior hat function.
fn residual_vector(
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    u: &[f64],
) -> Result<Vec<f64>> {
    check_len(mesh.node_count(), u.len())?;
    eig.phi1.check_mesh(mesh)?;
    let weights: Vec<f64> = (0..mesh.element_count())
        .map(|e| {
            let g = mesh.element_gradient(e, u);
            op.phi(g[0] * g[0] + g[1] * g[1])
        })
        .collect();
    let mut r = vec![0.0; u.len()];
    mesh.weighted_stiffness_apply(&weights, u, &mut r);
    let phi = eig.phi1.values();
    for i in 0..u.len() {
        if mesh.is_boundary(i) {
            r[i] = 0.0;
        } else {
            let site = Site::new(mesh.nodes()[i], phi[i]);
            r[i] -= mesh.lumped_mass()[i] * eval_f(nl, site, u[i]);
        }
    }
    Ok(r)
}

/// Tolerance on the subsolution residual.
pub const SUBSOLUTION_TOL: f64 = 1e-12;

/// `β_n φ₁` tested against every interior hat function: pass iff each
/// residual component is at most [`SUBSOLUTION_TOL`].
pub fn check_subsolution_inequality(
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    n: u32,
) -> Result<HypothesisReport> {
    let beta = nl.beta(n);
    let v: Vec<f64> = eig.phi1.values().iter().map(|p| beta * p).collect();
    let r = residual_vector(mesh, op, nl, eig, &v)?;
    let samples: Vec<Sample> = mesh
        .interior_nodes()
        .map(|i| Sample {
            n: Some(n),
            node: Some(i),
            s: None,
            value: r[i],
            ok: r[i] <= SUBSOLUTION_TOL,
        })
        .collect();
    let range = [n as f64, n as f64];
    let (k, worst) = samples
        .iter()
        .enumerate()
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, (k, s)| if s.value > acc.1 { (k, s.value) } else { acc });
    if worst > SUBSOLUTION_TOL {
        let witness = Witness {
            n: Some(n),
            node: samples[k].node,
            s: None,
            value: worst,
            margin: SUBSOLUTION_TOL - worst,
        };
        return Ok(HypothesisReport::failed(Condition::SubsolutionInequality, witness, range, samples));
    }
    let margin = if samples.is_empty() { SUBSOLUTION_TOL } else { SUBSOLUTION_TOL - worst };
    Ok(HypothesisReport::passed(Condition::SubsolutionInequality, margin, range, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakSolutionCheck {
    pub verdict: Verdict,
    pub residual: f64,
    pub worst_node: Option<usize>,
}

/// ∞-norm of the weak residual over interior hat functions.
pub fn verify_weak_solution(
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    u: &ScalarField,
    tol: f64,
) -> Result<WeakSolutionCheck> {
    u.check_mesh(mesh)?;
    for (i, &v) in u.values().iter().enumerate() {
        if mesh.is_boundary(i) && v != 0.0 {
            return Err(Error::Domain(format!("boundary node {i} carries {v:e}, expected 0")));
        }
        if !mesh.is_boundary(i) && !(v >= 0.0) {
            return Err(Error::Domain(format!("interior node {i} carries {v:e}, expected >= 0")));
        }
    }
    let r = residual_vector(mesh, op, nl, eig, u.values())?;
    let residual = norm_inf(&r);
    let worst_node = mesh
        .interior_nodes()
        .max_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()));
    Ok(WeakSolutionCheck {
        verdict: if residual <= tol { Verdict::Pass } else { Verdict::Fail },
        residual,
        worst_node,
    })
}

/// One line per report.
pub fn render_text(reports: &[HypothesisReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        let _ = write!(out, "{:<28} {:<12} margin {:+.3e}", format!("{:?}", r.condition), verdict, r.margin);
        if let Some(q) = &r.qualifier {
            let _ = write!(out, " ({q})");
        }
        if let Some(w) = &r.witness {
            let _ = write!(out, " witness");
            if let Some(n) = w.n {
                let _ = write!(out, " n={n}");
            }
            if let Some(node) = w.node {
                let _ = write!(out, " node={node}");
            }
            if let Some(s) = w.s {
                let _ = write!(out, " s={s:.3e}");
            }
            let _ = write!(out, " value={:.6e}", w.value);
        }
        out.push('\n');
    }
    out
}

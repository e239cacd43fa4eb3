//! Class centroids under the symmetric KL divergence.
//!
//! The centroid of a class is the distribution minimizing
//! `f(q) = sum_j skl(p_j, q)` over the probability simplex, where the `p_j`
//! are the smoothed class documents. `f` is strictly convex on the open
//! simplex, so the minimizer is unique. Two independent routes compute it:
//!
//! * [`solve_flow`]: explicit Euler integration of the upwind transport flow
//!   `d rho_i/dt = -sum_{j ~ i} g_ij (F_i - F_j)` on the vocabulary path
//!   graph, with `F = grad f` and `g_ij` the density of the higher-potential
//!   endpoint. Stationary points have constant `F`, which is exactly the
//!   simplex KKT condition.
//! * [`solve_dual`]: bisection on the Lagrange multiplier of the mass
//!   constraint, solving `N ln q_i - S_i / q_i = L_i - N - lambda` per
//!   coordinate (strictly increasing in `q_i`) and driving `sum q_i` to 1.
//!
//! The routes share no solver state and cross-validate each other in the
//! tests.

use crate::corpus::{smooth_normalize, CountVector, Distribution, SmoothingConfig};
use crate::divergence::skl;
use crate::{Error, Result};

/// One class's smoothed documents plus the raw counts they came from.
#[derive(Debug, Clone)]
pub struct ClassCorpus {
    label: String,
    docs: Vec<Distribution>,
    raw_counts: Vec<CountVector>,
}

impl ClassCorpus {
    pub fn new(
        label: impl Into<String>,
        docs: Vec<Distribution>,
        raw_counts: Vec<CountVector>,
    ) -> Result<Self> {
        let label = label.into();
        if docs.is_empty() {
            return Err(Error::InsufficientData(format!(
                "class {label:?} has no documents"
            )));
        }
        let dim = docs[0].len();
        for d in &docs {
            if d.len() != dim {
                return Err(Error::DimensionMismatch(d.len(), dim));
            }
        }
        if !raw_counts.is_empty() && raw_counts.len() != docs.len() {
            return Err(Error::InvalidConfig(format!(
                "class {label:?} has {} documents but {} count vectors",
                docs.len(),
                raw_counts.len()
            )));
        }
        for cv in &raw_counts {
            if cv.max_index() >= dim {
                return Err(Error::DimensionMismatch(cv.max_index() + 1, dim));
            }
        }
        Ok(ClassCorpus {
            label,
            docs,
            raw_counts,
        })
    }

    /// A corpus carrying only distributions; `mean_centroid` will refuse it,
    /// the SKL solvers do not need counts.
    pub fn from_distributions(label: impl Into<String>, docs: Vec<Distribution>) -> Result<Self> {
        ClassCorpus::new(label, docs, Vec::new())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn docs(&self) -> &[Distribution] {
        &self.docs
    }

    pub fn raw_counts(&self) -> &[CountVector] {
        &self.raw_counts
    }

    pub fn dim(&self) -> usize {
        self.docs[0].len()
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }
}

/// Baseline centroid: pool the raw class counts, then smooth exactly like a
/// single document.
pub fn mean_centroid(class: &ClassCorpus, smoothing: &SmoothingConfig) -> Result<Distribution> {
    if class.raw_counts.is_empty() {
        return Err(Error::InsufficientData(format!(
            "class {:?} carries no raw counts to pool",
            class.label
        )));
    }
    let mut pooled = vec![0u64; class.dim()];
    for cv in &class.raw_counts {
        for (i, c) in cv.entries() {
            pooled[i] += c;
        }
    }
    let pooled = CountVector::from_pairs(pooled.into_iter().enumerate())?;
    smooth_normalize(&pooled, class.dim(), smoothing)
}

/// Sufficient statistics of a class. With `S_i = sum_j p_i^j`,
/// `L_i = sum_j ln p_i^j` and `K = sum_{i,j} p_i^j ln p_i^j`, the energy
/// collapses to `f(q) = K - sum_i S_i ln q_i - sum_i q_i L_i + N sum_i q_i ln q_i`,
/// so solver iterations cost O(dim) instead of O(dim * docs).
struct Aggregates {
    n: f64,
    s: Vec<f64>,
    l: Vec<f64>,
    k: f64,
}

impl Aggregates {
    fn new(class: &ClassCorpus) -> Self {
        let dim = class.dim();
        let mut s = vec![0.0; dim];
        let mut l = vec![0.0; dim];
        let mut k = 0.0;
        for doc in &class.docs {
            for (i, &p) in doc.iter().enumerate() {
                let lp = p.ln();
                s[i] += p;
                l[i] += lp;
                k += p * lp;
            }
        }
        Aggregates {
            n: class.n_docs() as f64,
            s,
            l,
            k,
        }
    }

    fn dim(&self) -> usize {
        self.s.len()
    }

    fn energy(&self, rho: &[f64]) -> f64 {
        let mut acc = self.k;
        for ((&r, &s), &l) in rho.iter().zip(&self.s).zip(&self.l) {
            let lq = r.ln();
            acc += -s * lq - r * l + self.n * r * lq;
        }
        acc
    }

    fn gradient_into(&self, rho: &[f64], out: &mut [f64]) {
        for i in 0..self.s.len() {
            out[i] = -self.s[i] / rho[i] + self.n * rho[i].ln() + self.n - self.l[i];
        }
    }
}

/// Total symmetric KL divergence from every class document to `rho`.
pub fn skl_energy(rho: &Distribution, class: &ClassCorpus) -> Result<f64> {
    if rho.len() != class.dim() {
        return Err(Error::DimensionMismatch(rho.len(), class.dim()));
    }
    let mut acc = 0.0;
    for doc in &class.docs {
        acc += skl(doc, rho)?;
    }
    Ok(acc)
}

/// Gradient of [`skl_energy`] in `rho`:
/// `d f / d q_i = sum_j ( -p_i^j / q_i + ln q_i + 1 - ln p_i^j )`.
pub fn skl_energy_gradient(rho: &Distribution, class: &ClassCorpus) -> Result<Vec<f64>> {
    if rho.len() != class.dim() {
        return Err(Error::DimensionMismatch(rho.len(), class.dim()));
    }
    let agg = Aggregates::new(class);
    let mut out = vec![0.0; rho.len()];
    agg.gradient_into(rho, &mut out);
    Ok(out)
}

/// Diagonal of the Hessian, `sum_j ( p_i^j / q_i^2 + 1 / q_i )`; the
/// off-diagonal entries are zero, which makes the energy strictly convex on
/// the open simplex.
pub fn hessian_diag(rho: &Distribution, class: &ClassCorpus) -> Result<Vec<f64>> {
    if rho.len() != class.dim() {
        return Err(Error::DimensionMismatch(rho.len(), class.dim()));
    }
    let agg = Aggregates::new(class);
    Ok((0..rho.len())
        .map(|i| agg.s[i] / (rho[i] * rho[i]) + agg.n / rho[i])
        .collect())
}

/// Path graph over the vocabulary in index (lexicographic) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineGraph {
    n: usize,
}

impl LineGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("graph needs at least one node".into()));
        }
        Ok(LineGraph { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n.saturating_sub(1)).map(|i| (i, i + 1))
    }
}

/// Upwind transport term. For each edge the conductance is the density of
/// the higher-potential node (ties orient left to right, where the term is
/// zero anyway), so mass always flows downhill and vanishes only when the
/// potential is flat.
fn upwind_rhs(grad: &[f64], rho: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..rho.len().saturating_sub(1) {
        let df = grad[i] - grad[i + 1];
        let g = if df >= 0.0 { rho[i] } else { rho[i + 1] };
        let flux = g * df;
        out[i] -= flux;
        out[i + 1] += flux;
    }
}

/// `d rho_i/dt = -sum_{j ~ i} g_ij (F_i(rho) - F_j(rho))` on the path graph,
/// with `F` the energy gradient. Components sum to zero up to rounding.
pub fn flow_rhs(rho: &Distribution, class: &ClassCorpus, graph: &LineGraph) -> Result<Vec<f64>> {
    if graph.len() != rho.len() {
        return Err(Error::DimensionMismatch(graph.len(), rho.len()));
    }
    let grad = skl_energy_gradient(rho, class)?;
    let mut out = vec![0.0; rho.len()];
    upwind_rhs(&grad, rho, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Euler step to start from; adapts during the run.
    pub step_init: f64,
    /// Stop when the transport term's max-norm falls below this.
    pub tol_grad: f64,
    /// Stop when an accepted step decreases the energy by less than this.
    pub tol_energy: f64,
    pub max_iters: usize,
    /// Components may never drop below this floor.
    pub pos_floor: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            step_init: 1e-2,
            tol_grad: 1e-8,
            tol_energy: 1e-12,
            max_iters: 200_000,
            pos_floor: 1e-12,
        }
    }
}

impl FlowConfig {
    fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
            Ok(())
        };
        positive("step_init", self.step_init)?;
        positive("tol_grad", self.tol_grad)?;
        positive("tol_energy", self.tol_energy)?;
        positive("pos_floor", self.pos_floor)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.pos_floor >= 1.0 / dim as f64 {
            return Err(Error::InvalidConfig(format!(
                "pos_floor {} leaves no room on a {dim}-simplex",
                self.pos_floor
            )));
        }
        Ok(())
    }
}

/// One accepted Euler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStep {
    /// Energy after the step (post-renormalization).
    pub energy: f64,
    /// Max-norm of the transport term the step used.
    pub max_rhs: f64,
    /// Step size actually accepted.
    pub step: f64,
    /// Signed component sum of the transport term: mass injected per unit
    /// step, zero up to rounding.
    pub rhs_sum: f64,
    /// `|sum rho - 1|` after renormalization.
    pub mass_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    /// Accepted Euler steps (equals `steps.len()`; the dual solver reports
    /// outer bisection iterations here instead).
    pub iterations: usize,
    pub final_energy: f64,
    /// Per-step record; empty for the dual solver.
    pub steps: Vec<FlowStep>,
    /// Max-norm of the transport term at exit (for the dual solver: the
    /// mean-centered gradient residual).
    pub max_rhs_norm: f64,
    pub converged: bool,
}

impl FlowTrace {
    pub fn energy_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.energy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Flow,
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub centroid: Distribution,
    pub trace: FlowTrace,
    pub kind: SolverKind,
}

// Step-size policy around the energy guard: rejections halve, and an
// accepted trial is refined by a ladder search over {h * 2^k}, adopting the
// neighbor while it is strictly better. The adopted step is therefore
// within a factor two of the best step along the current direction, so the
// energy-decrease exit can only fire when the flow is genuinely flat; a
// plain doubling policy instead accepts overshooting steps whose near-zero
// decrease triggers that exit far from the minimizer.
const STEP_MAX: f64 = 1e3;
const MAX_HALVINGS: u32 = 60;

/// Integrates the upwind transport flow from the arithmetic mean of the
/// class documents. A step is accepted only if every component stays at or
/// above `pos_floor` and the energy of the renormalized candidate does not
/// increase; otherwise the step is halved, up to 60 times. Terminates when
/// the transport term's max-norm reaches `tol_grad` or an accepted step
/// gains less than `tol_energy`.
pub fn solve_flow(
    class: &ClassCorpus,
    graph: &LineGraph,
    cfg: &FlowConfig,
) -> Result<SolverReport> {
    let n = class.dim();
    if graph.len() != n {
        return Err(Error::DimensionMismatch(graph.len(), n));
    }
    cfg.validate(n)?;
    let agg = Aggregates::new(class);

    let mut rho: Vec<f64> = agg.s.iter().map(|s| s / agg.n).collect();
    let mass: f64 = rho.iter().sum();
    for v in &mut rho {
        *v /= mass;
    }

    let mut energy = agg.energy(&rho);
    let mut grad = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut steps: Vec<FlowStep> = Vec::new();
    let mut h = cfg.step_init;

    let finish = |rho: Vec<f64>, steps: Vec<FlowStep>, max_rhs: f64, energy: f64| SolverReport {
        centroid: Distribution::new_unchecked(rho),
        trace: FlowTrace {
            iterations: steps.len(),
            final_energy: energy,
            steps,
            max_rhs_norm: max_rhs,
            converged: true,
        },
        kind: SolverKind::Flow,
    };

    for iteration in 0..cfg.max_iters {
        agg.gradient_into(&rho, &mut grad);
        upwind_rhs(&grad, &rho, &mut rhs);
        let max_rhs = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_rhs <= cfg.tol_grad {
            return Ok(finish(rho, steps, max_rhs, energy));
        }
        let rhs_sum: f64 = rhs.iter().sum();

        // renormalized candidate and its energy, or None past the floor
        let try_step = |h: f64| -> Option<(Vec<f64>, f64)> {
            let mut cand: Vec<f64> = rho.iter().zip(&rhs).map(|(r, d)| r + h * d).collect();
            let mass: f64 = cand.iter().sum();
            if !mass.is_finite() || !cand.iter().all(|v| *v >= cfg.pos_floor) {
                return None;
            }
            for v in &mut cand {
                *v /= mass;
            }
            let e = agg.energy(&cand);
            Some((cand, e))
        };

        let mut halvings = 0u32;
        let mut accepted = loop {
            if let Some((cand, e)) = try_step(h) {
                if e <= energy {
                    break (cand, e);
                }
            }
            if halvings == MAX_HALVINGS {
                return Err(Error::Stalled {
                    iteration,
                    halvings,
                });
            }
            halvings += 1;
            h *= 0.5;
        };

        // ladder refinement: walk h up (or failing that, down) while the
        // neighboring step is strictly better
        let mut grew = false;
        while h < STEP_MAX {
            let h2 = (h * 2.0).min(STEP_MAX);
            match try_step(h2) {
                Some((cand, e)) if e < accepted.1 => {
                    accepted = (cand, e);
                    h = h2;
                    grew = true;
                }
                _ => break,
            }
        }
        if !grew {
            for _ in 0..MAX_HALVINGS {
                let h2 = h * 0.5;
                match try_step(h2) {
                    Some((cand, e)) if e < accepted.1 => {
                        accepted = (cand, e);
                        h = h2;
                    }
                    _ => break,
                }
            }
        }

        let (cand, e_new) = accepted;
        let mass_error = (cand.iter().sum::<f64>() - 1.0).abs();
        let decrease = energy - e_new;
        rho = cand;
        energy = e_new;
        steps.push(FlowStep {
            energy,
            max_rhs,
            step: h,
            rhs_sum,
            mass_error,
        });
        if decrease < cfg.tol_energy {
            agg.gradient_into(&rho, &mut grad);
            upwind_rhs(&grad, &rho, &mut rhs);
            let exit_rhs = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            return Ok(finish(rho, steps, exit_rhs, energy));
        }
    }
    Err(Error::MaxIters(cfg.max_iters))
}

const DUAL_Q_MIN: f64 = 1e-300;
const DUAL_Q_MAX: f64 = 1e6;
const DUAL_INNER_ITERS: u32 = 128;
const DUAL_OUTER_MAX: u32 = 256;
const DUAL_MAX_DOUBLINGS: u32 = 64;

/// Solves the simplex-constrained minimization through its Lagrangian dual:
/// for a trial multiplier the per-coordinate stationarity equation
/// `N ln q_i - S_i / q_i = L_i - N - lambda` has a unique root (the left
/// side is strictly increasing), and `sum_i q_i(lambda)` is strictly
/// decreasing, so an outer bisection drives the total mass to 1 within
/// `tol`. The bracket starts at `[-1, 1]` and expands geometrically.
pub fn solve_dual(class: &ClassCorpus, tol: f64) -> Result<SolverReport> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "dual tolerance must be positive and finite, got {tol}"
        )));
    }
    let agg = Aggregates::new(class);
    let n = agg.dim();

    let report = |q: Vec<f64>, iterations: usize, converged: bool| {
        let grad = {
            let mut g = vec![0.0; q.len()];
            agg.gradient_into(&q, &mut g);
            g
        };
        let mean = grad.iter().sum::<f64>() / q.len() as f64;
        let residual = grad.iter().fold(0.0_f64, |m, g| m.max((g - mean).abs()));
        let final_energy = agg.energy(&q);
        SolverReport {
            centroid: Distribution::new_unchecked(q),
            trace: FlowTrace {
                iterations,
                final_energy,
                steps: Vec::new(),
                max_rhs_norm: residual,
                converged,
            },
            kind: SolverKind::Dual,
        }
    };

    if n == 1 {
        return Ok(report(vec![1.0], 0, true));
    }

    let root = |i: usize, lam: f64| -> f64 {
        let target = agg.l[i] - agg.n - lam;
        let (mut lo, mut hi) = (DUAL_Q_MIN, DUAL_Q_MAX);
        for _ in 0..DUAL_INNER_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if agg.n * mid.ln() - agg.s[i] / mid < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let sum_at = |lam: f64| -> f64 { (0..n).map(|i| root(i, lam)).sum() };

    let mut lo = -1.0_f64;
    let mut hi = 1.0_f64;
    let mut doublings = 0u32;
    while sum_at(lo) < 1.0 {
        lo *= 2.0;
        doublings += 1;
        if doublings > DUAL_MAX_DOUBLINGS {
            return Err(Error::BracketFailure(doublings));
        }
    }
    while sum_at(hi) > 1.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > DUAL_MAX_DOUBLINGS {
            return Err(Error::BracketFailure(doublings));
        }
    }

    let mut iterations = 0usize;
    let mut lam = 0.5 * (lo + hi);
    let mut converged = false;
    while (iterations as u32) < DUAL_OUTER_MAX {
        lam = 0.5 * (lo + hi);
        if lam == lo || lam == hi {
            break;
        }
        let s = sum_at(lam);
        iterations += 1;
        if (s - 1.0).abs() <= tol {
            converged = true;
            break;
        }
        if s > 1.0 {
            lo = lam;
        } else {
            hi = lam;
        }
    }

    let mut q: Vec<f64> = (0..n).map(|i| root(i, lam)).collect();
    let mass: f64 = q.iter().sum();
    for v in &mut q {
        *v /= mass;
    }
    Ok(report(q, iterations, converged))
}

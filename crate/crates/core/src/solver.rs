//! Length minimization at fixed thickness.
//!
//! Each iteration collects the strut and MinRad constraints that are close
//! to their bounds, within the larger of `δ` and a small anticipation
//! margin, solves a nonnegative least-squares problem for their Lagrange
//! multipliers, and moves along the negated length gradient minus
//! the constraint reactions. After every trial move a sequence of
//! linearized projections pushes violated constraints back to their bounds,
//! and the move is accepted only if the corrected polygon is strictly shorter.

use std::collections::HashMap;

use crate::error::SolverError;
use crate::geom::{minrad_formula, total_length, vertex_geometry, PolyLink, Vec3};
use crate::gradients::{length_gradient, minrad_branch_gradient_sparse, strut_gradient_sparse, GradientField, SparseGradient};
use crate::nnls::{nnls_gram, GramSystem};
use crate::thickness::{enumerate_dcsd_within, thickness, Strut, ThicknessReport, DEFAULT_ACTIVE_TOL};

/// Restoration gives up after this many projection rounds.
pub const RESTORE_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct TightenConfig {
    /// Target thickness; 0.5 is a unit-diameter tube.
    pub tau: f64,
    /// Constraint is active when within this much of its bound.
    pub active_tol: f64,
    /// Smallest slack of the constraints fed to the direction solve.
    pub anticipation: f64,
    pub max_steps: usize,
    /// Largest vertex displacement tried first; `None` means a tenth of the
    /// average edge length.
    pub step_init: Option<f64>,
    pub step_shrink: f64,
    pub feas_tol: f64,
    /// Stop when the projected gradient norm falls to this.
    pub grad_tol: f64,
    /// Resample to equal edge lengths after this many accepted steps (0 disables).
    pub resample_every: usize,
    /// Stop once `plateau_window` accepted steps together shorten the link
    /// by less than `plateau_tol` times its length (a window of 0 disables).
    pub plateau_window: usize,
    pub plateau_tol: f64,
    /// Reserved for randomized tie-breaking; the current pipeline is fully
    /// deterministic and never draws from it.
    pub rng_seed: u64,
}

impl Default for TightenConfig {
    fn default() -> Self {
        TightenConfig::with_tau(0.5)
    }
}

impl TightenConfig {
    /// Defaults scaled to a target thickness.
    pub fn with_tau(tau: f64) -> Self {
        TightenConfig {
            tau,
            active_tol: DEFAULT_ACTIVE_TOL,
            anticipation: 2e-4 * tau,
            max_steps: 20_000,
            step_init: None,
            step_shrink: 0.5,
            feas_tol: 1e-9 * tau,
            grad_tol: 1e-4,
            resample_every: 50,
            plateau_window: 200,
            plateau_tol: 1e-6,
            rng_seed: 0x5eed,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::Config(what.to_string()));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return bad("step_shrink must lie in (0, 1)");
        }
        if !(self.anticipation >= 0.0 && self.active_tol > 0.0 && self.feas_tol > 0.0 && self.grad_tol > 0.0 && self.plateau_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if matches!(self.step_init, Some(s) if !(s > 0.0)) {
            return bad("step_init must be positive");
        }
        Ok(())
    }

    fn step_init_for(&self, link: &PolyLink) -> f64 {
        self.step_init.unwrap_or_else(|| 0.1 * link.average_edge_length())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    Strut(Strut),
    /// One branch of the MinRad bound at a vertex: `edge` is the incident
    /// edge whose length enters the radius.
    Kink { comp: usize, vert: usize, edge: usize },
}

impl ConstraintKind {
    fn key(&self) -> (u8, usize, usize, usize, usize) {
        match *self {
            ConstraintKind::Strut(s) => (0, s.a.comp, s.a.edge, s.b.comp, s.b.edge),
            ConstraintKind::Kink { comp, vert, edge } => (1, comp, vert, edge, 0),
        }
    }
}

/// `value ≥ 0` is the feasible side: chord − 2τ for struts, one MinRad branch minus τ for kinks.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub value: f64,
    /// Gradient of `value`.
    pub gradient: SparseGradient,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActiveSet {
    pub constraints: Vec<Constraint>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn struts(&self) -> Vec<Strut> {
        self.constraints
            .iter()
            .filter_map(|c| match c.kind {
                ConstraintKind::Strut(s) => Some(Strut { lambda: Some(c.multiplier), ..s }),
                ConstraintKind::Kink { .. } => None,
            })
            .collect()
    }

    pub fn n_struts(&self) -> usize {
        self.constraints.iter().filter(|c| matches!(c.kind, ConstraintKind::Strut(_))).count()
    }

    /// Number of distinct vertices with an active MinRad branch.
    pub fn n_kinks(&self) -> usize {
        count_kink_vertices(self.constraints.iter())
    }

    pub fn multipliers(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.multiplier).collect()
    }
}

/// Every strut with chord `≤ 2τ + slack` and every vertex with
/// MinRad `≤ τ + slack`, struts first, each group in index order.
pub fn constraints_within(link: &PolyLink, tau: f64, slack: f64) -> Result<Vec<Constraint>, SolverError> {
    let mut out = Vec::new();
    let mut struts = enumerate_dcsd_within(link, 2.0 * tau + slack);
    struts.sort_by_key(|s| s.key());
    for s in struts {
        out.push(Constraint {
            kind: ConstraintKind::Strut(s),
            value: s.chord - 2.0 * tau,
            gradient: strut_gradient_sparse(link, &s)?,
            multiplier: 0.0,
        });
    }
    for c in 0..link.num_components() {
        for v in 0..link.component_len(c) {
            let geo = vertex_geometry(link, c, v)?;
            if geo.minrad > tau + slack {
                continue;
            }
            let branches = [(link.prev(c, v), geo.prev_edge_len, false), (v, geo.next_edge_len, true)];
            for (edge, len, outgoing) in branches {
                let value = minrad_formula(len, geo.turning_angle) - tau;
                if value > slack {
                    continue;
                }
                if let Some(g) = minrad_branch_gradient_sparse(link, c, v, outgoing)? {
                    out.push(Constraint { kind: ConstraintKind::Kink { comp: c, vert: v, edge }, value, gradient: g, multiplier: 0.0 });
                }
            }
        }
    }
    Ok(out)
}

fn count_kink_vertices<'a>(constraints: impl Iterator<Item = &'a Constraint>) -> usize {
    let mut last = None;
    let mut n = 0;
    for c in constraints {
        if let ConstraintKind::Kink { comp, vert, .. } = c.kind {
            if last != Some((comp, vert)) {
                n += 1;
                last = Some((comp, vert));
            }
        }
    }
    n
}

fn describe(kind: &ConstraintKind) -> String {
    match kind {
        ConstraintKind::Strut(s) => {
            format!("strut ({},{})-({},{})", s.a.comp, s.a.edge, s.b.comp, s.b.edge)
        }
        ConstraintKind::Kink { comp, vert, .. } => format!("MinRad at ({comp},{vert})"),
    }
}

/// Active constraints of a feasible link.
pub fn collect_active(link: &PolyLink, cfg: &TightenConfig) -> Result<ActiveSet, SolverError> {
    collect_candidates(link, cfg, cfg.active_tol)
}

/// Constraints within `slack` of their bounds, failing if any is violated
/// by more than `feas_tol`.
pub fn collect_candidates(link: &PolyLink, cfg: &TightenConfig, slack: f64) -> Result<ActiveSet, SolverError> {
    let constraints = constraints_within(link, cfg.tau, slack)?;
    if let Some(worst) = constraints.iter().min_by(|a, b| a.value.total_cmp(&b.value)) {
        if worst.value < -cfg.feas_tol {
            return Err(SolverError::Infeasible(format!(
                "{} violates its bound by {:e}",
                describe(&worst.kind),
                -worst.value
            )));
        }
    }
    Ok(ActiveSet { constraints })
}

/// Lagrange multipliers of the active constraints against the descent
/// direction `neg_len_grad`, and the resulting projected direction.
///
/// The NNLS columns are the blocking directions `−∇c_k`: a move along
/// `neg_len_grad` that would decrease constraint `k` is opposed by it.
/// Stores the multipliers in `active` and returns them with
/// `neg_len_grad − Σ λ_k (−∇c_k)`.
pub fn solve_multipliers(
    active: &mut ActiveSet,
    neg_len_grad: &GradientField,
) -> Result<(Vec<f64>, GradientField), SolverError> {
    solve_multipliers_warm(active, neg_len_grad, None)
}

fn solve_multipliers_warm(
    active: &mut ActiveSet,
    neg_len_grad: &GradientField,
    warm: Option<&[bool]>,
) -> Result<(Vec<f64>, GradientField), SolverError> {
    let columns: Vec<SparseGradient> = active.constraints.iter().map(|c| c.gradient.negated()).collect();
    let sys = GramSystem::from_sparse(&columns, &neg_len_grad.0);
    let sol = nnls_gram(&sys, warm)?;
    let mut projected = neg_len_grad.clone();
    for ((col, &l), c) in columns.iter().zip(&sol.lambda).zip(active.constraints.iter_mut()) {
        c.multiplier = l;
        if l != 0.0 {
            col.add_to(&mut projected.0, -l);
        }
    }
    Ok((sol.lambda, projected))
}

/// Iterated projection onto the feasible set. Each iteration applies
/// the minimal-norm correction `Δ` satisfying the linearized constraints
/// `c_k + ∇c_k·Δ ≥ 0` of every constraint within `active_tol` of its bound;
/// its dual is an NNLS problem on the constraint Gram matrix. Iterates until
/// the worst violation is within `feas_tol`, failing early once the worst
/// violation stops shrinking.
pub fn restore_feasibility(link: &PolyLink, cfg: &TightenConfig) -> Result<PolyLink, SolverError> {
    let mut current = link.clone();
    let mut worst = f64::INFINITY;
    for it in 0..RESTORE_MAX_ITER {
        let near = constraints_within(&current, cfg.tau, cfg.active_tol)?;
        let prev = worst;
        worst = near.iter().map(|c| -c.value).fold(0.0, f64::max);
        if worst <= cfg.feas_tol {
            return Ok(current);
        }
        if worst >= prev {
            return Err(SolverError::RestoreFailed { iterations: it, violation: worst });
        }
        let grads: Vec<SparseGradient> = near.iter().map(|c| c.gradient.clone()).collect();
        let mut sys = GramSystem::from_sparse(&grads, &[]);
        for (k, c) in near.iter().enumerate() {
            sys.set_rhs(k, -c.value + 0.5 * cfg.feas_tol);
        }
        let violated: Vec<bool> = near.iter().map(|c| c.value < 0.0).collect();
        let mu = nnls_gram(&sys, Some(&violated))?.lambda;
        let mut pts = current.points().to_vec();
        for (g, m) in grads.iter().zip(&mu) {
            if *m != 0.0 {
                g.add_to(&mut pts, *m);
            }
        }
        current = current.with_points(pts)?;
    }
    Err(SolverError::RestoreFailed { iterations: RESTORE_MAX_ITER, violation: worst })
}

/// Redistributes each component's vertices uniformly by arclength along
/// the current polygon, keeping vertex 0 fixed.
pub fn equilateralize(link: &PolyLink) -> PolyLink {
    let comps = link
        .components()
        .map(|verts| {
            let n = verts.len();
            let seg: Vec<f64> = (0..n).map(|i| (verts[(i + 1) % n] - verts[i]).norm()).collect();
            let total: f64 = seg.iter().sum();
            let mut out = Vec::with_capacity(n);
            let mut edge = 0;
            let mut start = 0.0;
            for k in 0..n {
                let s = total * k as f64 / n as f64;
                while edge + 1 < n && start + seg[edge] <= s {
                    start += seg[edge];
                    edge += 1;
                }
                let u = ((s - start) / seg[edge]).clamp(0.0, 1.0);
                out.push(verts[edge] + (verts[(edge + 1) % n] - verts[edge]) * u);
            }
            out
        })
        .collect();
    PolyLink::new(comps).expect("resampling a valid link keeps it valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step_index: usize,
    pub length_before: f64,
    pub length_after: f64,
    pub pthi_before: f64,
    pub pthi_after: f64,
    pub n_active_struts: usize,
    pub n_active_kinks: usize,
    pub projected_grad_norm: f64,
    /// Largest vertex displacement of the accepted (or last tried) move.
    pub step_size: f64,
    pub accepted: bool,
}

/// Backtracking line search along `projected`. The trial move displaces
/// the farthest-moving vertex by `t`, starting from `t_start` and shrinking
/// by `cfg.step_shrink` until the restored polygon is strictly shorter.
pub fn step(
    link: &PolyLink,
    cfg: &TightenConfig,
    active: &ActiveSet,
    projected: &GradientField,
    t_start: f64,
) -> Result<(PolyLink, StepReport), SolverError> {
    let length_before = total_length(link);
    let pthi_before = thickness(link)?.pthi;
    let mut report = StepReport {
        step_index: 0,
        length_before,
        length_after: length_before,
        pthi_before,
        pthi_after: pthi_before,
        n_active_struts: active.n_struts(),
        n_active_kinks: active.n_kinks(),
        projected_grad_norm: projected.norm(),
        step_size: 0.0,
        accepted: false,
    };
    let dmax = projected.max_norm();
    if !(dmax > 0.0) {
        return Ok((link.clone(), report));
    }
    let floor = 1e-12 * cfg.step_init_for(link);
    let mut t = t_start;
    while t >= floor {
        report.step_size = t;
        if let Some(new) = try_move(link, cfg, projected, t / dmax) {
            let len = total_length(&new);
            if len < length_before {
                report.length_after = len;
                report.pthi_after = thickness(&new)?.pthi;
                report.accepted = true;
                return Ok((new, report));
            }
        }
        t *= cfg.step_shrink;
    }
    Ok((link.clone(), report))
}

fn try_move(link: &PolyLink, cfg: &TightenConfig, dir: &GradientField, scale: f64) -> Option<PolyLink> {
    let pts: Vec<Vec3> = link.points().iter().zip(&dir.0).map(|(p, d)| p + d * scale).collect();
    let trial = link.with_points(pts).ok()?;
    restore_feasibility(&trial, cfg).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Projected gradient norm fell to `grad_tol`.
    Converged,
    MaxSteps,
    /// The line search found no shorter feasible polygon.
    Stalled,
    /// Progress over the last `plateau_window` accepted steps fell below `plateau_tol`.
    Plateau,
}

#[derive(Debug, Clone)]
pub struct TightenResult {
    pub link: PolyLink,
    pub report: ThicknessReport,
    pub steps: Vec<StepReport>,
    /// Active set at the final configuration with solved multipliers.
    pub active: ActiveSet,
    pub projected_grad_norm: f64,
    pub stop: StopReason,
}

/// Strut and MinRad constraints active at the link's own thickness, with
/// multipliers from one NNLS solve against the negated length gradient.
pub fn contact_forces(link: &PolyLink, delta: f64) -> Result<(ThicknessReport, ActiveSet), SolverError> {
    let report = thickness(link)?;
    let cfg = TightenConfig { active_tol: delta, ..TightenConfig::with_tau(report.pthi) };
    cfg.validate()?;
    let mut active = collect_active(link, &cfg)?;
    let neg = length_gradient(link)?.scaled(-1.0);
    solve_multipliers(&mut active, &neg)?;
    Ok((report, active))
}

/// Uniformly rescales a link so its thickness equals `tau`.
pub fn rescale_to_thickness(link: &PolyLink, tau: f64) -> Result<PolyLink, SolverError> {
    let r = thickness(link)?;
    Ok(link.scaled(tau / r.pthi))
}

/// Minimizes length at thickness `cfg.tau`, starting from `seed` rescaled
/// to that thickness.
pub fn tighten(seed: &PolyLink, cfg: &TightenConfig) -> Result<TightenResult, SolverError> {
    tighten_with(seed, cfg, |_, _| {})
}

/// [`tighten`] with a callback invoked after every step with its report
/// and the link the step produced.
pub fn tighten_with(
    seed: &PolyLink,
    cfg: &TightenConfig,
    mut on_step: impl FnMut(&StepReport, &PolyLink),
) -> Result<TightenResult, SolverError> {
    cfg.validate()?;
    let mut link = rescale_to_thickness(seed, cfg.tau)?;
    let step_init = cfg.step_init_for(&link);
    let mut steps = Vec::new();
    let mut t_next = step_init;
    let mut accepted = 0usize;
    let mut warm: HashMap<(u8, usize, usize, usize, usize), bool> = HashMap::new();
    let mut stop = StopReason::MaxSteps;
    let mut last_norm = f64::INFINITY;
    let mut history = std::collections::VecDeque::with_capacity(cfg.plateau_window + 1);

    let solve = |link: &PolyLink, warm: &HashMap<_, bool>, slack: f64| -> Result<(ActiveSet, GradientField), SolverError> {
        let mut active = collect_candidates(link, cfg, slack)?;
        let neg = length_gradient(link)?.scaled(-1.0);
        let guess: Vec<bool> = active.constraints.iter().map(|c| *warm.get(&c.kind.key()).unwrap_or(&false)).collect();
        let (_, projected) = solve_multipliers_warm(&mut active, &neg, Some(&guess))?;
        Ok((active, projected))
    };

    for k in 0..cfg.max_steps {
        let t0 = t_next.min(step_init);
        let slack = cfg.active_tol.max(cfg.anticipation);
        let (mut active, mut projected) = solve(&link, &warm, slack)?;
        last_norm = projected.norm();
        if last_norm <= cfg.grad_tol {
            if slack > cfg.active_tol {
                (active, projected) = solve(&link, &warm, cfg.active_tol)?;
                last_norm = projected.norm();
            }
            if last_norm <= cfg.grad_tol {
                stop = StopReason::Converged;
                break;
            }
        }
        warm = active.constraints.iter().map(|c| (c.kind.key(), c.multiplier > 0.0)).collect();
        let (new, mut rep) = step(&link, cfg, &active, &projected, t0)?;
        rep.step_index = k;
        let within = |c: &&Constraint| c.value <= cfg.active_tol;
        rep.n_active_struts =
            active.constraints.iter().filter(within).filter(|c| matches!(c.kind, ConstraintKind::Strut(_))).count();
        rep.n_active_kinks = count_kink_vertices(active.constraints.iter().filter(within));
        let ok = rep.accepted;
        if !ok {
            on_step(&rep, &link);
            steps.push(rep);
            stop = StopReason::Stalled;
            break;
        }
        steps.push(rep);
        t_next = 2.0 * steps.last().map_or(step_init, |r| r.step_size);
        link = new;
        accepted += 1;
        if cfg.resample_every > 0 && accepted % cfg.resample_every == 0 {
            let near_converged = !active.is_empty() && last_norm < 10.0 * cfg.grad_tol;
            if !near_converged {
                if let Ok(eq) = restore_feasibility(&equilateralize(&link), cfg) {
                    link = eq;
                }
            }
        }
        on_step(&steps[steps.len() - 1], &link);
        if cfg.plateau_window > 0 {
            let len = total_length(&link);
            history.push_back(len);
            if history.len() > cfg.plateau_window {
                let old = history.pop_front().unwrap_or(len);
                if old - len < cfg.plateau_tol * len {
                    stop = StopReason::Plateau;
                    break;
                }
            }
        }
    }
    let (active, projected) = solve(&link, &warm, cfg.active_tol)?;
    if stop != StopReason::Stalled {
        last_norm = projected.norm();
    }
    let report = thickness(&link)?;
    Ok(TightenResult { link, report, steps, active, projected_grad_norm: last_norm, stop })
}

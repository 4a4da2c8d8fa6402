use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::PoseProblem;
use crate::error::{Error, Result};

/// Number of curvature pairs kept by the quasi-Newton model.
const MEMORY: usize = 8;
/// Sufficient-decrease constant of the line search.
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Window over which the objective decrease is measured for convergence.
const STALL_WINDOW: usize = 5;

/// Weights and stopping rules of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub lambda_d: f64,
    pub lambda_n: f64,
    pub lambda_p: f64,
    pub max_iterations: usize,
    /// Stop once the objective decreases by less than this over five
    /// iterations.
    pub tolerance: f64,
    /// DOFs held at their initial values.
    pub frozen: Vec<usize>,
    /// Record the objective at every iteration.
    pub trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            lambda_d: 1.0,
            lambda_n: 1.0,
            lambda_p: 10.0,
            max_iterations: 500,
            tolerance: 1e-8,
            frozen: Vec::new(),
            trace: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self, dofs: usize) -> Result<()> {
        for (name, v) in [("lambda_d", self.lambda_d), ("lambda_n", self.lambda_n), ("lambda_p", self.lambda_p)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidScene(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidScene(format!("tolerance {} must be non-negative", self.tolerance)));
        }
        if let Some(&j) = self.frozen.iter().find(|&&j| j >= dofs) {
            return Err(Error::DimensionMismatch {
                expected: dofs,
                got: j + 1,
            });
        }
        Ok(())
    }

    /// A copy with `frozen` replaced.
    pub fn freezing(&self, frozen: impl IntoIterator<Item = usize>) -> Self {
        SolveConfig {
            frozen: frozen.into_iter().collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    Cancelled,
}

/// Snapshot handed to a solve observer after every iteration.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub iteration: usize,
    pub objective: f64,
    pub theta: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// `(iteration, objective)` pairs, starting with the initial pose at
    /// iteration 0. Empty unless tracing was requested.
    pub trace: Vec<(usize, f64)>,
}

impl SolveResult {
    /// The trace as CSV with an `iteration,objective` header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective\n");
        for (i, f) in &self.trace {
            out.push_str(&format!("{i},{f:e}\n"));
        }
        out
    }
}

/// Minimizes the objective from `initial` within the problem bounds.
pub fn solve(problem: &PoseProblem, config: &SolveConfig, initial: &[f64]) -> Result<SolveResult> {
    solve_observed(problem, config, initial, |_| true)
}

/// Like [`solve`], calling `observer` after each iteration. Returning
/// `false` from the observer stops the solve with
/// [`SolveStatus::Cancelled`].
///
/// The method is a projected limited-memory BFGS: DOFs at a bound whose
/// gradient points outward are held fixed for the step, the search
/// direction comes from the quasi-Newton model on the remaining DOFs, and
/// steps are projected back into the box and accepted only on sufficient
/// decrease, so the objective never increases.
pub fn solve_observed(
    problem: &PoseProblem,
    config: &SolveConfig,
    initial: &[f64],
    mut observer: impl FnMut(&Progress) -> bool,
) -> Result<SolveResult> {
    let n = problem.dof_count();
    config.validate(n)?;
    problem.skeleton().check_pose(initial)?;
    let (lo, hi) = (problem.lower(), problem.upper());
    let mut movable = vec![true; n];
    for &j in &config.frozen {
        movable[j] = false;
    }
    let mut x = initial.to_vec();
    for i in (0..n).filter(|&i| movable[i]) {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
    let mut g = vec![0.0; n];
    let mut f = problem.evaluate(&x, config, Some(&mut g))?;
    let mut trace = Vec::new();
    if config.trace {
        trace.push((0, f));
    }
    let mut history = VecDeque::from([f]);
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut g_new = vec![0.0; n];
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        // DOFs that may move this iteration.
        let free: Vec<bool> = (0..n)
            .map(|i| movable[i] && !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        if f == 0.0 || (0..n).all(|i| !free[i] || g[i] == 0.0) {
            status = SolveStatus::Converged;
            break;
        }
        let mut step = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if memory.is_empty() {
                    break;
                }
                memory.clear();
            }
            let d = direction(&g, &free, &memory);
            let slope: f64 = (0..n).map(|i| g[i] * d[i]).sum();
            if !(slope < 0.0) {
                continue;
            }
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut alpha = if memory.is_empty() { (1.0 / dmax).min(1.0) } else { 1.0 };
            for _ in 0..MAX_BACKTRACKS {
                let mut trial = x.clone();
                for i in (0..n).filter(|&i| d[i] != 0.0) {
                    trial[i] = (x[i] + alpha * d[i]).clamp(lo[i], hi[i]);
                }
                if trial == x {
                    break;
                }
                let predicted: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
                match problem.evaluate(&trial, config, Some(&mut g_new)) {
                    Ok(ft) if ft <= f + ARMIJO * predicted && ft <= f => {
                        step = Some((trial, ft));
                        break;
                    }
                    Ok(_) | Err(Error::NonFinite) => alpha *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            if step.is_some() {
                break;
            }
        }
        let Some((x_next, f_next)) = step else {
            // No descent is possible from here.
            status = SolveStatus::Converged;
            break;
        };
        let s: Vec<f64> = (0..n).map(|i| x_next[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        let yy: f64 = y.iter().map(|a| a * a).sum();
        if sy > 1e-12 * (ss * yy).sqrt() && sy > 0.0 {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y));
        }
        x = x_next;
        f = f_next;
        std::mem::swap(&mut g, &mut g_new);
        iterations += 1;
        if config.trace {
            trace.push((iterations, f));
        }
        history.push_back(f);
        if history.len() > STALL_WINDOW + 1 {
            history.pop_front();
        }
        let progress = Progress {
            iteration: iterations,
            objective: f,
            theta: &x,
        };
        if !observer(&progress) {
            status = SolveStatus::Cancelled;
            break;
        }
        if history.len() == STALL_WINDOW + 1 && history[0] - f < config.tolerance {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok(SolveResult {
        theta: x,
        objective: f,
        iterations,
        status,
        trace,
    })
}

/// Two-loop recursion restricted to the free DOFs.
fn direction(g: &[f64], free: &[bool], memory: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let dot = |a: &[f64], b: &[f64]| -> f64 { (0..a.len()).filter(|&i| free[i]).map(|i| a[i] * b[i]).sum() };
    let mut q: Vec<f64> = g.iter().zip(free).map(|(&v, &f)| if f { v } else { 0.0 }).collect();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let sy = dot(s, y);
        if sy <= 0.0 {
            alphas.push(0.0);
            continue;
        }
        let a = dot(s, &q) / sy;
        for i in 0..q.len() {
            if free[i] {
                q[i] -= a * y[i];
            }
        }
        alphas.push(a);
    }
    if let Some((s, y)) = memory.back() {
        let (sy, yy) = (dot(s, y), dot(y, y));
        if sy > 0.0 && yy > 0.0 {
            q.iter_mut().for_each(|v| *v *= sy / yy);
        }
    }
    for ((s, y), a) in memory.iter().zip(alphas.iter().rev()) {
        let sy = dot(s, y);
        if sy <= 0.0 {
            continue;
        }
        let b = dot(y, &q) / sy;
        for i in 0..q.len() {
            if free[i] {
                q[i] += (a - b) * s[i];
            }
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Result of a sequence of solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedResult {
    pub theta: Vec<f64>,
    pub stages: Vec<SolveResult>,
}

/// Runs each stage in order, warm-starting from the previous stage.
pub fn staged_solve(problem: &PoseProblem, stages: &[SolveConfig], initial: &[f64]) -> Result<StagedResult> {
    let mut theta = initial.to_vec();
    let mut results = Vec::with_capacity(stages.len());
    for config in stages {
        let r = solve(problem, config, &theta)?;
        theta.clone_from(&r.theta);
        results.push(r);
    }
    Ok(StagedResult { theta, stages: results })
}

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use polysjt::dense::rel_diff;
use polysjt::{DenseMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::output::{num, opt, state_columns, Sink, Tabular};
use crate::problem::Problem;
use crate::{Classify, Failure, Outcome, ProblemArgs};

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Number of random states in [-1, 1]^n (20 when no --state is given).
    #[arg(long)]
    pub random: Option<usize>,
    /// Relative step of the central-difference oracle.
    #[arg(long, default_value_t = 1e-6)]
    pub fd_step: f64,
    /// JSON matrix used as the approximate Jacobian at every state.
    #[arg(long, conflicts_with = "approx_fd")]
    pub approx: Option<PathBuf>,
    /// Use a forward-difference Jacobian with this relative step as the approximation.
    #[arg(long)]
    pub approx_fd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Approximation {
    Exact,
    Matrix { path: String, matrix: DenseMatrix },
    ForwardDifference { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCheck {
    pub state: Vector,
    /// `max|J − J_fd| / max(1, max|J_fd|)`.
    pub fd_max_rel_error: f64,
    /// Scaled residuals of `m·N⁽ᵐ⁾(U) = J⁽ᵐ⁾(U)·U`; absent for non-polynomial trees.
    pub identity_quadratic: Option<f64>,
    pub identity_cubic: Option<f64>,
    /// `‖J·U − Ĵ·U‖₂ / ‖J·U‖₂`; absent where `J·U = 0`.
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub problem: Problem,
    pub seed: u64,
    pub fd_step: f64,
    pub approximation: Approximation,
    pub states: Vec<StateCheck>,
    pub max_fd_rel_error: f64,
    pub max_identity_residual: Option<f64>,
    pub max_deviation: Option<f64>,
}

impl Tabular for CheckReport {
    fn header(&self) -> Vec<String> {
        ["index", "fd_max_rel_error", "identity_quadratic", "identity_cubic", "deviation"]
            .into_iter()
            .map(String::from)
            .chain(state_columns("U", self.problem.dim()))
            .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let mut row = vec![
                    k.to_string(),
                    num(s.fd_max_rel_error),
                    opt(s.identity_quadratic),
                    opt(s.identity_cubic),
                    opt(s.deviation),
                ];
                row.extend(s.state.iter().copied().map(num));
                row
            })
            .collect()
    }
}

fn finite_difference(p: &Problem, u: &[f64], step: f64, central: bool) -> polysjt::Result<DenseMatrix> {
    let n = u.len();
    let f0 = if central { None } else { Some(p.eval(u)?) };
    let mut j = DenseMatrix::zeros(n, n);
    let mut x = u.to_vec();
    for c in 0..n {
        let h = step * (1.0 + u[c].abs());
        x[c] = u[c] + h;
        let fp = p.eval(&x)?;
        let (fm, width) = match &f0 {
            Some(f0) => (f0.clone(), h),
            None => {
                x[c] = u[c] - h;
                (p.eval(&x)?, 2.0 * h)
            }
        };
        x[c] = u[c];
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / width;
        }
    }
    Ok(j)
}

fn deviation(j: &DenseMatrix, j_hat: &DenseMatrix, u: &[f64]) -> polysjt::Result<Option<f64>> {
    let fbar = j.matvec(u)?;
    let d = fbar.norm_l2();
    if d == 0.0 {
        return Ok(None);
    }
    Ok(Some(fbar.sub(&j_hat.matvec(u)?).norm_l2() / d))
}

fn max_opt(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().reduce(f64::max)
}

pub fn run(a: &CheckArgs, seed: u64, sink: &Sink) -> Outcome {
    let problem = a.problem.load()?;
    let n = problem.dim();
    if !(a.fd_step > 0.0) || a.approx_fd.is_some_and(|s| !(s > 0.0)) {
        return Err(Failure::Usage(anyhow!("finite-difference steps must be positive")));
    }
    let approximation = match (&a.approx, a.approx_fd) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).usage()?;
            let matrix: DenseMatrix = serde_json::from_str(&text)
                .with_context(|| format!("{} is not a JSON matrix", path.display()))
                .usage()?;
            if matrix.shape() != (n, n) {
                return Err(Failure::Usage(anyhow!(
                    "approximate Jacobian is {:?}, the problem needs {n}x{n}",
                    matrix.shape()
                )));
            }
            Approximation::Matrix {
                path: path.display().to_string(),
                matrix,
            }
        }
        (None, Some(step)) => Approximation::ForwardDifference { step },
        (None, None) => Approximation::Exact,
    };

    let mut states = Vec::new();
    if let Some(s) = &a.problem.state {
        states.push(problem.state_or_start(Some(s)).usage()?);
    }
    let count = a.random.unwrap_or(if states.is_empty() { 20 } else { 0 });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    states.extend((0..count).map(|_| Vector::from_fn(n, |_| rng.gen_range(-1.0..1.0))));
    if states.is_empty() {
        return Err(Failure::Usage(anyhow!("no states to check")));
    }

    let poly = problem.poly();
    let mut checks = Vec::with_capacity(states.len());
    for u in states {
        let j = problem.jacobian(&u).numerical()?;
        let fd = finite_difference(&problem, &u, a.fd_step, true).numerical()?;
        let identity = match &poly {
            Some(s) => Some(s.degree_identity_check(&u).numerical()?.scaled(&u)),
            None => None,
        };
        let j_hat = match &approximation {
            Approximation::Exact => j.clone(),
            Approximation::Matrix { matrix, .. } => matrix.clone(),
            Approximation::ForwardDifference { step } => finite_difference(&problem, &u, *step, false).numerical()?,
        };
        checks.push(StateCheck {
            fd_max_rel_error: rel_diff(j.as_slice(), fd.as_slice()),
            identity_quadratic: identity.map(|r| r.quadratic),
            identity_cubic: identity.map(|r| r.cubic),
            deviation: deviation(&j, &j_hat, &u).numerical()?,
            state: u,
        });
    }
    let max_fd_rel_error = checks.iter().map(|c| c.fd_max_rel_error).fold(0.0, f64::max);
    if !max_fd_rel_error.is_finite() {
        return Err(Failure::Numerical(anyhow!("Jacobian evaluation produced non-finite values")));
    }
    let report = CheckReport {
        seed,
        fd_step: a.fd_step,
        approximation,
        max_fd_rel_error,
        max_identity_residual: max_opt(
            checks
                .iter()
                .flat_map(|c| [c.identity_quadratic, c.identity_cubic]),
        ),
        max_deviation: max_opt(checks.iter().map(|c| c.deviation)),
        states: checks,
        problem,
    };
    eprintln!(
        "{} states: max fd relative error {:e}, max identity residual {}, max deviation {}",
        report.states.len(),
        report.max_fd_rel_error,
        report.max_identity_residual.map_or("n/a".into(), |x| format!("{x:e}")),
        report.max_deviation.map_or("n/a".into(), |x| format!("{x:e}")),
    );
    sink.emit(&report).usage()?;
    Ok(true)
}

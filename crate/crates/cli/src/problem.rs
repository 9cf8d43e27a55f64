//! Problems the CLI operates on: built-in presets, PolySystem JSON,
//! expression-tree JSON, or a previously written report.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use polysjt::burgers::sine_initial_state;
use polysjt::hexpr::lower_to_poly;
use polysjt::integrate::RhsSource;
use polysjt::presets;
use polysjt::pseudo_jacobian::NonlinearRhs;
use polysjt::{h_eval, h_jacobian, DenseMatrix, HExpr, PolySystem, SemiDiscreteIvp, Vector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Poly { system: PolySystem },
    SemiDiscrete { ivp: SemiDiscreteIvp },
}

/// A model plus the state commands start from when none is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub model: Model,
    pub start: Vector,
}

#[derive(Debug, Clone, Copy)]
pub struct PresetParams {
    pub n: Option<usize>,
    pub reynolds: f64,
}

impl Problem {
    pub fn load(input: &str, params: PresetParams) -> anyhow::Result<Problem> {
        match input {
            "circle-cubic" => Ok(Problem {
                name: "circle-cubic".into(),
                model: Model::Poly { system: presets::circle_cubic() },
                start: presets::circle_cubic_start(),
            }),
            "burgers" => {
                let n = params.n.unwrap_or(32);
                Ok(Problem {
                    name: "burgers".into(),
                    model: Model::SemiDiscrete {
                        ivp: presets::burgers(n, params.reynolds)?,
                    },
                    start: sine_initial_state(n),
                })
            }
            path => Self::from_file(Path::new(path), params.n),
        }
    }

    fn from_file(path: &Path, n_hint: Option<usize>) -> anyhow::Result<Problem> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let value: Value =
            serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
        let name = path.display().to_string();
        let bad = |e: serde_json::Error| anyhow!("{}: {e}", path.display());
        if let Some(p) = value.get("problem") {
            return Problem::deserialize(p).map_err(bad);
        }
        if value.get("model").is_some() {
            return Problem::deserialize(&value).map_err(bad);
        }
        if value.get("op").is_some() {
            let expr = HExpr::deserialize(&value).map_err(bad)?;
            let n = match n_hint.or_else(|| infer_dim(&expr)) {
                Some(n) => n,
                None => bail!("{}: cannot infer the state dimension, pass --n", path.display()),
            };
            let ivp = SemiDiscreteIvp {
                n,
                rhs: expr,
                description: name.clone(),
                burgers: None,
            };
            return Ok(Problem {
                name,
                model: Model::SemiDiscrete { ivp },
                start: Vector::ones(n),
            });
        }
        if value.get("rhs").is_some() {
            let ivp = SemiDiscreteIvp::deserialize(&value).map_err(bad)?;
            let start = Vector::ones(ivp.n);
            return Ok(Problem {
                name,
                model: Model::SemiDiscrete { ivp },
                start,
            });
        }
        let system = PolySystem::deserialize(&value).map_err(bad)?;
        let start = Vector::ones(system.dim());
        Ok(Problem {
            name,
            model: Model::Poly { system },
            start,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            Model::Poly { system } => system.dim(),
            Model::SemiDiscrete { ivp } => ivp.n,
        }
    }

    /// `state` if given (checked against the dimension), the default start otherwise.
    pub fn state_or_start(&self, state: Option<&[f64]>) -> anyhow::Result<Vector> {
        match state {
            Some(s) if s.len() != self.dim() => {
                bail!("--state has {} entries, the problem has dimension {}", s.len(), self.dim())
            }
            Some(s) => Ok(Vector::new(s.to_vec())),
            None => Ok(self.start.clone()),
        }
    }

    /// The polynomial system itself, or the lowering of a polynomial tree.
    pub fn poly(&self) -> Option<PolySystem> {
        match &self.model {
            Model::Poly { system } => Some(system.clone()),
            Model::SemiDiscrete { ivp } => lower_to_poly(&ivp.rhs, ivp.n).ok(),
        }
    }

    pub fn eval(&self, u: &[f64]) -> polysjt::Result<Vector> {
        match &self.model {
            Model::Poly { system } => system.eval(u),
            Model::SemiDiscrete { ivp } => h_eval(&ivp.rhs, u),
        }
    }

    pub fn jacobian(&self, u: &[f64]) -> polysjt::Result<DenseMatrix> {
        match &self.model {
            Model::Poly { system } => system.jacobian(u),
            Model::SemiDiscrete { ivp } => h_jacobian(&ivp.rhs, u),
        }
    }

    /// `A(U)` with `rhs = A(U)·U + F`; the Jacobian for non-polynomial trees.
    pub fn linearized_matrix(&self, u: &[f64]) -> polysjt::Result<DenseMatrix> {
        if let Model::SemiDiscrete { ivp } = &self.model {
            if let Some(ops) = &ivp.burgers {
                return ops.linearized_matrix(u);
            }
        }
        match self.poly() {
            Some(s) => Ok(s.linearized_matrix(u)?.a),
            None => self.jacobian(u),
        }
    }

    pub fn nonlinear_rhs(&self) -> Option<NonlinearRhs> {
        if let Model::SemiDiscrete { ivp } = &self.model {
            if let Some(ops) = &ivp.burgers {
                return Some(NonlinearRhs::burgers(ops));
            }
        }
        self.poly().map(|s| NonlinearRhs::from_poly(&s))
    }

    pub fn rhs_source(&self) -> RhsSource {
        match &self.model {
            Model::Poly { system } => RhsSource::Poly(system.clone()),
            Model::SemiDiscrete { ivp } => RhsSource::semi_discrete(ivp.clone()),
        }
    }

    pub fn semi_discrete(&self) -> Option<&SemiDiscreteIvp> {
        match &self.model {
            Model::SemiDiscrete { ivp } => Some(ivp),
            Model::Poly { .. } => None,
        }
    }
}

fn infer_dim(e: &HExpr) -> Option<usize> {
    match e {
        HExpr::Linear { matrix, .. } => Some(matrix.cols()),
        HExpr::DiagScale { c, .. } => Some(c.len()),
        HExpr::State => None,
        HExpr::HPower { child, .. } | HExpr::HFunction { child, .. } => infer_dim(child),
        HExpr::HProduct { children } | HExpr::Sum { children, .. } => children.iter().find_map(infer_dim),
    }
}
